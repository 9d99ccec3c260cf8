"""Psh envelopes: the largest omega-psh test function below an obstacle f.

For n = 1 the constraint omega + dd^c phi >= 0 reads A phi <= b with A a
Z-matrix, so the admissible set is closed under maxima and the envelope solves
a linear complementarity problem.  Exact mode identifies the contact set by
projected Gauss-Seidel, then solves and certifies it in rationals, falling back
to enumerating contact sets.

For the n = 2 toric backend the fixed-triangulation cone is not closed under
maxima.  The lattice lower convex hull is returned when it is admissible (it is
then the largest element); otherwise the envelope is the maximizer of E_omega
over {phi <= f} within the cone.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from . import arith
from .core import e_energy, ma
from .errors import SolverError
from .model import Model

TOL_LCP = 1e-10
TOL_ENV = 1e-10
MAX_ENUM_VERTICES = 12


@dataclass
class EnvelopeResult:
    phi: np.ndarray
    defect: object
    method: str
    iterations: int


def envelope(model: Model, omega, f, max_iter=200000) -> EnvelopeResult:
    omega, f = model.asarray(omega), model.asarray(f)
    model.checked_volume(omega)
    if model.n == 1:
        phi, method, iters = _lcp_envelope(model, omega, f, max_iter)
    else:
        phi, method, iters = _toric2_envelope(model, omega, f)
    return EnvelopeResult(phi, orthogonality_defect_of(model, omega, f, phi), method, iters)


def orthogonality_defect_of(model, omega, f, env):
    return model.integrate(f - env, ma(model, omega, env, check=False))


# -- n = 1 ---------------------------------------------------------------------

def _constraints(model, omega):
    a = -model.ddc_cone_matrix
    b = model.cone_values(omega)
    return a, b


def _solve_contact(model, a, b, f, contact):
    n = model.carrier_size
    rows = []
    rhs = []
    for v in range(n):
        if contact[v]:
            row = arith.zeros(n, model.exact)
            row[v] = model.scalar(1)
            rows.append(row)
            rhs.append(f[v])
        else:
            rows.append(a[v])
            rhs.append(b[v])
    try:
        return arith.solve(np.array(rows), model.asarray(rhs), model.exact)
    except np.linalg.LinAlgError:
        return None


def _certified(model, a, b, f, phi, tol):
    if tol == 0:
        return bool(np.all(phi <= f) and np.all(a.dot(phi) <= b))
    return bool(np.all(phi <= f + tol) and np.all(a.dot(phi) <= b + tol))


def _lcp_envelope(model, omega, f, max_iter):
    from .kernels import psor

    a, b = _constraints(model, omega)
    af, bf, ff = (arith.float_array(x) for x in (a, b, f))
    scale = 1.0 + float(np.max(np.abs(ff)))
    phi_f, sweeps = psor(af, bf, ff, max_iter=max_iter, tol=TOL_LCP * 1e-3 * scale)
    tol = 0.0 if model.exact else TOL_LCP * scale
    contact = (ff - phi_f) <= 1e-7 * scale
    if contact.any():
        phi = _solve_contact(model, a, b, f, contact)
        if phi is not None and _certified(model, a, b, f, phi, tol):
            return phi, "psor+active-set", sweeps
    if model.carrier_size <= MAX_ENUM_VERTICES:
        n = model.carrier_size
        for size in range(1, n + 1):
            for subset in itertools.combinations(range(n), size):
                mask = np.zeros(n, dtype=bool)
                mask[list(subset)] = True
                phi = _solve_contact(model, a, b, f, mask)
                if phi is not None and _certified(model, a, b, f, phi, tol):
                    return phi, "enumeration", sweeps
    if model.exact:
        raise SolverError("no certified contact set found")
    resid = max(float(np.max(af @ phi_f - bf)), 0.0)
    if sweeps >= max_iter or resid > TOL_LCP * scale:
        raise SolverError("projected Gauss-Seidel did not converge", residual=resid)
    return model.asarray(phi_f), "psor", sweeps


# -- n = 2 toric -----------------------------------------------------------------

def lattice_lower_hull(model, f):
    """Values at the nodes of the lower convex hull of the lifted obstacle
    x -> Q(x)/2 + f(x) over a 3x3 block of periods, minus Q(x)/2."""
    q = np.array([[float(v) for v in row] for row in model.Q])
    x = model.node_coordinates()
    ff = arith.float_array(f)
    pts, vals = [], []
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            y = x + np.array([sx, sy])
            pts.append(y)
            vals.append(0.5 * np.einsum("ij,jk,ik->i", y, q, y) + ff)
    pts = np.vstack(pts)
    vals = np.concatenate(vals)
    hull = ConvexHull(np.column_stack([pts, vals]))
    eq = hull.equations[hull.equations[:, 2] < -1e-12]
    planes = -(x @ eq[:, :2].T + eq[:, 3]) / eq[:, 2]
    lower = planes.max(axis=1)
    return np.minimum(lower - 0.5 * np.einsum("ij,jk,ik->i", x, q, x), ff)


def _toric2_envelope(model, omega, f):
    g = lattice_lower_hull(model, f)
    if model.in_cone(model.twist(omega, g), tol=1e-9):
        return model.asarray(g), "lower-hull", 1
    return _max_energy_below(model, omega, f)


def _max_energy_below(model, omega, f):
    ff = arith.float_array(f)
    k = model.ddc_cone_matrix_float()
    c = arith.float_array(model.cone_values(omega))
    vol = float(model.volume(omega))

    def obj(phi):
        return -float(e_energy(model, omega, phi))

    def grad(phi):
        w = model.twist(omega, phi)
        return -arith.float_array(model.wedge([w] * model.n)) / vol

    cons = [{"type": "ineq", "fun": lambda p: ff - p, "jac": lambda p: -np.eye(len(p))},
            {"type": "ineq", "fun": lambda p: c + k @ p, "jac": lambda p: k}]
    x0 = np.full(model.carrier_size, ff.min())
    res = minimize(obj, x0, jac=grad, constraints=cons, method="SLSQP",
                   options={"maxiter": 2000, "ftol": 1e-14})
    phi = np.minimum(res.x, ff)
    if not model.in_cone(model.twist(omega, phi), tol=1e-8):
        raise SolverError("energy maximization left the cone", residual=float(np.min(c + k @ phi)))
    return model.asarray(phi), "max-energy", int(res.nit)
