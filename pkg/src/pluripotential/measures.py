"""Energy of measures and the metrics built from it.

J_omega(mu) = sup_phi E_omega(phi) - int phi mu is computed by a linear solve
when n = 1 (the supremum is attained at the potential with MA(phi) = mu) and by
constrained concave maximization otherwise, with a duality gap certificate:
since the objective is concave, its value at any psi is at most
value(phi) + int (psi - phi)(MA(phi) - mu), and the sup of the right side over
the (compact, normalized) cone slice is an LP.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize

from . import arith
from .core import (_linear_ddc_matrix, dirichlet_j, e_energy, j_functional, ma, mu_omega,
                   normalize, solve_linear_ma, submean_constant)
from .envelope import envelope
from .errors import IdentityViolation, SolverError
from .model import Model

TOL_DUAL = 1e-8
TOL_MA = 1e-6
MAX_ENUM_CONSTRAINTS = 10
MAX_CUTS = 200


@dataclass
class EnergySolution:
    mu: np.ndarray
    phi_star: np.ndarray
    j_value: object
    residual: object
    iterations: int


def check_probability(model: Model, mu):
    mu = model.asarray(mu)
    if model.exact:
        bad = np.any(mu < 0) or mu.sum() != 1
    else:
        bad = np.any(mu < -model.tol) or abs(float(mu.sum()) - 1.0) > model.tol
    if bad:
        raise IdentityViolation("measure is not a probability measure")
    return mu


def _normalized_cone(model, omega):
    """A phi <= b and the normalization row for the slice {phi in D, int phi mu_omega = 0}."""
    k = model.ddc_cone_matrix_float()
    c = arith.float_array(model.cone_values(omega))
    norm_row = arith.float_array(mu_omega(model, omega))
    return -k, c, norm_row


def _lp_sup(model, omega, g):
    """sup over the normalized slice of D_omega of int phi g (g of total mass 0)."""
    a, b, row = _normalized_cone(model, omega)
    res = linprog(-g, A_ub=a, b_ub=b, A_eq=row[None, :], b_eq=[0.0],
                  bounds=[(None, None)] * len(g), method="highs")
    if res.status != 0:
        raise SolverError(f"duality LP failed: {res.message}")
    return -res.fun, res.x


def _maximize_energy(model, omega, mu, x0=None, maxiter=3000):
    """argmax of E(phi) - int phi mu over the normalized cone slice (float)."""
    muf = arith.float_array(mu)
    a, b, row = _normalized_cone(model, omega)
    vol = float(model.volume(omega))

    def obj(p):
        return -(float(e_energy(model, omega, p)) - p @ muf)

    def grad(p):
        w = model.twist(omega, p)
        return -(arith.float_array(model.wedge([w] * model.n)) / vol - muf)

    cons = [{"type": "ineq", "fun": lambda p: b - a @ p, "jac": lambda p: -a},
            {"type": "eq", "fun": lambda p: np.array([row @ p]), "jac": lambda p: row[None, :]}]
    x0 = np.zeros(model.carrier_size) if x0 is None else np.asarray(x0, dtype=float)
    res = minimize(obj, x0, jac=grad, constraints=cons, method="SLSQP",
                   options={"maxiter": maxiter, "ftol": 1e-15})
    phi = res.x
    if np.min(b - a @ phi) < 0:
        phi = _scale_into_cone(a, b, phi)
    return phi, int(res.nit)


def _scale_into_cone(a, b, phi):
    """t phi for the largest t in [0, 1] with a (t phi) <= b (b >= 0)."""
    d = a @ phi
    over = d > b
    t = float(np.min(b[over] / d[over])) if np.any(over) else 1.0
    return phi * min(max(t, 0.0), 1.0)


def j_energy(model: Model, omega, mu, tol_dual=TOL_DUAL) -> EnergySolution:
    omega = model.asarray(omega)
    mu = check_probability(model, mu)
    model.checked_volume(omega)
    if model.n == 1:
        phi = solve_linear_ma(model, omega, mu)
        value = e_energy(model, omega, phi) - model.integrate(phi, mu)
        return EnergySolution(mu, phi, value, model.scalar(0), 1)
    exact_model, model = model, model.float_model
    omega, mu = arith.float_array(omega), arith.float_array(mu)
    phi, iters = _maximize_energy(model, omega, mu)
    gap = _duality_gap(model, omega, mu, phi)
    if gap > tol_dual:
        phi, more = _maximize_energy(model, omega, mu, x0=phi)
        iters += more
        gap = _duality_gap(model, omega, mu, phi)
    value = float(e_energy(model, omega, phi)) - float(phi @ arith.float_array(mu))
    if gap > tol_dual:
        raise SolverError("energy maximization stalled", residual=gap,
                          bracket=(value, value + gap))
    return EnergySolution(exact_model.asarray(mu), exact_model.asarray(phi),
                          exact_model.scalar(max(value, 0.0)), gap, iters)


def _duality_gap(model, omega, mu, phi):
    grad = arith.float_array(ma(model, omega, phi, check=False)) - arith.float_array(mu)
    sup, _ = _lp_sup(model, omega, grad)
    return max(sup - float(phi @ grad), 0.0)


def j_energy_relative(model: Model, omega, mu, psi):
    """J_omega(mu, psi) = J_omega(mu) + int psi mu - E_omega(psi)."""
    model.require_psh(omega, psi)
    sol = j_energy(model, omega, mu)
    return sol.j_value + model.integrate(model.asarray(psi), sol.mu) - e_energy(model, omega, psi)


def potential_of(model: Model, omega, mu):
    return j_energy(model, omega, mu).phi_star


def quasi_metric(model: Model, omega, mu, nu):
    """d_omega(mu, nu) = J_omega(phi_mu, phi_nu)."""
    phi = potential_of(model, omega, mu)
    psi = potential_of(model, omega, nu)
    value = dirichlet_j(model, omega, phi, psi, check=False)
    return value if model.exact else max(float(value), 0.0)


def j_plus(model: Model, omega, mu):
    """J_omega(mu) + T_omega."""
    return j_energy(model, omega, mu).j_value + submean_constant(model, omega)


def j_plus_potential(model: Model, omega, phi):
    return j_functional(model, omega, phi) + submean_constant(model, omega)


# -- the metric dd_omega ---------------------------------------------------------

@dataclass
class DdResult:
    value: object
    lower: float
    upper: float
    method: str
    maximizer: np.ndarray


def dd_metric(model: Model, omega, mu, nu, radius=1):
    return dd_metric_bracket(model, omega, mu, nu, radius).value


def dd_metric_bracket(model: Model, omega, mu, nu, radius=1, tol_dual=TOL_DUAL) -> DdResult:
    """sup over {phi in D_omega, J_omega(phi) <= radius} of |int phi (mu - nu)|."""
    omega = model.asarray(omega)
    g = check_probability(model, mu) - check_probability(model, nu)
    if not np.any(g != 0):
        z = model.zero_function()
        return DdResult(model.scalar(0), 0.0, 0.0, "trivial", z)
    if model.n == 1 and model.carrier_size <= MAX_ENUM_CONSTRAINTS:
        results = [_dd_enumerate(model, omega, s * g, radius) for s in (1, -1)]
    else:
        results = [_dd_cutting_planes(model, omega, s * g, radius, tol_dual) for s in (1, -1)]
    return max(results, key=lambda r: r.lower)


def _exact_sqrt(x):
    if isinstance(x, Fraction) and x >= 0:
        p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if p * p == x.numerator and q * q == x.denominator:
            return Fraction(p, q)
    return math.sqrt(float(x))


def _dd_enumerate(model, omega, g, radius):
    """n = 1: J is the quadratic form -phi.M.phi/(2V).  Every maximizer is the
    maximizer of <g, .> over the ellipsoid slice cut out by some set of active
    cone constraints, or a vertex of the cone slice; enumerate them all."""
    exact = model.exact
    m = _linear_ddc_matrix(model)
    vol = model.volume(omega)
    kmat = -m
    two_vr = 2 * vol * model.scalar(radius)
    a = -model.ddc_cone_matrix
    b = model.cone_values(omega)
    row = mu_omega(model, omega)
    nvar = model.carrier_size
    tol = 1e-9
    best = None
    af, bf = arith.float_array(a), arith.float_array(b)
    for size in range(nvar):
        for active in itertools.combinations(range(nvar), size):
            eq = np.vstack([row[None, :]] + [a[list(active)]] if active else [row[None, :]])
            rhs = np.concatenate([model.asarray([0]), b[list(active)]]) if active else model.asarray([0])
            cand = _ellipsoid_face(model, eq, rhs, kmat, two_vr, g, exact)
            if cand is None:
                continue
            value, phi = cand
            phif = arith.float_array(phi)
            if np.any(af @ phif > bf + tol * (1 + np.abs(bf))):
                continue
            if best is None or float(value) > float(best[0]) + 1e-12:
                best = (value, phi)
    if best is None:
        raise SolverError("no feasible candidate in dd enumeration")
    value, phi = best
    return DdResult(value, float(value), float(value), "enumeration", phi)


def _ellipsoid_face(model, eq, rhs, kmat, two_vr, g, exact):
    ef, rf = arith.float_array(eq), arith.float_array(rhs)
    rank = np.linalg.matrix_rank(ef)
    if rank < ef.shape[0]:
        return None
    nvar = ef.shape[1]
    if rank == nvar:
        phi = arith.solve(eq, rhs, exact)
        jq = phi.dot(kmat.dot(phi))
        if float(jq) > float(two_vr) * (1 + 1e-12):
            return None
        return g.dot(phi), phi
    try:
        p = _particular(eq, rhs, exact)
    except np.linalg.LinAlgError:
        return None
    zq = _exact_null_space(eq) if exact else null_space(ef)
    h_mat = zq.T.dot(kmat.dot(zq))
    h_vec = zq.T.dot(kmat.dot(p))
    r0 = p.dot(kmat.dot(p))
    s = zq.T.dot(g)
    try:
        hinv_h = arith.solve(h_mat, h_vec, exact)
        hinv_s = arith.solve(h_mat, s, exact)
    except (np.linalg.LinAlgError, ZeroDivisionError):
        return None
    rho = two_vr - r0 + h_vec.dot(hinv_h)
    if float(rho) < 0:
        return None
    q = s.dot(hinv_s)
    base = g.dot(p) - s.dot(hinv_h)
    if float(q) <= 0:
        phi = p - zq.dot(hinv_h)
        return base, phi
    root = _exact_sqrt(rho * q) if exact else math.sqrt(float(rho) * float(q))
    value = base + root
    scale = root / q if isinstance(root, Fraction) else root / float(q)
    if not isinstance(scale, Fraction) and exact:
        phi = arith.float_array(p) - arith.float_array(zq) @ arith.float_array(hinv_h) \
            + scale * (arith.float_array(zq) @ arith.float_array(hinv_s))
        return value, phi
    phi = p - zq.dot(hinv_h) + zq.dot(hinv_s) * scale
    return value, phi


def _particular(eq, rhs, exact):
    """A solution of eq.x = rhs, eq of full row rank (pivot columns only)."""
    m, nvar = eq.shape
    ef = arith.float_array(eq)
    if not exact:
        return np.linalg.lstsq(ef, arith.float_array(rhs), rcond=None)[0]
    cols = []
    for j in range(nvar):
        trial = cols + [j]
        if np.linalg.matrix_rank(ef[:, trial]) == len(trial):
            cols = trial
        if len(cols) == m:
            break
    if len(cols) < m:
        raise np.linalg.LinAlgError("numerically rank-deficient face")
    sol = arith.solve(eq[:, cols], rhs, exact)
    x = arith.zeros(nvar, exact)
    x[cols] = sol
    return x


def _exact_null_space(eq):
    """Rational basis of the null space via reduced row echelon form."""
    mat = [list(r) for r in eq]
    m, nvar = len(mat), len(mat[0])
    pivots = []
    r = 0
    for c in range(nvar):
        piv = next((i for i in range(r, m) if mat[i][c] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = Fraction(1) / mat[r][c]
        mat[r] = [v * inv for v in mat[r]]
        for i in range(m):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [vi - f * vr for vi, vr in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(nvar) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * nvar
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -mat[i][fc]
        basis.append(v)
    return np.array(basis, dtype=object).T


def _j_float(model, omega, phi):
    """J_omega(phi) in float arithmetic, without the psh check."""
    mu0 = arith.float_array(mu_omega(model, omega))
    return float(phi @ mu0) - float(e_energy(model, omega, phi))


def _dd_cutting_planes(model, omega, g, radius, tol_dual):
    """Maximize <g, phi> over {phi in D, J(phi) <= R}: SLSQP for a primal point,
    then Kelley cuts J(p) + <grad J(p), phi - p> <= R for an LP upper bound.
    The scaled primal iterate gives the lower bound."""
    model = model.float_model
    omega, gf = arith.float_array(omega), arith.float_array(g)
    a, b, row = _normalized_cone(model, omega)
    mu0 = arith.float_array(mu_omega(model, omega))
    vol = float(model.volume(omega))
    radius = float(radius)

    def jgrad(p):
        w = model.twist(omega, p)
        return mu0 - arith.float_array(model.wedge([w] * model.n)) / vol

    cons = [{"type": "ineq", "fun": lambda p: b - a @ p, "jac": lambda p: -a},
            {"type": "ineq", "fun": lambda p: np.array([radius - _j_float(model, omega, p)]),
             "jac": lambda p: -jgrad(p)[None, :]},
            {"type": "eq", "fun": lambda p: np.array([row @ p]), "jac": lambda p: row[None, :]}]
    res = minimize(lambda p: -(gf @ p), np.zeros(len(gf)), jac=lambda p: -gf,
                   constraints=cons, method="SLSQP", options={"maxiter": 2000, "ftol": 1e-15})
    best_phi, lower = _feasible_scale(model, omega, a, b, res.x, gf, radius)
    cuts_a, cuts_b = [], []

    def add_cut(p):
        gr = jgrad(p)
        cuts_a.append(gr)
        cuts_b.append(radius - _j_float(model, omega, p) + gr @ p)

    add_cut(res.x)
    upper = math.inf
    for it in range(MAX_CUTS):
        lp = linprog(-gf, A_ub=np.vstack([a] + [np.array(cuts_a)]),
                     b_ub=np.concatenate([b, cuts_b]), A_eq=row[None, :], b_eq=[0.0],
                     bounds=[(None, None)] * len(gf), method="highs")
        if lp.status != 0:
            raise SolverError(f"cutting-plane LP failed: {lp.message}", bracket=(lower, upper))
        upper = min(upper, -lp.fun)
        phi, val = _feasible_scale(model, omega, a, b, lp.x, gf, radius)
        if val > lower:
            best_phi, lower = phi, val
        if upper - lower <= tol_dual * (1 + abs(upper)):
            return DdResult(lower, lower, upper, "cutting-planes", best_phi)
        add_cut(lp.x)
    raise SolverError("cutting planes did not close the gap", residual=upper - lower,
                      bracket=(lower, upper))


def _feasible_scale(model, omega, a, b, phi, g, radius):
    """Largest t in [0, 1] with J(t phi) <= R (J(t phi) increases in t)."""
    if _j_float(model, omega, phi) <= radius and np.all(a @ phi <= b + 1e-12):
        return phi, float(g @ phi)
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        ok = _j_float(model, omega, mid * phi) <= radius and np.all(a @ (mid * phi) <= b + 1e-12)
        lo, hi = (mid, hi) if ok else (lo, mid)
    return lo * phi, float(g @ (lo * phi))


# -- envelopes, Legendre transform -------------------------------------------------

def e_tilde(model: Model, omega, f):
    """sup of E_omega over {phi in D_omega, phi <= f}, attained at the envelope."""
    env = envelope(model, omega, f)
    return e_energy(model, omega, env.phi)


def orthogonality_defect(model: Model, omega, f):
    return envelope(model, omega, f).defect


def legendre_value(model: Model, omega, f, nu):
    """J_omega(nu) + int f nu; its infimum over nu equals e_tilde(f)."""
    return j_energy(model, omega, nu).j_value + model.integrate(model.asarray(f), model.asarray(nu))


# -- maximizing sequences ----------------------------------------------------------

def maximizing_sequence(model: Model, omega, mu, k: int, seed_potential=None):
    """k potentials psi_i with J_omega(mu, psi_i) nonincreasing towards the
    residual of the solver, returned with MA(psi_i) and J_omega(mu, psi_i).

    The iterates run along the segment from the seed (default 0) to the
    computed maximizer; J_omega(mu, .) is convex, so it decreases along it.
    When n = 1 the maximizer is exact and reached at the second step."""
    if k < 1:
        raise ValueError("k must be at least 1")
    omega = model.asarray(omega)
    sol = j_energy(model, omega, mu)
    start = sol.phi_star if seed_potential is None else model.asarray(seed_potential)
    model.require_psh(omega, start)
    out = []
    for i in range(k):
        if model.n == 1:
            t = model.scalar(0 if (i == 0 and seed_potential is not None) else 1)
        else:
            t = 1.0 - 2.0 ** (-i) if seed_potential is not None else 1.0 - 2.0 ** (-(i + 1))
            if i == k - 1:
                t = 1.0
        psi = (1 - t) * start + t * sol.phi_star
        value = sol.j_value + model.integrate(psi, sol.mu) - e_energy(model, omega, psi)
        if not model.exact:
            value = max(float(value), 0.0)
        out.append((psi, ma(model, omega, psi, check=False), value))
    return out
