"""Discrete toric backend on the periodic grid (Z/N)^n, n in {1, 2}.

A form is a pair (Q, psi): a symmetric matrix (its cohomology class) and a
periodic grid function.  It stands for the lifted function
x -> x^T Q x / 2 + psi(x); the form is nonnegative when that function is convex.

n = 1: the cell of a node is the subgradient interval, whose length is the
second difference, so the wedge is linear and exact.

n = 2: the lifted function is interpolated piecewise-linearly on the fixed
triangulation of the grid by the diagonals (1, 1).  The cell of a node is the
polygon of triangle gradients around it, which for convex lifts is the
subdifferential at that node.  Mixed cells are polarized signed shoelace areas.
This wedge is exactly symmetric and bilinear, and the cone (convexity across
every edge) is polyhedral.  Matrices with a positive off-diagonal entry are
handled by reflecting the second coordinate, so the triangulation matches Q.

Form layout: n = 1 -> [q, psi_0..psi_{N-1}];
n = 2 -> [q11, q12, q22, psi (row major, N*N entries)].
"""
from __future__ import annotations

from fractions import Fraction
from functools import cached_property

import numpy as np

from . import arith
from .errors import ConstructionInvalid
from .kernels import mixed_area
from .model import Model, check_construction

# Offsets around a node, in the order used by _local_values.
_OFFSETS = [(0, 0), (1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)]


class ToricModel(Model):
    backend = "toric"

    def __init__(self, n: int, grid: int, Q, exact: bool = False):
        if n not in (1, 2):
            raise ConstructionInvalid("toric backend supports n = 1 or 2")
        if grid < 3:
            raise ConstructionInvalid("grid resolution must be at least 3")
        self.n = n
        self.N = grid
        self.exact = exact
        self.carrier_size = grid ** n
        self.nq = 1 if n == 1 else 3
        self.form_dim = self.nq + self.carrier_size
        q = np.asarray(arith.exact_array(Q) if exact else arith.float_array(Q)).reshape(n, n)
        if n == 2 and q[0, 1] != q[1, 0]:
            raise ConstructionInvalid("Q must be symmetric")
        self.Q = q
        self.h = Fraction(1, grid) if exact else 1.0 / grid
        self.flip = n == 2 and q[0, 1] > 0
        if n == 2:
            qf = np.array([float(x) for x in q.ravel()]).reshape(2, 2)
            if np.linalg.eigvalsh(qf)[0] <= 0:
                raise ConstructionInvalid("Q must be positive definite")
        check_construction(self)

    def with_arithmetic(self, exact):
        q = [[arith.to_fraction(x) if exact else float(x) for x in row] for row in self.Q]
        return ToricModel(self.n, self.N, q, exact=exact)

    # -- forms ----------------------------------------------------------------
    def make_form(self, Q, psi=None):
        q = np.asarray(self.asarray(np.asarray(Q, dtype=object).ravel()))
        if self.n == 1:
            head = [q[0]]
        else:
            head = [q[0], q[1], q[3]] if len(q) == 4 else list(q)
        tail = self.zero_function() if psi is None else self.asarray(psi)
        return self.asarray(list(head) + list(tail))

    def split(self, form):
        form = self.asarray(form)
        return form[: self.nq], form[self.nq:]

    def reference_form(self):
        return self.make_form(self.Q)

    def cohomology_class(self, form):
        q, _ = self.split(form)
        if self.n == 1:
            return q.reshape(1, 1)
        return np.array([[q[0], q[1]], [q[1], q[2]]], dtype=q.dtype)

    def ddc(self, phi):
        # psi is only defined up to constants; store it with mean zero.
        phi = self.asarray(phi)
        return np.concatenate([arith.zeros(self.nq, self.exact), phi - phi.sum() / self.carrier_size])

    # -- n = 2 geometry -------------------------------------------------------
    def _canonical(self, form):
        """Coefficients (q11, q12, q22) and psi grid, reflected when needed."""
        q, psi = self.split(form)
        grid = psi.reshape(self.N, self.N)
        q11, q12, q22 = q
        if self.flip:
            grid = grid[:, (-np.arange(self.N)) % self.N]
            q12 = -q12
        return q11, q12, q22, grid

    def _uncanonical(self, values):
        grid = values.reshape(self.N, self.N, *values.shape[1:])
        if self.flip:
            grid = grid[:, (-np.arange(self.N)) % self.N]
        return grid.reshape(values.shape)

    @cached_property
    def _neighbour_index(self):
        """Flat indices of node + offset for each of the seven offsets."""
        i, j = np.meshgrid(np.arange(self.N), np.arange(self.N), indexing="ij")
        return [(((i + a) % self.N) * self.N + (j + b) % self.N).reshape(-1) for a, b in _OFFSETS]

    def _local_values(self, form):
        """Values of the lifted function at the seven offsets around every node,
        relative to the node (the linear part Qx cancels in areas)."""
        q11, q12, q22, grid = self._canonical(form)
        flat = grid.reshape(-1)
        h2 = self.h * self.h
        out = []
        for (a, b), idx in zip(_OFFSETS, self._neighbour_index):
            quad = (q11 * a * a + 2 * q12 * a * b + q22 * b * b) * h2 / 2
            out.append(flat[idx] + quad)
        return out

    def gradient_polygons(self, form):
        """Array (N*N, 6, 2) of triangle gradients around each node, ccw."""
        u00, u10, u11, u01, um0, umm, u0m = self._local_values(form)
        h = self.h
        gx = [u10 - u00, u11 - u01, u00 - um0, u00 - um0, u0m - umm, u10 - u00]
        gy = [u11 - u10, u01 - u00, u01 - u00, um0 - umm, u00 - u0m, u00 - u0m]
        poly = np.stack([np.stack(gx, axis=1), np.stack(gy, axis=1)], axis=2)
        return poly / h

    def wedge(self, forms):
        if len(forms) != self.n:
            raise ValueError(f"toric wedge takes exactly {self.n} forms")
        if self.n == 1:
            q, psi = self.split(forms[0])
            lap = np.roll(psi, -1) - 2 * psi + np.roll(psi, 1)
            return q[0] * self.h + lap / self.h
        p1 = self.gradient_polygons(forms[0])
        p2 = p1 if forms[1] is forms[0] else self.gradient_polygons(forms[1])
        return self._uncanonical(mixed_area(p1, p2))

    def cone_values(self, form):
        if self.n == 1:
            return self.wedge([form])
        u00, u10, u11, u01, um0, _, u0m = self._local_values(form)
        h2 = self.h * self.h
        horiz = u11 + u0m - u00 - u10
        vert = um0 + u11 - u00 - u01
        diag = u10 + u01 - u00 - u11
        vals = np.stack([horiz, vert, diag], axis=1) / h2
        return self._uncanonical(vals).reshape(-1)

    def cone_row_point(self, row):
        return row if self.n == 1 else row // 3

    # -- sampling -------------------------------------------------------------
    def node_coordinates(self):
        ticks = np.arange(self.N) / self.N
        if self.n == 1:
            return ticks.reshape(-1, 1)
        xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel()], axis=1)

    def smooth_function(self, coeffs):
        """Trigonometric polynomial sum c * cos/sin(2 pi k.x) from a coefficient list
        of (k, c_cos, c_sin)."""
        x = self.node_coordinates()
        vals = np.zeros(self.carrier_size)
        for k, cc, cs in coeffs:
            arg = 2 * np.pi * (x @ np.asarray(k, dtype=float))
            vals += cc * np.cos(arg) + cs * np.sin(arg)
        return vals

    def random_function(self, rng):
        freqs = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2), (2, 1)] if self.n == 2 else [(1,), (2,), (3,)]
        coeffs = [(k, rng.normal(), rng.normal()) for k in freqs]
        vals = self.smooth_function(coeffs) + 0.3 * rng.normal(size=self.carrier_size)
        if self.exact:
            return arith.exact_array([arith.rationalize(v, 1 << 12) for v in vals])
        return vals

    def random_cone_form(self, rng):
        if self.n == 1:
            q = rng.uniform(0.5, 2.0)
        else:
            a, b = rng.uniform(0.5, 2.0, size=2)
            off = rng.uniform(0.0, 0.4) * min(a, b)
            off = off if self.flip else -off
            q = np.array([[a, off], [off, b]])
        if self.exact:
            q = arith.exact_array([arith.rationalize(v, 64) for v in np.ravel(q)])
        theta = self.make_form(q)
        psi = self.random_function(rng)
        smax = self.max_psh_scale(theta, psi)
        frac = self._fraction(rng, 0, 1, 16)
        return theta + self.ddc(psi * (frac * smax if smax is not None else frac))

    def to_dict(self):
        fmt = arith.format_scalar if self.exact else float
        return {
            "backend": "toric",
            "toric": {"n": self.n, "grid": self.N, "Q": [[fmt(x) for x in row] for row in self.Q]},
            "arithmetic": "rational" if self.exact else "float",
        }


# -- refinement study ------------------------------------------------------------

def trig_ddc_pairing(Q, phi_coeffs, psi_coeffs):
    """Continuum value of int phi dd^c psi ^ Q (n = 2) or int phi psi'' (n = 1)
    on the unit torus, for trigonometric polynomials given as (k, c_cos, c_sin)."""
    q = np.asarray(Q, dtype=float)
    n = q.shape[0]
    total = 0.0
    for k, c, s in psi_coeffs:
        k = np.asarray(k, dtype=float)
        if n == 1:
            weight = k[0] ** 2
        else:
            weight = (k[0] ** 2 * q[1, 1] + k[1] ** 2 * q[0, 0] - 2 * k[0] * k[1] * q[0, 1]) / 2
        for k2, c2, s2 in phi_coeffs:
            if np.array_equal(np.asarray(k2, dtype=float), k):
                total += -(2 * np.pi) ** 2 * weight * (c * c2 + s * s2) / 2
    return total


def ibp_study(n, Q, grids, phi_coeffs, psi_coeffs):
    """Per grid size: the discrete asymmetry int phi dd^c psi ^ Q - int psi dd^c phi ^ Q
    and the distance of the discrete pairing to its continuum value."""
    exact = trig_ddc_pairing(Q, phi_coeffs, psi_coeffs)
    rows = []
    for grid in grids:
        m = ToricModel(n, grid, Q)
        phi, psi = m.smooth_function(phi_coeffs), m.smooth_function(psi_coeffs)
        rest = [m.reference_form()] * (n - 1)
        a = float(m.integrate(phi, m.wedge([m.ddc(psi)] + rest)))
        b = float(m.integrate(psi, m.wedge([m.ddc(phi)] + rest)))
        rows.append({"N": grid, "asymmetry": abs(a - b), "residual": float(abs(a - exact))})
    return rows
