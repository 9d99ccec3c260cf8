"""Independent brute-force routes used to confirm derived values.

Nothing here calls the package's solvers: graph quantities are rebuilt from the
edge list and evaluated straight from their definitions, and optimizations are
done by grid search, enumeration or a generic scipy optimizer.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull


def laplacian(vertices, edges):
    lap = np.zeros((vertices, vertices), dtype=object)
    lap[:] = Fraction(0)
    for i, j, w in edges:
        w = Fraction(w)
        lap[i, i] += w
        lap[j, j] += w
        lap[i, j] -= w
        lap[j, i] -= w
    return lap


def graph_energy(lap, omega, phi):
    """E(phi) = (2 phi.omega - phi.L.phi) / (2 V)."""
    phi = np.asarray(phi, dtype=object)
    omega = np.asarray(omega, dtype=object)
    vol = sum(omega)
    return (2 * phi.dot(omega) - phi.dot(lap.dot(phi))) / (2 * vol)


def graph_ma(lap, omega, phi):
    omega = np.asarray(omega, dtype=object)
    return (omega - lap.dot(np.asarray(phi, dtype=object))) / sum(omega)


def g2_slice(s, c=0.0):
    """G2 potential with phi_0 - phi_1 = s and mean c."""
    return np.array([c + s / 2, c - s / 2])


def g2_energy_of_measure(a, omega=(1.0, 1.0), grid=200001):
    """sup over |phi_0 - phi_1| <= bound of E(phi) - int phi mu_a by grid search
    over s (the objective is invariant under constants)."""
    w0, w1 = omega
    # phi = (s, 0) is omega-psh iff -w1 <= s <= w0
    s = np.linspace(-w1, w0, grid)
    vol = w0 + w1
    # phi = (s, 0): E = (2 s w0 - s^2) / (2V), int phi mu = a s
    values = (2 * s * w0 - s * s) / (2 * vol) - a * s
    return float(values.max())


def g2_dd(a, b, radius=1.0, grid=200001):
    """sup over |s| <= 1, J(phi) <= radius of |int phi (mu_a - mu_b)| on G2."""
    s = np.linspace(-1, 1, grid)
    j = s * s / 4
    vals = np.abs(s * (a - b))
    return float(vals[j <= radius].max())


def g2_submean(omega=(1.0, 1.0), grid=200001):
    w0, w1 = omega
    s = np.linspace(-w1, w0, grid)
    mu0 = np.array([w0, w1]) / (w0 + w1)
    phis = np.stack([s, np.zeros_like(s)], axis=1)
    return float((phis.max(axis=1) - phis @ mu0).max())


def fraction_solve(a, b):
    """Gauss-Jordan elimination over the rationals; None if singular."""
    m = [list(map(Fraction, row)) + [Fraction(rhs)] for row, rhs in zip(a, b)]
    n = len(m)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c] / m[c][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[r][n] / m[r][r] for r in range(n)]


def graph_envelope_enum(lap, omega, f):
    """Greatest phi <= f with omega - L phi >= 0: the LCP solution, found by
    enumerating the contact set and keeping the certified candidate that is
    largest."""
    size = len(f)
    f = np.asarray(f, dtype=object)
    omega = np.asarray(omega, dtype=object)
    best = None
    for k in range(1, size + 1):
        for contact in itertools.combinations(range(size), k):
            free = [v for v in range(size) if v not in contact]
            phi = f.copy()
            if free:
                # (L phi)_v = omega_v on the free set
                a = [[lap[v, u] for u in free] for v in free]
                rhs = [omega[v] - sum(lap[v, u] * f[u] for u in contact) for v in free]
                sol = fraction_solve(a, rhs)
                if sol is None:
                    continue
                for idx, v in enumerate(free):
                    phi[v] = sol[idx]
            if all(phi[v] <= f[v] for v in range(size)) and all(
                    x >= 0 for x in omega - lap.dot(phi)):
                if best is None or all(p >= q for p, q in zip(phi, best)):
                    best = phi
    return best


def maximize_energy_slsqp(lap, omega, mu):
    """sup E(phi) - int phi mu over omega - L phi >= 0, by a generic optimizer."""
    lapf = np.asarray(lap, dtype=float)
    w = np.asarray(omega, dtype=float)
    m = np.asarray(mu, dtype=float)
    vol = w.sum()

    def neg(p):
        return -((2 * p @ w - p @ lapf @ p) / (2 * vol) - p @ m)

    cons = [{"type": "ineq", "fun": lambda p: w - lapf @ p},
            {"type": "eq", "fun": lambda p: p @ w / vol}]
    res = minimize(neg, np.zeros(len(w)), constraints=cons, method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 1000})
    return -res.fun


def toric1_subgradient_lengths(q, grid, phi):
    """Lengths of the subdifferential intervals of u = q x^2 / 2 + phi on the
    periodic lattice, by comparing every node with every node of three periods."""
    h = 1.0 / grid
    xs = np.arange(-grid, 2 * grid) * h
    vals = np.array([q * x * x / 2 + phi[k % grid] for k, x in zip(range(-grid, 2 * grid), xs)])
    lengths = []
    for i in range(grid):
        ii = i + grid
        left = max((vals[ii] - vals[j]) / (xs[ii] - xs[j]) for j in range(ii))
        right = min((vals[j] - vals[ii]) / (xs[j] - xs[ii]) for j in range(ii + 1, len(xs)))
        lengths.append(right - left)
    return np.array(lengths)


def toric1_envelope_brute(q, grid, f):
    """Largest phi <= f with q x^2/2 + phi convex on the periodic lattice: the
    lower convex hull of the lifted obstacle over three periods, found by
    checking every chord."""
    h = 1.0 / grid
    idx = np.arange(-grid, 2 * grid)
    xs = idx * h
    vals = np.array([q * x * x / 2 + f[k % grid] for k, x in zip(idx, xs)])
    out = np.empty(grid)
    for i in range(grid):
        ii = i + grid
        best = vals[ii]
        for j in range(ii + 1):
            for k in range(ii, len(xs)):
                if j == k:
                    continue
                t = (xs[ii] - xs[j]) / (xs[k] - xs[j])
                best = min(best, (1 - t) * vals[j] + t * vals[k])
        out[i] = best - q * xs[ii] ** 2 / 2
    return out


def polygon_area(points):
    if len(points) < 3:
        return 0.0
    return ConvexHull(points).volume


def minkowski_area(p, q):
    sums = np.array([a + b for a in p for b in q])
    return polygon_area(sums)


def mixed_area_brute(p, q):
    return (minkowski_area(p, q) - polygon_area(p) - polygon_area(q)) / 2
