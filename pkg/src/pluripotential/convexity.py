"""Convexity estimates for a homogeneous polynomial F(x) = x^{n+1} on a cone.

A structure supplies the symmetric (n+1)-linear map, the projection whose
fibers carry the estimates, cone membership and samplers.  delta(x, y) is the
Bregman divergence of F; the ensemble runner evaluates each estimate as a
ratio of its two sides over random admissible tuples and reports the worst.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import arith
from .core import energy_pairing
from .errors import ConeViolation, EmptyEnsemble, FiberError, IdentityViolation, ModelDegenerate
from .model import Model

INEQUALITIES = ("quasi_symmetry", "quasi_triangle", "quadratic", "uniform_convexity",
                "hold1", "hold2", "hold3", "pairing_hold", "distances")
FLOAT_ZERO = 1e-13


class MultiFormStructure:
    """Base class.  Elements of V are 1-d arrays."""

    n: int
    exact: bool

    def multilinear(self, xs):
        raise NotImplementedError

    def project(self, x):
        raise NotImplementedError

    def in_cone(self, x) -> bool:
        raise NotImplementedError

    def sample_fiber(self, rng):
        """A random element of P_theta for the fixed fiber theta."""
        raise NotImplementedError

    def sample_kernel(self, rng):
        """A random element of V_0."""
        raise NotImplementedError

    def sample_cone(self, rng):
        """A random element of P (any fiber)."""
        raise NotImplementedError

    @property
    def name(self) -> str:
        return type(self).__name__

    # -- derived maps -----------------------------------------------------------
    def power(self, x):
        return self.multilinear([x] * (self.n + 1))

    def derivative(self, x, v):
        """<F'(x), v> = (n+1) x^n . v."""
        return (self.n + 1) * self.multilinear([x] * self.n + [v])

    def same_fiber(self, x, y) -> bool:
        px, py = self.project(x), self.project(y)
        if self.exact:
            return bool(np.all(px == py))
        return bool(np.allclose(arith.float_array(px), arith.float_array(py), atol=1e-12))

    def zero(self, value):
        return value == 0 if self.exact else abs(float(value)) <= FLOAT_ZERO


def delta(structure: MultiFormStructure, x, y, check=True):
    """F(x) - F(y) - <F'(y), x - y>, checked against the expansion
    sum_j (j+1) (x-y)^2 . y^j . x^{n-1-j}.  In float mode the expansion is
    returned since it avoids cancellation when x and y are close."""
    if not structure.same_fiber(x, y):
        raise FiberError("delta needs both points in one fiber")
    expanded = delta_expanded(structure, x, y)
    if not check:
        return expanded
    fx, fy, dy = structure.power(x), structure.power(y), structure.derivative(y, x - y)
    value = fx - fy - dy
    if structure.exact:
        ok = value == expanded
    else:
        scale = abs(float(fx)) + abs(float(fy)) + abs(float(dy))
        ok = abs(float(value) - float(expanded)) <= 1e-10 * (1 + scale)
    if not ok:
        raise IdentityViolation(f"delta routes disagree: {value} vs {expanded}")
    return expanded


def delta_expanded(structure, x, y):
    n = structure.n
    diff = x - y
    total = 0
    for j in range(n):
        total = total + (j + 1) * structure.multilinear([diff, diff] + [y] * j + [x] * (n - 1 - j))
    return total


def d_small(structure: MultiFormStructure, x, y):
    """max_j (x-y)^2 . y^j . x^{n-1-j}."""
    if not structure.same_fiber(x, y):
        raise FiberError("d needs both points in one fiber")
    for p in (x, y):
        if not structure.in_cone(p):
            raise ConeViolation("point is not in the cone")
    n = structure.n
    diff = x - y
    return max(structure.multilinear([diff, diff] + [y] * j + [x] * (n - 1 - j)) for j in range(n))


def cauchy_schwarz_gap(structure, x, y, others):
    """(x^2.X)(y^2.X) - (x.y.X)^2 for x, y in V_0 and X = x_2...x_n in P; >= 0."""
    rest = list(others)
    xy = structure.multilinear([x, y] + rest)
    return structure.multilinear([x, x] + rest) * structure.multilinear([y, y] + rest) - xy * xy


def posdef_screen(structure, sample_count=50, seed=0):
    """Check x^2 . x_2 ... x_n >= 0 on sampled x in V_0, x_i in P."""
    rng = np.random.default_rng(seed)
    tol = 0 if structure.exact else 1e-10
    for _ in range(sample_count):
        x = structure.sample_kernel(rng)
        rest = [structure.sample_cone(rng) for _ in range(structure.n - 1)]
        val = structure.multilinear([x, x] + rest)
        if float(val) < -tol * (1 + float(np.max(np.abs(arith.float_array(x)))) ** 2):
            raise ModelDegenerate(f"positivity fails on the kernel: {val}")
    return True


# -- concrete structures ---------------------------------------------------------

class EnergyStructure(MultiFormStructure):
    """Minus the energy pairing on V = forms x functions, projected to forms;
    the cone is {(theta, phi): theta + dd^c phi >= 0}, the fiber is over omega."""

    def __init__(self, model: Model, omega=None):
        self.model = model
        self.n = model.n
        self.exact = model.exact
        self.omega = model.reference_form() if omega is None else model.asarray(omega)
        self.k = model.form_dim
        self.gram = self._gram() if self.n == 1 else None

    @property
    def name(self):
        return f"energy[{self.model.backend}]"

    def element(self, theta, phi):
        return np.concatenate([self.model.asarray(theta), self.model.asarray(phi)])

    def split(self, x):
        return x[:self.k], x[self.k:]

    def _gram(self):
        """Matrix of the bilinear form when n = 1."""
        dim = self.k + self.model.carrier_size
        basis = []
        for i in range(dim):
            e = arith.zeros(dim, self.exact)
            e[i] = self.model.scalar(1)
            basis.append(e)
        return np.array([[self.pairing([a, b]) for b in basis] for a in basis], dtype=object if self.exact else float)

    def pairing(self, xs):
        return -energy_pairing(self.model, [self.split(x) for x in xs])

    def multilinear(self, xs):
        if self.gram is not None:
            return xs[0].dot(self.gram.dot(xs[1]))
        return self.pairing(xs)

    def project(self, x):
        return x[:self.k]

    def in_cone(self, x):
        theta, phi = self.split(x)
        return self.model.in_cone(self.model.twist(theta, phi))

    def sample_fiber(self, rng):
        return self.element(self.omega, self.model.random_psh(rng, self.omega))

    def sample_kernel(self, rng):
        return self.element(self.model.zero_form(), self.model.random_function(rng))

    def sample_cone(self, rng):
        theta = self.model.random_cone_form(rng)
        return self.element(theta, self.model.random_psh(rng, theta))


class BilinearStructure(MultiFormStructure):
    """n = 1: F(x) = x^T B x on R^k with pi the first ``fiber_dims`` coordinates.
    The cone is the whole space; B must be positive semidefinite on the kernel."""

    n = 1

    def __init__(self, matrix, fiber_dims=1, base=None, exact=True):
        self.exact = exact
        self.B = arith.exact_array(matrix) if exact else arith.float_array(matrix)
        self.B = np.asarray(self.B).reshape(len(matrix), len(matrix))
        if np.any(self.B != self.B.T):
            raise ValueError("matrix must be symmetric")
        self.dim = self.B.shape[0]
        self.fiber_dims = fiber_dims
        base = [1] * fiber_dims if base is None else base
        self.base = arith.exact_array(base) if exact else arith.float_array(base)

    def _vec(self, x):
        return arith.exact_array(x) if self.exact else arith.float_array(x)

    def multilinear(self, xs):
        x, y = xs
        return self._vec(x).dot(self.B.dot(self._vec(y)))

    def project(self, x):
        return self._vec(x)[:self.fiber_dims]

    def in_cone(self, x):
        return True

    def _rand(self, rng, size):
        vals = rng.integers(-64, 65, size=size)
        return [Fraction(int(v), 16) if self.exact else v / 16 for v in vals]

    def sample_fiber(self, rng):
        return self._vec(list(self.base) + self._rand(rng, self.dim - self.fiber_dims))

    def sample_kernel(self, rng):
        return self._vec([0] * self.fiber_dims + self._rand(rng, self.dim - self.fiber_dims))

    def sample_cone(self, rng):
        return self._vec(self._rand(rng, self.dim))


def toy_structure(exact=True):
    """V = R^2, pi(a, b) = a, F(a, b) = b^2 + ab."""
    half = Fraction(1, 2) if exact else 0.5
    return BilinearStructure([[0, half], [half, 1]], fiber_dims=1, exact=exact)


# -- ensembles ----------------------------------------------------------------------

@dataclass
class EstimateReport:
    inequality_id: str
    worst_ratio: float
    witness: tuple
    ensemble_size: int
    skipped: int
    alpha_used: Fraction
    structure: str = ""
    n: int = 1

    def to_dict(self):
        return {
            "inequality_id": self.inequality_id,
            "worst_ratio": self.worst_ratio,
            "witness": [[arith.format_scalar(v) for v in w] for w in self.witness],
            "ensemble_size": self.ensemble_size,
            "skipped": self.skipped,
            "alpha_used": arith.format_scalar(self.alpha_used),
            "structure": self.structure,
            "n": self.n,
        }


def alpha(n: int) -> Fraction:
    return Fraction(1, 2 ** n)


def _pos(v):
    return max(float(v), 0.0)


def _sample_tuple(structure, rng, count):
    """count points of P_theta; about a third of the time later points are
    pulled towards the first to probe the small-distance regime."""
    pts = [structure.sample_fiber(rng) for _ in range(count)]
    if count > 1 and rng.random() < 0.35:
        s = Fraction(1, 2 ** int(rng.integers(1, 12)))
        if not structure.exact:
            s = float(s)
        j = int(rng.integers(1, count))
        pts[j] = (1 - s) * pts[0] + s * pts[j]
    return pts


def _m_const(structure, dl, points, base):
    return max(_pos(dl(p, base)) for p in points)


def estimate_ratio(structure, inequality_id, rng, check=False):
    """One sample: returns (ratio or None if degenerate, witness points)."""
    n = structure.n

    def dl(p, q):
        return delta(structure, p, q, check)

    a = float(alpha(n))
    z = structure.zero
    if inequality_id == "quasi_symmetry":
        x, y = _sample_tuple(structure, rng, 2)
        num, den = dl(x, y), dl(y, x)
        return (None if z(den) else _pos(num) / float(den)), (x, y)
    if inequality_id == "quasi_triangle":
        x, y, w = _sample_tuple(structure, rng, 3)
        den = dl(x, y) + dl(y, w)
        return (None if z(den) else _pos(dl(x, w)) / float(den)), (x, y, w)
    if inequality_id == "quadratic":
        x, y = _sample_tuple(structure, rng, 2)
        t = Fraction(1, 2 ** int(rng.integers(1, 11)))
        t = t if structure.exact else float(t)
        den = t * t * dl(x, y)
        num = dl(x, (1 - t) * x + t * y)
        return (None if z(den) else _pos(num) / float(den)), (x, y)
    if inequality_id == "uniform_convexity":
        x, y = _sample_tuple(structure, rng, 2)
        t = Fraction(int(rng.integers(1, 64)), 64)
        t = t if structure.exact else float(t)
        xt = (1 - t) * x + t * y
        # (1-t)F(x) + tF(y) - F(x_t), written without cancellation
        gap = (1 - t) * dl(x, xt) + t * dl(y, xt)
        num = t * (1 - t) * dl(x, y)
        return (None if z(gap) or z(num) else _pos(num) / float(gap)), (x, y)
    if inequality_id == "hold1":
        pts = _sample_tuple(structure, rng, 5 + max(n - 1, 0))
        x0, y0, x1, y1, base = pts[:5]
        zs = pts[5:]
        if rng.random() < 0.3:
            x1, y1 = x0, y0
        lhs = abs(float(structure.multilinear([x0 - y0, x1 - y1] + zs)))
        m = _m_const(structure, dl, [x0, y0, x1, y1] + zs, base)
        den = _pos(dl(x0, y0)) ** a * _pos(dl(x1, y1)) ** a * m ** (1 - 2 * a)
        return (None if den <= FLOAT_ZERO else lhs / den), tuple(pts)
    if inequality_id == "hold2":
        x0, y0, x1, y1, base = _sample_tuple(structure, rng, 5)
        lhs = abs(float(structure.derivative(x0, x1 - y1) - structure.derivative(y0, x1 - y1)))
        m = _m_const(structure, dl, [x0, y0, x1, y1], base)
        den = (_pos(dl(x0, y0)) ** 0.5 * _pos(dl(x1, y1)) ** a
               * m ** (0.5 - a))
        return (None if den <= FLOAT_ZERO else lhs / den), (x0, y0, x1, y1, base)
    if inequality_id == "hold3":
        x0, y0, x1, y1, base = _sample_tuple(structure, rng, 5)
        if rng.random() < 0.5:
            y0 = x0
        lhs = abs(float(dl(x0, x1) - dl(y0, y1)))
        m = _m_const(structure, dl, [x0, y0, x1, y1], base)
        big = max(_pos(dl(x0, y0)), _pos(dl(x1, y1)))
        den = big ** a * m ** (1 - a)
        return (None if den <= FLOAT_ZERO else lhs / den), (x0, y0, x1, y1, base)
    if inequality_id == "pairing_hold":
        x, y, w = _sample_tuple(structure, rng, 3)
        diff = x - y
        lhs = _pos(structure.multilinear([diff, diff] + [w] * (n - 1)))
        big = max(_pos(d_small(structure, x, w)), _pos(d_small(structure, y, w)))
        den = _pos(d_small(structure, x, y)) ** (2 * a) * big ** (1 - 2 * a)
        return (None if den <= FLOAT_ZERO else lhs / den), (x, y, w)
    if inequality_id == "distances":
        x, y = _sample_tuple(structure, rng, 2)
        dl, ds = dl(x, y), d_small(structure, x, y)
        if z(dl) or z(ds):
            return None, (x, y)
        r = float(dl) / float(ds)
        return max(r, 1.0 / r), (x, y)
    raise ValueError(f"unknown inequality {inequality_id!r}")


def run_estimate_ensemble(structure, inequality_id, sample_count, seed, check=False) -> EstimateReport:
    """Worst ratio over a seeded ensemble.  With ``check`` every delta is
    evaluated by both routes."""
    if inequality_id not in INEQUALITIES:
        raise ValueError(f"unknown inequality {inequality_id!r}")
    rng = np.random.default_rng(seed)
    worst, witness, skipped = -math.inf, (), 0
    for _ in range(sample_count):
        ratio, pts = estimate_ratio(structure, inequality_id, rng, check)
        if ratio is None:
            skipped += 1
            continue
        if ratio > worst:
            worst, witness = ratio, pts
    if skipped == sample_count:
        raise EmptyEnsemble(f"all {sample_count} samples were degenerate")
    return EstimateReport(inequality_id, worst, witness, sample_count, skipped,
                          alpha(structure.n), structure.name, structure.n)


def run_on_samples(structure, inequality_id, tuples):
    """Worst ratio over explicitly given tuples (used for degenerate checks)."""
    skipped, worst, witness = 0, -math.inf, ()
    for pts in tuples:
        if inequality_id == "quasi_symmetry":
            x, y = pts
            den = delta(structure, y, x)
            ratio = None if structure.zero(den) else _pos(delta(structure, x, y)) / float(den)
        elif inequality_id == "quasi_triangle":
            x, y, w = pts
            den = delta(structure, x, y) + delta(structure, y, w)
            ratio = None if structure.zero(den) else _pos(delta(structure, x, w)) / float(den)
        else:
            raise ValueError("explicit tuples supported for quasi_symmetry and quasi_triangle")
        if ratio is None:
            skipped += 1
        elif ratio > worst:
            worst, witness = ratio, pts
    if skipped == len(tuples):
        raise EmptyEnsemble(f"all {len(tuples)} samples were degenerate")
    return EstimateReport(inequality_id, worst, tuple(witness), len(tuples), skipped,
                          alpha(structure.n), structure.name, structure.n)


def hold1_slope(structure, x, y, zs=None, exponents=range(2, 14)):
    """Log-log slope of the hold1 left side against delta along y_eps -> x,
    with x0 = x1 = x, y0 = y1 = y_eps; must be at least 2 alpha."""
    zs = [x] * (structure.n - 1) if zs is None else zs
    logs_d, logs_l = [], []
    for k in exponents:
        eps = Fraction(1, 2 ** k) if structure.exact else 2.0 ** -k
        ye = x + eps * (y - x)
        diff = x - ye
        lhs = abs(float(structure.multilinear([diff, diff] + zs)))
        dl = _pos(delta(structure, x, ye, check=False))
        if lhs <= 0 or dl <= 0:
            continue
        logs_d.append(math.log(dl))
        logs_l.append(math.log(lhs))
    if len(logs_d) < 2:
        raise EmptyEnsemble("slope needs two nondegenerate scales")
    return float(np.polyfit(logs_d, logs_l, 1)[0])
