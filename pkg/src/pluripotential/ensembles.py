"""Seeded ensembles for the quantitative estimates and their frozen constants.

Every estimate "lhs <~ rhs" is sampled as the ratio lhs / rhs; the fixture
constant for a key (inequality | n | backend) is 1.05 times the worst ratio over
the reference ensembles, which cover two carrier sizes per backend.  Estimates
of the form A <= e^{O(delta)} B are recorded through the exponent
log(A / B) / delta.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import arith
from .coercivity import (SamplerSpec, check_scan_modulus, reference_path,
                         threshold_continuity_scan, uniform_functional)
from .convexity import EnergyStructure, run_estimate_ensemble
from .core import (dirichlet_j, energy_pairing, j_functional, ma, mixed_measure, mu_omega,
                   normalize, omega_norm, submean_constant, thompson_distance)
from .errors import PluriError
from .graph import g2, random_graph
from .measures import _dd_cutting_planes, _dd_enumerate, MAX_ENUM_CONSTRAINTS, dd_metric, j_energy
from .toric import ToricModel
from .twisted import j_twisted_value, nabla_e

HEADROOM = 1.05
FIXTURE_NAME = "estimate-constants.json"
CONE_INEQUALITIES = ("quasi_symmetry", "quasi_triangle", "quadratic", "uniform_convexity",
                     "hold1", "hold2", "hold3", "pairing_hold", "distances")


def alpha(n):
    return 2.0 ** -n


# -- reference models ------------------------------------------------------------------

def reference_models(backend, n):
    """Two carrier sizes per (backend, n), in float arithmetic."""
    if backend == "graph":
        return [g2(exact=False), random_graph(np.random.default_rng(11), 7, exact=False)]
    if n == 1:
        return [ToricModel(1, 8, [[1]]), ToricModel(1, 16, [[1]])]
    q = [[1.0, -0.25], [-0.25, 1.2]]
    return [ToricModel(2, 5, q), ToricModel(2, 7, q)]


BACKENDS = (("graph", 1), ("toric", 1), ("toric", 2))


# -- sampling context --------------------------------------------------------------------

class Context:
    def __init__(self, model, omega=None):
        self.model = model
        self.n = model.n
        self.omega = model.reference_form() if omega is None else model.asarray(omega)
        self.mu0 = mu_omega(model, self.omega)
        self._t = {}

    def submean(self, omega=None):
        omega = self.omega if omega is None else omega
        key = tuple(float(x) for x in omega)
        if key not in self._t:
            self._t[key] = float(submean_constant(self.model, omega))
        return self._t[key]

    def psh(self, rng, omega=None):
        omega = self.omega if omega is None else omega
        return normalize(self.model, omega, self.model.random_psh(rng, omega))

    def near(self, rng, phi, other):
        s = 2.0 ** -int(rng.integers(1, 12))
        return (1 - s) * phi + s * other

    def psh_tuple(self, rng, count):
        pts = [self.psh(rng) for _ in range(count)]
        if count > 1 and rng.random() < 0.35:
            j = int(rng.integers(1, count))
            pts[j] = self.near(rng, pts[0], pts[j])
        return pts

    def measure(self, phi, omega=None):
        omega = self.omega if omega is None else omega
        return ma(self.model, omega, phi, check=False)

    def j_of_potential(self, phi, omega=None):
        """J_omega(phi) = J_omega(0, phi)."""
        omega = self.omega if omega is None else omega
        return float(dirichlet_j(self.model, omega, self.model.zero_function(), phi, check=False))

    def j_measure_of_potential(self, phi, omega=None):
        """J_omega(MA(phi)) = J_omega(phi, 0)."""
        omega = self.omega if omega is None else omega
        return float(dirichlet_j(self.model, omega, phi, self.model.zero_function(), check=False))

    def dist(self, phi, psi, omega=None):
        """d_omega(MA(phi), MA(psi)) = J_omega(phi, psi)."""
        omega = self.omega if omega is None else omega
        return max(float(dirichlet_j(self.model, omega, phi, psi, check=False)), 0.0)

    def j_plus_measure(self, mu, omega=None):
        omega = self.omega if omega is None else omega
        return float(j_energy(self.model, omega, mu).j_value) + self.submean(omega)

    def commensurable(self, rng, max_delta=1.0):
        """A random form omega' with d_T(omega, omega') <= max_delta, and d_T."""
        m = self.model
        if m.backend == "graph":
            u = rng.uniform(-1, 1, size=m.carrier_size) * rng.uniform(0, max_delta)
            w2 = self.omega * np.exp(u)
        else:
            eta = m.random_cone_form(rng)
            s = rng.uniform(0.0, 0.5)
            w2 = (1 - s) * self.omega + s * eta
        d = float(thompson_distance(m, self.omega, w2))
        if d > max_delta:
            # shrink towards omega until the distance fits
            for _ in range(40):
                w2 = 0.5 * (self.omega + w2)
                d = float(thompson_distance(m, self.omega, w2))
                if d <= max_delta:
                    break
        return w2, d

    def dominating(self, rng, max_delta=2.0):
        """omega' with omega <= omega' <= e^delta omega; returns (omega', delta)."""
        m = self.model
        if m.backend == "graph":
            u = rng.uniform(0, 1, size=m.carrier_size) * rng.uniform(0, max_delta)
            return self.omega * np.exp(u), float(np.max(u))
        eta = m.random_cone_form(rng)
        scale = float(omega_norm(m, eta, self.omega))
        s = rng.uniform(0, math.exp(max_delta) - 1)
        return self.omega + (s / scale) * eta, math.log1p(s)

    def random_form(self, rng):
        m = self.model
        return m.random_cone_form(rng) - m.random_cone_form(rng)


# -- ratio samplers ----------------------------------------------------------------------
# Each returns a float ratio or None when the sample is degenerate.

def _safe(num, den):
    if den <= 1e-14 or not math.isfinite(den):
        return None
    return num / den


def r_jma2(c, rng):
    phi = c.psh(rng)
    a, b = c.j_measure_of_potential(phi), c.j_of_potential(phi)
    if min(a, b) <= 1e-14:
        return None
    return max(a / b, b / a)


def r_jmutri(c, rng):
    pm, phi, psi = c.psh_tuple(rng, 3)
    return _safe(c.dist(phi, psi), c.dist(pm, phi) + c.dist(pm, psi))


def r_jqmetr_sym(c, rng):
    a, b = c.psh_tuple(rng, 2)
    return _safe(c.dist(a, b), c.dist(b, a))


def r_jqmetr_tri(c, rng):
    a, b, m = c.psh_tuple(rng, 3)
    return _safe(c.dist(a, b), c.dist(a, m) + c.dist(m, b))


def r_holdjmes(c, rng):
    p, q, p2, q2 = c.psh_tuple(rng, 4)
    if rng.random() < 0.5:
        p2 = c.near(rng, p, p2)
    if rng.random() < 0.5:
        q2 = c.near(rng, q, q2)
    a = alpha(c.n)
    radius = max(c.j_measure_of_potential(x) for x in (p, q, p2, q2))
    lhs = abs(c.dist(p, q) - c.dist(p2, q2))
    big = max(c.dist(p, p2), c.dist(q, q2))
    return _safe(lhs, big ** a * radius ** (1 - a))


def r_holdmes(c, rng):
    phi, psi, pm, pn = c.psh_tuple(rng, 4)
    a = alpha(c.n)
    mu, nu = c.measure(pm), c.measure(pn)
    radius = max(c.j_of_potential(phi), c.j_of_potential(psi),
                 c.j_measure_of_potential(pm), c.j_measure_of_potential(pn))
    lhs = abs(float(c.model.integrate(phi - psi, mu - nu)))
    den = c.dist(phi, psi) ** a * c.dist(pm, pn) ** 0.5 * radius ** (0.5 - a)
    return _safe(lhs, den)


def _random_measure(c, rng):
    m = c.model
    if rng.random() < 0.5:
        return c.measure(c.psh(rng))
    w = rng.exponential(size=m.carrier_size)
    w[rng.random(m.carrier_size) < 0.3] = 0.0
    if w.sum() == 0:
        w[0] = 1.0
    return w / w.sum()


def _dist_measures(c, mu, nu, omega=None):
    omega = c.omega if omega is None else omega
    phi = j_energy(c.model, omega, mu).phi_star
    psi = j_energy(c.model, omega, nu).phi_star
    return c.dist(phi, psi, omega)


def r_uniform_convexity_measures(c, rng):
    mu0, mu1, nu = (_random_measure(c, rng) for _ in range(3))
    t = rng.uniform(0.02, 0.98)
    mut = (1 - t) * mu0 + t * mu1
    gap = (1 - t) * _dist_measures(c, mu0, nu) + t * _dist_measures(c, mu1, nu) - _dist_measures(c, mut, nu)
    return _safe(t * (1 - t) * _dist_measures(c, mu0, mu1), gap)


def one_sided_sup(model, omega, g, radius):
    """sup over {phi in D_omega, J_omega(phi) <= radius} of int phi g."""
    if model.n == 1 and model.carrier_size <= MAX_ENUM_CONSTRAINTS:
        return float(_dd_enumerate(model, omega, g, radius).value)
    return _dd_cutting_planes(model, omega, g, radius, 1e-9).lower


def r_finen(c, rng):
    mu = _random_measure(c, rng)
    radius = float(rng.choice([0.25, 1.0, 4.0]))
    s = one_sided_sup(c.model, c.omega, c.mu0 - mu, radius)
    jv = float(j_energy(c.model, c.omega, mu).j_value)
    return _safe(jv, s * (1 + s / radius))


def _dd_pair(c, rng):
    mu, nu = _random_measure(c, rng), _random_measure(c, rng)
    radius = max(1.0, float(j_energy(c.model, c.omega, mu).j_value),
                 float(j_energy(c.model, c.omega, nu).j_value))
    return mu, nu, radius, float(dd_metric(c.model, c.omega, mu, nu)), _dist_measures(c, mu, nu)


def r_dj_upper(c, rng):
    mu, nu, radius, dd, d = _dd_pair(c, rng)
    return _safe(dd, math.sqrt(d * radius))


def r_dj_lower(c, rng):
    mu, nu, radius, dd, d = _dd_pair(c, rng)
    return _safe(d, dd * math.sqrt(radius))


def r_m1equiv(c, rng):
    tau = c.psh(rng)
    w_tau = c.model.twist(c.omega, tau)
    mu, nu = _random_measure(c, rng), _random_measure(c, rng)
    dd_tau = float(dd_metric(c.model, w_tau, mu, nu))
    dd_0 = float(dd_metric(c.model, c.omega, mu, nu))
    return _safe(dd_tau, (math.sqrt(max(c.j_of_potential(tau), 0.0)) + 1) * dd_0)


def r_lipen(c, rng):
    w2, d = c.commensurable(rng)
    if d <= 1e-9:
        return None
    mu = _random_measure(c, rng)
    r = c.j_plus_measure(mu, w2) / c.j_plus_measure(mu)
    return abs(math.log(r)) / d


def r_mixedma(c, rng):
    m = c.model
    pairs, deltas, jplus = [], [], []
    for _ in range(m.n):
        w, d = c.commensurable(rng)
        phi = normalize(m, w, m.random_psh(rng, w))
        pairs.append((w, phi))
        deltas.append(d)
        jplus.append(c.j_of_potential(phi, w) + c.submean(w))
    mu = mixed_measure(m, pairs)
    lhs = c.j_plus_measure(mu)
    return _safe(lhs, math.exp(max(deltas)) * max(jplus))


def r_enhold(c, rng):
    m = c.model
    a = alpha(m.n)
    thetas = [c.random_form(rng) for _ in range(m.n + 1)]
    thetas2 = [t + 2.0 ** -int(rng.integers(0, 10)) * c.random_form(rng) if rng.random() < 0.7 else t
               for t in thetas]
    phis = c.psh_tuple(rng, m.n + 1)
    phis2 = [c.near(rng, p, c.psh(rng)) if rng.random() < 0.6 else c.psh(rng) for p in phis]
    lhs = abs(float(energy_pairing(m, list(zip(thetas, phis))) - energy_pairing(m, list(zip(thetas2, phis2)))))
    norm = lambda t: float(omega_norm(m, t, c.omega))
    big_a = float(m.volume(c.omega))
    for t, t2 in zip(thetas, thetas2):
        big_a *= 1 + norm(t) + norm(t2)
    big_j = max(c.j_of_potential(p) for p in phis) + c.submean()
    dtheta = max(norm(t - t2) for t, t2 in zip(thetas, thetas2))
    dphi = max(c.dist(p, p2) for p, p2 in zip(phis, phis2))
    return _safe(lhs, big_a * (dtheta * big_j + dphi ** a * big_j ** (1 - a)))


def r_thom(c, rng):
    w2, d = c.commensurable(rng)
    if d <= 1e-9:
        return None
    return math.log(c.submean(w2) / c.submean()) / d


def r_nablajhold(c, rng):
    m = c.model
    a = alpha(m.n)
    theta = c.random_form(rng)
    p, q = c.psh_tuple(rng, 2)
    mu, nu = c.measure(p), c.measure(q)
    lhs = abs(float(nabla_e(m, c.omega, theta, p, check=False) - nabla_e(m, c.omega, theta, q, check=False)))
    jp = max(c.j_measure_of_potential(p), c.j_measure_of_potential(q)) + c.submean()
    den = c.dist(p, q) ** a * jp ** (1 - a) * float(omega_norm(m, theta, c.omega))
    return _safe(lhs, den)


def r_twistedlip(c, rng):
    m = c.model
    a = alpha(m.n)
    w2, d = c.commensurable(rng)
    theta = c.random_form(rng)
    theta2 = theta if rng.random() < 0.5 else theta + 2.0 ** -int(rng.integers(0, 8)) * c.random_form(rng)
    mu = _random_measure(c, rng)
    lhs = abs(float(j_twisted_value(m, c.omega, theta, mu)) - float(j_twisted_value(m, w2, theta2, mu)))
    den = (d ** a * float(omega_norm(m, theta, c.omega)) + float(omega_norm(m, theta - theta2, c.omega))) \
        * c.j_plus_measure(mu)
    return _safe(lhs, den)


def r_tjvar(c, rng):
    w2, d = c.commensurable(rng)
    if d <= 1e-9:
        return None
    mu = _random_measure(c, rng)
    r = c.j_plus_measure(mu) / c.j_plus_measure(mu, w2)
    return abs(r - 1) / d ** alpha(c.n)


def _lipen_setup(c, rng):
    w2, d = c.dominating(rng)
    phi = c.psh(rng)
    return w2, d, phi, c.measure(phi), c.measure(phi, w2)


def r_lipennabla(c, rng):
    w2, d, phi, mu, _ = _lipen_setup(c, rng)
    theta = c.random_form(rng)
    m = c.model
    lhs = abs(float(nabla_e(m, c.omega, theta, phi, check=False) - nabla_e(m, w2, theta, phi, check=False)))
    return _safe(lhs, d * c.j_plus_measure(mu) * float(omega_norm(m, theta, c.omega)))


def r_maxj(c, rng):
    w2, d, phi, mu, mu2 = _lipen_setup(c, rng)
    return _safe(max(c.j_plus_measure(mu, w2), c.j_plus_measure(mu2, w2)), c.j_plus_measure(mu))


def r_distlip(c, rng):
    w2, d, phi, mu, mu2 = _lipen_setup(c, rng)
    # J_{omega'}(mu, mu') = J_{omega'}(mu, phi) since mu' = MA_{omega'}(phi)
    sol = j_energy(c.model, w2, mu)
    lhs = float(sol.j_value + c.model.integrate(phi, mu)) - float(
        energy_pairing(c.model, [(w2, phi)] * (c.n + 1)) / ((c.n + 1) * c.model.volume(w2)))
    return _safe(max(lhs, 0.0), d * c.j_plus_measure(mu))


MEASURE_SAMPLERS = {
    "JMA2": r_jma2,
    "Jmutri": r_jmutri,
    "Jqmetr_sym": r_jqmetr_sym,
    "Jqmetr_tri": r_jqmetr_tri,
    "holdJmes": r_holdjmes,
    "holdmes": r_holdmes,
    "uniform_convexity_measures": r_uniform_convexity_measures,
    "finen": r_finen,
    "dJ_upper": r_dj_upper,
    "dJ_lower": r_dj_lower,
    "M1equiv": r_m1equiv,
    "lipen": r_lipen,
    "mixedMA": r_mixedma,
    "enhold": r_enhold,
    "Thom": r_thom,
    "nablaJhold": r_nablajhold,
    "twistedlip": r_twistedlip,
    "tJvar": r_tjvar,
    "Lipennabla": r_lipennabla,
    "maxJ": r_maxj,
    "distlip": r_distlip,
}

# keys whose samplers need solves or dd computations are restricted to n = 1;
# the Lipschitz pieces are graph-only.
N1_ONLY = {"uniform_convexity_measures", "finen", "dJ_upper", "dJ_lower", "M1equiv", "lipen",
           "mixedMA", "twistedlip", "tJvar"}
GRAPH_ONLY = {"Lipennabla", "maxJ", "distlip"}


@dataclass
class EnsembleSpec:
    inequality: str
    n: int
    backend: str
    samples: int
    seed: int

    @property
    def key(self):
        return f"{self.inequality}|{self.n}|{self.backend}"


def threshvar_ratio(model, seed, samples):
    """Worst continuity-modulus ratio of the entropy threshold along the
    reference path."""
    path = reference_path(model)
    rows = threshold_continuity_scan(model, path, model.zero_form(), uniform_functional(model),
                                     SamplerSpec(seed=seed, count=samples))
    return check_scan_modulus(rows, [0.0] * len(rows), model.n), rows


def _samples_for(inequality, backend, n):
    if inequality in CONE_INEQUALITIES:
        return {("graph", 1): 10000, ("toric", 1): 2000, ("toric", 2): 300}[(backend, n)]
    heavy = {"uniform_convexity_measures", "finen", "dJ_upper", "dJ_lower", "M1equiv"}
    if inequality in heavy:
        return 150 if backend == "graph" else 30
    return {("graph", 1): 1000, ("toric", 1): 300, ("toric", 2): 80}[(backend, n)]


def reference_specs():
    specs = []
    for backend, n in BACKENDS:
        for ineq in CONE_INEQUALITIES:
            specs.append(EnsembleSpec(ineq, n, backend, _samples_for(ineq, backend, n), 7))
        for ineq in MEASURE_SAMPLERS:
            if n != 1 and ineq in N1_ONLY:
                continue
            if backend != "graph" and ineq in GRAPH_ONLY:
                continue
            specs.append(EnsembleSpec(ineq, n, backend, _samples_for(ineq, backend, n), 7))
    specs.append(EnsembleSpec("threshvar", 1, "graph", 100, 7))
    return specs


@dataclass
class EnsembleResult:
    key: str
    worst: float
    skipped: int
    samples: int
    per_model: list
    seconds: float


def run_measure_ensemble(model, inequality, samples, seed):
    ctx = Context(model)
    sampler = MEASURE_SAMPLERS[inequality]
    rng = np.random.default_rng(seed)
    worst, skipped = -math.inf, 0
    for _ in range(samples):
        try:
            r = sampler(ctx, rng)
        except PluriError:
            r = None
        if r is None or not math.isfinite(r):
            skipped += 1
            continue
        worst = max(worst, r)
    return worst, skipped


def run_spec(spec: EnsembleSpec, seed=None, samples=None) -> EnsembleResult:
    seed = spec.seed if seed is None else seed
    samples = spec.samples if samples is None else samples
    start = time.perf_counter()
    per_model, skipped = [], 0
    for i, model in enumerate(reference_models(spec.backend, spec.n)):
        sub_seed = seed * 1000 + i
        if spec.inequality == "threshvar":
            per_model.append(threshvar_ratio(model, sub_seed, samples)[0])
        elif spec.inequality in CONE_INEQUALITIES:
            rep = run_estimate_ensemble(EnergyStructure(model), spec.inequality, samples, sub_seed)
            per_model.append(rep.worst_ratio)
            skipped += rep.skipped
        else:
            worst, sk = run_measure_ensemble(model, spec.inequality, samples, sub_seed)
            per_model.append(worst)
            skipped += sk
    return EnsembleResult(spec.key, max(per_model), skipped, samples, per_model,
                          time.perf_counter() - start)


# -- fixtures --------------------------------------------------------------------------

def fixture_path():
    env = os.environ.get("PLURI_FIXTURES")
    if env:
        return Path(env)
    return Path(str(resources.files("pluripotential") / "data" / FIXTURE_NAME))


def load_constants(path=None):
    path = fixture_path() if path is None else Path(path)
    with open(path) as fh:
        return json.load(fh)["constants"]


def constant(inequality, n, backend, path=None):
    return load_constants(path)[f"{inequality}|{n}|{backend}"]


def calibrate(seed=7, specs=None, progress=None):
    """Constants = 1.05 x worst ratio per key; deterministic for fixed seeds."""
    specs = reference_specs() if specs is None else specs
    constants, details = {}, {}
    for spec in specs:
        res = run_spec(spec, seed=seed)
        constants[spec.key] = float(f"{HEADROOM * res.worst:.12g}")
        details[spec.key] = {"worst_ratio_per_size": [float(f"{w:.12g}") for w in res.per_model],
                             "samples": res.samples, "skipped": res.skipped}
        if progress:
            progress(spec.key, res)
    return {"seed": seed, "headroom": HEADROOM, "constants": constants, "ensembles": details}


def write_fixtures(data, path):
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True, indent=1)
        fh.write("\n")
