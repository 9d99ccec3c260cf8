"""Entropy, free energy, Mabuchi functional and slope-based coercivity
thresholds on finite models.

On a finite model J_omega is bounded, so the threshold defined through growth
at infinity is degenerate.  slope_threshold computes its sublevel surrogate

    sigma_hat = min over sampled mu with J_omega(mu) >= j_min of
                (F(mu) + J_omega^theta(mu) - F(mu_omega)) / J_omega(mu).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import arith
from .core import ma, mu_omega, thompson_distance
from .errors import EmptySublevel, IdentityViolation, PathError, ReferenceMeasureError
from .measures import j_energy, quasi_metric
from .model import Model
from .twisted import j_twisted_value, nabla_e


# -- entropy and free energy -------------------------------------------------------

def entropy(mu, rho) -> float:
    """sum mu_v log(mu_v / rho_v); +inf when mu charges a point rho does not."""
    mu, rho = arith.float_array(mu), arith.float_array(rho)
    if np.any(rho < 0) or rho.sum() <= 0:
        raise ReferenceMeasureError("reference measure must be positive")
    support = mu > 0
    if np.any(support & (rho <= 0)):
        return math.inf
    return float(np.sum(mu[support] * np.log(mu[support] / rho[support])))


def entropy_legendre(mu, rho, fs) -> float:
    """max over the given f of int f mu - log int e^f rho; never exceeds the entropy."""
    mu, rho = arith.float_array(mu), arith.float_array(rho)
    best = -math.inf
    for f in fs:
        f = arith.float_array(f)
        top = f.max()
        best = max(best, float(f @ mu - (top + math.log(np.sum(np.exp(f - top) * rho)))))
    return best


def free_energy(model: Model, omega, mu, rho, theta_rho) -> float:
    """Ent_rho(mu) - Ent_rho(mu_omega) + J_omega^{theta_rho}(mu)."""
    ent = entropy(mu, rho)
    if math.isinf(ent):
        return math.inf
    return ent - entropy(mu_omega(model, omega), rho) + float(j_twisted_value(model, omega, theta_rho, mu))


def regauge(model: Model, rho, theta_rho, psi):
    """The pair (rho e^{psi} / Z, theta_rho + dd^c psi) defining the same free energy."""
    rho = arith.float_array(rho)
    weights = rho * np.exp(arith.float_array(psi))
    return weights / weights.sum(), model.asarray(theta_rho) + model.ddc(psi)


def mabuchi(model: Model, omega, phi, rho, theta_rho) -> float:
    """Chen-Tian form: Ent_rho(MA(phi)) + nabla_{theta_rho} E_omega(phi) - Ent_rho(mu_omega)."""
    measure = ma(model, omega, phi)
    ent = entropy(measure, rho)
    if math.isinf(ent):
        return math.inf
    return ent + float(nabla_e(model, omega, theta_rho, phi, check=False)) \
        - entropy(mu_omega(model, omega), rho)


@dataclass
class FunctionalOnMeasures:
    """F with kind 'entropy' (rho), 'j_self', 'user_table' (table) or
    'free_energy' (rho, theta_rho)."""

    kind: str
    rho: object = None
    theta_rho: object = None
    table: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("entropy", "j_self", "user_table", "free_energy"):
            raise ValueError(f"unknown functional kind {self.kind!r}")

    def __call__(self, model: Model, omega, mu) -> float:
        if self.kind == "entropy":
            return entropy(mu, self.rho)
        if self.kind == "j_self":
            return float(j_energy(model, omega, mu).j_value)
        if self.kind == "free_energy":
            return free_energy(model, omega, mu, self.rho, self.theta_rho)
        target = arith.float_array(mu)
        for measure, value in self.table:
            if np.allclose(arith.float_array(measure), target, atol=1e-12):
                return float(value)
        raise KeyError("measure not present in the table")


# -- sampling -----------------------------------------------------------------------

@dataclass
class SamplerSpec:
    """Stratified seeded family: MA images of random psh potentials, sparse
    point-supported measures, and mixtures of the two."""

    seed: int = 0
    count: int = 200
    strata: tuple = (0.4, 0.3, 0.3)
    extra: list = field(default_factory=list)

    def to_dict(self):
        return {"seed": self.seed, "count": self.count, "strata": list(self.strata)}


def sample_measures(model: Model, omega, spec: SamplerSpec):
    rng = np.random.default_rng(spec.seed)
    size = model.carrier_size
    out = []
    counts = np.floor(np.asarray(spec.strata) / sum(spec.strata) * spec.count).astype(int)
    counts[0] += spec.count - counts.sum()

    def ma_image():
        phi = model.random_psh(rng, omega)
        return arith.float_array(ma(model, omega, phi))

    def sparse():
        k = int(rng.integers(1, min(size, 3) + 1))
        pts = rng.choice(size, size=k, replace=False)
        mu = np.zeros(size)
        mu[pts] = rng.exponential(size=k)
        return mu / mu.sum()

    for _ in range(counts[0]):
        out.append(ma_image())
    for _ in range(counts[1]):
        out.append(sparse())
    for _ in range(counts[2]):
        t = rng.random()
        out.append((1 - t) * ma_image() + t * sparse())
    out.extend(arith.float_array(m) for m in spec.extra)
    return [_clean(model, m) for m in out]


def _clean(model, mu):
    mu = np.clip(arith.float_array(mu), 0.0, None)
    mu = mu / mu.sum()
    if model.exact:
        fr = [arith.rationalize(float(v), 1 << 16) for v in mu]
        fr[-1] = 1 - sum(fr[:-1])
        if fr[-1] < 0:
            k = int(np.argmax(mu))
            fr[-1] = 0
            fr[k] = 0
            fr[k] = 1 - sum(fr)
        return model.asarray(fr)
    return model.asarray(mu)


# -- thresholds ------------------------------------------------------------------------

@dataclass
class ThresholdEstimate:
    omega: np.ndarray
    theta: np.ndarray
    sigma_hat: float
    j_min: float
    sample_size: int
    argmin_witness: np.ndarray
    skipped_inf: int = 0
    witness_id: int = -1
    seed: int = 0
    samples: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"sigma_hat": self.sigma_hat, "j_min": self.j_min,
                "sample_size": self.sample_size, "skipped_inf_count": self.skipped_inf,
                "witness_id": self.witness_id, "seed": self.seed,
                "argmin_witness": [arith.format_scalar(v) for v in self.argmin_witness]}


@dataclass
class SlopeSample:
    mu: np.ndarray
    j_value: float
    numerator: float


def slope_samples(model, omega, theta, functional, measures):
    """(mu, J(mu), F(mu) + J^theta(mu) - F(mu_omega)) for each measure, skipping
    measures with infinite F."""
    f0 = functional(model, omega, mu_omega(model, omega))
    rows, skipped = [], 0
    for mu in measures:
        f = functional(model, omega, mu)
        if math.isinf(f):
            skipped += 1
            continue
        jv = float(j_energy(model, omega, mu).j_value)
        tw = float(j_twisted_value(model, omega, theta, mu))
        rows.append(SlopeSample(mu, jv, f + tw - f0))
    return rows, skipped


def slope_threshold(model: Model, omega, theta, functional: FunctionalOnMeasures,
                    sampler: SamplerSpec, j_min=None) -> ThresholdEstimate:
    omega, theta = model.asarray(omega), model.asarray(theta)
    measures = sample_measures(model, omega, sampler)
    rows, skipped = slope_samples(model, omega, theta, functional, measures)
    return threshold_from_samples(omega, theta, rows, skipped, j_min, sampler.seed)


def threshold_from_samples(omega, theta, rows, skipped, j_min=None, seed=0):
    if not rows:
        raise EmptySublevel("no sample with finite functional value")
    if j_min is None:
        j_min = 0.1 * max(r.j_value for r in rows)
    j_min = float(j_min)
    best, best_i = math.inf, -1
    for i, r in enumerate(rows):
        if r.j_value >= j_min and r.j_value > 0:
            ratio = r.numerator / r.j_value
            if ratio < best:
                best, best_i = ratio, i
    if best_i < 0:
        raise EmptySublevel(f"no sample with J >= {j_min}")
    return ThresholdEstimate(omega, theta, best, j_min, len(rows), rows[best_i].mu,
                             skipped, best_i, seed, rows)


def anchored_threshold(model: Model, omega, estimate: ThresholdEstimate, anchor):
    """Recompute the threshold with d_omega(., anchor) in place of J_omega on the
    same samples.  Returns (sigma_anchor, terms) where terms[i] = (G_i, J_i, d_i)."""
    best = math.inf
    terms = []
    for r in estimate.samples:
        if r.j_value < estimate.j_min or r.j_value <= 0:
            continue
        d = float(quasi_metric(model, omega, r.mu, anchor))
        terms.append((r.numerator, r.j_value, d))
        if d > 0:
            best = min(best, r.numerator / d)
    return best, terms


def anchor_bound(terms, j_anchor, radius, constant, n):
    """max_i |G_i| K J(nu)^a R^{1-a} / (J_i d_i): bounds |sigma_anchor - sigma_hat|
    through |J(mu) - d(mu, nu)| <= K d(mu_omega, nu)^a R^{1-a}."""
    a = 2.0 ** -n
    slack = constant * j_anchor ** a * radius ** (1 - a)
    return max(abs(g) * slack / (j * d) for g, j, d in terms if d > 0)


@dataclass
class ScanRow:
    k: int
    delta_t: float
    sigma_hat: float
    witness_id: int
    skipped_inf_count: int
    j_min: float
    seed: int

    def to_dict(self):
        return {"k": self.k, "delta_T": self.delta_t, "sigma_hat": self.sigma_hat,
                "witness_id": self.witness_id, "skipped_inf_count": self.skipped_inf_count,
                "j_min": self.j_min, "seed": self.seed}


def threshold_continuity_scan(model: Model, path, theta, functional, sampler: SamplerSpec,
                              j_min=None):
    """sigma_hat along a path of reference forms; delta_T is the Thompson
    distance to the next form (0 for the last)."""
    forms = [model.asarray(w) for w in path]
    deltas = []
    for k in range(len(forms) - 1):
        d = thompson_distance(model, forms[k], forms[k + 1])
        if d is None or math.isinf(float(d)):
            raise PathError("consecutive forms are not commensurable", k)
        deltas.append(float(d))
    deltas.append(0.0)
    rows = []
    for k, w in enumerate(forms):
        est = slope_threshold(model, w, theta, functional, sampler, j_min)
        rows.append(ScanRow(k, deltas[k], est.sigma_hat, est.witness_id, est.skipped_inf,
                            est.j_min, sampler.seed))
    return rows


def check_scan_modulus(rows, theta_norms, n):
    """Worst ratio |s_{k+1} - s_k| / (delta_k^a (1 + |s_k| + ||theta||_k)), to be
    compared with the frozen constant."""
    a = 2.0 ** -n
    worst = 0.0
    for k in range(len(rows) - 1):
        diff = abs(rows[k + 1].sigma_hat - rows[k].sigma_hat)
        scale = rows[k].delta_t ** a * (1 + abs(rows[k].sigma_hat) + theta_norms[k])
        if scale == 0:
            if diff > 1e-12:
                raise IdentityViolation("threshold moved along a constant step")
            continue
        worst = max(worst, diff / scale)
    return worst


def reference_path(model: Model, steps=5, step=None):
    """omega_k, k = 0..steps: the last graph weight (or the first toric Q entry)
    scaled by 1 + k step, with step = 1/10 by default."""
    step = model.scalar(arith.to_fraction("1/10") if model.exact else 0.1) if step is None else step
    base = model.reference_form()
    path = []
    for k in range(steps + 1):
        w = base.copy()
        w[0 if model.backend == "toric" else -1] *= 1 + k * step
        path.append(w)
    return path


def uniform_functional(model: Model, kind="entropy"):
    """F of the given kind with uniform reference measure and zero twist."""
    rho = np.full(model.carrier_size, 1.0 / model.carrier_size)
    return FunctionalOnMeasures(kind, rho=rho, theta_rho=model.zero_form())
