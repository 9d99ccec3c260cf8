"""Backend-generic functionals: energy pairing, Monge-Ampere operator and
energy, Dirichlet functional, Thompson distance, omega-norm, submean constant
and axiom verification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import arith
from .errors import ArityError, ConeViolation, IdentityViolation, ModelDegenerate
from .model import Model

TOL_BISECT = 1e-12
MAX_BISECT = 80


def _close(model: Model, a, b, scale=1.0) -> bool:
    if model.exact:
        return a == b
    return abs(float(a) - float(b)) <= model.tol * (1.0 + abs(float(scale)))


# -- energy pairing ------------------------------------------------------------

def energy_pairing(model: Model, pairs):
    """(theta_0, phi_0) . ... . (theta_n, phi_n), evaluated left to right as
    sum_i int phi_i theta_0 ^..^ theta_{i-1} ^ theta_{i+1,phi} ^..^ theta_{n,phi}."""
    if len(pairs) != model.n + 1:
        raise ArityError(f"energy pairing needs {model.n + 1} pairs, got {len(pairs)}")
    thetas = [model.asarray(t) for t, _ in pairs]
    phis = [model.asarray(p) for _, p in pairs]
    twisted = [t + model.ddc(p) for t, p in zip(thetas, phis)]
    total = model.scalar(0)
    for i in range(model.n + 1):
        forms = thetas[:i] + twisted[i + 1:]
        total = total + model.integrate(phis[i], model.wedge(forms))
    return total


def pairing_power(model: Model, omega, phi):
    """(omega, phi)^{n+1}."""
    return energy_pairing(model, [(omega, phi)] * (model.n + 1))


# -- Monge-Ampere -------------------------------------------------------------

def mu_omega(model: Model, omega):
    omega = model.asarray(omega)
    return model.wedge([omega] * model.n) / model.checked_volume(omega)


def ma(model: Model, omega, phi, check=True):
    omega = model.asarray(omega)
    vol = model.checked_volume(omega)
    form = model.twist(omega, phi)
    if check:
        w = model.cone_witness(form)
        if w is not None:
            raise ConeViolation("test function is not omega-psh", witness=w)
    return model.wedge([form] * model.n) / vol


def mixed_measure(model: Model, pairs):
    """([omega_1]...[omega_n])^{-1} (omega_1 + dd^c phi_1) ^ ... ^ (omega_n + dd^c phi_n)."""
    forms = [model.twist(o, p) for o, p in pairs]
    classes = model.intersection([model.asarray(o) for o, _ in pairs])
    return model.wedge(forms) / classes


def normalize(model: Model, omega, phi):
    """Shift phi so that int phi mu_omega = 0."""
    phi = model.asarray(phi)
    return phi - model.integrate(phi, mu_omega(model, omega))


# -- energies -----------------------------------------------------------------

def e_energy(model: Model, omega, phi):
    """E_omega(phi) = (omega, phi)^{n+1} / ((n+1) V_omega); defined on all of D."""
    vol = model.checked_volume(omega)
    return pairing_power(model, omega, phi) / ((model.n + 1) * vol)


def dirichlet_j(model: Model, omega, phi, psi, check=True):
    """J_omega(phi, psi) = E(phi) - E(psi) + int (psi - phi) MA(phi).

    With ``check`` the explicit sum over mixed wedges is evaluated too and the
    two routes must agree."""
    omega = model.asarray(omega)
    phi, psi = model.asarray(phi), model.asarray(psi)
    model.require_psh(omega, phi)
    model.require_psh(omega, psi)
    value = (e_energy(model, omega, phi) - e_energy(model, omega, psi)
             + model.integrate(psi - phi, ma(model, omega, phi, check=False)))
    if check:
        other = dirichlet_j_explicit(model, omega, phi, psi)
        if not _close(model, value, other, value):
            raise IdentityViolation(f"Dirichlet routes disagree: {value} vs {other}")
    return value


def dirichlet_j_explicit(model: Model, omega, phi, psi):
    """V^{-1} sum_j (j+1)/(n+1) int (phi-psi) dd^c(psi-phi) ^ omega_phi^j ^ omega_psi^{n-1-j}."""
    n = model.n
    vol = model.checked_volume(omega)
    w_phi, w_psi = model.twist(omega, phi), model.twist(omega, psi)
    diff = model.asarray(phi) - model.asarray(psi)
    ddc_form = model.ddc(-diff)
    total = model.scalar(0)
    for j in range(n):
        forms = [ddc_form] + [w_phi] * j + [w_psi] * (n - 1 - j)
        total = total + model.scalar(j + 1) * model.integrate(diff, model.wedge(forms))
    return total / (model.scalar(n + 1) * vol)


def j_functional(model: Model, omega, phi):
    """J_omega(phi) := J_omega(0, phi) = int phi mu_omega - E_omega(phi)."""
    return dirichlet_j(model, omega, model.zero_function(), phi, check=False)


# -- linear (n = 1) Monge-Ampere inversion --------------------------------------

def _linear_ddc_matrix(model: Model):
    cache = model.__dict__.setdefault("_linear_ddc", None)
    if cache is None:
        cols = []
        for k in range(model.carrier_size):
            e = model.zero_function()
            e[k] = model.scalar(1)
            cols.append(model.wedge([model.ddc(e)]))
        cache = np.stack(cols, axis=1)
        model.__dict__["_linear_ddc"] = cache
    return cache


def solve_linear_ma(model: Model, omega, mu):
    """For n = 1: the potential phi with MA_omega(phi) = mu and int phi mu_omega = 0."""
    if model.n != 1:
        raise ValueError("linear inversion requires n = 1")
    omega = model.asarray(omega)
    mu = model.asarray(mu)
    total = mu.sum()
    if not _close(model, total, 1):
        raise IdentityViolation(f"measure has total mass {total}, expected 1")
    vol = model.checked_volume(omega)
    a = _linear_ddc_matrix(model).copy()
    rhs = vol * mu - model.wedge([omega])
    a[0, :] = mu_omega(model, omega)
    rhs[0] = model.scalar(0)
    return arith.solve(a, rhs, model.exact)


# -- Thompson distance and omega-norm ------------------------------------------

def _bisect(feasible, hi_start=1.0, hi_cap=2.0 ** 7, tol=TOL_BISECT):
    if feasible(0.0):
        return 0.0
    hi = hi_start
    while not feasible(hi):
        hi *= 2
        if hi > hi_cap:
            return math.inf
    lo = 0.0
    for _ in range(MAX_BISECT):
        if hi - lo <= tol * max(hi, 1e-300):
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _as_float_form(model, form):
    return arith.float_array(model.asarray(form))


def thompson_distance(model: Model, omega, omega2, method="auto"):
    """inf{delta >= 0 : e^{-delta} omega <= omega2 <= e^{delta} omega}."""
    model.require_cone(omega, "omega")
    model.require_cone(omega2, "omega'")
    if method == "auto":
        method = "closed" if model.backend == "graph" else "bisect"
    if method in ("closed", "facet"):
        return _facet_log_ratio(model.cone_values(model.asarray(omega)),
                                model.cone_values(model.asarray(omega2)))
    w, w2 = model.asarray(omega), model.asarray(omega2)

    def feasible(delta):
        lo, hi = model.scalar(math.exp(-delta)), model.scalar(math.exp(delta))
        return model.in_cone(w2 - lo * w) and model.in_cone(hi * w - w2)

    return _bisect(feasible)


def _facet_log_ratio(c, c2):
    worst = 0.0
    for a, b in zip(c, c2):
        if a == 0 and b == 0:
            continue
        if a == 0 or b == 0:
            return math.inf
        worst = max(worst, abs(math.log(float(b) / float(a))))
    return worst


def omega_norm(model: Model, theta, omega, method="auto"):
    """inf{C >= 0 : -C omega <= theta <= C omega}."""
    model.require_cone(omega, "omega")
    if method == "auto":
        method = "closed" if model.backend == "graph" else "bisect"
    theta, omega = model.asarray(theta), model.asarray(omega)
    if method in ("closed", "facet"):
        c, t = model.cone_values(omega), model.cone_values(theta)
        worst = model.scalar(0)
        for a, b in zip(c, t):
            if b == 0:
                continue
            if a == 0:
                return math.inf
            worst = max(worst, abs(b) / a)
        return worst

    def feasible(cval):
        cval = model.scalar(cval)
        return model.in_cone(cval * omega - theta) and model.in_cone(cval * omega + theta)

    return _bisect(feasible, hi_cap=2.0 ** 40)


# -- submean constant -----------------------------------------------------------

def submean_constant(model: Model, omega):
    """T_omega = sup over D_omega of (max phi - int phi mu_omega)."""
    omega = model.asarray(omega)
    mu0 = mu_omega(model, omega)
    if model.n == 1:
        # Modulo constants D_omega is a polytope whose vertices are the potentials
        # of the Dirac masses; a linear objective peaks at one of them.
        best = model.scalar(0)
        for k in range(model.carrier_size):
            delta = model.zero_function()
            delta[k] = model.scalar(1)
            phi = solve_linear_ma(model, omega, delta)
            best = max(best, phi.max() - model.integrate(phi, mu0))
        return best
    return submean_constant_lp(model, omega)


def submean_constant_lp(model: Model, omega):
    """T_omega by one linear program per carrier point (float)."""
    omega = model.asarray(omega)
    mu0 = arith.float_array(mu_omega(model, omega))
    k = model.ddc_cone_matrix_float()
    c = arith.float_array(model.cone_values(omega))
    best = 0.0
    for v in range(model.carrier_size):
        obj = np.zeros(model.carrier_size)
        obj[v] = -1.0
        res = linprog(obj, A_ub=-k, b_ub=c, A_eq=mu0.reshape(1, -1), b_eq=[0.0],
                      bounds=[(None, None)] * model.carrier_size, method="highs")
        if res.status == 3:
            raise ModelDegenerate("unbounded submean LP: the submean property fails")
        if res.status != 0:
            raise ModelDegenerate(f"submean LP failed: {res.message}")
        best = max(best, -res.fun)
    return best


# -- mixed energy bounds ----------------------------------------------------------

def ensum_constant(r: int, n: int) -> int:
    """C_{r,n} = (2^r r!)^n."""
    return (2 ** r * math.factorial(r)) ** n


def ensum_sides(model: Model, omegas, phis, t):
    """Both sides of (sum omega_i, sum phi_i)^{n+1} >= C_{r,n} t^{rn} sum (omega_i, phi_i)^{n+1}."""
    r = len(omegas) - 1
    n = model.n
    lhs = pairing_power(model, sum(model.asarray(o) for o in omegas), sum(model.asarray(p) for p in phis))
    terms = sum(pairing_power(model, o, p) for o, p in zip(omegas, phis))
    factor = model.scalar(ensum_constant(r, n)) * model.scalar(t) ** (r * n)
    return lhs, factor * terms


def mixed_energy_chain(model: Model, omegas, phis, t):
    """For n+1 forms with omega_i <= t omega_j and phi_i <= 0, returns the mixed
    pairing and the lower bound C_{n,n} t^{n^2} (n+1) min_i (omega_i, phi_i)^{n+1} / (n+1)!."""
    n = model.n
    mixed = energy_pairing(model, list(zip(omegas, phis)))
    lowest = min(pairing_power(model, o, p) for o, p in zip(omegas, phis))
    factor = model.scalar(ensum_constant(n, n)) * model.scalar(t) ** (n * n)
    bound = factor * model.scalar(n + 1) * lowest / model.scalar(math.factorial(n + 1))
    return mixed, bound


# -- axiom verification -------------------------------------------------------------

@dataclass
class Violation:
    identity: str
    sample: int
    detail: str


@dataclass
class AxiomReport:
    samples: int
    violations: list = field(default_factory=list)
    max_residual: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {
            "samples": self.samples,
            "violations": [v.__dict__ for v in self.violations],
            "max_residual": {k: arith.format_scalar(v) for k, v in self.max_residual.items()},
        }


def _random_form(model: Model, rng):
    """A form that need not be positive: difference of two cone forms."""
    return model.random_cone_form(rng) - model.random_cone_form(rng) * model._fraction(rng, 0, 2, 8)


def verify_axioms(model: Model, sample_count: int, seed: int) -> AxiomReport:
    """Check vanishing on constants, positivity, integration by parts and
    seminegativity on a seeded ensemble."""
    rng = np.random.default_rng(seed)
    report = AxiomReport(samples=sample_count)
    worst = {k: model.scalar(0) for k in ("constants", "positivity", "intpart", "semineg")}

    def fail(name, i, detail):
        report.violations.append(Violation(name, i, detail))

    for i in range(sample_count):
        c = model._fraction(rng, -4, 4, 8)
        dc = model.ddc(model.constant(c))
        err = max(abs(x) for x in dc)
        worst["constants"] = max(worst["constants"], err)
        if err > model.tol:
            fail("constants", i, f"dd^c({c}) has entry {err}")

        cone_forms = [model.random_cone_form(rng) for _ in range(model.n)]
        wedge = model.wedge(cone_forms)
        lowest = min(wedge)
        worst["positivity"] = max(worst["positivity"], -lowest)
        if lowest < -model.tol:
            fail("positivity", i, f"wedge of nonnegative forms has mass {lowest}")

        phi, psi = model.random_function(rng), model.random_function(rng)
        theta = [_random_form(model, rng) for _ in range(model.n - 1)]
        a = model.integrate(phi, model.wedge([model.ddc(psi)] + theta))
        b = model.integrate(psi, model.wedge([model.ddc(phi)] + theta))
        worst["intpart"] = max(worst["intpart"], abs(a - b))
        if not _close(model, a, b, max(abs(a), abs(b))):
            fail("intpart", i, f"{a} != {b}")

        q = model.integrate(phi, model.wedge([model.ddc(phi)] + cone_forms[: model.n - 1]))
        worst["semineg"] = max(worst["semineg"], q)
        if q > model.tol * (1 + abs(float(q))):
            fail("semineg", i, f"int phi dd^c phi ^ ... = {q} > 0")
    report.max_residual = worst
    return report
