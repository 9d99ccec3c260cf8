import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from pluripotential.coercivity import (FunctionalOnMeasures, SamplerSpec, anchored_threshold,
                                       check_scan_modulus, entropy, entropy_legendre,
                                       free_energy, mabuchi, reference_path, regauge,
                                       slope_threshold, threshold_continuity_scan,
                                       uniform_functional)
from pluripotential.core import ma, mu_omega
from pluripotential.errors import EmptySublevel, PathError, ReferenceMeasureError
from pluripotential.graph import g2, random_graph

G2 = g2()
W = G2.reference_form()
A = G2.asarray
UNIFORM = [0.5, 0.5]
GRID = [[F(k, 512), 1 - F(k, 512)] for k in range(513)]


def test_entropy_values():
    assert entropy([1, 0], UNIFORM) == pytest.approx(math.log(2), abs=1e-15)
    assert entropy(UNIFORM, UNIFORM) == 0
    for a in (0.1, 0.3, 0.5):
        assert entropy([a, 1 - a], UNIFORM) == pytest.approx(
            a * math.log(2 * a) + (1 - a) * math.log(2 * (1 - a)), abs=1e-15)
    assert math.isinf(entropy([0.5, 0.5], [1, 0]))
    with pytest.raises(ReferenceMeasureError):
        entropy([1, 0], [0, 0])


@given(st.integers(0, 10 ** 6))
def test_entropy_legendre_and_convexity(seed):
    rng = np.random.default_rng(seed)
    rho = rng.dirichlet(np.ones(4))
    mu, nu = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    fs = [rng.normal(size=4) for _ in range(20)] + [np.log(mu / rho)]
    assert entropy_legendre(mu, rho, fs) == pytest.approx(entropy(mu, rho), abs=1e-12)
    assert entropy_legendre(mu, rho, fs[:-1]) <= entropy(mu, rho) + 1e-12
    t = rng.random()
    assert entropy((1 - t) * mu + t * nu, rho) <= (1 - t) * entropy(mu, rho) + t * entropy(nu, rho) + 1e-12


def test_free_energy_g2():
    assert free_energy(G2, W, A([0, 1]), UNIFORM, W) == pytest.approx(math.log(2) + 0.25, abs=1e-15)
    assert free_energy(G2, W, mu_omega(G2, W), UNIFORM, W) == 0
    mu = A([F(1, 5), F(4, 5)])
    assert free_energy(G2, W, mu, UNIFORM, G2.zero_form()) == pytest.approx(entropy(mu, UNIFORM), abs=1e-15)


def test_mabuchi_g2():
    phi = A([1, 0])
    assert mabuchi(G2, W, phi, UNIFORM, W) == pytest.approx(math.log(2) + 0.25, abs=1e-15)
    assert mabuchi(G2, W, phi + 3, UNIFORM, W) == pytest.approx(math.log(2) + 0.25, abs=1e-15)
    assert mabuchi(G2, W, G2.zero_function(), UNIFORM, W) == 0


@given(st.integers(0, 10 ** 6))
def test_free_energy_of_ma_is_mabuchi(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 6)))
    w = m.reference_form()
    rho = rng.dirichlet(np.ones(m.carrier_size))
    theta = m.random_cone_form(rng)
    phi = m.random_psh(rng, w)
    assert free_energy(m, w, ma(m, w, phi), rho, theta) == pytest.approx(mabuchi(m, w, phi, rho, theta), abs=1e-12)


@given(st.integers(0, 10 ** 6))
def test_free_energy_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 6)))
    w = m.reference_form()
    rho = rng.dirichlet(np.ones(m.carrier_size))
    theta = m.random_cone_form(rng)
    psi = m.random_function(rng)
    mu = ma(m, w, m.random_psh(rng, w))
    rho2, theta2 = regauge(m, rho, theta, psi)
    assert free_energy(m, w, mu, rho2, theta2) == pytest.approx(free_energy(m, w, mu, rho, theta), abs=1e-10)


def test_unknown_functional_kind():
    with pytest.raises(ValueError):
        FunctionalOnMeasures("other")


def test_user_table_functional():
    f = FunctionalOnMeasures("user_table", table=[([0.5, 0.5], 2.0)])
    assert f(G2, W, A([F(1, 2), F(1, 2)])) == 2.0
    with pytest.raises(KeyError):
        f(G2, W, A([1, 0]))


# -- thresholds ---------------------------------------------------------------------

def test_j_self_threshold_is_one():
    est = slope_threshold(G2, W, G2.zero_form(), FunctionalOnMeasures("j_self"), SamplerSpec(seed=3, count=60))
    assert est.sigma_hat == 1


def test_twist_by_omega_shifts_threshold():
    spec = SamplerSpec(seed=4, count=60)
    f = uniform_functional(G2)
    theta = A([1, -F(1, 2)])
    base = slope_threshold(G2, W, theta, f, spec, j_min=F(1, 100))
    for t in (F(1, 3), F(-2)):
        shifted = slope_threshold(G2, W, theta + t * W, f, spec, j_min=F(1, 100))
        assert shifted.sigma_hat - base.sigma_hat == pytest.approx(float(t), abs=1e-12)


def test_g2_entropy_threshold_matches_grid_minimum():
    a = np.arange(513) / 512
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.nan_to_num(a * np.log(2 * a)) + np.nan_to_num((1 - a) * np.log(2 * (1 - a)))
    j = (1 - 2 * a) ** 2 / 4
    keep = j >= 0.01
    brute = float((ent[keep] / j[keep]).min())
    est = slope_threshold(G2, W, G2.zero_form(), uniform_functional(G2),
                          SamplerSpec(count=0, extra=GRID), j_min=F(1, 100))
    assert est.sigma_hat == pytest.approx(brute, abs=1e-12)
    assert est.sigma_hat == pytest.approx(2.013985387274811, abs=1e-12)
    assert list(est.argmin_witness) == [F(51, 128), F(77, 128)]


def test_g2_path_scan_matches_grid_oracle():
    path = reference_path(G2)
    assert [list(w) for w in path] == [[1, 1 + F(k, 10)] for k in range(6)]
    rows = threshold_continuity_scan(G2, path, G2.zero_form(), uniform_functional(G2),
                                     SamplerSpec(count=0, extra=GRID), j_min=F(1, 100))
    for row, w in zip(rows, path):
        w1 = float(w[1])
        ref = entropy([1 / (1 + w1), w1 / (1 + w1)], UNIFORM)
        best = math.inf
        for a, _ in GRID:
            jv = oracles.g2_energy_of_measure(float(a), (1.0, w1), grid=20001)
            if jv >= 0.01:
                best = min(best, (entropy([float(a), 1 - float(a)], UNIFORM) - ref) / jv)
        assert row.sigma_hat == pytest.approx(best, rel=1e-5)
    frozen = [2.013985387274811, 0.9834914277557343, 0.10095075618244599,
              -0.6632317067660487, -1.323267079523784, -1.9596337717929686]
    assert [r.sigma_hat for r in rows] == pytest.approx(frozen, abs=1e-12)
    assert [r.delta_t for r in rows[:-1]] == pytest.approx([math.log(1 + 1 / (10 + k)) for k in range(5)], abs=1e-12)


def test_j_self_scan_is_constant_one():
    rows = threshold_continuity_scan(G2, reference_path(G2), G2.zero_form(), FunctionalOnMeasures("j_self"),
                                     SamplerSpec(seed=1, count=30))
    assert all(r.sigma_hat == 1 for r in rows)


def test_constant_path_gives_constant_series():
    rows = threshold_continuity_scan(G2, [W] * 3, G2.zero_form(), uniform_functional(G2), SamplerSpec(seed=2, count=40))
    assert len({r.sigma_hat for r in rows}) == 1
    assert check_scan_modulus(rows, [0, 0, 0], 1) == 0


def test_path_error_reports_index():
    with pytest.raises(PathError) as err:
        threshold_continuity_scan(G2, [W, W, A([0, 1])], G2.zero_form(), uniform_functional(G2), SamplerSpec(count=10))
    assert "1" in str(err.value)


def test_empty_sublevel():
    with pytest.raises(EmptySublevel):
        slope_threshold(G2, W, G2.zero_form(), uniform_functional(G2), SamplerSpec(seed=0, count=20), j_min=10)


def test_anchor_agrees_when_anchor_is_reference():
    est = slope_threshold(G2, W, G2.zero_form(), uniform_functional(G2), SamplerSpec(seed=5, count=50))
    sigma, _ = anchored_threshold(G2, W, est, mu_omega(G2, W))
    assert sigma == pytest.approx(est.sigma_hat, abs=1e-12)
