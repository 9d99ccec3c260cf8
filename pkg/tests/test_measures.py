from fractions import Fraction as F
import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from pluripotential.core import dirichlet_j, e_energy, ma, mu_omega
from pluripotential.envelope import envelope
from pluripotential.errors import IdentityViolation
from pluripotential.graph import g2, random_graph
from pluripotential.measures import (dd_metric, dd_metric_bracket, e_tilde, j_energy,
                                     j_energy_relative, j_plus, legendre_value, maximizing_sequence,
                                     orthogonality_defect, quasi_metric)
from pluripotential.toric import ToricModel

G2 = g2()
W = G2.reference_form()


def mu_a(a):
    a = F(a)
    return G2.asarray([a, 1 - a])


def vec(*xs):
    return G2.asarray([F(x) for x in xs])


# -- energy of a measure ---------------------------------------------------------------

@pytest.mark.parametrize("a", [F(0), F(1, 4), F(1, 2), F(2, 3), F(1)])
def test_g2_energy_of_measure(a):
    sol = j_energy(G2, W, mu_a(a))
    assert sol.j_value == (1 - 2 * a) ** 2 / 4
    assert float(sol.j_value) == pytest.approx(oracles.g2_energy_of_measure(float(a)), abs=1e-9)
    assert list(ma(G2, W, sol.phi_star)) == list(mu_a(a))
    assert sol.residual == 0


def test_energy_of_reference_measure():
    sol = j_energy(G2, W, mu_omega(G2, W))
    assert sol.j_value == 0 and list(sol.phi_star) == [0, 0]


@given(st.integers(0, 10 ** 6))
def test_graph_energy_of_measure_matches_generic_optimizer(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 7)))
    w = m.reference_form()
    mu = ma(m, w, m.random_psh(rng, w))
    sol = j_energy(m, w, mu)
    lap = oracles.laplacian(m.carrier_size, m.edges)
    assert float(sol.j_value) == pytest.approx(oracles.maximize_energy_slsqp(lap, w, mu), abs=1e-7)


@given(st.integers(0, 10 ** 6))
def test_energy_of_ma_image_is_dirichlet(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 7)))
    w = m.reference_form()
    phi = m.random_psh(rng, w)
    assert j_energy(m, w, ma(m, w, phi)).j_value == dirichlet_j(m, w, phi, m.zero_function())


def test_toric2_energy_certificate():
    m = ToricModel(2, 5, [[1.0, -0.25], [-0.25, 1.2]])
    rng = np.random.default_rng(0)
    w = m.reference_form()
    phi = m.random_psh(rng, w)
    sol = j_energy(m, w, ma(m, w, phi))
    assert sol.residual <= 1e-8
    assert float(sol.j_value) == pytest.approx(float(dirichlet_j(m, w, phi, m.zero_function())), abs=1e-7)


def test_relative_energy():
    assert j_energy_relative(G2, W, mu_a(0), G2.zero_function()) == F(1, 4)
    psi = vec(F(1, 3), 0)
    assert j_energy_relative(G2, W, ma(G2, W, psi), psi) == 0


def test_rejects_non_probability():
    with pytest.raises(IdentityViolation):
        j_energy(G2, W, vec(1, 1))


# -- quasi-metric ------------------------------------------------------------------------

def test_quasi_metric_g2():
    assert quasi_metric(G2, W, ma(G2, W, vec(1, 0)), ma(G2, W, vec(0, 1))) == 1
    assert quasi_metric(G2, W, mu_a(F(1, 3)), mu_a(F(1, 3))) == 0


@given(st.integers(0, 10 ** 6))
def test_distance_to_reference_is_energy(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 7)))
    w = m.reference_form()
    mu = ma(m, w, m.random_psh(rng, w))
    assert quasi_metric(m, w, mu, mu_omega(m, w)) == j_energy(m, w, mu).j_value


def test_j_plus_g2():
    assert j_plus(G2, W, mu_a(0)) == F(1, 4) + F(1, 2)


# -- dd metric ---------------------------------------------------------------------------

@pytest.mark.parametrize("a,b", [(F(1, 4), F(2, 3)), (F(0), F(1)), (F(1, 2), F(1, 2)), (F(1, 5), F(0))])
def test_dd_g2_closed_form(a, b):
    value = dd_metric(G2, W, mu_a(a), mu_a(b))
    assert value == abs(a - b)
    assert float(value) == pytest.approx(oracles.g2_dd(float(a), float(b)), abs=1e-9)


@given(st.integers(0, 10 ** 6))
def test_dd_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 6)))
    w = m.reference_form()
    mus = [ma(m, w, m.random_psh(rng, w)) for _ in range(3)]
    d = {(i, j): float(dd_metric(m, w, mus[i], mus[j])) for i, j in itertools.permutations(range(3), 2)}
    assert d[0, 2] <= d[0, 1] + d[1, 2] + 1e-12
    assert d[0, 1] == pytest.approx(d[1, 0], abs=1e-12)


def test_dd_cutting_planes_bracket_toric():
    m = ToricModel(2, 4, [[1.0, -0.25], [-0.25, 1.2]])
    rng = np.random.default_rng(2)
    w = m.reference_form()
    mu, nu = ma(m, w, m.random_psh(rng, w)), ma(m, w, m.random_psh(rng, w))
    res = dd_metric_bracket(m, w, mu, nu)
    assert res.lower <= res.upper + 1e-12
    assert res.upper - res.lower <= 1e-6 * (1 + res.upper)


def test_dd_enumeration_agrees_with_cutting_planes():
    from pluripotential.measures import _dd_cutting_planes, _dd_enumerate
    rng = np.random.default_rng(9)
    m = random_graph(rng, 5, exact=False)
    w = m.reference_form()
    mu, nu = ma(m, w, m.random_psh(rng, w)), ma(m, w, m.random_psh(rng, w))
    g = mu - nu
    exact_route = float(_dd_enumerate(m, w, g, 1).value)
    planes = _dd_cutting_planes(m, w, g, 1, 1e-9)
    assert planes.lower - 1e-9 <= exact_route <= planes.upper + 1e-9


# -- envelopes, extended energy, Legendre duality -------------------------------------------

def test_envelope_g2():
    res = envelope(G2, W, vec(0, -2))
    assert list(res.phi) == [-1, -2]
    assert list(ma(G2, W, res.phi)) == [0, 1]
    assert res.defect == 0
    lap = oracles.laplacian(2, [(0, 1, 1)])
    assert list(oracles.graph_envelope_enum(lap, [1, 1], [F(0), F(-2)])) == [-1, -2]


@given(st.integers(0, 10 ** 6))
def test_envelope_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 6)))
    w = m.reference_form()
    f = m.random_function(rng) * 3
    res = envelope(m, w, f)
    lap = oracles.laplacian(m.carrier_size, m.edges)
    assert list(res.phi) == list(oracles.graph_envelope_enum(lap, w, f))
    assert res.defect == 0


def test_envelope_fixed_points_and_shift():
    f = vec(F(1, 3), 0)
    assert list(envelope(G2, W, f).phi) == list(f)
    g = vec(0, -2)
    assert list(envelope(G2, W, g + F(5, 7)).phi) == list(envelope(G2, W, g).phi + F(5, 7))


def test_e_tilde_g2():
    assert e_tilde(G2, W, vec(0, -2)) == F(-7, 4)
    f = vec(F(1, 2), 0)
    assert e_tilde(G2, W, f) == e_energy(G2, W, f)
    assert e_tilde(G2, W, vec(0, -2) + 3) == F(-7, 4) + 3
    assert orthogonality_defect(G2, W, vec(0, -2)) == 0
    assert orthogonality_defect(G2, W, f) == 0


def test_legendre_duality_g2():
    """inf over measures of J(nu) + int f nu equals e_tilde(f); checked on a grid
    of nu and attained at MA(env f)."""
    f = vec(0, -2)
    best = min(legendre_value(G2, W, f, mu_a(F(k, 64))) for k in range(65))
    assert best == e_tilde(G2, W, f)
    env = envelope(G2, W, f).phi
    assert legendre_value(G2, W, f, ma(G2, W, env)) == e_tilde(G2, W, f)


# -- maximizing sequences --------------------------------------------------------------------

def test_maximizing_sequence_g2():
    seq = maximizing_sequence(G2, W, mu_a(0), 5)
    assert seq[-1][2] == 0
    assert list(seq[-1][1]) == [0, 1]


def test_maximizing_sequence_reference_and_seeded():
    seq = maximizing_sequence(G2, W, mu_omega(G2, W), 3)
    assert all(list(psi) == [0, 0] for psi, _, _ in seq)
    phi = vec(F(1, 2), 0)
    seq = maximizing_sequence(G2, W, ma(G2, W, phi), 4, seed_potential=phi)
    assert all(v == 0 for _, _, v in seq)


def test_maximizing_sequence_toric_monotone():
    m = ToricModel(2, 4, [[1.0, -0.25], [-0.25, 1.2]])
    rng = np.random.default_rng(3)
    w = m.reference_form()
    mu = ma(m, w, m.random_psh(rng, w))
    seq = maximizing_sequence(m, w, mu, 6, seed_potential=m.zero_function())
    values = [v for _, _, v in seq]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert values[-1] <= 1e-7
