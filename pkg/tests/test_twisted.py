from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction as F

import numpy as np
from hypothesis import given, strategies as st

from pluripotential.core import dirichlet_j, ma, mu_omega
from pluripotential.graph import g2, random_graph
from pluripotential.measures import j_energy
from pluripotential.twisted import (PotentialCache, energy_t_derivative, fd_derivative_check,
                                    j_twisted, j_twisted_value, nabla_e)

G2 = g2()
W = G2.reference_form()
A = G2.asarray


def test_nabla_along_omega_is_j():
    phi = A([1, 0])
    assert nabla_e(G2, W, W, phi) == F(1, 4)
    assert nabla_e(G2, W, W, phi) == dirichlet_j(G2, W, phi, G2.zero_function())


def test_nabla_along_ddc():
    phi = psi = A([1, 0])
    assert nabla_e(G2, W, G2.ddc(psi), phi) == F(-1, 2)


def test_nabla_at_zero_potential():
    assert nabla_e(G2, W, A([1, 0]), G2.zero_function()) == 0


def test_nabla_matches_t_derivative_on_g2():
    phi = A([F(1, 3), 0])
    assert nabla_e(G2, W, A([2, 1]), phi, check=False) == energy_t_derivative(G2, W, A([2, 1]), phi)


def test_twisted_g2_examples():
    assert j_twisted_value(G2, W, W, A([0, 1])) == F(1, 4)
    assert j_twisted_value(G2, W, A([3, -1]), mu_omega(G2, W)) == 0


@given(st.integers(0, 10 ** 6))
def test_twisted_identities_on_graphs(seed):
    rng = np.random.default_rng(seed)
    m = random_graph(rng, int(rng.integers(2, 6)))
    w = m.reference_form()
    mu = ma(m, w, m.random_psh(rng, w))
    psi = m.random_function(rng)
    assert j_twisted_value(m, w, w, mu) == j_energy(m, w, mu).j_value
    assert j_twisted_value(m, w, m.ddc(psi), mu) == m.integrate(psi, mu - mu_omega(m, w))
    t1, t2 = m.random_cone_form(rng), m.random_cone_form(rng)
    lhs = j_twisted_value(m, w, 2 * t1 - 3 * t2, mu)
    assert lhs == 2 * j_twisted_value(m, w, t1, mu) - 3 * j_twisted_value(m, w, t2, mu)


def test_twisted_evaluation_fields():
    ev = j_twisted(G2, W, A([1, 0]), A([0, 1]))
    assert ev.v_theta == F(1, 2)
    assert list(ma(G2, W, ev.potential_used)) == [0, 1]


def test_fd_g2():
    rep = fd_derivative_check(G2, W, A([1, 0]), A([0, 1]))
    assert rep.deviation <= 1e-6


def test_fd_zero_direction():
    rep = fd_derivative_check(G2, W, G2.zero_form(), A([F(1, 5), F(4, 5)]))
    assert all(q == 0 for q in rep.quotients) and rep.deviation == 0


def test_fd_along_omega_converges_to_j():
    mu = A([F(1, 5), F(4, 5)])
    rep = fd_derivative_check(G2, W, W, mu)
    assert abs(rep.limit - float(j_energy(G2, W, mu).j_value)) <= 1e-6


def test_fd_skips_degenerate_steps():
    rep = fd_derivative_check(G2, W, A([-150, -150]), A([0, 1]))
    assert rep.skipped == [1e-2]


def test_cache_is_consistent_across_threads():
    cache = PotentialCache()
    calls = []

    def compute():
        calls.append(1)
        return A([1, 2])

    with ThreadPoolExecutor(8) as pool:
        out = list(pool.map(lambda _: cache.get_or_compute(G2, W, A([0, 1]), compute), range(64)))
    assert len(cache) == 1
    assert all(o is out[0] for o in out)
