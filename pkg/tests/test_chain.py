from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtm import chain
from mtm.errors import NotStationaryInput
from mtm.generators import random_stochastic_matrix, random_strongly_connected_mtm, tiny_route_system
from mtm.manhattan import build_manhattan, trace_count
from mtm.modular import expand_route_system
from mtm.traces import build_model, mtm_from_chain


def test_manhattan_kernel_diagonal():
    k = chain.build_kernel(build_manhattan(2))
    assert k.prob(0, 3) == Fraction(1, 2)


def test_cycle_kernel(cycle):
    k = chain.build_kernel(cycle)
    assert k.matrix().toarray().tolist() == [[0, 1], [1, 0]]


def test_lambda_psi():
    assert chain.lambda_psi(build_manhattan(2))[0] == Fraction(3, 2)
    assert chain.lambda_psi(build_model([(0, 1), (1, 0)])) == {0: 1, 1: 1}
    m = build_model([(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1)])
    assert set(chain.lambda_psi(m).values()) == {2}


@pytest.mark.parametrize("n", [2, 3, 4])
def test_manhattan_kernel_stationary(n):
    m = build_manhattan(n)
    sigma = chain.stationary_kernel(chain.build_kernel(m)).as_dict()
    tot = trace_count(n)
    assert sigma == {u: Fraction(len(m.trace_set.out(u)), tot) for u in range(n * n)}


def test_two_disjoint_cycles_not_unique():
    m = build_model([(0, 1), (1, 0), (2, 3), (3, 2)])
    s = chain.stationary_kernel(chain.build_kernel(m))
    assert not s.unique and len(s.basis) == 2
    assert chain.kernel_residual(chain.build_kernel(m), s) == 0
    assert not chain.is_strongly_connected(m)


def test_lift_manhattan_uniform():
    m = build_manhattan(2)
    pi = chain.model_stationary(m)
    assert set(pi.values) == {Fraction(1, 24)}
    sigma = chain.project_pi_to_sigma(m, pi)
    assert set(sigma.values) == {Fraction(1, 4)}


def test_lift_cycle(cycle):
    assert chain.model_stationary(cycle).values == (Fraction(1, 2), Fraction(1, 2))


def test_tiny_full_chain():
    m = expand_route_system(tiny_route_system())
    pi = chain.model_stationary(m)
    # states: (a,b)@1, (a,a,b)@1, (a,a,b)@2, (b,a)@1 in trace order
    assert sorted(pi.values) == [Fraction(1, 5)] * 3 + [Fraction(2, 5)]
    assert chain.stationary_full(m).values == pi.values


def test_not_stationary_inputs(cycle):
    m = build_model([(0, 1), (0, 0, 1), (1, 0)])
    with pytest.raises(NotStationaryInput):
        chain.lift_sigma_to_pi(m, {0: Fraction(1, 3), 1: Fraction(2, 3)})
    with pytest.raises(NotStationaryInput):
        chain.project_pi_to_sigma(m, [Fraction(1, 4)] * 4)


def test_uniformity_examples():
    r = chain.uniformity_test(build_manhattan(3))
    assert (r.uniformly_selective, r.balanced, r.uniform_stationary, r.solved_constant) == (True, True, True, True)
    r = chain.uniformity_test(build_model([(0, 1), (1, 0), (0, 2), (2, 0), (1, 2)]))
    assert (r.uniformly_selective, r.balanced, r.uniform_stationary, r.solved_constant) == (True, False, False, False)
    # balanced 3-point set, skewed choice at point 0
    traces = [(0, 1), (1, 0), (0, 2), (2, 0)]
    m = build_model(traces, weights=["3/4", 1, "1/4", 1])
    r = chain.uniformity_test(m)
    assert (r.uniformly_selective, r.balanced, r.uniform_stationary, r.solved_constant) == (False, True, False, False)
    assert len(set(chain.model_stationary(m).values)) > 1


def test_float_mode_matches_exact():
    rng = np.random.default_rng(3)
    m = random_strongly_connected_mtm(rng, 6)
    mf = build_model(m.trace_set.traces, weights=[float(w) for w in m.rule.weights], exact=False)
    pe = chain.model_stationary(m).values
    pf = chain.model_stationary(mf).values
    assert max(abs(float(a) - b) for a, b in zip(pe, pf)) < 1e-12
    assert chain.full_residual(mf, chain.model_stationary(mf)) < 1e-12


def test_power_iteration_agrees_with_direct(monkeypatch):
    rng = np.random.default_rng(5)
    m = random_strongly_connected_mtm(rng, 7, exact=False, skewed=False)
    direct = chain.stationary_kernel(chain.build_kernel(m)).values
    monkeypatch.setattr(chain, "DIRECT_LIMIT", 0)
    power = chain.stationary_kernel(chain.build_kernel(m)).values
    assert max(abs(a - b) for a, b in zip(direct, power)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_kernel_round_trip(seed, n):
    mat = random_stochastic_matrix(np.random.default_rng(seed), n)
    k = chain.build_kernel(mtm_from_chain(mat))
    assert [[k.prob(u, v) for v in range(n)] for u in range(n)] == mat
    for u in range(n):
        assert sum(k.rows[u].values()) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lift_project_inverse(seed):
    m = random_strongly_connected_mtm(np.random.default_rng(seed), 5)
    k = chain.build_kernel(m)
    sigma = chain.stationary_kernel(k)
    assert sigma.unique
    pi = chain.lift_sigma_to_pi(m, sigma)
    assert sum(pi.values) == 1
    assert chain.full_residual(m, pi) == 0
    assert chain.project_pi_to_sigma(m, pi).values == sigma.values
    assert chain.lift_sigma_to_pi(m, chain.project_pi_to_sigma(m, pi)).values == pi.values
    # constant along each trace
    ts = m.trace_set
    for tid, t in enumerate(ts.traces):
        off = ts.state_offsets[tid]
        assert len(set(pi.values[off : off + len(t) - 1])) == 1
