from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mtm.chain import build_kernel
from mtm.errors import DuplicateTrace, EmptySet, InvalidRule, InvalidStochasticMatrix, InvalidTrace, NotEndless
from mtm.loaders import load_model
from mtm.manhattan import build_manhattan
from mtm.traces import (
    ChainState,
    Point,
    build_model,
    build_trace_set,
    is_simple,
    make_rule,
    mtm_from_chain,
    occurrences,
    step,
    uniform_rule,
)


def test_not_endless_names_the_point():
    with pytest.raises(NotEndless) as e:
        build_trace_set([(0, 1)], [Point(0, None, "a"), Point(1, None, "b")])
    assert str(e.value) == "point b"


def test_structural_errors():
    with pytest.raises(EmptySet):
        build_trace_set([])
    with pytest.raises(DuplicateTrace):
        build_trace_set([(0, 1), (1, 0), (0, 1)])
    with pytest.raises(InvalidTrace):
        build_trace_set([(0,), (0, 0)])
    with pytest.raises(InvalidTrace):
        build_trace_set([(0, 5), (5, 0)], [Point(0), Point(1)])
    with pytest.raises(InvalidTrace):
        build_trace_set([(0, 1), (1, 0)], [Point(0, (0, 0)), Point(1)])


def test_two_cycle_waypoints():
    ts = build_trace_set([(0, 1), (1, 0)])
    assert ts.waypoints == (0, 1)
    assert ts.state_count == 2


def test_manhattan_two_sizes():
    m = build_manhattan(2)
    assert len(m.trace_set) == 16
    assert m.state_count == 24
    # corner (0,0): two straight paths and two one-corner paths to (1,1)
    psi = m.rule.psi(m.trace_set, 0)
    assert len(psi) == 4 and set(psi.values()) == {Fraction(1, 4)}


def test_uniform_rule_cycle(cycle):
    assert cycle.rule.weights == (1, 1)


def test_rule_validation():
    ts = build_trace_set([(0, 1), (0, 0, 1), (1, 0)])
    with pytest.raises(InvalidRule):
        make_rule(ts, [Fraction(1, 2), Fraction(1, 3), 1])
    with pytest.raises(InvalidRule):
        make_rule(ts, [Fraction(3, 2), Fraction(-1, 2), 1])
    make_rule(ts, [0.5, 0.5, 1.0], exact=False)


def test_is_simple():
    assert is_simple(build_manhattan(3).trace_set)
    assert not is_simple(build_trace_set([(0, 1, 0, 1), (1, 0)]))
    assert is_simple(build_trace_set([(0, 1), (1, 0)]))


def test_mtm_from_chain_self_loop():
    m = mtm_from_chain([["1/2", "1/2"], [1, 0]])
    assert m.trace_set.traces == ((0, 0), (0, 1), (1, 0))
    k = build_kernel(m)
    assert (k.prob(0, 0), k.prob(0, 1), k.prob(1, 0)) == (Fraction(1, 2), Fraction(1, 2), 1)


def test_mtm_from_chain_rejects_bad_rows():
    with pytest.raises(InvalidStochasticMatrix):
        mtm_from_chain([[0, 1], [0, 0]])
    with pytest.raises(InvalidStochasticMatrix):
        mtm_from_chain([[0, 1], [2, -1]])
    with pytest.raises(InvalidStochasticMatrix):
        mtm_from_chain([[1]] + [[0]])


def test_step_deterministic_and_next_trace():
    m = build_model([(0, 1, 2, 0), (0, 2), (2, 0)])
    rng = np.random.default_rng(0)
    assert step(m, ChainState(0, 1), rng) == ChainState(0, 2)
    c = build_model([(0, 1), (1, 0)])
    assert step(c, ChainState(0, 1), rng) == ChainState(1, 1)


def test_step_next_trace_frequencies():
    m = build_model([(0, 1), (0, 0, 1), (0, 1, 1), (1, 0)], weights=["1/2", "1/3", "1/6", 1])
    rng = np.random.default_rng(7)
    n = 100_000
    cnt = Counter(step(m, ChainState(3, 1), rng).trace for _ in range(n))
    obs = [cnt[t] for t in range(3)]
    exp = [n / 2, n / 3, n / 6]
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_occurrences_excludes_start():
    assert occurrences((0, 0, 1, 0)) == {0: 2, 1: 1}


def test_loader_weights_and_labels():
    m, rs = load_model(
        {"points": ["a", "b"], "traces": [["a", "b"], ["a", "a", "b"], ["b", "a"]], "rule": {"weights": {"0": 1, "1": 3, "2": 5}}}
    )
    assert rs is None
    assert m.rule.weights == (Fraction(1, 4), Fraction(3, 4), 1)


def test_loader_reports_not_endless():
    with pytest.raises(NotEndless, match="point c"):
        load_model({"points": ["a", "b", "c"], "traces": [["a", "b"], ["b", "a"], ["a", "c"]]})


@st.composite
def endless_traces(draw):
    n = draw(st.integers(2, 6))
    traces = set()
    for u in range(n):
        v = (u + 1) % n
        inner = draw(st.lists(st.integers(0, n - 1), max_size=3))
        traces.add((u, *inner, v))
    extra = draw(st.lists(st.lists(st.integers(0, n - 1), min_size=2, max_size=5), max_size=6))
    traces.update(tuple(t) for t in extra)
    return sorted(traces)


@settings(max_examples=60, deadline=None)
@given(endless_traces())
def test_index_consistency(traces):
    ts = build_trace_set(traces)
    assert sum(len(ts.out(u)) for u in range(len(ts.points))) == len(ts)
    assert sum(len(ts.into(u)) for u in range(len(ts.points))) == len(ts)
    assert ts.state_count == sum(len(t) - 1 for t in traces)
    for k, s in enumerate(ts.states()):
        assert ts.state_index(s) == k and ts.state_at(k) == s


@settings(max_examples=60, deadline=None)
@given(endless_traces())
def test_uniform_rule_normalised(traces):
    ts = build_trace_set(traces)
    rule = uniform_rule(ts)
    for u in ts.waypoints:
        assert sum(rule.psi(ts, u).values()) == 1
