from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtm.chain import model_stationary
from mtm.distributions import destination, destination_simple_uniform, spatial, spatial_simple_uniform
from mtm.errors import NotStationaryInput, ZeroSpatialMass
from mtm.generators import random_strongly_connected_mtm, tiny_route_system
from mtm.manhattan import build_manhattan
from mtm.modular import expand_route_system
from mtm.traces import build_model


def test_manhattan_two_spatial():
    m = build_manhattan(2)
    assert spatial(m, model_stationary(m)) == {u: Fraction(1, 4) for u in range(4)}


def test_manhattan_two_destination_at_corner():
    m = build_manhattan(2)
    d = destination(m, model_stationary(m), 0)
    assert d == {0: Fraction(4, 6), 1: Fraction(1, 6), 2: Fraction(1, 6)}


def test_tiny_spatial():
    m = expand_route_system(tiny_route_system())
    assert spatial(m, model_stationary(m)) == {0: Fraction(3, 5), 1: Fraction(2, 5)}


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_shortcuts_match_general(n):
    m = build_manhattan(n)
    pi = model_stationary(m)
    assert spatial(m, pi) == spatial_simple_uniform(m.trace_set)
    for u in (0, n + 1, n * n - 1):
        assert destination(m, pi, u) == destination_simple_uniform(m.trace_set, u)


def test_rejects_non_stationary_pi():
    m = build_model([(0, 1), (0, 0, 1), (1, 0)])
    with pytest.raises(NotStationaryInput):
        spatial(m, [Fraction(1, 4)] * 4)


def test_zero_mass_destination():
    # point 2 only starts a trace, so no state sits there
    m = build_model([(0, 1), (1, 0), (2, 0)])
    with pytest.raises(ZeroSpatialMass):
        destination(m, model_stationary(m), 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sums_to_one(seed):
    m = random_strongly_connected_mtm(np.random.default_rng(seed), 5)
    pi = model_stationary(m)
    s = spatial(m, pi)
    assert sum(s.values()) == 1
    for u, p in s.items():
        if p:
            assert sum(destination(m, pi, u).values()) == 1
