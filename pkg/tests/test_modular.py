from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtm import chain
from mtm.distributions import destination, spatial
from mtm.errors import (
    EmptyRoute,
    EndpointMismatch,
    NotBalanced,
    NotStronglyConnected,
    OverlappingBundles,
    UnrepresentableSlowness,
)
from mtm.generators import random_route_system, tiny_route_system
from mtm.loaders import load_model
from mtm.modular import (
    INNER,
    LEAD,
    Bundle,
    BundlePath,
    Route,
    bundle_from_slowness,
    combine,
    dest_balanced,
    dest_general,
    expand_route_system,
    is_balanced_rs,
    lambda_balanced,
    lambda_general,
    load_route_system,
    make_route_system,
    shadow,
    spatial_balanced,
    spatial_general,
)

U, V, W = 0, 1, 2


def pipeline(rs, exact=True):
    m = expand_route_system(rs, exact)
    pi = chain.model_stationary(m)
    return m, pi, spatial(m, pi)


def test_shadow():
    assert shadow((U, U, V, W, W, W, U)) == (U, V, W, U)
    assert shadow((U,)) == (U,)
    assert shadow(shadow((U, V, V))) == shadow((U, V, V))


def test_combine():
    assert combine(Bundle.of([(0, 1)]), Bundle.of([(2, 3)])).items == (((0, 1, 2, 3), 1),)
    b1 = Bundle.of([(0, 1), (0, 0, 1)])
    b2 = Bundle.of([(2,), (2, 2), (2, 2, 2)])
    c = combine(b1, b2)
    assert c.size == 6 and c.shadow == (0, 1, 2)
    with pytest.raises(OverlappingBundles):
        combine(b1, Bundle.of([(1, 2)]))


def test_tiny_expansion():
    m = expand_route_system(tiny_route_system())
    ts = m.trace_set
    psi = dict(zip(ts.traces, m.rule.weights))
    assert psi == {(0, 1): Fraction(1, 2), (0, 0, 1): Fraction(1, 2), (1, 0): 1}


def test_multiplicity_doubles_weight():
    b = Bundle.of([(0, 1), (0, 1), (0, 0, 1)])
    back = Bundle.of([(1, 0)])
    m = expand_route_system(make_route_system([Route.of([b]), Route.of([back])], 2))
    psi = dict(zip(m.trace_set.traces, m.rule.weights))
    assert psi[(0, 1)] == 2 * psi[(0, 0, 1)] == Fraction(2, 3)


def test_route_errors():
    with pytest.raises(EmptyRoute):
        Route(())
    with pytest.raises(EndpointMismatch):
        Route.of([Bundle.of([(0, 1)])], [Bundle.of([(0, 2)])])
    with pytest.raises(OverlappingBundles):
        BundlePath((Bundle.of([(0, 1)]), Bundle.of([(1, 2)])))


def test_balance():
    assert is_balanced_rs(tiny_route_system())
    b = Bundle.of([(0, 1)])
    rs = make_route_system([Route.of([b]), Route.of([b]), Route.of([Bundle.of([(1, 0)])])], 2)
    assert not is_balanced_rs(rs)
    with pytest.raises(NotBalanced):
        spatial_balanced(rs)
    two = make_route_system([Route.of([Bundle.of([(a, b)])]) for a, b in [(0, 1), (1, 0), (2, 3), (3, 2)]], 4)
    with pytest.raises(NotStronglyConnected):
        spatial_balanced(two)


def test_tiny_closed_forms():
    rs = tiny_route_system()
    assert spatial_balanced(rs) == {0: Fraction(3, 5), 1: Fraction(2, 5)}
    assert lambda_balanced(rs) == Fraction(5, 2)
    m, pi, _ = pipeline(rs)
    for u in (0, 1):
        assert dest_balanced(rs, u) == destination(m, pi, u)


def test_slowness_bundles():
    assert bundle_from_slowness((0, 1), [1, 1]).items == (((0, 1), 1),)
    assert bundle_from_slowness((0, 1), [2, 1]).items == (((0, 0, 1), 1),)
    b = bundle_from_slowness((0, 1), [Fraction(3, 2), 1])
    assert sorted(s for s, _ in b.items) == [(0, 0, 1), (0, 1)]
    assert Fraction(b.counts(INNER)[0], b.size) == Fraction(3, 2)
    with pytest.raises(UnrepresentableSlowness):
        bundle_from_slowness((0, 1), [Fraction(1, 1) + Fraction(1, 97), 1])
    with pytest.raises(UnrepresentableSlowness):
        bundle_from_slowness((0, 1), [Fraction(1, 2), 1])


def test_load_route_system_json():
    data = {
        "points": ["a", "b"],
        "bundles": {"out": {"shadow": ["a", "b"], "slowness": ["3/2", 1]}, "back": {"segments": [["b", "a"]]}},
        "routes": [{"paths": [{"bundles": ["out"]}]}, {"paths": [{"bundles": ["back"]}]}],
    }
    rs = load_route_system(data)
    assert spatial_balanced(rs) == {0: Fraction(3, 5), 1: Fraction(2, 5)}
    m, rs2 = load_model(data)
    assert rs2 is not None and m.state_count == 4


def test_unbalanced_three_points():
    r = lambda *segs: Route.of([Bundle.of(segs)])
    rs = make_route_system([r((0, 1)), r((1, 2, 2)), r((2, 0)), r((0, 2)), r((1, 0, 0))], 3)
    assert not is_balanced_rs(rs)
    m = expand_route_system(rs, exact=False)
    pi = chain.model_stationary(m)
    sp = spatial(m, pi)
    sigma = chain.stationary_kernel(chain.build_kernel(m))
    closed = spatial_general(rs, sigma, exact=False)
    assert max(abs(sp[u] - closed[u]) for u in range(3)) < 1e-12
    for u in range(3):
        d = dest_general(rs, sigma, u, exact=False)
        ref = destination(m, pi, u)
        assert max(abs(d.get(v, 0) - ref.get(v, 0)) for v in range(3)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_balanced_closed_form_equals_pipeline(seed):
    rs = random_route_system(np.random.default_rng(seed), 5, balanced=True)
    m, pi, sp = pipeline(rs)
    closed = spatial_balanced(rs)
    assert {u: p for u, p in sp.items() if p} == {u: p for u, p in closed.items() if p}
    assert sum(closed.values()) == 1
    sigma = chain.stationary_kernel(chain.build_kernel(m))
    assert spatial_general(rs, sigma) == closed
    assert lambda_general(rs, sigma) * len(rs.routes) == lambda_balanced(rs)
    lam = chain.lambda_psi(m)
    sd = sigma.as_dict()
    assert lambda_general(rs, sigma) == sum(sd[u] * lam[u] for u in sd)
    u = max(closed, key=closed.get)
    assert dest_balanced(rs, u) == destination(m, pi, u)


@st.composite
def bundle_paths(draw):
    k = draw(st.integers(1, 3))
    pts = iter(range(100))
    bundles = []
    for _ in range(k):
        sh = [next(pts) for _ in range(draw(st.integers(1, 3)))]
        segs = draw(st.lists(st.lists(st.integers(1, 3), min_size=len(sh), max_size=len(sh)), min_size=1, max_size=3))
        bundles.append(Bundle.of([[p for p, r in zip(sh, reps) for _ in range(r)] for reps in segs]))
    return BundlePath(tuple(bundles))


@settings(max_examples=60, deadline=None)
@given(bundle_paths())
def test_assembled_counts_decompose_by_role(path):
    d = path.derived()
    assert d.size == path.derived_size
    assert d.shadow == sum((b.shadow for b in path.bundles), ())
    lhs = {}
    for seg, mult in d.items:
        for p in seg[1:]:
            lhs[p] = lhs.get(p, 0) + mult
    rhs = {}
    for b, role in path.roles():
        for p, c in b.counts(role).items():
            rhs[p] = rhs.get(p, 0) + Fraction(c, b.size) * d.size
    assert lhs == rhs
    assert [r for _, r in path.roles()] == [LEAD] + [INNER] * (len(path.bundles) - 1)
