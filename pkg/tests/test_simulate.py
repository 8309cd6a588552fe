from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtm.chain import model_stationary
from mtm.distributions import spatial
from mtm.errors import MismatchedSupport, MTMError
from mtm.generators import random_strongly_connected_mtm, tiny_route_system
from mtm.manhattan import build_manhattan
from mtm.modular import expand_route_system
from mtm.simulate import (
    AliasTable,
    EmpiricalHistogram,
    SimConfig,
    compare,
    histogram_table,
    simulate,
    uniforms,
)


@pytest.fixture(scope="module")
def manhattan4():
    m = build_manhattan(4)
    pi = model_stationary(m)
    return m, pi, spatial(m, pi)


def hist(counts):
    c = np.array(counts, dtype=np.int64)
    return EmpiricalHistogram(c, {}, int(c.sum()))


def test_config_validation():
    with pytest.raises(MTMError):
        SimConfig(0, 5)
    with pytest.raises(MTMError):
        SimConfig(10, 5, warmup=5)
    assert SimConfig(10, 5, 2).samples == 30


def test_uniforms_are_deterministic_and_in_range():
    a = uniforms(3, np.arange(1000, dtype=np.uint64), 7)
    assert np.array_equal(a, uniforms(3, np.arange(1000, dtype=np.uint64), 7))
    assert not np.array_equal(a, uniforms(3, np.arange(1000, dtype=np.uint64), 8))
    assert a.min() >= 0 and a.max() < 1
    assert abs(a.mean() - 0.5) < 0.03


def test_alias_table_reproduces_weights():
    p = [0.1, 0.0, 0.6, 0.3]
    t = AliasTable(p)
    # exact mass carried by each column
    mass = np.zeros(4)
    for col in range(4):
        mass[col] += t.prob[col] / 4
        mass[t.alias[col]] += (1 - t.prob[col]) / 4
    assert mass == pytest.approx(p, abs=1e-15)


def test_compare_basics():
    h = hist([50, 50])
    assert compare(h, {0: Fraction(1, 2), 1: Fraction(1, 2)}).tv == 0
    c = compare(hist([100, 0]), {0: 0.5, 1: 0.5})
    assert c.tv == 0.5 and c.l1 == 1.0
    with pytest.raises(MismatchedSupport):
        compare(hist([10, 10]), {0: 1.0})
    with pytest.raises(MismatchedSupport):
        compare(hist([10, 10]), {0: 0.5, 5: 0.5})


def test_histogram_totals_and_determinism(manhattan4):
    m, pi, _ = manhattan4
    cfg = SimConfig(5000, 7, 2, seed=11)
    h = simulate(m, pi, cfg)
    assert int(h.occupancy.sum()) == h.total == 5000 * 5
    assert sum(h.destinations.values()) == h.total
    assert simulate(m, pi, cfg) == h
    assert simulate(m, pi, SimConfig(5000, 7, 2, seed=12)) != h


def test_thread_count_does_not_matter(manhattan4, monkeypatch):
    import mtm.simulate as sim

    m, pi, _ = manhattan4
    monkeypatch.setattr(sim, "CHUNK", 1000)
    cfg = SimConfig(7000, 4, 1, seed=5)
    assert simulate(m, pi, cfg, threads=1) == simulate(m, pi, cfg, threads=8)
    monkeypatch.setenv("MTM_THREADS", "3")
    assert simulate(m, pi, cfg) == simulate(m, pi, cfg, threads=1)


def test_stationary_start_close_to_exact(manhattan4):
    m, pi, sp = manhattan4
    h = simulate(m, pi, SimConfig(200_000, 1, 0, seed=1))
    c = compare(h, sp)
    assert c.tv < 0.02 and c.chi2_pvalue > 1e-3


def test_fixed_start_is_biased(manhattan4):
    m, pi, sp = manhattan4
    stat = compare(simulate(m, pi, SimConfig(20_000, 3, 0, seed=2)), sp).tv
    fixed = compare(simulate(m, None, SimConfig(20_000, 3, 0, seed=2, start="fixed")), sp).tv
    assert fixed > stat


def test_fixed_start_converges_with_warmup(manhattan4):
    m, _, sp = manhattan4
    # every move flips the parity of i + j, so average two consecutive steps
    h = simulate(m, None, SimConfig(50_000, 62, 60, seed=4, start="fixed"))
    assert compare(h, sp).tv < 0.02


def test_destination_histogram_matches_analytic():
    from mtm.distributions import destination

    m = expand_route_system(tiny_route_system())
    pi = model_stationary(m)
    h = simulate(m, pi, SimConfig(100_000, 3, 0, seed=9))
    emp = h.destination(0)
    ref = destination(m, pi, 0)
    assert max(abs(emp.get(v, 0) - float(p)) for v, p in ref.items()) < 0.01


def test_tv_decreases_with_samples():
    m = random_strongly_connected_mtm(np.random.default_rng(2), 6)
    pi = model_stationary(m)
    sp = spatial(m, pi)
    tvs = []
    for n in (10**4, 10**5, 10**6):
        tvs.append(np.median([compare(simulate(m, pi, SimConfig(n, 1, 0, seed=s)), sp).tv for s in range(3)]))
    assert tvs[0] > tvs[1] > tvs[2]


def test_histogram_export_mirrors_analytic(manhattan4):
    m, pi, _ = manhattan4
    h = simulate(m, pi, SimConfig(100, 2, 1))
    lines = histogram_table(h).splitlines()
    assert lines[0] == "point_id,probability" and len(lines) == 17


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**63 - 1))
def test_any_seed_reproducible(seed):
    m = expand_route_system(tiny_route_system())
    pi = model_stationary(m)
    cfg = SimConfig(300, 4, 1, seed=seed)
    assert simulate(m, pi, cfg) == simulate(m, pi, cfg, threads=2)
