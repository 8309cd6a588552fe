"""Seeded random models used by the verification suites and tests."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .modular import Bundle, BundlePath, Route, RouteSystem, is_balanced_rs, make_route_system
from .traces import MTModel, Point, build_model, build_trace_set, make_rule


def random_stochastic_matrix(rng: np.random.Generator, n: int, density: float = 0.5, denom: int = 12) -> list[list[Fraction]]:
    """Rational row-stochastic matrix with random zeros; every row is non-empty."""
    rows = []
    for _ in range(n):
        mask = rng.random(n) < density
        mask[rng.integers(n)] = True
        w = np.where(mask, rng.integers(1, denom + 1, n), 0)
        tot = int(w.sum())
        rows.append([Fraction(int(x), tot) for x in w])
    return rows


def _random_walk_trace(rng, n_points: int, start: int, end: int, max_inner: int) -> tuple[int, ...]:
    inner = [int(x) for x in rng.integers(0, n_points, rng.integers(0, max_inner + 1))]
    return (start, *inner, end)


def random_strongly_connected_mtm(
    rng: np.random.Generator,
    n_points: int = 5,
    extra: int = 6,
    max_inner: int = 3,
    skewed: bool = True,
    exact: bool = True,
) -> MTModel:
    """A Hamiltonian cycle of traces plus random extra traces.

    Inner points are arbitrary, so traces may revisit points.
    """
    order = [int(x) for x in rng.permutation(n_points)]
    traces = set()
    for a, b in zip(order, order[1:] + order[:1]):
        traces.add(_random_walk_trace(rng, n_points, a, b, max_inner))
    for _ in range(extra):
        a, b = (int(x) for x in rng.integers(0, n_points, 2))
        traces.add(_random_walk_trace(rng, n_points, a, b, max_inner))
    traces = sorted(traces)
    ts = build_trace_set(traces)
    if not skewed:
        return build_model(traces, exact=exact)
    w = [Fraction(int(rng.integers(1, 6))) for _ in traces]
    for u in ts.waypoints:
        tot = sum(w[t] for t in ts.out(u))
        for t in ts.out(u):
            w[t] = w[t] / tot
    return MTModel(ts, make_rule(ts, w, exact), exact)


def uniformity_family(rng: np.random.Generator, count: int = 30) -> list[tuple[str, MTModel]]:
    """``count`` models cycling through {balanced, unbalanced} x {uniform, skewed}.

    Balanced sets are unions of directed cycles; unbalanced ones add one
    chord. Skewed rules are redrawn until at least one point with two or
    more outgoing traces gets unequal weights.
    """
    cells = [(b, s) for b in (True, False) for s in (False, True)]
    out = []
    while len(out) < count:
        balanced, skewed = cells[len(out) % 4]
        traces = _cycle_union(rng, int(rng.integers(3, 6)), balanced)
        ts = build_trace_set(traces)
        if skewed:
            w = _skewed_weights(rng, ts)
            if w is None:
                continue
            mtm = MTModel(ts, make_rule(ts, w), True)
        else:
            mtm = build_model(traces)
        tag = f"{'balanced' if balanced else 'unbalanced'}/{'skewed' if skewed else 'uniform'}"
        out.append((tag, mtm))
    return out


def _cycle_union(rng, n: int, balanced: bool) -> list[tuple[int, ...]]:
    while True:
        traces: set[tuple[int, ...]] = set()
        cycles = [list(range(n))] + [
            [int(x) for x in rng.choice(n, int(rng.integers(2, n + 1)), replace=False)] for _ in range(2)
        ]
        for cyc in cycles:
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                inner = tuple(int(x) for x in rng.integers(0, n, rng.integers(0, 3)))
                traces.add((a, *inner, b))
        if not balanced:
            a, b = (int(x) for x in rng.choice(n, 2, replace=False))
            traces.add((a, b))
        ins = {u: 0 for u in range(n)}
        outs = dict(ins)
        for t in traces:
            outs[t[0]] += 1
            ins[t[-1]] += 1
        if (ins == outs) == balanced:
            return sorted(traces)


def _skewed_weights(rng, ts) -> list[Fraction] | None:
    w = [Fraction(int(rng.integers(1, 5))) for _ in range(len(ts))]
    skew = False
    for u in ts.waypoints:
        out = ts.out(u)
        tot = sum(w[t] for t in out)
        vals = {w[t] for t in out}
        skew = skew or len(vals) > 1
        for t in out:
            w[t] = w[t] / tot
    return w if skew else None


def random_route_system(
    rng: np.random.Generator,
    n_points: int = 6,
    balanced: bool = True,
    n_cycles: int = 2,
    max_bundle_size: int = 2,
) -> RouteSystem:
    """Random strongly connected route system.

    Route endpoints follow a Hamiltonian cycle plus random cycles (balanced)
    or random chords (unbalanced). Bundles are pooled by shadow and reused,
    so one bundle can appear both first and later in different paths.
    """
    while True:
        order = [int(x) for x in rng.permutation(n_points)]
        edges = list(zip(order, order[1:] + order[:1]))
        for _ in range(n_cycles):
            cyc = [int(x) for x in rng.choice(n_points, int(rng.integers(2, n_points + 1)), replace=False)]
            edges += list(zip(cyc, cyc[1:] + cyc[:1]))
        if not balanced:
            for _ in range(2):
                a, b = (int(x) for x in rng.choice(n_points, 2, replace=False))
                edges.append((a, b))
        pool: dict[tuple[int, ...], Bundle] = {}
        routes = [_random_route(rng, n_points, a, b, pool, max_bundle_size) for a, b in edges]
        rs = make_route_system(routes, n_points)
        if is_balanced_rs(rs) == balanced:
            return rs


def _random_route(rng, n_points, a, b, pool, max_bundle_size) -> Route:
    paths = []
    for _ in range(int(rng.integers(1, 3))):
        others = [p for p in range(n_points) if p not in (a, b)]
        k = int(rng.integers(0, min(3, len(others)) + 1))
        mid = [int(x) for x in rng.choice(others, k, replace=False)] if k else []
        sh = [a, *mid, b]
        cuts = sorted(int(x) for x in rng.choice(np.arange(1, len(sh)), int(rng.integers(0, len(sh))), replace=False))
        chunks = [tuple(sh[i:j]) for i, j in zip([0, *cuts], [*cuts, len(sh)])]
        bundles = []
        for c in chunks:
            if c in pool and rng.random() < 0.6:
                bundles.append(pool[c])
                continue
            size = int(rng.integers(1, max_bundle_size + 1))
            segs = [[p for p in c for _ in range(int(rng.integers(1, 4)))] for _ in range(size)]
            bun = Bundle.of(segs)
            pool.setdefault(c, bun)
            bundles.append(bun)
        paths.append(BundlePath(tuple(bundles)))
    return Route.of(*paths)


def tiny_route_system() -> RouteSystem:
    """Two points ``a``, ``b``: bundle ``{(a,b), (a,a,b)}`` out and ``{(b,a)}`` back."""
    b1 = Bundle.of([(0, 1), (0, 0, 1)])
    b2 = Bundle.of([(1, 0)])
    return make_route_system(
        [Route.of([b1]), Route.of([b2])],
        [Point(0, None, "a"), Point(1, None, "b")],
        {"B1": b1, "B2": b2},
    )
