"""Points, traces, trace sets and trace-selecting rules.

A trace is a tuple of dense integer point ids. A trace set is indexed by
start point, end point and (start, end) pair; the selection rule stores one
probability per trace, since every trace belongs to exactly one ``Out(u)``.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    DuplicateTrace,
    EmptySet,
    InvalidRule,
    InvalidStochasticMatrix,
    InvalidTrace,
    NotEndless,
)

FLOAT_TOL = 1e-12


@dataclass(frozen=True)
class Point:
    id: int
    coords: tuple[int, int] | None = None
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label if self.label is not None else str(self.id)


class ChainState(NamedTuple):
    """State ``<T, i>`` of the full chain; ``1 <= index <= |T| - 1``."""

    trace: int
    index: int


class TraceSet:
    """An endless, duplicate-free collection of traces.

    Build through :func:`build_trace_set`, which validates the input. The
    instance is treated as immutable after construction.
    """

    def __init__(self, traces: tuple[tuple[int, ...], ...], points: tuple[Point, ...]):
        self.traces = traces
        self.points = points
        out: dict[int, list[int]] = {}
        inn: dict[int, list[int]] = {}
        trip: dict[tuple[int, int], list[int]] = {}
        for tid, t in enumerate(traces):
            out.setdefault(t[0], []).append(tid)
            inn.setdefault(t[-1], []).append(tid)
            trip.setdefault((t[0], t[-1]), []).append(tid)
        self.out_index = {u: tuple(v) for u, v in out.items()}
        self.in_index = {u: tuple(v) for u, v in inn.items()}
        self.trip_index = {k: tuple(v) for k, v in trip.items()}
        # P(T): points with at least one outgoing trace, sorted by id
        self.waypoints = tuple(sorted(self.out_index))
        self.state_offsets = tuple(accumulate((len(t) - 1 for t in traces), initial=0))

    def __len__(self) -> int:
        return len(self.traces)

    @property
    def state_count(self) -> int:
        """``|S(T)| = sum_T (|T| - 1)``."""
        return self.state_offsets[-1]

    def out(self, u: int) -> tuple[int, ...]:
        return self.out_index.get(u, ())

    def into(self, u: int) -> tuple[int, ...]:
        return self.in_index.get(u, ())

    def trips(self, u: int, v: int) -> tuple[int, ...]:
        return self.trip_index.get((u, v), ())

    def name(self, u: int) -> str:
        return self.points[u].name

    def state_index(self, s: ChainState) -> int:
        return self.state_offsets[s.trace] + s.index - 1

    def state_at(self, k: int) -> ChainState:
        t = bisect_right(self.state_offsets, k) - 1
        return ChainState(t, k - self.state_offsets[t] + 1)

    def states(self) -> Iterable[ChainState]:
        for tid, t in enumerate(self.traces):
            for i in range(1, len(t)):
                yield ChainState(tid, i)


def build_trace_set(
    traces: Iterable[Sequence[int]],
    points: Sequence[Point] | None = None,
) -> TraceSet:
    """Validate ``traces`` and build the indexed :class:`TraceSet`.

    When ``points`` is omitted, ids ``0..max`` become coordinate-free points.
    Raises ``EmptySet``, ``InvalidTrace``, ``DuplicateTrace`` or
    ``NotEndless`` (naming the first end point that starts no trace).
    """
    ts = tuple(tuple(int(p) for p in t) for t in traces)
    if not ts:
        raise EmptySet("trace set has no traces")
    top = max(max(t) for t in ts if t) if any(ts) else -1
    if points is None:
        points = tuple(Point(k) for k in range(top + 1))
    else:
        points = tuple(points)
        for k, p in enumerate(points):
            if p.id != k:
                raise InvalidTrace(f"point ids must be contiguous from 0; got {p.id} at position {k}")
        with_coords = sum(p.coords is not None for p in points)
        if with_coords not in (0, len(points)):
            raise InvalidTrace("either all points carry coordinates or none does")
    seen: set[tuple[int, ...]] = set()
    for t in ts:
        if len(t) < 2:
            raise InvalidTrace(f"trace {list(t)} has fewer than two points")
        for p in t:
            if p < 0 or p >= len(points):
                raise InvalidTrace(f"unknown point id {p}")
        if t in seen:
            raise DuplicateTrace(f"trace {list(t)} occurs twice")
        seen.add(t)
    starts = {t[0] for t in ts}
    for t in ts:
        if t[-1] not in starts:
            raise NotEndless(points[t[-1]].name)
    return TraceSet(ts, points)


@dataclass(frozen=True)
class SelectionRule:
    """``psi_u(T)`` stored per trace id: ``weights[T]`` is the probability of
    choosing ``T`` among ``Out(T_start)``."""

    weights: tuple
    exact: bool = True

    def psi(self, ts: TraceSet, u: int) -> dict[int, Fraction | float]:
        return {tid: self.weights[tid] for tid in ts.out(u)}


def make_rule(ts: TraceSet, weights: Sequence, exact: bool = True) -> SelectionRule:
    """Check that ``weights`` is a trace-selecting rule for ``ts``."""
    if len(weights) != len(ts):
        raise InvalidRule(f"expected {len(ts)} weights, got {len(weights)}")
    w = tuple(Fraction(x) if exact else float(x) for x in weights)
    for u in ts.waypoints:
        tot = 0
        for tid in ts.out(u):
            if w[tid] < 0:
                raise InvalidRule(f"negative probability for trace {tid}")
            tot += w[tid]
        if exact and tot != 1:
            raise InvalidRule(f"psi_{ts.name(u)} sums to {tot}")
        if not exact and abs(tot - 1.0) > 1e-9:
            raise InvalidRule(f"psi_{ts.name(u)} sums to {tot!r}")
    return SelectionRule(w, exact)


def uniform_rule(ts: TraceSet, exact: bool = True) -> SelectionRule:
    w = [None] * len(ts)
    for u in ts.waypoints:
        out = ts.out(u)
        p = Fraction(1, len(out)) if exact else 1.0 / len(out)
        for tid in out:
            w[tid] = p
    return SelectionRule(tuple(w), exact)


@dataclass(frozen=True)
class MTModel:
    trace_set: TraceSet
    rule: SelectionRule
    exact: bool = True
    _cum: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.rule.weights) != len(self.trace_set):
            raise InvalidRule("rule is not defined over this trace set")

    @property
    def state_count(self) -> int:
        return self.trace_set.state_count

    def psi(self, tid: int):
        return self.rule.weights[tid]

    def next_trace_table(self, u: int) -> tuple[tuple[int, ...], list[float]]:
        """Outgoing trace ids of ``u`` and their cumulative float weights."""
        if u not in self._cum:
            out = self.trace_set.out(u)
            cum = list(accumulate(float(self.rule.weights[t]) for t in out))
            cum[-1] = 1.0
            self._cum[u] = (out, cum)
        return self._cum[u]


def build_model(
    traces: Iterable[Sequence[int]],
    points: Sequence[Point] | None = None,
    weights: Sequence | None = None,
    exact: bool = True,
) -> MTModel:
    ts = build_trace_set(traces, points)
    rule = uniform_rule(ts, exact) if weights is None else make_rule(ts, weights, exact)
    return MTModel(ts, rule, exact)


def is_simple(ts: TraceSet) -> bool:
    """True iff no trace repeats a point at its counted indices ``1..|T|-1``."""
    return all(len(set(t[1:])) == len(t) - 1 for t in ts.traces)


def mtm_from_chain(
    transition,
    exact: bool = True,
    points: Sequence[Point] | None = None,
) -> MTModel:
    """One two-point trace ``(u, v)`` per positive entry, ``psi_u((u, v)) = p_uv``.

    ``transition`` is a square nested sequence or array; in exact mode the
    entries are converted with :class:`fractions.Fraction`.
    """
    rows = [list(r) for r in transition]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise InvalidStochasticMatrix("transition matrix must be square and non-empty")
    traces, weights = [], []
    for u, row in enumerate(rows):
        vals = [Fraction(x) if exact else float(x) for x in row]
        if any(x < 0 for x in vals):
            raise InvalidStochasticMatrix(f"negative entry in row {u}")
        tot = sum(vals)
        if (exact and tot != 1) or (not exact and abs(tot - 1.0) > FLOAT_TOL * n):
            raise InvalidStochasticMatrix(f"row {u} sums to {tot}")
        for v, p in enumerate(vals):
            if p > 0:
                traces.append((u, v))
                weights.append(p)
    if points is None:
        points = tuple(Point(k) for k in range(n))
    ts = build_trace_set(traces, points)
    return MTModel(ts, make_rule(ts, weights, exact), exact)


def step(mtm: MTModel, s: ChainState, rng: np.random.Generator) -> ChainState:
    """One transition of the full chain (deterministic move or next trace)."""
    t = mtm.trace_set.traces[s.trace]
    if s.index < len(t) - 1:
        return ChainState(s.trace, s.index + 1)
    out, cum = mtm.next_trace_table(t[-1])
    k = bisect_right(cum, rng.random())
    return ChainState(out[min(k, len(out) - 1)], 1)


def occurrences(t: Sequence[int]) -> dict[int, int]:
    """``#_{T,u}`` over the counted indices ``1..|T|-1``."""
    counts: dict[int, int] = {}
    for p in t[1:]:
        counts[p] = counts.get(p, 0) + 1
    return counts


def rule_from_mapping(ts: TraceSet, weights: Mapping[int, object], exact: bool = True) -> SelectionRule:
    """Per-start normalisation of relative trace weights (JSON ``{"weights": ...}``)."""
    w = [Fraction(str(weights.get(tid, 0))) if exact else float(weights.get(tid, 0)) for tid in range(len(ts))]
    for u in ts.waypoints:
        out = ts.out(u)
        tot = sum(w[t] for t in out)
        if tot <= 0:
            raise InvalidRule(f"no positive weight on traces leaving {ts.name(u)}")
        for t in out:
            w[t] = w[t] / tot
    return make_rule(ts, w, exact)
