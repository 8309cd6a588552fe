"""Stationary spatial and destination distributions.

Occurrences of a point in a trace are counted at indices ``1..|T|-1``: the
start is excluded and the end included, which is exactly the set of indices
carrying a full-chain state.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .chain import FLOAT_RESIDUAL_TOL, StationaryVector, full_residual
from .errors import NotStationaryInput, ZeroSpatialMass
from .traces import MTModel, TraceSet, occurrences


def _first_state_mass(mtm: MTModel, pi: StationaryVector | Sequence, check: bool) -> list:
    if check:
        res = full_residual(mtm, pi)
        if (mtm.exact and res != 0) or (not mtm.exact and res > FLOAT_RESIDUAL_TOL):
            raise NotStationaryInput(f"pi is not stationary (residual {float(res):.3e})")
    x = pi.values if isinstance(pi, StationaryVector) else tuple(pi)
    offs = mtm.trace_set.state_offsets
    return [x[offs[t]] for t in range(len(mtm.trace_set))]


def spatial(mtm: MTModel, pi: StationaryVector | Sequence, check: bool = True) -> dict[int, object]:
    """Probability that the agent occupies each point, keyed by point id."""
    first = _first_state_mass(mtm, pi, check)
    zero = Fraction(0) if mtm.exact else 0.0
    out: dict[int, object] = {}
    for tid, t in enumerate(mtm.trace_set.traces):
        for u, c in occurrences(t).items():
            out[u] = out.get(u, zero) + c * first[tid]
    return dict(sorted(out.items()))


def destination(mtm: MTModel, pi: StationaryVector | Sequence, u: int, check: bool = True) -> dict[int, object]:
    """Distribution of the current trace's end point given the agent is at ``u``."""
    first = _first_state_mass(mtm, pi, check)
    zero = Fraction(0) if mtm.exact else 0.0
    acc: dict[int, object] = {}
    for tid, t in enumerate(mtm.trace_set.traces):
        c = t[1:].count(u)
        if c:
            acc[t[-1]] = acc.get(t[-1], zero) + c * first[tid]
    mass = sum(acc.values(), zero)
    if mass == 0:
        raise ZeroSpatialMass(f"no stationary mass at point {mtm.trace_set.name(u)}")
    return {v: w / mass for v, w in sorted(acc.items())}


def visiting_traces(ts: TraceSet, u: int) -> list[int]:
    """Ids of traces that hold ``u`` at a counted index."""
    return [tid for tid, t in enumerate(ts.traces) if u in t[1:]]


def spatial_simple_uniform(ts: TraceSet) -> dict[int, Fraction]:
    """``|T_u| / |S(T)|``, valid for simple models with uniform pi."""
    counts: dict[int, int] = {}
    for t in ts.traces:
        for u in set(t[1:]):
            counts[u] = counts.get(u, 0) + 1
    s = ts.state_count
    return {u: Fraction(c, s) for u, c in sorted(counts.items())}


def destination_simple_uniform(ts: TraceSet, u: int) -> dict[int, Fraction]:
    """``Gamma_u(v) / Gamma_u`` for simple models with uniform pi."""
    ends: dict[int, int] = {}
    for tid in visiting_traces(ts, u):
        v = ts.traces[tid][-1]
        ends[v] = ends.get(v, 0) + 1
    total = sum(ends.values())
    if total == 0:
        raise ZeroSpatialMass(f"no trace visits point {ts.name(u)}")
    return {v: Fraction(c, total) for v, c in sorted(ends.items())}
