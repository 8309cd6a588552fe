"""Vectorised Monte Carlo agents over the full chain of an MTM.

Every random draw is a hash of ``(seed, agent, draw)``, so an agent's path
depends only on those three numbers and results do not change with the
number of threads or the chunking of agents.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .chain import StationaryVector
from .errors import MTMError, MismatchedSupport
from .export import render
from .traces import MTModel

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
CHUNK = 1 << 16
# draw ids 0 and 1 seed the initial state; step t uses draw 2 + t
_FIRST_STEP_DRAW = 2


def _splitmix(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def uniforms(seed: int, agents: np.ndarray, draw: int) -> np.ndarray:
    """Doubles in ``[0, 1)`` for each agent id at one draw index."""
    with np.errstate(over="ignore"):
        key = _splitmix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _splitmix(np.full(1, draw, dtype=np.uint64)))
        h = _splitmix(agents.astype(np.uint64) * _GOLDEN ^ key)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class SimConfig:
    agents: int
    steps: int
    warmup: int = 0
    seed: int = 0
    start: str = "stationary"
    start_state: int = 0

    def __post_init__(self):
        if self.agents < 1:
            raise MTMError("agents must be at least 1")
        if not 0 <= self.warmup < self.steps:
            raise MTMError("warmup must be in [0, steps)")
        if self.start not in ("stationary", "fixed"):
            raise MTMError(f"unknown start {self.start!r}")

    @property
    def samples(self) -> int:
        return self.agents * (self.steps - self.warmup)


@dataclass
class EmpiricalHistogram:
    """``occupancy[u]`` and ``destinations[(u, v)]`` sample counts."""

    occupancy: np.ndarray
    destinations: dict[tuple[int, int], int]
    total: int

    def spatial(self) -> dict[int, float]:
        return {u: c / self.total for u, c in enumerate(self.occupancy.tolist()) if c}

    def destination(self, u: int) -> dict[int, float]:
        row = {v: c for (a, v), c in self.destinations.items() if a == u}
        tot = sum(row.values())
        return {v: c / tot for v, c in sorted(row.items())} if tot else {}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EmpiricalHistogram)
            and self.total == other.total
            and np.array_equal(self.occupancy, other.occupancy)
            and self.destinations == other.destinations
        )


class AliasTable:
    """Vose alias method over a finite discrete distribution."""

    def __init__(self, probs: Sequence[float]):
        p = np.asarray(probs, dtype=np.float64)
        n = len(p)
        p = p * n / p.sum()
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [k for k in range(n) if p[k] < 1.0]
        large = [k for k in range(n) if p[k] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            self.prob[s] = p[s]
            self.alias[s] = l
            p[l] = p[l] + p[s] - 1.0
            (small if p[l] < 1.0 else large).append(l)
        self.n = n

    def sample(self, u_col: np.ndarray, u_coin: np.ndarray) -> np.ndarray:
        col = np.minimum((u_col * self.n).astype(np.int64), self.n - 1)
        return np.where(u_coin < self.prob[col], col, self.alias[col])


class _Compiled:
    """Flat arrays for the vectorised step."""

    def __init__(self, mtm: MTModel):
        ts = mtm.trace_set
        self.n_points = len(ts.points)
        self.lengths = np.array([len(t) for t in ts.traces], dtype=np.int64)
        self.offsets = np.concatenate(([0], np.cumsum(self.lengths)[:-1]))
        self.flat = np.array([p for t in ts.traces for p in t], dtype=np.int64)
        self.ends = np.array([t[-1] for t in ts.traces], dtype=np.int64)
        # block b holds Out(waypoints[b]); keys are b + cumulative weight
        block_of = np.full(self.n_points, -1, dtype=np.int64)
        tids, keys = [], []
        for b, u in enumerate(ts.waypoints):
            block_of[u] = b
            out, cum = mtm.next_trace_table(u)
            tids.extend(out)
            keys.extend(b + c for c in cum[:-1])
            keys.append(b + 1.0)
        self.block_of = block_of
        self.tids = np.array(tids, dtype=np.int64)
        self.keys = np.array(keys, dtype=np.float64)
        self.state_offsets = np.array(ts.state_offsets[:-1], dtype=np.int64)

    def next_trace(self, at: np.ndarray, u: np.ndarray) -> np.ndarray:
        key = self.block_of[at] + u
        k = np.searchsorted(self.keys, key, side="right")
        return self.tids[np.minimum(k, len(self.tids) - 1)]

    def state_from_index(self, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = np.searchsorted(self.state_offsets, k, side="right") - 1
        return t, k - self.state_offsets[t] + 1


def _pi_values(pi) -> np.ndarray:
    vals = pi.values if isinstance(pi, StationaryVector) else pi
    return np.array([float(x) for x in vals], dtype=np.float64)


def _run_chunk(comp: _Compiled, alias: AliasTable | None, cfg: SimConfig, lo: int, hi: int):
    agents = np.arange(lo, hi, dtype=np.uint64)
    if alias is not None:
        k = alias.sample(uniforms(cfg.seed, agents, 0), uniforms(cfg.seed, agents, 1))
        trace, index = comp.state_from_index(k)
    else:
        trace, index = comp.state_from_index(np.full(hi - lo, cfg.start_state, dtype=np.int64))
    occ = np.zeros(comp.n_points, dtype=np.int64)
    dest_keys = []
    for t in range(cfg.steps):
        if t >= cfg.warmup:
            here = comp.flat[comp.offsets[trace] + index]
            occ += np.bincount(here, minlength=comp.n_points)
            dest_keys.append(here * comp.n_points + comp.ends[trace])
        if t == cfg.steps - 1:
            break
        done = index >= comp.lengths[trace] - 1
        index = np.where(done, 1, index + 1)
        if done.any():
            u = uniforms(cfg.seed, agents[done], _FIRST_STEP_DRAW + t)
            trace = trace.copy()
            trace[done] = comp.next_trace(comp.ends[trace[done]], u)
    keys, counts = np.unique(np.concatenate(dest_keys), return_counts=True)
    return occ, keys, counts


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("MTM_THREADS", "1")))
    except ValueError:
        return 1


def simulate(mtm: MTModel, pi, cfg: SimConfig, threads: int | None = None) -> EmpiricalHistogram:
    """Run ``cfg.agents`` independent agents and histogram steps ``warmup..steps-1``.

    ``pi`` (a full-chain :class:`StationaryVector` or sequence) is required
    for stationary starts and ignored otherwise.
    """
    comp = _Compiled(mtm)
    alias = None
    if cfg.start == "stationary":
        if pi is None:
            raise MTMError("stationary start needs the full-chain stationary vector")
        alias = AliasTable(_pi_values(pi))
    elif not 0 <= cfg.start_state < mtm.state_count:
        raise MTMError(f"start state {cfg.start_state} out of range")
    threads = thread_count() if threads is None else max(1, threads)
    bounds = [(lo, min(lo + CHUNK, cfg.agents)) for lo in range(0, cfg.agents, CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(lambda b: _run_chunk(comp, alias, cfg, *b), bounds))
    occ = np.zeros(comp.n_points, dtype=np.int64)
    dest: dict[tuple[int, int], int] = {}
    for o, keys, counts in parts:
        occ += o
        for k, c in zip(keys.tolist(), counts.tolist()):
            key = divmod(k, comp.n_points)
            dest[key] = dest.get(key, 0) + c
    return EmpiricalHistogram(occ, dict(sorted(dest.items())), cfg.samples)


@dataclass(frozen=True)
class Comparison:
    tv: float
    l1: float
    chi2_pvalue: float


def compare(h: EmpiricalHistogram, analytic: Mapping[int, object]) -> Comparison:
    """Total variation, L1 and chi-square p-value of ``h`` against ``analytic``."""
    support = {u for u, p in analytic.items() if p != 0}
    seen = {u for u, c in enumerate(h.occupancy.tolist()) if c}
    if any(u < 0 or u >= len(h.occupancy) for u in analytic):
        raise MismatchedSupport("analytic distribution names points outside the histogram")
    if seen - support:
        raise MismatchedSupport(f"samples at points with zero analytic mass: {sorted(seen - support)[:10]}")
    pts = sorted(support)
    expected = np.array([float(analytic[u]) for u in pts])
    observed = h.occupancy[pts].astype(np.float64)
    l1 = float(np.abs(observed / h.total - expected).sum())
    if len(pts) > 1:
        exp_counts = expected / expected.sum() * observed.sum()
        pvalue = float(stats.chisquare(observed, exp_counts).pvalue)
    else:
        pvalue = 1.0
    return Comparison(l1 / 2, l1, pvalue)


def histogram_table(h: EmpiricalHistogram, fmt: str = "csv") -> str:
    """Empirical occupancy with the ``point_id,probability`` columns of the analytic export."""
    rows = [(u, c / h.total) for u, c in enumerate(h.occupancy.tolist())]
    return render(("point_id", "probability"), rows, fmt)
