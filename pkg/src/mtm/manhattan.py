"""Random way-point on an N x N grid with one-corner (Manhattan) paths.

Cell ``(i, j)`` has point id ``i * N + j``. Between two distinct cells the
trace set holds both one-corner paths (one when the cells share a row or a
column) and every trace is chosen uniformly.

Two counting conventions coexist:

* ``A``: a path visits every cell it lists, its start included, and each
  cell additionally owns one degenerate single-cell path. The closed forms
  ``manhattan_eta``, ``manhattan_gamma``, ``spatial_closed`` and
  ``dest_closed`` count this way.
* ``B``: occupancy of the full chain, i.e. indices ``1..|T|-1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import DegenerateConditioning, InvalidTrace
from .traces import MTModel, Point, build_trace_set, uniform_rule


class CountingConvention(str, enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class ManhattanParams:
    """Grid of side ``L`` split in cells of size ``eps``: ``N = ceil(L / eps)``."""

    L: float
    eps: float

    def __post_init__(self):
        if self.eps <= 0 or self.L <= 0:
            raise InvalidTrace("L and eps must be positive")
        if self.N < 2:
            raise InvalidTrace("the grid needs at least 2 cells per side")

    @property
    def N(self) -> int:
        return math.ceil(self.L / self.eps)


def _line(a: int, b: int) -> range:
    """Coordinates strictly after ``a`` up to ``b`` inclusive."""
    return range(a + 1, b + 1) if b > a else range(a - 1, b - 1, -1)


def manhattan_paths(N: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All one-corner paths between distinct cells, as coordinate tuples.

    Order: by source cell, then destination cell, then the path that moves
    along ``j`` first before the one that moves along ``i`` first.
    """
    for a in range(N):
        for b in range(N):
            for c in range(N):
                for d in range(N):
                    if (a, b) == (c, d):
                        continue
                    if a == c or b == d:
                        path = [(a, b)]
                        path += [(a, y) for y in _line(b, d)] if a == c else [(x, b) for x in _line(a, c)]
                        yield tuple(path)
                        continue
                    j_first = [(a, b)] + [(a, y) for y in _line(b, d)] + [(x, d) for x in _line(a, c)]
                    i_first = [(a, b)] + [(x, b) for x in _line(a, c)] + [(c, y) for y in _line(b, d)]
                    yield tuple(j_first)
                    yield tuple(i_first)


def build_manhattan(N: int, exact: bool = True) -> MTModel:
    if N < 2:
        raise InvalidTrace("N must be at least 2")
    points = [Point(i * N + j, (i, j)) for i in range(N) for j in range(N)]
    traces = [tuple(i * N + j for i, j in p) for p in manhattan_paths(N)]
    ts = build_trace_set(traces, points)
    return MTModel(ts, uniform_rule(ts, exact), exact)


# ------------------------------------------------------------ closed forms


def manhattan_eta(N: int, frm: tuple[int, int], at: tuple[int, int]) -> int:
    """Convention-A paths starting at ``frm`` that visit ``at``."""
    ip, jp = frm
    i, j = at
    if ip < i and jp < j:
        return 2 * N - i - j
    if ip > i and jp > j:
        return i + j + 2
    if ip < i and jp > j:
        return N + 1 - i + j
    if ip > i and jp < j:
        return N + 1 + i - j
    if ip == i and jp < j:
        return N * N - N * j
    if ip < i and jp == j:
        return N * N - N * i
    if ip == i and jp > j:
        return N + N * j
    if ip > i and jp == j:
        return N + N * i
    return 2 * N * N - 2 * N + 1


def manhattan_gamma(N: int, at: tuple[int, int]) -> int:
    """Convention-A visits of ``at`` summed over all sources."""
    i, j = at
    return (4 * N * N - 6 * N + 2) * (i + j) - (4 * N - 2) * (i * i + j * j) + 6 * N * N - 8 * N + 3


def state_count(N: int) -> int:
    """``|S(T)|`` of the Manhattan trace set."""
    num = (N**4 - N**2) * (4 * N - 2)
    assert num % 3 == 0
    return num // 3


def trace_count(N: int) -> int:
    """Two paths per non-collinear pair, one per collinear pair."""
    cells = N * N
    collinear = cells * 2 * (N - 1)
    return collinear + 2 * (cells * (cells - 1) - collinear)


def spatial_closed(N: int, i: int, j: int) -> Fraction:
    return Fraction(3 * manhattan_gamma(N, (i, j)), (N**4 - N**2) * (4 * N - 2))


def dest_closed(N: int, at: tuple[int, int], dest: tuple[int, int]) -> Fraction:
    return Fraction(manhattan_eta(N, dest, at), manhattan_gamma(N, at))


def states_b_closed(N: int, at: tuple[int, int]) -> int:
    """Convention-B visits of ``at``: drop the self path and the starts."""
    return manhattan_gamma(N, at) - 2 * N * (N - 1) - 1


# ------------------------------------------------------------------ oracles


def oracle_counts(N: int, convention: CountingConvention | str = "A") -> np.ndarray:
    """Brute-force ``count[source_cell, visited_cell]`` by walking every path."""
    convention = CountingConvention(convention)
    cells = N * N
    out = np.zeros((cells, cells), dtype=np.int64)
    skip = 0 if convention is CountingConvention.A else 1
    for p in manhattan_paths(N):
        s = p[0][0] * N + p[0][1]
        for i, j in p[skip:]:
            out[s, i * N + j] += 1
    if convention is CountingConvention.A:
        out[np.arange(cells), np.arange(cells)] += 1
    return out


def oracle_dest_counts(N: int) -> np.ndarray:
    """Brute-force convention-A ``count[visited_cell, end_cell]``."""
    cells = N * N
    out = np.zeros((cells, cells), dtype=np.int64)
    for p in manhattan_paths(N):
        e = p[-1][0] * N + p[-1][1]
        for i, j in p:
            out[i * N + j, e] += 1
    out[np.arange(cells), np.arange(cells)] += 1
    return out


def state_counts_b(N: int) -> np.ndarray:
    """Full-chain states per cell as an ``N x N`` integer array.

    For a source ``(a, b)``, the number of paths reaching cell ``(r, x)`` at a
    counted index is ``N f(x)`` on row ``a``, ``N g(r)`` on column ``b`` and
    ``f(x) + g(r)`` elsewhere, where ``f(x)`` counts the columns at or beyond
    ``x`` seen from ``b`` (and ``g`` the rows seen from ``a``).
    """
    idx = np.arange(N)
    total = np.zeros((N, N), dtype=np.int64)
    for a in range(N):
        g = np.where(idx > a, N - idx, np.where(idx < a, idx + 1, 0))
        for b in range(N):
            f = np.where(idx > b, N - idx, np.where(idx < b, idx + 1, 0))
            c = g[:, None] + f[None, :]
            c[a, :] = N * f
            c[:, b] = N * g
            total += c
    return total


def spatial_chain_exact(N: int) -> dict[tuple[int, int], Fraction]:
    """Exact full-chain occupancy per cell from ``state_counts_b``."""
    counts = state_counts_b(N)
    s = state_count(N)
    return {(i, j): Fraction(int(counts[i, j]), s) for i in range(N) for j in range(N)}


def closed_vs_exact_l1(N: int) -> Fraction:
    """L1 distance between the closed-form spatial values and full-chain occupancy."""
    exact = spatial_chain_exact(N)
    return sum((abs(spatial_closed(N, i, j) - p) for (i, j), p in exact.items()), Fraction(0))


# --------------------------------------------------------------- continuum


def density_spatial(L: float, x: float, y: float) -> float:
    return 3.0 / L**3 * (x + y) - 3.0 / L**4 * (x * x + y * y)


@dataclass(frozen=True)
class Cross:
    """Destination on a straight line through the conditioning point.

    ``side`` is one of ``south`` (y < y0), ``north`` (y > y0), ``west``
    (x < x0), ``east`` (x > x0) or ``origin``. Mass there is finite while the
    density is not; see :func:`cross_probabilities`.
    """

    side: str


def _dispersion(L: float, x0: float, y0: float) -> float:
    d = L * (x0 + y0) - x0 * x0 - y0 * y0
    if d <= 0:
        raise DegenerateConditioning(f"conditioning point ({x0}, {y0}) is a corner")
    return d


def density_dest(L: float, at: tuple[float, float], dest: tuple[float, float]) -> float | Cross:
    """Destination density (per unit area) given the agent is at ``at``."""
    x0, y0 = at
    x, y = dest
    d = _dispersion(L, x0, y0)
    if x == x0 and y == y0:
        return Cross("origin")
    if x == x0:
        return Cross("south" if y < y0 else "north")
    if y == y0:
        return Cross("west" if x < x0 else "east")
    if x < x0 and y < y0:
        num = 2 * L - x0 - y0
    elif x > x0 and y > y0:
        num = x0 + y0
    elif x < x0:
        num = L - x0 + y0
    else:
        num = L + x0 - y0
    return num / (4 * L * d)


def quadrant_masses(L: float, x0: float, y0: float) -> dict[str, float]:
    """Integrated density over the four open quadrants around ``(x0, y0)``."""
    d = _dispersion(L, x0, y0)
    k = 4 * L * d
    return {
        "low_low": x0 * y0 * (2 * L - x0 - y0) / k,
        "high_high": (L - x0) * (L - y0) * (x0 + y0) / k,
        "low_high": x0 * (L - y0) * (L - x0 + y0) / k,
        "high_low": (L - x0) * y0 * (L + x0 - y0) / k,
    }


@dataclass(frozen=True)
class CrossProbabilities:
    south: float
    west: float
    north: float
    east: float
    density_south: float
    density_west: float
    density_north: float
    density_east: float

    @property
    def total(self) -> float:
        return self.south + self.west + self.north + self.east


def cross_probabilities(L: float, x0: float, y0: float) -> CrossProbabilities:
    """Mass of the four half-lines through an interior point and their densities."""
    if not (0 < x0 < L and 0 < y0 < L):
        raise DegenerateConditioning(f"({x0}, {y0}) is not interior")
    d = _dispersion(L, x0, y0)
    ns = y0 * (L - y0) / (4 * d)
    we = x0 * (L - x0) / (4 * d)
    return CrossProbabilities(ns, we, ns, we, 1 / y0, 1 / x0, 1 / (L - y0), 1 / (L - x0))


def cross_probabilities_exact(x0: Fraction, y0: Fraction, L: Fraction = Fraction(1)) -> Fraction:
    """Sum of the four half-line masses in rational arithmetic."""
    d = L * (x0 + y0) - x0 * x0 - y0 * y0
    if d <= 0:
        raise DegenerateConditioning("corner")
    return 2 * (y0 * (L - y0) + x0 * (L - x0)) / (4 * d)


def discrete_cross_masses(N: int, at: tuple[int, int]) -> dict[str, Fraction]:
    """Closed-form destination mass on the four grid half-lines through ``at``."""
    i0, j0 = at
    out = {"south": Fraction(0), "north": Fraction(0), "west": Fraction(0), "east": Fraction(0)}
    for j in range(N):
        if j != j0:
            out["south" if j < j0 else "north"] += dest_closed(N, at, (i0, j))
    for i in range(N):
        if i != i0:
            out["west" if i < i0 else "east"] += dest_closed(N, at, (i, j0))
    return out


def cell_center(N: int, L: float, i: int, j: int) -> tuple[float, float]:
    return ((i + 0.5) * L / N, (j + 0.5) * L / N)
