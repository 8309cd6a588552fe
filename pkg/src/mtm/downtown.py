"""City grid route system: one-way streets, parking stripes and cross-ways.

Layout
------
Street ``s`` (even, ``0..n``) starts at physical offset ``X(s) = (s/2)(4+m)``;
a cross-way is a 4 x 4 square without its corners and a block is 4 stripes
of ``m`` cells. Street coordinates ``(i, j)``: rows ``i`` grow downwards,
columns ``j`` rightwards; crosses have both even, horizontal blocks ``i``
even and ``j`` odd, vertical blocks the opposite.

Across a horizontal street the four physical rows are: negative parking,
negative (westbound) transit, positive (eastbound) transit, positive
parking. Across a vertical street the four columns are: positive parking,
positive (southbound) transit, negative (northbound) transit, negative
parking. Stripe index ``k`` grows along the driving direction of the
adjacent transit lane.

Inside a cross-way the lanes continue the transit stripes. A turn walks its
incoming lane until it meets the outgoing lane, then follows that lane out.

Routes
------
Driving directions are given for starts in horizontal blocks; starts in
vertical blocks are routed in the frame rotated a quarter turn
counter-clockwise and rotated back.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .errors import BoundaryCellNotCovered, InvalidTrace, MTMError, UnsupportedCoordinates
from .modular import (
    Bundle,
    BundlePath,
    Route,
    RouteSystem,
    bundle_from_slowness,
    lambda_balanced,
    make_route_system,
    spatial_balanced,
)
from .traces import Point

Slowness = Callable[[int], object]


def parse_slowness(spec: str) -> Slowness:
    """``const:<v>``, ``linear:<a>,<b>`` (``a + b k``) or ``table:<file>``.

    Numbers are read as exact rationals (``"3/2"`` and ``"1.5"`` both work).
    Table files hold one value per stripe index, separated by commas or
    whitespace.
    """
    kind, _, arg = spec.partition(":")
    try:
        if kind == "const":
            v = Fraction(arg)
            return lambda k: v
        if kind == "linear":
            a, b = (Fraction(x) for x in arg.split(","))
            return lambda k: a + b * k
        if kind == "table":
            vals = [Fraction(x) for x in Path(arg).read_text().replace(",", " ").split()]
            return lambda k: vals[k - 1]
    except (ValueError, ZeroDivisionError, OSError) as e:
        raise MTMError(f"bad slowness spec {spec!r}: {e}") from None
    raise MTMError(f"unknown slowness kind {kind!r}")


def _unit(k: int) -> int:
    return 1


@dataclass(frozen=True)
class DownTownParams:
    n: int
    m: int
    slk: Slowness = _unit
    wait: object = 1
    crc: object = 1

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise MTMError("n must be even and at least 2")
        if self.m < 1:
            raise MTMError("m must be at least 1")
        try:
            table = [self.slk(k) for k in range(1, self.m + 1)]
        except IndexError:
            raise MTMError(f"slowness table has fewer than m = {self.m} entries") from None
        if any(v < 1 for v in table) or self.wait < 1 or self.crc < 1:
            raise MTMError("slowness values must be at least 1")

    @property
    def parking_count(self) -> int:
        return self.m * self.n * (self.n + 2)

    @property
    def route_count(self) -> int:
        p = self.parking_count
        return p * (p - 2 * self.m)


# ----------------------------------------------------------------- keys


class BundleKey(NamedTuple):
    """``kind`` is one of ``T`` (transit), ``S`` (start), ``E`` (end), ``CH``/``CV``
    (straight through a cross-way), ``TH``/``TV`` (turn entering on a
    horizontal/vertical lane). ``signs`` holds one sign for T/CH/CV and two for
    the others: (parking stripe, travel) for S/E, (in, out) for turns."""

    kind: str
    signs: tuple[int, ...]
    i: int
    j: int
    k: int = 0

    def label(self) -> str:
        s = "".join("+" if x > 0 else "-" for x in self.signs)
        tail = f",{self.k}" if self.k else ""
        return f"{self.kind}{s}({self.i},{self.j}{tail})"


def is_hblock(i: int, j: int) -> bool:
    return i % 2 == 0 and j % 2 == 1


def is_vblock(i: int, j: int) -> bool:
    return i % 2 == 1 and j % 2 == 0


def is_cross(i: int, j: int) -> bool:
    return i % 2 == 0 and j % 2 == 0


def blocks(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n + 1) for j in range(n + 1) if is_hblock(i, j) or is_vblock(i, j)]


def parking_cells(p: DownTownParams) -> list[tuple[int, int, int, int]]:
    """``(i, j, stripe_sign, k)`` for every parking cell, in a fixed order."""
    return [(i, j, s, k) for i, j in blocks(p.n) for s in (1, -1) for k in range(1, p.m + 1)]


# ----------------------------------------------------------------- routes


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


def _ccw(n: int, i: int, j: int) -> tuple[int, int]:
    return n - j, i


def _cw(n: int, i: int, j: int) -> tuple[int, int]:
    return j, n - i


def _waypoints_hstart(i, j, sa, kk, z) -> list[tuple[int, int]]:
    """Corner points of the route from horizontal block ``(i, j)`` to block ``(kk, z)``."""
    if is_vblock(kk, z):
        return [(i, j), (i, z), (kk, z)]
    if z != j and kk == i:
        return [(i, j), (i, z)]
    if z != j:
        a = 1 if i < kk else -1
    else:
        a = 1 if sa > 0 else -1
    return [(i, j), (i, j + a), (kk, j + a), (kk, z)]


def route_waypoints(n: int, start: tuple[int, int, int], end: tuple[int, int]) -> list[tuple[int, int]]:
    """Corner points for a route from parking stripe ``start = (i, j, sign)``."""
    i, j, sa = start
    kk, z = end
    if is_hblock(i, j):
        return _waypoints_hstart(i, j, sa, kk, z)
    # vertical start: rotate the map so the start block is horizontal. A
    # vertical stripe sign is preserved by this rotation.
    ri, rj = _ccw(n, i, j)
    rk, rz = _ccw(n, kk, z)
    pts = _waypoints_hstart(ri, rj, sa, rk, rz)
    return [_cw(n, a, b) for a, b in pts]


def _lattice(waypoints: list[tuple[int, int]]) -> list[tuple[int, int]]:
    path = [waypoints[0]]
    for a, b in zip(waypoints, waypoints[1:]):
        if a[0] != b[0] and a[1] != b[1]:
            raise InvalidTrace(f"waypoints {a} and {b} are not on one street")
        di, dj = _sign(b[0] - a[0]), _sign(b[1] - a[1])
        cur = a
        while cur != b:
            cur = (cur[0] + di, cur[1] + dj)
            path.append(cur)
    return path


def route_keys(n: int, start: tuple[int, int, int, int], end: tuple[int, int, int, int]) -> list[BundleKey]:
    """Bundle keys of the single bundle-path between two parking cells."""
    i, j, sa, k1 = start
    kk, z, eb, k2 = end
    path = _lattice(route_waypoints(n, (i, j, sa), (kk, z)))
    steps = [(b[0] - a[0], b[1] - a[1]) for a, b in zip(path, path[1:])]

    def travel(step) -> tuple[str, int]:
        return ("H", step[1]) if step[1] else ("V", step[0])

    keys = [BundleKey("S", (sa, travel(steps[0])[1]), i, j, k1)]
    for t in range(1, len(path) - 1):
        ci, cj = path[t]
        ax_in, s_in = travel(steps[t - 1])
        ax_out, s_out = travel(steps[t])
        if is_cross(ci, cj):
            if ax_in == ax_out:
                keys.append(BundleKey("C" + ax_in, (s_in,), ci, cj))
            else:
                keys.append(BundleKey("T" + ax_in, (s_in, s_out), ci, cj))
        else:
            keys.append(BundleKey("T", (s_in,), ci, cj))
    keys.append(BundleKey("E", (eb, travel(steps[-1])[1]), kk, z, k2))
    return keys


def all_route_keys(p: DownTownParams) -> list[tuple[tuple, tuple, list[BundleKey]]]:
    """``(start_cell, end_cell, keys)`` for every ordered pair of parking cells in different blocks."""
    cells = parking_cells(p)
    out = []
    for a in cells:
        for b in cells:
            if a[:2] != b[:2]:
                out.append((a, b, route_keys(p.n, a, b)))
    return out


def all_bundle_keys(p: DownTownParams) -> list[BundleKey]:
    """The complete bundle inventory, including cross bundles no route uses."""
    n, m = p.n, p.m
    keys = []
    for i, j in blocks(n):
        for s in (1, -1):
            keys.append(BundleKey("T", (s,), i, j))
        for kind in ("S", "E"):
            for a in (1, -1):
                for b in (1, -1):
                    for k in range(1, m + 1):
                        keys.append(BundleKey(kind, (a, b), i, j, k))
    for i in range(0, n + 1, 2):
        for j in range(0, n + 1, 2):
            for s in (1, -1):
                keys.append(BundleKey("CH", (s,), i, j))
                keys.append(BundleKey("CV", (s,), i, j))
            for a in (1, -1):
                for b in (1, -1):
                    keys.append(BundleKey("TH", (a, b), i, j))
                    keys.append(BundleKey("TV", (a, b), i, j))
    return keys


# ---------------------------------------------------------------- geometry


@dataclass(frozen=True)
class DTCell:
    """A street cell. ``stripe`` is ``+``/``-`` in blocks; in cross-ways it is
    the (horizontal lane, vertical lane) sign pair with ``.`` for no lane.
    ``k`` is the stripe index in blocks and the 1..12 position in cross-ways
    (row-major, corners skipped)."""

    role: str
    i: int
    j: int
    stripe: str
    k: int
    row: int
    col: int


_CROSS_POS = [(r, c) for r in range(4) for c in range(4) if (r, c) not in {(0, 0), (0, 3), (3, 0), (3, 3)}]


def _sym(s: int) -> str:
    return "+" if s > 0 else "-"


class Geometry:
    """Physical cells of the grid and their dense point ids (row-major)."""

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m
        self.width = (n // 2) * (4 + m) + 4
        cells: dict[tuple[int, int], DTCell] = {}
        for i, j in blocks(n):
            for s in (1, -1):
                for k in range(1, m + 1):
                    r, c = self.transit(i, j, s, k)
                    cells[(r, c)] = DTCell("transit", i, j, _sym(s), k, r, c)
                    r, c = self.parking(i, j, s, k)
                    cells[(r, c)] = DTCell("parking", i, j, _sym(s), k, r, c)
        for i in range(0, n + 1, 2):
            for j in range(0, n + 1, 2):
                for pos, (r, c) in enumerate(_CROSS_POS, start=1):
                    h = {1: "-", 2: "+"}.get(r, ".")
                    v = {1: "+", 2: "-"}.get(c, ".")
                    R, C = self.x(i) + r, self.x(j) + c
                    cells[(R, C)] = DTCell("cross", i, j, h + v, pos, R, C)
        order = sorted(cells)
        self.cells = tuple(cells[rc] for rc in order)
        self.id_of = {rc: t for t, rc in enumerate(order)}

    def x(self, s: int) -> int:
        return (s // 2) * (4 + self.m)

    def _origin(self, i: int, j: int) -> tuple[int, int]:
        if is_hblock(i, j):
            return self.x(i), self.x(j - 1) + 4
        if is_vblock(i, j):
            return self.x(i - 1) + 4, self.x(j)
        raise UnsupportedCoordinates(f"({i}, {j}) is not a block")

    def transit(self, i: int, j: int, s: int, k: int) -> tuple[int, int]:
        r0, c0 = self._origin(i, j)
        m = self.m
        if is_hblock(i, j):
            return (r0 + 2, c0 + k - 1) if s > 0 else (r0 + 1, c0 + m - k)
        return (r0 + k - 1, c0 + 1) if s > 0 else (r0 + m - k, c0 + 2)

    def parking(self, i: int, j: int, s: int, k: int) -> tuple[int, int]:
        r0, c0 = self._origin(i, j)
        m = self.m
        if is_hblock(i, j):
            return (r0 + 3, c0 + k - 1) if s > 0 else (r0, c0 + m - k)
        return (r0 + k - 1, c0) if s > 0 else (r0 + m - k, c0 + 3)

    def pid(self, rc: tuple[int, int]) -> int:
        return self.id_of[rc]

    def points(self) -> tuple[Point, ...]:
        out = []
        for t, c in enumerate(self.cells):
            label = f"{c.role}:{c.i},{c.j}:{c.stripe}:{c.k}"
            out.append(Point(t, (c.row, c.col), label))
        return tuple(out)

    # lanes inside a cross-way, as (row, col) offsets in travel order
    _LANES = {
        ("H", 1): [(2, 0), (2, 1), (2, 2), (2, 3)],
        ("H", -1): [(1, 3), (1, 2), (1, 1), (1, 0)],
        ("V", 1): [(0, 1), (1, 1), (2, 1), (3, 1)],
        ("V", -1): [(3, 2), (2, 2), (1, 2), (0, 2)],
    }

    def cross_offsets(self, key: BundleKey) -> list[tuple[int, int]]:
        if key.kind in ("CH", "CV"):
            return list(self._LANES[(key.kind[1], key.signs[0])])
        ax_in = key.kind[1]
        ax_out = "V" if ax_in == "H" else "H"
        lane_in = self._LANES[(ax_in, key.signs[0])]
        lane_out = self._LANES[(ax_out, key.signs[1])]
        meet = next(t for t, rc in enumerate(lane_in) if rc in lane_out)
        rest = lane_out.index(lane_in[meet])
        return lane_in[: meet + 1] + lane_out[rest + 1 :]

    def shadow_cells(self, key: BundleKey) -> list[tuple[tuple[int, int], str, int]]:
        """``((row, col), role, stripe_index)`` along the bundle shadow."""
        i, j, m = key.i, key.j, self.m
        if key.kind in ("CH", "CV", "TH", "TV"):
            if not is_cross(i, j):
                raise UnsupportedCoordinates(f"({i}, {j}) is not a cross-way")
            x0, y0 = self.x(i), self.x(j)
            return [((x0 + r, y0 + c), "cross", 0) for r, c in self.cross_offsets(key)]

        def tr(s, ks):
            return [(self.transit(i, j, s, q), "transit", q) for q in ks]

        def pk(s, q):
            return (self.parking(i, j, s, q), "parking", q)

        if key.kind == "T":
            return tr(key.signs[0], range(1, m + 1))
        a, b = key.signs
        k = key.k
        if key.kind == "S":
            if a == b:
                return [pk(a, k)] + tr(a, range(k, m + 1))
            return [pk(a, k), (self.transit(i, j, a, k), "transit", k)] + tr(b, range(m + 1 - k, m + 1))
        if key.kind == "E":
            if a == b:
                return tr(b, range(1, k + 1)) + [pk(a, k)]
            return tr(b, range(1, m + 2 - k)) + [(self.transit(i, j, a, k), "transit", k), pk(a, k)]
        raise UnsupportedCoordinates(f"unknown bundle kind {key.kind}")


# ------------------------------------------------------------------ system


@dataclass
class DownTown:
    params: DownTownParams
    geometry: Geometry
    system: RouteSystem
    keys: dict[BundleKey, Bundle]
    route_keys: list[tuple[tuple, tuple, list[BundleKey]]] = field(repr=False)


def _bundle_for(p: DownTownParams, geo: Geometry, key: BundleKey) -> Bundle:
    cells = geo.shadow_cells(key)
    slow = []
    for _, role, q in cells:
        slow.append(p.slk(q) if role == "transit" else p.wait if role == "parking" else p.crc)
    return bundle_from_slowness([geo.pid(rc) for rc, _, _ in cells], slow)


def build_downtown(p: DownTownParams) -> DownTown:
    geo = Geometry(p.n, p.m)
    keys = {key: _bundle_for(p, geo, key) for key in all_bundle_keys(p)}
    rk = all_route_keys(p)
    routes = [Route.of(BundlePath(tuple(keys[k] for k in ks))) for _, _, ks in rk]
    named = {k.label(): b for k, b in keys.items()}
    rs = make_route_system(routes, geo.points(), named)
    return DownTown(p, geo, rs, keys, rk)


def sigma_b_counts(dt: DownTown) -> dict[BundleKey, int]:
    """Number of bundle-paths containing each bundle, by walking every route."""
    out = {k: 0 for k in dt.keys}
    for _, _, ks in dt.route_keys:
        for k in ks:
            out[k] += 1
    return out


def normalization_lambda(dt: DownTown, exact: bool = True, include_start: bool = False):
    """``Lambda_b / m^2`` of the built route system."""
    return lambda_balanced(dt.system, exact, include_start) / dt.params.m**2


# ------------------------------------------------- closed-form counts (claims)


def _eta(n: int, m: int, i: int, j: int) -> Fraction:
    if not (i % 2 == 0 and j % 2 == 1):
        return Fraction(0)
    m2 = m * m
    if 0 < i < n:
        return Fraction(m2 * (n - j + 1) * (n * j - (j + 1)) + m2 * (n - j - 1) * (n * j + 2 * j + n - i))
    if i == 0:
        return m2 * (n - j + 1) * (n * j - Fraction(3, 2) * (j + 1)) + m2 * (n - j - 1) * (n * j + 2 * j + n)
    if i == n:
        return m2 * (n - j + 1) * (n * j - Fraction(n + 1, 2) * (j + 1)) + m2 * (n - j - 1) * (n * j + 2 * j)
    return Fraction(0)


def _bt_plus(n, m, i, j) -> Fraction:
    if is_hblock(i, j):
        return _eta(n, m, i, j)
    if is_vblock(i, j):
        return _eta(n, m, j, i)
    return Fraction(0)


def _cr_hpp(n, m, i, j) -> Fraction:
    if is_cross(i, j) and i != n and j != 0:
        return Fraction(m * m * (n * n - n + (2 * n - 1) * j - (n - 1) * i - 2 * i * j))
    return Fraction(0)


def _cr_hp(n, m, i, j) -> Fraction:
    if not is_cross(i, j) or j in (0, n):
        return Fraction(0)
    m2 = m * m
    if 0 < i < n:
        return Fraction(m2 * (n - j) * (2 * n * j - i + j))
    if i == 0:
        return m2 * (n - j) * (2 * n * j + Fraction(j, 2))
    return m2 * (n - j) * (Fraction(3, 2) * j * (n + 1) - n)


def _cr_hpm(n, m, i, j) -> Fraction:
    if not is_cross(i, j) or j == 0:
        return Fraction(0)
    if 0 < i < n:
        return Fraction(m * m * (2 * i * j + i + j))
    if i == n:
        return Fraction(m * m * (n * j + n + j))
    return Fraction(0)


def sigma_b(p: DownTownParams, key: BundleKey) -> Fraction:
    """Closed-form bundle-path count for ``key``.

    Raises ``UnsupportedCoordinates`` when the key does not name a bundle of
    the grid (wrong parity or out of range).
    """
    n, m = p.n, p.m
    i, j = key.i, key.j
    if not (0 <= i <= n and 0 <= j <= n):
        raise UnsupportedCoordinates(f"({i}, {j}) outside the grid")
    kind, sg = key.kind, key.signs
    if kind in ("S", "E"):
        if not (is_hblock(i, j) or is_vblock(i, j)) or not 1 <= key.k <= m:
            raise UnsupportedCoordinates(f"{key.label()} is not a block bundle")
        t = j if is_hblock(i, j) else i
        half = Fraction(n, 2)
        table = {
            ("S", (1, 1)): (n + 1) * (n - t + 1) - 2,
            ("S", (-1, -1)): (n + 1) * (t + 1) - 2,
            ("S", (1, -1)): (n + 1) * t - 1,
            ("S", (-1, 1)): (n + 1) * (n - t) - 1,
            ("E", (1, 1)): (n + 1) * t + half - 1,
            ("E", (-1, -1)): (n + 1) * (n - t) + half - 1,
            ("E", (1, -1)): (n + 1) * (n - t) + half - 1,
            ("E", (-1, 1)): (n + 1) * t + half - 1,
        }
        return Fraction(m * table[(kind, sg)])
    if kind == "T":
        if not (is_hblock(i, j) or is_vblock(i, j)):
            raise UnsupportedCoordinates(f"{key.label()} is not a block bundle")
        return _bt_plus(n, m, i, j) if sg[0] > 0 else _bt_plus(n, m, n - j, i)
    if not is_cross(i, j):
        raise UnsupportedCoordinates(f"{key.label()} is not a cross-way bundle")
    if kind == "CH":
        return _cr_hp(n, m, i, j) if sg[0] > 0 else _cr_hp(n, m, n - i, n - j)
    if kind == "CV":
        return _cr_hp(n, m, n - j, i) if sg[0] > 0 else _cr_hp(n, m, j, n - i)
    turn = {
        ("TH", (1, 1)): lambda: _cr_hpp(n, m, i, j),
        ("TV", (1, -1)): lambda: _cr_hpp(n, m, n - j, i),
        ("TH", (-1, -1)): lambda: _cr_hpp(n, m, n - i, n - j),
        ("TV", (-1, 1)): lambda: _cr_hpp(n, m, j, n - i),
        ("TH", (1, -1)): lambda: _cr_hpm(n, m, i, j),
        ("TV", (1, 1)): lambda: _cr_hpm(n, m, n - j, i),
        ("TH", (-1, 1)): lambda: _cr_hpm(n, m, n - i, n - j),
        ("TV", (-1, -1)): lambda: _cr_hpm(n, m, j, n - i),
    }
    return turn[(kind, sg)]()


# ---------------------------------------------------- closed-form occupancy


def transit_closed(p: DownTownParams, lam, i: int, j: int, k: int) -> Fraction:
    """Positive eastbound transit cell ``k`` of block ``(i, j)``, ``0 < i < n``.

    ``lam`` is the normalisation ``Lambda_b / m^2``.
    """
    n, m = p.n, p.m
    if not is_hblock(i, j) or i in (0, n) or not 1 <= k <= m:
        raise BoundaryCellNotCovered(f"no closed form for transit cell ({i}, {j}, {k})")
    a = (n - j) * (2 * n * j + j + n - i - 1) + (n - 2) * j - Fraction(n, 2) + i - 2
    b = n * (n + 1) + Fraction(n, 2) - 2 * (n + 1) * j
    c = (n + 1) * (n + j) + n - 3
    return Fraction(p.slk(k)) / lam * (a + Fraction(k, m) * b + Fraction(c, m))


def parking_closed(p: DownTownParams, lam) -> Fraction:
    n = p.n
    return Fraction(p.wait) / lam * Fraction(2 * n * n + 4 * n - 4, p.m)


def cross_closed(p: DownTownParams, lam, i: int, j: int) -> Fraction:
    """Cross cell where the eastbound and northbound lanes meet, interior crosses only."""
    n = p.n
    if not is_cross(i, j) or i in (0, n) or j in (0, n):
        raise BoundaryCellNotCovered(f"no closed form for cross cell at ({i}, {j})")
    val = n * n * (2 * j + 2 * i + 3) - 2 * n * (j * j + i * i + j + i + 1) - (i - j) ** 2 + 2 * (i * j + j + i)
    return Fraction(p.crc) / lam * val


def closed_spatial(p: DownTownParams, lam, cell: DTCell) -> Fraction:
    """Closed-form occupancy of ``cell`` where one is available."""
    if cell.role == "parking":
        return parking_closed(p, lam)
    if cell.role == "transit":
        if cell.stripe != "+":
            raise BoundaryCellNotCovered("closed form covers the positive stripe only")
        return transit_closed(p, lam, cell.i, cell.j, cell.k)
    if cell.stripe != "+-":
        raise BoundaryCellNotCovered("closed form covers the (+,-) cross cell only")
    return cross_closed(p, lam, cell.i, cell.j)


# ------------------------------------------------------------------ errata


def errata_report(dt: DownTown, reference: dict[int, object], lam=None) -> dict:
    """Compare every closed form against route-walk counts and ``reference`` occupancy.

    ``reference`` maps point id to stationary occupancy (normally the
    balanced closed form on the built system, itself checked against the
    chain). Only mismatches are listed, with per-formula totals. Cell
    mismatches also carry ``all_cells``: the closed form and the reference
    recomputed with trace start cells counted, for comparison.
    """
    p = dt.params
    if lam is None:
        lam = normalization_lambda(dt)
    lam_all = normalization_lambda(dt, include_start=True)
    ref_all = spatial_balanced(dt.system, include_start=True)
    counts = sigma_b_counts(dt)
    entries = []
    totals: dict[str, dict[str, int]] = {}

    def record(formula, where, expected, actual, extra=None):
        t = totals.setdefault(formula, {"checked": 0, "mismatched": 0})
        t["checked"] += 1
        if expected != actual:
            t["mismatched"] += 1
            e = {"formula": formula, "where": where, "expected": _js(expected), "actual": _js(actual)}
            if extra:
                e["all_cells"] = extra
            entries.append(e)

    for key in sorted(counts, key=lambda k: (k.kind, k.signs, k.i, k.j, k.k)):
        record(f"sigma-B {key.kind}{''.join(_sym(s) for s in key.signs)}", key.label(), sigma_b(p, key), counts[key])
    for pid, cell in enumerate(dt.geometry.cells):
        try:
            expected = closed_spatial(p, lam, cell)
        except BoundaryCellNotCovered:
            continue
        where = f"{cell.role}({cell.i},{cell.j}){cell.stripe}{cell.k}"
        actual = reference.get(pid, Fraction(0))
        alt = {
            "expected": _js(closed_spatial(p, lam_all, cell)),
            "actual": _js(ref_all.get(pid, Fraction(0))),
        }
        record(f"spatial {cell.role}", where, expected, actual, alt)
    return {
        "n": p.n,
        "m": p.m,
        "lambda": _js(lam),
        "routes": len(dt.route_keys),
        "totals": totals,
        "mismatches": entries,
    }


def _js(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return x


def write_errata(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=1) + "\n")


def cell_rows(dt: DownTown, dist: dict[int, object]) -> list[tuple]:
    """``role,i,j,stripe,k,probability`` rows for every street cell."""
    zero = Fraction(0) if any(isinstance(v, Fraction) for v in dist.values()) else 0.0
    return [(c.role, c.i, c.j, c.stripe, c.k, dist.get(pid, zero)) for pid, c in enumerate(dt.geometry.cells)]
