"""Route systems: bundles of equal-shadow segments glued into routes.

Occurrence counts follow the full chain: on an assembled trace the first
cell is not counted. A bundle therefore contributes differently depending on
its role in a bundle-path: as the *lead* bundle (position 0) the first cell
of each of its segments is dropped, as an *inner* bundle every cell counts.
Counts are kept per (bundle, role) so the closed forms stay exact even when a
bundle appears in both roles.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

from scipy.sparse.csgraph import connected_components
import numpy as np
import scipy.sparse as sp

from .chain import StationaryVector
from .errors import (
    EmptyRoute,
    EndpointMismatch,
    InvalidTrace,
    MTMError,
    NotBalanced,
    NotEndless,
    NotStationaryInput,
    NotStronglyConnected,
    OverlappingBundles,
    UnrepresentableSlowness,
    ZeroSpatialMass,
)
from .traces import MTModel, Point, build_trace_set, make_rule

LEAD, INNER = 0, 1
SLOWNESS_DENOM_CAP = 64

Segment = tuple[int, ...]


def shadow(seg: Sequence[int]) -> tuple[int, ...]:
    """Collapse maximal runs of a repeated point."""
    out: list[int] = []
    for p in seg:
        if not out or out[-1] != p:
            out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class Bundle:
    """Multiset of segments sharing one shadow, stored as sorted ``(segment, multiplicity)``."""

    items: tuple[tuple[Segment, int], ...]
    shadow: tuple[int, ...]

    @classmethod
    def of(cls, segments: Iterable[Sequence[int]]) -> "Bundle":
        cnt = Counter(tuple(int(p) for p in s) for s in segments)
        if not cnt or any(len(s) == 0 for s in cnt):
            raise EmptyRoute("a bundle needs at least one non-empty segment")
        shadows = {shadow(s) for s in cnt}
        if len(shadows) != 1:
            raise InvalidTrace(f"segments of a bundle must share one shadow, got {sorted(shadows)}")
        return cls(tuple(sorted(cnt.items())), shadows.pop())

    @property
    def size(self) -> int:
        """``|B|`` counted with multiplicity."""
        return sum(m for _, m in self.items)

    def counts(self, role: int) -> dict[int, int]:
        """``#_{B,u}`` for every ``u``, with the lead role dropping each first cell."""
        out: Counter = Counter()
        skip = 1 if role == LEAD else 0
        for seg, m in self.items:
            for p in seg[skip:]:
                out[p] += m
        return dict(out)

    def total(self, role: int) -> int:
        """``#B``: summed occurrences in the given role."""
        skip = 1 if role == LEAD else 0
        return sum((len(s) - skip) * m for s, m in self.items)


def combine(b1: Bundle, b2: Bundle) -> Bundle:
    """All ``|b1| * |b2|`` concatenations."""
    if set(b1.shadow) & set(b2.shadow):
        raise OverlappingBundles(f"shadows {b1.shadow} and {b2.shadow} share a point")
    cnt: Counter = Counter()
    for (s1, m1), (s2, m2) in product(b1.items, b2.items):
        cnt[s1 + s2] += m1 * m2
    return Bundle(tuple(sorted(cnt.items())), b1.shadow + b2.shadow)


@dataclass(frozen=True)
class BundlePath:
    bundles: tuple[Bundle, ...]

    def __post_init__(self):
        if not self.bundles:
            raise EmptyRoute("a bundle-path needs at least one bundle")
        for a, b in zip(self.bundles, self.bundles[1:]):
            if set(a.shadow) & set(b.shadow):
                raise OverlappingBundles(f"consecutive shadows {a.shadow} and {b.shadow} overlap")

    @property
    def start(self) -> int:
        return self.bundles[0].shadow[0]

    @property
    def end(self) -> int:
        return self.bundles[-1].shadow[-1]

    @property
    def derived_size(self) -> int:
        """``|[[P]]| = prod |B_i|``."""
        return math.prod(b.size for b in self.bundles)

    def derived(self) -> Bundle:
        """The bundle ``B_1 . B_2 ... B_k`` of assembled traces."""
        out = self.bundles[0]
        for b in self.bundles[1:]:
            out = combine(out, b)
        return out

    def roles(self) -> Iterable[tuple[Bundle, int]]:
        for k, b in enumerate(self.bundles):
            yield b, LEAD if k == 0 else INNER


@dataclass(frozen=True)
class Route:
    """Multiset of bundle-paths with common endpoints, as ``(path, multiplicity)``."""

    paths: tuple[tuple[BundlePath, int], ...]

    def __post_init__(self):
        if not self.paths or any(m <= 0 for _, m in self.paths):
            raise EmptyRoute("a route needs at least one bundle-path with positive multiplicity")
        ends = {(p.start, p.end) for p, _ in self.paths}
        if len(ends) != 1:
            raise EndpointMismatch(f"bundle-paths of a route disagree on endpoints: {sorted(ends)}")

    @classmethod
    def of(cls, *paths: BundlePath | Sequence[Bundle]) -> "Route":
        cnt: dict[BundlePath, int] = {}
        for p in paths:
            bp = p if isinstance(p, BundlePath) else BundlePath(tuple(p))
            cnt[bp] = cnt.get(bp, 0) + 1
        return cls(tuple(cnt.items()))

    @property
    def start(self) -> int:
        return self.paths[0][0].start

    @property
    def end(self) -> int:
        return self.paths[0][0].end

    @property
    def size(self) -> int:
        return sum(m for _, m in self.paths)

    def role_counts(self) -> Counter:
        """``#_{R,B}`` split by role: ``{(bundle, role): count}``."""
        out: Counter = Counter()
        for p, m in self.paths:
            for b, role in p.roles():
                out[(b, role)] += m
        return out


@dataclass(frozen=True)
class RouteSystem:
    routes: tuple[Route, ...]
    points: tuple[Point, ...]
    bundles: Mapping[str, Bundle] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.routes:
            raise EmptyRoute("route system has no routes")
        starts = {r.start for r in self.routes}
        for r in self.routes:
            if r.end not in starts:
                raise NotEndless(self.points[r.end].name)

    def routes_from(self, u: int) -> list[Route]:
        return [r for r in self.routes if r.start == u]

    def out_counts(self) -> Counter:
        return Counter(r.start for r in self.routes)

    def in_counts(self) -> Counter:
        return Counter(r.end for r in self.routes)


def make_route_system(
    routes: Iterable[Route],
    points: Sequence[Point] | int | None = None,
    bundles: Mapping[str, Bundle] | None = None,
) -> RouteSystem:
    routes = tuple(routes)
    if points is None or isinstance(points, int):
        top = points if isinstance(points, int) else 1 + max(
            max(max(b.shadow) for b in p.bundles) for r in routes for p, _ in r.paths
        )
        points = tuple(Point(k) for k in range(top))
    return RouteSystem(routes, tuple(points), dict(bundles or {}))


# -------------------------------------------------------------- expansion


def expand_route_system(rs: RouteSystem, exact: bool = True) -> MTModel:
    """Induced MTM: distinct assembled traces with the three-level uniform rule."""
    one = Fraction(1) if exact else 1.0
    out_count = rs.out_counts()
    weight: dict[Segment, object] = {}
    for r in rs.routes:
        w_route = one / out_count[r.start] / r.size
        for p, m in r.paths:
            d = p.derived()
            w_path = w_route * m / d.size
            for t, mult in d.items:
                weight[t] = weight.get(t, 0) + w_path * mult
    traces = list(weight)
    ts = build_trace_set(traces, rs.points)
    return MTModel(ts, make_rule(ts, [weight[t] for t in traces], exact), exact)


def is_balanced_rs(rs: RouteSystem) -> bool:
    out, inn = rs.out_counts(), rs.in_counts()
    return all(out[u] == inn[u] for u in set(out) | set(inn))


def is_strongly_connected_rs(rs: RouteSystem) -> bool:
    """Route-level reachability; equals strong connectivity of the induced kernel."""
    starts = sorted(rs.out_counts())
    idx = {u: k for k, u in enumerate(starts)}
    r = [idx[x.start] for x in rs.routes]
    c = [idx[x.end] for x in rs.routes]
    g = sp.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(len(starts), len(starts)))
    n, _ = connected_components(g, directed=True, connection="strong")
    return n == 1


# ------------------------------------------------------------ closed forms


def _role_weights(rs: RouteSystem, route_weight, only_end: int | None = None, include_start: bool = False) -> dict:
    """``sum_R weight(R) #_{R,B,role} / |R|`` keyed by ``(bundle, role)``.

    ``include_start`` counts the first cell of every trace as well, i.e. all
    bundles behave as inner ones.
    """
    acc: dict = {}
    for r in rs.routes:
        if only_end is not None and r.end != only_end:
            continue
        w = route_weight(r)
        if w == 0:
            continue
        for (b, role), cnt in r.role_counts().items():
            key = (b, INNER if include_start else role)
            acc[key] = acc.get(key, 0) + w * cnt / r.size
    return acc


def _occupancy(acc: Mapping, exact: bool) -> dict[int, object]:
    """``sum_{B,role} (#_{B,u} / |B|) * acc[B, role]`` for every ``u``."""
    zero = Fraction(0) if exact else 0.0
    out: dict[int, object] = {}
    for (b, role), w in acc.items():
        size = b.size
        for u, c in b.counts(role).items():
            share = Fraction(c, size) if exact else c / size
            out[u] = out.get(u, zero) + share * w
    return out


def _lambda_from(acc: Mapping, exact: bool):
    zero = Fraction(0) if exact else 0.0
    tot = zero
    for (b, role), w in acc.items():
        tot += (Fraction(b.total(role), b.size) if exact else b.total(role) / b.size) * w
    return tot


def _check_balanced(rs: RouteSystem) -> None:
    if not is_balanced_rs(rs):
        raise NotBalanced("route system is not balanced")
    if not is_strongly_connected_rs(rs):
        raise NotStronglyConnected("route system is not strongly connected")


def lambda_balanced(rs: RouteSystem, exact: bool = True, include_start: bool = False):
    """``Lambda_b = sum_B (#B / |B|) sum_R #_{R,B} / |R|``."""
    one = Fraction(1) if exact else 1.0
    return _lambda_from(_role_weights(rs, lambda r: one, include_start=include_start), exact)


def spatial_balanced(rs: RouteSystem, exact: bool = True, include_start: bool = False) -> dict[int, object]:
    """Stationary occupancy of a balanced, strongly connected route system.

    With ``include_start`` the first cell of every trace is counted too; the
    result is then a normalised visit count, not the chain occupancy.
    """
    _check_balanced(rs)
    one = Fraction(1) if exact else 1.0
    acc = _role_weights(rs, lambda r: one, include_start=include_start)
    lam = _lambda_from(acc, exact)
    return {u: x / lam for u, x in sorted(_occupancy(acc, exact).items())}


def dest_balanced(rs: RouteSystem, u: int, exact: bool = True) -> dict[int, object]:
    """Destination distribution at ``u`` for a balanced system."""
    _check_balanced(rs)
    one = Fraction(1) if exact else 1.0
    return _dest_from(rs, u, lambda r: one, exact)


def _dest_from(rs: RouteSystem, u: int, route_weight, exact: bool) -> dict[int, object]:
    zero = Fraction(0) if exact else 0.0
    per_end = {}
    for v in sorted(rs.in_counts()):
        acc = _role_weights(rs, route_weight, only_end=v)
        x = _occupancy(acc, exact).get(u, zero)
        if x != 0:
            per_end[v] = x
    tot = sum(per_end.values(), zero)
    if tot == 0:
        raise ZeroSpatialMass(f"no stationary mass at point {rs.points[u].name}")
    return {v: x / tot for v, x in per_end.items()}


def _sigma_weight(rs: RouteSystem, sigma, exact: bool):
    d = sigma.as_dict() if isinstance(sigma, StationaryVector) else dict(sigma)
    out = rs.out_counts()
    if set(d) - set(out) and any(d[k] != 0 for k in set(d) - set(out)):
        raise NotStationaryInput("sigma puts mass on points that start no route")
    zero = Fraction(0) if exact else 0.0

    def w(r: Route):
        return d.get(r.start, zero) / out[r.start]

    return w


def lambda_general(rs: RouteSystem, sigma, exact: bool = True):
    """``sum_u sigma(u) Lambda(u)`` expressed through bundles."""
    return _lambda_from(_role_weights(rs, _sigma_weight(rs, sigma, exact)), exact)


def spatial_general(rs: RouteSystem, sigma, exact: bool = True) -> dict[int, object]:
    """Occupancy for any route system given its kernel stationary ``sigma``."""
    acc = _role_weights(rs, _sigma_weight(rs, sigma, exact))
    lam = _lambda_from(acc, exact)
    return {u: x / lam for u, x in sorted(_occupancy(acc, exact).items())}


def dest_general(rs: RouteSystem, sigma, u: int, exact: bool = True) -> dict[int, object]:
    return _dest_from(rs, u, _sigma_weight(rs, sigma, exact), exact)


# ---------------------------------------------------------------- slowness


def _as_fraction(x) -> Fraction:
    if isinstance(x, (Fraction, int)):
        f = Fraction(x)
    elif isinstance(x, str):
        f = Fraction(x)
    else:
        f = Fraction(x).limit_denominator(SLOWNESS_DENOM_CAP)
        if abs(float(f) - float(x)) > 1e-12:
            raise UnrepresentableSlowness(f"slowness {x!r} has no denominator <= {SLOWNESS_DENOM_CAP}")
    return f


def bundle_from_slowness(shadow_seq: Sequence[int], slowness: Sequence) -> Bundle:
    """Smallest bundle whose per-position average repetition equals ``slowness``.

    With ``q`` the common denominator, segment ``t`` (``0 <= t < q``) repeats
    position ``p`` ``floor(s_p) + [t < frac(s_p) * q]`` times.
    """
    if len(slowness) != len(shadow_seq):
        raise UnrepresentableSlowness("one slowness value per shadow position is required")
    if shadow(shadow_seq) != tuple(shadow_seq):
        raise InvalidTrace(f"{tuple(shadow_seq)} is not a shadow")
    fr = [_as_fraction(s) for s in slowness]
    if any(f < 1 for f in fr):
        raise UnrepresentableSlowness("slowness must be at least 1")
    q = math.lcm(*(f.denominator for f in fr))
    if q > SLOWNESS_DENOM_CAP:
        raise UnrepresentableSlowness(f"common denominator {q} exceeds {SLOWNESS_DENOM_CAP}")
    segs = []
    for t in range(q):
        seg: list[int] = []
        for p, f in zip(shadow_seq, fr):
            whole = f.numerator // f.denominator
            extra = (f - whole) * q
            seg.extend([p] * (whole + (1 if t < extra else 0)))
        segs.append(seg)
    return Bundle.of(segs)


# -------------------------------------------------------------------- JSON


def load_route_system(data: Mapping | str) -> RouteSystem:
    """Parse the JSON route-system format.

    ``{"points": [...], "bundles": {name: {"segments": [[...]]} |
    {"shadow": [...], "slowness": [...]}}, "routes": [{"paths":
    [{"bundles": [names], "multiplicity": k}], "multiplicity": k}]}``.
    Points may be given as objects ``{"id", "label"}`` or as bare labels;
    segments and shadows may name points by id or label.
    """
    if isinstance(data, str):
        data = json.loads(data)
    try:
        points, lookup = parse_points(data.get("points"))
        bundles: dict[str, Bundle] = {}
        for name, spec in data["bundles"].items():
            if "segments" in spec:
                bundles[name] = Bundle.of([[lookup(p) for p in s] for s in spec["segments"]])
            else:
                sh = [lookup(p) for p in spec["shadow"]]
                bundles[name] = bundle_from_slowness(sh, spec.get("slowness", [1] * len(sh)))
        routes = []
        for r in data["routes"]:
            paths = []
            for p in r["paths"]:
                bp = BundlePath(tuple(bundles[b] for b in p["bundles"]))
                paths.append((bp, int(p.get("multiplicity", 1))))
            route = Route(tuple(paths))
            routes.extend([route] * int(r.get("multiplicity", 1)))
    except (KeyError, TypeError) as e:
        raise InvalidTrace(f"malformed route system: {e}") from None
    if points is None:
        return make_route_system(routes, None, bundles)
    return make_route_system(routes, points, bundles)


def parse_points(raw):
    if raw is None:
        return None, int
    pts = []
    for k, p in enumerate(raw):
        if isinstance(p, Mapping):
            coords = tuple(p["coords"]) if p.get("coords") is not None else None
            pts.append(Point(int(p.get("id", k)), coords, p.get("label")))
        else:
            pts.append(Point(k, None, str(p)))
    by_label = {p.label: p.id for p in pts if p.label is not None}

    def lookup(x):
        if isinstance(x, str) and x in by_label:
            return by_label[x]
        try:
            return int(x)
        except ValueError:
            raise MTMError(f"unknown point {x!r}") from None

    return tuple(pts), lookup
