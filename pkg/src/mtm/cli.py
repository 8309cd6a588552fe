"""``mtm`` command line: builders, solvers, exports and oracle suites.

Exit codes: 0 success, 1 invalid input (one ``ClassName: message`` line on
stderr), 2 verification failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import chain, distributions, downtown, generators, manhattan, modular
from .errors import MTMError
from .export import destination_table, point_table, render
from .loaders import load_model
from .simulate import SimConfig, histogram_table, simulate
from .traces import mtm_from_chain

MAX_LISTED = 10


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _lookup_point(mtm, name: str) -> int:
    for p in mtm.trace_set.points:
        if p.name == name:
            return p.id
    try:
        u = int(name)
    except ValueError:
        raise MTMError(f"unknown point {name!r}") from None
    if not 0 <= u < len(mtm.trace_set.points):
        raise MTMError(f"unknown point {name!r}")
    return u


# ----------------------------------------------------------------- commands


def cmd_generic(args) -> int:
    exact = args.mode == "exact"
    mtm, _ = load_model(args.model, exact)
    pi = chain.model_stationary(mtm)
    parts = []
    if args.spatial or not args.dest:
        parts.append(point_table(distributions.spatial(mtm, pi), args.format))
    if args.dest:
        u = _lookup_point(mtm, args.dest)
        parts.append(destination_table(distributions.destination(mtm, pi, u), u, args.format))
    _emit("".join(parts), args.out)
    return 0


def cmd_manhattan(args) -> int:
    n = args.n
    if n < 2:
        raise MTMError("N must be at least 2")
    cells = [(i, j) for i in range(n) for j in range(n)]
    which = args.which or "both"
    exact_mode = args.mode == "exact"

    def conv(x: Fraction):
        return x if exact_mode else float(x)

    closed = {c: conv(manhattan.spatial_closed(n, *c)) for c in cells}
    if args.convention == "B":
        chain_exact = {c: conv(p) for c, p in manhattan.spatial_chain_exact(n).items()}
    else:
        # enumerated counts over the same |S| denominator as the closed form
        cnt = manhattan.oracle_counts(n, "A").sum(axis=0)
        tot = manhattan.state_count(n)
        chain_exact = {c: conv(Fraction(int(cnt[c[0] * n + c[1]]), tot)) for c in cells}
    if which == "closed-form":
        rows = [(i, j, closed[(i, j)]) for i, j in cells]
        header = ("i", "j", "probability")
    elif which == "exact":
        rows = [(i, j, chain_exact[(i, j)]) for i, j in cells]
        header = ("i", "j", "probability")
    else:
        rows = [(i, j, closed[(i, j)], chain_exact[(i, j)]) for i, j in cells]
        header = ("i", "j", "closed_form", "exact")
    _emit(render(header, rows, args.format), args.out)
    return 0


def cmd_downtown(args) -> int:
    p = downtown.DownTownParams(
        args.n, args.m, downtown.parse_slowness(args.slowness), Fraction(args.wait), Fraction(args.crc)
    )
    dt = downtown.build_downtown(p)
    dist = modular.spatial_balanced(dt.system, args.mode == "exact")
    rows = downtown.cell_rows(dt, dist)
    _emit(render(("role", "i", "j", "stripe", "k", "probability"), rows, args.format), args.out)
    if args.errata_report:
        exact_dist = dist if args.mode == "exact" else modular.spatial_balanced(dt.system, True)
        downtown.write_errata(downtown.errata_report(dt, exact_dist), args.errata_report)
    return 0


def cmd_simulate(args) -> int:
    mtm, _ = load_model(args.model, args.mode == "exact")
    pi = chain.model_stationary(mtm) if args.start == "stationary" else None
    cfg = SimConfig(args.agents, args.steps, args.warmup, args.seed, args.start)
    h = simulate(mtm, pi, cfg)
    _emit(histogram_table(h, args.format), args.out)
    return 0


# ------------------------------------------------------------ verification


@dataclass
class Check:
    name: str
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _check(name: str, pairs) -> Check:
    """``pairs`` yields ``(where, expected, actual)``; unequal ones are recorded."""
    c = Check(name)
    for where, exp, act in pairs:
        if exp != act:
            c.mismatches.append(f"{name} at {where}: expected {exp}, got {act}")
    return c


def suite_core(max_n: int) -> list[Check]:
    rng = np.random.default_rng(0)
    checks = []
    pairs = []
    for k in range(50):
        n = int(rng.integers(1, max(2, max_n) + 1))
        mat = generators.random_stochastic_matrix(rng, n)
        kc = chain.build_kernel(mtm_from_chain(mat))
        got = [[kc.prob(u, v) for v in range(n)] for u in range(n)]
        pairs.append((f"matrix {k}", mat, got))
    checks.append(_check("kernel round trip", pairs))
    pairs = []
    for k in range(20):
        mtm = generators.random_strongly_connected_mtm(rng, n_points=int(rng.integers(2, max(3, max_n) + 1)))
        sigma = chain.stationary_kernel(chain.build_kernel(mtm))
        pi = chain.lift_sigma_to_pi(mtm, sigma)
        back = chain.project_pi_to_sigma(mtm, pi)
        pairs.append((f"model {k} projection", sigma.values, back.values))
        pairs.append((f"model {k} kernel residual", 0, chain.kernel_residual(chain.build_kernel(mtm), sigma)))
        pairs.append((f"model {k} full residual", 0, chain.full_residual(mtm, pi)))
        pairs.append((f"model {k} full solve", chain.stationary_full(mtm).values, pi.values))
    checks.append(_check("lift/project", pairs))
    pairs = []
    for k, (tag, mtm) in enumerate(generators.uniformity_family(rng, 30)):
        rep = chain.uniformity_test(mtm)
        pairs.append((f"model {k} ({tag})", rep.uniformly_selective and rep.balanced, rep.solved_constant))
    checks.append(_check("uniform stationary iff balanced and uniform", pairs))
    return checks


def suite_manhattan(max_n: int) -> list[Check]:
    checks = []
    for n in range(2, max_n + 1):
        cells = [(i, j) for i in range(n) for j in range(n)]
        oa = manhattan.oracle_counts(n, "A")
        checks.append(
            _check(
                f"eta N={n}",
                (
                    (f"{s}->{c}", int(oa[s[0] * n + s[1], c[0] * n + c[1]]), manhattan.manhattan_eta(n, s, c))
                    for s in cells
                    for c in cells
                ),
            )
        )
        checks.append(
            _check(
                f"gamma N={n}",
                ((c, int(oa[:, c[0] * n + c[1]].sum()), manhattan.manhattan_gamma(n, c)) for c in cells),
            )
        )
        enum_states = sum(len(p) - 1 for p in manhattan.manhattan_paths(n))
        checks.append(_check(f"|S| N={n}", [("total", enum_states, manhattan.state_count(n))]))
        ob = manhattan.oracle_counts(n, "B").sum(axis=0)
        fast = manhattan.state_counts_b(n)
        checks.append(
            _check(
                f"chain-exact counts N={n}",
                ((c, int(ob[c[0] * n + c[1]]), int(fast[c])) for c in cells),
            )
        )
        if n <= 4:
            mtm = manhattan.build_manhattan(n)
            sp = distributions.spatial(mtm, chain.model_stationary(mtm))
            ref = manhattan.spatial_chain_exact(n)
            checks.append(
                _check(f"pipeline spatial N={n}", ((c, ref[c], sp.get(c[0] * n + c[1], 0)) for c in cells))
            )
    return checks


def suite_modular(max_n: int) -> list[Check]:
    rng = np.random.default_rng(0)
    n_points = max(3, max_n)

    def compare(rs, closed, exact=True) -> list:
        mtm = modular.expand_route_system(rs, exact)
        pi = chain.model_stationary(mtm)
        sp = distributions.spatial(mtm, pi)
        return [(u, sp.get(u, 0), closed.get(u, 0)) for u in range(len(rs.points))]

    tiny = generators.tiny_route_system()
    checks = [_check("tiny system", compare(tiny, modular.spatial_balanced(tiny)))]
    pairs = []
    for k in range(20):
        rs = generators.random_route_system(rng, n_points, balanced=True)
        pairs += [(f"system {k} point {u}", e, a) for u, e, a in compare(rs, modular.spatial_balanced(rs))]
    checks.append(_check("balanced closed form", pairs))
    pairs = []
    for k in range(10):
        rs = generators.random_route_system(rng, n_points, balanced=False)
        mtm = modular.expand_route_system(rs, False)
        sigma = chain.stationary_kernel(chain.build_kernel(mtm))
        closed = modular.spatial_general(rs, sigma, False)
        for u, e, a in compare(rs, closed, False):
            pairs.append((f"system {k} point {u}", e, a if abs(float(e) - float(a)) > 1e-12 else e))
    checks.append(_check("general closed form", pairs))
    return checks


def suite_downtown(max_n: int) -> list[Check]:
    checks = []
    for n in range(2, max(2, max_n) + 1, 2):
        for m in (1, 2):
            p = downtown.DownTownParams(n, m)
            dt = downtown.build_downtown(p)
            tag = f"n={n} m={m}"
            checks.append(_check(f"balanced {tag}", [("system", True, modular.is_balanced_rs(dt.system))]))
            closed = modular.spatial_balanced(dt.system)
            checks.append(_check(f"sums to one {tag}", [("total", 1, sum(closed.values()))]))
            if n <= 4:
                mtm = modular.expand_route_system(dt.system)
                sp = distributions.spatial(mtm, chain.model_stationary(mtm))
                names = [pt.name for pt in dt.system.points]
                checks.append(
                    _check(f"pipeline {tag}", ((names[u], sp.get(u, 0), closed.get(u, 0)) for u in range(len(names))))
                )
    return checks


SUITES: dict[str, Callable[[int], list[Check]]] = {
    "core": suite_core,
    "manhattan": suite_manhattan,
    "modular": suite_modular,
    "downtown": suite_downtown,
}


def cmd_verify(args) -> int:
    max_n = args.max_n if args.max_n is not None else {"core": 8, "manhattan": 5, "modular": 6, "downtown": 2}[args.suite]
    checks = SUITES[args.suite](max_n)
    rows = [(c.name, "pass" if c.ok else "fail", len(c.mismatches)) for c in checks]
    _emit(render(("check", "result", "mismatches"), rows, args.format), args.out)
    failed = [m for c in checks for m in c.mismatches]
    if failed:
        for line in failed[:MAX_LISTED]:
            print(line, file=sys.stderr)
        return 2
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--mode", choices=("exact", "float"), default="exact")
    shared.add_argument("--out", help="write output here instead of stdout")
    shared.add_argument("--format", choices=("csv", "json"), default="csv")

    ap = argparse.ArgumentParser(prog="mtm", description="Markov trace mobility models")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generic", parents=[shared], help="stationary distributions of a JSON model")
    g.add_argument("--model", required=True)
    g.add_argument("--spatial", action="store_true")
    g.add_argument("--dest", metavar="POINT")
    g.set_defaults(func=cmd_generic)

    m = sub.add_parser("manhattan", parents=[shared], help="random way-point on an N x N grid")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--convention", choices=("A", "B"), default="B")
    grp = m.add_mutually_exclusive_group()
    grp.add_argument("--closed-form", dest="which", action="store_const", const="closed-form")
    grp.add_argument("--exact", dest="which", action="store_const", const="exact")
    grp.add_argument("--both", dest="which", action="store_const", const="both")
    m.set_defaults(func=cmd_manhattan)

    d = sub.add_parser("downtown", parents=[shared], help="city grid route system")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--slowness", default="const:1")
    d.add_argument("--wait", default="1")
    d.add_argument("--crc", default="1")
    d.add_argument("--errata-report", metavar="PATH")
    d.set_defaults(func=cmd_downtown)

    s = sub.add_parser("simulate", parents=[shared], help="Monte Carlo occupancy histogram")
    s.add_argument("--model", required=True)
    s.add_argument("--agents", type=int, default=10000)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--warmup", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--start", choices=("stationary", "fixed"), default="stationary")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[shared], help="oracle suites")
    v.add_argument("--suite", choices=tuple(SUITES), required=True)
    v.add_argument("--max-n", type=int)
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MTMError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
