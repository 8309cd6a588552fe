"""Kernel chain, stationary solves and the sigma <-> pi correspondence.

Transition matrices are kept as lists of sparse rows (``{col: value}``) so
the same code serves exact ``Fraction`` arithmetic and binary64 floats.
Float solves go through scipy.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .errors import NotStationaryInput, SolveFailed
from .traces import MTModel

DIRECT_LIMIT = 20_000
POWER_TOL = 1e-13
POWER_MAX_ITER = 1_000_000
FLOAT_RESIDUAL_TOL = 1e-9

Rows = list[dict[int, object]]


@dataclass(frozen=True)
class KernelChain:
    """Way-point chain over ``P(T)``; ``rows[a][b]`` is ``K(points[a], points[b])``."""

    points: tuple[int, ...]
    rows: tuple[dict[int, object], ...]
    exact: bool

    @property
    def index(self) -> dict[int, int]:
        return {p: a for a, p in enumerate(self.points)}

    def prob(self, u: int, v: int):
        idx = self.index
        zero = Fraction(0) if self.exact else 0.0
        if u not in idx or v not in idx:
            return zero
        return self.rows[idx[u]].get(idx[v], zero)

    def matrix(self) -> sp.csr_matrix:
        return _to_csr(self.rows, len(self.points))


@dataclass(frozen=True)
class StationaryVector:
    """Stationary distribution.

    ``kind == "kernel"``: ``values[a]`` is sigma at ``support[a]``.
    ``kind == "full"``: ``values[k]`` is pi at state index ``k`` of the
    trace set (see ``TraceSet.state_index``); ``support`` is empty.
    For reducible kernels ``basis`` holds one vector per terminal strongly
    connected component and ``values`` is their average.
    """

    kind: str
    values: tuple
    support: tuple[int, ...] = ()
    exact: bool = True
    unique: bool = True
    basis: tuple[tuple, ...] = ()

    def as_dict(self) -> dict[int, object]:
        if self.kind != "kernel":
            return dict(enumerate(self.values))
        return dict(zip(self.support, self.values))


def build_kernel(mtm: MTModel) -> KernelChain:
    ts = mtm.trace_set
    points = ts.waypoints
    idx = {p: a for a, p in enumerate(points)}
    rows = []
    for u in points:
        row: dict[int, object] = {}
        for tid in ts.out(u):
            b = idx[ts.traces[tid][-1]]
            row[b] = row.get(b, 0) + mtm.rule.weights[tid]
        rows.append(row)
    return KernelChain(points, tuple(rows), mtm.exact)


def lambda_psi(mtm: MTModel) -> dict[int, object]:
    """Expected number of steps of the next trace chosen at each point."""
    ts = mtm.trace_set
    out = {}
    for u in ts.waypoints:
        out[u] = sum((len(ts.traces[t]) - 1) * mtm.rule.weights[t] for t in ts.out(u))
    return out


# ---------------------------------------------------------------- solving


def _to_csr(rows: Sequence[Mapping[int, object]], n: int) -> sp.csr_matrix:
    r, c, v = [], [], []
    for a, row in enumerate(rows):
        for b, x in row.items():
            r.append(a)
            c.append(b)
            v.append(float(x))
    return sp.csr_matrix((v, (r, c)), shape=(n, n))


def _pattern(rows: Sequence[Mapping[int, object]], n: int) -> sp.csr_matrix:
    r, c = [], []
    for a, row in enumerate(rows):
        for b, x in row.items():
            if x != 0:
                r.append(a)
                c.append(b)
    return sp.csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))


def terminal_components(rows: Sequence[Mapping[int, object]], n: int) -> list[list[int]]:
    """Closed strongly connected classes, each sorted, ordered by smallest member."""
    g = _pattern(rows, n)
    ncomp, labels = connected_components(g, directed=True, connection="strong")
    leaves = np.ones(ncomp, dtype=bool)
    coo = g.tocoo()
    for a, b in zip(coo.row, coo.col):
        if labels[a] != labels[b]:
            leaves[labels[a]] = False
    comps: dict[int, list[int]] = {}
    for a in range(n):
        if leaves[labels[a]]:
            comps.setdefault(int(labels[a]), []).append(a)
    return sorted(comps.values(), key=lambda c: c[0])


def _gauss_exact(eqs: list[dict[int, Fraction]], rhs: list[Fraction], n: int) -> list[Fraction]:
    """Sparse Gauss-Jordan elimination over the rationals."""
    eqs = [dict(e) for e in eqs]
    rhs = list(rhs)
    pivots: list[tuple[int, int]] = []
    used = [False] * len(eqs)
    for col in range(n):
        best = None
        for r, e in enumerate(eqs):
            if not used[r] and e.get(col, 0) != 0:
                if best is None or len(e) < len(eqs[best]):
                    best = r
        if best is None:
            raise SolveFailed("singular system in exact stationary solve")
        used[best] = True
        prow = eqs[best]
        inv = Fraction(1) / prow[col]
        for k in prow:
            prow[k] *= inv
        rhs[best] *= inv
        for r, e in enumerate(eqs):
            if r != best:
                f = e.get(col, 0)
                if f != 0:
                    for k, x in prow.items():
                        y = e.get(k, 0) - f * x
                        if y == 0:
                            e.pop(k, None)
                        else:
                            e[k] = y
                    rhs[r] -= f * rhs[best]
        pivots.append((col, best))
    sol = [Fraction(0)] * n
    for col, r in pivots:
        sol[col] = rhs[r]
    return sol


def _solve_closed_class(rows: Sequence[Mapping[int, object]], comp: list[int], exact: bool) -> dict[int, object]:
    """Stationary vector of the chain restricted to a closed class."""
    loc = {a: k for k, a in enumerate(comp)}
    n = len(comp)
    if n == 1:
        return {comp[0]: Fraction(1) if exact else 1.0}
    if exact:
        # equation for column v: sum_u x_u K(u, v) - x_v = 0; the last one
        # is replaced by the normalisation
        eqs: list[dict[int, Fraction]] = [dict() for _ in range(n)]
        for a in comp:
            for b, x in rows[a].items():
                if x != 0:
                    e = eqs[loc[b]]
                    e[loc[a]] = e.get(loc[a], 0) + Fraction(x)
        for k in range(n):
            eqs[k][k] = eqs[k].get(k, Fraction(0)) - 1
        eqs[-1] = {k: Fraction(1) for k in range(n)}
        rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
        sol = _gauss_exact(eqs, rhs, n)
        return {a: sol[loc[a]] for a in comp}
    sub = _to_csr([{loc[b]: x for b, x in rows[a].items() if b in loc} for a in comp], n)
    if n <= DIRECT_LIMIT:
        a_mat = (sub.T - sp.identity(n, format="csr")).tolil()
        a_mat[n - 1, :] = np.ones(n)
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        x = spsolve(a_mat.tocsr(), rhs)
    else:
        x = _power_iteration(sub)
    x = np.clip(x, 0.0, None)
    x = x / x.sum()
    return {a: float(x[loc[a]]) for a in comp}


def _power_iteration(mat: sp.csr_matrix) -> np.ndarray:
    n = mat.shape[0]
    lazy_t = ((mat + sp.identity(n, format="csr")) * 0.5).T.tocsr()
    x = np.full(n, 1.0 / n)
    for _ in range(POWER_MAX_ITER):
        y = lazy_t @ x
        y /= y.sum()
        if np.abs(y - x).max() < POWER_TOL:
            return y
        x = y
    raise SolveFailed("power iteration did not converge")


def solve_rows(rows: Sequence[Mapping[int, object]], n: int, exact: bool):
    """Stationary vector(s) of a row-stochastic sparse matrix.

    Returns ``(values, basis)`` where ``basis`` has one dense vector per
    closed class and ``values`` is their average.
    """
    zero = Fraction(0) if exact else 0.0
    basis = []
    for comp in terminal_components(rows, n):
        part = _solve_closed_class(rows, comp, exact)
        vec = [zero] * n
        for a, x in part.items():
            vec[a] = x
        basis.append(tuple(vec))
    k = len(basis)
    values = tuple(sum(vec[a] for vec in basis) / k for a in range(n))
    res = residual(rows, values, exact)
    if (exact and res != 0) or (not exact and res > FLOAT_RESIDUAL_TOL):
        raise SolveFailed(f"stationary residual {float(res):.3e}")
    return values, tuple(basis)


def residual(rows: Sequence[Mapping[int, object]], x: Sequence, exact: bool):
    """``max |xK - x|`` (exact ``Fraction`` in rational mode)."""
    n = len(x)
    acc = [Fraction(0) if exact else 0.0 for _ in range(n)]
    for a, row in enumerate(rows):
        xa = x[a]
        if xa:
            for b, p in row.items():
                acc[b] += xa * p
    return max(abs(acc[b] - x[b]) for b in range(n))


def stationary_kernel(k: KernelChain) -> StationaryVector:
    values, basis = solve_rows(k.rows, len(k.points), k.exact)
    return StationaryVector("kernel", values, k.points, k.exact, len(basis) == 1, basis)


def kernel_residual(k: KernelChain, sigma: StationaryVector | Mapping[int, object]):
    x = _sigma_on(k.points, sigma, k.exact)
    return residual(k.rows, x, k.exact)


def _sigma_on(points: Sequence[int], sigma, exact: bool) -> list:
    zero = Fraction(0) if exact else 0.0
    d = sigma.as_dict() if isinstance(sigma, StationaryVector) else dict(sigma)
    return [d.get(p, zero) for p in points]


# ------------------------------------------------------------- full chain


def full_rows(mtm: MTModel) -> Rows:
    """Sparse transition rows of the full chain over ``S(T)``."""
    ts = mtm.trace_set
    rows: Rows = []
    for tid, t in enumerate(ts.traces):
        base = ts.state_offsets[tid]
        for i in range(1, len(t) - 1):
            rows.append({base + i: Fraction(1) if mtm.exact else 1.0})
        rows.append({ts.state_offsets[nt]: mtm.rule.weights[nt] for nt in ts.out(t[-1])})
    return rows


def stationary_full(mtm: MTModel) -> StationaryVector:
    """Direct solve on the full chain; an oracle for small models only."""
    values, basis = solve_rows(full_rows(mtm), mtm.state_count, mtm.exact)
    return StationaryVector("full", values, (), mtm.exact, len(basis) == 1, basis)


def full_residual(mtm: MTModel, pi: StationaryVector | Sequence):
    """``max |pi P - pi|`` over the full chain, without building P."""
    ts = mtm.trace_set
    x = pi.values if isinstance(pi, StationaryVector) else tuple(pi)
    zero = Fraction(0) if mtm.exact else 0.0
    inflow: dict[int, object] = {}
    for tid, t in enumerate(ts.traces):
        last = ts.state_offsets[tid + 1] - 1
        inflow[t[-1]] = inflow.get(t[-1], zero) + x[last]
    worst = zero
    for tid, t in enumerate(ts.traces):
        base = ts.state_offsets[tid]
        into_first = inflow.get(t[0], zero) * mtm.rule.weights[tid]
        worst = max(worst, abs(into_first - x[base]))
        for i in range(1, len(t) - 1):
            worst = max(worst, abs(x[base + i - 1] - x[base + i]))
    return worst


def lift_sigma_to_pi(mtm: MTModel, sigma: StationaryVector | Mapping[int, object]) -> StationaryVector:
    """``pi(<T,i>) = sigma(T_start) psi(T) / sum_u sigma(u) Lambda(u)``."""
    k = build_kernel(mtm)
    x = _sigma_on(k.points, sigma, mtm.exact)
    res = residual(k.rows, x, mtm.exact)
    if (mtm.exact and res != 0) or (not mtm.exact and res > FLOAT_RESIDUAL_TOL):
        raise NotStationaryInput(f"sigma is not stationary for the kernel (residual {float(res):.3e})")
    lam = lambda_psi(mtm)
    sig = dict(zip(k.points, x))
    z = sum(sig[u] * lam[u] for u in k.points)
    ts = mtm.trace_set
    vals = []
    for tid, t in enumerate(ts.traces):
        v = sig[t[0]] * mtm.rule.weights[tid] / z
        vals.extend([v] * (len(t) - 1))
    return StationaryVector("full", tuple(vals), (), mtm.exact)


def project_pi_to_sigma(mtm: MTModel, pi: StationaryVector | Sequence) -> StationaryVector:
    """``sigma(u)`` proportional to the mass of first states of traces leaving ``u``."""
    res = full_residual(mtm, pi)
    if (mtm.exact and res != 0) or (not mtm.exact and res > FLOAT_RESIDUAL_TOL):
        raise NotStationaryInput(f"pi is not stationary for the full chain (residual {float(res):.3e})")
    x = pi.values if isinstance(pi, StationaryVector) else tuple(pi)
    ts = mtm.trace_set
    first = {u: sum(x[ts.state_offsets[t]] for t in ts.out(u)) for u in ts.waypoints}
    z = sum(first.values())
    return StationaryVector("kernel", tuple(first[u] / z for u in ts.waypoints), ts.waypoints, mtm.exact)


def model_stationary(mtm: MTModel) -> StationaryVector:
    """The usual pipeline: kernel, sigma, then lift to pi."""
    sigma = stationary_kernel(build_kernel(mtm))
    return lift_sigma_to_pi(mtm, sigma)


# --------------------------------------------------------- structural tests


def is_strongly_connected(mtm: MTModel) -> bool:
    k = build_kernel(mtm)
    n, _ = connected_components(_pattern(k.rows, len(k.points)), directed=True, connection="strong")
    return n == 1


@dataclass(frozen=True)
class UniformityReport:
    uniformly_selective: bool
    balanced: bool
    uniform_stationary: bool
    solved_constant: bool


def uniformity_test(mtm: MTModel, solve: bool = True) -> UniformityReport:
    """Predicted uniformity of pi (selective and balanced) next to the solved answer."""
    ts = mtm.trace_set
    selective = True
    for u in ts.waypoints:
        out = ts.out(u)
        for t in out:
            w = mtm.rule.weights[t]
            if mtm.exact:
                ok = w == Fraction(1, len(out))
            else:
                ok = abs(w - 1.0 / len(out)) <= 1e-12
            selective = selective and ok
    balanced = all(len(ts.out(u)) == len(ts.into(u)) for u in range(len(ts.points)))
    constant = False
    if solve:
        pi = model_stationary(mtm)
        v = pi.values
        if mtm.exact:
            constant = all(x == v[0] for x in v)
        else:
            constant = max(v) - min(v) <= 1e-12
    return UniformityReport(selective, balanced, selective and balanced, constant)
