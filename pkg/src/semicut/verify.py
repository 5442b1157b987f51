"""Ground-truth oracles (exhaustive enumeration), the geometric-expansion
checker, and the invariant auditor for sparsifier outputs."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, Partition, boundary_counts, edge_boundary
from .sdp import Embedding, MULTICUT, SSE, BALANCED_CUT
from .sparsify import PHI_FEASIBLE_DIAM, SparsifierOutput, heavy_vertices

BRUTE_BALANCED_CAP = 20
BRUTE_SSE_CAP = 20
BRUTE_MULTICUT_CAP = 10


def brute_force_balanced_cut(G: Graph) -> tuple[frozenset, int]:
    """Exact minimum over all n/2-bisections; n <= 20 and even."""
    n = G.n
    if n > BRUTE_BALANCED_CAP:
        raise ValueError(f"bisection enumeration limited to n <= {BRUTE_BALANCED_CAP}")
    if n % 2 != 0 or n < 2:
        raise ValueError("need even n >= 2")
    best_cost = None
    best = None
    mask = np.zeros(n, dtype=bool)
    # fix vertex 0 on the left side to halve the enumeration
    for rest in combinations(range(1, n), n // 2 - 1):
        mask[:] = False
        mask[0] = True
        mask[list(rest)] = True
        cost = boundary_counts(G, mask)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best = frozenset({0, *rest})
    return best, int(best_cost)


def brute_force_sse(G: Graph, rho: float) -> tuple[frozenset, int]:
    """Exact minimum boundary over all sets of size exactly rho*n; n <= 20."""
    n = G.n
    if n > BRUTE_SSE_CAP:
        raise ValueError(f"subset enumeration limited to n <= {BRUTE_SSE_CAP}")
    size = rho * n
    if abs(size - round(size)) > 1e-9:
        raise ValueError("rho * n must be integral")
    size = int(round(size))
    if not (1 <= size <= n):
        raise ValueError("rho * n out of range")
    best_cost = None
    best = None
    mask = np.zeros(n, dtype=bool)
    for S in combinations(range(n), size):
        mask[:] = False
        mask[list(S)] = True
        cost = boundary_counts(G, mask)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best = frozenset(S)
    return best, int(best_cost)


def _set_partitions(n: int):
    """All partitions of 0..n-1 via restricted growth strings."""
    labels = [0] * n

    def rec(i: int, maxlab: int):
        if i == n:
            yield labels[:]
            return
        for lab in range(maxlab + 1):
            labels[i] = lab
            yield from rec(i + 1, max(maxlab, lab + 1))

    yield from rec(0, 0)


def brute_force_multicut(G: Graph, demands: Iterable[Sequence[int]]) -> tuple[Partition, int]:
    """Exact minimum over all vertex partitions separating every demand."""
    n = G.n
    if n > BRUTE_MULTICUT_CAP:
        raise ValueError(f"partition enumeration limited to n <= {BRUTE_MULTICUT_CAP}")
    dem = [(int(s), int(t)) for s, t in demands]
    arr = G.edge_arr
    best_cost = None
    best = None
    for labels in _set_partitions(n):
        if any(labels[s] == labels[t] for s, t in dem):
            continue
        lab = np.array(labels)
        cost = int(np.count_nonzero(lab[arr[:, 0]] != lab[arr[:, 1]])) if len(arr) else 0
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best = labels[:]
    if best is None:
        raise ValueError("demands are unseparable (s == t somewhere?)")
    return Partition.from_assignment(best), int(best_cost)


# second, independently structured enumerators for the dual-implementation check


def brute_force_balanced_cut_bitmask(G: Graph) -> int:
    n = G.n
    if n > BRUTE_BALANCED_CAP:
        raise ValueError("too large")
    arr = G.edge_arr
    best = None
    for m in range(1 << (n - 1), 1 << n):  # top bit set: vertex n-1 fixed right... (complement-free scan)
        if bin(m).count("1") != n // 2:
            continue
        cost = 0
        for u, v in arr.tolist():
            if ((m >> u) ^ (m >> v)) & 1:
                cost += 1
        if best is None or cost < best:
            best = cost
    return int(best)


def brute_force_sse_bitmask(G: Graph, rho: float) -> int:
    n = G.n
    size = int(round(rho * n))
    arr = G.edge_arr
    best = None
    for m in range(1, 1 << n):
        if bin(m).count("1") != size:
            continue
        cost = 0
        for u, v in arr.tolist():
            if ((m >> u) ^ (m >> v)) & 1:
                cost += 1
        if best is None or cost < best:
            best = cost
    return int(best)


def brute_force_multicut_recursive(G: Graph, demands: Iterable[Sequence[int]]) -> int:
    """Branch on which existing block each vertex joins, pruning demand
    conflicts eagerly (different recursion order from the RGS enumerator)."""
    n = G.n
    dem = [(int(s), int(t)) for s, t in demands]
    adj = [set(map(int, G.neighbors(u))) for u in range(n)]
    conflict = [set() for _ in range(n)]
    for s, t in dem:
        conflict[max(s, t)].add(min(s, t))
    best = [None]

    def rec(u: int, blocks: list[set], cost: int):
        if best[0] is not None and cost >= best[0]:
            return
        if u == n:
            best[0] = cost
            return
        for b in blocks:
            if conflict[u] & b:
                continue
            extra = sum(1 for v in adj[u] if v < u and v not in b)
            b.add(u)
            rec(u + 1, blocks, cost + extra)
            b.remove(u)
        extra = sum(1 for v in adj[u] if v < u)
        blocks.append({u})
        rec(u + 1, blocks, cost + extra)
        blocks.pop()

    rec(0, [], 0)
    return int(best[0])


def brute_force_sparsest_cut(G: Graph) -> tuple[frozenset, float]:
    """Exact min of boundary/|S| over nonempty S with |S| <= n/2; n <= 20."""
    n = G.n
    if n > BRUTE_SSE_CAP:
        raise ValueError("too large")
    best = None
    best_set = None
    mask = np.zeros(n, dtype=bool)
    for size in range(1, n // 2 + 1):
        for S in combinations(range(n), size):
            mask[:] = False
            mask[list(S)] = True
            ratio = boundary_counts(G, mask) / size
            if best is None or ratio < best:
                best = ratio
                best_set = frozenset(S)
    return best_set, float(best)


# ---------------------------------------------------------------------------
# geometric expansion


@dataclass(frozen=True)
class GeoExpansionResult:
    status: str  # "pass" | "violation" | "not-applicable"
    short_count: int
    bound: float
    delta: float

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def geometric_expansion_check(
    E_cut: Iterable[Sequence[int]],
    phi: Embedding,
    M: Iterable[int],
    delta: float,
    X: float,
) -> GeoExpansionResult:
    """Count cut edges inside M shorter than delta/2; pass iff the count is
    at most 2 * delta^2 * X. Applies only to heavy-free (phi, M) pairs."""
    t = -np.log2(delta)
    if not (delta > 0 and abs(t - round(t)) < 1e-9 and delta <= 0.5):
        raise ValueError("delta must be 2^-t for integer t >= 1")
    m_set = set(int(v) for v in M)
    if len(heavy_vertices(phi, m_set, delta)):
        return GeoExpansionResult("not-applicable", 0, 2 * delta * delta * X, delta)
    short = 0
    for u, v in E_cut:
        if u in m_set and v in m_set and phi.d(int(u), int(v)) <= delta / 2.0 + 1e-12:
            short += 1
    bound = 2.0 * delta * delta * X
    status = "pass" if short <= bound else "violation"
    return GeoExpansionResult(status, short, bound, delta)


def fuzz_geometric_expansion(
    E_cut: Iterable[Sequence[int]],
    n: int,
    delta: float,
    X: float,
    seed: int,
    tries: int = 20,
    steps: int = 60,
) -> GeoExpansionResult | None:
    """Best-effort search for an embedding violating geometric expansion:
    random starts plus gradient ascent pulling cut edges under delta/2 while
    pushing ball populations below the heavy threshold. No completeness
    claim; returns the first violation found, else None."""
    cut = np.array(sorted({(min(u, v), max(u, v)) for u, v in E_cut}), dtype=np.int64).reshape(-1, 2)
    if not len(cut):
        return None
    rng = np.random.default_rng(seed)
    k = max(4, int(np.ceil(np.log2(n))) + 2)
    for _ in range(tries):
        Xv = rng.standard_normal((n, k))
        Xv /= np.linalg.norm(Xv, axis=1, keepdims=True)
        lr = 0.08
        for _ in range(steps):
            diff = Xv[cut[:, 0]] - Xv[cut[:, 1]]
            d_e = np.einsum("ij,ij->i", diff, diff)
            pull = d_e > delta / 2.0  # drag long cut edges under the threshold
            g = np.zeros_like(Xv)
            if pull.any():
                np.add.at(g, cut[pull, 0], diff[pull])
                np.add.at(g, cut[pull, 1], -diff[pull])
            # push apart pairs that are within delta (anti-heavy pressure)
            P = Xv @ Xv.T
            Dm = np.maximum(2.0 - 2.0 * P, 0.0)
            close = Dm <= delta
            np.fill_diagonal(close, False)
            rows, cols = np.nonzero(close)
            if len(rows):
                dd = Xv[rows] - Xv[cols]
                np.add.at(g, rows, -0.5 * dd)
            Xv = Xv - lr * g
            Xv /= np.linalg.norm(Xv, axis=1, keepdims=True)
        phi = Embedding(Xv)
        res = geometric_expansion_check(map(tuple, cut.tolist()), phi, range(n), delta, X)
        if res.status == "violation":
            return res
    return None


# ---------------------------------------------------------------------------
# invariant audit


@dataclass
class AuditReport:
    failures: list = field(default_factory=list)
    checks: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, ok: bool, name: str, detail: str = "") -> None:
        self.checks += 1
        if not ok:
            self.failures.append((name, detail))

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": self.checks, "failures": list(self.failures)}


def invariant_audit(out: SparsifierOutput, G: Graph, model_kind: str, tol_feas: float = 1e-5) -> AuditReport:
    """Structural laws of a sparsifier run, each failure itemized."""
    rep = AuditReport()
    n = G.n

    covered = set(out.M)
    overlap = False
    for p in out.pieces:
        if covered & set(p.vertices):
            overlap = True
        covered |= set(p.vertices)
    rep.add(not overlap, "pieces-disjoint", "piece overlaps M or another piece")
    rep.add(covered == set(range(n)), "vertex-cover", f"covered {len(covered)} of {n}")

    rep.add(
        out.e_plus | out.e_minus == G.edges and not (out.e_plus & out.e_minus),
        "edge-partition",
        "E+ and E- must partition E",
    )

    side = {v: 0 for v in out.M}
    for i, p in enumerate(out.pieces, start=1):
        for v in p.vertices:
            side[v] = i
    crossing = [e for e in out.e_plus if side.get(e[0]) != side.get(e[1])]
    rep.add(not crossing, "cut-containment", f"{len(crossing)} E+ edges cross the partition")

    for i, p in enumerate(out.pieces):
        phi = out.embedding_for(p)
        ids = list(p.vertices)
        if len(ids) >= 2:
            sub = phi.dist_matrix()[np.ix_(ids, ids)]
            diam = float(sub.max())
        else:
            diam = 0.0
        rep.add(
            diam <= PHI_FEASIBLE_DIAM + 2.0 * tol_feas,
            "piece-diameter",
            f"piece {i} (t={p.iteration}) diameter {diam:.6f}",
        )

    for it in out.trace:
        m_now = set(it.m_after)
        hv = heavy_vertices(it.phi, m_now, it.delta)
        rep.add(len(hv) == 0, "heavy-free", f"iteration {it.t} has {len(hv)} heavy vertices")
        long_left = [
            e
            for e in it.e_plus_after
            if e[0] in m_now and e[1] in m_now and it.phi.d(e[0], e[1]) >= it.delta - 1e-12
        ]
        rep.add(not long_left, "scale-law", f"iteration {it.t}: {len(long_left)} long edges kept")

    if model_kind == BALANCED_CUT:
        for i, p in enumerate(out.pieces):
            rep.add(len(p) <= 0.8 * n + 1e-9, "balance-bound", f"piece {i} has {len(p)} > 4n/5")
    elif model_kind == SSE:
        rho = out.params.get("rho")
        if rho:
            cap = (8.0 / 7.0) * rho * n * (1.0 + 8.0 * tol_feas) + 1e-9
            for i, p in enumerate(out.pieces):
                rep.add(len(p) <= cap, "size-bound", f"piece {i} has {len(p)} > 8/7 rho n")
    elif model_kind == MULTICUT:
        demands = out.params.get("demands") or ()
        for s, t in demands:
            for i, p in enumerate(out.pieces):
                members = set(p.vertices)
                rep.add(
                    not (s in members and t in members),
                    "demand-free",
                    f"piece {i} contains demand pair ({s},{t})",
                )
    return rep
