"""End-to-end cut pipelines: balanced cut, multicut, small-set expansion
and sparsest cut, all built on the sparsifier plus problem-specific
rounding. Worst-case subroutines are ball-sweep stand-ins whose quality is
measured against the exhaustive oracles, not assumed."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .graphs import Edge, Graph, Partition, boundary_counts, cut_cost, edge_boundary
from .instances import PlantedInstance
from .sdp import (
    BALANCED_CUT,
    DEFAULT_TOL_FEAS,
    Embedding,
    SSE,
    SolveBudget,
    build_model,
    solve_cached,
)
from .sparsify import SparsifierOutput, sparsify
from .util import spawn_rng

C_SIDE_DEFAULT = 10
CASE1_WEIGHT_FACTOR = 8.0  # weight cap multiplier for the ball-sweep case


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class CutResult:
    side: frozenset | Partition
    boundary_cost: int
    diagnostics: dict = field(default_factory=dict)

    @property
    def partition(self) -> Partition:
        if not isinstance(self.side, Partition):
            raise TypeError("this result holds a vertex set, not a partition")
        return self.side


def make_cut_result(G: Graph, side: Iterable[int], diagnostics: dict | None = None) -> CutResult:
    s = frozenset(int(v) for v in side)
    return CutResult(s, edge_boundary(s, G), dict(diagnostics or {}))


def make_partition_result(G: Graph, P: Partition, diagnostics: dict | None = None) -> CutResult:
    return CutResult(P, cut_cost(P, G.edges), dict(diagnostics or {}))


@dataclass(frozen=True)
class LpSolution:
    vertices: tuple[int, ...]
    x: dict
    objective: float
    weights: dict

    def threshold_set(self, r: float) -> list[int]:
        return [u for u in self.vertices if self.x[u] >= r]


# ---------------------------------------------------------------------------
# balanced cut


def _prefix_sweep_candidates(G: Graph, phi: Embedding, lo: int, hi: int):
    """All prefix cuts of the distance orderings around every center whose
    size lands in [lo, hi]; yields (boundary, size, mask) best-first lazily
    via a running minimum. Returns the best (boundary, tiebreak, mask)."""
    n = G.n
    Dmat = phi.dist_matrix()
    arr = G.edge_arr
    best = None
    for center in range(n):
        order = np.lexsort((np.arange(n), Dmat[center]))
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        if len(arr):
            lo_rank = np.minimum(rank[arr[:, 0]], rank[arr[:, 1]])
            hi_rank = np.maximum(rank[arr[:, 0]], rank[arr[:, 1]])
            # prefix of size p cuts edges with lo_rank < p <= hi_rank
            delta = np.zeros(n + 1, dtype=np.int64)
            np.add.at(delta, lo_rank + 1, 1)
            np.add.at(delta, hi_rank + 1, -1)
            cuts = np.cumsum(delta)  # cuts[p] = boundary of prefix of size p
        else:
            cuts = np.zeros(n + 1, dtype=np.int64)
        for p in range(lo, hi + 1):
            b = int(cuts[p])
            key = (b, abs(p - n / 2), center, p)
            if best is None or key < best[0]:
                mask = np.zeros(n, dtype=bool)
                mask[order[:p]] = True
                best = (key, mask)
    return best


def _swap_polish(G: Graph, mask: np.ndarray, max_rounds: int = 200) -> np.ndarray:
    """Greedy 1-swaps (one in, one out) while the boundary strictly drops."""
    arr = G.edge_arr
    if not len(arr):
        return mask
    mask = mask.copy()
    n = G.n
    for _ in range(max_rounds):
        inside_deg = np.zeros(n, dtype=np.int64)
        u_in = mask[arr[:, 0]]
        v_in = mask[arr[:, 1]]
        np.add.at(inside_deg, arr[:, 0], v_in.astype(np.int64))
        np.add.at(inside_deg, arr[:, 1], u_in.astype(np.int64))
        deg = G.degrees
        gain_out = inside_deg - (deg - inside_deg)  # removing u from S changes boundary by -(out-in)
        s_idx = np.flatnonzero(mask)
        t_idx = np.flatnonzero(~mask)
        if not len(s_idx) or not len(t_idx):
            return mask
        u = s_idx[np.argmin(gain_out[s_idx])]        # best to expel: many outside neighbors
        v = t_idx[np.argmax(gain_out[t_idx])]        # best to admit: many inside neighbors
        delta = (2 * inside_deg[u] - deg[u]) + (deg[v] - 2 * inside_deg[v]) + 2 * int(G.has_edge(int(u), int(v)))
        if delta >= 0:
            return mask
        mask[u] = False
        mask[v] = True
    return mask


def worst_case_balanced_cut(
    G: Graph,
    phi_hint: Embedding | None = None,
    *,
    seed: int = 0,
    tol_feas: float = DEFAULT_TOL_FEAS,
) -> CutResult:
    """Ball-sweep stand-in for a worst-case balanced-cut subroutine: build
    (or reuse) the balanced-cut embedding, sweep prefixes of every center's
    distance ordering, pack whole components when possible, and polish with
    greedy swaps. Both sides always have at least n/5 vertices."""
    n = G.n
    lo = max(math.ceil(n / 5), 2 if n >= 4 else 1)
    hi = n - lo
    if lo > hi or n < 2:
        raise PipelineError(f"no balanced split exists for n={n}")
    report = None
    if phi_hint is None:
        phi_hint, report = solve_cached(build_model(BALANCED_CUT, G), tol_feas=tol_feas, seed=seed)
    best = _prefix_sweep_candidates(G, phi_hint, lo, hi)
    if best is None:
        raise PipelineError("prefix sweep produced no candidate in the size window")
    key, mask = best

    comps = G.components()
    if len(comps) > 1 and max(len(c) for c in comps) <= hi:
        packed = np.zeros(n, dtype=bool)
        left = 0
        right = 0
        for c in sorted(comps, key=lambda c: (-len(c), c[0] if len(c) else 0)):
            if left <= right:
                packed[c] = True
                left += len(c)
            else:
                right += len(c)
        if lo <= int(packed.sum()) <= hi:
            b = boundary_counts(G, packed)
            if (b, abs(int(packed.sum()) - n / 2)) < (key[0], key[1]):
                mask = packed

    mask = _swap_polish(G, mask)
    size = int(mask.sum())
    if not (lo <= size <= hi):
        raise PipelineError("swap polish left the balance window")  # swaps preserve size
    diag = {"solver": report.to_dict() if report else None, "stand_in": "ball-sweep"}
    return make_cut_result(G, np.flatnonzero(mask), diag)


def balanced_cut(
    G: Graph,
    D: int,
    rng: np.random.Generator,
    *,
    c_side: int = C_SIDE_DEFAULT,
    reference: PlantedInstance | None = None,
    tol_feas: float = DEFAULT_TOL_FEAS,
    solve_seed: int = 0,
) -> CutResult:
    """Sparsify with the balanced-cut model, then run the worst-case
    stand-in on (V, E+); the returned boundary counts all graph edges."""
    out = sparsify(G, BALANCED_CUT, D, spawn_rng(rng, "hvr"), tol_feas=tol_feas, solve_seed=solve_seed)
    plus_graph = Graph(G.n, out.e_plus)
    inner = worst_case_balanced_cut(plus_graph, seed=solve_seed + 17, tol_feas=tol_feas)
    side = inner.side
    n = G.n
    if min(len(side), n - len(side)) < n / c_side:
        raise PipelineError("stand-in returned a side below n/C")
    diag = {
        "degraded": out.degraded,
        "e_minus": len(out.e_minus),
        "stand_in_boundary": inner.boundary_cost,
        "sizes": (len(side), n - len(side)),
    }
    if reference is not None:
        diag["sr_cost"] = reference.sr_cost()
    result = make_cut_result(G, side, diag)
    if reference is not None:
        result.diagnostics["ratio_vs_sr_cost"] = result.boundary_cost / max(reference.sr_cost(), 1e-12)
    return result


# ---------------------------------------------------------------------------
# multicut


def gvy_region_growing(
    members: Iterable[int],
    dist: Callable[[int, int], float],
    demands: Iterable[Sequence[int]],
    edges: Iterable[Sequence[int]],
    *,
    tol: float = 1e-4,
) -> list[set]:
    """Region growing over the shortest-path metric induced by the edge
    lengths dist(u, v): repeatedly grow a ball around an unseparated source
    at a radius below half the demand separation, chosen by the standard
    volume-charging rule. Returns a partition of the member set."""
    members = sorted(set(int(v) for v in members))
    member_set = set(members)
    dem = [(int(s), int(t)) for s, t in demands if int(s) in member_set and int(t) in member_set]
    edge_list = [(int(u), int(v)) for u, v in edges if int(u) in member_set and int(v) in member_set]
    lengths = {}
    for u, v in edge_list:
        lengths[(u, v)] = lengths[(v, u)] = max(0.0, float(dist(u, v)))
    for s, t in dem:
        if dist(s, t) < 2.0 - tol:
            raise PipelineError(f"demand ({s},{t}) at distance {dist(s, t):.4f} < 2 - tol")
    if not dem:
        return [set(members)] if members else []

    k = len(dem)
    total_volume = 0.5 * sum(lengths[(u, v)] for u, v in edge_list)
    seed_volume = max(total_volume, 1e-12) / k
    adj: dict[int, list[tuple[int, float]]] = {u: [] for u in members}
    for u, v in edge_list:
        adj[u].append((v, lengths[(u, v)]))
        adj[v].append((u, lengths[(u, v)]))

    remaining = set(members)
    parts: list[set] = []

    def sp_from(src: int) -> dict:
        out = {src: 0.0}
        pq = [(0.0, src)]
        while pq:
            d0, u = heapq.heappop(pq)
            if d0 > out.get(u, np.inf):
                continue
            for v, l in adj[u]:
                if v not in remaining:
                    continue
                nd = d0 + l
                if nd < out.get(v, np.inf) - 1e-15:
                    out[v] = nd
                    heapq.heappush(pq, (nd, v))
        return out

    charge = math.log(k + 1.0)
    for s, t in dem:
        if s not in remaining or t not in remaining:
            continue  # some earlier region already swallowed one endpoint
        sp = sp_from(s)
        if t in sp and sp[t] < 1.0:
            raise PipelineError(f"demand ({s},{t}) at path distance {sp[t]:.4f} inside a region")
        crits = sorted({d for d in sp.values() if d < 1.0} | {1.0 - 1e-9})
        chosen = None
        fallback = None
        for i, rc in enumerate(crits):
            r = rc + 1e-12 if i < len(crits) - 1 else rc
            region = {u for u, d0 in sp.items() if d0 <= r}
            cut_edges_n = 0
            vol = seed_volume
            for u, v in edge_list:
                if u not in remaining or v not in remaining:
                    continue
                du, dv = sp.get(u, np.inf), sp.get(v, np.inf)
                if du > dv:
                    du, dv = dv, du
                    u, v = v, u
                if dv <= r:
                    vol += lengths[(u, v)]
                elif du <= r < dv:
                    cut_edges_n += 1
                    vol += min(lengths[(u, v)], r - du)
            ratio = cut_edges_n / max(vol, 1e-12)
            if fallback is None or ratio < fallback[0]:
                fallback = (ratio, region, cut_edges_n)
            if cut_edges_n <= charge * vol:
                chosen = (region, cut_edges_n)
                break
        if chosen is None:
            chosen = (fallback[1], fallback[2])
        region, _ = chosen
        if t in region:
            raise PipelineError("region growing reached the sink; metric violated")
        parts.append(set(region))
        remaining -= region
    if remaining:
        parts.append(set(remaining))
    assignment = {}
    for i, p in enumerate(parts):
        for v in p:
            assignment[v] = i
    for s, t in dem:
        if assignment[s] == assignment[t]:
            raise PipelineError(f"demand ({s},{t}) not separated by region growing")
    return parts


def multicut(
    G: Graph,
    demands: Iterable[Sequence[int]],
    D: int,
    rng: np.random.Generator,
    *,
    reference: PlantedInstance | None = None,
    tol_feas: float = DEFAULT_TOL_FEAS,
    solve_seed: int = 0,
) -> CutResult:
    """Sparsify with the multicut model; certified pieces cannot hold a
    demand pair, and region growing separates pairs inside M."""
    dem = [(int(s), int(t)) for s, t in demands]
    if not dem:
        raise PipelineError("multicut needs at least one demand")
    out = sparsify(G, "multicut", D, spawn_rng(rng, "hvr"), demands=dem, tol_feas=tol_feas, solve_seed=solve_seed)
    for p in out.pieces:
        mem = set(p.vertices)
        for s, t in dem:
            if s in mem and t in mem:
                raise PipelineError(f"certified piece contains demand pair ({s},{t}); embedding bug")
    phi = out.final_embedding()
    in_m = set(out.M)
    m_edges = [e for e in out.e_plus if e[0] in in_m and e[1] in in_m]
    m_parts = gvy_region_growing(in_m, phi.d, dem, m_edges) if in_m else []
    parts = [sorted(p) for p in m_parts] + [sorted(p.vertices) for p in out.pieces]
    partition = Partition(G.n, [p for p in parts if p])
    for s, t in dem:
        if partition.part_of(s) == partition.part_of(t):
            raise PipelineError(f"demand ({s},{t}) not separated")
    diag = {"degraded": out.degraded, "e_minus": len(out.e_minus), "parts": len(partition.parts)}
    if reference is not None:
        diag["sr_cost"] = reference.sr_cost()
    result = make_partition_result(G, partition, diag)
    if reference is not None:
        result.diagnostics["ratio_vs_sr_cost"] = result.boundary_cost / max(reference.sr_cost(), 1e-12)
    return result


# ---------------------------------------------------------------------------
# small set expansion


def sse_case1(
    G: Graph,
    E_plus: Iterable[Edge],
    weights: np.ndarray,
    rho: float,
    W_cap: float,
    *,
    phi: Embedding | None = None,
    seed: int = 0,
    weight_factor: float = CASE1_WEIGHT_FACTOR,
    tol_feas: float = DEFAULT_TOL_FEAS,
) -> CutResult | None:
    """Ball sweep over the working-edge embedding: centers x radii in
    [1/16, 1/4], keep sets of size in [rho n/4, 3 rho n/2] and weight at
    most weight_factor * W_cap, minimize the E+ boundary. None if no
    candidate qualifies (the caller then relies on the threshold route)."""
    n = G.n
    plus_edges = sorted({(int(u), int(v)) for u, v in E_plus})
    plus_graph = Graph(n, plus_edges)
    if phi is None:
        model = build_model(SSE, plus_graph, rho=rho)
        phi, _ = solve_cached(model, tol_feas=tol_feas, seed=seed)
    Dmat = phi.dist_matrix()
    arr = plus_graph.edge_arr
    lo = rho * n / 4.0
    hi = 1.5 * rho * n
    cap = weight_factor * W_cap
    w = np.asarray(weights, dtype=np.float64)
    best = None
    for center in range(n):
        order = np.lexsort((np.arange(n), Dmat[center]))
        dists = Dmat[center][order]
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.arange(n)
        if len(arr):
            lo_rank = np.minimum(rank[arr[:, 0]], rank[arr[:, 1]])
            hi_rank = np.maximum(rank[arr[:, 0]], rank[arr[:, 1]])
            delta = np.zeros(n + 1, dtype=np.int64)
            np.add.at(delta, lo_rank + 1, 1)
            np.add.at(delta, hi_rank + 1, -1)
            cuts = np.cumsum(delta)
        else:
            cuts = np.zeros(n + 1, dtype=np.int64)
        wsum = np.concatenate([[0.0], np.cumsum(w[order])])
        # candidate prefix sizes: ball at r=1/16 plus each distinct radius in (1/16, 1/4]
        sizes = []
        p_min = int(np.searchsorted(dists, 1.0 / 16.0, side="right"))
        sizes.append(p_min)
        inside = (dists > 1.0 / 16.0) & (dists <= 0.25)
        for p in np.flatnonzero(inside):
            if p + 1 == n or dists[p + 1] > dists[p]:
                sizes.append(int(p + 1))
        for p in sizes:
            if p < 1 or not (lo <= p <= hi) or wsum[p] > cap + 1e-9:
                continue
            key = (int(cuts[p]), p, center)
            if best is None or key < best[0]:
                best = (key, order[:p].copy())
    if best is None:
        return None
    side = best[1]
    return CutResult(
        frozenset(map(int, side)),
        int(edge_boundary(side, plus_graph)),
        {"case": "ball-sweep", "weight": float(w[side].sum()), "center_rank": best[0]},
    )


class LpInfeasibleError(PipelineError):
    pass


def sse_case2_lp(
    V_rest: Iterable[int],
    E_plus_rest: Iterable[Edge],
    weights: dict | np.ndarray,
    rho: float,
    n_total: int,
) -> LpSolution:
    """Exact LP: minimize sum w_u x_u + sum |x_u - x_v| over the working
    edges, subject to sum x >= rho n / 2 and x in [0,1]; absolute values
    via auxiliary variables, solved with HiGHS."""
    verts = sorted(set(int(v) for v in V_rest))
    pos = {u: i for i, u in enumerate(verts)}
    edges = sorted({(int(u), int(v)) for u, v in E_plus_rest})
    for u, v in edges:
        if u not in pos or v not in pos:
            raise ValueError(f"edge ({u},{v}) leaves the vertex set")
    nv, ne = len(verts), len(edges)
    need = rho * n_total / 2.0
    if nv < need - 1e-9:
        raise LpInfeasibleError(f"|V_rest|={nv} cannot reach sum x >= {need}")
    if isinstance(weights, dict):
        w = np.array([float(weights[u]) for u in verts])
    else:
        w = np.asarray(weights, dtype=np.float64)[verts]
    c = np.concatenate([w, np.ones(ne)])
    # rows: x_u - x_v - y_e <= 0 ; x_v - x_u - y_e <= 0 ; -sum x <= -need
    rows, cols, vals = [], [], []
    for i, (u, v) in enumerate(edges):
        rows += [2 * i, 2 * i, 2 * i, 2 * i + 1, 2 * i + 1, 2 * i + 1]
        cols += [pos[u], pos[v], nv + i, pos[v], pos[u], nv + i]
        vals += [1.0, -1.0, -1.0, 1.0, -1.0, -1.0]
    base = 2 * ne
    for i in range(nv):
        rows.append(base)
        cols.append(i)
        vals.append(-1.0)
    from scipy.sparse import coo_matrix

    A = coo_matrix((vals, (rows, cols)), shape=(base + 1, nv + ne))
    b = np.concatenate([np.zeros(base), [-need]])
    bounds = [(0.0, 1.0)] * nv + [(0.0, None)] * ne
    res = linprog(c, A_ub=A.tocsr(), b_ub=b, bounds=bounds, method="highs")
    if not res.success:
        raise LpInfeasibleError(f"LP solve failed: {res.message}")
    x = {u: float(np.clip(res.x[pos[u]], 0.0, 1.0)) for u in verts}
    total = sum(x.values())
    if total < need - 1e-6 * max(1.0, need):
        raise LpInfeasibleError("LP solution violates the mass constraint")
    return LpSolution(tuple(verts), x, float(res.fun), {u: float(w[pos[u]]) for u in verts})


def _f_cost(S: set, weights: dict, plus_edges: list[Edge]) -> float:
    w = sum(weights[u] for u in S)
    b = sum(1 for u, v in plus_edges if (u in S) != (v in S))
    return w + b


def threshold_extract(
    lp: LpSolution,
    Z_pieces: Sequence[Sequence[int]],
    E_plus_rest: Iterable[Edge],
    weights: dict,
    rho: float,
    n_total: int,
    *,
    tol: float = 1e-6,
) -> CutResult:
    """Pick the threshold set with the best cost/size ratio, then take the
    cheapest-ratio prefix of its piece intersections with total size in
    [rho n/4, 2 rho n]."""
    plus_edges = sorted({(int(u), int(v)) for u, v in E_plus_rest})
    xs = lp.x
    values = sorted({v for v in xs.values()}, reverse=True)
    lo = rho * n_total / 4.0
    hi = 2.0 * rho * n_total
    best = None  # (ratio, -r, set)
    for r in values:
        S_r = {u for u, xv in xs.items() if xv >= r}
        if len(S_r) < lo:
            continue
        f = _f_cost(S_r, weights, plus_edges)
        ratio = f / len(S_r)
        if best is None or ratio < best[0] - 1e-15:
            best = (ratio, r, S_r, f)
    if best is None:
        raise PipelineError("no threshold set reaches rho n / 4; LP constraint violated upstream")
    _, r_star, S_star, f_star = best
    if f_star > 4.0 * lp.objective / (rho * n_total) * len(S_star) + tol * (1.0 + lp.objective) * 4.0:
        raise AssertionError("threshold ratio bound violated; LP inexact?")

    ranked = []
    for idx, piece in enumerate(Z_pieces):
        inter = S_star & set(int(v) for v in piece)
        if not inter:
            continue
        f_piece = _f_cost(inter, weights, plus_edges)
        ranked.append((f_piece / len(inter), idx, inter, f_piece))
    ranked.sort(key=lambda t: (t[0], t[1]))
    chosen: set[int] = set()
    total = 0
    f_total = 0.0
    ok = False
    for ratio, idx, inter, f_piece in ranked:
        chosen |= inter
        total += len(inter)
        f_total += f_piece
        if lo <= total <= hi:
            ok = True
            break
        if total > hi:
            raise PipelineError("prefix jumped over the size window; piece too large")
    if not ok:
        raise PipelineError("piece prefixes never reached the size window")
    if f_total > 16.0 * lp.objective + 16.0 * tol * (1.0 + lp.objective):
        raise AssertionError("f(S') <= 16 LP* violated")
    return CutResult(
        frozenset(chosen),
        int(round(f_total)),
        {
            "case": "threshold",
            "r_star": r_star,
            "lp_value": lp.objective,
            "f_threshold": f_star,
            "threshold_size": len(S_star),
            "f_prefix": f_total,
        },
    )


def sse(
    G: Graph,
    rho: float,
    D: int,
    rng: np.random.Generator,
    *,
    reference: PlantedInstance | None = None,
    tol_feas: float = DEFAULT_TOL_FEAS,
    solve_seed: int = 0,
    budget: SolveBudget | None = None,
) -> CutResult:
    """Both routes are tried: the ball sweep on (V, E+) and the LP threshold
    extraction over the certified pieces; the cheaper total (E+ boundary
    plus incident E- edges) wins."""
    if not (0.0 < rho <= 0.5):
        raise ValueError("rho must lie in (0, 1/2]")
    n = G.n
    out = sparsify(
        G, SSE, D, spawn_rng(rng, "hvr"), rho=rho, tol_feas=tol_feas, solve_seed=solve_seed, budget=budget
    )
    weights = np.zeros(n)
    for u, v in out.e_minus:
        weights[u] += 1.0
        weights[v] += 1.0
    w_dict = {u: float(weights[u]) for u in range(n)}

    def total_cost(S: set) -> float:
        plus_b = sum(1 for u, v in out.e_plus if (u in S) != (v in S))
        minus_inc = sum(1 for u, v in out.e_minus if u in S or v in S)
        return plus_b + minus_inc

    candidates: list[tuple[float, str, set]] = []
    # the first-iteration embedding is feasible for the model and already
    # carries the cluster geometry; sweeping it avoids a second solve
    case1 = sse_case1(
        G,
        out.e_plus,
        weights,
        rho,
        W_cap=float(len(out.e_minus)),
        phi=out.trace[0].phi,
        seed=solve_seed + 31,
        tol_feas=tol_feas,
    )
    if case1 is not None:
        side = set(case1.side)
        if 1.0 / 3.0 < rho < 0.5 and len(side) > n / 2:
            side = set(range(n)) - side
        candidates.append((total_cost(side), "ball-sweep", side))

    v_rest = sorted(set(range(n)) - set(out.M))
    lp_diag = {}
    try:
        rest_set = set(v_rest)
        plus_rest = [e for e in out.e_plus if e[0] in rest_set and e[1] in rest_set]
        lp = sse_case2_lp(v_rest, plus_rest, w_dict, rho, n)
        extract = threshold_extract(lp, [p.vertices for p in out.pieces], plus_rest, w_dict, rho, n)
        side2 = set(extract.side)
        candidates.append((total_cost(side2), "threshold", side2))
        lp_diag = extract.diagnostics
    except LpInfeasibleError as exc:
        lp_diag = {"lp_infeasible": str(exc)}
    if not candidates:
        raise PipelineError("both routes failed; no candidate set produced")
    candidates.sort(key=lambda t: (t[0], t[1]))
    cost, which, side = candidates[0]
    size = len(side)
    if not (rho * n / 4.0 - 1e-9 <= size <= max(2.0 * rho * n, n / 2.0) + 1e-9):
        raise PipelineError(f"result size {size} outside [rho n/4, max(2 rho n, n/2)]")
    diag = {
        "case": which,
        "degraded": out.degraded,
        "e_minus": len(out.e_minus),
        "internal_total": cost,
        "size": size,
        **{f"lp_{k}": v for k, v in lp_diag.items()},
    }
    if reference is not None:
        diag["sr_cost"] = reference.sr_cost()
    result = make_cut_result(G, side, diag)
    if reference is not None:
        result.diagnostics["ratio_vs_sr_cost"] = result.boundary_cost / max(reference.sr_cost(), 1e-12)
    return result


# ---------------------------------------------------------------------------
# sparsest cut


def default_rho_grid(u_size: int) -> tuple[float, ...]:
    grid = []
    rho = 0.5
    while rho * u_size >= 2.0 and len(grid) < 6:
        grid.append(rho)
        rho /= 2.0
    return tuple(grid)


def sparsest_cut(
    G: Graph,
    U: Iterable[int],
    rho_grid: Sequence[float] | None = None,
    D: int = 16,
    rng: np.random.Generator | None = None,
    *,
    repeats: int = 5,
    hidden_side: Iterable[int] | None = None,
    tol_feas: float = DEFAULT_TOL_FEAS,
    budget: SolveBudget | None = None,
) -> CutResult:
    """Guess the small-side fraction over a geometric grid, also run the
    repeated-application route (peel halves until a quarter of the guessed
    mass is collected), rerun everything `repeats` times with fresh
    randomness, and keep the sparsest E(A, U-A)/|A| candidate with
    |A| <= |U|/2. The boundary_cost is measured inside G[U]; `side` uses
    global vertex ids."""
    rng = rng if rng is not None else np.random.default_rng(0)
    ids = sorted(set(int(v) for v in U))
    if len(ids) < 4:
        raise PipelineError("sparsest cut needs |U| >= 4")
    sub, back = G.subgraph(ids)
    nu = sub.n
    if rho_grid is None:
        rho_grid = default_rho_grid(nu)
    rho_grid = tuple(r for r in rho_grid if 0.0 < r <= 0.5 and r * nu >= 2.0)
    if hidden_side is not None:
        hidden_local = {i for i, g in enumerate(back) if int(g) in set(map(int, hidden_side))}
        frac = min(len(hidden_local), nu - len(hidden_local)) / nu
        if 0.0 < frac <= 0.5 and frac * nu >= 2.0:
            rho_grid = tuple(sorted(set(rho_grid) | {frac}, reverse=True))

    def sparsity_of(local_side: set) -> tuple[float, set]:
        side = local_side if len(local_side) * 2 <= nu else set(range(nu)) - local_side
        if not side:
            return np.inf, side
        return edge_boundary(side, sub) / len(side), side

    best = None  # (sparsity, size tiebreak, local side, tag)

    def offer(local_side: set, tag: str):
        nonlocal best
        if not local_side or len(local_side) >= nu:
            return
        sp, side = sparsity_of(set(local_side))
        key = (sp, len(side), tag)
        if best is None or key < best[0]:
            best = (key, side, tag)

    base_seed = int(rng.integers(0, 2**31 - 1))
    for rep in range(repeats):
        rng_rep = spawn_rng(rng, f"amplify.{rep}")
        for rho in rho_grid:
            try:
                res = sse(
                    sub,
                    rho,
                    D,
                    rng_rep,
                    tol_feas=tol_feas,
                    solve_seed=base_seed + 1000 * int(1 / rho),
                    budget=budget,
                )
            except PipelineError:
                continue
            offer(set(res.side), f"grid-{rho:g}")
        # repeated application at rho = 1/2 on a shrinking vertex set
        u_cur = list(range(nu))
        union: set[int] = set()
        prefix_done = set()
        for it in range(8):
            if len(u_cur) < 4 or len(union) >= nu / 8.0:
                break
            inner_sub, inner_back = sub.subgraph(u_cur)
            if inner_sub.n * 0.5 < 1.0:
                break
            try:
                res = sse(
                    inner_sub,
                    0.5,
                    D,
                    rng_rep,
                    tol_feas=tol_feas,
                    solve_seed=base_seed + 7000 + 13 * len(u_cur),
                    budget=budget,
                )
            except PipelineError:
                break
            piece = {int(inner_back[v]) for v in res.side}
            if len(piece) * 2 > len(u_cur):
                piece = set(u_cur) - piece
            if not piece:
                break
            union |= piece
            u_cur = [v for v in u_cur if v not in piece]
            for rho in rho_grid:
                if rho in prefix_done:
                    continue
                if len(union) >= rho * nu / 4.0:
                    offer(set(union), f"peel-{rho:g}")
                    prefix_done.add(rho)

    if best is None:
        raise PipelineError("no sparsest-cut candidate produced")
    key, side_local, tag = best
    side_global = frozenset(int(back[v]) for v in side_local)
    return CutResult(
        side_global,
        int(edge_boundary(side_local, sub)),
        {"sparsity": key[0], "route": tag, "u_size": nu},
    )
