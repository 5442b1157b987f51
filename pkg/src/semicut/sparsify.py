"""Iterative solution sparsification: solve the model, carve out
small-diameter pieces around heavy vertices, drop long edges, repeat at
halving scales. Produces (M, Zs, E+, E-) with per-iteration certificates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graphs import Edge, Graph
from .sdp import (
    DEFAULT_TOL_FEAS,
    Embedding,
    SdpModel,
    SolveBudget,
    SolverReport,
    build_model,
    solve_cached,
)

HVR_DELTA_CAP = 1.0 / 32.0
PHI_FEASIBLE_DIAM = 0.25


@dataclass(frozen=True)
class ScaleSchedule:
    D: int

    def __post_init__(self):
        d = self.D
        if d < 4 or (d & (d - 1)) != 0 or (d.bit_length() - 1) % 2 != 0:
            raise ValueError(f"D must be a power of 4, at least 4; got {d}")

    @property
    def T(self) -> int:
        return (self.D.bit_length() - 1) // 2

    @property
    def deltas(self) -> tuple[float, ...]:
        return tuple(2.0 ** (-t) for t in range(1, self.T + 1))


@dataclass(frozen=True)
class HeavySet:
    members: frozenset
    populations: dict  # vertex -> ball population count
    delta: float
    threshold: float

    def __contains__(self, u: int) -> bool:
        return u in self.members

    def __len__(self) -> int:
        return len(self.members)


def heavy_vertices(phi: Embedding, M: Iterable[int], delta: float) -> HeavySet:
    """Vertices of M whose delta-ball (in the squared metric, including the
    vertex itself) holds at least delta^2 * n embedded vertices of M; n is
    the global vertex count, not |M|."""
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    ids = np.array(sorted(set(int(v) for v in M)), dtype=np.int64)
    n = phi.n
    if len(ids) and (ids[0] < 0 or ids[-1] >= n):
        raise ValueError("M contains vertices outside the embedding")
    threshold = delta * delta * n
    if not len(ids):
        return HeavySet(frozenset(), {}, delta, threshold)
    D = phi.dist_matrix()[np.ix_(ids, ids)]
    pops = (D <= delta + 1e-12).sum(axis=1)
    heavy = ids[pops >= threshold]
    populations = {int(u): int(c) for u, c in zip(ids.tolist(), pops.tolist())}
    return HeavySet(frozenset(map(int, heavy)), populations, delta, threshold)


@dataclass
class HvrTrace:
    rounds: list = field(default_factory=list)  # per while-iteration dicts


def _components(nodes: list[int], adj: dict) -> list[list[int]]:
    seen = set()
    comps = []
    for start in nodes:
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        comp = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
                    comp.append(v)
        comps.append(sorted(comp))
    return comps


def _diam(D: np.ndarray, ids: Sequence[int]) -> float:
    if len(ids) < 2:
        return 0.0
    sub = D[np.ix_(ids, ids)]
    return float(sub.max())


def _split_oversized(D: np.ndarray, ids: list[int], cap: float) -> list[list[int]]:
    """Certificate guard: if solver slack pushed a piece past the diameter
    cap, peel balls of shrinking radius until every piece fits."""
    if _diam(D, ids) <= cap:
        return [ids]
    out = []
    rest = sorted(ids)
    radius = 0.125
    while rest:
        center = rest[0]
        piece = [v for v in rest if D[center, v] <= radius]
        while _diam(D, piece) > cap and radius > 1e-9:
            radius /= 2.0
            piece = [v for v in rest if D[center, v] <= radius]
        if not piece:
            piece = [center]
        out.append(sorted(piece))
        rest = [v for v in rest if v not in set(piece)]
    return out


def remove_heavy(
    n: int,
    M: Iterable[int],
    phi: Embedding,
    delta: float,
    rng: np.random.Generator,
    tol_feas: float = DEFAULT_TOL_FEAS,
    trace: HvrTrace | None = None,
) -> tuple[set, list[list[int]]]:
    """Carve small-diameter pieces out of M until no heavy vertex remains.

    Per while-iteration: link heavy vertices at distance <= 4*delta,
    remove connected components of diameter <= 1/8 as balls around the
    component, then remove balls around a greedy maximal independent set of
    the remaining heavy vertices; ball radius r is drawn fresh per
    iteration from [delta, 2*delta). A delta >= 1/32 is internally replaced
    by 1/32. The greedy MIS is deterministic (ascending vertex id) and does
    not depend on r.
    """
    delta_eff = min(float(delta), HVR_DELTA_CAP)
    M_cur = set(int(v) for v in M)
    dZ: list[list[int]] = []
    D = phi.dist_matrix()
    while True:
        hv = heavy_vertices(phi, M_cur, delta_eff)
        if not len(hv):
            break
        heavy = sorted(hv.members)
        pos = {u: i for i, u in enumerate(heavy)}
        Dh = D[np.ix_(heavy, heavy)]
        adj = {u: [] for u in heavy}
        close = np.argwhere(Dh <= 4.0 * delta_eff + 1e-12)
        for i, j in close:
            if i < j:
                adj[heavy[i]].append(heavy[j])
                adj[heavy[j]].append(heavy[i])
        comps = _components(heavy, adj)
        r = float(rng.uniform(delta_eff, 2.0 * delta_eff))

        small = [c for c in comps if _diam(D, c) <= 0.125]
        small.sort(key=lambda c: c[0])
        in_small = set()
        for c in small:
            in_small.update(c)
        # greedy MIS over remaining heavy vertices, by ascending id
        mis: list[int] = []
        blocked = set()
        for u in heavy:
            if u in in_small or u in blocked:
                continue
            mis.append(u)
            for v in adj[u]:
                blocked.add(v)

        m_ids = np.array(sorted(M_cur), dtype=np.int64)
        claimed: set[int] = set()
        new_pieces: list[list[int]] = []
        for c in small:
            dist_to_c = D[np.ix_(m_ids, c)].min(axis=1)
            ball = [int(v) for v in m_ids[dist_to_c <= r] if v not in claimed]
            if ball:
                claimed.update(ball)
                new_pieces.append(sorted(ball))
        for u in mis:
            ball = [int(v) for v in m_ids[D[m_ids, u] <= r] if v not in claimed]
            if ball:
                claimed.update(ball)
                new_pieces.append(sorted(ball))
        checked: list[list[int]] = []
        for piece in new_pieces:
            checked.extend(_split_oversized(D, piece, PHI_FEASIBLE_DIAM + 2.0 * tol_feas))
        if trace is not None:
            trace.rounds.append(
                {
                    "heavy": len(heavy),
                    "components": len(comps),
                    "small_components": len(small),
                    "mis": len(mis),
                    "removed": len(claimed),
                    "r": r,
                    "delta": delta_eff,
                }
            )
        M_cur -= claimed
        dZ.extend(checked)
        if not claimed:  # every candidate ball was empty; cannot happen, guard anyway
            raise RuntimeError("heavy-vertex removal made no progress")
    return M_cur, dZ


def is_phi_feasible(Z: Iterable[int], phi: Embedding, tol: float = 0.0) -> bool:
    """True iff the squared-distance diameter of Z is at most 1/4 + tol."""
    ids = sorted(set(int(v) for v in Z))
    for v in ids:
        if not (0 <= v < phi.n):
            raise ValueError(f"vertex {v} is not embedded")
    if len(ids) < 2:
        return True
    D = phi.dist_matrix()[np.ix_(ids, ids)]
    return float(D.max()) <= PHI_FEASIBLE_DIAM + tol


@dataclass(frozen=True)
class CertifiedPiece:
    vertices: tuple[int, ...]
    iteration: int  # which scale carved this piece

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass
class IterationTrace:
    t: int
    delta: float
    report: SolverReport
    phi: Embedding
    heavy_count: int
    m_size: int
    long_edges: int
    hvr_cut_edges: int
    piece_sizes: list[int]
    hvr: HvrTrace
    m_after: frozenset = frozenset()
    e_plus_after: frozenset = frozenset()

    def summary(self) -> dict:
        return {
            "t": self.t,
            "delta": self.delta,
            "solver": self.report.to_dict(),
            "heavy": self.heavy_count,
            "M": self.m_size,
            "long_edges": self.long_edges,
            "hvr_cut_edges": self.hvr_cut_edges,
            "piece_sizes": sorted(self.piece_sizes, reverse=True),
        }


@dataclass
class SparsifierOutput:
    graph: Graph
    model_kind: str
    M: frozenset
    pieces: tuple[CertifiedPiece, ...]
    e_plus: frozenset
    e_minus: frozenset
    trace: list[IterationTrace]
    degraded: bool
    schedule: ScaleSchedule
    params: dict = field(default_factory=dict)

    @property
    def piece_sets(self) -> list[set]:
        return [set(p.vertices) for p in self.pieces]

    def embedding_for(self, piece: CertifiedPiece) -> Embedding:
        return self.trace[piece.iteration - 1].phi

    def final_embedding(self) -> Embedding:
        return self.trace[-1].phi

    def trace_json(self) -> list[dict]:
        return [it.summary() for it in self.trace]


def _edges_within(edges: set[Edge], members: np.ndarray) -> set[Edge]:
    return {e for e in edges if members[e[0]] and members[e[1]]}


def sparsify(
    G: Graph,
    model_kind: str,
    D: int,
    rng: np.random.Generator,
    *,
    rho: float | None = None,
    demands: Sequence[Sequence[int]] | None = None,
    tol_feas: float = DEFAULT_TOL_FEAS,
    tol_obj: float = 1e-4,
    budget: SolveBudget | None = None,
    solve_seed: int = 0,
) -> SparsifierOutput:
    """Run the scale schedule: at each t solve the model on the working edge
    set inside M, carve heavy-vertex pieces (cut edges go to E-), then move
    edges of squared length >= delta_t to E-. Never aborts: solver
    non-convergence flags the output degraded and the run completes."""
    schedule = ScaleSchedule(D)
    n = G.n
    M: set[int] = set(range(n))
    pieces: list[CertifiedPiece] = []
    e_plus: set[Edge] = set(G.edges)
    e_minus: set[Edge] = set()
    trace: list[IterationTrace] = []
    degraded = False
    warm = None

    for t, delta_t in enumerate(schedule.deltas, start=1):
        in_m = np.zeros(n, dtype=bool)
        in_m[sorted(M)] = True
        active_edges = sorted(_edges_within(e_plus, in_m))
        model = build_model(model_kind, G, rho=rho, demands=demands, edges=active_edges)
        phi, report = solve_cached(
            model,
            tol_feas=tol_feas,
            tol_obj=tol_obj,
            budget=budget,
            seed=solve_seed + t,
            warm=warm,
        )
        warm = phi.vectors
        if not report.converged:
            degraded = True

        heavy_before = len(heavy_vertices(phi, M, min(delta_t, HVR_DELTA_CAP)))
        hvr_trace = HvrTrace()
        M_new, dZ = remove_heavy(n, M, phi, delta_t, rng, tol_feas=tol_feas, trace=hvr_trace)

        # edges of E+ cut by the new pieces (within the old M only)
        label = {v: 0 for v in M_new}
        for i, piece in enumerate(dZ, start=1):
            for v in piece:
                label[v] = i
        hvr_cut = {
            e
            for e in e_plus
            if e[0] in label and e[1] in label and label[e[0]] != label[e[1]]
        }
        e_plus -= hvr_cut
        e_minus |= hvr_cut
        M = M_new
        pieces.extend(CertifiedPiece(tuple(p), t) for p in dZ)

        purity = heavy_vertices(phi, M, delta_t)
        if len(purity):
            raise AssertionError(f"iteration {t}: heavy vertices remain in M after removal")

        in_m = np.zeros(n, dtype=bool)
        in_m[sorted(M)] = True
        Dm = phi.dist_matrix()
        long_edges = {
            e for e in _edges_within(e_plus, in_m) if Dm[e[0], e[1]] >= delta_t - 1e-12
        }
        e_plus -= long_edges
        e_minus |= long_edges

        trace.append(
            IterationTrace(
                t=t,
                delta=delta_t,
                report=report,
                phi=phi,
                heavy_count=heavy_before,
                m_size=len(M),
                long_edges=len(long_edges),
                hvr_cut_edges=len(hvr_cut),
                piece_sizes=[len(p) for p in dZ],
                hvr=hvr_trace,
                m_after=frozenset(M),
                e_plus_after=frozenset(e_plus),
            )
        )

    out = SparsifierOutput(
        graph=G,
        model_kind=model_kind,
        M=frozenset(M),
        pieces=tuple(pieces),
        e_plus=frozenset(e_plus),
        e_minus=frozenset(e_minus),
        trace=trace,
        degraded=degraded,
        schedule=schedule,
        params={"rho": rho, "demands": tuple(map(tuple, demands)) if demands else None},
    )
    _assert_partition_laws(out)
    return out


def _assert_partition_laws(out: SparsifierOutput) -> None:
    n = out.graph.n
    covered = set(out.M)
    for p in out.pieces:
        if covered & set(p.vertices):
            raise AssertionError("pieces overlap M or each other")
        covered |= set(p.vertices)
    if covered != set(range(n)):
        raise AssertionError("M and the pieces do not cover V")
    if out.e_plus | out.e_minus != out.graph.edges or (out.e_plus & out.e_minus):
        raise AssertionError("E+ and E- do not partition E")
    side = {}
    for v in out.M:
        side[v] = 0
    for i, p in enumerate(out.pieces, start=1):
        for v in p.vertices:
            side[v] = i
    for u, v in out.e_plus:
        if side[u] != side[v]:
            raise AssertionError(f"E+ edge ({u},{v}) crosses the partition")
