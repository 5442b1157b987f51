"""Spectral expansion measure and the ball-sweep algorithms for graphs
whose planted side is an algebraic expander."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graphs import Graph, edge_boundary, normalized_laplacian_lambda2
from .sdp import BALANCED_CUT, DEFAULT_TOL_FEAS, SSE, build_model, solve_cached

SPECTRAL_DENSE_CAP = 2000
RADIUS_LO = 1.0 / 16.0
RADIUS_HI = 0.25


@dataclass(frozen=True)
class SpectralProfile:
    lambda2: float
    degree: int
    m: int

    def __post_init__(self):
        if not (-1e-9 <= self.lambda2 <= 2.0 + 1e-9):
            raise ValueError("lambda2 must lie in [0, 2]")


def algebraic_expansion(G1: Graph, assume_regular: bool = True) -> SpectralProfile:
    """Second-smallest eigenvalue of the normalized Laplacian of G1.

    For regular graphs this equals the embedding-ratio definition of the
    spectral gap under the all-ordered-pairs denominator convention.
    """
    if G1.n > SPECTRAL_DENSE_CAP:
        raise ValueError(f"dense eigensolve limited to n <= {SPECTRAL_DENSE_CAP}")
    degs = G1.degrees
    if assume_regular:
        if G1.n and (degs != degs[0]).any():
            raise ValueError("graph is not regular")
    lam2 = normalized_laplacian_lambda2(G1)
    lam2 = min(max(lam2, 0.0), 2.0)
    return SpectralProfile(lambda2=lam2, degree=int(degs[0]) if G1.n else 0, m=G1.m)


def _ball_candidates(G: Graph, Dmat: np.ndarray, lo_size: float, hi_size: float):
    """Distinct balls Ball(u, r) for r in [1/16, 1/4] whose size lands in
    [lo_size, hi_size]; yields (boundary, size, vertex array) per ball."""
    n = G.n
    arr = G.edge_arr
    seen: set[bytes] = set()
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
        sizes = [int(np.searchsorted(dists, RADIUS_LO, side="right"))]
        inside = (dists > RADIUS_LO) & (dists <= RADIUS_HI)
        for p in np.flatnonzero(inside):
            if p + 1 == n or dists[p + 1] > dists[p]:
                sizes.append(int(p + 1))
        for p in sizes:
            if p < 1 or not (lo_size - 1e-9 <= p <= hi_size + 1e-9):
                continue
            ball = np.sort(order[:p])
            key = ball.tobytes()
            if key in seen:
                continue
            seen.add(key)
            yield int(cuts[p]), p, ball


def planted_expander_balanced_cut(
    G: Graph,
    *,
    hidden_side: Iterable[int] | None = None,
    seed: int = 0,
    tol_feas: float = DEFAULT_TOL_FEAS,
):
    """Sweep every center and every critical radius in [1/16, 1/4] of the
    balanced-cut embedding; return the minimum-boundary ball with size in
    [n/8, 4n/5]. Diagnostics carry the 32x certificate and, when the hidden
    side is supplied, the half-mass ball witness."""
    from .pipelines import CutResult, PipelineError

    n = G.n
    if n % 2 != 0:
        raise ValueError("planted balanced cut expects even n")
    model = build_model(BALANCED_CUT, G)
    phi, report = solve_cached(model, tol_feas=tol_feas, seed=seed)
    Dmat = phi.dist_matrix()
    best = None
    for boundary, size, ball in _ball_candidates(G, Dmat, n / 8.0, 4.0 * n / 5.0):
        key = (boundary, abs(size - n / 2), size)
        if best is None or key < best[0]:
            best = (key, ball)
    if best is None:
        raise PipelineError("no ball candidate in [n/8, 4n/5]; hypotheses violated")
    side = frozenset(map(int, best[1]))
    boundary = edge_boundary(side, G)
    diag = {
        "sdp_objective": report.objective,
        "certificate_bound": 32.0 * report.objective,
        "certificate_ok": boundary <= 32.0 * report.objective + 1e-3,
        "solver_converged": report.converged,
    }
    if hidden_side is not None:
        diag["half_mass_ball"] = _half_mass_witness(Dmat, sorted(set(map(int, hidden_side))))
    return CutResult(side, boundary, diag)


def _half_mass_witness(Dmat: np.ndarray, p1: list[int]) -> dict:
    """The planted-side vertex with the smallest mean distance to its side,
    and how much of the side its 1/8-ball captures."""
    sub = Dmat[np.ix_(p1, p1)]
    means = sub.mean(axis=1)
    best = int(np.argmin(means))
    ball_mass = int((sub[best] <= 0.125 + 1e-12).sum())
    return {
        "center": int(p1[best]),
        "mean_distance": float(means[best]),
        "ball_mass": ball_mass,
        "half": len(p1) / 2.0,
        "ok": ball_mass >= len(p1) / 2.0,
    }


def planted_expander_sse(
    G: Graph,
    rho: float,
    *,
    hidden_side: Iterable[int] | None = None,
    seed: int = 0,
    tol_feas: float = DEFAULT_TOL_FEAS,
    lp_candidates: int = 8,
):
    """Sweep balls of the sse embedding with size in [rho n/2, 8/7 rho n],
    then extract a low-cost subset from the best few balls via the
    threshold route (weights = boundary degree out of the ball)."""
    from .pipelines import CutResult, PipelineError, sse_case2_lp, threshold_extract, LpInfeasibleError

    n = G.n
    if not (0.0 < rho < 0.5):
        raise ValueError("rho must lie in (0, 1/2)")
    model = build_model(SSE, G, rho=rho)
    phi, report = solve_cached(model, tol_feas=tol_feas, seed=seed)
    Dmat = phi.dist_matrix()
    cands = sorted(
        _ball_candidates(G, Dmat, rho * n / 2.0, (8.0 / 7.0) * rho * n),
        key=lambda t: (t[0], t[1]),
    )
    if not cands:
        raise PipelineError("no ball candidate in [rho n/2, 8/7 rho n]")
    best = None
    arr = G.edge_arr
    for boundary, size, ball in cands[:lp_candidates]:
        members = set(map(int, ball))
        inside_edges = [e for e in map(tuple, arr.tolist()) if e[0] in members and e[1] in members]
        w = {u: 0.0 for u in members}
        for u, v in arr.tolist():
            if (u in members) != (v in members):
                w[u if u in members else v] += 1.0
        try:
            lp = sse_case2_lp(members, inside_edges, w, rho, n)
            extract = threshold_extract(lp, [sorted(members)], inside_edges, w, rho, n)
        except (LpInfeasibleError, PipelineError):
            continue
        side = frozenset(extract.side)
        cost = edge_boundary(side, G)
        key = (cost, len(side))
        if best is None or key < best[0]:
            best = (key, side, {"ball_size": size, "ball_boundary": boundary, **extract.diagnostics})
    if best is None:
        raise PipelineError("threshold extraction failed on every candidate ball")
    key, side, diag = best
    diag.update({"sdp_objective": report.objective, "solver_converged": report.converged})
    if hidden_side is not None:
        diag["half_mass_ball"] = _half_mass_witness(Dmat, sorted(set(map(int, hidden_side))))
    return CutResult(side, key[0], diag)
