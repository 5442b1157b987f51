"""Unit-vector SDP models with squared-distance triangle inequalities.

Three model kinds share the geometry (unit vectors, lazy triangle
separation) and differ in their side constraints:

  balanced-cut : global spreading (sum of Gram entries <= 0, i.e. the
                 vectors sum to zero), objective (1/4) * sum_E d(u,v)
  sse          : per-vertex spreading (Gram row sums <= rho*n) plus
                 elementwise nonnegative inner products, objective

                 (1/2) * sum_E d(u,v); not a relaxation of the integral
                 problem, but local to a planted small side
  multicut     : demand orthogonality, objective (1/2) * sum_E d(u,v)

Solvers: an exact dense path (cvxpy over the Gram matrix, triangle
constraints added lazily) for small n, and a low-rank projected
augmented-Lagrangian path for larger n. Both report per-family
constraint violations measured on the embedding actually returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph, edge_array
from .util import substream

BALANCED_CUT = "balanced-cut"
SSE = "sse"
MULTICUT = "multicut"
KINDS = (BALANCED_CUT, SSE, MULTICUT)

DENSE_AUTO_MAX_N = 30
DENSE_HARD_MAX_N = 40
FULL_TRIANGLE_AUDIT_MAX_N = 200
TRIANGLE_AUDIT_SAMPLE = 200

DEFAULT_TOL_FEAS = 1e-5
DEFAULT_TOL_OBJ = 1e-4


@dataclass(frozen=True)
class SdpModel:
    kind: str
    n: int
    edges: tuple[tuple[int, int], ...]
    rho: float | None = None
    demands: tuple[tuple[int, int], ...] = ()

    @property
    def obj_coeff(self) -> float:
        return 0.25 if self.kind == BALANCED_CUT else 0.5

    @property
    def edge_arr(self) -> np.ndarray:
        return np.array(self.edges, dtype=np.int64).reshape(-1, 2)

    def key(self) -> tuple:
        return (self.kind, self.n, self.rho, self.demands, self.edges)


def build_model(
    kind: str,
    graph: Graph,
    *,
    rho: float | None = None,
    demands: Sequence[Sequence[int]] | None = None,
    edges: Iterable[Sequence[int]] | None = None,
) -> SdpModel:
    """Model over graph's vertex set; `edges` overrides the objective edge set
    (used when the objective is restricted to a working subset of edges)."""
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    n = graph.n
    arr = graph.edge_arr if edges is None else edge_array(edges)
    if len(arr) and (arr.min() < 0 or arr.max() >= n):
        raise ValueError("objective edge endpoint outside 0..n-1")
    if kind == BALANCED_CUT:
        if n < 2:
            raise ValueError("balanced-cut model needs n >= 2")
        return SdpModel(kind, n, tuple(map(tuple, arr.tolist())))
    if kind == SSE:
        if rho is None or not (0.0 < rho <= 0.5):
            raise ValueError("sse model needs rho in (0, 1/2]")
        if rho * n < 1.0 - 1e-12:
            raise ValueError("sse model needs rho*n >= 1")
        return SdpModel(kind, n, tuple(map(tuple, arr.tolist())), rho=float(rho))
    # multicut
    if not demands:
        raise ValueError("multicut model needs at least one demand pair")
    dem = []
    for s, t in demands:
        s, t = int(s), int(t)
        if not (0 <= s < n and 0 <= t < n) or s == t:
            raise ValueError(f"bad demand pair ({s},{t})")
        dem.append((min(s, t), max(s, t)))
    return SdpModel(kind, n, tuple(map(tuple, arr.tolist())), demands=tuple(sorted(set(dem))))


class Embedding:
    """Unit vectors phi(0..n-1) in R^k; d(u,v) = ||phi(u)-phi(v)||^2."""

    __slots__ = ("vectors", "_dist", "_gram")

    def __init__(self, vectors: np.ndarray):
        v = np.asarray(vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("vectors must be an (n, k) array")
        self.vectors = v
        self._dist = None
        self._gram = None

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        if self._gram is None:
            self._gram = self.vectors @ self.vectors.T
        return self._gram

    def dist_matrix(self) -> np.ndarray:
        if self._dist is None:
            sq = np.einsum("ij,ij->i", self.vectors, self.vectors)
            D = sq[:, None] + sq[None, :] - 2.0 * self.gram()
            np.fill_diagonal(D, 0.0)
            self._dist = np.maximum(D, 0.0)
        return self._dist

    def d(self, u: int, v: int) -> float:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ValueError(f"vertex outside 0..{self.n - 1}")
        diff = self.vectors[u] - self.vectors[v]
        return float(diff @ diff)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    def to_list(self) -> list[list[float]]:
        return self.vectors.tolist()


@dataclass
class SolverReport:
    objective: float
    violations: dict = field(default_factory=dict)
    iterations: int = 0
    rank: int = 0
    restarts: int = 0
    converged: bool = False
    method: str = ""
    triangle_audit: dict = field(default_factory=dict)
    obj_margin: float = 0.0
    wall_time: float = 0.0

    @property
    def max_violation(self) -> float:
        return max(self.violations.values(), default=0.0)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "violations": dict(self.violations),
            "iterations": self.iterations,
            "rank": self.rank,
            "restarts": self.restarts,
            "converged": self.converged,
            "method": self.method,
            "triangle_audit": dict(self.triangle_audit),
            "obj_margin": self.obj_margin,
        }


@dataclass(frozen=True)
class Violation:
    family: str
    where: tuple
    amount: float


@dataclass
class FeasibilityResult:
    violations: list[Violation]
    triangle_audit: dict

    def __bool__(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)


@dataclass
class SolveBudget:
    max_outer: int = 40
    inner_steps: int = 250
    polish_steps: int = 4000
    time_limit: float | None = None

    @staticmethod
    def for_n(n: int) -> "SolveBudget":
        return SolveBudget(time_limit=30.0 + 0.35 * n)


def sdp_cost(phi: Embedding, E: Iterable[Sequence[int]]) -> float:
    """(1/2) * sum over edges of the squared embedding distance."""
    arr = edge_array(E)
    if not len(arr):
        return 0.0
    if arr.max() >= phi.n:
        raise ValueError(f"edge endpoint {int(arr.max())} is not embedded")
    diff = phi.vectors[arr[:, 0]] - phi.vectors[arr[:, 1]]
    return float(0.5 * np.einsum("ij,ij->", diff, diff))


def sdp_cost_restricted(phi: Embedding, E: Iterable[Sequence[int]], O: Iterable[int]) -> float:
    arr = edge_array(E)
    if not len(arr):
        return 0.0
    if arr.max() >= phi.n:
        raise ValueError(f"edge endpoint {int(arr.max())} is not embedded")
    mask = np.zeros(phi.n, dtype=bool)
    for v in O:
        if not (0 <= v < phi.n):
            raise ValueError(f"vertex {v} is not embedded")
        mask[v] = True
    touch = mask[arr[:, 0]] | mask[arr[:, 1]]
    arr = arr[touch]
    if not len(arr):
        return 0.0
    diff = phi.vectors[arr[:, 0]] - phi.vectors[arr[:, 1]]
    return float(0.5 * np.einsum("ij,ij->", diff, diff))


def model_objective(phi: Embedding, model: SdpModel) -> float:
    return 2.0 * model.obj_coeff * sdp_cost(phi, model.edges)


def locality_transform(phi: Embedding, S: Iterable[int], rho: float) -> Embedding:
    """Move every vertex of S to one fresh axis orthogonal to all existing
    vectors (dimension extension); distances from S to the rest become 2.

    Keeps sse-model feasibility provided |S| <= rho * n.
    """
    s_ids = sorted(set(int(v) for v in S))
    n = phi.n
    for v in s_ids:
        if not (0 <= v < n):
            raise ValueError(f"vertex {v} is not embedded")
    if len(s_ids) > rho * n + 1e-9:
        raise ValueError(f"|S|={len(s_ids)} exceeds rho*n={rho * n:.3f}; transform not applicable")
    out = np.zeros((n, phi.dim + 1))
    out[:, : phi.dim] = phi.vectors
    if s_ids:
        out[s_ids, :] = 0.0
        out[s_ids, phi.dim] = 1.0
    return Embedding(out)


# ---------------------------------------------------------------------------
# violation measurement


def triangle_scan(D: np.ndarray, middles: Iterable[int], tol: float, top_per_middle: int = 6):
    """Worst triangle slack d(u,w)-d(u,v)-d(v,w) over given middle vertices,
    plus violating triples (u, v, w) with u < w above tol."""
    n = D.shape[0]
    worst = 0.0
    triples: list[tuple[int, int, int]] = []
    for v in middles:
        A = D - D[:, v : v + 1] - D[v : v + 1, :]
        A[v, :] = -np.inf
        A[:, v] = -np.inf
        np.fill_diagonal(A, -np.inf)
        mx = float(A.max()) if n > 1 else 0.0
        if mx > worst:
            worst = mx
        if mx > tol:
            k = min(top_per_middle, A.size)
            flat = np.argpartition(A.ravel(), -k)[-k:]
            for ix in flat:
                u, w = divmod(int(ix), n)
                if u < w and A[u, w] > tol:
                    triples.append((u, int(v), w))
    return max(worst, 0.0), triples


def _audit_middles(n: int, rng: np.random.Generator | None):
    if n <= FULL_TRIANGLE_AUDIT_MAX_N:
        return range(n), {"mode": "full", "middles": n}
    rng = rng or np.random.default_rng(0)
    sample = np.sort(rng.choice(n, size=min(TRIANGLE_AUDIT_SAMPLE, n), replace=False))
    return sample.tolist(), {"mode": "sampled", "middles": len(sample)}


def measure_violations(
    phi: Embedding,
    model: SdpModel,
    *,
    audit_rng: np.random.Generator | None = None,
    full_triangles: bool | None = None,
) -> tuple[dict, dict]:
    """Per-family max violations on phi. Spreading families are reported
    relative to their right-hand side so tolerances are scale-free."""
    X = phi.vectors
    n = model.n
    out: dict[str, float] = {}
    out["unit-norm"] = float(np.abs(phi.norms() ** 2 - 1.0).max()) if n else 0.0

    D = phi.dist_matrix()
    if full_triangles is True:
        middles, audit = range(n), {"mode": "full", "middles": n}
    else:
        middles, audit = _audit_middles(n, audit_rng)
    worst, _ = triangle_scan(D, middles, tol=np.inf)
    out["triangle"] = worst

    if model.kind == BALANCED_CUT:
        s = X.sum(axis=0)
        total = 2.0 * n * float(np.einsum("ij,ij->", X, X)) - 2.0 * float(s @ s)
        # (1/4) * total >= n^2 / 2, reported as relative shortfall
        out["spreading"] = max(0.0, 1.0 - (0.25 * total) / (n * n / 2.0))
    elif model.kind == SSE:
        P = phi.gram()
        rowsum = P.sum(axis=1)
        rhon = model.rho * n
        out["spreading"] = float(max(0.0, (rowsum.max() - rhon) / max(1.0, rhon)))
        out["nonneg"] = float(max(0.0, -P.min()))
    elif model.kind == MULTICUT:
        dem = np.array(model.demands, dtype=np.int64)
        vals = np.einsum("ij,ij->i", X[dem[:, 0]], X[dem[:, 1]])
        out["demand"] = float(np.abs(vals).max()) if len(vals) else 0.0
    return out, audit


def check_feasibility(phi: Embedding, model: SdpModel, tol: float = DEFAULT_TOL_FEAS) -> FeasibilityResult:
    """Itemized audit of every constraint family against tol."""
    X = phi.vectors
    n = model.n
    violations: list[Violation] = []

    norms = phi.norms() ** 2
    for u in np.flatnonzero(np.abs(norms - 1.0) > tol):
        violations.append(Violation("unit-norm", (int(u),), float(abs(norms[u] - 1.0))))

    D = phi.dist_matrix()
    middles, audit = _audit_middles(n, None)
    _, triples = triangle_scan(D, middles, tol=tol)
    for u, v, w in triples:
        violations.append(Violation("triangle", (u, v, w), float(D[u, w] - D[u, v] - D[v, w])))

    if model.kind == BALANCED_CUT:
        s = X.sum(axis=0)
        total = 2.0 * n * float(np.einsum("ij,ij->", X, X)) - 2.0 * float(s @ s)
        short = max(0.0, 1.0 - (0.25 * total) / (n * n / 2.0))
        if short > tol:
            violations.append(Violation("spreading", (), short))
    elif model.kind == SSE:
        P = phi.gram()
        rhon = model.rho * n
        rowsum = P.sum(axis=1)
        for u in np.flatnonzero((rowsum - rhon) / max(1.0, rhon) > tol):
            violations.append(Violation("spreading", (int(u),), float((rowsum[u] - rhon) / max(1.0, rhon))))
        neg = np.argwhere(P < -tol)
        for u, v in neg[:200]:
            if u <= v:
                violations.append(Violation("nonneg", (int(u), int(v)), float(-P[u, v])))
    elif model.kind == MULTICUT:
        for s_, t_ in model.demands:
            val = float(X[s_] @ X[t_])
            if abs(val) > tol:
                violations.append(Violation("demand", (s_, t_), abs(val)))
    violations.sort(key=lambda v: -v.amount)
    return FeasibilityResult(violations, audit)


# ---------------------------------------------------------------------------
# analytic solutions for edgeless objectives


def _analytic_solution(model: SdpModel) -> Embedding | None:
    if len(model.edges):
        return None
    n = model.n
    if model.kind == BALANCED_CUT:
        # regular simplex: unit rows summing to zero
        X = np.eye(n) - 1.0 / n
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        return Embedding(X)
    return Embedding(np.eye(n))


# ---------------------------------------------------------------------------
# dense path (cvxpy Gram matrix, lazy triangles)


def _solve_dense(model: SdpModel, tol_feas: float, seed: int):
    import cvxpy as cp

    n = model.n
    arr = model.edge_arr
    A = np.zeros((n, n))
    if len(arr):
        A[arr[:, 0], arr[:, 1]] = 1.0
        A = A + A.T
    coef = model.obj_coeff
    tris: list[tuple[int, int, int]] = []
    gram_tol = min(tol_feas, 1e-6) * 0.05
    value = None
    Gv = None
    rounds = 0
    for rounds in range(1, 26):
        G = cp.Variable((n, n), PSD=True)
        cons = [cp.diag(G) == 1]
        if model.kind == BALANCED_CUT:
            cons.append(cp.sum(G) <= 0)
        elif model.kind == SSE:
            cons.append(G >= 0)
            cons.append(G @ np.ones(n) <= model.rho * n)
        else:
            for s, t in model.demands:
                cons.append(G[s, t] == 0)
        if tris:
            T = np.array(tris, dtype=np.int64)
            cons.append(G[T[:, 0], T[:, 1]] + G[T[:, 1], T[:, 2]] - G[T[:, 0], T[:, 2]] - G[T[:, 1], T[:, 1]] <= 0)
        objective = coef * (float(A.sum()) - cp.sum(cp.multiply(A, G))) if len(arr) else cp.Constant(0.0) * cp.sum(G)
        prob = cp.Problem(cp.Minimize(objective), cons)
        solved = False
        for solver_name in ("CLARABEL", "SCS"):
            try:
                if solver_name == "SCS":
                    prob.solve(solver=solver_name, eps=1e-9, max_iters=100000)
                else:
                    prob.solve(solver=solver_name)
            except cp.error.SolverError:
                continue
            if G.value is not None and prob.status in ("optimal", "optimal_inaccurate"):
                solved = True
                break
        if not solved:
            raise RuntimeError(f"dense solve failed at n={n} kind={model.kind}")
        Gv = np.asarray(G.value)
        value = float(prob.value)
        # separate triangles on the Gram matrix: G[u,v]+G[v,w]-G[u,w]-G[v,v] <= 0
        worst = 0.0
        new = []
        for v in range(n):
            viol = Gv[:, v : v + 1] + Gv[v : v + 1, :] - Gv - Gv[v, v]
            viol[v, :] = -1.0
            viol[:, v] = -1.0
            np.fill_diagonal(viol, -1.0)
            mx = float(viol.max())
            worst = max(worst, mx)
            if mx > gram_tol:
                k = min(8, viol.size)
                for ix in np.argpartition(viol.ravel(), -k)[-k:]:
                    u, w = divmod(int(ix), n)
                    if u < w and viol[u, w] > max(gram_tol, 0.5 * mx):
                        new.append((u, v, w))
        if worst <= gram_tol:
            break
        tris.extend(new)
    # factor and renormalize
    w, V = np.linalg.eigh((Gv + Gv.T) / 2.0)
    w = np.clip(w, 0.0, None)
    keep = w > max(1e-12, w.max() * 1e-11) if len(w) else []
    X = V[:, keep] * np.sqrt(w[keep])
    if X.shape[1] == 0:
        X = np.ones((n, 1))
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    return Embedding(X), value, rounds


# ---------------------------------------------------------------------------
# low-rank projected augmented-Lagrangian path


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    bad = norms[:, 0] < 1e-12
    if bad.any():
        X[bad] = 1.0
        norms = np.linalg.norm(X, axis=1, keepdims=True)
    return X / norms


class _LowRank:
    """Projected augmented Lagrangian over unit rows.

    The sse model is optimized inside the nonnegative orthant (clip then
    renormalize), which keeps every inner product nonnegative by
    construction; this restricts the search space but contains the
    cluster-structured optima these instances have.
    """

    def __init__(self, model: SdpModel, tol_feas: float, rng: np.random.Generator, warm):
        self.model = model
        self.n = model.n
        self.tol = tol_feas
        self.rng = rng
        self.orthant = model.kind == SSE
        arr = model.edge_arr
        self.m = len(arr)
        from scipy import sparse

        if self.m:
            data = np.ones(self.m)
            A = sparse.coo_matrix((data, (arr[:, 0], arr[:, 1])), shape=(self.n, self.n))
            A = (A + A.T).tocsr()
            deg = np.asarray(A.sum(axis=1)).ravel()
            self.L = sparse.diags(deg) - A
        else:
            self.L = None
        self.rhon = (model.rho or 0.0) * self.n
        self.dem = np.array(model.demands, dtype=np.int64).reshape(-1, 2)

        k0 = int(np.ceil(np.log2(max(self.n, 2)))) + 4
        if warm is not None:
            X = np.array(warm, dtype=np.float64, copy=True)
            if X.shape[0] != self.n:
                raise ValueError("warm start has wrong vertex count")
        else:
            X = rng.standard_normal((self.n, k0))
            if self.orthant:
                X = np.abs(X)
        self.X = self.project(X)
        self.reset_state()

    def project(self, X: np.ndarray) -> np.ndarray:
        if self.orthant:
            X = np.maximum(X, 0.0)
        return _normalize_rows(X)

    def reset_state(self):
        n, k = self.X.shape
        self.mu_spread = np.zeros(k)
        self.beta_spread = 2.0
        self.lam_rows = np.zeros(n)
        self.beta_rows = 2.0
        self.mu_dem = np.zeros(len(self.dem))
        self.beta_dem = 4.0
        self.tri = np.empty((0, 3), dtype=np.int64)
        self.lam_tri = np.empty(0)
        self.beta_tri = 4.0
        self.tri_set: set[tuple[int, int, int]] = set()

    # -- constraint raw values -------------------------------------------
    def _row_gaps(self, X):
        s = X.sum(axis=0)
        return X @ s - self.rhon  # <= 0

    def _tri_gaps(self, X):
        if not len(self.tri):
            return np.empty(0)
        u, v, w = self.tri[:, 0], self.tri[:, 1], self.tri[:, 2]
        duw = np.einsum("ij,ij->i", X[u] - X[w], X[u] - X[w])
        duv = np.einsum("ij,ij->i", X[u] - X[v], X[u] - X[v])
        dvw = np.einsum("ij,ij->i", X[v] - X[w], X[v] - X[w])
        return duw - duv - dvw  # <= 0

    def _dem_gaps(self, X):
        if not len(self.dem):
            return np.empty(0)
        return np.einsum("ij,ij->i", X[self.dem[:, 0]], X[self.dem[:, 1]])  # == 0

    def _tri_grad_into(self, g, X, coef):
        act = np.flatnonzero(coef)
        if not len(act):
            return
        u, v, w = self.tri[act, 0], self.tri[act, 1], self.tri[act, 2]
        cc = (2.0 * coef[act])[:, None]
        np.add.at(g, u, cc * (X[v] - X[w]))
        np.add.at(g, w, cc * (X[v] - X[u]))
        np.add.at(g, v, cc * (2.0 * X[v] - X[u] - X[w]))

    # -- AL gradient ------------------------------------------------------
    def grad(self, X, obj_weight=1.0):
        model = self.model
        g = np.zeros_like(X)
        if self.L is not None and obj_weight:
            g += (2.0 * model.obj_coeff * obj_weight) * (self.L @ X)
        if model.kind == BALANCED_CUT:
            s = X.sum(axis=0)
            g += (self.mu_spread + self.beta_spread * s)[None, :]
        elif model.kind == SSE:
            s = X.sum(axis=0)
            rg = X @ s - self.rhon
            a = np.maximum(0.0, self.lam_rows + self.beta_rows * rg)
            if a.any():
                g += a[:, None] * s[None, :] + (a @ X)[None, :]
        if len(self.dem):
            dg = self._dem_gaps(X)
            c = self.mu_dem + self.beta_dem * dg
            np.add.at(g, self.dem[:, 0], c[:, None] * X[self.dem[:, 1]])
            np.add.at(g, self.dem[:, 1], c[:, None] * X[self.dem[:, 0]])
        if len(self.tri):
            tg = self._tri_gaps(X)
            self._tri_grad_into(g, X, np.maximum(0.0, self.lam_tri + self.beta_tri * tg))
        return g

    def objective(self, X) -> float:
        if self.L is None:
            return 0.0
        return float(self.model.obj_coeff * np.einsum("ij,ij->", X, self.L @ X))

    def inner(self, steps: int, lr: float, obj_weight: float = 1.0, deadline: float | None = None):
        X = self.X
        mom = np.zeros_like(X)
        vel = np.zeros_like(X)
        b1, b2, eps = 0.9, 0.99, 1e-9
        for t in range(1, steps + 1):
            g = self.grad(X, obj_weight)
            mom = b1 * mom + (1 - b1) * g
            vel = b2 * vel + (1 - b2) * g * g
            mh = mom / (1 - b1**t)
            vh = vel / (1 - b2**t)
            X = self.project(X - lr * mh / (np.sqrt(vh) + eps))
            if deadline is not None and t % 40 == 0 and time.monotonic() > deadline:
                break
        self.X = X

    def family_violations(self) -> dict:
        X = self.X
        out = {}
        if self.model.kind == BALANCED_CUT:
            s = X.sum(axis=0)
            out["spreading"] = float(s @ s) / (self.n * self.n)
        elif self.model.kind == SSE:
            rg = self._row_gaps(X)
            out["spreading"] = float(max(0.0, rg.max() / max(1.0, self.rhon))) if len(rg) else 0.0
            out["nonneg"] = 0.0  # orthant projection keeps inner products >= 0
        if len(self.dem):
            out["demand"] = float(np.abs(self._dem_gaps(X)).max())
        return out

    def dist_matrix(self) -> np.ndarray:
        X = self.X
        P = X @ X.T
        sq = np.einsum("ij,ij->i", X, X)
        return np.maximum(sq[:, None] + sq[None, :] - 2.0 * P, 0.0)

    def separate(self, middles=None, cap: int = 4000) -> float:
        """Scan for violated triangles, add the worst to the active set;
        returns the worst slack over the scanned middles."""
        D = self.dist_matrix()
        if middles is None:
            middles = range(self.n)
        worst, triples = triangle_scan(D, middles, tol=self.tol * 0.2)
        added = 0
        if triples:
            triples.sort(key=lambda t_: -(D[t_[0], t_[2]] - D[t_[0], t_[1]] - D[t_[1], t_[2]]))
            fresh = []
            for t_ in triples:
                if t_ not in self.tri_set:
                    self.tri_set.add(t_)
                    fresh.append(t_)
                    added += 1
                    if added >= cap:
                        break
            if fresh:
                self.tri = np.vstack([self.tri, np.array(fresh, dtype=np.int64)])
                self.lam_tri = np.concatenate([self.lam_tri, np.zeros(len(fresh))])
        return worst

    def prune_triangles(self):
        if not len(self.tri):
            return
        gaps = self._tri_gaps(self.X)
        keep = (self.lam_tri > 1e-12) | (gaps > -0.05)
        if keep.all():
            return
        dropped = self.tri[~keep]
        for t_ in map(tuple, dropped.tolist()):
            self.tri_set.discard(t_)
        self.tri = self.tri[keep]
        self.lam_tri = self.lam_tri[keep]

    def update_multipliers(self):
        X = self.X
        if self.model.kind == BALANCED_CUT:
            self.mu_spread = self.mu_spread + self.beta_spread * X.sum(axis=0)
        elif self.model.kind == SSE:
            self.lam_rows = np.maximum(0.0, self.lam_rows + self.beta_rows * self._row_gaps(X))
        if len(self.dem):
            self.mu_dem = self.mu_dem + self.beta_dem * self._dem_gaps(X)
        if len(self.tri):
            self.lam_tri = np.maximum(0.0, self.lam_tri + self.beta_tri * self._tri_gaps(X))

    def boost_penalties(self, factor=1.8, cap=1e7):
        self.beta_spread = min(cap, self.beta_spread * factor)
        self.beta_rows = min(cap, self.beta_rows * factor)
        self.beta_dem = min(cap, self.beta_dem * factor)
        self.beta_tri = min(cap, self.beta_tri * factor)


def _profile_classes(D: np.ndarray, tol: float, cap: int) -> np.ndarray | None:
    """Group vertices whose distance profiles agree within tol (leader
    algorithm). Members of one class may sit apart from each other; what
    matters is that they see everyone else at the same distances."""
    n = D.shape[0]
    labels = -np.ones(n, dtype=np.int64)
    reps: list[int] = []
    for u in range(n):
        assigned = -1
        for ci, r in enumerate(reps):
            diff = np.abs(D[u] - D[r])
            diff[u] = 0.0
            diff[r] = 0.0
            if diff.max() <= tol:
                assigned = ci
                break
        if assigned < 0:
            if len(reps) >= cap:
                return None
            reps.append(u)
            assigned = len(reps) - 1
        labels[u] = assigned
    return labels


def _condense_repair(model: SdpModel, X: np.ndarray, tol_feas: float, max_positions: int = 18):
    """Detect a class structure in X (same distance profile) and re-solve an
    exact SDP over class cross-products R and within-class products q.

    Every vertex of class i becomes sqrt(q_i) * y_i + sqrt(1-q_i) * e_u with
    a private axis e_u, so within-class distances are the uniform 2(1-q_i)
    and triangle feasibility reduces to two small class-level families.
    Tries a ladder of detection tolerances and returns the repaired vector
    array with the best class-level objective, or None.
    """
    phi = Embedding(X)
    D = phi.dist_matrix()
    candidates = []
    seen: set[bytes] = set()
    for tol in (0.08, 0.18, 0.3, 0.45, 0.7, 1.0):
        labels = _profile_classes(D, tol=tol, cap=max_positions)
        if labels is None:
            continue
        key = labels.tobytes()
        if key in seen:
            continue
        seen.add(key)
        candidates.append(labels)
    candidates.sort(key=lambda lab: int(lab.max()) + 1)
    best = None
    successes = 0
    for labels in candidates:
        out = _solve_class_sdp(model, labels)
        if out is None:
            continue
        repaired, value, info = out
        successes += 1
        if best is None or value < best[1]:
            best = (repaired, value, labels, info)
        if successes >= 2:
            break
    if best is None:
        return None

    # Lloyd-style refinement: reassign vertices to their cheapest class
    # under the solved class geometry, then re-solve; fixes stragglers the
    # gradient phase parked in the wrong cluster.
    labels = best[2]
    info = best[3]
    arr = model.edge_arr
    for _ in range(3):
        if not len(arr) or info is None:
            break
        Rv, qv = info
        p = Rv.shape[0]
        Dc = 2.0 - 2.0 * Rv
        np.fill_diagonal(Dc, 2.0 - 2.0 * qv)
        hist = np.zeros((model.n, p))
        np.add.at(hist, arr[:, 0], np.eye(p)[labels[arr[:, 1]]])
        np.add.at(hist, arr[:, 1], np.eye(p)[labels[arr[:, 0]]])
        costs = hist @ Dc.T
        new_labels = np.argmin(costs + 1e-12 * np.arange(p)[None, :], axis=1)
        if (new_labels == labels).all():
            break
        labels = np.unique(new_labels, return_inverse=True)[1]
        out = _solve_class_sdp(model, labels)
        if out is None:
            break
        repaired, value, info = out
        if value < best[1] - 1e-9:
            best = (repaired, value, labels, info)
        else:
            break
    return best[0]


def _solve_class_sdp(model: SdpModel, labels: np.ndarray):
    n = model.n
    labels = np.unique(labels, return_inverse=True)[1]
    p = int(labels.max()) + 1
    sizes = np.bincount(labels, minlength=p).astype(np.float64)
    arr = model.edge_arr
    M_cross = np.zeros((p, p))
    m_within = np.zeros(p)
    if len(arr):
        li, lj = labels[arr[:, 0]], labels[arr[:, 1]]
        same = li == lj
        np.add.at(m_within, li[same], 1.0)
        if (~same).any():
            np.add.at(M_cross, (li[~same], lj[~same]), 1.0)
            M_cross = M_cross + M_cross.T

    import cvxpy as cp

    R = cp.Variable((p, p), PSD=True)  # R[i,j] = cross product; R[i,i] = q_i
    q = cp.diag(R)
    cons = [q <= 1, q >= 0]
    multi = sizes >= 2
    # triangle families: distinct classes, and pairs through a multi-member class
    for j in range(p):
        col = cp.reshape(R[:, j], (p, 1), order="C")
        row = cp.reshape(R[j, :], (1, p), order="C")
        cons.append(col @ np.ones((1, p)) + np.ones((p, 1)) @ row - R <= 1)
    if multi.any():
        idx = np.flatnonzero(multi)
        for i in idx:
            cons.append(2 * R[i, :] - R[i, i] <= 1)
    if model.kind == BALANCED_CUT:
        # sum of Gram entries: diag contributes c_i * 1, within-class off-diag
        # c_i(c_i-1) q_i, cross-class c_i c_j R_ij
        within = cp.sum(cp.multiply(sizes * (sizes - 1.0), q))
        cross = sizes @ R @ sizes - cp.sum(cp.multiply(sizes * sizes, q))
        cons.append(float(sizes.sum()) + within + cross <= 0)
    elif model.kind == SSE:
        cons.append(R >= 0)
        rows = 1.0 + cp.multiply(sizes - 1.0, q) + (R @ sizes - cp.multiply(sizes, q))
        cons.append(rows <= model.rho * n)
    else:
        for s, t in model.demands:
            ls, lt = int(labels[s]), int(labels[t])
            if ls == lt:
                if sizes[ls] < 2:
                    return None
                cons.append(R[ls, ls] == 0)
            else:
                cons.append(R[ls, lt] == 0)

    w_within = 2.0 * model.obj_coeff * m_within  # edge count * coeff, distance 2(1-q)
    w_cross = model.obj_coeff * M_cross
    obj = cp.sum(cp.multiply(w_within, 1.0 - q)) + cp.sum(cp.multiply(w_cross, 1.0 - R))
    prob = cp.Problem(cp.Minimize(obj), cons)
    try:
        prob.solve(solver="CLARABEL")
    except cp.error.SolverError:
        return None
    if R.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
        return None
    Rv = np.asarray(R.value)
    qv = np.clip(np.diag(Rv), 0.0, 1.0)

    w_eig, V = np.linalg.eigh((Rv + Rv.T) / 2.0)
    w_eig = np.clip(w_eig, 0.0, None)
    keep = w_eig > max(1e-13, (w_eig.max() if len(w_eig) else 0.0) * 1e-11)
    Y = V[:, keep] * np.sqrt(w_eig[keep])
    kbase = Y.shape[1]
    # rescale class vectors to norm sqrt(q); classes with q ~ 1 need no axis
    ynorm = np.linalg.norm(Y, axis=1)
    for i in range(p):
        target = np.sqrt(qv[i])
        if ynorm[i] > 1e-12:
            Y[i] *= target / ynorm[i]
        else:
            Y[i] = 0.0
    private = np.flatnonzero(1.0 - qv > 1e-12)
    private_classes = set(int(i) for i in private)
    extra = sum(int(sizes[i]) for i in private_classes)
    out = np.zeros((n, kbase + extra))
    col = kbase
    for u in range(n):
        i = int(labels[u])
        out[u, :kbase] = Y[i]
        if i in private_classes:
            out[u, col] = np.sqrt(max(0.0, 1.0 - qv[i]))
            col += 1
    out = _normalize_rows(out)
    return out, float(prob.value), (Rv, qv)


def _solve_lowrank(model: SdpModel, tol_feas: float, budget: SolveBudget, seed: int, warm, verbose: bool = False):
    rng = substream(seed, f"sdp.{model.kind}.{model.n}")
    state = _LowRank(model, tol_feas, rng, warm)
    t0 = time.monotonic()
    deadline = t0 + budget.time_limit if budget.time_limit else None
    best = None  # (score, X, viol, obj)

    def full_audit(X) -> dict:
        hold = state.X
        state.X = X
        fam = state.family_violations()
        mid = range(state.n) if state.n <= 640 else _audit_middles(state.n, rng)[0]
        worst, _ = triangle_scan(state.dist_matrix(), mid, tol=np.inf)
        fam["triangle"] = worst
        fam["unit-norm"] = 0.0
        state.X = hold
        return fam

    def consider(X, viol: dict):
        nonlocal best
        mx = max(viol.values(), default=0.0)
        obj = state.objective(X)
        feas = mx <= tol_feas
        score = (0 if feas else 1, obj if feas else mx)
        if best is None or score < best[0]:
            best = (score, X.copy(), dict(viol), obj)

    def try_condense(X) -> float | None:
        """Attempt the exact repair; records the candidate and returns its
        objective when it met the feasibility bar, else None."""
        repaired = _condense_repair(model, X, tol_feas)
        if repaired is None:
            return None
        viol = full_audit(repaired)
        obj = state.objective(repaired)
        if verbose:
            print(f"  condense: viol={max(viol.values(), default=0):.2e} obj={obj:.2f}")
        consider(repaired, viol)
        if max(viol.values(), default=0.0) > tol_feas * 0.5:
            return None
        return obj

    outer_done = 0
    restarts = 0
    lr = 0.12
    prev_mx = np.inf
    prev_obj = np.inf
    prev_cond = None
    cond_hits = 0
    done = False
    for outer in range(budget.max_outer):
        outer_done = outer + 1
        state.inner(budget.inner_steps, lr, deadline=deadline)
        state.update_multipliers()
        sample_mid = None
        if state.n > 220 and outer < 4:
            sample_mid = rng.choice(state.n, size=min(state.n, 160), replace=False)
        worst_tri = state.separate(middles=sample_mid)
        state.prune_triangles()
        fam = state.family_violations()
        fam["triangle"] = worst_tri
        fam["unit-norm"] = 0.0
        mx = max(fam.values(), default=0.0)
        obj = state.objective(state.X)
        if sample_mid is None:
            consider(state.X, fam)
        if verbose:
            print(f"  outer {outer}: obj={obj:.2f} viol={mx:.2e} "
                  f"tri={worst_tri:.2e} |T|={len(state.tri)} lr={lr:.3f}")
        if mx <= tol_feas * 2 and outer >= 2 and sample_mid is None:
            done = True
            break
        # hand off to the exact repair once the structure stops improving:
        # accept a repair when the iterate has stalled near its cost, or
        # when two consecutive repairs land on the same objective
        stalled = abs(prev_obj - obj) <= 1e-5 * (1.0 + abs(obj))
        if outer >= 3 and (stalled or outer % 2 == 1 or mx < 2e-2):
            cond_obj = try_condense(state.X)
            if cond_obj is not None:
                cond_hits += 1
                settled = prev_cond is not None and abs(cond_obj - prev_cond) <= 5e-3 * (1.0 + abs(cond_obj))
                if settled or cond_hits >= 3 or (stalled and cond_obj <= 1.02 * obj + 1.0):
                    done = True
                    break
                prev_cond = cond_obj
        if mx > tol_feas * 4 and mx > 0.6 * prev_mx:
            state.boost_penalties(1.8, cap=2e3)
        prev_mx = mx
        prev_obj = obj
        lr = max(0.01, lr * 0.85)
        if deadline is not None and time.monotonic() > deadline:
            break
    if best is None:
        consider(state.X, full_audit(state.X))

    if not done and try_condense(best[1]) is not None:
        done = True
    if done:
        score, X, viol, obj = best
        return Embedding(X), viol, outer_done, restarts, time.monotonic() - t0

    # hinge-loss feasibility polish on the current iterate
    score, Xb, violb, _ = best
    state.X = Xb.copy()
    state.boost_penalties(4.0)
    polish_left = budget.polish_steps
    lr_p = 0.01
    prev_worst = max(violb.values(), default=0.0)
    while polish_left > 0 and prev_worst > tol_feas * 0.45:
        if deadline is not None and time.monotonic() > deadline:
            break
        Xbefore = state.X.copy()
        chunk = min(300, polish_left)
        state.inner(chunk, lr=lr_p, obj_weight=0.01, deadline=deadline)
        polish_left -= chunk
        state.separate()
        state.update_multipliers()
        state.boost_penalties(1.3)
        viol = full_audit(state.X)
        consider(state.X, viol)
        mx = max(viol.values(), default=0.0)
        if verbose:
            print(f"  polish: viol={mx:.2e} lr={lr_p:.4f} |T|={len(state.tri)}")
        if mx > prev_worst * 1.2:
            state.X = Xbefore
            lr_p = max(1e-4, lr_p * 0.5)
        else:
            prev_worst = mx
    score, X, viol, obj = best
    return Embedding(X), viol, outer_done, restarts, time.monotonic() - t0


# ---------------------------------------------------------------------------
# public solve


_SOLVE_CACHE: dict = {}
_SOLVE_CACHE_CAP = 24

_REPORT_SINK: list | None = None


class report_sink:
    """Context manager collecting every SolverReport produced inside it."""

    def __init__(self):
        self.reports: list[SolverReport] = []

    def __enter__(self):
        global _REPORT_SINK
        self._prev = _REPORT_SINK
        _REPORT_SINK = self.reports
        return self.reports

    def __exit__(self, *exc):
        global _REPORT_SINK
        _REPORT_SINK = self._prev
        return False


def solve(
    model: SdpModel,
    tol_feas: float = DEFAULT_TOL_FEAS,
    tol_obj: float = DEFAULT_TOL_OBJ,
    budget: SolveBudget | None = None,
    *,
    seed: int = 0,
    warm: np.ndarray | None = None,
    method: str = "auto",
    verbose: bool = False,
) -> tuple[Embedding, SolverReport]:
    """Solve the model to an embedding with violations <= tol_feas.

    method "auto" picks the dense exact path for small n and the low-rank
    augmented-Lagrangian path otherwise; "dense" (n <= 40) and "lowrank"
    force a path. Callers must check report.converged: on budget
    exhaustion the best embedding found is returned with converged=False.
    """
    if budget is None:
        budget = SolveBudget.for_n(model.n)
    t0 = time.monotonic()
    analytic = _analytic_solution(model)
    if analytic is not None:
        viol, audit = measure_violations(analytic, model)
        report = SolverReport(
            objective=0.0,
            violations=viol,
            iterations=0,
            rank=analytic.dim,
            converged=max(viol.values(), default=0.0) <= tol_feas,
            method="analytic",
            triangle_audit=audit,
            obj_margin=0.0,
            wall_time=time.monotonic() - t0,
        )
        if _REPORT_SINK is not None:
            _REPORT_SINK.append(report)
        return analytic, report

    if method == "auto":
        method = "dense" if model.n <= DENSE_AUTO_MAX_N else "lowrank"
    if method == "dense" and model.n > DENSE_HARD_MAX_N:
        raise ValueError(f"dense mode limited to n <= {DENSE_HARD_MAX_N}")

    restarts = 0
    if method == "dense":
        phi, value, rounds = _solve_dense(model, tol_feas, seed)
        iterations = rounds
        margin = 1e-6 * (1.0 + abs(value))
    elif method == "lowrank":
        phi, _viol, iterations, restarts, _wall = _solve_lowrank(model, tol_feas, budget, seed, warm, verbose=verbose)
        value = model_objective(phi, model)
        margin = max(1e-6, 1e-3 * (1.0 + abs(value)))
    else:
        raise ValueError(f"unknown method {method!r}")

    viol, audit = measure_violations(phi, model)
    objective = model_objective(phi, model)
    report = SolverReport(
        objective=objective,
        violations=viol,
        iterations=iterations,
        rank=phi.dim,
        restarts=restarts,
        converged=max(viol.values(), default=0.0) <= tol_feas,
        method=method,
        triangle_audit=audit,
        obj_margin=margin,
        wall_time=time.monotonic() - t0,
    )
    if _REPORT_SINK is not None:
        _REPORT_SINK.append(report)
    return phi, report


def solve_cached(
    model: SdpModel,
    tol_feas: float = DEFAULT_TOL_FEAS,
    tol_obj: float = DEFAULT_TOL_OBJ,
    budget: SolveBudget | None = None,
    *,
    seed: int = 0,
    warm: np.ndarray | None = None,
    method: str = "auto",
) -> tuple[Embedding, SolverReport]:
    """solve() with memoization; the cache key ignores the warm start
    deliberately (a cached answer for the same model/seed/tolerances/budget
    is still the answer)."""
    bkey = (budget.max_outer, budget.inner_steps, budget.polish_steps, budget.time_limit) if budget else None
    key = (model.key(), tol_feas, tol_obj, seed, method, bkey)
    hit = _SOLVE_CACHE.get(key)
    if hit is not None:
        return hit
    result = solve(model, tol_feas, tol_obj, budget, seed=seed, warm=warm, method=method)
    if len(_SOLVE_CACHE) >= _SOLVE_CACHE_CAP:
        _SOLVE_CACHE.pop(next(iter(_SOLVE_CACHE)))
    _SOLVE_CACHE[key] = result
    return result


def clear_cache() -> None:
    _SOLVE_CACHE.clear()
