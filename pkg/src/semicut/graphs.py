"""Graph, partition and cut primitives used by every other module.

Vertices are dense integers 0..n-1. Edges are unordered pairs stored in
canonical (u < v) order; all cut counts are counts of unordered pairs.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Iterator, Sequence

import numpy as np

Edge = tuple[int, int]
EdgeSet = frozenset  # frozenset[Edge]

EXACT_EXPANSION_CAP = 22


def canon_edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError(f"self-loop ({u},{v}) is not a valid edge")
    return (u, v) if u < v else (v, u)


def as_edge_set(pairs: Iterable[Sequence[int]]) -> EdgeSet:
    return frozenset(canon_edge(int(u), int(v)) for u, v in pairs)


def edge_array(edges: Iterable[Sequence[int]]) -> np.ndarray:
    """Canonical (m, 2) int array, sorted lexicographically."""
    arr = np.array(sorted(canon_edge(int(u), int(v)) for u, v in edges), dtype=np.int64)
    return arr.reshape(-1, 2)


def check_edge_range(n: int, edges: Iterable[Sequence[int]]) -> None:
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) has an endpoint outside 0..{n - 1}")


class Graph:
    """Immutable undirected simple graph on vertices 0..n-1."""

    __slots__ = ("n", "_edges", "_array", "_indptr", "_indices", "_degrees", "_hash")

    def __init__(self, n: int, edges: Iterable[Sequence[int]]):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = int(n)
        arr = edge_array(edges)
        if len(arr):
            if arr[:, 0].min() < 0 or arr[:, 1].max() >= self.n:
                raise ValueError("edge endpoint outside 0..n-1")
            if len(np.unique(arr, axis=0)) != len(arr):
                raise ValueError("duplicate edges")
        self._array = arr
        self._edges = frozenset(map(tuple, arr.tolist()))
        # CSR adjacency
        both = np.concatenate([arr, arr[:, ::-1]]) if len(arr) else np.empty((0, 2), dtype=np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        self._indices = both[:, 1].copy()
        self._indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(self._indptr, both[:, 0] + 1, 1)
        self._indptr = np.cumsum(self._indptr)
        self._degrees = np.diff(self._indptr)
        self._hash = None

    @property
    def m(self) -> int:
        return len(self._array)

    @property
    def edges(self) -> EdgeSet:
        return self._edges

    @property
    def edge_arr(self) -> np.ndarray:
        return self._array

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    def neighbors(self, u: int) -> np.ndarray:
        return self._indices[self._indptr[u] : self._indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        return canon_edge(u, v) in self._edges

    def key(self) -> bytes:
        return self.n.to_bytes(8, "big") + self._array.tobytes()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n, self._edges))
        return self._hash

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self._edges == other._edges

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def subgraph(self, vertices: Iterable[int]) -> tuple["Graph", np.ndarray]:
        """Induced subgraph relabeled to 0..|U|-1; returns (graph, original ids)."""
        ids = np.array(sorted(set(int(v) for v in vertices)), dtype=np.int64)
        if len(ids) and (ids[0] < 0 or ids[-1] >= self.n):
            raise ValueError("subgraph vertex outside 0..n-1")
        pos = -np.ones(self.n, dtype=np.int64)
        pos[ids] = np.arange(len(ids))
        arr = self._array
        if len(arr):
            keep = (pos[arr[:, 0]] >= 0) & (pos[arr[:, 1]] >= 0)
            sub_edges = np.stack([pos[arr[keep, 0]], pos[arr[keep, 1]]], axis=1)
        else:
            sub_edges = np.empty((0, 2), dtype=np.int64)
        return Graph(len(ids), sub_edges), ids

    def components(self) -> list[np.ndarray]:
        """Connected components as sorted vertex arrays."""
        seen = np.zeros(self.n, dtype=bool)
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            comp = [start]
            while stack:
                u = stack.pop()
                for v in self.neighbors(u):
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
                        comp.append(int(v))
            out.append(np.array(sorted(comp), dtype=np.int64))
        return out

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        """Parse the edge-list format: first line "n m", then m lines "u v", u < v."""
        lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
        if not lines:
            raise ValueError("empty edge-list input")
        head = lines[0].split()
        if len(head) != 2:
            raise ValueError("first line must be 'n m'")
        n, m = int(head[0]), int(head[1])
        if len(lines) - 1 != m:
            raise ValueError(f"expected {m} edge lines, got {len(lines) - 1}")
        edges = []
        seen = set()
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"malformed edge line: {ln!r}")
            u, v = int(parts[0]), int(parts[1])
            if u >= v:
                raise ValueError(f"edge line must satisfy u < v: {ln!r}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge: {ln!r}")
            seen.add((u, v))
            edges.append((u, v))
        check_edge_range(n, edges)
        return cls(n, edges)

    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in self._array.tolist())
        return "\n".join(lines) + "\n"


class Partition:
    """Partition of 0..n-1 into disjoint parts covering all vertices."""

    __slots__ = ("n", "parts", "assignment")

    def __init__(self, n: int, parts: Iterable[Iterable[int]]):
        self.n = int(n)
        norm = tuple(tuple(sorted(int(v) for v in part)) for part in parts)
        assignment = -np.ones(self.n, dtype=np.int64)
        for i, part in enumerate(norm):
            for v in part:
                if not (0 <= v < self.n):
                    raise ValueError(f"vertex {v} outside 0..{self.n - 1}")
                if assignment[v] >= 0:
                    raise ValueError(f"vertex {v} appears in two parts")
                assignment[v] = i
        if (assignment < 0).any():
            missing = int(np.argmax(assignment < 0))
            raise ValueError(f"vertex {missing} is not covered by any part")
        self.parts = norm
        self.assignment = assignment

    @classmethod
    def from_assignment(cls, assignment: Sequence[int]) -> "Partition":
        a = np.asarray(assignment, dtype=np.int64)
        labels = sorted(set(a.tolist()))
        return cls(len(a), [np.flatnonzero(a == lab) for lab in labels])

    @classmethod
    def two_sided(cls, n: int, side: Iterable[int]) -> "Partition":
        s = sorted(set(int(v) for v in side))
        rest = sorted(set(range(n)) - set(s))
        parts = [p for p in (s, rest) if p]
        return cls(n, parts)

    def part_of(self, u: int) -> int:
        return int(self.assignment[u])

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.n == other.n and self.parts == other.parts

    def __hash__(self) -> int:
        return hash((self.n, self.parts))

    def __repr__(self) -> str:
        return f"Partition(n={self.n}, parts={[len(p) for p in self.parts]})"


def _labels_for(P: Partition, edges: np.ndarray) -> np.ndarray:
    if len(edges) and int(edges.max()) >= P.n:
        bad = int(edges.max())
        raise ValueError(f"endpoint {bad} not covered by the partition")
    return P.assignment


def cut_edges(P: Partition, E: Iterable[Sequence[int]]) -> EdgeSet:
    """Edges of E whose endpoints lie in different parts of P."""
    arr = edge_array(E)
    lab = _labels_for(P, arr)
    if not len(arr):
        return frozenset()
    mask = lab[arr[:, 0]] != lab[arr[:, 1]]
    return frozenset(map(tuple, arr[mask].tolist()))


def cut_cost(P: Partition, E: Iterable[Sequence[int]]) -> int:
    return len(cut_edges(P, E))


def cut_cost_restricted(P: Partition, E: Iterable[Sequence[int]], O: Iterable[int]) -> int:
    """Cut edges with at least one endpoint in O."""
    arr = edge_array(E)
    lab = _labels_for(P, arr)
    if not len(arr):
        return 0
    o_mask = np.zeros(P.n, dtype=bool)
    for v in O:
        if not (0 <= v < P.n):
            raise ValueError(f"vertex {v} outside 0..{P.n - 1}")
        o_mask[v] = True
    cut = lab[arr[:, 0]] != lab[arr[:, 1]]
    touches = o_mask[arr[:, 0]] | o_mask[arr[:, 1]]
    return int(np.count_nonzero(cut & touches))


def edge_boundary(S: Iterable[int], G: Graph) -> int:
    """Number of G edges with exactly one endpoint in S."""
    mask = np.zeros(G.n, dtype=bool)
    for v in S:
        if not (0 <= v < G.n):
            raise ValueError(f"vertex {v} outside 0..{G.n - 1}")
        mask[v] = True
    arr = G.edge_arr
    if not len(arr):
        return 0
    return int(np.count_nonzero(mask[arr[:, 0]] != mask[arr[:, 1]]))


def boundary_counts(G: Graph, mask: np.ndarray) -> int:
    """edge_boundary for a precomputed boolean mask (hot-path variant)."""
    arr = G.edge_arr
    if not len(arr):
        return 0
    return int(np.count_nonzero(mask[arr[:, 0]] != mask[arr[:, 1]]))


def _subset_masks(n: int) -> np.ndarray:
    return np.arange(1, 2**n, dtype=np.int64)


def exact_expansion(G: Graph) -> float:
    """h(G) by enumeration over all subsets with 1 <= |S| <= n/2."""
    n = G.n
    if n > EXACT_EXPANSION_CAP:
        raise ValueError(f"exact expansion limited to n <= {EXACT_EXPANSION_CAP}, got {n}")
    if n < 2:
        raise ValueError("expansion needs at least two vertices")
    masks = _subset_masks(n)
    sizes = np.zeros(len(masks), dtype=np.int64)
    for b in range(n):
        sizes += (masks >> b) & 1
    boundary = np.zeros(len(masks), dtype=np.int64)
    for u, v in G.edge_arr.tolist():
        boundary += ((masks >> u) ^ (masks >> v)) & 1
    ok = sizes * 2 <= n
    ratios = boundary[ok] / sizes[ok]
    return float(ratios.min())


def spectral_expansion_bound(G: Graph) -> float:
    """Certified lower bound on h(G): lambda2(normalized Laplacian) * d_min / 2."""
    lam2 = normalized_laplacian_lambda2(G)
    d_min = int(G.degrees.min()) if G.n else 0
    return float(lam2 * d_min / 2.0)


def normalized_laplacian_lambda2(G: Graph) -> float:
    n = G.n
    if n < 2:
        raise ValueError("need at least two vertices")
    A = np.zeros((n, n))
    arr = G.edge_arr
    if len(arr):
        A[arr[:, 0], arr[:, 1]] = 1.0
        A[arr[:, 1], arr[:, 0]] = 1.0
    deg = A.sum(axis=1)
    with np.errstate(divide="ignore"):
        dinv = 1.0 / np.sqrt(deg)
    dinv[~np.isfinite(dinv)] = 0.0
    L = np.eye(n) - (dinv[:, None] * A) * dinv[None, :]
    # isolated vertices contribute extra zero eigenvalues, matching h(G)=0
    L[deg == 0, :] = 0.0
    L[:, deg == 0] = 0.0
    vals = np.linalg.eigvalsh((L + L.T) / 2.0)
    return float(max(0.0, vals[1]))


def expansion(G: Graph, mode: str = "exact") -> tuple[float, str]:
    """Graph expansion h(G).

    mode "exact" enumerates subsets (n <= 22); mode "certified-lower-bound"
    returns the spectral bound lambda2 * d_min / 2, which lower-bounds h(G)
    but is not h(G) itself. The returned tag names what the value is.
    """
    if mode == "exact":
        return exact_expansion(G), "exact"
    if mode == "certified-lower-bound":
        return spectral_expansion_bound(G), "lower-bound"
    raise ValueError(f"unknown expansion mode {mode!r}")


def complete_graph(n: int) -> Graph:
    return Graph(n, combinations(range(n), 2))


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def union_edges(*edge_sets: Iterable[Sequence[int]]) -> EdgeSet:
    out: set[Edge] = set()
    for es in edge_sets:
        out.update(canon_edge(int(u), int(v)) for u, v in es)
    return frozenset(out)


def iter_subsets_of_size(n: int, size: int) -> Iterator[tuple[int, ...]]:
    return combinations(range(n), size)
