"""Instance generators: semi-random partitioned graphs, planted regular
expanders, and multicut demand sets, with ground-truth bookkeeping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .graphs import Edge, EdgeSet, Graph, Partition, as_edge_set, canon_edge
from .util import substream

INSIDE_KINDS = ("empty", "erdos-renyi", "cliques", "regular-expander")


@dataclass(frozen=True)
class AdversaryStrategy:
    """What the adversary does inside parts and to the sampled cross edges.

    inside: one of "empty", "erdos-renyi" (uses inside_prob), "cliques",
    "regular-expander" (uses inside_degree). cross_deletion is the fraction
    of realized cross edges removed (an exact count, sampled without
    replacement). extra_inside_edges supports arbitrary user-supplied
    adversaries; they must stay within parts.
    """

    inside: str = "empty"
    inside_prob: float = 0.0
    inside_degree: int = 0
    cross_deletion: float = 0.0
    extra_inside_edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.inside not in INSIDE_KINDS:
            raise ValueError(f"unknown inside strategy {self.inside!r}")
        if not (0.0 <= self.cross_deletion <= 1.0):
            raise ValueError("cross_deletion must lie in [0, 1]")
        if self.inside == "erdos-renyi" and not (0.0 <= self.inside_prob <= 1.0):
            raise ValueError("inside_prob must lie in [0, 1]")
        if self.inside == "regular-expander" and self.inside_degree < 0:
            raise ValueError("inside_degree must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "inside": self.inside,
            "inside_prob": self.inside_prob,
            "inside_degree": self.inside_degree,
            "cross_deletion": self.cross_deletion,
            "extra_inside_edges": [list(e) for e in sorted(self.extra_inside_edges)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdversaryStrategy":
        return cls(
            inside=d.get("inside", "empty"),
            inside_prob=float(d.get("inside_prob", 0.0)),
            inside_degree=int(d.get("inside_degree", 0)),
            cross_deletion=float(d.get("cross_deletion", 0.0)),
            extra_inside_edges=tuple(canon_edge(*e) for e in d.get("extra_inside_edges", [])),
        )


@dataclass(frozen=True)
class PlantedInstance:
    """A generated graph together with its hidden partition and noise record."""

    graph: Graph
    hidden: Partition
    epsilon: float
    realized_cross: EdgeSet
    kept_cross: EdgeSet
    adversary: AdversaryStrategy
    seed: int
    model: str = "sr"
    extras: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.kept_cross <= self.realized_cross:
            raise AssertionError("kept_cross must be a subset of realized_cross")
        lab = self.hidden.assignment
        for u, v in self.realized_cross:
            if lab[u] == lab[v]:
                raise AssertionError("realized cross edge inside a part")
        for u, v in self.graph.edges:
            if lab[u] != lab[v] and (u, v) not in self.kept_cross:
                raise AssertionError("graph cross edge missing from kept_cross")
            if lab[u] == lab[v] and (u, v) in self.kept_cross:
                raise AssertionError("kept_cross edge inside a part")

    def sr_cost(self) -> float:
        return sr_cost(self.hidden, self.epsilon)

    def to_dict(self) -> dict:
        d = {
            "model": self.model,
            "n": self.graph.n,
            "epsilon": self.epsilon,
            "partition": [list(p) for p in self.hidden.parts],
            "adversary": self.adversary.to_dict(),
            "seed": self.seed,
            "edges": [list(e) for e in sorted(self.graph.edges)],
            "realized_cross": [list(e) for e in sorted(self.realized_cross)],
        }
        if self.extras:
            d["extras"] = self.extras
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedInstance":
        n = int(d["n"])
        hidden = Partition(n, d["partition"])
        graph = Graph(n, d["edges"])
        realized = as_edge_set(d["realized_cross"])
        lab = hidden.assignment
        kept = frozenset(e for e in graph.edges if lab[e[0]] != lab[e[1]])
        inst = cls(
            graph=graph,
            hidden=hidden,
            epsilon=float(d["epsilon"]),
            realized_cross=realized,
            kept_cross=kept,
            adversary=AdversaryStrategy.from_dict(d["adversary"]),
            seed=int(d["seed"]),
            model=d.get("model", "sr"),
            extras=d.get("extras", {}),
        )
        inst.validate()
        return inst

    @classmethod
    def from_json(cls, text: str) -> "PlantedInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MulticutDemands:
    pairs: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def cross_pairs(P: Partition) -> list[Edge]:
    """All unordered pairs whose endpoints lie in different parts (E_K)."""
    lab = P.assignment
    return [(u, v) for u, v in combinations(range(P.n), 2) if lab[u] != lab[v]]


def count_cross_pairs(P: Partition) -> int:
    sizes = np.array([len(p) for p in P.parts], dtype=np.int64)
    total = P.n * (P.n - 1) // 2
    inside = int((sizes * (sizes - 1) // 2).sum())
    return total - inside


def sr_cost(P: Partition, epsilon: float) -> float:
    """Expected number of sampled cross edges: epsilon * |E_K| (unordered)."""
    return float(epsilon) * count_cross_pairs(P)


def _inside_edges(P: Partition, adversary: AdversaryStrategy, rng: np.random.Generator) -> set[Edge]:
    edges: set[Edge] = set()
    for part in P.parts:
        ids = np.array(part, dtype=np.int64)
        k = len(ids)
        if k < 2:
            continue
        if adversary.inside == "empty":
            continue
        if adversary.inside == "cliques":
            edges.update((int(ids[i]), int(ids[j])) for i in range(k) for j in range(i + 1, k))
        elif adversary.inside == "erdos-renyi":
            pairs = np.array(list(combinations(range(k), 2)), dtype=np.int64)
            mask = rng.random(len(pairs)) < adversary.inside_prob
            for i, j in pairs[mask]:
                edges.add((int(ids[i]), int(ids[j])))
        elif adversary.inside == "regular-expander":
            d = adversary.inside_degree
            if d >= k:
                raise ValueError(f"inside degree {d} infeasible for part of size {k}")
            for i, j in random_regular_edges(k, d, rng):
                edges.add(canon_edge(int(ids[i]), int(ids[j])))
    lab = P.assignment
    for u, v in adversary.extra_inside_edges:
        if lab[u] != lab[v]:
            raise ValueError(f"extra inside edge ({u},{v}) crosses the hidden partition")
        edges.add(canon_edge(u, v))
    return edges


def generate_sr(
    P: Partition,
    epsilon: float,
    adversary: AdversaryStrategy,
    seed: int,
) -> PlantedInstance:
    """Sample an instance: Bernoulli(epsilon) cross edges, adversary inside
    edges, then adversarial deletion of part of the realized cross set."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie strictly between 0 and 1")
    if any(len(p) == 0 for p in P.parts):
        raise ValueError("all parts must be nonempty")
    rng_cross = substream(seed, "instance.cross")
    rng_inside = substream(seed, "instance.inside")
    rng_del = substream(seed, "instance.delete")

    pairs = cross_pairs(P)
    mask = rng_cross.random(len(pairs)) < epsilon
    realized = [pairs[i] for i in np.flatnonzero(mask)]

    n_del = int(round(adversary.cross_deletion * len(realized)))
    if n_del > 0:
        drop = set(map(int, rng_del.choice(len(realized), size=n_del, replace=False)))
        kept = [e for i, e in enumerate(realized) if i not in drop]
    else:
        kept = list(realized)

    inside = _inside_edges(P, adversary, rng_inside)
    graph = Graph(P.n, inside | set(kept))
    inst = PlantedInstance(
        graph=graph,
        hidden=P,
        epsilon=float(epsilon),
        realized_cross=frozenset(realized),
        kept_cross=frozenset(kept),
        adversary=adversary,
        seed=int(seed),
    )
    inst.validate()
    return inst


def random_regular_edges(n: int, d: int, rng: np.random.Generator, max_tries: int = 200) -> set[Edge]:
    """Random d-regular edge set via the configuration model.

    Stubs left over from loop/multi-edge collisions are re-paired instead of
    restarting from scratch (plain rejection has vanishing success
    probability already at moderate d). Complete graph shortcut for d = n-1.
    """
    if d == 0 or n == 0:
        return set()
    if d < 0 or d >= n:
        raise ValueError(f"regular degree {d} infeasible for {n} vertices")
    if (n * d) % 2 != 0:
        raise ValueError("n * d must be even for a d-regular graph")
    if d == n - 1:
        return {(i, j) for i in range(n) for j in range(i + 1, n)}

    def attempt() -> set[Edge] | None:
        edges: set[Edge] = set()
        stubs = np.repeat(np.arange(n), d)
        while len(stubs):
            stubs = stubs[rng.permutation(len(stubs))]
            leftover: list[int] = []
            a, b = stubs[0::2], stubs[1::2]
            for s1, s2 in zip(a.tolist(), b.tolist()):
                if s1 > s2:
                    s1, s2 = s2, s1
                if s1 != s2 and (s1, s2) not in edges:
                    edges.add((s1, s2))
                else:
                    leftover.append(s1)
                    leftover.append(s2)
            if not leftover:
                return edges
            # give up on this attempt if the leftover stubs cannot pair up
            can_pair = False
            uniq = sorted(set(leftover))
            for i, s1 in enumerate(uniq):
                for s2 in uniq[i + 1 :]:
                    if (s1, s2) not in edges:
                        can_pair = True
                        break
                if can_pair:
                    break
            if not can_pair:
                return None
            stubs = np.array(leftover, dtype=np.int64)
        return edges

    for _ in range(max_tries):
        result = attempt()
        if result is not None:
            return result
    raise RuntimeError(f"configuration model failed after {max_tries} tries (n={n}, d={d})")


def generate_planted_expander(
    n: int,
    rho: float,
    inside_degree: int,
    cross_edges: int,
    seed: int,
    p2_inside: AdversaryStrategy | None = None,
) -> PlantedInstance:
    """Planted instance whose small side carries a random regular graph.

    P1 = {0..rho*n-1} gets a random inside_degree-regular graph; P2 gets the
    p2_inside strategy (defaults to a regular graph of the same degree when
    feasible); exactly cross_edges cross pairs are sampled uniformly.
    Records |E1| and the realized normalized spectral gap of G1 in extras.
    """
    size1 = rho * n
    if abs(size1 - round(size1)) > 1e-9:
        raise ValueError("rho * n must be integral")
    size1 = int(round(size1))
    if not (0 < size1 < n):
        raise ValueError("rho must give a nonempty proper side")
    d = int(inside_degree)
    if d >= size1:
        raise ValueError("inside degree must be below the side size")
    if (d * size1) % 2 != 0:
        raise ValueError("inside_degree * side size must be even")
    if cross_edges < 0:
        raise ValueError("cross edge count must be nonnegative")
    max_cross = size1 * (n - size1)
    if cross_edges > max_cross:
        raise ValueError(f"at most {max_cross} cross edges exist")

    P = Partition(n, [range(size1), range(size1, n)])
    rng1 = substream(seed, "expander.side1")
    rng2 = substream(seed, "expander.side2")
    rng_cross = substream(seed, "expander.cross")

    e1 = random_regular_edges(size1, d, rng1)
    size2 = n - size1
    if p2_inside is None:
        d2 = d if d < size2 and (d * size2) % 2 == 0 else 0
        p2_inside = AdversaryStrategy(inside="regular-expander", inside_degree=d2) if d2 else AdversaryStrategy()
    sub_P2 = Partition(size2, [range(size2)])
    e2_local = _inside_edges(sub_P2, p2_inside, rng2)
    e2 = {(u + size1, v + size1) for u, v in e2_local}

    flat = rng_cross.choice(max_cross, size=cross_edges, replace=False) if cross_edges else np.array([], dtype=np.int64)
    cross = {(int(ix // (n - size1)), int(size1 + ix % (n - size1))) for ix in flat}

    g1 = Graph(size1, e1)
    from .expander import algebraic_expansion  # local import to avoid a cycle

    profile = algebraic_expansion(g1, assume_regular=True)
    graph = Graph(n, e1 | e2 | cross)
    inst = PlantedInstance(
        graph=graph,
        hidden=P,
        epsilon=cross_edges / max_cross if max_cross else 0.0,
        realized_cross=frozenset(cross),
        kept_cross=frozenset(cross),
        adversary=p2_inside,
        seed=int(seed),
        model="expander",
        extras={
            "rho": size1 / n,
            "inside_degree": d,
            "cross_edges": int(cross_edges),
            "m1": len(e1),
            "lambda1": profile.lambda2,
        },
    )
    inst.validate()
    return inst


def generate_multicut_demands(inst: PlantedInstance, k: int, seed: int) -> MulticutDemands:
    """k distinct demand pairs crossing the hidden partition."""
    if inst.hidden.n_parts < 2:
        raise ValueError("need at least two parts to draw cross demands")
    if k < 1:
        raise ValueError("k must be at least 1")
    pairs = cross_pairs(inst.hidden)
    if k > len(pairs):
        raise ValueError(f"only {len(pairs)} cross pairs available, requested {k}")
    rng = substream(seed, "demands")
    idx = rng.choice(len(pairs), size=k, replace=False)
    chosen = sorted(pairs[i] for i in map(int, idx))
    return MulticutDemands(tuple(chosen))


def balanced_bipartition(n: int) -> Partition:
    if n % 2 != 0:
        raise ValueError("balanced bipartition needs even n")
    return Partition(n, [range(n // 2), range(n // 2, n)])
