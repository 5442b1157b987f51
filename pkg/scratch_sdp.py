"""Scratch benchmark for the SDP solver paths."""
import time
import numpy as np
from semicut.graphs import Graph, complete_graph
from semicut.instances import generate_sr, balanced_bipartition, AdversaryStrategy, Partition
from semicut.sdp import build_model, solve, BALANCED_CUT, SSE, MULTICUT


def two_cliques(a, b, cross=()):
    edges = [(u, v) for u in range(a) for v in range(u + 1, a)]
    edges += [(u, v) for u in range(a, a + b) for v in range(u + 1, a + b)]
    edges += list(cross)
    return Graph(a + b, edges)


def run(tag, model, **kw):
    t0 = time.time()
    phi, rep = solve(model, **kw)
    dt = time.time() - t0
    print(f"{tag}: obj={rep.objective:.3f} conv={rep.converged} viol={ {k: f'{v:.2e}' for k,v in rep.violations.items()} } "
          f"method={rep.method} iters={rep.iterations} k={rep.rank} t={dt:.1f}s")
    return phi, rep


# forced n=2 cases
g2 = Graph(2, [(0, 1)])
run("bc n=2", build_model(BALANCED_CUT, g2))
run("sse n=2 rho=.5", build_model(SSE, g2, rho=0.5))

# two disjoint K10 (n=20) balanced cut: objective ~ 0
g = two_cliques(10, 10)
run("bc 2xK10", build_model(BALANCED_CUT, g))

# n=50 two K25 + some cross, lowrank
rng = np.random.default_rng(0)
cross = [(int(u), int(25 + v)) for u, v in zip(rng.integers(0, 25, 40), rng.integers(0, 25, 40))]
cross = sorted(set(cross))
g = two_cliques(25, 25, cross)
run("bc 2xK25+cross n=50", build_model(BALANCED_CUT, g), seed=1)

# n=100 SR instance
P = balanced_bipartition(100)
inst = generate_sr(P, 0.12, AdversaryStrategy(inside="cliques", cross_deletion=0.3), seed=3)
print("  kept cross:", len(inst.kept_cross))
run("bc SR n=100", build_model(BALANCED_CUT, inst.graph), seed=1)

# n=100 SSE rho=0.25 (sides 25/75 cliques)
P2 = Partition(100, [range(25), range(25, 100)])
inst2 = generate_sr(P2, 0.15, AdversaryStrategy(inside="cliques"), seed=5)
print("  kept cross:", len(inst2.kept_cross))
run("sse SR n=100 rho=.25", build_model(SSE, inst2.graph, rho=0.25), seed=1)
