"""Shared generators and independent oracles for the test suite."""

import itertools

import numpy as np
import pytest

from ramulus import AtomicMeasure, Boundary, PolyChain
from ramulus.topology import enumerate_topologies


def random_boundary(rng, n_atoms, dim=2, span=1.0):
    """Balanced boundary with n_atoms distinct atoms, at least one per sign."""
    n_src = int(rng.integers(1, n_atoms))
    n_snk = n_atoms - n_src
    pos = rng.uniform(0.0, span, size=(n_atoms, dim))
    src_w = rng.uniform(0.5, 2.0, size=n_src)
    snk_w = rng.uniform(0.5, 2.0, size=n_snk)
    snk_w *= src_w.sum() / snk_w.sum()
    atoms = [(pos[i], -src_w[i]) for i in range(n_src)]
    atoms += [(pos[n_src + j], snk_w[j]) for j in range(n_snk)]
    return Boundary(AtomicMeasure(atoms))


def random_tree_chain(rng, n_terminals=4, dim=2, span=1.0):
    """A (generally non-optimal) tree network carrying a random balanced boundary."""
    b = random_boundary(rng, n_terminals, dim=dim, span=span)
    weights = b.measure.weights()
    terminals = b.measure.positions()
    topologies = enumerate_topologies(n_terminals)
    topo = topologies[int(rng.integers(0, len(topologies)))]
    from ramulus.topology import edge_flows

    flows = edge_flows(topo, weights)
    steiner = rng.uniform(0.2 * span, 0.8 * span, size=(topo.steiner_count, dim))
    positions = np.vstack([terminals, steiner]) if topo.steiner_count else terminals
    segs = []
    for (u, v), f in zip(topo.adjacency, flows):
        if abs(f) < 1e-12:
            continue
        if f > 0:
            segs.append((positions[u], positions[v], f))
        else:
            segs.append((positions[v], positions[u], -f))
    chain = PolyChain.from_segments(segs)
    return chain, b


def random_positive_chain(rng, n_edges=6, dim=2, span=1.0):
    """Random positive-multiplicity chain (not necessarily conservative)."""
    while True:
        pts = rng.uniform(0.0, span, size=(n_edges + 1, dim))
        segs = []
        for i in range(n_edges):
            w = float(rng.uniform(0.05, 3.0))
            segs.append((pts[rng.integers(0, len(pts))], pts[rng.integers(0, len(pts))], w))
        segs = [(p, q, w) for p, q, w in segs if not np.array_equal(p, q)]
        chain = PolyChain.from_segments(segs)
        if len(chain.edges) >= 2:
            return chain


# -- flat-norm brute force ---------------------------------------------------------
#
# The partial-transport program is a balanced transportation problem once a
# virtual node is added on each side (discards are arcs to/from the virtual
# nodes at unit cost, and the two virtual nodes are joined at zero cost).
# Every vertex of a transportation polytope is supported on a spanning
# forest whose flows the balance equations determine uniquely, so an
# exhaustive sweep over forests is an exact, solver-independent oracle.


def flat_norm_bruteforce(measure: AtomicMeasure, discard: bool = True) -> float:
    pos, neg = measure.jordan()
    P = [(a.position, a.weight) for a in pos.atoms]
    N = [(a.position, a.weight) for a in neg.atoms]
    if not P and not N:
        return 0.0
    if not P or not N:
        return measure.mass()

    nodes_supply = [w for _, w in P]
    nodes_demand = [w for _, w in N]
    arcs = []  # (supply_node, demand_node, cost)
    for i, (p, _) in enumerate(P):
        for j, (q, _) in enumerate(N):
            arcs.append((i, j, float(np.linalg.norm(p - q))))
    if discard:
        vs = len(nodes_supply)  # virtual supply node
        vd = len(nodes_demand)  # virtual demand node
        nodes_supply = nodes_supply + [sum(nodes_demand)]
        nodes_demand = nodes_demand + [sum(w for _, w in P)]
        for j in range(len(N)):
            arcs.append((vs, j, 1.0))
        for i in range(len(P)):
            arcs.append((i, vd, 1.0))
        arcs.append((vs, vd, 0.0))

    ns, nd = len(nodes_supply), len(nodes_demand)
    n_nodes = ns + nd
    best = np.inf
    for size in range(0, n_nodes):
        for subset in itertools.combinations(range(len(arcs)), size):
            cost = _forest_cost(subset, arcs, nodes_supply, nodes_demand)
            if cost is not None and cost < best:
                best = cost
    return float(best)


def _forest_cost(subset, arcs, supply, demand):
    ns, nd = len(supply), len(demand)
    parent = list(range(ns + nd))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj = {v: [] for v in range(ns + nd)}
    for idx in subset:
        i, j, c = arcs[idx]
        u, v = i, ns + j
        ru, rv = find(u), find(v)
        if ru == rv:
            return None  # cycle
        parent[ru] = rv
        adj[u].append((v, idx))
        adj[v].append((u, idx))

    need = [-s for s in supply] + list(demand)
    tol = 1e-11 * (sum(abs(x) for x in need) or 1.0)
    deg = {v: len(adj[v]) for v in adj}
    flows = {}
    stack = [v for v in adj if deg[v] == 1]
    removed = set()
    while stack:
        v = stack.pop()
        if v in removed or deg[v] != 1:
            continue
        (u, idx) = next(x for x in adj[v] if x[0] not in removed)
        # flow on arc = requirement of the stripped endpoint, signed so that
        # positive means supply-side -> demand-side
        f = need[v] if v >= len(supply) else -need[v]
        flows[idx] = flows.get(idx, 0.0) + f
        need[u] += need[v]
        removed.add(v)
        deg[u] -= 1
        deg[v] = 0
        if deg[u] == 1:
            stack.append(u)
    for v in adj:
        if v not in removed and abs(need[v]) > tol:
            return None  # unbalanced component
    total = 0.0
    for idx, f in flows.items():
        if f < -tol:
            return None  # infeasible orientation
        total += max(f, 0.0) * arcs[idx][2]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
