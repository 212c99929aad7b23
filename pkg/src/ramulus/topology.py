"""Combinatorial tree topologies over labeled terminals.

A topology is a tree on ``n`` labeled terminals (vertex ids ``0 .. n-1``)
plus ``s`` unlabeled branch (Steiner) vertices of degree >= 3 (ids
``n .. n+s-1``), with ``s <= n - 2``.  Topologies are deduplicated by a
canonical code that is invariant under relabeling of the Steiner vertices
but keeps terminals fixed.

Enumeration proceeds by adding one terminal at a time.  Removing the
highest terminal from any valid tree and smoothing a resulting degree-2
Steiner vertex inverts exactly one of the four insertion moves below, so
the generation is complete; tests cross-check against an independent
brute-force generator for small n.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Topology:
    n_terminals: int
    steiner_count: int
    adjacency: tuple[tuple[int, int], ...]
    canonical_code: bytes

    @property
    def n_vertices(self) -> int:
        return self.n_terminals + self.steiner_count

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for u, v in self.adjacency:
            deg[u] += 1
            deg[v] += 1
        return deg


def canonical_code(n_terminals: int, adjacency) -> bytes:
    """Isomorphism-invariant code: terminals labeled, Steiner vertices not."""
    adj: dict[int, list[int]] = {}
    vertices = set(range(n_terminals))
    for u, v in adjacency:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
        vertices.add(u)
        vertices.add(v)
    comp_codes = []
    seen: set[int] = set()
    for start in sorted(vertices):
        if start in seen:
            continue
        comp = _component(start, adj)
        seen |= comp
        comp_codes.append(_tree_code(comp, adj, n_terminals))
    return "|".join(sorted(comp_codes)).encode()


def _component(start, adj) -> set[int]:
    comp = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w not in comp:
                comp.add(w)
                stack.append(w)
    return comp


def _tree_code(comp: set[int], adj, n_terminals: int) -> str:
    if len(comp) == 1:
        v = next(iter(comp))
        return _label(v, n_terminals)
    centroids = _centroids(comp, adj)
    return min(_rooted_code(r, None, adj, n_terminals) for r in centroids)


def _label(v: int, n_terminals: int) -> str:
    return f"t{v}" if v < n_terminals else "s"


def _rooted_code(v, parent, adj, n_terminals) -> str:
    children = sorted(
        _rooted_code(w, v, adj, n_terminals) for w in adj.get(v, ()) if w != parent
    )
    return _label(v, n_terminals) + "(" + "".join(children) + ")"


def _centroids(comp: set[int], adj) -> list[int]:
    # Peel leaves layer by layer; the last one or two survivors are centroids.
    deg = {v: len([w for w in adj.get(v, ()) if w in comp]) for v in comp}
    remaining = set(comp)
    layer = [v for v in remaining if deg[v] <= 1]
    while len(remaining) > 2:
        nxt = []
        for v in layer:
            remaining.discard(v)
            for w in adj.get(v, ()):
                if w in remaining:
                    deg[w] -= 1
                    if deg[w] == 1:
                        nxt.append(w)
        layer = nxt
    return sorted(remaining)


def _normalize(n_terminals: int, edges: frozenset) -> tuple[tuple[int, int], ...]:
    """Renumber Steiner ids in BFS order from terminal 0; sort the edge list."""
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    order: dict[int, int] = {}
    next_id = n_terminals
    visited = set()
    stack = sorted(adj)[:1]
    queue = list(range(n_terminals))
    for start in queue + stack:
        if start in visited or start not in adj:
            continue
        bfs = [start]
        visited.add(start)
        while bfs:
            v = bfs.pop(0)
            if v >= n_terminals and v not in order:
                order[v] = next_id
                next_id += 1
            for w in sorted(adj.get(v, ())):
                if w not in visited:
                    visited.add(w)
                    bfs.append(w)

    def rid(v):
        return v if v < n_terminals else order[v]

    out = sorted(tuple(sorted((rid(u), rid(v)))) for u, v in edges)
    return tuple((u, v) for u, v in out)


def _make_topology(n_terminals: int, edges: frozenset) -> Topology:
    adjacency = _normalize(n_terminals, edges)
    steiner = {v for e in adjacency for v in e if v >= n_terminals}
    return Topology(
        n_terminals=n_terminals,
        steiner_count=len(steiner),
        adjacency=adjacency,
        canonical_code=canonical_code(n_terminals, adjacency),
    )


@lru_cache(maxsize=None)
def enumerate_topologies(n_terminals: int) -> tuple[Topology, ...]:
    """All tree topologies over ``n_terminals`` labeled terminals.

    Steiner vertices (up to ``n_terminals - 2``) have degree >= 3 and are
    unlabeled.  Output is deduplicated and sorted by canonical code.
    Enumeration cost grows super-exponentially; beyond n = 8 or so this is
    not usable, which is a documented wall rather than a bug.
    """
    if n_terminals < 2:
        raise DomainError("need at least 2 terminals")
    if n_terminals == 2:
        return (_make_topology(2, frozenset({(0, 1)})),)

    previous = enumerate_topologies(n_terminals - 1)
    t = n_terminals - 1  # id of the new terminal
    found: dict[bytes, Topology] = {}

    def offer(edge_set: frozenset):
        topo = _make_topology(n_terminals, edge_set)
        found.setdefault(topo.canonical_code, topo)

    for base in previous:
        # Old Steiner ids shift up by one to make room for the new terminal.
        def lift(v):
            return v if v < t else v + 1

        edges = frozenset(tuple(sorted((lift(u), lift(v)))) for u, v in base.adjacency)
        vertices = sorted({v for e in edges for v in e})
        next_free = max(max(vertices), t) + 1

        # (a) attach the new terminal to an existing vertex
        for v in vertices:
            offer(edges | {tuple(sorted((t, v)))})
        # (b) subdivide an edge with a new Steiner vertex, hang the terminal on it
        for (u, v) in edges:
            s = next_free
            offer(
                (edges - {(u, v)})
                | {tuple(sorted((u, s))), tuple(sorted((s, v))), tuple(sorted((s, t)))}
            )
        # (c) turn an existing Steiner vertex into the new terminal
        for v in vertices:
            if v > t:
                relabeled = frozenset(
                    tuple(sorted((t if a == v else a, t if b == v else b)))
                    for a, b in edges
                )
                offer(relabeled)
        # (d) subdivide an edge with the new terminal itself
        for (u, v) in edges:
            offer((edges - {(u, v)}) | {tuple(sorted((u, t))), tuple(sorted((t, v)))})

    return tuple(found[c] for c in sorted(found))


def edge_flows(t: Topology, boundary_weights) -> np.ndarray:
    """Unique conserving flow on a tree topology for the given terminal weights.

    ``boundary_weights[i]`` is the net weight of terminal ``i`` (positive for
    sinks), and must sum to zero.  The returned array is aligned with
    ``t.adjacency``; ``flows[e] > 0`` means flow from the smaller-id endpoint
    to the larger.  Flows that come out exactly zero mark the topology as
    degenerate for this boundary.
    """
    w = np.asarray(boundary_weights, dtype=float)
    if w.size != t.n_terminals:
        raise DomainError("boundary weight count must match terminal count")
    scale = float(np.sum(np.abs(w))) or 1.0
    if abs(float(np.sum(w))) > 1e-9 * scale:
        raise DomainError("boundary weights must sum to zero")
    flows = _forest_flows(t.n_vertices, t.adjacency, w)
    if flows is None:
        raise DomainError("flow system is inconsistent on this topology")
    return flows


def _forest_flows(n_vertices: int, adjacency, terminal_weights) -> np.ndarray | None:
    """Leaf-stripping flow solve on a forest; None if a component is unbalanced.

    Vertices beyond ``len(terminal_weights)`` are balance-zero Steiner points.
    """
    nt = len(terminal_weights)
    need = np.zeros(n_vertices)
    need[:nt] = terminal_weights
    adj: dict[int, dict[int, int]] = {v: {} for v in range(n_vertices)}
    for idx, (u, v) in enumerate(adjacency):
        adj[u][v] = idx
        adj[v][u] = idx
    flows = np.zeros(len(adjacency))
    degree = {v: len(adj[v]) for v in range(n_vertices)}
    stack = [v for v in range(n_vertices) if degree[v] == 1]
    removed = [False] * n_vertices
    tol = 1e-9 * (float(np.sum(np.abs(terminal_weights))) or 1.0)
    while stack:
        v = stack.pop()
        if removed[v] or degree[v] != 1:
            continue
        (u, idx) = next(iter(adj[v].items()))
        # Net demand of v rides the edge (min(u,v), max(u,v)), signed toward v.
        lo, hi = min(u, v), max(u, v)
        flows[idx] = need[v] if v == hi else -need[v]
        need[u] += need[v]
        removed[v] = True
        del adj[u][v]
        del adj[v][u]
        degree[u] -= 1
        degree[v] = 0
        if degree[u] == 1:
            stack.append(u)
    # Isolated leftovers (component roots) must be balanced.
    for v in range(n_vertices):
        if not removed[v] and abs(need[v]) > tol:
            return None
    return flows
