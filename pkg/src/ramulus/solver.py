"""End-to-end Gilbert solver: enumerate topologies, place branch points, rank.

For a balanced atomic boundary with n atoms the solver walks every tree
topology over the n terminals (plus up to n-2 Steiner vertices), solves the
unique conserving flow on each, prunes edges whose flow vanishes (smoothing
any Steiner vertex left with degree 2, which also folds disconnected optima
into forests), deduplicates the pruned structures, and optimizes Steiner
positions for all of them.

Flows on a tree are linear in the boundary weights, so each topology gets a
precomputed edge-flow matrix, built once per terminal count along with the
batched index arrays; a solve is then one matrix product per topology group
plus a vectorized IRLS sweep for coarse values.  Everything near the front
is re-optimized tightly and realized as a geometric chain; ranking compares
realized networks by support (vertices merged, edge sets on a
1e-9-relative grid), matching the support-based uniqueness notion rather
than the combinatorial one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chains import PolyChain
from .errors import CapacityError, DomainError
from .geometry import branch_angles, angle_between
from .measures import AtomicMeasure, Boundary, as_measure
from .optimizer import (
    PlacementProblem,
    minimize_placement,
    realize_placement,
)
from .topology import Topology, canonical_code, enumerate_topologies

DEFAULT_ATOM_CAP = 8
RANK_EPS = 1e-12

# Batch smoothing schedule: coarse values only; the polish pass owns precision.
_BATCH_STAGES = (3e-2, 3e-3, 3e-4)
_BATCH_ITERS = 12


@dataclass
class CertificateReport:
    is_forest: bool
    kirchhoff_residual: float
    branch_count: int
    branch_count_bound: int
    max_angle_deviation: float
    max_cone_residual: float
    monotonic_ok: bool
    monotonic_points: int
    direct_matching_value: float

    def ok(self) -> bool:
        return (
            self.is_forest
            and self.kirchhoff_residual <= 1e-9
            and self.branch_count <= self.branch_count_bound
            and self.max_angle_deviation <= 1e-5
            and self.max_cone_residual <= 1e-6
            and self.monotonic_ok
        )

    def to_obj(self) -> dict:
        return {
            "branch_count": self.branch_count,
            "branch_count_bound": self.branch_count_bound,
            "direct_matching_value": self.direct_matching_value,
            "is_forest": self.is_forest,
            "kirchhoff_residual": self.kirchhoff_residual,
            "max_angle_deviation": self.max_angle_deviation,
            "max_cone_residual": self.max_cone_residual,
            "monotonic_ok": self.monotonic_ok,
            "monotonic_points": self.monotonic_points,
        }


@dataclass
class SolveResult:
    best: PolyChain
    value: float
    ranking: list[tuple[str, float]]
    gap: float
    certificates: CertificateReport
    alpha: float
    near_optimal: list[PolyChain] = field(default_factory=list)

    def to_obj(self) -> dict:
        obj = self.best.to_obj()
        obj.update(
            {
                "alpha": self.alpha,
                "certificates": self.certificates.to_obj(),
                "gap": self.gap,
                "ranking": [[code, value] for code, value in self.ranking],
                "value": self.value,
            }
        )
        return obj


@dataclass
class UniquenessReport:
    ambiguous: bool
    networks: list[PolyChain]
    values: list[float]
    gap: float


# -- per-topology flow matrices ---------------------------------------------------


def _flow_matrix(topo: Topology) -> np.ndarray:
    """(E, n) matrix M with flows = M @ boundary_weights on this tree.

    The flow on edge (u, v), oriented u -> v, equals the total boundary
    weight of the component containing v once the edge is removed.
    """
    n = topo.n_terminals
    adj: dict[int, list[tuple[int, int]]] = {}
    for idx, (u, v) in enumerate(topo.adjacency):
        adj.setdefault(u, []).append((v, idx))
        adj.setdefault(v, []).append((u, idx))
    M = np.zeros((len(topo.adjacency), n))
    for idx, (u, v) in enumerate(topo.adjacency):
        stack = [v]
        seen = {u, v}
        while stack:
            x = stack.pop()
            if x < n:
                M[idx, x] = 1.0
            for y, eidx in adj.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    return M


class _GroupTable:
    """Batched IRLS machinery for same-shape placement problems."""

    def __init__(self, n_terminals: int, steiner_count: int, adjacencies: list):
        self.n = n_terminals
        self.s = steiner_count
        self.adjacencies = adjacencies
        B = len(adjacencies)
        ne = len(adjacencies[0])
        self.B, self.ne = B, ne
        self.eu = np.array([[e[0] for e in adj] for adj in adjacencies], dtype=int)
        self.ev = np.array([[e[1] for e in adj] for adj in adjacencies], dtype=int)
        if steiner_count == 0:
            return
        s = steiner_count
        bidx = np.repeat(np.arange(B), ne)
        fu = self.eu.ravel()
        fv = self.ev.ravel()
        su = fu - n_terminals
        sv = fv - n_terminals
        self._m_u = su >= 0
        self._m_v = sv >= 0
        m_uv = self._m_u & self._m_v
        self._m_uv = m_uv
        self._m_ut = self._m_u & ~self._m_v
        self._m_vt = self._m_v & ~self._m_u
        self._size = B * s * s
        self._idx_uu = (bidx[self._m_u] * s + su[self._m_u]) * s + su[self._m_u]
        self._idx_vv = (bidx[self._m_v] * s + sv[self._m_v]) * s + sv[self._m_v]
        self._idx_uv = (bidx[m_uv] * s + su[m_uv]) * s + sv[m_uv]
        self._idx_vu = (bidx[m_uv] * s + sv[m_uv]) * s + su[m_uv]
        self._idx_ru = bidx[self._m_ut] * s + su[self._m_ut]
        self._idx_rv = bidx[self._m_vt] * s + sv[self._m_vt]
        self._term_u = fv[self._m_ut]  # terminal opposite a Steiner tail
        self._term_v = fu[self._m_vt]

    def values(self, terminals: np.ndarray, alpha_weights: np.ndarray, diam: float):
        """Coarse placement values for every row; alpha_weights is (B, E)."""
        n, d = terminals.shape
        B, ne, s = self.B, self.ne, self.s
        w = alpha_weights
        if s == 0:
            seg = terminals[self.eu] - terminals[self.ev]
            return np.sum(w * np.linalg.norm(seg, axis=2), axis=1)

        t_u = terminals[self._term_u]
        t_v = terminals[self._term_v]
        C = np.empty((B, n + s, d))
        C[:, :n] = terminals
        rows = np.arange(B)[:, None]

        def sweep(beta):
            bflat = beta.ravel()
            L = (
                np.bincount(self._idx_uu, bflat[self._m_u], minlength=self._size)
                + np.bincount(self._idx_vv, bflat[self._m_v], minlength=self._size)
                - np.bincount(self._idx_uv, bflat[self._m_uv], minlength=self._size)
                - np.bincount(self._idx_vu, bflat[self._m_uv], minlength=self._size)
            ).reshape(B, s, s)
            rhs = np.zeros((B, s, d))
            for k in range(d):
                rhs[:, :, k] = (
                    np.bincount(self._idx_ru, bflat[self._m_ut] * t_u[:, k], minlength=B * s)
                    + np.bincount(self._idx_rv, bflat[self._m_vt] * t_v[:, k], minlength=B * s)
                ).reshape(B, s)
            return np.linalg.solve(L, rhs)

        X = sweep(w)  # neighbor-centroid initialization
        for stage in _BATCH_STAGES:
            eps = stage * diam
            for _ in range(_BATCH_ITERS):
                C[:, n:] = X
                seg = C[rows, self.eu] - C[rows, self.ev]
                dist = np.sqrt(np.sum(seg * seg, axis=2) + eps * eps)
                X = sweep(w / dist)
        C[:, n:] = X
        seg = C[rows, self.eu] - C[rows, self.ev]
        return np.sum(w * np.linalg.norm(seg, axis=2), axis=1)


@lru_cache(maxsize=None)
def _solver_tables(n_terminals: int):
    """Per-(steiner, edge-count) group tables with stacked flow matrices."""
    groups: dict[tuple[int, int], list[Topology]] = {}
    for topo in enumerate_topologies(n_terminals):
        key = (topo.steiner_count, len(topo.adjacency))
        groups.setdefault(key, []).append(topo)
    out = {}
    for key, topos in sorted(groups.items()):
        table = _GroupTable(n_terminals, key[0], [t.adjacency for t in topos])
        M = np.stack([_flow_matrix(t) for t in topos])
        codes = [t.canonical_code.decode() for t in topos]
        out[key] = (table, M, codes, topos)
    return out


# -- pruning -----------------------------------------------------------------


def _prune_structure(n: int, adjacency, flows, zero_tol: float):
    """Drop zero-flow edges and smooth any degree-2 Steiner vertex.

    Returns (adjacency, flows, steiner_count) with Steiner ids renumbered to
    n..n+s-1, or None when nothing is left.
    """
    table: dict[tuple[int, int], float] = {}
    for (u, v), f in zip(adjacency, flows):
        if abs(f) > zero_tol:
            table[(u, v)] = float(f)
    if not table:
        return None

    def degree_map():
        deg: dict[int, list[int]] = {}
        for (u, v) in table:
            deg.setdefault(u, []).append(v)
            deg.setdefault(v, []).append(u)
        return deg

    while True:
        deg = degree_map()
        smoothable = [v for v, nbrs in deg.items() if v >= n and len(nbrs) == 2]
        if not smoothable:
            break
        v = smoothable[0]
        a, b = deg[v]
        ea = (min(a, v), max(a, v))
        eb = (min(v, b), max(v, b))
        fa = table.pop(ea)
        table.pop(eb)
        flow_a_to_v = fa if a < v else -fa
        key = (min(a, b), max(a, b))
        f_new = flow_a_to_v if a < b else -flow_a_to_v
        table[key] = table.get(key, 0.0) + f_new
        if table[key] == 0.0:
            del table[key]
        if not table:
            return None

    steiner = sorted({v for e in table for v in e if v >= n})
    remap = {old: n + i for i, old in enumerate(steiner)}

    def rid(v):
        return v if v < n else remap[v]

    pairs = []
    for (u, v), f in sorted(table.items()):
        uu, vv = rid(u), rid(v)
        if uu < vv:
            pairs.append(((uu, vv), f))
        else:
            pairs.append(((vv, uu), -f))
    pairs.sort()
    adjacency = tuple(p for p, _ in pairs)
    flows = np.array([f for _, f in pairs])
    return adjacency, flows, len(steiner)


class _Candidate:
    __slots__ = ("code", "adjacency", "flows", "steiner_count", "batch_value")

    def __init__(self, code, adjacency, flows, steiner_count, batch_value=math.inf):
        self.code = code
        self.adjacency = adjacency
        self.flows = flows
        self.steiner_count = steiner_count
        self.batch_value = batch_value

    def topology(self, n: int) -> Topology:
        return Topology(n, self.steiner_count, self.adjacency, self.code.encode())


# -- certificates -----------------------------------------------------------------


def _vertex_star(chain: PolyChain, v: int):
    """(other endpoint, signed multiplicity away from v) for edges at v."""
    star = []
    for e in chain.edges:
        if e.tail == v:
            star.append((e.head, e.multiplicity))
        elif e.head == v:
            star.append((e.tail, -e.multiplicity))
    return star


def _certificates(chain: PolyChain, b_measure: AtomicMeasure, alpha: float, rng=None) -> CertificateReport:
    boundary_positions = {tuple(a.position.tolist()) for a in b_measure.atoms}
    interior = [
        v
        for v in range(len(chain.vertices))
        if tuple(chain.vertices[v].tolist()) not in boundary_positions
    ]
    diff = chain.boundary() - b_measure
    kirchhoff = max((abs(a.weight) for a in diff.atoms), default=0.0)

    max_angle_dev = 0.0
    max_cone = 0.0
    for v in interior:
        star = _vertex_star(chain, v)
        resid = np.zeros(chain.dim)
        for other, m in star:
            u = chain.vertices[other] - chain.vertices[v]
            nu = np.linalg.norm(u)
            if nu == 0:
                continue
            resid += abs(m) ** alpha * (u / nu)
        max_cone = max(max_cone, float(np.linalg.norm(resid)))
        if len(star) == 3 and 0.0 <= alpha < 1.0:
            ins = [(o, -m) for o, m in star if m < 0]
            outs = [(o, m) for o, m in star if m > 0]
            pair, trunk = (ins, outs) if len(ins) == 2 else (outs, ins)
            if len(pair) == 2 and len(trunk) == 1:
                (o1, a1), (o2, a2) = pair
                ((ot, _),) = trunk
                u1 = chain.vertices[o1] - chain.vertices[v]
                u2 = chain.vertices[o2] - chain.vertices[v]
                ut = chain.vertices[ot] - chain.vertices[v]
                try:
                    t1, t2, t12 = branch_angles(a1, a2, alpha)
                except DomainError:
                    continue
                m1 = angle_between(u1, -ut)
                m2 = angle_between(u2, -ut)
                m12 = angle_between(u1, u2)
                dev = max(abs(m1 - t1), abs(m2 - t2), abs(m12 - t12))
                max_angle_dev = max(max_angle_dev, dev)

    monotonic_ok, points = _monotonicity_spot_check(chain, b_measure, alpha, rng)

    return CertificateReport(
        is_forest=chain.is_tree(),
        kirchhoff_residual=kirchhoff,
        branch_count=len(interior),
        branch_count_bound=max(len(b_measure.atoms) - 2, 0),
        max_angle_deviation=max_angle_dev,
        max_cone_residual=max_cone,
        monotonic_ok=monotonic_ok,
        monotonic_points=points,
        direct_matching_value=_direct_matching_value(b_measure, alpha),
    )


def _monotonicity_spot_check(chain, b_measure, alpha, rng=None, n_points: int = 3):
    bpos = b_measure.positions()
    if len(bpos) == 0 or len(chain.edges) == 0:
        return True, 0
    order = np.argsort(
        [-np.linalg.norm(chain.vertices[e.head] - chain.vertices[e.tail]) for e in chain.edges]
    )
    checked = 0
    rng = rng or np.random.default_rng(0)
    for idx in order:
        if checked >= n_points:
            break
        e = chain.edges[idx]
        t = 0.5 if checked == 0 else float(rng.uniform(0.3, 0.7))
        x = chain.vertices[e.tail] + t * (chain.vertices[e.head] - chain.vertices[e.tail])
        dmin = float(np.min(np.linalg.norm(bpos - x, axis=1)))
        if dmin <= 1e-9 * chain.scale():
            continue
        radii = [dmin * f for f in (0.2, 0.45, 0.7, 0.95)]
        try:
            profile = chain.monotonicity_profile(x, radii, alpha)
        except DomainError:
            continue
        slack = 1e-9 * (1.0 + max(profile))
        for lo, hi in zip(profile[:-1], profile[1:]):
            if hi < lo - slack:
                return False, checked + 1
        checked += 1
    return True, checked


def _direct_matching_value(b_measure: AtomicMeasure, alpha: float) -> float:
    """Alpha-energy of a northwest-corner fractional source-sink matching."""
    pos, neg = b_measure.jordan()
    sinks = [(a.position, a.weight) for a in pos.atoms]
    sources = [(a.position, a.weight) for a in neg.atoms]
    total = 0.0
    i = j = 0
    si = sinks[0][1] if sinks else 0.0
    sj = sources[0][1] if sources else 0.0
    while i < len(sinks) and j < len(sources):
        amount = min(si, sj)
        if amount > 0:
            dist = float(np.linalg.norm(sinks[i][0] - sources[j][0]))
            total += amount**alpha * dist
        si -= amount
        sj -= amount
        if si <= 1e-15 * (1 + abs(sinks[i][1])):
            i += 1
            si = sinks[i][1] if i < len(sinks) else 0.0
        if sj <= 1e-15 * (1 + abs(sources[j][1])):
            j += 1
            sj = sources[j][1] if j < len(sources) else 0.0
    return total


# -- public entry points --------------------------------------------------------------


def solve_gilbert(
    b,
    alpha: float,
    atom_cap: int = DEFAULT_ATOM_CAP,
    gap_tol: float = 1e-6,
    polish_cap: int = 60,
) -> SolveResult:
    measure = as_measure(b)
    if not isinstance(b, Boundary):
        Boundary(measure)  # raises DomainError when unbalanced
    if len(measure) == 0:
        raise DomainError("boundary must be nonzero")
    if len(measure) > atom_cap:
        raise CapacityError(
            f"{len(measure)} atoms exceed the configured cap of {atom_cap}"
        )
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}")

    terminals = measure.positions()
    weights = measure.weights()
    n = len(terminals)
    diffs = terminals[:, None, :] - terminals[None, :, :]
    diam = max(float(np.max(np.linalg.norm(diffs, axis=2))), 1e-30)
    zero_tol = 1e-12 * float(np.sum(np.abs(weights)))

    tables = _solver_tables(n)
    tree_codes = {code for _, _, codes, _ in tables.values() for code in codes}
    candidates: list[_Candidate] = []
    forest_seen: set[str] = set()
    forest_records: list[_Candidate] = []

    for (s, ne), (table, M, codes, topos) in tables.items():
        flows = np.einsum("ben,n->be", M, weights)
        zero = np.abs(flows) <= zero_tol
        dirty = zero.any(axis=1)
        w_alpha = np.where(zero, 1.0, np.abs(flows)) ** alpha
        vals = table.values(terminals, w_alpha, diam)
        for row in range(table.B):
            if dirty[row]:
                pruned = _prune_structure(n, topos[row].adjacency, flows[row], zero_tol)
                if pruned is None:
                    continue
                adjacency, pflows, ps = pruned
                code = canonical_code(n, adjacency).decode()
                if code in tree_codes or code in forest_seen:
                    continue  # the pruned tree is evaluated through its own row
                forest_seen.add(code)
                forest_records.append(_Candidate(code, adjacency, pflows, ps))
            else:
                candidates.append(
                    _Candidate(codes[row], topos[row].adjacency, flows[row], s, float(vals[row]))
                )

    # Forests from pruned rows: batch them by shape as well.
    forest_groups: dict[tuple[int, int], list[_Candidate]] = {}
    for cand in forest_records:
        forest_groups.setdefault((cand.steiner_count, len(cand.adjacency)), []).append(cand)
    for (s, ne), members in forest_groups.items():
        table = _GroupTable(n, s, [c.adjacency for c in members])
        w_alpha = np.array([np.abs(c.flows) ** alpha for c in members])
        vals = table.values(terminals, w_alpha, diam)
        for cand, v in zip(members, vals):
            cand.batch_value = float(v)
    candidates.extend(forest_records)

    candidates.sort(key=lambda c: (c.batch_value, c.code))
    best_guess = candidates[0].batch_value
    margin = max(5e-3, 5.0 * gap_tol) * (1.0 + abs(best_guess))
    polish = [c for c in candidates if c.batch_value <= best_guess + margin]
    polish = polish[:polish_cap]

    realized = []
    for cand in polish:
        problem = PlacementProblem(cand.topology(n), cand.flows, terminals, alpha)
        result = minimize_placement(problem, tol=1e-9, max_iter=6000)
        chain = realize_placement(terminals, cand.adjacency, cand.flows, result)
        value = chain.alpha_mass(alpha)
        realized.append((value, cand, chain))
    realized.sort(key=lambda t: (t[0], t[1].code))

    support_tol = 1e-9 * max(1.0, diam)
    ranking: list[tuple[str, float]] = []
    networks: list[PolyChain] = []
    seen_supports: set[frozenset] = set()
    for value, cand, chain in realized:
        key = chain.support_key(support_tol)
        if key in seen_supports:
            continue
        seen_supports.add(key)
        ranking.append((cand.code, value))
        networks.append(chain)
    for cand in candidates[len(polish):]:
        ranking.append((cand.code, cand.batch_value))
    ranking.sort(key=lambda t: (t[1], t[0]))

    best_value, best_cand, best_chain = realized[0]
    gap = 0.0
    if len(ranking) > 1:
        gap = (ranking[1][1] - ranking[0][1]) / max(ranking[0][1], RANK_EPS)

    certs = _certificates(best_chain, measure, alpha)
    return SolveResult(
        best=best_chain,
        value=best_value,
        ranking=ranking,
        gap=gap,
        certificates=certs,
        alpha=alpha,
        near_optimal=networks,
    )


def uniqueness_probe(b, alpha: float, gap_tol: float = 1e-6, atom_cap: int = DEFAULT_ATOM_CAP) -> UniquenessReport:
    """Ambiguous iff two support-distinct networks match the optimum within gap_tol."""
    result = solve_gilbert(b, alpha, atom_cap=atom_cap, gap_tol=gap_tol)
    best = result.value
    networks = []
    values = []
    for chain in result.near_optimal:
        v = chain.alpha_mass(alpha)
        if (v - best) / max(best, RANK_EPS) <= gap_tol:
            networks.append(chain)
            values.append(v)
    return UniquenessReport(
        ambiguous=len(networks) >= 2,
        networks=networks,
        values=values,
        gap=result.gap,
    )
