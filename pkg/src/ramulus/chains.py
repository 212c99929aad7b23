"""Polyhedral 1-currents: weighted oriented geometric graphs.

A :class:`PolyChain` stores a vertex table and a list of oriented weighted
edges.  On construction, vertices with identical coordinates are merged,
edge orientations are normalized so every multiplicity is positive, and
parallel edges (same unordered endpoint pair) are consolidated by signed
sum, dropping exact zeros.  Chains are immutable afterwards.

The VALIDATED form additionally requires pairwise disjoint relative
interiors of the segments, with no vertex interior to another edge; this is
checked by :meth:`PolyChain.validate` with an O(E^2) sweep.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, DomainError, PreconditionError
from .measures import Atom, AtomicMeasure

# Geometric predicate tolerance (relative to the chain's bounding-box scale).
GEOM_TOL = 1e-12

# Per-atom tolerance used by validate_kirchhoff.
KIRCHHOFF_TOL = 1e-9


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    multiplicity: float

    def __post_init__(self):
        if self.tail == self.head:
            raise DomainError("edge endpoints must be distinct vertices")
        if self.multiplicity == 0:
            raise DomainError("edge multiplicity must be nonzero")


class PolyChain:
    def __init__(self, vertices, edges):
        verts = np.asarray(vertices, dtype=float)
        if verts.size == 0:
            verts = verts.reshape(0, verts.shape[1] if verts.ndim == 2 else 1)
        if verts.ndim != 2:
            raise DomainError("vertices must be a (V, d) array")
        if not np.all(np.isfinite(verts)):
            raise DomainError("vertex coordinates must be finite")

        # Merge vertices with exactly equal coordinates.
        remap: dict[tuple, int] = {}
        kept: list[np.ndarray] = []
        index_of = np.empty(len(verts), dtype=int)
        for i, v in enumerate(verts):
            key = tuple(v.tolist())
            if key not in remap:
                remap[key] = len(kept)
                kept.append(v)
            index_of[i] = remap[key]

        # Consolidate edges on unordered endpoint pairs, orientation-signed.
        acc: dict[tuple[int, int], float] = {}
        for e in edges:
            if isinstance(e, Edge):
                t, h, w = e.tail, e.head, e.multiplicity
            else:
                t, h, w = e
            w = float(w)
            if w == 0.0:
                continue
            if not (0 <= t < len(verts)) or not (0 <= h < len(verts)):
                raise DomainError(f"edge ({t},{h}) references an invalid vertex index")
            t, h = int(index_of[t]), int(index_of[h])
            if t == h:
                # Zero-length edge: no mass and no net boundary contribution.
                continue
            if t < h:
                key, sign = (t, h), 1.0
            else:
                key, sign = (h, t), -1.0
            acc[key] = acc.get(key, 0.0) + sign * w

        final_edges = []
        for (t, h), w in sorted(acc.items()):
            if w == 0.0:
                continue
            if w > 0:
                final_edges.append(Edge(t, h, w))
            else:
                final_edges.append(Edge(h, t, -w))

        self.vertices = np.array(kept) if kept else verts.reshape(0, verts.shape[1])
        self.vertices.setflags(write=False)
        self.edges = tuple(final_edges)
        self._arrays = None

    # -- basic accessors ------------------------------------------------------

    @classmethod
    def from_segments(cls, segments) -> "PolyChain":
        """Build a chain from (tail_point, head_point, multiplicity) triples."""
        registry: dict[tuple, int] = {}
        verts: list = []
        edges = []
        for p, q, w in segments:
            idx = []
            for point in (p, q):
                point = np.asarray(point, dtype=float)
                key = tuple(point.tolist())
                if key not in registry:
                    registry[key] = len(verts)
                    verts.append(point)
                idx.append(registry[key])
            edges.append((idx[0], idx[1], float(w)))
        if not verts:
            return cls(np.zeros((0, 1)), [])
        return cls(np.array(verts), edges)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def _edge_arrays(self):
        if self._arrays is None:
            tails = np.array([e.tail for e in self.edges], dtype=int)
            heads = np.array([e.head for e in self.edges], dtype=int)
            mults = np.array([e.multiplicity for e in self.edges])
            if len(self.edges):
                lengths = np.linalg.norm(
                    self.vertices[heads] - self.vertices[tails], axis=1
                )
            else:
                lengths = np.zeros(0)
            self._arrays = (tails, heads, mults, lengths)
        return self._arrays

    def scale(self) -> float:
        if len(self.vertices) == 0:
            return 1.0
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        return max(1.0, float(np.linalg.norm(span)))

    def __len__(self) -> int:
        return len(self.edges)

    def __add__(self, other: "PolyChain") -> "PolyChain":
        segs = [(self.vertices[e.tail], self.vertices[e.head], e.multiplicity) for e in self.edges]
        segs += [(other.vertices[e.tail], other.vertices[e.head], e.multiplicity) for e in other.edges]
        return PolyChain.from_segments(segs)

    # -- measures of the chain -------------------------------------------------

    def boundary(self) -> AtomicMeasure:
        """Atomic measure: head gets +w, tail gets -w, per edge (Kirchhoff nets)."""
        contributions: dict[int, list[float]] = {}
        for e in self.edges:
            contributions.setdefault(e.head, []).append(e.multiplicity)
            contributions.setdefault(e.tail, []).append(-e.multiplicity)
        atoms = []
        for v, ws in contributions.items():
            net = math.fsum(ws)
            if net != 0.0:
                atoms.append(Atom(self.vertices[v], net))
        return AtomicMeasure(atoms)

    def mass(self) -> float:
        _, _, mults, lengths = self._edge_arrays()
        return float(np.sum(np.abs(mults) * lengths))

    def alpha_mass(self, alpha: float) -> float:
        if not (0.0 <= alpha <= 1.0):
            raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
        _, _, mults, lengths = self._edge_arrays()
        return float(np.sum(np.abs(mults) ** alpha * lengths))

    # -- structure --------------------------------------------------------------

    def is_tree(self) -> bool:
        """True iff the undirected support graph is a forest (no loop)."""
        parent = list(range(len(self.vertices)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            rt, rh = find(e.tail), find(e.head)
            if rt == rh:
                return False
            parent[rt] = rh
        return True

    def has_cycle(self) -> bool:
        """True iff the flow-oriented graph contains a directed cycle."""
        out: dict[int, list[int]] = {}
        for e in self.edges:
            out.setdefault(e.tail, []).append(e.head)
        color: dict[int, int] = {}

        def visit(v) -> bool:
            color[v] = 1
            for w in out.get(v, ()):
                c = color.get(w, 0)
                if c == 1:
                    return True
                if c == 0 and visit(w):
                    return True
            color[v] = 2
            return False

        return any(color.get(v, 0) == 0 and visit(v) for v in list(out))

    def validate(self) -> "PolyChain":
        """Check the VALIDATED form: disjoint relative interiors.

        Raises :class:`PreconditionError` when two segments cross or overlap
        away from shared endpoints, or when a vertex lies inside another
        edge.  Returns the chain itself on success.
        """
        tol = GEOM_TOL * self.scale()
        V = self.vertices
        for a in range(len(self.edges)):
            ea = self.edges[a]
            pa, qa = V[ea.tail], V[ea.head]
            la = np.linalg.norm(qa - pa)
            for v in range(len(V)):
                if v in (ea.tail, ea.head):
                    continue
                t, d = _point_segment(V[v], pa, qa)
                if d <= tol and tol / max(la, tol) < t < 1 - tol / max(la, tol):
                    raise PreconditionError(
                        f"vertex {v} lies in the relative interior of edge {a}"
                    )
            for b in range(a + 1, len(self.edges)):
                eb = self.edges[b]
                if _interiors_meet(V, ea, eb, tol):
                    raise PreconditionError(
                        f"edges {a} and {b} have intersecting relative interiors"
                    )
        return self

    # -- decomposition ------------------------------------------------------------

    def path_decomposition(self, tol_rel: float = 1e-12):
        """Split an acyclic chain into weighted source-to-sink paths.

        Returns a list of ``(vertex_index_tuple, weight)`` with positive
        weights.  Re-summing the paths reproduces the chain edgewise and the
        masses add up without cancellation.
        """
        if self.has_cycle():
            raise DecompositionError("chain has an oriented cycle")
        scale = max((abs(e.multiplicity) for e in self.edges), default=1.0)
        tol = tol_rel * scale
        residual = {(e.tail, e.head): e.multiplicity for e in self.edges}
        net: dict[int, float] = {}
        for (t, h), w in residual.items():
            net[h] = net.get(h, 0.0) + w
            net[t] = net.get(t, 0.0) - w
        supply = {v: -w for v, w in net.items() if w < -tol}
        demand = {v: w for v, w in net.items() if w > tol}
        out: dict[int, list[int]] = {}
        for (t, h) in residual:
            out.setdefault(t, []).append(h)

        paths = []
        guard = 2 * (len(residual) + len(supply) + len(demand)) + 4
        while any(w > tol for w in residual.values()):
            guard -= 1
            if guard < 0:  # pragma: no cover - float-safety net
                raise DecompositionError("path stripping failed to terminate")
            # Largest remaining supply first keeps the strips maximal-weight.
            source = max(
                (v for v, s in supply.items() if s > tol),
                key=lambda v: (supply[v], -v),
            )
            path = [source]
            seen = {source}
            while True:
                v = path[-1]
                candidates = [h for h in out.get(v, ()) if residual[(v, h)] > tol]
                if not candidates:
                    break
                nxt = max(candidates, key=lambda h: (residual[(v, h)], -h))
                if nxt in seen:  # pragma: no cover - excluded by has_cycle
                    raise DecompositionError("flow revisits a vertex")
                path.append(nxt)
                seen.add(nxt)
            sink = path[-1]
            if sink == source or demand.get(sink, 0.0) <= tol:
                raise DecompositionError(
                    "stripping stalled: opposing multiplicities force cancellation"
                )
            w = min(
                min(residual[(path[i], path[i + 1])] for i in range(len(path) - 1)),
                supply[source],
                demand[sink],
            )
            for i in range(len(path) - 1):
                r = residual[(path[i], path[i + 1])] - w
                residual[(path[i], path[i + 1])] = 0.0 if r <= tol else r
            supply[source] -= w
            demand[sink] -= w
            paths.append((tuple(path), w))
        return paths

    # -- monotonicity diagnostic ----------------------------------------------------

    def monotonicity_profile(self, x, radii, alpha: float):
        """Alpha-weighted length of the chain in balls around x, divided by radius.

        ``x`` must lie on the support away from the boundary support, and all
        radii must stay strictly below the distance to the boundary support.
        For minimizers the returned profile is nondecreasing; a decrease
        flags non-optimality.
        """
        x = np.asarray(x, dtype=float)
        radii = [float(r) for r in radii]
        if not radii or any(r <= 0 for r in radii) or sorted(radii) != radii:
            raise DomainError("radii must be an increasing list of positive reals")
        tol = 1e-9 * self.scale()
        V = self.vertices
        on_support = any(
            _point_segment(x, V[e.tail], V[e.head])[1] <= tol for e in self.edges
        )
        if not on_support:
            raise DomainError("x does not lie on the chain support")
        bsupp = self.boundary().positions()
        if len(bsupp):
            dmin = float(np.min(np.linalg.norm(bsupp - x, axis=1)))
            if max(radii) >= dmin:
                raise DomainError(
                    f"largest radius {max(radii)!r} reaches the boundary support "
                    f"(distance {dmin!r})"
                )
        out = []
        for rho in radii:
            total = 0.0
            for e in self.edges:
                seg = _ball_clip(V[e.tail], V[e.head], x, rho)
                if seg is not None:
                    total += abs(e.multiplicity) ** alpha * seg
            out.append(total / rho)
        return out

    # -- serialization ---------------------------------------------------------------

    def to_obj(self) -> dict:
        return {
            "vertices": [v.tolist() for v in self.vertices],
            "edges": [
                {"head": e.head, "tail": e.tail, "w": e.multiplicity} for e in self.edges
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True)

    @classmethod
    def from_obj(cls, obj: dict) -> "PolyChain":
        try:
            verts = np.asarray(obj["vertices"], dtype=float)
            edges = [(int(e["tail"]), int(e["head"]), float(e["w"])) for e in obj["edges"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed chain object: {exc}") from exc
        if verts.size and verts.ndim != 2:
            raise DomainError("chain vertices must form a 2-d array")
        if verts.size == 0:
            verts = np.zeros((0, 1))
        return cls(verts, edges)

    @classmethod
    def from_json(cls, text: str) -> "PolyChain":
        return cls.from_obj(json.loads(text))

    # -- support comparison -------------------------------------------------------------

    def support_key(self, tol: float | None = None) -> frozenset:
        """Canonical quantized segment set, for support-equality comparison."""
        if tol is None:
            tol = 1e-9 * self.scale()
        out = set()
        for e in self.edges:
            a = tuple(int(round(c / tol)) for c in self.vertices[e.tail])
            b = tuple(int(round(c / tol)) for c in self.vertices[e.head])
            out.add((min(a, b), max(a, b)))
        return frozenset(out)

    def segments(self) -> list:
        """Unoriented (endpoint, endpoint) pairs of the edges."""
        return [(self.vertices[e.tail], self.vertices[e.head]) for e in self.edges]


def supports_close(c1: PolyChain, c2: PolyChain, tol: float) -> bool:
    """Do the two chains have the same segment set up to endpoint tolerance?"""
    segs1 = c1.segments()
    segs2 = c2.segments()
    if len(segs1) != len(segs2):
        return False
    unused = list(range(len(segs2)))
    for a1, b1 in segs1:
        hit = None
        for idx in unused:
            a2, b2 = segs2[idx]
            straight = np.linalg.norm(a1 - a2) <= tol and np.linalg.norm(b1 - b2) <= tol
            flipped = np.linalg.norm(a1 - b2) <= tol and np.linalg.norm(b1 - a2) <= tol
            if straight or flipped:
                hit = idx
                break
        if hit is None:
            return False
        unused.remove(hit)
    return True


# -- module-level operation aliases --------------------------------------------------


def boundary(T: PolyChain) -> AtomicMeasure:
    return T.boundary()


def mass(T: PolyChain) -> float:
    return T.mass()


def alpha_mass(T: PolyChain, alpha: float) -> float:
    return T.alpha_mass(alpha)


def is_tree(T: PolyChain) -> bool:
    return T.is_tree()


def has_cycle(T: PolyChain) -> bool:
    return T.has_cycle()


def path_decomposition(T: PolyChain):
    return T.path_decomposition()


def monotonicity_profile(T: PolyChain, x, radii, alpha: float):
    return T.monotonicity_profile(x, radii, alpha)


def validate_kirchhoff(T: PolyChain, mu_minus: AtomicMeasure, mu_plus: AtomicMeasure) -> bool:
    """True iff boundary(T) equals mu_plus - mu_minus atom by atom."""
    diff = T.boundary() - (mu_plus - mu_minus)
    return all(abs(a.weight) <= KIRCHHOFF_TOL for a in diff.atoms)


def quantize_chain(T: PolyChain, eps: float) -> tuple[PolyChain, float]:
    """Round multiplicities down to integer multiples of eta = eps / (16 N).

    Clamping guarantees the quantized multiplicity never exceeds the
    original, so no alpha-mass can increase; edges whose multiplicity rounds
    to zero are dropped.  The boundary moves by less than eps / 8 in mass.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    n = len(T.edges)
    if n == 0:
        return T, eps / 16.0
    eta = eps / (16.0 * n)
    edges = []
    for e in T.edges:
        q = math.floor(e.multiplicity / eta + 1e-12)
        w = min(q * eta, e.multiplicity)
        if w > 0.0:
            edges.append((e.tail, e.head, w))
    return PolyChain(T.vertices, edges), eta


def flat_upper(T1: PolyChain, T2: PolyChain) -> float:
    """Upper bound for the flat distance between chains: mass of T1 - T2.

    The difference is taken after a common segment refinement so that
    overlapping collinear pieces cancel exactly; crossing interiors are
    split as well.  The exact 1-current flat norm is intentionally out of
    scope; this bound certifies every convergence the package needs.
    """
    segs = [(T1.vertices[e.tail], T1.vertices[e.head], e.multiplicity) for e in T1.edges]
    segs += [(T2.vertices[e.tail], T2.vertices[e.head], -e.multiplicity) for e in T2.edges]
    refined = refine_segments(segs)
    return float(sum(abs(w) * np.linalg.norm(np.asarray(q) - np.asarray(p)) for p, q, w in refined))


def refine_chain(T: PolyChain) -> PolyChain:
    """Split edges at interior vertices, crossings and collinear overlaps."""
    segs = [(T.vertices[e.tail], T.vertices[e.head], e.multiplicity) for e in T.edges]
    extra = [tuple(v.tolist()) for v in T.vertices]
    return PolyChain.from_segments(refine_segments(segs, extra_points=extra))


# -- segment geometry helpers ----------------------------------------------------------


def _point_segment(x, a, b) -> tuple[float, float]:
    """Parameter of and distance to the closest point of segment [a, b]."""
    d = b - a
    denom = float(np.dot(d, d))
    if denom == 0.0:
        return 0.0, float(np.linalg.norm(x - a))
    t = float(np.dot(x - a, d)) / denom
    t = min(1.0, max(0.0, t))
    return t, float(np.linalg.norm(a + t * d - x))


def _segment_closest(p1, q1, p2, q2) -> tuple[float, float, float]:
    """Closest-approach parameters (s, t) and distance of two segments."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(np.dot(d1, d1))
    e = float(np.dot(d2, d2))
    f = float(np.dot(d2, r))
    if a == 0.0 and e == 0.0:
        return 0.0, 0.0, float(np.linalg.norm(r))
    if a == 0.0:
        t = min(1.0, max(0.0, f / e))
        return 0.0, t, float(np.linalg.norm(p2 + t * d2 - p1))
    b = float(np.dot(d1, d2))
    c = float(np.dot(d1, r))
    if e == 0.0:
        s = min(1.0, max(0.0, -c / a))
        return s, 0.0, float(np.linalg.norm(p1 + s * d1 - p2))
    denom = a * e - b * b
    if denom > 1e-14 * a * e:
        s = min(1.0, max(0.0, (b * f - c * e) / denom))
    else:
        s = 0.0  # nearly parallel: slide along the second segment below
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = min(1.0, max(0.0, -c / a))
    elif t > 1.0:
        t = 1.0
        s = min(1.0, max(0.0, (b - c) / a))
    dist = float(np.linalg.norm((p1 + s * d1) - (p2 + t * d2)))
    return s, t, dist


def _interiors_meet(V, ea: Edge, eb: Edge, tol: float) -> bool:
    """Do the relative interiors of two edges intersect (cross or overlap)?"""
    shared = {ea.tail, ea.head} & {eb.tail, eb.head}
    p1, q1 = V[ea.tail], V[ea.head]
    p2, q2 = V[eb.tail], V[eb.head]
    l1 = float(np.linalg.norm(q1 - p1))
    l2 = float(np.linalg.norm(q2 - p2))
    m1 = tol / max(l1, tol)
    m2 = tol / max(l2, tol)
    if _collinear_overlap(p1, q1, p2, q2, tol) is not None:
        return True
    s, t, dist = _segment_closest(p1, q1, p2, q2)
    if dist > tol:
        return False
    interior1 = m1 < s < 1 - m1
    interior2 = m2 < t < 1 - m2
    if shared:
        # Touching at the shared endpoint is fine; anything else is not.
        return interior1 or interior2
    # Distinct endpoint sets: endpoint-on-interior also violates disjointness.
    return interior1 or interior2


def _collinear_overlap(p1, q1, p2, q2, tol: float):
    """Overlap interval of segment 2 on segment 1, as (t_lo, t_hi), or None."""
    d1 = q1 - p1
    l1 = float(np.linalg.norm(d1))
    if l1 <= tol:
        return None
    u = d1 / l1
    for endpoint in (p2, q2):
        off = endpoint - p1
        perp = off - np.dot(off, u) * u
        if float(np.linalg.norm(perp)) > tol:
            return None
    t2a = float(np.dot(p2 - p1, u)) / l1
    t2b = float(np.dot(q2 - p1, u)) / l1
    lo, hi = min(t2a, t2b), max(t2a, t2b)
    lo = max(lo, 0.0)
    hi = min(hi, 1.0)
    if hi - lo <= tol / l1:
        return None
    return lo, hi


def _ball_clip(a, b, center, rho) -> float | None:
    """Length of segment [a, b] inside the closed ball B_rho(center)."""
    d = b - a
    aa = float(np.dot(d, d))
    if aa == 0.0:
        return None
    f = a - center
    bb = 2.0 * float(np.dot(f, d))
    cc = float(np.dot(f, f)) - rho * rho
    disc = bb * bb - 4.0 * aa * cc
    if disc <= 0.0:
        return None
    sq = math.sqrt(disc)
    t1 = (-bb - sq) / (2.0 * aa)
    t2 = (-bb + sq) / (2.0 * aa)
    lo, hi = max(t1, 0.0), min(t2, 1.0)
    if hi <= lo:
        return None
    return (hi - lo) * math.sqrt(aa)


def segment_ball_params(a, b, center, rho):
    """Clipping parameters (t_in, t_out) of [a, b] against B_rho(center)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    aa = float(np.dot(d, d))
    if aa == 0.0:
        return None
    f = a - np.asarray(center, dtype=float)
    bb = 2.0 * float(np.dot(f, d))
    cc = float(np.dot(f, f)) - rho * rho
    disc = bb * bb - 4.0 * aa * cc
    if disc <= 0.0:
        return None
    sq = math.sqrt(disc)
    t1 = (-bb - sq) / (2.0 * aa)
    t2 = (-bb + sq) / (2.0 * aa)
    lo, hi = max(t1, 0.0), min(t2, 1.0)
    if hi <= lo:
        return None
    return lo, hi


def refine_segments(segments, extra_points=None):
    """Split weighted segments at mutual crossings, overlaps and given points.

    Returns a consolidated list of (p, q, w) with w != 0 where geometrically
    identical pieces have been merged by signed sum.  Split points are
    snapped to a shared registry so that collinear overlaps cancel exactly.
    """
    segs = [(np.asarray(p, dtype=float), np.asarray(q, dtype=float), float(w)) for p, q, w in segments]
    segs = [s for s in segs if s[2] != 0.0 and np.linalg.norm(s[1] - s[0]) > 0.0]
    if not segs:
        return []
    pts = np.array([s[0] for s in segs] + [s[1] for s in segs])
    scale = max(1.0, float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))))
    tol = GEOM_TOL * scale
    snap = 1e-9 * scale

    registry: dict[tuple, np.ndarray] = {}

    def snapped(point) -> tuple:
        key = tuple(int(round(c / snap)) for c in point)
        if key not in registry:
            registry[key] = np.asarray(point, dtype=float)
        return key

    cuts: list[set[float]] = [set((0.0, 1.0)) for _ in segs]

    def add_cut(i, t):
        if tol < t * np.linalg.norm(segs[i][1] - segs[i][0]) and t < 1.0:
            cuts[i].add(min(1.0, max(0.0, t)))

    for i, (p1, q1, _) in enumerate(segs):
        l1 = float(np.linalg.norm(q1 - p1))
        if extra_points is not None:
            for x in extra_points:
                t, dist = _point_segment(np.asarray(x, dtype=float), p1, q1)
                if dist <= tol and tol / l1 < t < 1 - tol / l1:
                    cuts[i].add(t)
        for j in range(i + 1, len(segs)):
            p2, q2, _ = segs[j]
            l2 = float(np.linalg.norm(q2 - p2))
            ov = _collinear_overlap(p1, q1, p2, q2, tol)
            if ov is not None:
                for t in ov:
                    if tol / l1 < t < 1 - tol / l1:
                        cuts[i].add(t)
                ov2 = _collinear_overlap(p2, q2, p1, q1, tol)
                if ov2 is not None:
                    for t in ov2:
                        if tol / l2 < t < 1 - tol / l2:
                            cuts[j].add(t)
                continue
            s, t, dist = _segment_closest(p1, q1, p2, q2)
            if dist <= tol:
                if tol / l1 < s < 1 - tol / l1:
                    cuts[i].add(s)
                if tol / l2 < t < 1 - tol / l2:
                    cuts[j].add(t)

    acc: dict[tuple[tuple, tuple], float] = {}
    for (p, q, w), ts in zip(segs, cuts):
        ordered = sorted(ts)
        for t0, t1 in zip(ordered[:-1], ordered[1:]):
            if t1 - t0 <= 0.0:
                continue
            a = snapped(p + t0 * (q - p))
            b = snapped(p + t1 * (q - p))
            if a == b:
                continue
            if a < b:
                key, sign = (a, b), 1.0
            else:
                key, sign = (b, a), -1.0
            acc[key] = acc.get(key, 0.0) + sign * w

    out = []
    for (a, b), w in sorted(acc.items()):
        if abs(w) > 1e-13:
            out.append((registry[a], registry[b], w))
    return out
