"""Constructive procedures: dyadic transport, boundary perturbation, stability.

The dyadic transport routes the mass of an atomic probability measure in
the unit cube through nested dyadic cube centers.  Generation n moves every
parent-center atom to the centers of its occupied children; each such hop
has length exactly sqrt(d)/2 * 2^{-n} (the parent-center-to-child-center
distance), so the plain mass of generation n is exactly c_d 2^{-n} with
c_d = sqrt(d)/2, and the alpha-energy is bounded by c_d 2^{n(d-1-d alpha)}.
The bound decays, and the construction converges, exactly when
alpha > 1 - 1/d.

Boundary perturbation removes a 1/k fraction of a chain inside small balls
around chosen support points, which adds low-multiplicity boundary atoms at
the ball crossings; the new boundary stays within explicit mass and
flat-norm distances of the original.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chains import PolyChain, segment_ball_params
from .errors import DomainError, PreconditionError
from .local_branch import FourPointInstance, classify_four_point
from .measures import AtomicMeasure, Boundary, as_measure, flat_norm_0
from .solver import solve_gilbert

_COLLISION_GUARD = 2 ** -20  # fraction of the jitter magnitude


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("RAMULUS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class DyadicReport:
    chain: PolyChain
    per_generation: list[tuple[int, float, float, float]]
    total_alpha_mass: float
    series_converging: bool
    normalization: float
    jitter: np.ndarray | None = None
    measure: AtomicMeasure | None = None

    def to_obj(self) -> dict:
        return {
            "chain": self.chain.to_obj(),
            "jitter": None if self.jitter is None else self.jitter.tolist(),
            "normalization": self.normalization,
            "per_generation": [
                {"alpha_mass": am, "bound": bd, "mass": m, "n": n}
                for n, m, am, bd in self.per_generation
            ],
            "series_converging": self.series_converging,
            "total_alpha_mass": self.total_alpha_mass,
        }


@dataclass
class PerturbationReport:
    T_n: PolyChain
    b_n: Boundary
    mass_bound_ok: bool
    flat_bound_ok: bool
    local_labels: list[str] | None = None
    mass_b_n: float = 0.0
    mass_bound: float = 0.0
    flat_distance: float = 0.0
    flat_bound: float = 0.0

    def to_obj(self) -> dict:
        return {
            "boundary": self.b_n.measure.to_obj(),
            "chain": self.T_n.to_obj(),
            "flat_bound": self.flat_bound,
            "flat_bound_ok": self.flat_bound_ok,
            "flat_distance": self.flat_distance,
            "local_labels": self.local_labels,
            "mass_bound": self.mass_bound,
            "mass_bound_ok": self.mass_bound_ok,
            "mass_boundary": self.mass_b_n,
        }


@dataclass
class StabilityEntry:
    index: int
    flat_distance: float
    value: float


@dataclass
class StabilityReport:
    base_value: float
    entries: list[StabilityEntry]
    converged: bool
    monotone_envelope_ok: bool
    tolerance: float

    def to_obj(self) -> dict:
        return {
            "base_value": self.base_value,
            "converged": self.converged,
            "entries": [
                {"flat_distance": e.flat_distance, "index": e.index, "value": e.value}
                for e in self.entries
            ],
            "monotone_envelope_ok": self.monotone_envelope_ok,
            "tolerance": self.tolerance,
        }


# -- dyadic transport -------------------------------------------------------------


def dyadic_transport(mu_plus, alpha: float, depth: int) -> DyadicReport:
    measure = as_measure(mu_plus)
    if len(measure) == 0:
        raise DomainError("measure must be nonzero")
    if any(a.weight <= 0 for a in measure.atoms):
        raise DomainError("dyadic transport requires a positive measure")
    if depth < 1 or int(depth) != depth:
        raise DomainError("depth must be an integer >= 1")
    if not (0.0 <= alpha <= 1.0):
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    d = measure.dim
    P = measure.positions()
    if np.any(P < 0.0) or np.any(P > 1.0):
        raise DomainError("measure must be supported in the unit cube")
    normalization = measure.mass()
    w = measure.weights() / normalization
    c_d = math.sqrt(d) / 2.0
    center = np.full(d, 0.5)

    rows = []
    converging = alpha > 1.0 - 1.0 / d
    if len(measure) == 1 and np.array_equal(P[0], center):
        # The target already sits at the source: nothing to transport.
        empty = PolyChain(np.zeros((0, d)), [])
        return DyadicReport(empty, [], 0.0, converging, normalization, None, measure)

    P, jitter = _resolve_face_collisions(P, depth)

    segs = []
    for n in range(1, depth + 1):
        cells = np.floor(P * 2**n).astype(int)
        cells = np.minimum(cells, 2**n - 1)
        gen_mass: dict[tuple, float] = {}
        for idx, weight in zip(map(tuple, cells), w):
            gen_mass[idx] = gen_mass.get(idx, 0.0) + weight
        mass_n = 0.0
        alpha_n = 0.0
        for idx, m in gen_mass.items():
            child = (np.array(idx) + 0.5) / 2**n
            parent_idx = tuple(np.array(idx) // 2)
            parent = (np.array(parent_idx) + 0.5) / 2 ** (n - 1)
            hop = float(np.linalg.norm(child - parent))
            segs.append((parent, child, m))
            mass_n += m * hop
            alpha_n += m**alpha * hop
        bound = c_d * 2.0 ** (n * (d - 1 - d * alpha))
        rows.append((n, mass_n, alpha_n, bound))

    chain = PolyChain.from_segments(segs)
    total = float(sum(r[2] for r in rows))
    jittered = AtomicMeasure(
        (p, weight) for p, weight in zip(P, measure.weights())
    )
    return DyadicReport(chain, rows, total, converging, normalization, jitter, jittered)


def _resolve_face_collisions(P: np.ndarray, depth: int):
    """Translate the measure off internal dyadic faces when necessary."""
    j = 2.0 ** (-depth - 20)
    guard = j * _COLLISION_GUARD

    def collides(Q) -> np.ndarray:
        bad = np.zeros(Q.shape[1], dtype=bool)
        for n in range(1, depth + 1):
            scaled = Q * 2**n
            near = np.abs(scaled - np.round(scaled)) <= guard * 2**n
            internal = (Q > guard) & (Q < 1.0 - guard)
            bad |= np.any(near & internal, axis=0)
        return bad

    bad = collides(P)
    if not np.any(bad):
        return P, None
    jitter = np.zeros(P.shape[1])
    Q = P.copy()
    for axis in np.nonzero(bad)[0]:
        if np.max(P[:, axis]) + j <= 1.0:
            t = j
        elif np.min(P[:, axis]) - j >= 0.0:
            t = -j
        else:
            raise DomainError(
                "atoms on dyadic faces cannot be translated inside the unit cube"
            )
        jitter[axis] = t
        Q[:, axis] = P[:, axis] + t
    if np.any(collides(Q)):
        raise DomainError("atoms remain on dyadic faces beyond the jitter budget")
    return Q, jitter


# -- boundary perturbation -----------------------------------------------------------


def perturb_boundary(
    T: PolyChain, points, k: int, n: int, classify_locals: bool = False, alpha: float | None = None
) -> PerturbationReport:
    """Remove a 1/k fraction of T inside radius-1/n balls around given points.

    The balls must be pairwise disjoint and keep clear of the boundary
    support and of every branch vertex.  Each clipped run contributes two
    new boundary atoms of weight w/k at the crossing points.
    """
    if int(k) != k or k < 1:
        raise DomainError("k must be an integer >= 1")
    if int(n) != n or n < 1:
        raise DomainError("n must be an integer >= 1")
    pts = [np.asarray(p, dtype=float) for p in points]
    h = len(pts)
    if h == 0:
        raise DomainError("at least one perturbation point is required")
    r = 1.0 / n
    scale = T.scale()
    tol = 1e-9 * scale

    b_measure = T.boundary()
    bpos = b_measure.positions()
    degrees: dict[int, int] = {}
    for e in T.edges:
        degrees[e.tail] = degrees.get(e.tail, 0) + 1
        degrees[e.head] = degrees.get(e.head, 0) + 1
    branch_pts = [T.vertices[v] for v, deg in degrees.items() if deg >= 3]

    for i, p in enumerate(pts):
        on_support = any(
            _dist_to_edge(T, e, p) <= tol for e in T.edges
        )
        if not on_support:
            raise PreconditionError(f"point {i} does not lie on the chain support")
        for j in range(i + 1, h):
            if np.linalg.norm(p - pts[j]) <= 2 * r:
                raise PreconditionError(f"balls around points {i} and {j} intersect")
        if len(bpos) and np.min(np.linalg.norm(bpos - p, axis=1)) <= r:
            raise PreconditionError(f"ball around point {i} touches the boundary support")
        for q in branch_pts:
            if np.linalg.norm(q - p) <= r:
                raise PreconditionError(f"ball around point {i} touches a branch vertex")

    segs = []
    clip_factor = 1.0 - 1.0 / k
    for e in T.edges:
        a = T.vertices[e.tail]
        b = T.vertices[e.head]
        intervals = []
        for p in pts:
            params = segment_ball_params(a, b, p, r)
            if params is not None:
                intervals.append(params)
        intervals.sort()
        cursor = 0.0
        for lo, hi in intervals:
            if lo > cursor:
                segs.append((a + cursor * (b - a), a + lo * (b - a), e.multiplicity))
            inner = e.multiplicity * clip_factor
            if inner != 0.0:
                segs.append((a + lo * (b - a), a + hi * (b - a), inner))
            cursor = hi
        if cursor < 1.0:
            segs.append((a + cursor * (b - a), b, e.multiplicity))
    T_n = PolyChain.from_segments(segs)
    b_n = Boundary(T_n.boundary())

    mass_b = b_measure.mass()
    mass_bound = (1.0 + h / k) * mass_b
    mass_ok = b_n.mass() <= mass_bound + 1e-9 * max(1.0, mass_b)
    flat_dist = flat_norm_0(b_n.measure - b_measure)
    flat_bound = h / (n * k) * mass_b
    flat_ok = flat_dist <= flat_bound + 1e-9 * max(1.0, mass_b)

    labels = None
    if classify_locals:
        if alpha is None:
            raise DomainError("alpha is required when classifying local windows")
        labels = [_local_label(T, p, r, k, alpha) for p in pts]

    return PerturbationReport(
        T_n=T_n,
        b_n=b_n,
        mass_bound_ok=bool(mass_ok),
        flat_bound_ok=bool(flat_ok),
        local_labels=labels,
        mass_b_n=b_n.mass(),
        mass_bound=mass_bound,
        flat_distance=flat_dist,
        flat_bound=flat_bound,
    )


def _dist_to_edge(T: PolyChain, e, p) -> float:
    a = T.vertices[e.tail]
    b = T.vertices[e.head]
    d = b - a
    t = float(np.dot(p - a, d) / np.dot(d, d))
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(a + t * d - p))


def _local_label(T: PolyChain, p, r: float, k: int, alpha: float) -> str:
    """Classify the four-point window around one perturbation point."""
    edge = min(T.edges, key=lambda e: _dist_to_edge(T, e, p))
    a = T.vertices[edge.tail]
    b = T.vertices[edge.head]
    u = (b - a) / np.linalg.norm(b - a)
    span = 2.0 * r
    A = p - span * u
    D = p + span * u
    B = p - r * u
    C = p + r * u
    try:
        inst = FourPointInstance(A=A, B=B, C=C, D=D, theta=edge.multiplicity, k=k, alpha=alpha)
        return classify_four_point(inst).label
    except DomainError:
        return "OTHER(window)"


# -- stability ---------------------------------------------------------------------


def stability_experiment(
    b, family, alpha: float, atom_cap: int = 8, tolerance: float = 1e-4
) -> StabilityReport:
    """Solve a family of boundaries and check value convergence toward b's optimum."""
    base_measure = as_measure(b)
    base = solve_gilbert(b, alpha, atom_cap=atom_cap)
    members = list(family)

    def run(item):
        index, member = item
        value = solve_gilbert(member, alpha, atom_cap=atom_cap).value
        dist = flat_norm_0(as_measure(member) - base_measure)
        return StabilityEntry(index=index, flat_distance=dist, value=value)

    workers = _max_workers()
    if workers > 1 and len(members) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run, enumerate(members)))
    else:
        entries = [run(item) for item in enumerate(members)]
    entries.sort(key=lambda e: e.index)

    tol_eff = tolerance * (1.0 + abs(base.value))
    by_dist = sorted(entries, key=lambda e: e.flat_distance)
    converged = bool(by_dist) and abs(by_dist[0].value - base.value) <= tol_eff
    monotone = True
    for i, ei in enumerate(by_dist):
        worst_farther = max(
            (abs(ej.value - base.value) for ej in by_dist[i:]), default=0.0
        )
        if abs(ei.value - base.value) > worst_farther + tol_eff:
            monotone = False
            break
    return StabilityReport(
        base_value=base.value,
        entries=entries,
        converged=converged,
        monotone_envelope_ok=monotone,
        tolerance=tol_eff,
    )
