"""Convex placement of branch points for a fixed topology and fixed flows.

The objective is a weighted sum of Euclidean distances over the topology's
edges,

    F(x_1, ..., x_s) = sum_e |flow_e|^alpha * |pos(u_e) - pos(v_e)|,

with terminal positions fixed and Steiner positions free.  F is convex; we
minimize the smoothed surrogate sqrt(|.|^2 + eps^2) by iteratively
reweighted least squares (a majorize-minimize scheme whose inner step is a
small graph-Laplacian solve), driving eps from 1e-3 down to 1e-10 times the
terminal diameter.  If IRLS stalls before certification, a short Polyak
subgradient phase is attempted, always followed by one more IRLS solve so
that the returned Steiner positions are convex combinations of terminal
positions (hence inside their hull).

Optimality is certified a posteriori: for the smooth convex surrogate,
F_eps(x) - F_eps* <= |grad| * R with R bounding the distance to any
minimizer (all minimizers lie in the terminal hull), and the smoothing bias
is at most sum_e |flow_e|^alpha * eps.  The sum of the two is compared
against tol * (1 + |F|).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .topology import Topology

MERGE_REL = 1e-7  # vertices closer than this fraction of the diameter collapse

_EPS_STAGES = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10)


@dataclass(frozen=True)
class PlacementProblem:
    topology: Topology
    flows: np.ndarray
    terminal_positions: np.ndarray
    alpha: float

    def __post_init__(self):
        flows = np.asarray(self.flows, dtype=float)
        terms = np.asarray(self.terminal_positions, dtype=float)
        if flows.shape != (len(self.topology.adjacency),):
            raise DomainError("one flow per topology edge required")
        if terms.shape[0] != self.topology.n_terminals:
            raise DomainError("terminal count must match the topology")
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha!r}")
        object.__setattr__(self, "flows", flows)
        object.__setattr__(self, "terminal_positions", terms)


@dataclass
class PlacementResult:
    steiner_positions: np.ndarray
    value: float
    iterations: int
    converged: bool
    collapsed_pairs: list = field(default_factory=list)
    certificate: float = float("nan")


class _Workspace:
    """Edge bookkeeping shared by value, gradient and IRLS steps."""

    def __init__(self, problem: PlacementProblem):
        topo = problem.topology
        self.n = topo.n_terminals
        self.s = topo.steiner_count
        self.terms = problem.terminal_positions
        self.d = self.terms.shape[1]
        edges = []
        weights = []
        for (u, v), f in zip(topo.adjacency, problem.flows):
            if f == 0.0:
                continue  # |0|^alpha treated as 0, also for alpha = 0
            edges.append((u, v))
            weights.append(abs(f) ** problem.alpha)
        self.edges = np.array(edges, dtype=int) if edges else np.zeros((0, 2), dtype=int)
        self.w = np.array(weights)
        active = set()
        for u, v in self.edges:
            if u >= self.n:
                active.add(u - self.n)
            if v >= self.n:
                active.add(v - self.n)
        self.active = sorted(active)
        if len(self.terms) >= 2:
            diffs = self.terms[:, None, :] - self.terms[None, :, :]
            self.diam = float(np.max(np.linalg.norm(diffs, axis=2)))
        else:
            self.diam = 0.0

    def combined(self, X: np.ndarray) -> np.ndarray:
        return np.vstack([self.terms, X]) if self.s else self.terms

    def value(self, X: np.ndarray) -> float:
        if len(self.edges) == 0:
            return 0.0
        P = self.combined(X)
        seg = P[self.edges[:, 0]] - P[self.edges[:, 1]]
        return float(np.sum(self.w * np.linalg.norm(seg, axis=1)))

    def smoothed_value_grad(self, X: np.ndarray, eps: float):
        P = self.combined(X)
        grad = np.zeros((self.s, self.d))
        if len(self.edges) == 0:
            return 0.0, grad
        seg = P[self.edges[:, 0]] - P[self.edges[:, 1]]
        dist = np.sqrt(np.sum(seg * seg, axis=1) + eps * eps)
        val = float(np.sum(self.w * dist))
        coef = (self.w / dist)[:, None] * seg
        for k, (u, v) in enumerate(self.edges):
            if u >= self.n:
                grad[u - self.n] += coef[k]
            if v >= self.n:
                grad[v - self.n] -= coef[k]
        return val, grad

    def irls_solve(self, X: np.ndarray, eps: float) -> np.ndarray:
        """One majorize-minimize step: weighted-Laplacian solve at distances of X."""
        if self.s == 0 or len(self.edges) == 0:
            return X
        P = self.combined(X)
        seg = P[self.edges[:, 0]] - P[self.edges[:, 1]]
        dist = np.sqrt(np.sum(seg * seg, axis=1) + eps * eps)
        beta = self.w / dist
        return self._weighted_solve(beta, X)

    def _weighted_solve(self, beta: np.ndarray, fallback: np.ndarray) -> np.ndarray:
        L = np.zeros((self.s, self.s))
        rhs = np.zeros((self.s, self.d))
        for k, (u, v) in enumerate(self.edges):
            b = beta[k]
            su = u - self.n if u >= self.n else None
            sv = v - self.n if v >= self.n else None
            if su is not None:
                L[su, su] += b
            if sv is not None:
                L[sv, sv] += b
            if su is not None and sv is not None:
                L[su, sv] -= b
                L[sv, su] -= b
            elif su is not None:
                rhs[su] += b * self.terms[v]
            elif sv is not None:
                rhs[sv] += b * self.terms[u]
        X = np.array(fallback, dtype=float)
        if self.active:
            idx = np.array(self.active, dtype=int)
            sub = L[np.ix_(idx, idx)]
            try:
                X[idx] = np.linalg.solve(sub, rhs[idx])
            except np.linalg.LinAlgError:  # pragma: no cover - guarded by activity
                pass
        return X

    def initial_positions(self) -> np.ndarray:
        """Flow-weighted centroid of topology neighbors (one Laplacian solve)."""
        if self.s == 0:
            return np.zeros((0, self.d))
        base = np.tile(self.terms.mean(axis=0), (self.s, 1))
        if len(self.edges) == 0:
            return base
        return self._weighted_solve(self.w.copy(), base)


def placement_value(problem: PlacementProblem, steiner_positions) -> float:
    """F at the given Steiner positions (full alpha-mass of the embedding)."""
    ws = _Workspace(problem)
    X = np.asarray(steiner_positions, dtype=float).reshape(ws.s, ws.d) if ws.s else np.zeros((0, ws.d))
    return ws.value(X)


def smoothed_objective(problem: PlacementProblem, steiner_positions, eps: float):
    """Smoothed objective value and its analytic gradient at the Steiner block."""
    ws = _Workspace(problem)
    X = np.asarray(steiner_positions, dtype=float).reshape(ws.s, ws.d) if ws.s else np.zeros((0, ws.d))
    return ws.smoothed_value_grad(X, eps)


def minimize_placement(
    problem: PlacementProblem, tol: float = 1e-9, max_iter: int = 10000
) -> PlacementResult:
    ws = _Workspace(problem)
    scale = max(ws.diam, 1e-30)
    X = ws.initial_positions()
    iterations = 0

    if ws.s == 0 or len(ws.edges) == 0 or not ws.active:
        val = ws.value(X)
        return PlacementResult(X, val, 0, True, [], 0.0)

    radius = ws.diam * np.sqrt(len(ws.active))
    bias_unit = float(np.sum(ws.w))  # bias = bias_unit * eps

    def certificate(X, eps):
        _, g = ws.smoothed_value_grad(X, eps)
        return float(np.linalg.norm(g)) * radius + bias_unit * eps

    stage_budget = max(40, max_iter // (2 * len(_EPS_STAGES)))
    for stage in _EPS_STAGES:
        eps = stage * scale
        for _ in range(stage_budget):
            X_new = ws.irls_solve(X, eps)
            iterations += 1
            delta = float(np.max(np.abs(X_new - X))) if X.size else 0.0
            X = X_new
            if delta < 0.02 * eps:
                break
        if iterations >= max_iter:
            break

    value = ws.value(X)
    # The certificate cannot beat its smoothing-bias floor, so the final
    # smoothing level must leave tol * (1 + F) mostly to the gradient term.
    eps_final = min(
        _EPS_STAGES[-1] * scale,
        0.05 * tol * (1.0 + abs(value)) / max(bias_unit, 1e-30),
    )
    for _ in range(stage_budget):
        X_new = ws.irls_solve(X, eps_final)
        iterations += 1
        delta = float(np.max(np.abs(X_new - X))) if X.size else 0.0
        X = X_new
        if delta < 0.02 * eps_final or iterations >= max_iter:
            break
    value = ws.value(X)
    cert = certificate(X, eps_final)
    target = tol * (1.0 + abs(value))

    # Keep iterating at the final smoothing until certified, stalled, or out
    # of budget; near-degenerate collapses stop making progress long before
    # the gradient certificate can tighten, so a movement-based stall exit
    # matters more than the raw iteration cap.
    stall = 1e-15 * scale
    while cert > target and iterations < max_iter:
        X_new = ws.irls_solve(X, eps_final)
        iterations += 1
        moved = float(np.max(np.abs(X_new - X))) if X.size else 0.0
        X = X_new
        if moved < stall:
            break
        if iterations % 25 == 0 or iterations >= max_iter:
            cert = certificate(X, eps_final)
    value = ws.value(X)
    cert = certificate(X, eps_final)

    if cert > target and iterations < max_iter:
        X, extra = _polyak_phase(ws, X, eps_final, max_iter - iterations, cert)
        iterations += extra
        X = ws.irls_solve(X, eps_final)  # restores hull membership
        iterations += 1
        value = ws.value(X)
        cert = certificate(X, eps_final)

    collapsed = _collapsed_pairs(ws, X)
    return PlacementResult(X, value, iterations, cert <= target, collapsed, cert)


def _polyak_phase(ws: _Workspace, X, eps, budget, cert0):
    """Polyak subgradient steps on the smoothed objective with shrinking targets."""
    best_val, _ = ws.smoothed_value_grad(X, eps)
    best_X = X
    offset = cert0
    used = 0
    while used < budget and offset > 1e-17 * (1.0 + best_val):
        val, g = ws.smoothed_value_grad(best_X, eps)
        gn2 = float(np.sum(g * g))
        if gn2 == 0.0:
            break
        step = (val - (best_val - offset)) / gn2
        cand = best_X - step * g
        cand_val, _ = ws.smoothed_value_grad(cand, eps)
        used += 1
        if cand_val < best_val:
            best_val, best_X = cand_val, cand
        else:
            offset *= 0.5
    return best_X, used


def _collapsed_pairs(ws: _Workspace, X) -> list[tuple[int, int]]:
    threshold = MERGE_REL * max(ws.diam, 1e-30)
    pairs = []
    P = ws.combined(X)
    for i in range(ws.s):
        si = ws.n + i
        for j in range(si + 1, ws.n + ws.s):
            if np.linalg.norm(P[si] - P[j]) < threshold:
                pairs.append((si, j))
        for tj in range(ws.n):
            if np.linalg.norm(P[si] - P[tj]) < threshold:
                pairs.append((tj, si))
    return pairs


def realize_placement(terminals, adjacency, flows, result: PlacementResult):
    """Turn optimized Steiner positions into a consolidated polyhedral chain.

    Collapsed vertex pairs are merged (terminal positions always win over
    Steiner positions; two terminals are never merged), zero-length edges
    disappear, and the chain is refined when near-degenerate placement left
    a vertex on another edge's interior.
    """
    from .chains import PolyChain, refine_chain  # local import avoids a cycle
    from .errors import PreconditionError

    terminals = np.asarray(terminals, dtype=float)
    n = len(terminals)
    steiner = np.asarray(result.steiner_positions, dtype=float)
    s = len(steiner)
    positions = [terminals[i] for i in range(n)] + [steiner[i] for i in range(s)]

    parent = list(range(n + s))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in result.collapsed_pairs:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        if ri < n and rj < n:
            continue
        if rj < n:
            ri, rj = rj, ri
        parent[rj] = ri

    clusters: dict[int, list[int]] = {}
    for v in range(n + s):
        clusters.setdefault(find(v), []).append(v)
    final_pos = {}
    for root, members in clusters.items():
        if root < n:
            final_pos[root] = positions[root]
        else:
            final_pos[root] = np.mean([positions[m] for m in members], axis=0)

    segs = []
    for (u, v), f in zip(adjacency, flows):
        if f == 0.0:
            continue
        ru, rv = find(u), find(v)
        if ru == rv:
            continue
        if f > 0:
            segs.append((final_pos[ru], final_pos[rv], f))
        else:
            segs.append((final_pos[rv], final_pos[ru], -f))
    chain = PolyChain.from_segments(segs)
    try:
        chain.validate()
    except PreconditionError:
        chain = refine_chain(chain)
    return chain
