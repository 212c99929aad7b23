"""Signed atomic measures (0-currents) and the flat norm on them.

An :class:`AtomicMeasure` is a finite list of weighted points, consolidated
so that positions are pairwise distinct (equal positions are merged by
summing weights, and exact zeros are dropped).  A :class:`Boundary` is an
atomic measure with zero total weight, i.e. a difference of two equal-mass
positive measures.

The flat norm of an atomic boundary reduces to a partial-transport problem:
each unit of mass is either matched across the two Jordan parts at cost
equal to the distance travelled, or discarded at unit cost.  Any 1-current
filling of an atomic 0-current can be replaced by segments between paired
atoms without increasing its mass, with the unmatched remainder paying unit
cost, so the reduction is exact; see docs/notes.md for the argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DomainError
from .geometry import as_point

# Relative slack on the zero-total-weight invariant of a Boundary.
BALANCE_RTOL = 1e-12


@dataclass(frozen=True)
class Atom:
    position: np.ndarray
    weight: float

    def __post_init__(self):
        p = as_point(self.position)
        if self.weight == 0:
            raise DomainError("atom weight must be nonzero")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def key(self) -> tuple:
        return tuple(self.position.tolist())


class AtomicMeasure:
    """Finite signed atomic measure with consolidated support."""

    def __init__(self, atoms=()):
        table: dict[tuple, float] = {}
        dim = None
        for a in atoms:
            if not isinstance(a, Atom):
                a = Atom(*a)
            if dim is None:
                dim = a.position.size
            elif a.position.size != dim:
                raise DomainError("all atoms must share one ambient dimension")
            key = a.key
            table[key] = table.get(key, 0.0) + a.weight
        self._atoms = tuple(
            Atom(np.array(k), w) for k, w in sorted(table.items()) if w != 0.0
        )
        self._dim = dim if self._atoms else (dim or 0)

    @property
    def atoms(self) -> tuple[Atom, ...]:
        return self._atoms

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._atoms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return [(a.key, a.weight) for a in self._atoms] == [
            (a.key, a.weight) for a in other._atoms
        ]

    def __hash__(self):
        return hash(tuple((a.key, a.weight) for a in self._atoms))

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return AtomicMeasure(self._atoms + other._atoms)

    def __sub__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "AtomicMeasure":
        s = float(scalar)
        if s == 0.0:
            return AtomicMeasure()
        return AtomicMeasure(Atom(a.position, s * a.weight) for a in self._atoms)

    __rmul__ = __mul__

    def mass(self) -> float:
        return float(sum(abs(a.weight) for a in self._atoms))

    def total_weight(self) -> float:
        return float(sum(a.weight for a in self._atoms))

    def jordan(self) -> tuple["AtomicMeasure", "AtomicMeasure"]:
        """Positive and negative parts; both returned with positive weights."""
        pos = AtomicMeasure(a for a in self._atoms if a.weight > 0)
        neg = AtomicMeasure(Atom(a.position, -a.weight) for a in self._atoms if a.weight < 0)
        return pos, neg

    def positions(self) -> np.ndarray:
        if not self._atoms:
            return np.zeros((0, self._dim))
        return np.array([a.position for a in self._atoms])

    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self._atoms])

    # -- JSON ---------------------------------------------------------------

    def to_obj(self) -> dict:
        return {"atoms": [{"w": a.weight, "x": a.position.tolist()} for a in self._atoms]}

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), sort_keys=True)

    @classmethod
    def from_obj(cls, obj: dict) -> "AtomicMeasure":
        try:
            atoms = [Atom(np.asarray(e["x"], dtype=float), float(e["w"])) for e in obj["atoms"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed measure object: {exc}") from exc
        return cls(atoms)

    @classmethod
    def from_json(cls, text: str) -> "AtomicMeasure":
        return cls.from_obj(json.loads(text))


class Boundary:
    """Atomic measure with zero total weight (a difference of equal masses)."""

    def __init__(self, measure: AtomicMeasure):
        total = measure.total_weight()
        scale = measure.mass()
        if abs(total) > BALANCE_RTOL * max(scale, 1.0):
            raise DomainError(
                f"boundary must have zero total weight, got {total!r} (mass {scale!r})"
            )
        self.measure = measure

    @property
    def atoms(self):
        return self.measure.atoms

    @property
    def dim(self):
        return self.measure.dim

    def mass(self) -> float:
        return self.measure.mass()

    def jordan(self):
        return self.measure.jordan()


def as_measure(b) -> AtomicMeasure:
    if isinstance(b, Boundary):
        return b.measure
    if isinstance(b, AtomicMeasure):
        return b
    raise DomainError(f"expected AtomicMeasure or Boundary, got {type(b).__name__}")


def mass(m) -> float:
    return as_measure(m).mass()


def jordan(m) -> tuple[AtomicMeasure, AtomicMeasure]:
    return as_measure(m).jordan()


def flat_norm_0(b) -> float:
    """Flat norm of an atomic 0-current via the partial-transport program.

    Minimizes  sum_ij gamma_ij |x_i - y_j| + (mass(mu+) - |gamma|) +
    (mass(mu-) - |gamma|)  over partial transport plans gamma between the
    Jordan parts.  Net unmatched mass pays unit cost, so the function is also
    defined for unbalanced measures.
    """
    m = as_measure(b)
    pos, neg = m.jordan()
    np_, nn = len(pos), len(neg)
    if np_ == 0 and nn == 0:
        return 0.0
    if np_ == 0 or nn == 0:
        return m.mass()
    P = pos.positions()
    a = pos.weights()
    Q = neg.positions()
    c = neg.weights()
    dist = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)

    # Variables: gamma (np_*nn), discard_pos (np_), discard_neg (nn).
    n_gamma = np_ * nn
    cost = np.concatenate([dist.ravel(), np.ones(np_), np.ones(nn)])
    a_eq = np.zeros((np_ + nn, n_gamma + np_ + nn))
    for i in range(np_):
        a_eq[i, i * nn : (i + 1) * nn] = 1.0
        a_eq[i, n_gamma + i] = 1.0
    for j in range(nn):
        a_eq[np_ + j, j : n_gamma : nn] = 1.0
        a_eq[np_ + j, n_gamma + np_ + j] = 1.0
    b_eq = np.concatenate([a, c])
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:  # pragma: no cover - tiny LPs do not fail in practice
        raise RuntimeError(f"flat norm LP failed: {res.message}")
    return float(res.fun)
