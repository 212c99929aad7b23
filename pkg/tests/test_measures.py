import json

import numpy as np
import pytest

from ramulus import Atom, AtomicMeasure, Boundary, DomainError, flat_norm_0, jordan, mass
from conftest import flat_norm_bruteforce, random_boundary


def test_mass_examples():
    assert mass(AtomicMeasure()) == 0.0
    m = AtomicMeasure([((0.0, 0.0), 1.0), ((1.0, 0.0), -1.0)])
    assert mass(m) == 2.0
    m = AtomicMeasure([((0.0, 0.0), 3.0), ((1.0, 0.0), -3.0)])
    assert mass(m) == 6.0


def test_consolidation_merges_and_drops():
    m = AtomicMeasure([((0.0, 0.0), 2.0), ((0.0, 0.0), -3.0), ((1.0, 1.0), 5.0), ((1.0, 1.0), -5.0)])
    assert len(m) == 1
    assert m.atoms[0].weight == -1.0


def test_jordan_examples():
    m = AtomicMeasure([((0.0,), 1.0), ((1.0,), -1.0)])
    pos, neg = jordan(m)
    assert [a.weight for a in pos.atoms] == [1.0]
    assert [a.weight for a in neg.atoms] == [1.0]
    assert mass(m) == mass(pos) + mass(neg)

    pos, neg = jordan(AtomicMeasure([((0.0,), 2.0), ((1.0,), 1.0)]))
    assert len(neg) == 0 and len(pos) == 2

    # consolidation happens before the split
    pos, neg = jordan(AtomicMeasure([((0.0,), 2.0), ((0.0,), -3.0)]))
    assert len(pos) == 0
    assert [a.weight for a in neg.atoms] == [1.0]


def test_boundary_requires_balance():
    with pytest.raises(DomainError):
        Boundary(AtomicMeasure([((0.0,), 1.0)]))
    Boundary(AtomicMeasure([((0.0,), 1.0), ((1.0,), -1.0)]))  # fine


def test_atom_rejects_zero_weight():
    with pytest.raises(DomainError):
        Atom(np.array([0.0]), 0.0)


def test_flat_norm_zero_and_two_atom():
    assert flat_norm_0(AtomicMeasure()) == 0.0
    for dist in (0.25, 1.0, 1.9, 2.0, 2.5, 7.0):
        m = AtomicMeasure([((0.0, 0.0), 1.0), ((dist, 0.0), -1.0)])
        assert flat_norm_0(m) == pytest.approx(min(dist, 2.0), abs=1e-9)
    # doubled weights scale both strategies
    m = AtomicMeasure([((0.0, 0.0), 2.0), ((3.0, 0.0), -2.0)])
    assert flat_norm_0(m) == pytest.approx(2 * min(3.0, 2.0), abs=1e-9)


def test_flat_norm_unbalanced_measure_pays_unit_cost():
    m = AtomicMeasure([((0.0, 0.0), 1.5)])
    assert flat_norm_0(m) == pytest.approx(1.5, abs=1e-9)


def test_flat_norm_matches_bruteforce(rng):
    for _ in range(40):
        n_pos = int(rng.integers(1, 4))
        n_neg = int(rng.integers(1, 4))
        atoms = [(rng.uniform(0, 3, size=2), float(rng.uniform(0.2, 2.0))) for _ in range(n_pos)]
        atoms += [(rng.uniform(0, 3, size=2), -float(rng.uniform(0.2, 2.0))) for _ in range(n_neg)]
        m = AtomicMeasure(atoms)
        assert flat_norm_0(m) == pytest.approx(flat_norm_bruteforce(m), abs=1e-9)


def test_flat_norm_is_a_norm(rng):
    for _ in range(25):
        b1 = random_boundary(rng, int(rng.integers(2, 5))).measure
        b2 = random_boundary(rng, int(rng.integers(2, 5))).measure
        f1, f2 = flat_norm_0(b1), flat_norm_0(b2)
        assert f1 >= 0.0
        lam = float(rng.uniform(0.2, 3.0))
        assert flat_norm_0(lam * b1) == pytest.approx(lam * f1, rel=1e-8, abs=1e-9)
        assert flat_norm_0(b1 + b2) <= f1 + f2 + 1e-9
        assert f1 <= b1.mass() + 1e-12


def test_flat_norm_zero_iff_zero_measure(rng):
    b = random_boundary(rng, 3).measure
    assert flat_norm_0(b) > 1e-6
    assert flat_norm_0(b - b) == pytest.approx(0.0, abs=1e-12)


def test_flat_norm_small_diameter_is_full_transport(rng):
    # With support diameter < 2 discarding never pays, so the flat norm is
    # the optimal full-transport cost; check against the no-discard oracle.
    for _ in range(15):
        n = int(rng.integers(1, 4))
        pos = [(rng.uniform(0, 0.6, size=2), float(rng.uniform(0.2, 1.0))) for _ in range(n)]
        total = sum(w for _, w in pos)
        neg_raw = rng.uniform(0.2, 1.0, size=n)
        neg_raw *= total / neg_raw.sum()
        neg = [(rng.uniform(0, 0.6, size=2), -float(w)) for w in neg_raw]
        m = AtomicMeasure(pos + neg)
        assert flat_norm_0(m) == pytest.approx(
            flat_norm_bruteforce(m, discard=False), abs=1e-9
        )


def test_json_round_trip_is_byte_stable():
    m = AtomicMeasure([((1.0, 0.5), -2.0), ((0.0, 0.25), 2.0)])
    text = m.to_json()
    again = AtomicMeasure.from_json(text)
    assert again == m
    assert again.to_json() == text
    # atoms are sorted by lexicographic position
    obj = json.loads(text)
    assert obj["atoms"][0]["x"] == [0.0, 0.25]


def test_measure_arithmetic():
    a = AtomicMeasure([((0.0,), 1.0)])
    b = AtomicMeasure([((0.0,), 1.0), ((2.0,), 1.0)])
    assert (b - a) == AtomicMeasure([((2.0,), 1.0)])
    assert (2.0 * a).atoms[0].weight == 2.0
