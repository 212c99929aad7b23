import numpy as np
import pytest

from ramulus import (
    AtomicMeasure,
    Boundary,
    CapacityError,
    DomainError,
    solve_gilbert,
    uniqueness_probe,
)
from ramulus.chains import supports_close
from conftest import random_boundary


def boundary_of(atoms):
    return Boundary(AtomicMeasure(atoms))


def test_two_atom_segment():
    b = boundary_of([((0.0, 0.0), -1.0), ((3.0, 4.0), 1.0)])
    r = solve_gilbert(b, 0.5)
    assert r.value == pytest.approx(5.0, abs=1e-12)
    assert len(r.best.edges) == 1
    assert r.certificates.ok()


def test_three_collinear_covering_segment():
    b = boundary_of([((0.0, 0.0), -1.0), ((1.0, 0.0), -1.0), ((3.0, 0.0), 2.0)])
    r = solve_gilbert(b, 0.5)
    assert r.value == pytest.approx(1.0 + 2.0**0.5 * 2.0, abs=1e-9)
    assert r.certificates.ok()


def test_symmetric_y_junction():
    b = boundary_of([((0.0, 1.0), -1.0), ((0.0, -1.0), -1.0), ((2.0, 0.0), 2.0)])
    r = solve_gilbert(b, 0.5)
    assert r.value == pytest.approx(3.0 * 2.0**0.5, abs=1e-8)
    assert r.certificates.max_angle_deviation <= 1e-5
    assert r.certificates.max_cone_residual <= 1e-6
    assert r.certificates.branch_count == 1


def test_value_is_dilation_covariant(rng):
    b = random_boundary(rng, 4)
    base = solve_gilbert(b, 0.6)
    lam = 2.75
    scaled_atoms = [(lam * a.position, a.weight) for a in b.measure.atoms]
    scaled = solve_gilbert(boundary_of(scaled_atoms), 0.6)
    assert scaled.value == pytest.approx(lam * base.value, rel=1e-7)
    assert scaled.ranking[0][0] == base.ranking[0][0]


def test_value_is_weight_covariant(rng):
    b = random_boundary(rng, 4)
    alpha = 0.45
    base = solve_gilbert(b, alpha)
    lam = 3.2
    scaled_atoms = [(a.position, lam * a.weight) for a in b.measure.atoms]
    scaled = solve_gilbert(boundary_of(scaled_atoms), alpha)
    assert scaled.value == pytest.approx(lam**alpha * base.value, rel=1e-7)
    assert scaled.ranking[0][0] == base.ranking[0][0]


def test_best_is_below_direct_matching(rng):
    for _ in range(8):
        b = random_boundary(rng, int(rng.integers(2, 6)))
        r = solve_gilbert(b, 0.7)
        assert r.value <= r.certificates.direct_matching_value + 1e-9


def test_best_decomposes_without_cancellation(rng):
    for _ in range(6):
        b = random_boundary(rng, int(rng.integers(3, 6)))
        r = solve_gilbert(b, 0.5)
        paths = r.best.path_decomposition()
        total = sum(
            w
            * sum(
                np.linalg.norm(r.best.vertices[b_] - r.best.vertices[a_])
                for a_, b_ in zip(p[:-1], p[1:])
            )
            for p, w in paths
        )
        assert total == pytest.approx(r.best.mass(), rel=1e-9)


def test_ranking_is_sorted_and_gap_consistent(rng):
    b = random_boundary(rng, 4)
    r = solve_gilbert(b, 0.5)
    values = [v for _, v in r.ranking]
    assert values == sorted(values)
    assert r.value == pytest.approx(values[0], rel=1e-12)
    if len(values) > 1:
        assert r.gap == pytest.approx((values[1] - values[0]) / max(values[0], 1e-12))


def test_atom_cap_enforced(rng):
    b = random_boundary(rng, 6)
    with pytest.raises(CapacityError):
        solve_gilbert(b, 0.5, atom_cap=4)


def test_unbalanced_rejected():
    with pytest.raises(DomainError):
        solve_gilbert(AtomicMeasure([((0.0, 0.0), 1.0)]), 0.5)


def test_probe_two_atoms_unique():
    b = boundary_of([((0.0, 0.0), -1.0), ((1.0, 0.0), 1.0)])
    probe = uniqueness_probe(b, 0.5)
    assert not probe.ambiguous
    assert len(probe.networks) == 1


def test_probe_square_matchings_ambiguous():
    b = boundary_of(
        [((0.0, 0.0), -1.0), ((1.0, 1.0), -1.0), ((1.0, 0.0), 1.0), ((0.0, 1.0), 1.0)]
    )
    probe = uniqueness_probe(b, 0.5, gap_tol=1e-9)
    assert probe.ambiguous
    assert len(probe.networks) == 2
    tol = 1e-6
    assert not supports_close(probe.networks[0], probe.networks[1], tol)
    assert abs(probe.values[0] - probe.values[1]) <= 1e-9 * (1 + probe.values[0])


def test_probe_generic_unique(rng):
    b = random_boundary(rng, 4)
    probe = uniqueness_probe(b, 0.5, gap_tol=1e-6)
    assert not probe.ambiguous
    assert probe.gap > 1e-3


def test_solve_result_serializes(rng):
    b = random_boundary(rng, 3)
    r = solve_gilbert(b, 0.5)
    obj = r.to_obj()
    assert {"vertices", "edges", "value", "gap", "ranking", "certificates"} <= set(obj)
