import math

import numpy as np
import pytest

from ramulus import (
    ConeRay,
    DomainError,
    angle_between,
    branch_angles,
    cone_balance_residual,
)


def test_angle_between_examples():
    assert angle_between([1, 0], [0, 1]) == pytest.approx(math.pi / 2, abs=1e-12)
    assert angle_between([1, 0], [1, 0]) == pytest.approx(0.0, abs=1e-12)
    # arccos(1/sqrt(2)) evaluated numerically
    assert angle_between([1, 0], [1, 1]) == pytest.approx(math.acos(1 / math.sqrt(2)), abs=1e-12)


def test_angle_between_rejects_zero_vectors():
    with pytest.raises(DomainError):
        angle_between([0, 0], [1, 0])


def test_branch_angles_alpha_half_symmetric():
    t1, t2, t12 = branch_angles(1.0, 1.0, 0.5)
    # closed form: arccos(2^(2a-1) - 1) / 2 with a = 1/2 gives pi/4
    assert t1 == pytest.approx(math.pi / 4, abs=1e-9)
    assert t2 == pytest.approx(math.pi / 4, abs=1e-9)
    assert t12 == pytest.approx(math.pi / 2, abs=1e-9)


def test_branch_angles_alpha_zero_steiner():
    t1, t2, t12 = branch_angles(2.5, 2.5, 0.0)
    assert t1 == pytest.approx(math.pi / 3, abs=1e-9)
    assert t2 == pytest.approx(math.pi / 3, abs=1e-9)
    assert t12 == pytest.approx(2 * math.pi / 3, abs=1e-9)


def test_branch_angles_alpha_near_one_degenerates():
    t1, t2, _ = branch_angles(1.0, 1.0, 1.0 - 1e-12)
    assert t1 == pytest.approx(0.0, abs=1e-5)
    assert t2 == pytest.approx(0.0, abs=1e-5)


def test_branch_angles_symmetry_and_scale_invariance(rng):
    for _ in range(50):
        a1, a2 = rng.uniform(0.1, 5.0, size=2)
        alpha = float(rng.uniform(0.0, 0.95))
        lam = float(rng.uniform(0.1, 10.0))
        t1, t2, t12 = branch_angles(a1, a2, alpha)
        s1, s2, s12 = branch_angles(a2, a1, alpha)
        assert (t1, t2) == (s2, s1)  # swap is exact: the formulas mirror
        u1, u2, u12 = branch_angles(lam * a1, lam * a2, alpha)
        # only the mass fractions enter; scaling changes them by one rounding
        assert u1 == pytest.approx(t1, abs=1e-9)
        assert u2 == pytest.approx(t2, abs=1e-9)
        assert u12 == pytest.approx(t12, abs=1e-9)
        assert t12 == pytest.approx(t1 + t2, abs=1e-9)


def test_branch_angles_validates_inputs():
    with pytest.raises(DomainError):
        branch_angles(0.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        branch_angles(1.0, 1.0, 1.0)


def _unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def test_cone_balance_opposite_rays():
    rays = [ConeRay(_unit(0.3), -2.0), ConeRay(-_unit(0.3), 2.0)]
    m, d = cone_balance_residual(rays, 0.5)
    assert m == pytest.approx(0.0, abs=1e-15)
    assert np.linalg.norm(d) == pytest.approx(0.0, abs=1e-15)


def test_cone_balance_single_ray():
    m, d = cone_balance_residual([ConeRay(_unit(1.0), 1.0)], 0.7)
    assert m == pytest.approx(1.0)
    assert np.allclose(d, _unit(1.0))


def test_cone_balance_y_cone_from_branch_angles():
    # Trunk brings multiplicity 2 into the vertex; two unit branches leave at
    # the angles the closed form dictates.  Both residuals must vanish.
    alpha = 0.5
    t1, t2, _ = branch_angles(1.0, 1.0, alpha)
    trunk_dir = _unit(math.pi)  # toward the trunk endpoint
    rays = [
        ConeRay(_unit(t1), 1.0),
        ConeRay(_unit(-t2), 1.0),
        ConeRay(trunk_dir, -2.0),
    ]
    m, d = cone_balance_residual(rays, alpha)
    assert abs(m) <= 1e-9
    assert np.linalg.norm(d) <= 1e-9


def test_cone_balance_additive_in_rays(rng):
    for _ in range(20):
        k1, k2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        alpha = float(rng.uniform(0.1, 0.9))
        rays1 = [ConeRay(_unit(rng.uniform(0, 2 * math.pi)), rng.uniform(-2, 2) or 1.0) for _ in range(k1)]
        rays2 = [ConeRay(_unit(rng.uniform(0, 2 * math.pi)), rng.uniform(-2, 2) or 1.0) for _ in range(k2)]
        m1, d1 = cone_balance_residual(rays1, alpha)
        m2, d2 = cone_balance_residual(rays2, alpha)
        m, d = cone_balance_residual(rays1 + rays2, alpha)
        assert m == pytest.approx(m1 + m2, abs=1e-12)
        assert np.allclose(d, d1 + d2, atol=1e-12)


def test_cone_ray_validation():
    with pytest.raises(DomainError):
        ConeRay(np.array([1.0, 1.0]), 1.0)  # not unit
    with pytest.raises(DomainError):
        ConeRay(np.array([1.0, 0.0]), 0.0)  # zero multiplicity
