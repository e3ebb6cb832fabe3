"""Velocity-obstacle geometry, boundary projection, and reciprocal half-planes.

The projection oracle sweeps a dense, independently derived parameterization
of the obstacle boundary (tangent rays plus the truncation circle filtered by
a local interior test), so it shares no code path with nearest_boundary.
"""

import numpy as np
import pytest

from _oracles import boundary_cloud as _boundary_cloud
from _oracles import min_pair_distance, project_onto
from safenav.orca import (DegenerateGeometry, HalfPlane, VOGeometry,
                          nearest_boundary, orca_halfplane, vo_contains)


def test_vo_geometry_validation():
    with pytest.raises(ValueError):
        VOGeometry(rel_pos=[1.0, 0.0], combined_radius=0.0, tau=1.0)
    with pytest.raises(ValueError):
        VOGeometry(rel_pos=[1.0, 0.0], combined_radius=0.5, tau=0.0)
    assert VOGeometry(rel_pos=[0.4, 0.0], combined_radius=0.5, tau=1.0).overlapping
    assert not VOGeometry(rel_pos=[2.0, 0.0], combined_radius=0.5, tau=1.0).overlapping


def test_vo_contains_head_on_window():
    # Collision window along (1.5, 0) is t in [1.4/1.5, 2.6/1.5], inside tau.
    geom = VOGeometry(rel_pos=[2.0, 0.0], combined_radius=0.6, tau=2.0)
    assert vo_contains(geom, [1.5, 0.0])
    # Slower approach reaches the disk only after tau.
    assert not vo_contains(geom, [0.6, 0.0])
    # 45 degrees is far outside the tangent half-angle asin(0.3).
    assert not vo_contains(geom, [1.5, 1.5])
    assert not vo_contains(geom, [0.0, 0.0])


def test_vo_contains_tau_truncation():
    geom_short = VOGeometry(rel_pos=[2.0, 0.0], combined_radius=0.6, tau=1.0)
    geom_long = VOGeometry(rel_pos=[2.0, 0.0], combined_radius=0.6, tau=4.0)
    assert not vo_contains(geom_short, [1.0, 0.0])
    assert vo_contains(geom_long, [1.0, 0.0])


def test_nearest_boundary_rejects_overlap():
    geom = VOGeometry(rel_pos=[0.4, 0.0], combined_radius=0.6, tau=2.0)
    with pytest.raises(DegenerateGeometry):
        nearest_boundary(geom, [1.0, 0.0])


def test_nearest_boundary_head_on_grazing():
    # Head-on closing at 2 m/s on a disk of radius 0.6 at 4 m: the projection
    # lands on a tangent leg at distance |v| sin(half-angle) = 2 * 0.15 = 0.3.
    geom = VOGeometry(rel_pos=[4.0, 0.0], combined_radius=0.6, tau=4.0)
    u, n = nearest_boundary(geom, [2.0, 0.0])
    assert float(np.hypot(*u)) == pytest.approx(0.3, abs=1e-12)
    assert float(np.hypot(*n)) == pytest.approx(1.0, abs=1e-12)
    # Stepping along the outward normal exits the set, against it enters.
    v_b = np.array([2.0, 0.0]) + u
    assert not vo_contains(geom, v_b + 1e-4 * n)
    assert vo_contains(geom, v_b - 1e-4 * n)


def test_nearest_boundary_matches_boundary_sweep():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 100:
        R = rng.uniform(0.2, 1.0)
        dist = rng.uniform(R + 0.05, 6.0)
        ang = rng.uniform(-np.pi, np.pi)
        geom = VOGeometry(
            rel_pos=dist * np.array([np.cos(ang), np.sin(ang)]),
            combined_radius=R, tau=rng.uniform(1.0, 5.0))
        v = rng.uniform(-2.0, 2.0, size=2)
        u, n = nearest_boundary(geom, v)
        cloud = _boundary_cloud(geom, extent=np.hypot(*v) + dist + 5.0)
        oracle = float(np.min(np.hypot(cloud[:, 0] - v[0], cloud[:, 1] - v[1])))
        assert float(np.hypot(*u)) == pytest.approx(oracle, abs=2e-3)
        # The returned point itself lies on the swept boundary.
        vb = v + u
        assert float(np.min(np.hypot(cloud[:, 0] - vb[0],
                                     cloud[:, 1] - vb[1]))) < 2e-3
        checked += 1


def test_halfplane_normalization_and_violation():
    hp = HalfPlane(a=3.0, b=4.0, c=10.0)
    assert np.hypot(hp.a, hp.b) == pytest.approx(1.0)
    assert hp.c == pytest.approx(2.0)
    assert hp.satisfied_by([-4.0, 0.5])
    assert not hp.satisfied_by([0.0, 0.0])
    assert hp.signed_violation([0.0, 0.0]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        HalfPlane(a=0.0, b=0.0, c=1.0)


def test_orca_halfplane_head_on_geometry():
    # Two 0.3 m discs, 4 m apart, driving at each other at 1 m/s each.
    # Independent construction: tangent direction at half-angle asin(0.15),
    # grazing projection of v_rel = (2, 0), responsibility split one half.
    hp = orca_halfplane([0.0, 0.0], 0.3, [4.0, 0.0], 0.3, 0.0,
                        [1.0, 0.0], [-1.0, 0.0], tau=4.0)
    sin_a = 0.15
    cos_a = np.sqrt(1.0 - sin_a**2)
    assert abs(hp.a) == pytest.approx(sin_a, abs=1e-12)
    assert abs(hp.b) == pytest.approx(cos_a, abs=1e-12)
    assert abs(hp.c) < 1e-9
    # Going straight on violates the constraint by sin_a (in m/s).
    assert hp.signed_violation([1.0, 0.0]) == pytest.approx(0.15, abs=1e-9)
    # Enough lateral velocity restores feasibility.
    v_dodge = np.array([1.0, -np.sign(hp.b) * 0.3])
    assert hp.satisfied_by(v_dodge, tol=1e-12)


def test_orca_halfplane_reciprocal_symmetry():
    # The two agents' constraints split the same maneuver: their anchors
    # differ from the optimization velocities by opposite half-corrections.
    p_i, p_j = np.array([0.0, 0.0]), np.array([3.0, 1.0])
    v_i, v_j = np.array([0.8, 0.1]), np.array([-0.6, 0.2])
    hp_i = orca_halfplane(p_i, 0.3, p_j, 0.3, 0.0, v_i, v_j, tau=3.0)
    hp_j = orca_halfplane(p_j, 0.3, p_i, 0.3, 0.0, v_j, v_i, tau=3.0)
    # Normals are opposite.
    assert hp_i.a == pytest.approx(-hp_j.a, abs=1e-12)
    assert hp_i.b == pytest.approx(-hp_j.b, abs=1e-12)
    # Violations of the current optimization velocities are equal.
    assert hp_i.signed_violation(v_i) == pytest.approx(
        hp_j.signed_violation(v_j), abs=1e-12)


def test_orca_halfplane_overlap_fallback_pushes_apart():
    hp = orca_halfplane([0.0, 0.0], 0.3, [0.5, 0.0], 0.3, 0.0,
                        [0.0, 0.0], [0.0, 0.0], tau=2.0, dt=0.1)
    # Penetration 0.1 m over dt = 0.1 s demands 0.5 m/s retreat speed.
    assert hp.satisfied_by([-0.5, 0.0], tol=1e-9)
    assert not hp.satisfied_by([-0.4, 0.0])
    assert not hp.satisfied_by([0.0, 0.0])


def test_orca_halfplane_inflation_tightens():
    args = ([0.0, 0.0], 0.3, [4.0, 0.0], 0.3)
    rest = ([1.0, 0.0], [-1.0, 0.0])
    lean = orca_halfplane(*args, 0.0, *rest, tau=4.0)
    fat = orca_halfplane(*args, 0.3462, *rest, tau=4.0)
    assert fat.signed_violation([1.0, 0.0]) > lean.signed_violation([1.0, 0.0])


def test_orca_halfplane_alpha_validation():
    with pytest.raises(ValueError):
        orca_halfplane([0.0, 0.0], 0.3, [4.0, 0.0], 0.3, 0.0,
                       [1.0, 0.0], [-1.0, 0.0], tau=4.0, alpha_resp=1.5)


def test_reciprocal_pairs_clear_within_tau():
    """Both agents picking feasible velocities stay apart for the horizon.

    Closed-form minimum of the pairwise distance under constant velocities;
    grazing contact at exactly the combined radius counts as clear.
    """
    rng = np.random.default_rng(7)
    r = 0.3
    tau = 2.5
    for _ in range(1000):
        dist = rng.uniform(2 * r + 0.05, 6.0)
        ang = rng.uniform(-np.pi, np.pi)
        p_i = rng.uniform(-1.0, 1.0, size=2)
        p_j = p_i + dist * np.array([np.cos(ang), np.sin(ang)])
        v_i, v_j = rng.uniform(-1.5, 1.5, size=(2, 2))
        hp_i = orca_halfplane(p_i, r, p_j, r, 0.0, v_i, v_j, tau=tau)
        hp_j = orca_halfplane(p_j, r, p_i, r, 0.0, v_j, v_i, tau=tau)
        new_i = project_onto(hp_i, rng.uniform(-1.5, 1.5, size=2))
        new_j = project_onto(hp_j, rng.uniform(-1.5, 1.5, size=2))

        assert min_pair_distance(p_i, p_j, new_i, new_j, tau) >= 2 * r - 1e-7
