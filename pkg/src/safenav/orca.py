"""Truncated velocity obstacles and reciprocal-avoidance half-planes.

The velocity obstacle for a neighbor at relative position c with combined
radius R is the set of relative velocities whose ray reaches the disk
D(c, R) within the horizon tau.  Geometrically it is the cone from the origin
tangent to D(c, R), truncated by the disk D(c/tau, R/tau).  Observation
uncertainty enters only through an inflation of R, which keeps every velocity
obstacle consistent with the true neighbor position inside the inflated one.

Half-planes follow the convention a*vx + b*vy + c <= 0 for feasible
velocities, with (a, b) a unit vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class VOGeometry:
    """Relative position, combined disk radius, and time horizon of one VO."""

    rel_pos: np.ndarray
    combined_radius: float
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "rel_pos", np.asarray(self.rel_pos, dtype=float))
        if self.combined_radius <= 0.0:
            raise ValueError("combined_radius must be positive")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")

    @property
    def overlapping(self) -> bool:
        return float(np.hypot(*self.rel_pos)) <= self.combined_radius


@dataclass(frozen=True)
class HalfPlane:
    """Feasible velocities satisfy a*vx + b*vy + c <= 0, with (a, b) unit."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        norm = np.hypot(self.a, self.b)
        if norm == 0.0:
            raise ValueError("half-plane normal must be nonzero")
        object.__setattr__(self, "a", self.a / norm)
        object.__setattr__(self, "b", self.b / norm)
        object.__setattr__(self, "c", self.c / norm)

    def satisfied_by(self, v, tol: float = 0.0) -> bool:
        return self.a * v[0] + self.b * v[1] + self.c <= tol

    def signed_violation(self, v) -> float:
        """Positive when v is infeasible; distance to the boundary line."""
        return self.a * v[0] + self.b * v[1] + self.c


class DegenerateGeometry(ValueError):
    """Raised when the discs already overlap and the VO cone is undefined."""


def vo_contains(geom: VOGeometry, v_rel) -> bool:
    """True iff some t in [0, tau] places t*v_rel inside the combined disk."""
    c = geom.rel_pos
    v = np.asarray(v_rel, dtype=float)
    vv = float(v @ v)
    t_star = float(np.clip(c @ v / vv, 0.0, geom.tau)) if vv > 0.0 else 0.0
    closest = t_star * v - c
    return float(closest @ closest) <= geom.combined_radius ** 2


def nearest_boundary(geom: VOGeometry, v_rel) -> tuple[np.ndarray, np.ndarray]:
    """Minimum change u moving v_rel onto the VO boundary, with outward normal n.

    Candidates are the truncation arc and the two tangent legs; the closest
    one wins.  Valid for non-overlapping discs only.
    """
    if geom.overlapping:
        raise DegenerateGeometry(
            f"discs overlap: |rel_pos| = {np.hypot(*geom.rel_pos):.4f} "
            f"<= combined radius {geom.combined_radius:.4f}")

    c = geom.rel_pos
    R = geom.combined_radius
    tau = geom.tau
    v = np.asarray(v_rel, dtype=float)

    dist = float(np.hypot(*c))
    c_hat = c / dist
    leg_len = np.sqrt(dist * dist - R * R)
    cos_a = leg_len / dist
    sin_a = R / dist

    best_d2 = np.inf
    best_proj = None
    best_n = None

    # Truncation arc: circle of radius R/tau about c/tau, valid where the
    # radial direction faces the origin (w_hat . c_hat <= -R/dist).
    center = c / tau
    w = v - center
    w_norm = float(np.hypot(*w))
    w_hat = w / w_norm if w_norm > 0.0 else -c_hat
    if float(w_hat @ c_hat) <= -sin_a + 1e-12:
        proj = center + (R / tau) * w_hat
        d2 = float((proj - v) @ (proj - v))
        best_d2, best_proj, best_n = d2, proj, w_hat

    # Tangent legs: rays s * d for s >= leg_len / tau, d = c_hat rotated by
    # +/- the half-angle; outward normal is the perpendicular away from c.
    s_min = leg_len / tau
    for sign in (1.0, -1.0):
        d = np.array([c_hat[0] * cos_a - sign * c_hat[1] * sin_a,
                      sign * c_hat[0] * sin_a + c_hat[1] * cos_a])
        s = max(float(v @ d), s_min)
        proj = s * d
        d2 = float((proj - v) @ (proj - v))
        if d2 < best_d2:
            best_d2 = d2
            best_proj = proj
            best_n = np.array([-sign * d[1], sign * d[0]])

    return best_proj - v, best_n


def orca_halfplane(p_i, r_i: float, obs_pos, r_j: float, r_o: float,
                   v_opt_i, v_opt_j, tau: float, alpha_resp: float = 0.5,
                   dt: float = 0.1) -> HalfPlane:
    """Reciprocal-avoidance constraint for one neighbor, radius-inflated by r_o.

    The feasible set is {v : (v - (v_opt_i + alpha_resp * u)) . n >= 0} where
    u is the minimum relative-velocity change onto the inflated VO boundary.
    Overlapping discs fall back to a separating half-plane that pushes the
    ego velocity along the neighbor-to-ego line at penetration / dt.
    """
    if not 0.0 <= alpha_resp <= 1.0:
        raise ValueError(f"alpha_resp must be in [0, 1], got {alpha_resp}")
    p_i = np.asarray(p_i, dtype=float)
    obs_pos = np.asarray(obs_pos, dtype=float)
    v_opt_i = np.asarray(v_opt_i, dtype=float)
    v_opt_j = np.asarray(v_opt_j, dtype=float)

    rel = obs_pos - p_i
    radius = r_i + r_j + r_o
    dist = float(np.hypot(*rel))

    if dist <= radius:
        n = -rel / dist if dist > 0.0 else np.array([1.0, 0.0])
        u = ((radius - dist) / dt) * n
    else:
        geom = VOGeometry(rel_pos=rel, combined_radius=radius, tau=tau)
        u, n = nearest_boundary(geom, v_opt_i - v_opt_j)

    anchor = v_opt_i + alpha_resp * u
    return HalfPlane(a=-n[0], b=-n[1], c=float(n @ anchor))
