"""Vectorized rollout and cost kernel (reference backend).

Evaluates K candidate control sequences for one differential-drive agent
against predicted neighbor positions.  The compiled backend implements the
same contract with explicit loops; both advance states and accumulate costs
in the same order so results agree to floating-point noise.
"""

from __future__ import annotations

import numpy as np

_TWO_PI = 2.0 * np.pi
_VEL_EPS = 1e-3
_VEL_CAP = 1e3


def _wrap(theta):
    return -((np.pi - theta) % _TWO_PI - np.pi)


def rollout_states(x0, controls, dt):
    """States (K, T+1, 3) reached by each control sequence (K, T, 2)."""
    controls = np.asarray(controls, dtype=float)
    K, T, _ = controls.shape
    out = np.empty((K, T + 1, 3))
    out[:, 0, :] = np.asarray(x0, dtype=float)
    px = out[:, 0, 0].copy()
    py = out[:, 0, 1].copy()
    th = out[:, 0, 2].copy()
    for t in range(T):
        v = controls[:, t, 0]
        w = controls[:, t, 1]
        px = px + dt * v * np.cos(th)
        py = py + dt * v * np.sin(th)
        th = _wrap(th + dt * w)
        out[:, t + 1, 0] = px
        out[:, t + 1, 1] = py
        out[:, t + 1, 2] = th
    return out


def rollout_costs(x0, controls, goal, goal_proj, nb_pos, nb_buf, weights,
                  comb_radius, d_th, goal_tol, dt):
    """Trajectory cost S (K,) for each control sequence.

    Per step t the running cost is evaluated at the successor state using
    neighbor predictions nb_pos[t + 1]: an attraction term toward the
    projected goal, an inverse-square proximity term inside d_th, a collision
    indicator against comb_radius + nb_buf, and an inverse-speed term.  All
    but the attraction terms are dropped once a sample is within goal_tol of
    the true goal.  The terminal state adds a separately weighted attraction
    term.
    """
    controls = np.asarray(controls, dtype=float)
    K, T, _ = controls.shape
    w_term, w_goal, w_dist, w_col, w_vel = (float(w) for w in weights)
    nb_pos = np.asarray(nb_pos, dtype=float)
    nb_buf = np.asarray(nb_buf, dtype=float)
    J = nb_pos.shape[1]

    px = np.full(K, float(x0[0]))
    py = np.full(K, float(x0[1]))
    th = np.full(K, float(x0[2]))
    S = np.zeros(K)
    gx, gy = float(goal[0]), float(goal[1])
    tx, ty = float(goal_proj[0]), float(goal_proj[1])
    d_th2 = d_th * d_th

    for t in range(T):
        v = controls[:, t, 0]
        w = controls[:, t, 1]
        px = px + dt * v * np.cos(th)
        py = py + dt * v * np.sin(th)
        th = _wrap(th + dt * w)

        q_goal = np.hypot(px - tx, py - ty)
        near_goal = np.hypot(px - gx, py - gy) < goal_tol

        if J:
            dx = px[:, None] - nb_pos[t + 1, :, 0][None, :]
            dy = py[:, None] - nb_pos[t + 1, :, 1][None, :]
            d2 = dx * dx + dy * dy
            dmin2 = d2.min(axis=1)
            q_dist = np.where(dmin2 <= d_th2, 1.0 / np.maximum(dmin2, 1e-12), 0.0)
            hit = comb_radius + nb_buf[t + 1, :][None, :]
            q_col = (d2 < hit * hit).any(axis=1).astype(float)
        else:
            q_dist = np.zeros(K)
            q_col = np.zeros(K)

        speed = np.hypot(v, w)
        q_vel = np.where(speed > _VEL_EPS, 1.0 / np.maximum(speed, _VEL_EPS), _VEL_CAP)

        live = ~near_goal
        S = S + w_goal * q_goal + live * (w_dist * q_dist + w_col * q_col + w_vel * q_vel)

    S = S + w_term * np.hypot(px - tx, py - ty)
    return S
