# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled rollout and cost kernel.

Same contract as the reference backend: K control sequences are rolled out
through the differential-drive update and scored against predicted neighbor
positions.  State updates and cost accumulation follow the reference order
term by term so both backends agree to floating-point noise.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fmod

cnp.import_array()

cdef double _PI = 3.141592653589793
cdef double _TWO_PI = 6.283185307179586
cdef double _VEL_EPS = 1e-3
cdef double _VEL_CAP = 1e3


cdef inline double _pymod(double a, double b) nogil:
    # Matches Python's % for b > 0: fmod result shifted into [0, b).
    cdef double r = fmod(a, b)
    if r != 0.0 and r < 0.0:
        r += b
    return r


cdef inline double _wrap(double theta) nogil:
    return -(_pymod(_PI - theta, _TWO_PI) - _PI)


def rollout_costs(double[::1] x0,
                  double[:, :, ::1] controls,
                  double[::1] goal,
                  double[::1] goal_proj,
                  double[:, :, ::1] nb_pos,
                  double[:, ::1] nb_buf,
                  double[::1] weights,
                  double comb_radius,
                  double d_th,
                  double goal_tol,
                  double dt):
    cdef Py_ssize_t K = controls.shape[0]
    cdef Py_ssize_t T = controls.shape[1]
    cdef Py_ssize_t J = nb_pos.shape[1]
    cdef double w_term = weights[0]
    cdef double w_goal = weights[1]
    cdef double w_dist = weights[2]
    cdef double w_col = weights[3]
    cdef double w_vel = weights[4]
    cdef double gx = goal[0]
    cdef double gy = goal[1]
    cdef double tx = goal_proj[0]
    cdef double ty = goal_proj[1]
    cdef double d_th2 = d_th * d_th
    cdef double x0x = x0[0]
    cdef double x0y = x0[1]
    cdef double x0t = x0[2]

    out = np.zeros(K)
    cdef double[::1] S = out

    cdef Py_ssize_t k, t, j
    cdef double px, py, th, v, w, dx, dy, d2, dmin2, hit, q_goal, q_dist
    cdef double q_col, q_vel, speed, s_acc
    cdef bint near_goal

    with nogil:
        for k in range(K):
            px = x0x
            py = x0y
            th = x0t
            s_acc = 0.0
            for t in range(T):
                v = controls[k, t, 0]
                w = controls[k, t, 1]
                px = px + dt * v * cos(th)
                py = py + dt * v * sin(th)
                th = _wrap(th + dt * w)

                dx = px - tx
                dy = py - ty
                q_goal = sqrt(dx * dx + dy * dy)
                dx = px - gx
                dy = py - gy
                near_goal = sqrt(dx * dx + dy * dy) < goal_tol

                q_dist = 0.0
                q_col = 0.0
                if J > 0:
                    dmin2 = 1e300
                    for j in range(J):
                        dx = px - nb_pos[t + 1, j, 0]
                        dy = py - nb_pos[t + 1, j, 1]
                        d2 = dx * dx + dy * dy
                        if d2 < dmin2:
                            dmin2 = d2
                        hit = comb_radius + nb_buf[t + 1, j]
                        if d2 < hit * hit:
                            q_col = 1.0
                    if dmin2 <= d_th2:
                        q_dist = 1.0 / (dmin2 if dmin2 > 1e-12 else 1e-12)

                speed = sqrt(v * v + w * w)
                if speed > _VEL_EPS:
                    q_vel = 1.0 / speed
                else:
                    q_vel = _VEL_CAP

                if near_goal:
                    s_acc = s_acc + w_goal * q_goal
                else:
                    s_acc = s_acc + w_goal * q_goal + \
                        (w_dist * q_dist + w_col * q_col + w_vel * q_vel)
            dx = px - tx
            dy = py - ty
            S[k] = s_acc + w_term * sqrt(dx * dx + dy * dy)
    return out
