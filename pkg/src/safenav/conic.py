"""Small dense solver for the sampling-distribution adjustment programs.

Programs have a linear objective over a short decision vector, linear
inequality rows, and second-order-cone rows of the form

    gain * || coeffs o s(x) ||_2 + row . x <= rhs

where s(x) is the designated standard-deviation block of x.  Problems here
have a few dozen rows at most, so the implementation favors determinism and
robustness over asymptotics: a two-phase tableau simplex with Bland's rule
for the LP path, and a log-barrier Newton method for the general cone path.
Cone rows whose coefficient vector has a single nonzero entry (and a
nonnegative variable underneath) reduce exactly to linear rows, which is the
fast path the production constraint shapes always hit.

Infeasible programs can be retried with one shared nonnegative slack on the
rows marked relaxable, charged at a large penalty; the slack magnitude is
reported so callers can flag degraded steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LINEAR_FEAS_TOL = 1e-8
CONE_FEAS_TOL = 1e-5
SLACK_TOL = 1e-7
_PIVOT_TOL = 1e-9
_PENALTY_FACTOR = 1e3


@dataclass(frozen=True)
class LinearRow:
    """row . x <= rhs."""

    row: np.ndarray
    rhs: float
    relaxable: bool = False


@dataclass(frozen=True)
class ConeRow:
    """gain * ||coeffs o s(x)||_2 + row . x <= rhs, gain >= 0."""

    gain: float
    coeffs: np.ndarray
    row: np.ndarray
    rhs: float
    relaxable: bool = False

    def __post_init__(self):
        if self.gain < 0.0:
            raise ValueError(f"cone gain must be >= 0, got {self.gain}")


@dataclass(frozen=True)
class ConicProgram:
    objective: np.ndarray
    linear_rows: list[LinearRow] = field(default_factory=list)
    cone_rows: list[ConeRow] = field(default_factory=list)
    bounds: tuple[np.ndarray, np.ndarray] | None = None
    stddev_index: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "stddev_index", np.asarray(self.stddev_index, dtype=int))
        if self.bounds is None:
            d = c.shape[0]
            object.__setattr__(self, "bounds", (np.full(d, -np.inf), np.full(d, np.inf)))

    @property
    def dim(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class SolveReport:
    x: np.ndarray
    status: str  # optimal | infeasible | relaxed
    max_violation: float
    slack_used: float

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "relaxed")


class UnboundedProgram(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Dense two-phase simplex with Bland's rule.


def _simplex_core(c, A, b):
    """min c.x  s.t. A x <= b, x >= 0.  Returns (x, 'optimal'|'infeasible')."""
    m, n = A.shape
    neg = b < 0.0
    n_art = int(neg.sum())

    # Columns: original n, slacks m, artificials for negative-rhs rows.
    T = np.zeros((m, n + m + n_art + 1))
    T[:, :n] = A
    T[:, n:n + m] = np.eye(m)
    T[:, -1] = b
    T[neg, :] *= -1.0

    basis = np.empty(m, dtype=int)
    art_cols = []
    k = 0
    for i in range(m):
        if neg[i]:
            col = n + m + k
            T[i, col] = 1.0
            basis[i] = col
            art_cols.append(col)
            k += 1
        else:
            basis[i] = n + i

    def pivot(tab, row, col):
        tab[row, :] /= tab[row, col]
        for r in range(tab.shape[0]):
            if r != row and tab[r, col] != 0.0:
                tab[r, :] -= tab[r, col] * tab[row, :]

    def run_phase(tab, cost, max_iter=20_000):
        # cost: reduced-cost row appended last; Bland's rule throughout.
        z = cost.copy()
        for i, bi in enumerate(basis):
            if z[bi] != 0.0:
                z -= z[bi] * tab[i, :]
        full = np.vstack([tab, z])
        for _ in range(max_iter):
            # Smallest improving column that admits a pivot; columns that are
            # numerically all-nonpositive are skipped unless their reduced
            # cost is decisive, which is a genuine unbounded ray.
            enter = -1
            ratios_row = -1
            blocked = 0.0
            for j in range(full.shape[1] - 1):
                if full[-1, j] >= -_PIVOT_TOL:
                    continue
                row_pick = -1
                best = np.inf
                for i in range(m):
                    a = full[i, j]
                    if a > _PIVOT_TOL:
                        r = full[i, -1] / a
                        if r < best - 1e-12 or (abs(r - best) <= 1e-12 and
                                                (row_pick < 0 or basis[i] < basis[row_pick])):
                            best = r
                            row_pick = i
                if row_pick >= 0:
                    enter = j
                    ratios_row = row_pick
                    break
                blocked = min(blocked, full[-1, j])
            if enter < 0:
                if blocked < -1e-6:
                    raise UnboundedProgram("LP is unbounded along an entering column")
                return full, "optimal"
            pivot(full, ratios_row, enter)
            basis[ratios_row] = enter
        return full, "stalled"

    if n_art:
        cost1 = np.zeros(T.shape[1])
        for col in art_cols:
            cost1[col] = 1.0
        full, _ = run_phase(T, cost1)
        # The tableau keeps the negated objective in the corner cell.
        if full[-1, -1] < -1e-7:
            return None, "infeasible"
        T = full[:-1, :]
        # Drive any lingering artificial out of the basis.
        for i in range(m):
            if basis[i] in art_cols:
                for j in range(n + m):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        T[i, :] /= T[i, j]
                        for r in range(m):
                            if r != i and T[r, j] != 0.0:
                                T[r, :] -= T[r, j] * T[i, :]
                        basis[i] = j
                        break
        T[:, art_cols] = 0.0

    cost2 = np.zeros(T.shape[1])
    cost2[:n] = c
    full, phase_status = run_phase(T, cost2)
    if phase_status != "optimal":
        raise RuntimeError("simplex did not converge within the pivot budget")
    x = np.zeros(T.shape[1] - 1)
    x[basis] = full[:m, -1]
    return x[:n], "optimal"


def _solve_linear(c, A, b, lb, ub):
    """min c.x  s.t. A x <= b, lb <= x <= ub (entries may be +-inf)."""
    d = c.shape[0]
    rows = [A] if A.size else []
    rhs = [b] if A.size else []
    for j in range(d):
        if np.isfinite(ub[j]):
            e = np.zeros(d)
            e[j] = 1.0
            rows.append(e[None, :])
            rhs.append(np.array([ub[j]]))
    A_all = np.vstack(rows) if rows else np.zeros((0, d))
    b_all = np.concatenate(rhs) if rhs else np.zeros(0)

    # Shift finite lower bounds to zero; split genuinely free variables.
    offset = np.where(np.isfinite(lb), lb, 0.0)
    free = ~np.isfinite(lb)
    b_std = b_all - A_all @ offset
    cols = [A_all]
    c_std = [c]
    if free.any():
        cols.append(-A_all[:, free])
        c_std.append(-c[free])
    A_std = np.hstack(cols)
    c_full = np.concatenate(c_std)

    y, status = _simplex_core(c_full, A_std, b_std)
    if status != "optimal":
        return None, status
    x = y[:d].copy()
    if free.any():
        x[free] -= y[d:]
    return x + offset, "optimal"


# ---------------------------------------------------------------------------
# Log-barrier interior point for the general cone path.

_NORM_SMOOTH = 1e-9


def _build_constraints(program: ConicProgram, slack_col: int | None):
    """Flatten rows and bounds into (value, grad, hess) triples over x[, xi]."""
    d = program.dim
    ext = d + (1 if slack_col is not None else 0)
    cons = []

    def add_linear(a, rhs, relaxable):
        a_ext = np.zeros(ext)
        a_ext[:d] = a
        if slack_col is not None and relaxable:
            a_ext[slack_col] = -1.0
        cons.append(("lin", a_ext, rhs, None))

    for lr in program.linear_rows:
        add_linear(np.asarray(lr.row, float), lr.rhs, lr.relaxable)
    lbs, ubs = program.bounds
    for j in range(d):
        if np.isfinite(ubs[j]):
            e = np.zeros(d)
            e[j] = 1.0
            add_linear(e, ubs[j], False)
        if np.isfinite(lbs[j]):
            e = np.zeros(d)
            e[j] = -1.0
            add_linear(e, -lbs[j], False)
    if slack_col is not None:
        e = np.zeros(ext)
        e[slack_col] = -1.0
        cons.append(("lin", e, 0.0, None))  # xi >= 0

    for cr in program.cone_rows:
        a_ext = np.zeros(ext)
        a_ext[:d] = np.asarray(cr.row, float)
        if slack_col is not None and cr.relaxable:
            a_ext[slack_col] = -1.0
        w2 = np.zeros(ext)
        w2[program.stddev_index] = np.asarray(cr.coeffs, float) ** 2
        cons.append(("cone", a_ext, cr.rhs, (cr.gain, w2)))
    return cons, ext


def _con_eval(con, x):
    kind, a, rhs, extra = con
    if kind == "lin":
        return float(a @ x) - rhs, a, None
    gain, w2 = extra
    q = float(w2 @ (x * x))
    s = np.sqrt(q + _NORM_SMOOTH ** 2)
    val = gain * s + float(a @ x) - rhs
    g = gain * (w2 * x) / s + a
    return val, g, (gain, w2, x, s)


def _con_hess(extra, ext):
    gain, w2, x, s = extra
    wx = w2 * x
    return gain * (np.diag(w2) / s - np.outer(wx, wx) / s ** 3)


def _newton_barrier(cons, c_lin, x0, ext, t_init=1.0, mu=20.0, gap_tol=1e-9,
                    stop_when=None):
    """Minimize c_lin.x over {val_i(x) < 0} via a standard barrier sweep."""
    x = x0.copy()
    m = len(cons)
    t = t_init
    while True:
        for _ in range(60):
            g = t * c_lin.copy()
            H = np.zeros((ext, ext))
            for con in cons:
                val, grad, extra = _con_eval(con, x)
                inv = -1.0 / val
                g += grad * inv
                H += np.outer(grad, grad) * inv * inv
                if extra is not None:
                    H += _con_hess(extra, ext) * inv
            H[np.diag_indices_from(H)] += 1e-10 * (1.0 + np.trace(H) / ext)
            try:
                dx = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                dx = np.linalg.lstsq(H, -g, rcond=None)[0]
            decr = float(-g @ dx)
            if decr <= 2e-12:
                break
            alpha = 1.0
            for _ in range(80):
                xn = x + alpha * dx
                if all(_con_eval(con, xn)[0] < 0.0 for con in cons):
                    break
                alpha *= 0.5
            else:
                break

            def psi(z):
                return t * float(c_lin @ z) - sum(
                    np.log(-_con_eval(con, z)[0]) for con in cons)

            base = psi(x)
            for _ in range(60):
                if psi(x + alpha * dx) <= base - 0.25 * alpha * decr + 1e-12:
                    break
                alpha *= 0.5
            x = x + alpha * dx
            if stop_when is not None and stop_when(x):
                return x
        if m / t < gap_tol:
            return x
        t *= mu


def _barrier_solve(program: ConicProgram, penalty: float | None):
    """Cone-path solve; penalty enables the shared relaxation slack."""
    slack_col = program.dim if penalty is not None else None
    cons, ext = _build_constraints(program, slack_col)
    lbs, ubs = program.bounds
    x0 = np.zeros(ext)
    for j in range(program.dim):
        lo = lbs[j] if np.isfinite(lbs[j]) else None
        hi = ubs[j] if np.isfinite(ubs[j]) else None
        if lo is not None and hi is not None:
            x0[j] = 0.5 * (lo + hi)
        elif lo is not None:
            x0[j] = lo + 1.0
        elif hi is not None:
            x0[j] = hi - 1.0

    vals = [_con_eval(con, x0)[0] for con in cons]
    worst = max(vals)

    if worst >= -1e-9:
        # Phase 1: minimize the max violation with an explicit bound variable.
        p1 = np.zeros(ext + 1)
        xi0 = np.concatenate([x0, [worst + 1.0]])
        cons1 = []
        for kind, a, rhs, extra in cons:
            a1 = np.concatenate([a, [-1.0]])
            cons1.append((kind, a1, rhs, None if extra is None else
                          (extra[0], np.concatenate([extra[1], [0.0]]))))
        p1[-1] = 1.0
        sol = _newton_barrier(cons1, p1, xi0, ext + 1, gap_tol=1e-7,
                              stop_when=lambda z: z[-1] < -1e-6)
        if sol[-1] >= -1e-7:
            return None
        x0 = sol[:ext]

    c_lin = np.zeros(ext)
    c_lin[:program.dim] = program.objective
    if slack_col is not None:
        c_lin[slack_col] = penalty
    return _newton_barrier(cons, c_lin, x0, ext)


# ---------------------------------------------------------------------------
# Public entry points.


def _violations(program: ConicProgram, x: np.ndarray) -> float:
    worst = 0.0
    for lr in program.linear_rows:
        worst = max(worst, float(lr.row @ x) - lr.rhs)
    lbs, ubs = program.bounds
    worst = max(worst, float(np.max(np.maximum(lbs - x, x - ubs), initial=0.0)))
    s = x[program.stddev_index]
    for cr in program.cone_rows:
        nrm = float(np.linalg.norm(cr.coeffs * s))
        worst = max(worst, cr.gain * nrm + float(cr.row @ x) - cr.rhs)
    return worst


def _penalty_scale(program: ConicProgram) -> float:
    return _PENALTY_FACTOR * max(1.0, float(np.max(np.abs(program.objective), initial=0.0)))


def _any_relaxable(program: ConicProgram) -> bool:
    return any(r.relaxable for r in program.linear_rows) or \
        any(r.relaxable for r in program.cone_rows)


def _lp_arrays(program: ConicProgram, with_slack: bool):
    """Assemble (c, A, b, lb, ub) treating single-coordinate cone rows as linear."""
    d = program.dim
    ext = d + (1 if with_slack else 0)
    rows, rhs = [], []

    def emit(a, b_val, relaxable):
        a_ext = np.zeros(ext)
        a_ext[:d] = a
        if with_slack and relaxable:
            a_ext[d] = -1.0
        rows.append(a_ext)
        rhs.append(b_val)

    for lr in program.linear_rows:
        emit(np.asarray(lr.row, float), lr.rhs, lr.relaxable)
    for cr in program.cone_rows:
        coeffs = np.asarray(cr.coeffs, float)
        nz = np.flatnonzero(coeffs)
        a = np.asarray(cr.row, float).copy()
        if nz.size:
            j = program.stddev_index[nz[0]]
            a[j] += cr.gain * abs(coeffs[nz[0]])
        emit(a, cr.rhs, cr.relaxable)

    lbs, ubs = program.bounds
    lb = np.concatenate([lbs, [0.0]]) if with_slack else lbs.copy()
    ub = np.concatenate([ubs, [np.inf]]) if with_slack else ubs.copy()
    c = np.zeros(ext)
    c[:d] = program.objective
    if with_slack:
        c[d] = _penalty_scale(program)
    A = np.vstack(rows) if rows else np.zeros((0, ext))
    return c, A, np.asarray(rhs, float), lb, ub


def _cone_rows_reduce_to_lp(program: ConicProgram) -> bool:
    lbs = program.bounds[0]
    for cr in program.cone_rows:
        nz = np.flatnonzero(np.asarray(cr.coeffs, float))
        if nz.size > 1:
            return False
        if nz.size == 1 and lbs[program.stddev_index[nz[0]]] < 0.0:
            return False
    return True


def solve_lp(program: ConicProgram) -> SolveReport:
    """Solve a program with no cone rows (or only single-coordinate ones)."""
    if not _cone_rows_reduce_to_lp(program):
        raise ValueError("program has genuine cone rows; use solve_socp")
    c, A, b, lb, ub = _lp_arrays(program, with_slack=False)
    x, status = _solve_linear(c, A, b, lb, ub)
    if status == "optimal":
        return SolveReport(x=x, status="optimal",
                           max_violation=_violations(program, x), slack_used=0.0)
    if not _any_relaxable(program):
        return SolveReport(x=np.full(program.dim, np.nan), status="infeasible",
                           max_violation=np.inf, slack_used=0.0)
    c, A, b, lb, ub = _lp_arrays(program, with_slack=True)
    xs, status = _solve_linear(c, A, b, lb, ub)
    if status != "optimal":
        return SolveReport(x=np.full(program.dim, np.nan), status="infeasible",
                           max_violation=np.inf, slack_used=0.0)
    slack = float(xs[program.dim])
    x = xs[:program.dim]
    return SolveReport(x=x, status="relaxed" if slack > SLACK_TOL else "optimal",
                       max_violation=_violations(program, x), slack_used=slack)


def solve_socp(program: ConicProgram, force_barrier: bool = False) -> SolveReport:
    """Solve the full program; routes to the LP reduction when exact."""
    if not force_barrier and _cone_rows_reduce_to_lp(program):
        return solve_lp(program)

    x = _barrier_solve(program, penalty=None)
    if x is not None:
        x = x[:program.dim]
        return SolveReport(x=x, status="optimal",
                           max_violation=_violations(program, x), slack_used=0.0)
    if not _any_relaxable(program):
        return SolveReport(x=np.full(program.dim, np.nan), status="infeasible",
                           max_violation=np.inf, slack_used=0.0)
    xs = _barrier_solve(program, penalty=_penalty_scale(program))
    if xs is None:
        return SolveReport(x=np.full(program.dim, np.nan), status="infeasible",
                           max_violation=np.inf, slack_used=0.0)
    slack = float(xs[program.dim])
    x = xs[:program.dim]
    return SolveReport(x=x, status="relaxed" if slack > SLACK_TOL else "optimal",
                       max_violation=_violations(program, x), slack_used=slack)
