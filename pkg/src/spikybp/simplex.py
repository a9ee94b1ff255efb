"""Dense two-phase simplex for box-bounded linear programs.

    minimize c.x   subject to   A x = b,   l <= x <= u

with infinite bounds allowed.  Aimed at problems with few equality rows and
possibly many columns, the basis system is re-solved from scratch at every
pivot: m stays tiny, so the O(m^3) solves are cheap and there is no basis
factorization drift to manage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_AT_LOWER = 0
_AT_UPPER = 1
_BASIC = 2
_FREE = 3

_DUAL_TOL = 1e-9      # reduced-cost threshold for entering candidates
_PIVOT_TOL = 1e-10    # smallest usable ratio-test denominator
_DEGEN_TOL = 1e-12    # step below this counts as a degenerate pivot


class IterationLimitError(RuntimeError):
    """Pivot cap exceeded; carries the best point seen so far."""

    def __init__(self, message: str, x=None, objective_value=None):
        super().__init__(message)
        self.x = x
        self.objective_value = objective_value


@dataclass
class LinearProgram:
    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower_bounds: np.ndarray | None = None
    upper_bounds: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.atleast_1d(np.asarray(self.objective, dtype=np.float64))
        self.eq_matrix = np.atleast_2d(np.asarray(self.eq_matrix, dtype=np.float64))
        self.eq_rhs = np.atleast_1d(np.asarray(self.eq_rhs, dtype=np.float64))
        m, k = self.eq_matrix.shape
        if self.objective.shape != (k,):
            raise ValueError("objective length must match eq_matrix columns")
        if self.eq_rhs.shape != (m,):
            raise ValueError("eq_rhs length must match eq_matrix rows")
        if self.lower_bounds is None:
            self.lower_bounds = np.zeros(k)
        if self.upper_bounds is None:
            self.upper_bounds = np.full(k, np.inf)
        self.lower_bounds = np.atleast_1d(np.asarray(self.lower_bounds, dtype=np.float64))
        self.upper_bounds = np.atleast_1d(np.asarray(self.upper_bounds, dtype=np.float64))
        if self.lower_bounds.shape != (k,) or self.upper_bounds.shape != (k,):
            raise ValueError("bounds length must match eq_matrix columns")
        finite = (np.all(np.isfinite(self.objective))
                  and np.all(np.isfinite(self.eq_matrix))
                  and np.all(np.isfinite(self.eq_rhs)))
        if not finite:
            raise ValueError("objective, eq_matrix, eq_rhs must be finite")
        if np.any(np.isnan(self.lower_bounds)) or np.any(np.isnan(self.upper_bounds)):
            raise ValueError("bounds must not contain NaN")
        if np.any(self.lower_bounds > self.upper_bounds):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_rows(self) -> int:
        return self.eq_matrix.shape[0]

    @property
    def n_vars(self) -> int:
        return self.eq_matrix.shape[1]


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    objective_value: float | None
    iterations: int
    dual: np.ndarray | None = None
    max_violation: float = 0.0


class _Simplex:
    def __init__(self, lp: LinearProgram, feas_tol: float):
        m, k = lp.eq_matrix.shape
        self.m, self.k = m, k
        total = k + m
        self.a = np.zeros((m, total))
        self.a[:, :k] = lp.eq_matrix
        self.b = lp.eq_rhs.copy()
        self.c_orig = lp.objective
        self.lower = np.concatenate([lp.lower_bounds, np.zeros(m)])
        self.upper = np.concatenate([lp.upper_bounds, np.full(m, np.inf)])
        self.feas_tol = feas_tol
        self.cap = 50 * (m + k) ** 2
        self.bland_after = 3 * (m + k)
        self.iterations = 0
        self.degenerate = 0
        self.bland = False

        # park every original variable on a finite bound (or 0 when free)
        x = np.zeros(total)
        st = np.full(total, _FREE, dtype=np.int8)
        lo_fin = np.isfinite(self.lower[:k])
        up_fin = np.isfinite(self.upper[:k])
        x[:k] = np.where(lo_fin, self.lower[:k],
                         np.where(up_fin, self.upper[:k], 0.0))
        st[:k] = np.where(lo_fin, _AT_LOWER,
                          np.where(up_fin, _AT_UPPER, _FREE))
        # artificial column i is sign(r_i)*e_i so its start value |r_i| >= 0
        r = self.b - self.a[:, :k] @ x[:k]
        sgn = np.where(r >= 0.0, 1.0, -1.0)
        self.a[np.arange(m), k + np.arange(m)] = sgn
        x[k:] = np.abs(r)
        st[k:] = _BASIC
        self.x = x
        self.status = st
        self.basis = np.arange(k, total)

    def _refresh_basic(self):
        xn = self.x.copy()
        xn[self.basis] = 0.0
        rhs = self.b - self.a @ xn
        self.x[self.basis] = np.linalg.solve(self.a[:, self.basis], rhs)

    def _phase(self, c: np.ndarray, phase1: bool) -> str:
        m, k = self.m, self.k
        movable = self.upper - self.lower > 0.0
        while True:
            if self.iterations >= self.cap:
                raise IterationLimitError(
                    f"simplex iteration cap {self.cap} exceeded",
                    x=self.x[:k].copy(),
                    objective_value=float(self.c_orig @ self.x[:k]))
            self._refresh_basic()
            basis_mat = self.a[:, self.basis]
            y = np.linalg.solve(basis_mat.T, c[self.basis])
            d = c - self.a.T @ y
            st = self.status
            inc = movable & (d < -_DUAL_TOL) & ((st == _AT_LOWER) | (st == _FREE))
            dec = movable & (d > _DUAL_TOL) & ((st == _AT_UPPER) | (st == _FREE))
            cand = inc | dec
            if not cand.any():
                return OPTIMAL
            if self.bland:
                q = int(np.nonzero(cand)[0][0])
            else:
                q = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            direction = 1.0 if inc[q] else -1.0
            w = np.linalg.solve(basis_mat, self.a[:, q])
            delta = direction * w  # basic values move by -delta * step

            bi = self.basis
            xb, lb, ub = self.x[bi], self.lower[bi], self.upper[bi]
            ratio = np.full(m, np.inf)
            pos = delta > _PIVOT_TOL
            neg = delta < -_PIVOT_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio[pos] = (xb[pos] - lb[pos]) / delta[pos]
                ratio[neg] = (ub[neg] - xb[neg]) / (-delta[neg])
            ratio = np.maximum(ratio, 0.0)
            span = self.upper[q] - self.lower[q]  # own-bound flip distance
            r_min = float(ratio.min()) if m else np.inf
            step = min(span, r_min)
            if not np.isfinite(step):
                if phase1:
                    raise RuntimeError("phase-1 objective unbounded; input is broken")
                return UNBOUNDED

            self.iterations += 1
            if step <= _DEGEN_TOL:
                self.degenerate += 1
                if self.degenerate > self.bland_after:
                    self.bland = True

            if span <= r_min:
                # entering variable flips to its opposite bound, basis unchanged
                if direction > 0:
                    self.x[q] = self.upper[q]
                    self.status[q] = _AT_UPPER
                else:
                    self.x[q] = self.lower[q]
                    self.status[q] = _AT_LOWER
                continue

            tie = (ratio <= r_min + 1e-12 * (1.0 + r_min)) & (pos | neg)
            rows = np.nonzero(tie)[0]
            row = int(rows[np.argmin(bi[rows])])  # lowest-index leaving variable
            leave = int(bi[row])
            if delta[row] > 0:
                self.x[leave] = self.lower[leave]
                self.status[leave] = _AT_LOWER
            else:
                self.x[leave] = self.upper[leave]
                self.status[leave] = _AT_UPPER
            if phase1 and leave >= k:
                # an artificial that left the basis is never allowed back
                self.upper[leave] = 0.0
                movable[leave] = False
            self.x[q] += direction * step
            self.status[q] = _BASIC
            self.basis[row] = q

    def run(self) -> LpSolution:
        m, k = self.m, self.k
        c1 = np.concatenate([np.zeros(k), np.ones(m)])
        self._phase(c1, phase1=True)
        infeas = float(self.x[k:].sum())
        if infeas > self.feas_tol * (1.0 + np.abs(self.b).max(initial=0.0)):
            return LpSolution(INFEASIBLE, None, None, self.iterations)

        self.upper[k:] = 0.0  # artificials pinned for phase 2
        c2 = np.concatenate([self.c_orig, np.zeros(m)])
        status = self._phase(c2, phase1=False)
        if status == UNBOUNDED:
            return LpSolution(UNBOUNDED, None, None, self.iterations)
        x = self.x[:k].copy()
        dual = np.linalg.solve(self.a[:, self.basis].T, c2[self.basis])
        resid = float(np.abs(self.a[:, :k] @ x - self.b).max(initial=0.0))
        breach = max(float((self.lower[:k] - x).max(initial=0.0)),
                     float((x - self.upper[:k]).max(initial=0.0)), 0.0)
        return LpSolution(OPTIMAL, x, float(self.c_orig @ x), self.iterations,
                          dual=dual, max_violation=max(resid, breach))


def solve(lp: LinearProgram, feas_tol: float = 1e-9) -> LpSolution:
    """Two-phase simplex; Dantzig pricing, Bland's rule after cycling stalls."""
    if lp.n_rows < 1:
        raise ValueError("need at least one equality row")
    return _Simplex(lp, feas_tol).run()


def feasible_point(eq_matrix, eq_rhs, lower, upper,
                   feas_tol: float = 1e-9) -> np.ndarray | None:
    """A point satisfying A x = b, l <= x <= u within feas_tol, else None."""
    eq_matrix = np.atleast_2d(np.asarray(eq_matrix, dtype=np.float64))
    lp = LinearProgram(np.zeros(eq_matrix.shape[1]), eq_matrix, eq_rhs,
                       lower, upper)
    sol = solve(lp, feas_tol)
    return sol.x if sol.status == OPTIMAL else None
