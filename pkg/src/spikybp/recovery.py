"""Basis pursuit, per-target uniqueness certification, l0 brute force.

Basis pursuit solves min ||t||_1 subject to Gamma t = y as an LP over the
split t = t+ - t-.  Uniqueness is decided by measuring the coordinate ranges
of the optimal face; l0 recovery enumerates supports of growing size.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from . import simplex
from .ensemble import MeasurementMatrix

UNIQUE = "unique"
NOT_UNIQUE = "not_unique"
UNKNOWN = "unknown"

UNIQUENESS_TOL = 1e-6


class NoSolutionError(RuntimeError):
    """y is not in the range of Gamma: basis pursuit has no feasible point."""


@dataclass(frozen=True)
class SparseVector:
    dim: int
    support: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        values = tuple(float(v) for v in self.values)
        if len(support) != len(values):
            raise ValueError("support and values must have equal length")
        if len(set(support)) != len(support):
            raise ValueError("support indices must be distinct")
        if any(not 0 <= i < self.dim for i in support):
            raise ValueError("support index out of range")
        if any(v == 0.0 for v in values):
            raise ValueError("stored values must be nonzero")
        order = sorted(range(len(support)), key=lambda a: support[a])
        object.__setattr__(self, "support", tuple(support[a] for a in order))
        object.__setattr__(self, "values", tuple(values[a] for a in order))

    @classmethod
    def from_dense(cls, v, tol: float = 0.0) -> "SparseVector":
        v = np.asarray(v, dtype=np.float64)
        idx = np.nonzero(np.abs(v) > tol)[0]
        return cls(v.size, tuple(int(i) for i in idx),
                   tuple(float(v[i]) for i in idx))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        for i, v in zip(self.support, self.values):
            out[i] = v
        return out

    def l1(self) -> float:
        return float(sum(abs(v) for v in self.values))

    def format(self) -> str:
        body = ",".join(f"{i}:{v:.17g}" for i, v in zip(self.support, self.values))
        return f"{self.dim}; {body}" if body else f"{self.dim};"

    @classmethod
    def parse(cls, text: str) -> "SparseVector":
        head, sep, body = text.partition(";")
        if not sep:
            raise ValueError("expected 'dim; index:value,...'")
        dim = int(head.strip())
        body = body.strip()
        if not body:
            return cls(dim, (), ())
        support, values = [], []
        for item in body.split(","):
            i, _, v = item.partition(":")
            support.append(int(i.strip()))
            values.append(float(v.strip()))
        return cls(dim, tuple(support), tuple(values))


@dataclass
class RecoveryResult:
    minimizer: np.ndarray
    l1_value: float
    unique: str = UNKNOWN
    witness_alt: np.ndarray | None = None
    dual: np.ndarray | None = None


def _entries(gamma) -> np.ndarray:
    if isinstance(gamma, MeasurementMatrix):
        return gamma.entries
    return np.atleast_2d(np.asarray(gamma, dtype=np.float64))


def basis_pursuit(gamma, y, feas_tol: float = 1e-9) -> RecoveryResult:
    """min sum(t+ + t-) s.t. Gamma (t+ - t-) = y, t+- >= 0; unique left Unknown."""
    g = _entries(gamma)
    n_rows, n_cols = g.shape
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.shape != (n_rows,):
        raise ValueError("y length must match the number of matrix rows")
    lp = simplex.LinearProgram(np.ones(2 * n_cols), np.hstack([g, -g]), y)
    sol = simplex.solve(lp, feas_tol)
    if sol.status == simplex.INFEASIBLE:
        raise NoSolutionError("y is not in the range of Gamma")
    if sol.status != simplex.OPTIMAL:
        raise RuntimeError(f"unexpected LP status {sol.status}")
    t = sol.x[:n_cols] - sol.x[n_cols:]
    return RecoveryResult(t, sol.objective_value, UNKNOWN, dual=sol.dual)


def _face_program(g: np.ndarray, y: np.ndarray, budget: float):
    """Equalities for {Gamma t = y, ||t||_1 <= budget} over (t+, t-, slack)."""
    n_rows, n_cols = g.shape
    a = np.zeros((n_rows + 1, 2 * n_cols + 1))
    a[:n_rows, :n_cols] = g
    a[:n_rows, n_cols:2 * n_cols] = -g
    a[n_rows, :] = 1.0
    b = np.concatenate([y, [budget]])
    return a, b


def certify_uniqueness(gamma, y, result: RecoveryResult,
                       uniqueness_tol: float = UNIQUENESS_TOL,
                       feas_tol: float = 1e-9) -> RecoveryResult:
    """Resolve the unique field by probing coordinate ranges of the optimal face.

    The face is {Gamma t = y, ||t||_1 <= l1_value + slack} with slack
    1e-8*(1 + l1_value).  Coordinates whose range on the face provably fits
    inside uniqueness_tol are pruned using the basis-pursuit dual: with
    g = Gamma' lam and strong duality, any face point satisfies
    |t_k| * (1 - |g_k|) <= face slack, so large-|g_k| gaps need no LP.
    """
    g = _entries(gamma)
    n_rows, n_cols = g.shape
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if result.dual is None:
        result = basis_pursuit(gamma, y, feas_tol)
    value = result.l1_value
    slack = 1e-8 * (1.0 + value)
    budget = value + slack

    corr = g.T @ result.dual
    dual_excess = max(0.0, float(np.abs(corr).max(initial=0.0)) - 1.0)
    # everything a face point can spend beyond the certified optimum
    spend = max(0.0, budget - float(result.dual @ y)) + budget * dual_excess
    gap = np.maximum(1.0 - np.abs(corr), 0.0)
    with np.errstate(divide="ignore"):
        cap = np.where(gap > 0.0, spend / np.where(gap > 0.0, gap, 1.0), np.inf)
    candidates = np.nonzero(cap > 0.25 * uniqueness_tol)[0]

    a, b = _face_program(g, y, budget)
    width_max, widest_point = 0.0, None
    for k in candidates:
        lo_pt, hi_pt = None, None
        lo_val = hi_val = float(result.minimizer[k])
        for sense in (-1.0, 1.0):
            c = np.zeros(2 * n_cols + 1)
            c[k] = sense
            c[n_cols + k] = -sense
            sol = simplex.solve(simplex.LinearProgram(c, a, b), feas_tol)
            if sol.status != simplex.OPTIMAL:
                raise RuntimeError(f"face LP returned {sol.status}")
            t = sol.x[:n_cols] - sol.x[n_cols:2 * n_cols]
            if sense < 0:  # maximized t_k
                hi_val, hi_pt = -sol.objective_value, t
            else:
                lo_val, lo_pt = sol.objective_value, t
        width = hi_val - lo_val
        if width > width_max:
            width_max = width
            # keep the extreme farther from the reported minimizer
            d_hi = float(np.abs(hi_pt - result.minimizer).max())
            d_lo = float(np.abs(lo_pt - result.minimizer).max())
            widest_point = hi_pt if d_hi >= d_lo else lo_pt
    if width_max > uniqueness_tol:
        return replace(result, unique=NOT_UNIQUE, witness_alt=widest_point)
    return replace(result, unique=UNIQUE, witness_alt=None)


def l0_brute_force(gamma, y, d_max: int, res_tol: float = 1e-8) -> list[SparseVector]:
    """All minimal-size supports solving Gamma t = y, by enumeration.

    Stops at the first size s with a least-squares residual below
    res_tol*(1 + ||y||_2) and returns every support of that size.  More than
    one returned support means l0 recovery is not unique.
    """
    g = _entries(gamma)
    n_rows, n_cols = g.shape
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if y.shape != (n_rows,):
        raise ValueError("y length must match the number of matrix rows")
    if not 0 <= d_max <= 3:
        raise ValueError("d_max must lie in [0, 3]")
    if n_rows < d_max:
        raise ValueError("d_max cannot exceed the number of rows")
    thresh = res_tol * (1.0 + float(np.linalg.norm(y)))
    ny2 = float(y @ y)
    if np.sqrt(ny2) <= thresh:
        return [SparseVector(n_cols, (), ())]
    found: list[SparseVector] = []
    for s in range(1, d_max + 1):
        if s == 1:
            # closed form: residual^2 = ||y||^2 - (g_j.y)^2/||g_j||^2
            dots = g.T @ y
            norms2 = np.einsum("ij,ij->j", g, g)
            ok = norms2 > 0.0
            coef = np.zeros(n_cols)
            coef[ok] = dots[ok] / norms2[ok]
            res2 = np.maximum(ny2 - coef * dots, 0.0)
            hits = np.nonzero(ok & (np.sqrt(res2) <= thresh) & (coef != 0.0))[0]
            found = [SparseVector(n_cols, (int(j),), (float(coef[j]),))
                     for j in hits]
        else:
            for supp in itertools.combinations(range(n_cols), s):
                sub = g[:, supp]
                gram = sub.T @ sub
                try:
                    t = np.linalg.solve(gram, sub.T @ y)
                except np.linalg.LinAlgError:
                    t, *_ = np.linalg.lstsq(sub, y, rcond=None)
                if np.linalg.norm(y - sub @ t) <= thresh and np.all(t != 0.0):
                    found.append(SparseVector(n_cols, supp, tuple(map(float, t))))
        if found:
            return found
    return []


def write_vector_text(v, path) -> None:
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    with open(path, "w") as f:
        f.write(" ".join(f"{x:.17g}" for x in v) + "\n")


def read_vector_text(path) -> np.ndarray:
    with open(path) as f:
        return np.atleast_1d(np.loadtxt(f, dtype=np.float64))
