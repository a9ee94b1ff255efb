"""Seeded Monte Carlo harness for the failure experiment and side checks.

Each trial samples a fresh matrix with seed mix_seed(base_seed, t), so a
trial's outcome depends only on (base_seed, t, cell parameters), regardless
of worker scheduling.  Sweeps write one CSV row per (cell, trial) plus an
aggregate row per cell with trial = -1.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import certify, recovery, rng
from .ensemble import (EnsembleSpec, ParameterPlan, ScalarLaw, evaluate_plan,
                       plan_parameters, sample_matrix, sample_spike_mask)

CHECK_FAILURE = "failure_cert"
CHECK_CLEAN = "clean_col"
CHECK_SPIKE = "spike_event"
CHECK_L0 = "l0_unique"
CHECK_NSP = "nsp_gaussian_baseline"
CHECK_PHI2 = "phi2"
KNOWN_CHECKS = frozenset({CHECK_FAILURE, CHECK_CLEAN, CHECK_SPIKE,
                          CHECK_L0, CHECK_NSP, CHECK_PHI2})
DEFAULT_CHECKS = frozenset({CHECK_FAILURE, CHECK_CLEAN, CHECK_SPIKE})
_CELL_CHECKS = frozenset({CHECK_FAILURE, CHECK_CLEAN, CHECK_SPIKE,
                          CHECK_L0, CHECK_PHI2})

# phi2 at or below this counts as the "compatibility collapsed" event
PHI2_ZERO_TOL = 1e-6

CSV_HEADER = ("cell_id", "N", "n", "delta", "p", "R", "trial", "seed",
              "failure_found", "witness_j", "clean_col1",
              "spike_event_all_rows", "l0_unique", "phi2")


class PlanInfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_rows: int
    n_cols: int
    trials: int
    base_seed: int
    checks: frozenset = DEFAULT_CHECKS
    planner_overrides: tuple[float, float, float] | None = None
    c_lo: float = 3.0
    c_4: float = 2.0
    force: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "checks", frozenset(self.checks))
        unknown = self.checks - KNOWN_CHECKS
        if unknown:
            raise ValueError(f"unknown checks: {sorted(unknown)}")
        if self.planner_overrides is not None:
            d, p, r = self.planner_overrides
            object.__setattr__(self, "planner_overrides",
                               (float(d), float(p), float(r)))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    failure_found: bool | None = None
    witness_j: int | None = None
    certificate: certify.FailureCertificate | None = None
    clean_col1: bool | None = None
    spike_event_all_rows: bool | None = None
    l0_unique: bool | None = None
    phi2: float | None = None
    nsp_holds: bool | None = None


@dataclass
class CheckStats:
    successes: int
    trials: int
    frequency: float
    wilson_95_interval: tuple[float, float]


@dataclass
class TrialStats:
    per_check: dict[str, CheckStats]
    records: list[TrialRecord]
    plan: ParameterPlan | None = None


def wilson_95(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials, trials >= 1")
    z = 1.959963984540054
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials
                         + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def resolve_plan(config: ExperimentConfig) -> ParameterPlan:
    if config.planner_overrides is not None:
        d, p, r = config.planner_overrides
        plan = evaluate_plan(config.n_rows, config.n_cols, d, p, r,
                             config.c_lo, config.c_4)
    else:
        plan = plan_parameters(config.n_rows, config.n_cols,
                               config.c_lo, config.c_4)
    if not plan.feasible and not config.force:
        bad = plan.first_violated
        raise PlanInfeasibleError(
            f"plan infeasible at {bad.name} ({bad.detail}); "
            f"set force to run anyway")
    return plan


def _spike_event_all_rows(mask: np.ndarray) -> bool:
    """Every row has a column j >= 2 spiky in that row and clean elsewhere."""
    rest = mask[:, 1:]
    single = rest.sum(axis=0) == 1
    return bool(np.all((rest & single[None, :]).any(axis=1)))


def _any_parallel_to_first(g: np.ndarray, rel_tol: float = 1e-9) -> bool:
    col0 = g[:, 0]
    norm0 = np.linalg.norm(col0)
    if norm0 == 0.0:
        return False
    u = col0 / norm0
    proj = u @ g
    res = np.linalg.norm(g - np.outer(u, proj), axis=0)
    norms = np.linalg.norm(g, axis=0)
    parallel = (res <= rel_tol * norms) & (norms > 0.0)
    return bool(parallel[1:].any())


def _theorem_a_trial(plan: ParameterPlan, trial: int, seed: int,
                     checks: frozenset) -> TrialRecord:
    spec = EnsembleSpec(plan.law(), plan.n_rows, plan.n_cols, seed)
    mat = sample_matrix(spec)
    record = TrialRecord(trial, seed)
    if CHECK_CLEAN in checks or CHECK_SPIKE in checks:
        mask = sample_spike_mask(spec)
        if CHECK_CLEAN in checks:
            record.clean_col1 = not bool(mask[:, 0].any())
        if CHECK_SPIKE in checks:
            record.spike_event_all_rows = _spike_event_all_rows(mask)
    if CHECK_FAILURE in checks:
        record.failure_found = False
        for j in range(plan.n_cols):  # column 1 first, then the rest
            target = recovery.SparseVector(plan.n_cols, (j,), (1.0,))
            cert = certify.er_failure_certificate(mat, target)
            if cert is not None:
                record.failure_found = True
                record.witness_j = j
                record.certificate = cert
                break
    if CHECK_L0 in checks:
        y = mat.entries[:, 0].copy()
        sols = recovery.l0_brute_force(mat, y, 1)
        exact = len(sols) == 1 and sols[0].support == (0,)
        record.l0_unique = exact and not _any_parallel_to_first(mat.entries)
    if CHECK_PHI2 in checks:
        record.phi2 = certify.compatibility_constant(mat, (0,), 1.0).phi2
    return record


def _trial_worker(args) -> TrialRecord:
    return _theorem_a_trial(*args)


_INDICATORS = {
    CHECK_FAILURE: lambda r: r.failure_found,
    CHECK_CLEAN: lambda r: r.clean_col1,
    CHECK_SPIKE: lambda r: r.spike_event_all_rows,
    CHECK_L0: lambda r: r.l0_unique,
    CHECK_NSP: lambda r: r.nsp_holds,
    CHECK_PHI2: lambda r: None if r.phi2 is None else r.phi2 <= PHI2_ZERO_TOL,
}


def _aggregate(records: list[TrialRecord], checks) -> dict[str, CheckStats]:
    out = {}
    for name in sorted(checks):
        vals = [v for v in (_INDICATORS[name](r) for r in records)
                if v is not None]
        if not vals:
            continue
        s = sum(1 for v in vals if v)
        out[name] = CheckStats(s, len(vals), s / len(vals),
                               wilson_95(s, len(vals)))
    return out


def run_cell(config: ExperimentConfig, threads: int = 1) -> TrialStats:
    """One sweep cell: every requested per-trial check on seeded matrices."""
    plan = resolve_plan(config)
    checks = config.checks & _CELL_CHECKS
    args = [(plan, t, rng.mix_seed(config.base_seed, t), checks)
            for t in range(config.trials)]
    if threads > 1:
        chunk = max(1, config.trials // (4 * threads))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_trial_worker, args, chunksize=chunk))
    else:
        records = [_trial_worker(a) for a in args]
    return TrialStats(_aggregate(records, checks), records, plan)


def run_theorem_a(config: ExperimentConfig, threads: int = 1) -> TrialStats:
    """Failure-certificate scan (column 1 first) plus spike/clean events."""
    trimmed = config.checks & frozenset({CHECK_FAILURE, CHECK_CLEAN,
                                         CHECK_SPIKE})
    cfg = ExperimentConfig(config.n_rows, config.n_cols, config.trials,
                           config.base_seed, trimmed or DEFAULT_CHECKS,
                           config.planner_overrides, config.c_lo,
                           config.c_4, config.force)
    return run_cell(cfg, threads)


def run_l0_companion(config: ExperimentConfig, threads: int = 1) -> TrialStats:
    """On the same seeded matrices: no column parallel to column 1 AND
    l0_brute_force(Gamma, Gamma e1, 1) = {e1}; joint frequency."""
    cfg = ExperimentConfig(config.n_rows, config.n_cols, config.trials,
                           config.base_seed, frozenset({CHECK_L0}),
                           config.planner_overrides, config.c_lo,
                           config.c_4, config.force)
    return run_cell(cfg, threads)


def run_gaussian_baseline(n_rows: int, n_cols: int, trials: int,
                          seed: int) -> TrialStats:
    """Frequency of the exact ER(1) verdict over seeded Gaussian matrices."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    records = []
    for t in range(trials):
        s = rng.mix_seed(seed, t)
        mat = sample_matrix(EnsembleSpec(ScalarLaw.gaussian(), n_rows,
                                         n_cols, s))
        verdict = certify.er_check_nsp(mat, 1)
        records.append(TrialRecord(t, s, nsp_holds=verdict.holds))
    return TrialStats(_aggregate(records, {CHECK_NSP}), records, None)


@dataclass(frozen=True)
class SweepGrid:
    n_rows_list: tuple[int, ...]
    n_cols_list: tuple[int, ...]
    c_lo_list: tuple[float, ...]
    trials_list: tuple[int, ...]
    base_seed: int
    checks: frozenset = DEFAULT_CHECKS
    c_4: float = 2.0
    force: bool = False

    def __post_init__(self):
        object.__setattr__(self, "n_rows_list", tuple(self.n_rows_list))
        object.__setattr__(self, "n_cols_list", tuple(self.n_cols_list))
        object.__setattr__(self, "c_lo_list", tuple(self.c_lo_list))
        object.__setattr__(self, "trials_list", tuple(self.trials_list))
        object.__setattr__(self, "checks", frozenset(self.checks))
        if not (self.n_rows_list and self.n_cols_list and self.c_lo_list
                and self.trials_list):
            raise ValueError("every sweep list must be nonempty")


def _fmt_field(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _cell_rows(cell_id: int, config: ExperimentConfig,
               stats: TrialStats) -> list[list[str]]:
    plan = stats.plan
    prefix = [cell_id, config.n_rows, config.n_cols,
              plan.delta, plan.p, plan.big_r]
    rows = []
    for r in stats.records:
        rows.append([_fmt_field(v) for v in prefix + [
            r.trial, r.seed, r.failure_found, r.witness_j, r.clean_col1,
            r.spike_event_all_rows, r.l0_unique, r.phi2]])

    def freq(name):
        st = stats.per_check.get(name)
        return None if st is None else st.frequency

    phi_vals = [r.phi2 for r in stats.records if r.phi2 is not None]
    phi_mean = sum(phi_vals) / len(phi_vals) if phi_vals else None
    rows.append([_fmt_field(v) for v in prefix + [
        -1, None, freq(CHECK_FAILURE), None, freq(CHECK_CLEAN),
        freq(CHECK_SPIKE), freq(CHECK_L0), phi_mean]])
    return rows


def write_csv(out_path, cells) -> None:
    """cells: iterable of (config, stats) pairs, one CSV block per cell."""
    rows = [list(CSV_HEADER)]
    for cell_id, (config, stats) in enumerate(cells):
        rows.extend(_cell_rows(cell_id, config, stats))
    with open(out_path, "w", newline="") as f:
        csv.writer(f).writerows(rows)


def sweep(grid: SweepGrid, out_path, threads: int = 1):
    """Cartesian sweep over (N, n, c_lo, trials); returns the per-cell stats
    and writes the CSV (schema CSV_HEADER) to out_path."""
    results = []
    cells = itertools.product(grid.n_rows_list, grid.n_cols_list,
                              grid.c_lo_list, grid.trials_list)
    for n_rows, n_cols, c_lo, trials in cells:
        config = ExperimentConfig(n_rows, n_cols, trials, grid.base_seed,
                                  grid.checks & _CELL_CHECKS or DEFAULT_CHECKS,
                                  c_lo=c_lo, c_4=grid.c_4, force=grid.force)
        results.append((config, run_cell(config, threads)))
    write_csv(out_path, results)
    return results
