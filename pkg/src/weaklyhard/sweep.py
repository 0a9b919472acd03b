"""Sampling-period sweep: scheduling, control design, stability and cost per period."""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .control import discretize, design_gain
from .numerics import DomainError, NumericError
from .perfsim import evaluate_performance
from .scheduler import (
    DivergenceError,
    delay_bound,
    mine_mK,
    place_controller_priority,
    steady_state_pattern,
)
from .stability import verify
from .taskmodel import HyperPeriodOverflow, assign_rm_priorities

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "T_c_ms", "feasible", "m_min", "K", "p_hat", "N_c", "hard_feasible",
    "ratio", "gain_norm", "stable", "max_rho", "mean_Jc",
)


@dataclass
class SweepRow:
    T_c_ms: int
    feasible: bool
    K: int
    m_min: int = None
    p_hat: int = None
    N_c: int = None
    hard_feasible: bool = None
    ratio: float = None
    gain_norm: float = None
    stable: bool = None
    max_rho: float = None
    mean_Jc: float = None
    error: str = None  # per-period failure, not written to CSV


@dataclass
class PeriodAnalysis:
    row: SweepRow
    placement: object = None
    steady: object = None
    gain: object = None
    verdict: object = None


_RECOVERABLE = (DivergenceError, NumericError, DomainError, HyperPeriodOverflow)


def analyze_period(cfg, period):
    """Run the whole pipeline for one controller period (ms)."""
    row = SweepRow(period, False, cfg.K)
    out = PeriodAnalysis(row)
    regular = assign_rm_priorities(cfg.tasks)
    ctrl = cfg.controller.task(period)
    try:
        out.placement = placement = place_controller_priority(regular, ctrl)
        if not placement.feasible:
            row.error = f"regular task {placement.violated} misses even below the controller"
            return out
        row.feasible = True

        out.steady = ss = steady_state_pattern(placement.taskset)
        row.m_min = mine_mK(ss.pattern, cfg.K)
        row.N_c = ss.delays.n_jobs
        row.p_hat = delay_bound(ss.worst_response, period)
        row.hard_feasible = row.m_min == 0

        pdt = discretize(cfg.plant, period / 1000.0)
        out.gain = gain = design_gain(
            pdt, cfg.plant.q_template(), cfg.ratio_range, cfg.norm_bound
        )
        row.gain_norm = gain.achieved_norm
        if not gain.feasible:
            row.stable = False
            row.error = "no weight ratio meets the gain norm bound"
            return out
        row.ratio = gain.ratio

        out.verdict = verdict = verify(pdt, gain.F, ss.delays)
        row.stable = verdict.stable
        row.max_rho = verdict.max_spectral_radius
        row.mean_Jc = evaluate_performance(
            cfg.plant, period / 1000.0, gain.F, ss.delays, cfg.sim
        )
    except _RECOVERABLE as exc:
        log.warning("T_c = %d ms: %s", period, exc)
        row.error = f"{type(exc).__name__}: {exc}"
        if isinstance(exc, DivergenceError) and row.feasible:
            # Controller backlog grows without bound: outputs fall ever later.
            row.stable = False
    return out


def _row(args):
    cfg, period = args
    return analyze_period(cfg, period).row


def run_sweep(cfg, periods=None, workers=1):
    """One row per period, ordered by period whatever the worker count."""
    periods = sorted(cfg.periods if periods is None else periods)
    jobs = [(cfg, p) for p in periods]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row, jobs, chunksize=4))
    else:
        rows = [_row(j) for j in jobs]
    return sorted(rows, key=lambda r: r.T_c_ms)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return "%.9g" % v


def format_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_csv(rows, path):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(format_csv(rows))


def read_csv(path):
    """Parse a sweep CSV back into rows (empty cells become None)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            vals = {}
            for k, v in rec.items():
                if v == "":
                    vals[k] = None
                elif v in ("true", "false"):
                    vals[k] = v == "true"
                elif k in ("T_c_ms", "m_min", "K", "p_hat", "N_c"):
                    vals[k] = int(v)
                else:
                    vals[k] = float(v)
            out.append(SweepRow(**vals))
    return out
