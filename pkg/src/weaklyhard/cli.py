"""Command-line entry point.

    weaklyhard sweep    [--config F] [--out F] [--seed N] [--range A:B[:S]] [--norm-bound X] [--workers N]
    weaklyhard analyze  [--config F] --period T [--trajectory F]
    weaklyhard schedule [--config F] --period T [--out F] [--hyper-periods N]
    weaklyhard check    [--config F] [--period T]

Without ``--config`` the bundled reference study is used.  Exit status is 0 on
success, 2 on configuration or I/O errors and 1 when ``check`` finds the
study unschedulable at every period.
"""

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config, reference_config_path
from .perfsim import draw_disturbances, simulate_closed_loop, write_trajectory_csv
from .scheduler import simulate_schedule, write_trace_csv
from .sweep import analyze_period, emit_csv, format_csv, run_sweep
from .taskmodel import assign_rm_priorities, hyper_period, utilization

log = logging.getLogger("weaklyhard")


def _range(text):
    try:
        parts = [int(x) for x in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B or A:B:S, got {text!r}") from None
    if len(parts) not in (2, 3):
        raise argparse.ArgumentTypeError(f"expected A:B or A:B:S, got {text!r}")
    return tuple(parts)


def _load(args):
    cfg = load_config(args.config or reference_config_path())
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "range", None):
        over["period_min"], over["period_max"] = args.range[:2]
        if len(args.range) == 3:
            over["period_step"] = args.range[2]
    if getattr(args, "norm_bound", None) is not None:
        over["norm_bound"] = args.norm_bound
    if over:
        try:
            cfg = cfg.with_overrides(**over)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def cmd_sweep(args):
    cfg = _load(args)
    rows = run_sweep(cfg, workers=args.workers)
    out = args.out or cfg.output
    if out in (None, "-"):
        sys.stdout.write(format_csv(rows))
    else:
        emit_csv(rows, out)
        stable = [r.T_c_ms for r in rows if r.stable]
        log.info("%d periods written to %s, %d stable", len(rows), out, len(stable))
    return 0


def _fmt_bits(bits):
    return "".join("x" if b else "." for b in bits)


def cmd_analyze(args):
    cfg = _load(args)
    res = analyze_period(cfg, args.period)
    row = res.row
    p = print
    p(f"T_c = {args.period} ms, controller C_c = {float(cfg.controller.wcet):g} ms")
    if res.placement is None or not res.placement.feasible:
        p(f"placement: infeasible ({row.error})")
        return 0
    order = [t.id for t in res.placement.taskset.by_priority()]
    p(f"placement: {res.placement.position} regular task(s) above the controller")
    p(f"priority order: {' > '.join(order)}")
    ss = res.steady
    if ss is None:
        p(f"steady state: {row.error}")
        return 0
    p(f"hyper-period H_c = {ss.hyper_period} ms, N_c = {row.N_c} jobs, "
      f"steady after {ss.transient_windows} window(s)")
    p(f"miss pattern (x = miss): {_fmt_bits(ss.pattern.bits)}")
    p(f"delay factors p: {' '.join(map(str, ss.delays.p))}")
    p(f"worst response R_c = {ss.worst_response / 1000:g} ms, p_hat = {row.p_hat}")
    p(f"(m, K) = ({row.m_min}, {row.K}); hard feasible: {row.hard_feasible}")
    g = res.gain
    if g is None:
        p(f"gain design: {row.error}")
        return 0
    if not g.feasible:
        p(f"gain design: no ratio meets ||F|| <= {g.norm_bound:g} (smallest {g.achieved_norm:.4g})")
        return 0
    p(f"gain: ratio {g.ratio:.6g}, ||F||_2 = {g.achieved_norm:.6g} (bound {g.norm_bound:g})")
    p("F = " + np.array2string(g.F, precision=5, max_line_width=120))
    v = res.verdict
    if v is not None:
        p(f"stability: {'stable' if v.stable else 'UNSTABLE'}, max spectral radius "
          f"{v.max_spectral_radius:.6g} at offset k = {v.worst_k}")
    if row.mean_Jc is not None:
        p(f"mean J_c over {cfg.sim.n_samples} samples: {row.mean_Jc:.6g}")
    if args.trajectory:
        x0, k0 = draw_disturbances(cfg.sim, row.N_c, cfg.plant.n)
        tr = simulate_closed_loop(
            cfg.plant, args.period / 1000.0, g.F, ss.delays, x0[0], int(k0[0]), cfg.sim
        )
        write_trajectory_csv(tr, args.trajectory, cfg.plant.labels)
        p(f"trajectory of sample 0 written to {args.trajectory}")
    return 0


def cmd_schedule(args):
    cfg = _load(args)
    res = analyze_period(cfg, args.period)
    if res.placement is None or not res.placement.feasible:
        print(f"T_c = {args.period} ms: no feasible controller placement", file=sys.stderr)
        return 1
    ts = res.placement.taskset
    H = hyper_period(ts, max(t.priority for t in ts))
    recs = simulate_schedule(ts.by_priority(), args.hyper_periods * H)
    recs.sort(key=lambda r: (r.release, r.task))
    write_trace_csv(recs, args.out if args.out not in (None, "-") else sys.stdout)
    if args.out not in (None, "-"):
        log.info("%d jobs over %d ms written to %s", len(recs), args.hyper_periods * H, args.out)
    return 0


def cmd_check(args):
    cfg = _load(args)
    print(f"sources: {', '.join(cfg.sources)}")
    print(f"regular tasks: {len(cfg.tasks)}")
    for t in assign_rm_priorities(cfg.tasks):
        print(f"  {t.id:<10} T = {t.period:>5} ms  C = {float(t.wcet):>8g} ms  D = {t.deadline:>5} ms  "
              f"U = {float(t.utilization):.4f}")
    u = utilization(cfg.tasks)
    c = cfg.controller.wcet
    print(f"regular utilization: {float(u):.4f}")
    print(f"controller {cfg.controller.id}: C_c = {float(c):g} ms, total utilization "
          f"{float(u):.4f} + {float(c):g}/T_c")
    periods = [args.period] if args.period else list(cfg.periods)
    for T in periods if args.period else (periods[0], periods[-1]):
        print(f"  at T_c = {T} ms: {float(u + c / T):.4f}")
    print(f"plant: {cfg.plant.n} states ({', '.join(cfg.plant.labels)}), {cfg.plant.m} input(s); "
          f"cost on {', '.join(cfg.plant.labels[i] for i in cfg.plant.weighted)}")
    print(f"sweep: T_c {cfg.period_min}..{cfg.period_max} step {cfg.period_step} "
          f"({len(cfg.periods)} periods), K = {cfg.K}, ||F|| <= {cfg.norm_bound:g}")
    if any(u + c / T > 1 for T in periods):
        over = [T for T in periods if u + c / T > 1]
        print(f"warning: utilization exceeds 1 at {len(over)} period(s), up to T_c = {max(over)} ms")
    if all(u + c / T > 1 for T in periods):
        return 1
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="weaklyhard", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="study TOML file (default: bundled reference)")
        return p

    p = common(sub.add_parser("sweep", help="run the sampling-period sweep and write CSV"))
    p.add_argument("--out", help="CSV path, '-' for stdout (default: sweep.output of the config)")
    p.add_argument("--seed", type=int, help="override sim.seed")
    p.add_argument("--range", type=_range, help="period range A:B[:S] in ms")
    p.add_argument("--norm-bound", type=float, help="override sweep.norm_bound")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("analyze", help="detailed report for one controller period"))
    p.add_argument("--period", type=int, required=True, help="controller period in ms")
    p.add_argument("--seed", type=int, help="override sim.seed")
    p.add_argument("--norm-bound", type=float, help="override sweep.norm_bound")
    p.add_argument("--trajectory", help="write one simulated trajectory as CSV")
    p.set_defaults(func=cmd_analyze)

    p = common(sub.add_parser("schedule", help="dump the job trace for one controller period"))
    p.add_argument("--period", type=int, required=True, help="controller period in ms")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--hyper-periods", type=int, default=1, help="length of the trace (default 1)")
    p.set_defaults(func=cmd_schedule)

    p = common(sub.add_parser("check", help="validate a config and report utilization"))
    p.add_argument("--period", type=int, help="report utilization at this controller period only")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
