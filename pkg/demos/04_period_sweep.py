"""Sweep the controller period and summarize the design space.

Runs the reference study every 5 ms (the command-line ``sweep`` does every
1 ms) and prints one line per period: the tightest (m, 20) constraint, the
stability verdict and the mean cost.  Three regions show up: dense misses
and instability at short periods, a stable band where the best cost needs
a weakly-hard constraint, and a hard-real-time tail that ends where the
gain bound can no longer be met.
"""

import sys

from weaklyhard.config import load_config, reference_config_path
from weaklyhard.sweep import run_sweep

cfg = load_config(sys.argv[1] if len(sys.argv) > 1 else reference_config_path())
rows = run_sweep(cfg, periods=range(cfg.period_min, cfg.period_max + 1, 5))

print(f"{'T_c':>4} {'m':>3} {'p_hat':>5} {'stable':>7} {'J_c':>12}")
for r in rows:
    if not r.feasible:
        print(f"{r.T_c_ms:>4}   placement infeasible")
        continue
    verdict = "-" if r.stable is None else ("yes" if r.stable else "no")
    cost = "" if r.mean_Jc is None else f"{r.mean_Jc:12.4g}"
    print(f"{r.T_c_ms:>4} {r.m_min:>3} {r.p_hat:>5} {verdict:>7} {cost}")

stable = [r for r in rows if r.stable]
hard = [r.T_c_ms for r in stable if r.hard_feasible]
best = min(stable, key=lambda r: r.mean_Jc)
print()
print(f"stable periods: {len(stable)} of {len(rows)}, largest {max(r.T_c_ms for r in stable)} ms")
print(f"stable with zero misses: {min(hard)}..{max(hard)} ms")
print(f"lowest cost {best.mean_Jc:.4g} at {best.T_c_ms} ms under ({best.m_min}, {best.K})")
