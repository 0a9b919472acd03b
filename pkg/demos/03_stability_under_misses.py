"""Deadline misses turn into input delays; the hyper-period test catches it.

Two controller periods on the reference task set are compared.  At 132 ms
the controller misses some deadlines but the switched loop is still stable.
At 75 ms the misses are dense and the same design goes unstable, even
though the miss-free loop phi_1 is the same well-damped design.
"""

import numpy as np

from weaklyhard.config import load_config, reference_config_path
from weaklyhard.control import discretize
from weaklyhard.perfsim import draw_disturbances, sampled_states
from weaklyhard.stability import build_phis
from weaklyhard.numerics import spectral_radius
from weaklyhard.sweep import analyze_period

cfg = load_config(reference_config_path())

for T in (132, 75):
    res = analyze_period(cfg, T)
    row, ss = res.row, res.steady
    print(f"=== T_c = {T} ms ===")
    print(f"controller below {res.placement.position} regular task(s); "
          f"N_c = {row.N_c} jobs per {ss.hyper_period} ms hyper-period")
    print("pattern:", "".join("x" if b else "." for b in ss.pattern.bits))
    print(f"(m, K) = ({row.m_min}, {row.K}), p_hat = {row.p_hat}")

    acl = build_phis(discretize(cfg.plant, T / 1000), res.gain.F, row.p_hat)
    for p in range(1, row.p_hat + 1):
        print(f"  rho(phi_{p}) = {spectral_radius(acl.phi(p)):.4f}")
    print(f"max spectral radius over Phi_k: {row.max_rho:.4g} -> "
          f"{'stable' if row.stable else 'unstable'}")

    x0, k0 = draw_disturbances(cfg.sim, row.N_c, cfg.plant.n)
    xs, div = sampled_states(cfg.plant, T / 1000, res.gain.F, ss.delays, x0[:3], k0[:3], 10.0)
    with np.errstate(over="ignore", invalid="ignore"):
        norms = np.linalg.norm(xs, axis=2)
    for i in range(3):
        marks = [norms[i, int(t / (T / 1000))] for t in (0, 2, 5, 9.9)]
        print(f"  sample {i}: |xi| at 0, 2, 5, 10 s = " + ", ".join(f"{v:.3g}" for v in marks))
    print(f"  mean cost J_c = {row.mean_Jc:.4g}\n")
