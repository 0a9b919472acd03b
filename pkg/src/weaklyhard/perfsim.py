"""Continuous-time simulation of the plant under LET actuation and cost evaluation.

The plant input is piecewise constant between sampling instants, so each
substep is advanced with the exact zero-order-hold transition; the substep
only sets the resolution of the cost integral.
"""

from dataclasses import dataclass, field

import numpy as np

from .control import PlantCT
from .numerics import mat_exp

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 10.0  # seconds
    substep: float = 0.001  # seconds
    n_samples: int = 100
    rng_seed: int = 0
    x0_low: tuple = (-0.3, -0.3, 0.0, 0.0)
    x0_high: tuple = (0.3, 0.3, 0.0, 0.0)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if not self.horizon > 0 or not self.substep > 0:
            raise ValueError("horizon and substep must be positive")
        if len(self.x0_low) != len(self.x0_high):
            raise ValueError("x0 bounds differ in length")
        if any(lo > hi for lo, hi in zip(self.x0_low, self.x0_high)):
            raise ValueError("x0_low exceeds x0_high")


@dataclass
class Trajectory:
    t: np.ndarray  # (T,)
    x: np.ndarray  # (T, n)
    u: np.ndarray  # (T, m) input applied on [t_i, t_{i+1})
    xi: np.ndarray = field(default=None)  # (K+1, n + p_hat m) at sampling instants
    diverged: bool = False


def _substeps(period, substep):
    steps = round(period / substep)
    if steps < 1 or abs(steps * substep - period) > 1e-9 * period:
        raise ValueError(f"substep {substep} s does not divide period {period} s")
    return steps


def _intra_period_maps(plant, period, steps):
    """E[j] = exp(A j h) and G[j] = int_0^{jh} exp(A s) B ds for j = 0..steps."""
    n, m = plant.n, plant.m
    h = period / steps
    M = np.zeros((n + m, n + m))
    M[:n, :n] = plant.A
    M[:n, n:] = plant.B
    step = mat_exp(M * h)
    maps = np.empty((steps + 1, n + m, n + m))
    maps[0] = np.eye(n + m)
    for j in range(1, steps + 1):
        maps[j] = step @ maps[j - 1]
    return maps[:, :n, :n].copy(), maps[:, :n, n:].copy()


def _run(plant, period, F, p_seq, x0, k0, horizon, substep, on_chunk):
    """Batched closed-loop run; ``x0`` is (S, n), ``k0`` is (S,).

    Calls ``on_chunk(t, X, U, alive)`` once per sampling interval with the
    substep grid of that interval (endpoints included), states X of shape
    (S, len(t), n) and the applied inputs U (S, m).  Returns the augmented
    states at every sampling instant inside the horizon, shape
    (S, K+1, n + p_hat m), and a divergence mask.
    """
    n, m = plant.n, plant.m
    F = np.atleast_2d(np.asarray(F, dtype=float))
    p_seq = np.asarray(p_seq, dtype=int)
    N = len(p_seq)
    p_hat = int(p_seq.max())
    S = x0.shape[0]
    steps = _substeps(period, substep)
    E, G = _intra_period_maps(plant, period, steps)
    total = round(horizon / substep)
    n_periods = -(-total // steps)

    x = x0.astype(float).copy()
    hist = np.zeros((S, p_hat, m))  # hist[:, i] = u[k-1-i]
    diverged = np.zeros(S, dtype=bool)
    xis = np.empty((S, n_periods + 1, n + p_hat * m))
    rows = np.arange(S)
    for k in range(n_periods):
        xis[:, k, :n] = x
        xis[:, k, n:] = hist.reshape(S, -1)
        u_new = -(np.concatenate([x, hist[:, 0]], axis=1) @ F.T)
        p = p_seq[(k0 + k) % N]
        u_app = hist[rows, p - 1]
        j_end = min(steps, total - k * steps)
        # (S, j, n): E_j x + G_j u
        X = np.einsum("jab,sb->sja", E[: j_end + 1], x) + np.einsum(
            "jab,sb->sja", G[: j_end + 1], u_app
        )
        with np.errstate(invalid="ignore"):
            blown = ~np.all(np.abs(X) < DIVERGENCE_NORM, axis=(1, 2))
        diverged |= blown
        X[diverged] = np.nan
        t = (k * steps + np.arange(j_end + 1)) * substep
        on_chunk(t, X, u_app, ~diverged)
        x = X[:, steps] if j_end == steps else X[:, -1]
        hist = np.concatenate([u_new[:, None, :], hist[:, :-1]], axis=1)
        hist[diverged] = np.nan
    if total % steps == 0:
        xis[:, n_periods, :n] = x
        xis[:, n_periods, n:] = hist.reshape(S, -1)
        return xis, diverged
    return xis[:, :n_periods], diverged


def simulate_closed_loop(plant, period, F, delays, x0, k0=0, cfg=SimConfig()):
    """Single trajectory from disturbance ``x0`` arriving at hyper-period phase ``k0``.

    At each sampling instant the controller computes u[k] = -F [x[k]; u[k-1]]
    from its own previous command; during the following interval the plant
    receives u[k - p] where p is the delay factor at that phase.  Input
    history before the disturbance is zero.
    """
    if not isinstance(plant, PlantCT):
        raise TypeError("plant must be a PlantCT")
    p_seq = delays.p if hasattr(delays, "p") else delays
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    ts, xs, us = [], [], []

    def collect(t, X, U, alive):
        # Chunks share endpoints; keep the first copy.
        start = 1 if ts else 0
        ts.append(t[start:])
        xs.append(X[0, start:])
        us.append(np.repeat(U[0][None, :], len(t) - start, axis=0))

    xis, div = _run(plant, period, F, p_seq, x0, np.array([k0]), cfg.horizon, cfg.substep, collect)
    return Trajectory(
        np.concatenate(ts), np.concatenate(xs), np.concatenate(us), xis[0], bool(div[0])
    )


def sampled_states(plant, period, F, delays, x0, k0, horizon):
    """Augmented states at every sampling instant up to ``horizon`` seconds.

    Batched over the rows of ``x0``; returns (states of shape
    (S, K+1, n + p_hat m), divergence mask).  Only sampling instants are
    computed, so this is much cheaper than a full trajectory.
    """
    p_seq = delays.p if hasattr(delays, "p") else delays
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    k0 = np.broadcast_to(np.asarray(k0, dtype=int), (x0.shape[0],))
    steps = int(np.floor(horizon / period + 1e-9))
    return _run(plant, period, F, p_seq, x0, k0, steps * period, period, lambda *a: None)


def control_cost(tr, weighted):
    """Trapezoidal integral of the squared weighted states; +inf if diverged."""
    if tr.diverged:
        return float("inf")
    sq = np.sum(tr.x[:, list(weighted)] ** 2, axis=1)
    return float(np.trapezoid(sq, tr.t))


def draw_disturbances(cfg, n_jobs, n_states):
    """(x0, k0) per sample, each sample from its own spawned seed.

    Sample i uses ``SeedSequence(rng_seed).spawn(n_samples)[i]``: one uniform
    draw per state within the configured bounds, then k0 uniform in [0, n_jobs).
    The result does not depend on how samples are later batched.
    """
    lo = np.asarray(cfg.x0_low, dtype=float)
    hi = np.asarray(cfg.x0_high, dtype=float)
    if lo.shape != (n_states,):
        raise ValueError(f"x0 bounds have {lo.size} entries, plant has {n_states} states")
    x0 = np.empty((cfg.n_samples, n_states))
    k0 = np.empty(cfg.n_samples, dtype=int)
    for i, ss in enumerate(np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_samples)):
        rng = np.random.default_rng(ss)
        x0[i] = rng.uniform(lo, hi)
        k0[i] = rng.integers(n_jobs)
    return x0, k0


def sample_costs(plant, period, F, delays, x0, k0, cfg=SimConfig()):
    """Cost of each (x0, k0) sample, computed in one batch."""
    p_seq = delays.p if hasattr(delays, "p") else delays
    w = list(plant.weighted)
    acc = np.zeros(x0.shape[0])

    def accumulate(t, X, U, alive):
        sq = np.sum(X[:, :, w] ** 2, axis=2)
        dt = np.diff(t)
        acc[:] += np.sum(0.5 * (sq[:, 1:] + sq[:, :-1]) * dt, axis=1)

    _, div = _run(plant, period, F, p_seq, x0, k0, cfg.horizon, cfg.substep, accumulate)
    acc[div] = np.inf
    return acc


def evaluate_performance(plant, period, F, delays, cfg=SimConfig()):
    """Mean cost over ``cfg.n_samples`` seeded disturbances."""
    p_seq = delays.p if hasattr(delays, "p") else delays
    x0, k0 = draw_disturbances(cfg, len(p_seq), plant.n)
    costs = sample_costs(plant, period, F, delays, x0, k0, cfg)
    if np.any(np.isinf(costs)):
        return float("inf")
    return float(np.mean(costs))


def write_trajectory_csv(tr, path, labels=None):
    """Columns t, one per state, then one per applied input."""
    n, m = tr.x.shape[1], tr.u.shape[1]
    labels = list(labels or (f"x{i}" for i in range(n)))
    header = ["t"] + labels + [f"u{j}" for j in range(m)]
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.column_stack([tr.t, tr.x, tr.u]):
            fh.write(",".join("%.9g" % v for v in row) + "\n")
