"""Plant discretization, LET augmentation and norm-bounded LQR design."""

from dataclasses import dataclass, field

import numpy as np

from .numerics import DimensionError, lqr_gain, lqr_gains_batch, mat_exp

DEFAULT_RATIO_RANGE = (1e-4, 100.0)
GRID_POINTS = 400


@dataclass(frozen=True)
class PlantCT:
    """Continuous LTI plant dx/dt = A x + B u.

    ``weighted`` lists the state indices that enter both the LQR state weight
    and the performance cost.
    """

    A: np.ndarray
    B: np.ndarray
    labels: tuple = ()
    weighted: tuple = ()

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0] or B.shape[1] < 1:
            raise DimensionError(f"B must have {A.shape[0]} rows, got {B.shape}")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        labels = tuple(self.labels) or tuple(f"x{i}" for i in range(A.shape[0]))
        if len(labels) != A.shape[0]:
            raise DimensionError(f"{len(labels)} labels for {A.shape[0]} states")
        object.__setattr__(self, "labels", labels)
        weighted = tuple(int(i) for i in self.weighted)
        if any(not 0 <= i < A.shape[0] for i in weighted):
            raise DimensionError(f"weighted state index out of range: {weighted}")
        object.__setattr__(self, "weighted", weighted)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def q_template(self):
        q = np.zeros(self.n)
        q[list(self.weighted)] = 1.0
        return q


@dataclass(frozen=True)
class PlantDT:
    period: float  # seconds
    A: np.ndarray
    B: np.ndarray

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass(frozen=True)
class GainDesign:
    """Result of the weight-ratio search.

    ``F`` acts on the LET state [x; u_prev]; it is ``None`` when no ratio in
    the range meets the norm bound, in which case ``achieved_norm`` is the
    smallest norm seen on the scan.
    """

    F: np.ndarray
    ratio: float
    norm_bound: float
    achieved_norm: float
    norm: str = field(default="2")

    @property
    def feasible(self):
        return self.F is not None


def furuta_plant():
    """Linearized Furuta pendulum, states (arm angle, pendulum angle, rates)."""
    A = [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 1.6907, -2.9968, -0.0048],
        [0.0, 21.9176, -3.0831, 0.0626],
    ]
    B = [[0.0], [0.0], [3.8998], [4.0122]]
    return PlantCT(A, B, ("theta_r", "theta_p", "dtheta_r", "dtheta_p"), (0, 1))


def discretize(plant, period):
    """Zero-order-hold discretization at ``period`` seconds.

    Both matrices come from one exponential of [[A, B], [0, 0]] * period,
    whose top-right block is the input integral.
    """
    if not period > 0:
        raise ValueError(f"sampling period must be positive, got {period}")
    n, m = plant.n, plant.m
    M = np.zeros((n + m, n + m))
    M[:n, :n] = plant.A
    M[:n, n:] = plant.B
    E = mat_exp(M * period)
    return PlantDT(float(period), E[:n, :n].copy(), E[:n, n:].copy())


def augment_let(pdt):
    """(A_z, B_z) for the LET state z[k] = [x[k]; u[k-1]]."""
    n, m = pdt.n, pdt.m
    Az = np.zeros((n + m, n + m))
    Az[:n, :n] = pdt.A
    Az[:n, n:] = pdt.B
    Bz = np.zeros((n + m, m))
    Bz[n:, :] = np.eye(m)
    return Az, Bz


def gain_norm(F):
    return float(np.linalg.norm(F, 2))


def _weights(q_template, m, ratio):
    q = np.concatenate([np.asarray(q_template, dtype=float) * ratio, np.zeros(m)])
    return np.diag(q)


def design_gain(
    pdt,
    q_template,
    ratio_range=DEFAULT_RATIO_RANGE,
    norm_bound=35.0,
    grid_points=GRID_POINTS,
):
    """LQR gain at the largest state/input weight ratio whose norm stays in bound.

    R is fixed to the identity; only the ratio matters since scaling Q and R
    together leaves the gain unchanged.  A log-spaced grid over
    ``ratio_range`` locates the largest admissible grid ratio without
    assuming monotonicity, then bisection on log-ratio pins the boundary
    between it and the next grid point.
    """
    lo, hi = map(float, ratio_range)
    if not 0 < lo <= hi:
        raise ValueError(f"bad ratio range {ratio_range}")
    if len(q_template) != pdt.n:
        raise DimensionError(f"q_template has {len(q_template)} entries, plant has {pdt.n} states")
    Az, Bz = augment_let(pdt)
    m = pdt.m
    R = np.eye(m)

    grid = np.logspace(np.log10(lo), np.log10(hi), grid_points) if hi > lo else np.array([lo])
    grid[0], grid[-1] = lo, hi
    Qs = np.stack([_weights(q_template, m, r) for r in grid])
    Fs, _ = lqr_gains_batch(Az, Bz, Qs, R)
    norms = np.linalg.norm(Fs, 2, axis=(1, 2))
    ok = np.flatnonzero(norms <= norm_bound)
    if ok.size == 0:
        return GainDesign(None, None, float(norm_bound), float(norms.min()))

    j = int(ok[-1])
    if j == len(grid) - 1:
        F = lqr_gain(Az, Bz, _weights(q_template, m, hi), R)
        return GainDesign(F, hi, float(norm_bound), gain_norm(F))

    a, b = np.log10(grid[j]), np.log10(grid[j + 1])
    F_a = lqr_gain(Az, Bz, _weights(q_template, m, grid[j]), R)
    while b - a > 1e-12:
        mid = 0.5 * (a + b)
        F_mid = lqr_gain(Az, Bz, _weights(q_template, m, 10.0**mid), R)
        if gain_norm(F_mid) <= norm_bound:
            a, F_a = mid, F_mid
        else:
            b = mid
    return GainDesign(F_a, float(10.0**a), float(norm_bound), gain_norm(F_a))
