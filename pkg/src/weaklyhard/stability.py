"""Closed-loop stability of an LET controller under a periodic delay pattern.

The state xi[k] = [x[k]; u[k-1]; ...; u[k-p_hat]] evolves as
xi[k+1] = phi_{p_k} xi[k], where phi_p feeds the plant with the input that is
``p`` samples old.  Over one hyper-period of N_c samples the evolution is the
product Phi_k of N_c such factors; the loop is asymptotically stable when
every Phi_k has spectral radius strictly below one.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import DimensionError, eigenvalues

DEFAULT_TOL_MARGIN = 1e-9


@dataclass(frozen=True)
class AugmentedClosedLoop:
    p_hat: int
    phis: tuple  # phis[p - 1] is the factor for delay p
    n: int
    m: int

    def phi(self, p):
        if not 1 <= p <= self.p_hat:
            raise ValueError(f"delay {p} outside 1..{self.p_hat}")
        return self.phis[p - 1]


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    max_spectral_radius: float
    worst_k: int
    radii: tuple = ()


def build_phis(pdt, F, p_hat):
    """One closed-loop factor per possible delay 1..p_hat."""
    A, B = pdt.A, pdt.B
    n, m = B.shape
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if F.shape != (m, n + m):
        raise DimensionError(f"F must be {(m, n + m)}, got {F.shape}")
    if p_hat < 1:
        raise ValueError("p_hat must be at least 1")
    d = n + p_hat * m

    base = np.zeros((d, d))
    base[:n, :n] = A
    # Shift register: slot i+1 <- slot i.
    for i in range(1, p_hat):
        base[n + i * m : n + (i + 1) * m, n + (i - 1) * m : n + i * m] = np.eye(m)
    # u[k] = -F [x[k]; u[k-1]] lands in the first slot.
    base[n : n + m, : n + m] = -F

    phis = []
    for p in range(1, p_hat + 1):
        phi = base.copy()
        phi[:n, n + (p - 1) * m : n + p * m] = B
        phi.setflags(write=False)
        phis.append(phi)
    return AugmentedClosedLoop(p_hat, tuple(phis), n, m)


def nominal_closed_loop(pdt, F):
    """A_z - B_z F, the loop with every deadline met."""
    return build_phis(pdt, F, 1).phis[0]


def hyperperiod_products(acl, delays):
    """Phi_k for every starting offset k of the periodic delay sequence.

    ``Phi_k = phi[p[k+N-1]] ... phi[p[k+1]] phi[p[k]]`` with indices taken
    modulo N, so Phi_k advances the state by one hyper-period starting from
    the sample whose delay factor is ``p[k]``.
    """
    p = list(delays.p if hasattr(delays, "p") else delays)
    if not p:
        raise ValueError("empty delay sequence")
    if max(p) > acl.p_hat or min(p) < 1:
        raise ValueError(f"delays {sorted(set(p))} exceed p_hat = {acl.p_hat}")
    N = len(p)
    steps = [acl.phis[q - 1] for q in p]
    d = steps[0].shape[0]

    # Phi_k = (phi_{k-1} ... phi_0) (phi_{N-1} ... phi_k): prefix times suffix.
    with np.errstate(over="ignore", invalid="ignore"):
        prefix = [np.eye(d)]
        for i in range(N - 1):
            prefix.append(steps[i] @ prefix[-1])
        suffix = [None] * N
        acc = np.eye(d)
        for i in range(N - 1, -1, -1):
            acc = acc @ steps[i]
            suffix[i] = acc
        return [prefix[k] @ suffix[k] for k in range(N)]


def check_stability(products, tol_margin=DEFAULT_TOL_MARGIN):
    """Stable iff every product has spectral radius below ``1 - tol_margin``.

    A product that overflowed is treated as having infinite radius.
    """
    if len(products) == 0:
        raise ValueError("no products to check")
    radii = []
    for P in products:
        if not np.all(np.isfinite(P)):
            radii.append(float("inf"))
        else:
            radii.append(float(np.max(np.abs(eigenvalues(P)))))
    k = int(np.argmax(radii))
    rho = radii[k]
    return StabilityVerdict(rho < 1.0 - tol_margin, rho, k, tuple(radii))


def verify(pdt, F, delays, tol_margin=DEFAULT_TOL_MARGIN):
    """Build the factors for ``delays`` and apply the hyper-period criterion."""
    p_hat = max(delays.p if hasattr(delays, "p") else delays)
    acl = build_phis(pdt, F, p_hat)
    return check_stability(hyperperiod_products(acl, delays), tol_margin)
