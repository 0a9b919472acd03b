"""Dense matrix kernels: matrix exponential, spectra and the discrete Riccati equation.

Everything here works on small (n <= ~10) real ``numpy`` arrays and returns new
arrays; inputs are never modified.
"""

import numpy as np

__all__ = [
    "DimensionError",
    "DomainError",
    "NumericError",
    "mat_exp",
    "eigenvalues",
    "spectral_radius",
    "solve_dare",
    "lqr_gain",
    "dare_residual",
    "lqr_gains_batch",
]


class DimensionError(ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class DomainError(ValueError):
    """Input values lie outside the domain of the operation."""


class NumericError(ArithmeticError):
    """An iterative kernel failed to converge."""


def _as_matrix(M, name="M"):
    M = np.asarray(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


def _square(M, name="M"):
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


# Taylor terms used after scaling; with ||M/2^s||_1 <= 1/2 the truncation
# error is below 0.5**19 / 19! ~ 1e-23.
_TAYLOR_TERMS = 18


def mat_exp(M):
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    M = _square(M)
    n = M.shape[0]
    norm = np.linalg.norm(M, 1)
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    X = M / (2.0**s)

    term = np.eye(n)
    E = np.eye(n)
    for k in range(1, _TAYLOR_TERMS + 1):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def eigenvalues(M):
    """All eigenvalues of a square matrix (complex, with multiplicity).

    Backed by LAPACK's Hessenberg/shifted-QR driver.
    """
    M = _square(M)
    try:
        return np.linalg.eigvals(M).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigenvalue iteration did not converge for {M.shape} matrix "
            f"(1-norm {np.linalg.norm(M, 1):.3e}): {exc}"
        ) from exc


def spectral_radius(M):
    return float(np.max(np.abs(eigenvalues(M))))


def _check_lq(A, B, Q, R):
    A = _square(A, "A")
    B = _as_matrix(B, "B")
    Q = _square(Q, "Q")
    R = _square(R, "R")
    n, m = B.shape
    if A.shape[0] != n:
        raise DimensionError(f"A is {A.shape}, B is {B.shape}")
    if Q.shape != (n, n):
        raise DimensionError(f"Q must be {(n, n)}, got {Q.shape}")
    if R.shape != (m, m):
        raise DimensionError(f"R must be {(m, m)}, got {R.shape}")
    return A, B, Q, R


def dare_residual(A, B, Q, R, P):
    """Frobenius norm of P - (A'PA - A'PB (R + B'PB)^-1 B'PA + Q)."""
    S = R + B.T @ P @ B
    K = np.linalg.solve(S, B.T @ P @ A)
    rhs = A.T @ P @ A - A.T @ P @ B @ K + Q
    return float(np.linalg.norm(P - rhs))


def _solve_inner(S, rhs):
    try:
        cond = np.linalg.cond(S)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise DomainError("R + B'PB is singular")
    return np.linalg.solve(S, rhs)


def _dare_fixed_point(A, B, Q, R, tol, max_iter):
    P = Q.copy()
    for it in range(max_iter):
        S = R + B.T @ P @ B
        K = _solve_inner(S, B.T @ P @ A)
        P_next = A.T @ P @ A - A.T @ P @ B @ K + Q
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)):
            raise NumericError(f"Riccati recursion diverged after {it + 1} iterations")
        if np.linalg.norm(P_next - P) <= tol * (1.0 + np.linalg.norm(P_next)):
            return P_next
        P = P_next
    raise NumericError(f"Riccati recursion did not converge in {max_iter} iterations")


def _dare_doubling(A, B, Q, R, tol, max_iter):
    # Structure-preserving doubling; needs R invertible.
    n = A.shape[0]
    Ak = A.copy()
    Gk = B @ _solve_inner(R, B.T)
    Hk = Q.copy()
    I = np.eye(n)
    for it in range(max_iter):
        W = I + Gk @ Hk
        try:
            WA = np.linalg.solve(W, Ak)
            WG = np.linalg.solve(W, Gk)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"doubling step {it} hit a singular matrix") from exc
        H_next = Hk + Ak.T @ Hk @ WA
        G_next = Gk + Ak @ WG @ Ak.T
        Ak = Ak @ WA
        H_next = 0.5 * (H_next + H_next.T)
        Gk = 0.5 * (G_next + G_next.T)
        if not np.all(np.isfinite(H_next)):
            raise NumericError(f"doubling iteration diverged after {it + 1} steps")
        done = np.linalg.norm(H_next - Hk) <= tol * (1.0 + np.linalg.norm(H_next))
        Hk = H_next
        if done:
            return Hk
    raise NumericError(f"doubling iteration did not converge in {max_iter} steps")


def solve_dare(A, B, Q, R, method="doubling", tol=1e-12, max_iter=None):
    """Stabilizing solution P of the discrete algebraic Riccati equation.

    ``method="doubling"`` (default) converges quadratically and is used by
    the sweep; ``method="fixed_point"`` runs the plain Riccati recursion
    from P0 = Q and is kept as an independent route.  Singular R falls back
    to the recursion.  The residual is checked before returning.
    """
    A, B, Q, R = _check_lq(A, B, Q, R)
    if method not in ("doubling", "fixed_point"):
        raise ValueError(f"unknown DARE method {method!r}")
    if method == "doubling" and np.linalg.cond(R) > 1e12:
        method = "fixed_point"
    if method == "doubling":
        P = _dare_doubling(A, B, Q, R, tol, max_iter or 200)
    else:
        P = _dare_fixed_point(A, B, Q, R, tol, max_iter or 100_000)

    res = dare_residual(A, B, Q, R, P)
    if res > 1e-9 * (1.0 + np.linalg.norm(P)):
        raise NumericError(f"DARE residual {res:.3e} exceeds tolerance ({method})")
    return P


def lqr_gain(A, B, Q, R, **kwargs):
    """Infinite-horizon discrete LQR gain F, so that u = -F x."""
    A, B, Q, R = _check_lq(A, B, Q, R)
    P = solve_dare(A, B, Q, R, **kwargs)
    return _solve_inner(R + B.T @ P @ B, B.T @ P @ A)


def lqr_gains_batch(A, B, Qs, R, tol=1e-12, max_iter=200):
    """LQR gains for a stack of state weights ``Qs`` (shape (k, n, n)) at once.

    Same doubling iteration as :func:`solve_dare`, vectorized over the first
    axis; used to scan many weight ratios cheaply.  Returns gains of shape
    (k, m, n) and the per-entry DARE residuals.
    """
    A, B, _, R = _check_lq(A, B, np.asarray(Qs, dtype=float)[0], R)
    Qs = np.asarray(Qs, dtype=float)
    k, n = Qs.shape[0], A.shape[0]
    Ak = np.broadcast_to(A, (k, n, n)).copy()
    Gk = np.broadcast_to(B @ _solve_inner(R, B.T), (k, n, n)).copy()
    Hk = Qs.copy()
    I = np.eye(n)
    for _ in range(max_iter):
        W = I + Gk @ Hk
        WA = np.linalg.solve(W, Ak)
        WG = np.linalg.solve(W, Gk)
        AkT = np.swapaxes(Ak, 1, 2)
        H_next = Hk + AkT @ Hk @ WA
        G_next = Gk + Ak @ WG @ AkT
        Ak = Ak @ WA
        H_next = 0.5 * (H_next + np.swapaxes(H_next, 1, 2))
        Gk = 0.5 * (G_next + np.swapaxes(G_next, 1, 2))
        if not np.all(np.isfinite(H_next)):
            raise NumericError("batched doubling iteration diverged")
        step = np.linalg.norm(H_next - Hk, axis=(1, 2))
        Hk = H_next
        if np.all(step <= tol * (1.0 + np.linalg.norm(Hk, axis=(1, 2)))):
            break
    else:
        raise NumericError(f"batched doubling did not converge in {max_iter} steps")

    BT = B.T
    S = R + BT @ Hk @ B
    F = np.linalg.solve(S, BT @ Hk @ A)
    rhs = np.swapaxes(A, 0, 1) @ Hk @ A - np.swapaxes(A, 0, 1) @ Hk @ B @ F + Qs
    res = np.linalg.norm(Hk - rhs, axis=(1, 2))
    bad = res > 1e-9 * (1.0 + np.linalg.norm(Hk, axis=(1, 2)))
    if np.any(bad):
        raise NumericError(f"DARE residual too large for {int(bad.sum())} of {k} weights")
    return F, res
