import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from weaklyhard.control import augment_let, discretize, furuta_plant
from weaklyhard.numerics import (
    DimensionError,
    DomainError,
    dare_residual,
    eigenvalues,
    lqr_gain,
    lqr_gains_batch,
    mat_exp,
    solve_dare,
    spectral_radius,
)

from oracles import dare_reference, expm_series

GOLDEN = (1 + 5**0.5) / 2


def _sorted_eigs(v):
    v = np.asarray(v, dtype=complex)
    return v[np.lexsort((np.round(v.imag, 6), np.round(v.real, 6)))]


def _bounded(M, bound=2.0):
    norm = np.linalg.norm(M, 2)
    return M if norm <= bound else M * (bound / norm)


square = st.integers(2, 6).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-3, 3, allow_nan=False))
)


# --- mat_exp -----------------------------------------------------------------

def test_exp_of_zero_is_identity():
    np.testing.assert_array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))


def test_exp_of_diagonal():
    np.testing.assert_allclose(mat_exp(np.diag([1.0, -2.0])), np.diag([np.e, np.exp(-2)]), rtol=1e-14)


def test_exp_of_nilpotent():
    np.testing.assert_allclose(mat_exp([[0.0, 1.0], [0.0, 0.0]]), [[1, 1], [0, 1]], atol=1e-15)


def test_exp_large_norm_matches_series():
    rng = np.random.default_rng(5)
    M = rng.normal(size=(4, 4)) * 3
    ref = expm_series(M, dps=80)
    assert np.linalg.norm(mat_exp(M) - ref) / np.linalg.norm(ref) < 1e-12


def test_exp_rejects_non_square():
    with pytest.raises(DimensionError):
        mat_exp(np.zeros((2, 3)))


@settings(max_examples=60, deadline=None)
@given(square)
def test_exp_inverse_property(M):
    M = _bounded(M)
    n = M.shape[0]
    np.testing.assert_allclose(mat_exp(M) @ mat_exp(-M), np.eye(n), atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(square)
def test_exp_commuting_split(M):
    M = _bounded(M, 1.0)
    E = mat_exp(M)
    np.testing.assert_allclose(mat_exp(2 * M), E @ E, rtol=1e-10, atol=1e-12)


# --- eigenvalues ---------------------------------------------------------------

def test_eigs_diagonal():
    np.testing.assert_allclose(sorted(eigenvalues(np.diag([0.5, -0.25])).real), [-0.25, 0.5])


def test_eigs_rotation_returns_complex_pair():
    ev = _sorted_eigs(eigenvalues([[0.0, 1.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(ev, [-1j, 1j], atol=1e-14)


def test_eigs_companion_matrix_recovers_roots():
    rng = np.random.default_rng(11)
    roots = np.concatenate([rng.uniform(-2, 2, 2), [0.3 + 0.7j, 0.3 - 0.7j, -1.1 + 0.2j, -1.1 - 0.2j]])
    coeffs = np.poly(roots).real  # monic, degree 6
    C = np.zeros((6, 6))
    C[0, :] = -coeffs[1:]
    C[1:, :-1] = np.eye(5)
    np.testing.assert_allclose(_sorted_eigs(eigenvalues(C)), _sorted_eigs(roots), atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_eigs_of_product_commute(n, seed):
    rng = np.random.default_rng(seed)
    M, N = rng.normal(size=(2, n, n))
    a, b = eigenvalues(M @ N), eigenvalues(N @ M)
    # Multiset comparison by greedy nearest matching.
    b = list(b)
    for lam in a:
        j = int(np.argmin([abs(lam - x) for x in b]))
        assert abs(lam - b[j]) <= 1e-8 * max(1.0, abs(lam))
        b.pop(j)


# --- spectral radius -----------------------------------------------------------

@pytest.mark.parametrize(
    "M, rho",
    [(np.eye(4), 1.0), (0.5 * np.eye(3), 0.5), ([[0.0, 4.0], [0.0, 0.0]], 0.0)],
)
def test_spectral_radius_examples(M, rho):
    assert spectral_radius(M) == pytest.approx(rho, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(square, st.floats(-5, 5, allow_nan=False))
def test_spectral_radius_homogeneous(M, c):
    assert spectral_radius(c * M) == pytest.approx(abs(c) * spectral_radius(M), rel=1e-9, abs=1e-9)


# --- DARE / LQR ----------------------------------------------------------------

@pytest.mark.parametrize("method", ["doubling", "fixed_point"])
def test_dare_scalar_golden_ratio(method):
    P = solve_dare([[1.0]], [[1.0]], [[1.0]], [[1.0]], method=method)
    assert P[0, 0] == pytest.approx(GOLDEN, abs=1e-10)
    F = lqr_gain([[1.0]], [[1.0]], [[1.0]], [[1.0]])
    assert F[0, 0] == pytest.approx(GOLDEN - 1, abs=1e-10)


def test_dare_zero_dynamics_gives_Q():
    rng = np.random.default_rng(3)
    L = rng.normal(size=(3, 3))
    Q = L @ L.T
    B = rng.normal(size=(3, 2))
    P = solve_dare(np.zeros((3, 3)), B, Q, np.eye(2))
    np.testing.assert_allclose(P, Q, atol=1e-12)


def test_no_actuation_gives_zero_gain():
    A = np.diag([0.5, -0.3])
    F = lqr_gain(A, np.zeros((2, 1)), np.eye(2), np.eye(1))
    np.testing.assert_allclose(F, 0.0, atol=1e-14)


def _furuta_lq(T=0.132, ratio=1.0):
    Az, Bz = augment_let(discretize(furuta_plant(), T))
    Q = np.diag([ratio, ratio, 0, 0, 0])
    return Az, Bz, Q, np.eye(1)


def test_furuta_dare_residual_and_reference():
    Az, Bz, Q, R = _furuta_lq()
    P = solve_dare(Az, Bz, Q, R)
    assert dare_residual(Az, Bz, Q, R, P) <= 1e-9
    np.testing.assert_allclose(P, dare_reference(Az, Bz, Q, R), rtol=1e-8, atol=1e-10)


def test_furuta_lqr_stabilizes_nominal_loop():
    Az, Bz, Q, R = _furuta_lq()
    F = lqr_gain(Az, Bz, Q, R)
    assert spectral_radius(Az - Bz @ F) < 1


def test_fixed_point_and_doubling_agree():
    Az, Bz, Q, R = _furuta_lq(0.1, 3.0)
    P1 = solve_dare(Az, Bz, Q, R, method="doubling")
    P2 = solve_dare(Az, Bz, Q, R, method="fixed_point")
    np.testing.assert_allclose(P1, P2, rtol=1e-8)


def test_batch_matches_single():
    Az, Bz, _, R = _furuta_lq()
    ratios = [1e-3, 0.1, 1.0, 20.0]
    Qs = np.stack([np.diag([r, r, 0, 0, 0]) for r in ratios])
    Fs, res = lqr_gains_batch(Az, Bz, Qs, R)
    for F, Q in zip(Fs, Qs):
        np.testing.assert_allclose(F, lqr_gain(Az, Bz, Q, R), rtol=1e-8, atol=1e-12)
    assert np.all(res < 1e-8)


def test_singular_inner_matrix_rejected():
    with pytest.raises(DomainError):
        solve_dare([[1.0]], [[0.0]], [[1.0]], [[0.0]], method="fixed_point")


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionError):
        solve_dare(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(1))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_dare_symmetric_with_small_residual(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, m))
    L = rng.normal(size=(n, n))
    Q = L @ L.T + 0.1 * np.eye(n)
    R = np.eye(m) * rng.uniform(0.5, 2)
    P = solve_dare(A, B, Q, R)
    np.testing.assert_allclose(P, P.T, atol=1e-10 * (1 + np.linalg.norm(P)))
    assert dare_residual(A, B, Q, R, P) <= 1e-9 * (1 + np.linalg.norm(P))


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_gain_invariant_under_joint_scaling(c, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(3, 1))
    Q = np.diag(rng.uniform(0.1, 2, 3))
    R = np.eye(1)
    np.testing.assert_allclose(lqr_gain(A, B, c * Q, c * R), lqr_gain(A, B, Q, R), rtol=1e-8, atol=1e-10)
