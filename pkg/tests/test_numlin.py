"""Numerical kernel: eigendecomposition, Lyapunov solve, controllability,
pole placement. Oracles are constructed-by-hand systems whose answers are
known in closed form, plus residual identities checked independently."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asdinv import (
    ComplexSpectrum,
    NonSquare,
    SingularSystem,
    Uncontrollable,
    Unstable,
    ackermann_gain,
    controllability_rank,
    is_hurwitz,
    real_eig,
    solve_lyapunov,
)


def random_stable(rng, n):
    """Diagonalizable Hurwitz matrix with a known real spectrum."""
    w = -rng.uniform(0.5, 5.0, size=n)
    w.sort()
    T = rng.standard_normal((n, n))
    while abs(np.linalg.det(T)) < 1e-3:
        T = rng.standard_normal((n, n))
    return T @ np.diag(w) @ np.linalg.inv(T), w


class TestRealEig:
    def test_diagonal_oracle(self):
        A = np.diag([-3.0, -1.0, -2.0])
        pairs = real_eig(A)
        assert [p.value for p in pairs] == [-3.0, -2.0, -1.0]
        # left eigenvectors of a diagonal matrix are the unit axes
        for p, idx in zip(pairs, [0, 2, 1]):
            e = np.zeros(3)
            e[idx] = 1.0
            np.testing.assert_allclose(p.vector, e, atol=1e-12)

    def test_residual_and_unit_norm(self):
        rng = np.random.default_rng(7)
        A, w = random_stable(rng, 5)
        pairs = real_eig(A)
        np.testing.assert_allclose([p.value for p in pairs], w, atol=1e-8)
        for p in pairs:
            assert abs(np.linalg.norm(p.vector) - 1.0) < 1e-12
            resid = np.linalg.norm(A.T @ p.vector - p.value * p.vector)
            assert resid < 1e-8 * np.linalg.norm(A, 2)

    def test_sign_convention(self):
        A = np.array([[-2.0, 1.0], [0.0, -1.0]])
        for p in real_eig(A):
            assert p.vector[np.argmax(np.abs(p.vector))] > 0

    def test_block_diagonal_repeated_eigs(self):
        # two decoupled copies share the eigenvalue; vectors must stay
        # block-local so they remain orthogonal
        blk = np.array([[0.0, 1.0], [-2.0, -3.0]])  # eigs -1, -2
        A = np.zeros((4, 4))
        A[:2, :2] = blk
        A[2:, 2:] = blk
        pairs = real_eig(A)
        vals = [p.value for p in pairs]
        np.testing.assert_allclose(vals, [-2.0, -2.0, -1.0, -1.0], atol=1e-10)
        for p in pairs:
            lives_first = np.linalg.norm(p.vector[:2]) > 0.5
            lives_second = np.linalg.norm(p.vector[2:]) > 0.5
            assert lives_first != lives_second

    def test_complex_spectrum_raises(self):
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])  # eigs +/- i
        with pytest.raises(ComplexSpectrum):
            real_eig(A)

    def test_non_square_raises(self):
        with pytest.raises(NonSquare):
            real_eig(np.zeros((2, 3)))

    def test_roundtrip_reconstruction(self):
        # A^T = V W V^-1 from the returned pairs reproduces A^T
        rng = np.random.default_rng(11)
        A, _ = random_stable(rng, 4)
        pairs = real_eig(A)
        V = np.column_stack([p.vector for p in pairs])
        W = np.diag([p.value for p in pairs])
        recon = V @ W @ np.linalg.inv(V)
        assert np.linalg.norm(recon - A.T) < 1e-8 * np.linalg.norm(A)


class TestLyapunov:
    def test_known_scalar(self):
        # a = -2, m = 4: 2 p a = -m => p = 1
        P = solve_lyapunov(np.array([[-2.0]]), np.array([[4.0]]))
        np.testing.assert_allclose(P, [[1.0]], atol=1e-12)

    def test_diagonal_oracle(self):
        # A = diag(a_i), M = I => P = diag(-1/(2 a_i))
        a = np.array([-1.0, -2.0, -4.0])
        P = solve_lyapunov(np.diag(a), np.eye(3))
        np.testing.assert_allclose(P, np.diag(-0.5 / a), atol=1e-12)

    def test_residual_and_pd(self):
        rng = np.random.default_rng(3)
        A, _ = random_stable(rng, 6)
        M = np.eye(6)
        P = solve_lyapunov(A, M)
        assert np.linalg.norm(P - P.T) < 1e-12
        assert np.min(np.linalg.eigvalsh(P)) > 0
        assert np.linalg.norm(P @ A + A.T @ P + M) < 1e-8 * (
            np.linalg.norm(P) * np.linalg.norm(A) + np.linalg.norm(M)
        )

    def test_hundred_random_systems(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            A, _ = random_stable(rng, n)
            M = np.eye(n)
            P = solve_lyapunov(A, M)
            resid = np.linalg.norm(P @ A + A.T @ P + M)
            assert resid < 1e-8 * (
                np.linalg.norm(P) * np.linalg.norm(A) + np.linalg.norm(M)
            )

    def test_unstable_raises(self):
        with pytest.raises(Unstable):
            solve_lyapunov(np.array([[1.0]]), np.array([[1.0]]))

    def test_indefinite_m_raises(self):
        with pytest.raises(SingularSystem):
            solve_lyapunov(-np.eye(2), np.diag([1.0, -1.0]))

    def test_asymmetric_m_raises(self):
        with pytest.raises(SingularSystem):
            solve_lyapunov(-np.eye(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestControllability:
    def test_chain_is_controllable(self):
        A = np.diag(np.ones(3), 1)  # 4-state integrator chain
        b = np.zeros((4, 1))
        b[-1] = 1.0
        assert controllability_rank(A, b) == 4

    def test_decoupled_mode_not_controllable(self):
        A = np.diag([-1.0, -2.0])
        b = np.array([[1.0], [0.0]])
        assert controllability_rank(A, b) == 1

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_similarity_invariance(self, seed):
        # rank is invariant under a change of coordinates x -> T x
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, 1))
        T = rng.standard_normal((n, n))
        if abs(np.linalg.det(T)) < 1e-2:
            return
        r1 = controllability_rank(A, B)
        r2 = controllability_rank(T @ A @ np.linalg.inv(T), T @ B)
        assert r1 == r2

    def test_stiff_but_controllable(self):
        # wide eigenvalue spread across decoupled blocks: raw Krylov
        # columns span |15|^3 in norm, so this exercises the column
        # normalization before the rank decision
        blk = np.diag(np.ones(3), 1)
        blk[-1, :] = -np.poly([-15.0, -3.0, -1.0, -0.5])[1:][::-1]
        e4 = np.zeros((4, 1))
        e4[-1] = 1.0
        A = np.kron(np.eye(2), blk)
        B = np.kron(np.eye(2), e4)
        assert controllability_rank(A, B) == 8


class TestAckermann:
    def test_companion_oracle(self):
        # companion form of s^3 + s^2 + 3 s + 1; moving the poles to
        # {-1,-2,-3} (s^3 + 6 s^2 + 11 s + 6) needs K = old - new coeffs
        A0 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -3.0, -1.0]])
        b = np.array([[0.0], [0.0], [1.0]])
        K = ackermann_gain(A0, b, [-1.0, -2.0, -3.0])
        np.testing.assert_allclose(K.ravel(), [-5.0, -8.0, -5.0], atol=1e-10)

    def test_closed_loop_spectrum(self):
        rng = np.random.default_rng(5)
        A0 = rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 1))
        poles = [-1.0, -2.5, -3.0, -4.0]
        K = ackermann_gain(A0, b, poles)
        got = np.sort(np.linalg.eigvals(A0 + b @ K.T).real)
        np.testing.assert_allclose(got, np.sort(poles), atol=1e-7)

    def test_quadrotor_channel_gain(self):
        # third-order actuator channel at bandwidth 15; exact gain for
        # poles {-15,-3,-1} rounds to the published [-3, -4.2, -0.27]
        om = 15.0
        A0 = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -om]])
        b = np.array([[0.0], [0.0], [om]])
        K = ackermann_gain(A0, b, [-15.0, -3.0, -1.0])
        np.testing.assert_allclose(K.ravel(), [-3.0, -4.2, -4.0 / 15.0], atol=1e-10)
        np.testing.assert_allclose(K.ravel(), [-3.0, -4.2, -0.27], atol=1e-2)

    def test_uncontrollable_raises(self):
        A = np.diag([-1.0, -2.0])
        b = np.array([[1.0], [0.0]])
        with pytest.raises(Uncontrollable):
            ackermann_gain(A, b, [-3.0, -4.0])


def test_is_hurwitz():
    assert is_hurwitz(-np.eye(3))
    assert not is_hurwitz(np.diag([-1.0, 0.5]))
