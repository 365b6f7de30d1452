import numpy as np
import pytest
import scipy.linalg as sla

from maxreglab.linalg import (
    LpSpec,
    SpectrumError,
    eig,
    expm,
    lp_norm,
    opnorm,
    phi1,
    resolvent,
)


def rk4_flow(A, t, steps):
    """Brute-force oracle: integrate X' = A X from the identity with RK4."""
    h = t / steps
    X = np.eye(A.shape[0], dtype=complex)
    for _ in range(steps):
        k1 = A @ X
        k2 = A @ (X + 0.5 * h * k1)
        k3 = A @ (X + 0.5 * h * k2)
        k4 = A @ (X + h * k3)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return X


def neumann_second_difference(N):
    """Oracle stencil: vertex-grid Laplacian with reflected boundary rows."""
    h = 1.0 / (N - 1)
    A = np.zeros((N, N))
    for i in range(N):
        A[i, i] = -2.0
        if i > 0:
            A[i, i - 1] = 1.0
        if i < N - 1:
            A[i, i + 1] = 1.0
    A[0, 1] = 2.0
    A[-1, -2] = 2.0
    return A / h**2


class TestExpm:
    def test_zero_matrix_any_time_is_identity(self):
        assert np.array_equal(expm(np.zeros((3, 3)), 7.0), np.eye(3))

    def test_time_zero_is_identity_exactly(self):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(expm(A, 0.0), np.eye(2))

    def test_scalar_decay(self):
        out = expm(np.array([[-1.0]]), 1.0)
        assert out[0, 0] == pytest.approx(0.36787944117, abs=1e-11)

    def test_matches_fine_step_ode_oracle(self):
        rng = np.random.default_rng(8)
        A = rng.standard_normal((8, 8))
        t = 0.3
        oracle = rk4_flow(A, t, steps=30_000)  # step 1e-5
        got = expm(A, t)
        assert np.linalg.norm(got - oracle) <= 1e-9 * np.linalg.norm(oracle)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_semigroup_property(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((6, 6))
        s, t = rng.uniform(0.1, 1.5, size=2)
        lhs = expm(A, s + t)
        rhs = expm(A, s) @ expm(A, t)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(lhs)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError, match="square"):
            expm(np.ones((2, 3)), 1.0)

    def test_rejects_nonfinite(self):
        A = np.array([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError, match="finite"):
            expm(A, 1.0)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError, match="nonnegative"):
            expm(np.eye(2), -0.5)


class TestPhi1:
    def test_zero_matrix(self):
        assert np.allclose(phi1(np.zeros((4, 4)), 2.0), 2.0 * np.eye(4), atol=1e-14)

    def test_scalar_closed_form(self):
        out = phi1(np.array([[-1.0]]), 1.0)
        assert out[0, 0] == pytest.approx(0.63212055883, abs=1e-11)

    def test_algebraic_identity_random(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((6, 6))
        t = 0.7
        lhs = A @ phi1(A, t)
        rhs = expm(A, t) - np.eye(6)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(rhs))

    def test_time_zero(self):
        assert np.array_equal(phi1(np.eye(3), 0.0), np.zeros((3, 3)))


class TestResolvent:
    def test_zero_matrix(self):
        assert np.allclose(resolvent(np.zeros((3, 3)), 4.0), 0.25 * np.eye(3))

    def test_scalar(self):
        out = resolvent(np.array([[-2.0]]), 3.0)
        assert out[0, 0] == pytest.approx(0.2, abs=1e-14)

    def test_resolvent_identity(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((8, 8))
        lam, mu = 9.0 + 2.0j, 4.0 - 1.0j
        Rl, Rm = resolvent(A, lam), resolvent(A, mu)
        lhs = Rl - Rm
        rhs = (mu - lam) * (Rl @ Rm)
        assert np.linalg.norm(lhs - rhs) <= 1e-11 * np.linalg.norm(lhs)

    def test_spectrum_hit_raises_with_smallest_sv(self):
        A = np.diag([1.0, 2.0, 3.0])
        with pytest.raises(SpectrumError) as err:
            resolvent(A, 2.0)
        assert err.value.smallest_sv <= 1e-10

    def test_laplace_transform_consistency(self):
        # resolvent equals the truncated quadrature of exp(-lam t) e^{tA}
        rng = np.random.default_rng(11)
        A = rng.standard_normal((4, 4)) - 3.0 * np.eye(4)
        lam = 2.0
        # truncate where exp(-lam t)*||e^{tA}|| drops below 1e-14
        T, t = 0.0, 0.0
        while True:
            t += 0.5
            if np.exp(-lam * t) * np.linalg.norm(expm(A, t), 2) <= 1e-14:
                T = t
                break
        n = 4000  # composite Simpson
        ts = np.linspace(0.0, T, n + 1)
        h = T / n
        w = np.ones(n + 1)
        w[1:-1:2], w[2:-1:2] = 4.0, 2.0
        w *= h / 3.0
        quad = sum(
            wk * np.exp(-lam * tk) * expm(A, tk) for wk, tk in zip(w, ts)
        )
        R = resolvent(A, lam)
        assert np.linalg.norm(quad - R) <= 1e-6 * np.linalg.norm(R)


class TestOpnorm:
    def test_diagonal_p2(self):
        assert float(opnorm(np.diag([3.0, -4.0]), 2.0)) == pytest.approx(4.0)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_identity_any_p(self, p):
        assert float(opnorm(np.eye(5), p)) == pytest.approx(1.0, rel=1e-9)

    def test_p2_matches_svd_for_power_method(self):
        # the general-p estimator must reproduce the exact p=2 answer
        rng = np.random.default_rng(1)
        M = rng.standard_normal((7, 7))
        exact = sla.svdvals(M)[0]
        est = opnorm(M, 2.0 + 1e-12)
        assert est.value == pytest.approx(exact, rel=1e-5)

    def test_p3_against_random_probe_oracle(self):
        # oracle: exhaustively maximize the p=3 ratio starting from 1e5
        # random unit probes (screen, then fixed-point ascent, inline numpy)
        p, q = 3.0, 1.5
        rng = np.random.default_rng(42)
        M = rng.standard_normal((10, 10))
        probes = rng.standard_normal((100_000, 10))
        probes /= np.sum(np.abs(probes) ** p, axis=1, keepdims=True) ** (1 / p)
        ratios = np.sum(np.abs(probes @ M.T) ** p, axis=1) ** (1 / p)
        oracle = np.max(ratios)
        for idx in np.argsort(ratios)[-64:]:
            x = probes[idx]
            for _ in range(50):
                y = M @ x
                z = M.T @ (np.abs(y) ** (p - 1) * np.sign(y))
                x = np.abs(z) ** (q - 1) * np.sign(z)
                x /= np.sum(np.abs(x) ** p) ** (1 / p)
            oracle = max(oracle, np.sum(np.abs(M @ x) ** p) ** (1 / p))
        est = opnorm(M, 3.0)
        assert est.value >= oracle * (1 - 1e-6)  # estimator dominates probes
        assert abs(est.value - oracle) <= 0.01 * est.value
        assert est.iterations > 0

    def test_p2_submultiplicative_and_adjoint(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            B = rng.standard_normal((6, 6))
            nA, nB = float(opnorm(A)), float(opnorm(B))
            assert float(opnorm(A @ B)) <= nA * nB * (1 + 1e-12)
            assert float(opnorm(A.conj().T)) == pytest.approx(nA, rel=1e-12)

    def test_weighted_spec(self):
        w = np.array([0.5, 1.0, 0.5])
        M = np.diag([1.0, 2.0, 3.0])
        # diagonal similarity leaves diagonal matrices unchanged
        assert float(opnorm(M, LpSpec(2.0, w))) == pytest.approx(3.0)

    def test_lpspec_validation(self):
        with pytest.raises(ValueError):
            LpSpec(0.5)
        assert LpSpec(2.0).q == pytest.approx(2.0)
        assert LpSpec(4.0).q == pytest.approx(4.0 / 3.0)


class TestEig:
    def test_diagonal(self):
        w, _ = eig(np.diag([1.0, 2.0, 3.0]))
        assert np.allclose(np.sort(w), [1.0, 2.0, 3.0])

    def test_neumann_laplacian_analytic_spectrum(self):
        N = 200
        A = neumann_second_difference(N)
        sym = 0.5 * (A + A.T)  # similar up to the boundary half-weights
        w = np.sort(eig(A)[0].real)[::-1]
        # smallest-magnitude eigenvalues approach 0, -pi^2, -4 pi^2
        assert abs(w[0]) <= 1e-8
        assert w[1] == pytest.approx(-np.pi**2, rel=3.0 / N**2 * 10)
        assert w[2] == pytest.approx(-4 * np.pi**2, rel=3.0 / N**2 * 40)
        del sym

    def test_backward_error(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((9, 9))
        w, V = eig(A)
        res = np.linalg.norm(A @ V - V @ np.diag(w))
        assert res <= 1e-10 * np.linalg.norm(A) * np.linalg.norm(V)

    def test_similarity_invariance(self):
        rng = np.random.default_rng(4)
        A = rng.standard_normal((6, 6))
        S = rng.standard_normal((6, 6)) + 3 * np.eye(6)
        B = S @ A @ np.linalg.inv(S)
        wa = np.sort_complex(eig(A)[0])
        wb = np.sort_complex(eig(B)[0])
        assert np.max(np.abs(wa - wb)) <= 1e-8 * max(1.0, np.max(np.abs(wa)))

    def test_symmetric_gets_orthogonal_basis(self):
        rng = np.random.default_rng(6)
        M = rng.standard_normal((5, 5))
        A = M + M.T
        _, V = eig(A)
        assert np.allclose(V.T @ V, np.eye(5), atol=1e-12)


def test_lp_norm_weighted():
    v = np.array([1.0, -2.0])
    w = np.array([0.5, 0.25])
    assert lp_norm(v, 2.0, w) == pytest.approx(np.sqrt(0.5 + 1.0))
    assert lp_norm(v, 3.0) == pytest.approx((1 + 8) ** (1 / 3))
