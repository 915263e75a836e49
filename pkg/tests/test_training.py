import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepesn import EsnConfig, RidgeProblem, build_dense_random, narma_generate, NarmaConfig, ridge_fit, train_esn
from deepesn.errors import DataError, NumericalError


def explicit_formula(X, Y, lam):
    """The closed form with an explicit inverse; used only as an oracle."""
    n = X.shape[1]
    return (np.linalg.inv(X.T @ X + lam**2 * np.eye(n)) @ X.T @ Y).T


class TestRidgeFit:
    def test_identity_design_no_ridge(self):
        U = ridge_fit(RidgeProblem(np.eye(2), [1.0, 2.0], 0.0))
        np.testing.assert_allclose(U, [[1.0, 2.0]], rtol=1e-14)

    def test_identity_design_unit_ridge_halves(self):
        U = ridge_fit(RidgeProblem(np.eye(2), [1.0, 2.0], 1.0))
        np.testing.assert_allclose(U, [[0.5, 1.0]], rtol=1e-14)

    def test_random_against_explicit_inverse(self):
        rng = np.random.default_rng(0)
        X, Y = rng.standard_normal((20, 5)), rng.standard_normal((20, 1))
        U = ridge_fit(RidgeProblem(X, Y, 0.1))
        np.testing.assert_allclose(U, explicit_formula(X, Y, 0.1), rtol=1e-10, atol=1e-12)

    def test_ridge_enters_squared(self):
        X, Y = np.eye(1), np.array([[3.0]])
        # (1 + lam^2)^-1 * 3 with lam = 2 -> 0.6, not 3 / (1 + 2) = 1.0
        assert ridge_fit(RidgeProblem(X, Y, 2.0))[0, 0] == pytest.approx(0.6)

    def test_rank_deficient_without_ridge(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(NumericalError, match="rank 1 < 2"):
            ridge_fit(RidgeProblem(X, np.ones(3), 0.0))

    def test_rank_deficient_with_ridge_is_fine(self):
        X = np.array([[1.0, 2.0], [2.0, 4.0]])
        U = ridge_fit(RidgeProblem(X, np.ones(2), 0.1))
        assert np.all(np.isfinite(U))

    def test_row_mismatch(self):
        with pytest.raises(DataError):
            RidgeProblem(np.ones((3, 2)), np.ones(4), 0.1)

    @settings(max_examples=100, deadline=None)
    @given(
        T=st.integers(1, 30),
        n=st.integers(1, 8),
        m=st.integers(1, 3),
        lam=st.floats(0.05, 3.0),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_oracle_equivalence(self, T, n, m, lam, seed):
        rng = np.random.default_rng(seed)
        X, Y = rng.standard_normal((T, n)), rng.standard_normal((T, m))
        U = ridge_fit(RidgeProblem(X, Y, lam))
        ref = explicit_formula(X, Y, lam)
        assert np.linalg.norm(U - ref) <= 1e-10 * max(np.linalg.norm(ref), 1e-300)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_zero_ridge_limit_is_pseudo_inverse(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = rng.standard_normal((25, 6)), rng.standard_normal((25, 2))
        pinv = (np.linalg.pinv(X) @ Y).T
        np.testing.assert_allclose(ridge_fit(RidgeProblem(X, Y, 0.0)), pinv, atol=1e-8)
        np.testing.assert_allclose(ridge_fit(RidgeProblem(X, Y, 1e-6)), pinv, atol=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_norm_non_increasing_in_ridge(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = rng.standard_normal((15, 6)), rng.standard_normal((15, 1))
        norms = [np.linalg.norm(ridge_fit(RidgeProblem(X, Y, lam))) for lam in np.linspace(0.01, 5, 30)]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))


class TestTrainEsn:
    def test_realizable_teacher(self):
        esn = build_dense_random(EsnConfig(reservoir_size=10, seed=1))
        u = np.random.default_rng(1).uniform(0, 1, 200)
        states = esn.run(u).states
        y = states @ np.linspace(-1, 1, 10)
        res = train_esn(esn, u, y, 20, ridge=0.0)
        assert res.train_nrmse < 1e-8
        assert esn.trained and esn.U.shape == (1, 10)

    def test_constant_target(self):
        s, _ = narma_generate(NarmaConfig(600, 5, seed=3))
        esn = build_dense_random(EsnConfig(reservoir_size=50, seed=3))
        res = train_esn(esn, s, np.full(600, 0.4), 100)
        assert res.train_nrmse is None
        rel = np.sqrt(np.mean((res.outputs[100:] - 0.4) ** 2)) / 0.4
        assert rel < 0.1

    def test_single_row_fit(self):
        esn = build_dense_random(EsnConfig(reservoir_size=5, ridge=1e-3))
        u = np.linspace(0, 1, 10)
        res = train_esn(esn, u, u**2, 9)
        assert np.all(np.isfinite(res.readout))

    def test_outputs_cover_every_row(self):
        esn = build_dense_random(EsnConfig(reservoir_size=5))
        u = np.linspace(0, 1, 30)
        res = train_esn(esn, u, np.sin(5 * u), 10)
        assert res.outputs.shape == (30, 1)
        np.testing.assert_allclose(res.outputs, esn.predict(u), rtol=1e-12)

    def test_length_mismatch(self):
        esn = build_dense_random(EsnConfig(reservoir_size=5))
        with pytest.raises(DataError):
            train_esn(esn, np.ones(10), np.ones(9), 2)

    def test_washout_too_long(self):
        esn = build_dense_random(EsnConfig(reservoir_size=5))
        with pytest.raises(DataError):
            train_esn(esn, np.ones(10), np.ones(10), 10)
