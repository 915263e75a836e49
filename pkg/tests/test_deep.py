import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepesn import (
    Activation,
    Esn,
    EsnConfig,
    ParallelEsn,
    SeriesEsn,
    build_dense_random,
    parallel_predict,
    parallel_train,
    series_predict,
    series_train,
    train_esn,
)
from deepesn.deep import member_configs, parallel_outputs
from deepesn.errors import ConfigError, DataError, NumericalError, UntrainedError
from deepesn.reservoir import derive_seed


def scalar(v, w, u=None):
    cfg = EsnConfig(reservoir_size=1, activation=Activation.IDENTITY)
    U = None if u is None else np.array([[u]])
    return Esn(cfg, np.array([[v]]), np.array([[w]]), U)


@pytest.fixture
def data():
    rng = np.random.default_rng(4)
    u = rng.uniform(0, 0.5, 400)
    y = np.convolve(u, [0.3, 0.2, 0.1])[:400]
    return u, y


CFG = EsnConfig(reservoir_size=12, seed=5)


class TestMemberConfigs:
    def test_distinct_seeds(self):
        seeds = [c.seed for c in member_configs(CFG, 3)]
        assert seeds == [derive_seed(5, i) for i in range(3)]
        assert len(set(seeds)) == 3

    def test_same_seeds(self):
        assert {c.seed for c in member_configs(CFG, 4, same_seeds=True)} == {derive_seed(5, 0)}

    def test_zero_members(self):
        with pytest.raises(ConfigError):
            member_configs(CFG, 0)


class TestParallel:
    def test_single_member_equals_shallow(self, data):
        u, y = data
        p = ParallelEsn.build(CFG, 1)
        parallel_train(p, u, y, 50)
        solo = build_dense_random(CFG.with_(seed=derive_seed(5, 0)))
        train_esn(solo, u, y, 50)
        np.testing.assert_array_equal(parallel_predict(p, u), solo.predict(u))

    def test_identical_members_equal_one(self, data):
        u, y = data
        p = ParallelEsn.build(CFG, 3, same_seeds=True)
        parallel_train(p, u, y, 50)
        one = p.members[0].predict(u)
        np.testing.assert_allclose(parallel_predict(p, u), one, rtol=1e-12, atol=1e-14)

    def test_output_is_mean_of_members(self, data):
        u, y = data
        p = ParallelEsn.build(CFG, 3)
        parallel_train(p, u, y, 50)
        outs = parallel_outputs(p, u)
        np.testing.assert_allclose(parallel_predict(p, u), np.mean(outs, axis=0), rtol=1e-13)

    def test_members_are_independent(self, data):
        u, y = data
        p = ParallelEsn.build(CFG, 2)
        parallel_train(p, u, y, 50)
        solo = p.members[1].copy()
        train_esn(solo, u, y, 50)
        np.testing.assert_array_equal(solo.U, p.members[1].U)

    def test_permutation_invariant(self, data):
        u, y = data
        p = ParallelEsn.build(CFG, 3)
        parallel_train(p, u, y, 50)
        ref = parallel_predict(p, u)
        for perm in itertools.permutations(range(3)):
            q = ParallelEsn([p.members[i] for i in perm])
            np.testing.assert_allclose(parallel_predict(q, u), ref, rtol=1e-13, atol=1e-15)

    def test_threaded_training_matches(self, data):
        u, y = data
        a, b = ParallelEsn.build(CFG, 4), ParallelEsn.build(CFG, 4)
        parallel_train(a, u, y, 50)
        parallel_train(b, u, y, 50, jobs=4)
        for ma, mb in zip(a.members, b.members):
            np.testing.assert_array_equal(ma.U, mb.U)

    def test_untrained(self, data):
        with pytest.raises(UntrainedError, match="member 0"):
            parallel_predict(ParallelEsn.build(CFG, 2), data[0])

    def test_mismatched_dims(self):
        a = build_dense_random(CFG)
        b = build_dense_random(CFG.with_(input_dim=2))
        with pytest.raises(ConfigError):
            ParallelEsn([a, b])

    @settings(max_examples=20, deadline=None)
    @given(L=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
    def test_zero_readouts_give_zero(self, L, seed):
        p = ParallelEsn.build(EsnConfig(reservoir_size=4, seed=seed), L)
        for m in p.members:
            m.U = np.zeros((1, 4))
        assert np.all(parallel_predict(p, np.ones(10)) == 0)


class TestSeries:
    def test_hand_built_two_stages(self):
        s = SeriesEsn([scalar(1.0, 0.5, 2.0), scalar(1.0, 0.0, 3.0)])
        out = series_predict(s, [1.0, 0.0, 0.0])
        # stage 1: states 1, .5, .25 -> 2, 1, .5; stage 2 is memoryless x3
        np.testing.assert_allclose(out[:, 0], [6.0, 3.0, 1.5], rtol=1e-15)

    def test_single_stage_equals_shallow(self, data):
        u, y = data
        s = SeriesEsn.build(CFG, 1)
        series_train(s, u, y, 50)
        solo = build_dense_random(CFG.with_(seed=derive_seed(5, 0)))
        train_esn(solo, u, y, 50)
        np.testing.assert_array_equal(series_predict(s, u), solo.predict(u))

    def test_later_stages_take_output_dim(self):
        s = SeriesEsn.build(CFG.with_(input_dim=3), 3)
        assert [st.config.input_dim for st in s.stages] == [3, 1, 1]

    def test_cumulative_washout(self, data):
        u, y = data
        s = SeriesEsn.build(CFG, 3)
        res = series_train(s, u, y, 40)
        assert [r.washout for r in res] == [40, 80, 120]

    def test_prediction_handoff_is_fitted_output(self, data):
        u, y = data
        s = SeriesEsn.build(CFG, 2)
        res = series_train(s, u, y, 40)
        second = s.stages[1].copy()
        train_esn(second, res[0].outputs, y, 80)
        np.testing.assert_array_equal(second.U, s.stages[1].U)

    def test_target_handoff(self, data):
        u, y = data
        s = SeriesEsn.build(CFG, 2)
        series_train(s, u, y, 40, handoff="target")
        second = s.stages[1].copy()
        train_esn(second, y, y, 80)
        np.testing.assert_array_equal(second.U, s.stages[1].U)

    def test_identity_teacher_is_learned(self):
        # a memoryless identity reservoir with unit input weight can copy its input exactly
        s = SeriesEsn([scalar(1.0, 0.0), scalar(1.0, 0.0)])
        u = np.linspace(0.1, 1.0, 50)
        res = series_train(s, u, 2 * u, 5)
        assert res[-1].train_nrmse < 1e-12
        np.testing.assert_allclose(series_predict(s, u)[:, 0], 2 * u, rtol=1e-12)

    def test_too_short(self, data):
        u, y = data
        s = SeriesEsn.build(CFG, 3)
        with pytest.raises(DataError, match="too short"):
            series_train(s, u[:150], y[:150], 50)

    def test_bad_handoff(self, data):
        with pytest.raises(ConfigError):
            series_train(SeriesEsn.build(CFG, 2), *data, 10, handoff="oracle")

    def test_untrained(self):
        with pytest.raises(UntrainedError, match="stage 0"):
            series_predict(SeriesEsn.build(CFG, 2), np.ones(5))

    def test_stage_error_is_tagged(self):
        # stage 1 has zero input weights, so its states are all zero and ridge 0 is singular
        cfg = EsnConfig(reservoir_size=1, activation=Activation.IDENTITY, ridge=0.0)
        s = SeriesEsn([scalar(1.0, 0.0), Esn(cfg, np.zeros((1, 1)), np.zeros((1, 1)))])
        with pytest.raises(NumericalError, match="series stage 1"):
            series_train(s, np.linspace(0.1, 1, 20), np.linspace(0.1, 1, 20), 2)
