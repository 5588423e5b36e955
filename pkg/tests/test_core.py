import numpy as np
import pickle
import pytest
from hypothesis import given, strategies as st

from fairsample import (
    DatasetPair,
    LabeledSample,
    MixtureDistribution,
    RunState,
    SampleBuffer,
    empirical_mixture,
    proportional_counts,
    rho,
)


class TestMixtureDistribution:
    def test_uniform(self):
        m = MixtureDistribution.uniform(4)
        np.testing.assert_allclose(m.weights, 0.25)
        assert m.min_weight == 0.25
        assert len(m) == 4

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="nonnegative"):
            MixtureDistribution([1.2, -0.2])

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError, match="sum"):
            MixtureDistribution([0.5, 0.6])

    def test_sum_tolerance(self):
        MixtureDistribution([0.5, 0.5 + 9e-10])  # inside tolerance
        with pytest.raises(ValueError):
            MixtureDistribution([0.5, 0.5 + 2e-9])

    def test_weights_read_only(self):
        m = MixtureDistribution([0.3, 0.7])
        with pytest.raises(ValueError):
            m.weights[0] = 1.0

    def test_needs_two_attributes(self):
        with pytest.raises(ValueError):
            MixtureDistribution([1.0])

    def test_equality_and_pickle(self):
        m = MixtureDistribution([0.3, 0.7])
        assert m == MixtureDistribution([0.3, 0.7])
        assert pickle.loads(pickle.dumps(m)) == m


class TestEmpiricalMixture:
    def test_symmetric(self):
        assert empirical_mixture([1, 1]) == MixtureDistribution([0.5, 0.5])

    def test_twenty_round_history(self):
        m = empirical_mixture([9, 4, 4, 3])
        np.testing.assert_allclose(m.weights, [0.45, 0.20, 0.20, 0.15])

    def test_empty_history(self):
        with pytest.raises(ValueError, match="empty history"):
            empirical_mixture([0, 0])

    def test_negative_counts(self):
        with pytest.raises(ValueError):
            empirical_mixture([3, -1])

    @given(st.lists(st.integers(min_value=0, max_value=10**9), min_size=2, max_size=8))
    def test_simplex_invariants(self, counts):
        if sum(counts) == 0:
            counts[0] = 1
        m = empirical_mixture(counts)
        assert np.all(m.weights >= 0)
        assert np.all(m.weights <= 1)
        assert abs(m.weights.sum() - 1.0) <= 1e-9


class TestRho:
    @staticmethod
    def _state(counts, bounds):
        m = len(counts)
        data = DatasetPair.empty(m, 2)
        data.counts[:] = counts
        return RunState(data=data, bounds=np.asarray(bounds, dtype=float))

    def test_zero_bounds(self):
        assert rho(self._state([3, 5], [0.0, 0.0])) == 0.0

    def test_weighted_average(self):
        assert rho(self._state([1, 1], [0.2, 0.4])) == pytest.approx(0.3)

    def test_constant_bounds(self):
        assert rho(self._state([1, 2], [0.3, 0.3])) == pytest.approx(0.3)

    def test_uninitialized_attribute(self):
        with pytest.raises(ValueError, match="uninitialized"):
            rho(self._state([2, 0], [0.1, 0.1]))

    @given(
        st.lists(st.integers(min_value=1, max_value=1000), min_size=2, max_size=6),
        st.data(),
    )
    def test_bounded_by_max_deviation(self, counts, data):
        bounds = data.draw(
            st.lists(
                st.floats(min_value=0.0, max_value=10.0),
                min_size=len(counts),
                max_size=len(counts),
            )
        )
        value = rho(self._state(counts, bounds))
        assert 0.0 <= value <= max(bounds) + 1e-12


class TestSampleBuffer:
    def test_append_and_views(self):
        buf = SampleBuffer(2, capacity=2)
        for i in range(5):
            buf.append(np.array([float(i), -float(i)]), i % 2)
        assert len(buf) == 5
        np.testing.assert_allclose(buf.features[:, 0], [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(buf.labels, [0, 1, 0, 1, 0])

    def test_extend(self):
        buf = SampleBuffer(2)
        buf.extend(np.ones((3, 2)), np.array([1, 0, 1]))
        assert len(buf) == 3

    def test_dimension_check(self):
        buf = SampleBuffer(2)
        with pytest.raises(ValueError):
            buf.append(np.ones(3), 1)


class TestDatasetPair:
    def test_lockstep_growth(self):
        data = DatasetPair.empty(2, 2)
        s = lambda z: LabeledSample(x=np.zeros(2), y=1, z=z)
        data.add_pair(0, s(0), s(0))
        data.add_pair(1, s(1), s(1))
        data.add_pair(0, s(0), s(0))
        np.testing.assert_array_equal(data.counts, [2, 1])
        assert len(data.train) == 3
        assert len(data.validation[0]) == 2
        # training size always equals the union of validation sizes
        assert len(data.train) == sum(len(v) for v in data.validation)

    def test_attribute_mismatch(self):
        data = DatasetPair.empty(2, 2)
        with pytest.raises(ValueError, match="attribute"):
            data.add_pair(0, LabeledSample(np.zeros(2), 1, 1), LabeledSample(np.zeros(2), 1, 0))

    def test_batch_lockstep_enforced(self):
        data = DatasetPair.empty(2, 2)
        with pytest.raises(ValueError, match="lockstep"):
            data.add_batches(0, np.ones((2, 2)), np.ones(2), np.ones((3, 2)), np.ones(3))


class TestLabeledSample:
    def test_validation(self):
        with pytest.raises(ValueError):
            LabeledSample(x=np.zeros(2), y=2, z=0)
        with pytest.raises(ValueError):
            LabeledSample(x=np.zeros((2, 2)), y=1, z=0)


class TestProportionalCounts:
    def test_exact_split(self):
        np.testing.assert_array_equal(proportional_counts(10, [0.5, 0.5]), [5, 5])

    def test_largest_remainder(self):
        np.testing.assert_array_equal(proportional_counts(10, [0.55, 0.45]), [6, 4])

    def test_remainder_tie_breaks_low_index(self):
        np.testing.assert_array_equal(proportional_counts(1, [0.5, 0.5]), [1, 0])

    @given(
        st.integers(min_value=0, max_value=10**6),
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=2, max_size=6),
    )
    def test_totals_preserved(self, total, raw):
        if sum(raw) == 0:
            raw[0] = 1.0
        weights = np.asarray(raw) / sum(raw)
        counts = proportional_counts(total, weights)
        assert counts.sum() == total
        assert np.all(counts >= 0)
