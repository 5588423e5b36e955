import numpy as np
import pytest
from scipy import stats

from fairsample import (
    AOpt,
    DatasetPair,
    Empirical,
    EpsilonGreedy,
    Heuristic,
    HeuristicInverseSqrt,
    LabeledSample,
    LinearClassifier,
    LossKind,
    MixtureDistribution,
    RunState,
    SchemeConfig,
    TrainConfig,
    Uniform,
    instance1,
    run_exact,
    run_heuristic,
    run_scheme,
    select_aopt,
    select_epsilon_greedy,
    ucb,
)

FAST_TRAIN = TrainConfig(max_epochs=40)


def make_state(totals, wrongs, bounds):
    """State whose classifier (x0 >= 0) has validation loss wrongs[z]/totals[z]."""
    data = DatasetPair.empty(len(totals), 2)
    for z, (total, wrong) in enumerate(zip(totals, wrongs)):
        for i in range(total):
            val = LabeledSample(np.array([1.0, 0.0]), 0 if i < wrong else 1, z)
            train = LabeledSample(np.array([1.0, 0.0]), 1, z)
            data.add_pair(z, train, val)
    return RunState(
        data=data,
        classifier=LinearClassifier(np.array([1.0, 0.0]), 0.0),
        bounds=np.asarray(bounds, dtype=float),
    )


class TestConfigValidation:
    def test_aopt_needs_positive_c(self):
        with pytest.raises(ValueError, match="C must be positive"):
            AOpt(C=0.0)
        AOpt(C=0.0, zeta=0.6)  # legal: the C term is dropped

    def test_zeta_range(self):
        with pytest.raises(ValueError):
            AOpt(zeta=0.5)
        with pytest.raises(ValueError):
            AOpt(zeta=1.0)

    def test_epsilon_greedy_base_mass(self):
        with pytest.raises(ValueError, match="mass"):
            EpsilonGreedy(0.5, base=MixtureDistribution([1.0, 0.0]))

    def test_heuristic_fields(self):
        with pytest.raises(ValueError):
            Heuristic(n0=0)
        with pytest.raises(ValueError):
            Heuristic(k0=-1)
        with pytest.raises(ValueError):
            Heuristic(selector="greedy")


class TestUcb:
    def test_three_term_hand_value(self):
        state = make_state((5, 5), (1, 1), (0.1, 0.1))
        cfg = SchemeConfig(kind=AOpt(C=1.0, ucb_multiplier=2.0))
        # 0.2 + 0.1 + (2 / 0.5) * (0.5*0.1 + 0.5*0.1) = 0.7 for both attributes
        assert ucb(state, 0, cfg) == pytest.approx(0.7)
        assert ucb(state, 1, cfg) == pytest.approx(0.7)

    def test_vanishing_bounds_leave_empirical_loss(self):
        state = make_state((5, 5), (1, 2), (0.0, 0.0))
        cfg = SchemeConfig(kind=AOpt(C=1.0))
        assert ucb(state, 0, cfg) == pytest.approx(0.2)
        assert ucb(state, 1, cfg) == pytest.approx(0.4)

    def test_c_free_variant_ignores_c(self):
        state = make_state((10, 10), (3, 3), (0.05, 0.05))
        small = SchemeConfig(kind=AOpt(C=1.0, zeta=0.6))
        large = SchemeConfig(kind=AOpt(C=100.0, zeta=0.6))
        assert ucb(state, 0, small) == pytest.approx(0.35)
        assert ucb(state, 0, large) == pytest.approx(0.35)

    def test_multiplier_four(self):
        state = make_state((5, 5), (1, 1), (0.1, 0.1))
        cfg = SchemeConfig(kind=AOpt(C=1.0, ucb_multiplier=4.0))
        assert ucb(state, 0, cfg) == pytest.approx(0.2 + 0.1 + (4.0 / 0.5) * 0.1)


class TestSelection:
    def test_forced_exploration_below_floor(self):
        state = make_state((5, 95), (0, 0), (0.0, 0.0))
        cfg = SchemeConfig(kind=AOpt(C=1.0))
        assert state.t == 100
        assert select_aopt(state, cfg) == 0  # 5 < sqrt(100)

    def test_argmax_ucb_above_floor(self):
        state = make_state((50, 50), (10, 20), (0.05, 0.05))
        cfg = SchemeConfig(kind=AOpt(C=1.0))
        assert select_aopt(state, cfg) == 1

    def test_tie_breaks_to_smallest_index(self):
        state = make_state((50, 50), (10, 10), (0.05, 0.05))
        cfg = SchemeConfig(kind=AOpt(C=1.0))
        assert select_aopt(state, cfg) == 0

    def test_pure_greedy_takes_largest_loss(self):
        state = make_state((10, 10), (3, 1), (0.0, 0.0))
        cfg = SchemeConfig(kind=EpsilonGreedy(0.0))
        assert select_epsilon_greedy(state, cfg, np.random.default_rng(0)) == 0

    def test_base_size_checked(self):
        state = make_state((10, 10), (3, 1), (0.0, 0.0))
        cfg = SchemeConfig(kind=EpsilonGreedy(1.0, base=MixtureDistribution.uniform(3)))
        with pytest.raises(ValueError, match="size"):
            select_epsilon_greedy(state, cfg, np.random.default_rng(0))

    def test_pure_exploration_matches_uniform_marginal(self):
        cfg = SchemeConfig(kind=EpsilonGreedy(1.0))
        rec = run_exact(
            cfg, instance1(), 20_008, TrainConfig(max_epochs=1),
            np.random.default_rng(10), record_stride=10**9,
        )
        selections = rec.counts[-1] - 1  # drop the init visit per attribute
        test = stats.chisquare(selections)
        assert test.pvalue > 0.01


class TestRunExact:
    def test_uniform_round_robin_counts(self):
        rec = run_exact(
            SchemeConfig(kind=Uniform()), instance1(), 400, FAST_TRAIN,
            np.random.default_rng(0), record_stride=10**9,
        )
        np.testing.assert_array_equal(rec.counts[-1], [100, 100])
        assert rec.total_draws == 400

    def test_budget_validation(self):
        spec = instance1()
        with pytest.raises(ValueError, match="even"):
            run_exact(SchemeConfig(kind=Uniform()), spec, 41, FAST_TRAIN, np.random.default_rng(0))
        with pytest.raises(ValueError, match="at least"):
            run_exact(SchemeConfig(kind=Uniform()), spec, 6, FAST_TRAIN, np.random.default_rng(0))

    def test_budget_exactness(self):
        cfg = SchemeConfig(kind=AOpt(zeta=0.6), bounds=HeuristicInverseSqrt(0.1))
        rec = run_exact(cfg, instance1(), 240, FAST_TRAIN, np.random.default_rng(3))
        assert rec.total_draws == 240
        assert 2 * int(rec.counts[-1].sum()) == 240

    def test_deterministic_given_seed(self):
        cfg = SchemeConfig(kind=EpsilonGreedy(0.1))
        a = run_exact(cfg, instance1(), 300, FAST_TRAIN, np.random.default_rng(5), record_stride=1)
        b = run_exact(cfg, instance1(), 300, FAST_TRAIN, np.random.default_rng(5), record_stride=1)
        assert a.zs == b.zs
        assert a.ts == b.ts
        np.testing.assert_array_equal(np.vstack(a.pis), np.vstack(b.pis))
        np.testing.assert_array_equal(np.vstack(a.losses), np.vstack(b.losses))
        np.testing.assert_array_equal(a.final_classifier.w, b.final_classifier.w)
        assert a.final_classifier.b == b.final_classifier.b

    def test_empirical_is_epsilon_zero(self):
        a = run_exact(
            SchemeConfig(kind=Empirical()), instance1(), 300, FAST_TRAIN,
            np.random.default_rng(7), record_stride=1,
        )
        b = run_exact(
            SchemeConfig(kind=EpsilonGreedy(0.0)), instance1(), 300, FAST_TRAIN,
            np.random.default_rng(7), record_stride=1,
        )
        assert a.zs == b.zs
        np.testing.assert_array_equal(np.vstack(a.pis), np.vstack(b.pis))

    @pytest.mark.parametrize("kind", [AOpt(C=1.0), AOpt(zeta=0.6)])
    def test_forced_exploration_floor(self, kind):
        cfg = SchemeConfig(kind=kind, bounds=HeuristicInverseSqrt(0.1))
        rec = run_exact(cfg, instance1(), 600, FAST_TRAIN, np.random.default_rng(77), record_stride=1)
        for t, counts in zip(rec.ts, rec.counts):
            assert counts.min() >= int(np.floor(np.sqrt(t))) - 1

    def test_simplex_invariants_every_round(self):
        cfg = SchemeConfig(kind=AOpt(C=1.0), bounds=HeuristicInverseSqrt(0.1))
        rec = run_exact(cfg, instance1(), 200, FAST_TRAIN, np.random.default_rng(2), record_stride=1)
        for t, pi, counts in zip(rec.ts, rec.pis, rec.counts):
            assert abs(pi.sum() - 1.0) <= 1e-9
            assert np.all(pi >= 0) and np.all(pi <= 1)
            np.testing.assert_array_equal(pi, counts / t)

    def test_rows_strictly_increasing(self):
        cfg = SchemeConfig(kind=Uniform())
        rec = run_exact(cfg, instance1(), 200, FAST_TRAIN, np.random.default_rng(1), record_stride=7)
        assert all(b > a for a, b in zip(rec.ts, rec.ts[1:]))

    def test_logistic_selection_loss_supported(self):
        cfg = SchemeConfig(kind=Empirical(), selection_loss=LossKind.LOGISTIC)
        rec = run_exact(cfg, instance1(), 100, FAST_TRAIN, np.random.default_rng(4))
        assert rec.final_pi is not None

    def test_heuristic_config_rejected(self):
        with pytest.raises(TypeError):
            run_exact(
                SchemeConfig(kind=Heuristic()), instance1(), 400, FAST_TRAIN,
                np.random.default_rng(0),
            )


class TestRunHeuristic:
    def test_one_step_bookkeeping(self):
        kind = Heuristic(n0=4, k0=2, b0=3, c0=0.1)
        cfg = SchemeConfig(kind=kind)
        rec = run_heuristic(cfg, instance1(), 2 * 4 + 2 * 2 * 3, FAST_TRAIN, np.random.default_rng(0))
        assert rec.total_draws == 20
        final = rec.counts[-1]
        assert final.sum() == 4 + 2 * 3  # init pairs plus one k0*b0 block
        assert sorted(final.tolist()) == [2, 8]

    def test_budget_shortfall_below_block(self):
        kind = Heuristic(n0=10, k0=4, b0=50)
        cfg = SchemeConfig(kind=kind)
        rec = run_heuristic(cfg, instance1(), 2000, FAST_TRAIN, np.random.default_rng(1))
        assert rec.total_draws == 1620  # 20 init draws + 4 blocks of 400
        assert 2000 - rec.total_draws < 2 * 4 * 50

    def test_k0_zero_keeps_init_classifier(self):
        kind = Heuristic(n0=4, k0=0, b0=3)
        cfg = SchemeConfig(kind=kind)
        rec = run_heuristic(cfg, instance1(), 40, FAST_TRAIN, np.random.default_rng(2))
        assert rec.total_draws == 8
        assert len(rec.ts) == 1

    def test_init_must_cover_every_attribute(self):
        cfg = SchemeConfig(kind=Heuristic(n0=1))
        with pytest.raises(ValueError, match="every attribute"):
            run_heuristic(cfg, instance1(), 100, FAST_TRAIN, np.random.default_rng(0))

    def test_budget_must_cover_init(self):
        cfg = SchemeConfig(kind=Heuristic(n0=10))
        with pytest.raises(ValueError, match="init phase"):
            run_heuristic(cfg, instance1(), 10, FAST_TRAIN, np.random.default_rng(0))

    def test_uniform_selector_cycles(self):
        kind = Heuristic(n0=2, k0=1, b0=2, selector="uniform")
        cfg = SchemeConfig(kind=kind)
        rec = run_heuristic(cfg, instance1(), 2 * 2 + 4 * 4, FAST_TRAIN, np.random.default_rng(0),
                            record_stride=1)
        assert rec.zs[1:] == [0, 1, 0, 1]

    def test_pi0_allocation(self):
        kind = Heuristic(n0=10, k0=0, b0=1, pi0=MixtureDistribution([0.7, 0.3]))
        cfg = SchemeConfig(kind=kind)
        rec = run_heuristic(cfg, instance1(), 20, FAST_TRAIN, np.random.default_rng(0))
        np.testing.assert_array_equal(rec.counts[-1], [7, 3])

    def test_dispatch(self):
        rec = run_scheme(
            SchemeConfig(kind=Heuristic(n0=4, k0=1, b0=2)), instance1(), 24, FAST_TRAIN,
            np.random.default_rng(0),
        )
        assert rec.total_draws <= 24
