"""Adaptive training-set construction for minimax-fair classification."""

from .bounds import BoundSchedule, HeuristicInverseSqrt, VCEnvelope, deviation
from .classifier import (
    LinearClassifier,
    LossKind,
    TrainConfig,
    TrainingDivergence,
    empirical_loss,
    logistic_gradient,
    logistic_objective,
    sgd_steps,
    train_erm,
)
from .core import (
    DatasetPair,
    LabeledSample,
    MixtureDistribution,
    RunState,
    SampleBuffer,
    empirical_mixture,
    proportional_counts,
    rho,
)
from .evaluation import (
    EqualizationReport,
    GridSweepResult,
    MonotonicityReport,
    check_equalization,
    check_monotonicity,
    draw_training_set,
    excess_risk,
    grid_optimal_mixture,
    write_sweep_csv,
)
from .oracle import (
    FinitePoolSpec,
    GaussianModelSpec,
    OracleSpec,
    instance1,
    instance2,
    load_pool_csv,
    lower_q_gamma,
    lower_q_mu,
    min_group_accuracy,
    resolve_oracle,
    true_loss,
    worst_group_loss,
)
from .schemes import (
    AOpt,
    Empirical,
    EpsilonGreedy,
    Heuristic,
    RunRecord,
    SchemeConfig,
    Uniform,
    run_exact,
    run_heuristic,
    run_scheme,
    select_aopt,
    select_epsilon_greedy,
    ucb,
    validation_losses,
)

__version__ = "0.1.0"
