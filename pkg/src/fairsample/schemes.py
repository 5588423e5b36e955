"""Sampling strategies and their round-execution drivers.

The exact schemes (optimistic UCB, epsilon-greedy, empirical, uniform) draw
one pair of samples per round and retrain the classifier every round; the
heuristic variant draws minibatch blocks and applies SGD steps instead, with
a pluggable selection rule so the same batched driver covers optimistic,
epsilon-greedy, empirical, and uniform selection.

All selections break ties toward the smallest attribute index, and a run is
fully determined by its configuration and generator seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundSchedule, HeuristicInverseSqrt
from .classifier import LinearClassifier, LossKind, TrainConfig, empirical_loss, train_erm, sgd_steps
from .core import DatasetPair, MixtureDistribution, RunState, proportional_counts, rho

HEURISTIC_SELECTORS = ("ucb", "epsilon_greedy", "empirical", "uniform")


# ---------------------------------------------------------------------------
# Scheme configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AOpt:
    """Optimistic selection by upper confidence bound.

    With ``zeta`` unset the UCB is the three-term form
    loss + e_z + (ucb_multiplier * C / pi_t(z)) * rho_t and forced
    exploration keeps every count above sqrt(t).  Setting ``zeta`` in
    (0.5, 1) switches to the C-free two-term UCB with a t**zeta forced
    exploration floor.
    """

    C: float = 1.0
    ucb_multiplier: float = 2.0
    zeta: float | None = None

    def __post_init__(self) -> None:
        if self.zeta is None:
            if self.C <= 0:
                raise ValueError("C must be positive when the C term is active")
        elif not 0.5 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0.5, 1)")

    @property
    def exploration_exponent(self) -> float:
        return 0.5 if self.zeta is None else self.zeta


@dataclass(frozen=True)
class EpsilonGreedy:
    """Explore a fixed base distribution w.p. epsilon, else follow the loss."""

    epsilon: float
    base: MixtureDistribution | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be a probability")
        if self.base is not None and self.base.min_weight <= 0.0:
            raise ValueError("base distribution must put mass on every attribute")


@dataclass(frozen=True)
class Empirical:
    """Pure greedy selection: epsilon-greedy with epsilon = 0."""


@dataclass(frozen=True)
class Uniform:
    """Round-robin over attributes."""


@dataclass(frozen=True)
class Heuristic:
    """Batched variant: per step draw 2*k0 minibatches of b0 and take k0 SGD steps.

    ``selector`` picks the attribute each step: "ucb" scores by validation
    loss plus c0 / sqrt(N_z), "epsilon_greedy" explores uniformly w.p.
    ``epsilon`` and otherwise follows the loss, "empirical" always follows
    the loss, and "uniform" cycles round-robin.
    """

    n0: int = 10
    k0: int = 4
    b0: int = 50
    c0: float = 0.1
    pi0: MixtureDistribution | None = None
    selector: str = "ucb"
    epsilon: float = 0.1

    def __post_init__(self) -> None:
        if self.n0 < 1:
            raise ValueError("n0 must be positive")
        if self.k0 < 0:
            raise ValueError("k0 must be nonnegative")
        if self.b0 < 1:
            raise ValueError("b0 must be positive")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        if self.selector not in HEURISTIC_SELECTORS:
            raise ValueError(f"selector must be one of {HEURISTIC_SELECTORS}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be a probability")


SchemeKind = AOpt | EpsilonGreedy | Empirical | Uniform | Heuristic


@dataclass(frozen=True)
class SchemeConfig:
    kind: SchemeKind
    bounds: BoundSchedule = field(default_factory=HeuristicInverseSqrt)
    selection_loss: LossKind = LossKind.ZERO_ONE


# ---------------------------------------------------------------------------
# Selection rules
# ---------------------------------------------------------------------------

def validation_losses(state: RunState, kind: LossKind) -> np.ndarray:
    """Mean loss of the current classifier on each attribute's validation set."""
    if state.classifier is None:
        raise ValueError("no classifier trained yet")
    out = np.empty(state.num_attributes)
    for z, buf in enumerate(state.data.validation):
        if len(buf) == 0:
            raise ValueError(f"uninitialized attribute {z}: no validation samples")
        out[z] = empirical_loss(state.classifier, buf.features, buf.labels, kind)
    return out


def ucb(state: RunState, z: int, cfg: SchemeConfig) -> float:
    """Upper confidence bound for attribute z under the current state."""
    kind = cfg.kind
    if not isinstance(kind, AOpt):
        raise TypeError("ucb is defined for the optimistic scheme")
    buf = state.data.validation[z]
    if len(buf) == 0:
        raise ValueError(f"uninitialized attribute {z}: no validation samples")
    loss = empirical_loss(state.classifier, buf.features, buf.labels, cfg.selection_loss)
    value = loss + float(state.bounds[z])
    if kind.zeta is not None:
        return value
    pi_z = state.data.counts[z] / state.t
    if pi_z == 0.0:
        raise ValueError(f"attribute {z} has empirical mass zero")
    return value + (kind.ucb_multiplier * kind.C / pi_z) * rho(state)


def _ucb_all(state: RunState, cfg: SchemeConfig) -> np.ndarray:
    kind = cfg.kind
    losses = validation_losses(state, cfg.selection_loss)
    values = losses + state.bounds
    if kind.zeta is None:
        pi = state.data.counts / state.t
        values = values + (kind.ucb_multiplier * kind.C / pi) * rho(state)
    return values


def select_aopt(state: RunState, cfg: SchemeConfig) -> int:
    """Forced exploration below the t**q floor, otherwise the largest UCB."""
    kind = cfg.kind
    counts = state.data.counts
    floor = state.t ** kind.exploration_exponent
    if counts.min() < floor:
        return int(np.argmin(counts))
    return int(np.argmax(_ucb_all(state, cfg)))


def select_epsilon_greedy(state: RunState, cfg: SchemeConfig, rng: np.random.Generator) -> int:
    """W.p. epsilon sample the base distribution, else argmax validation loss."""
    kind = cfg.kind
    if isinstance(kind, Empirical):
        kind = EpsilonGreedy(0.0)
    base = kind.base
    if base is not None and len(base) != state.num_attributes:
        raise ValueError("base distribution size does not match the oracle")
    if rng.random() < kind.epsilon:
        weights = base.weights if base is not None else None
        return int(rng.choice(state.num_attributes, p=weights))
    return int(np.argmax(validation_losses(state, cfg.selection_loss)))


# ---------------------------------------------------------------------------
# Run records
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    """Time-indexed log of one seeded run.

    Each logged row captures the state after a round's update: total
    per-side sample count t, the attribute selected that round, the
    empirical mixture, per-attribute validation losses, and per-attribute
    counts.  ``min_accuracy`` and ``excess_risk`` are filled in by the
    experiment driver when evaluation is enabled.
    """

    num_attributes: int
    budget: int
    ts: list[int] = field(default_factory=list)
    zs: list[int] = field(default_factory=list)
    pis: list[np.ndarray] = field(default_factory=list)
    losses: list[np.ndarray] = field(default_factory=list)
    counts: list[np.ndarray] = field(default_factory=list)
    final_pi: MixtureDistribution | None = None
    final_classifier: LinearClassifier | None = None
    total_draws: int = 0
    trial: int = 0
    min_accuracy: float | None = None
    excess_risk: float | None = None

    def log(self, state: RunState, selected: int, loss_kind: LossKind) -> None:
        t = state.t
        if self.ts and t <= self.ts[-1]:
            raise ValueError("logged rounds must be strictly increasing")
        self.ts.append(t)
        self.zs.append(selected)
        self.pis.append(state.data.counts / t)
        self.losses.append(validation_losses(state, loss_kind))
        self.counts.append(state.data.counts.copy())


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def _retrain(state: RunState, train_cfg: TrainConfig) -> None:
    init = state.classifier if (train_cfg.warm_start and state.classifier is not None) else None
    buf = state.data.train
    state.classifier = train_erm(buf.features, buf.labels, train_cfg, init=init)


def _draw_pair(spec, z: int, state: RunState, rng: np.random.Generator, schedule) -> None:
    first = spec.draw(z, rng)
    second = spec.draw(z, rng)
    state.data.add_pair(z, first, second)
    state.bounds[z] = schedule.deviation(int(state.data.counts[z]))


def run_exact(
    cfg: SchemeConfig,
    spec,
    budget: int,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
    record_stride: int = 10,
) -> RunRecord:
    """Execute one run of an exact (retrain-every-round) scheme.

    The budget counts individual oracle draws; each round consumes two, so
    the run lasts budget / 2 rounds.  The first m rounds visit the
    attributes in index order; afterwards the configured rule selects.
    """
    if isinstance(cfg.kind, Heuristic):
        raise TypeError("heuristic configurations run via run_heuristic")
    m = spec.num_attributes
    if budget % 2 != 0:
        raise ValueError("budget must be even (two draws per round)")
    if budget < 4 * m:
        raise ValueError(f"budget must be at least {4 * m} for m={m}")
    if record_stride < 1:
        raise ValueError("record_stride must be positive")
    rounds = budget // 2

    state = RunState(data=DatasetPair.empty(m, spec.dim), bounds=np.zeros(m))
    record = RunRecord(num_attributes=m, budget=budget)

    for z in range(m):
        _draw_pair(spec, z, state, rng, cfg.bounds)
    _retrain(state, train_cfg)
    record.log(state, m - 1, cfg.selection_loss)

    kind = cfg.kind
    for r in range(m + 1, rounds + 1):
        if isinstance(kind, AOpt):
            z = select_aopt(state, cfg)
        elif isinstance(kind, (EpsilonGreedy, Empirical)):
            z = select_epsilon_greedy(state, cfg, rng)
        elif isinstance(kind, Uniform):
            z = (r - 1) % m
        else:
            raise TypeError(f"unsupported scheme kind {type(kind).__name__}")
        _draw_pair(spec, z, state, rng, cfg.bounds)
        _retrain(state, train_cfg)
        if r % record_stride == 0 or r == rounds:
            record.log(state, z, cfg.selection_loss)

    record.final_pi = state.pi
    record.final_classifier = state.classifier
    record.total_draws = 2 * state.t
    return record


def _heuristic_select(
    kind: Heuristic,
    state: RunState,
    cfg: SchemeConfig,
    step: int,
    rng: np.random.Generator,
) -> int:
    if kind.selector == "uniform":
        return step % state.num_attributes
    losses = validation_losses(state, cfg.selection_loss)
    if kind.selector == "ucb":
        bonus = kind.c0 / np.sqrt(state.data.counts)
        return int(np.argmax(losses + bonus))
    if kind.selector == "epsilon_greedy" and rng.random() < kind.epsilon:
        return int(rng.choice(state.num_attributes))
    return int(np.argmax(losses))


def run_heuristic(
    cfg: SchemeConfig,
    spec,
    budget: int,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
    record_stride: int = 1,
) -> RunRecord:
    """Execute one run of the batched heuristic scheme.

    The init phase draws n0 sample pairs allocated across attributes in
    proportion to pi0 and fits the classifier by ERM.  Each later step
    selects an attribute, draws 2*k0 minibatches of size b0 (first k0 to the
    training set, rest to that attribute's validation set), and applies k0
    SGD steps.  Every drawn sample counts against the budget; a step that
    would overshoot is skipped, so the shortfall stays below 2*k0*b0.
    """
    kind = cfg.kind
    if not isinstance(kind, Heuristic):
        raise TypeError("run_heuristic needs a heuristic configuration")
    m = spec.num_attributes
    if record_stride < 1:
        raise ValueError("record_stride must be positive")
    if budget < 2 * kind.n0:
        raise ValueError(f"budget must cover the init phase ({2 * kind.n0} draws)")
    pi0 = kind.pi0 if kind.pi0 is not None else MixtureDistribution.uniform(m)
    if len(pi0) != m:
        raise ValueError("pi0 size does not match the oracle")
    init_pairs = proportional_counts(kind.n0, pi0.weights)
    if init_pairs.min() < 1:
        raise ValueError("init phase must give every attribute at least one pair; "
                         "increase n0 or adjust pi0")

    state = RunState(data=DatasetPair.empty(m, spec.dim), bounds=np.zeros(m))
    record = RunRecord(num_attributes=m, budget=budget)
    draws = 0
    for z in range(m):
        for _ in range(int(init_pairs[z])):
            _draw_pair(spec, z, state, rng, cfg.bounds)
            draws += 2
    buf = state.data.train
    state.classifier = train_erm(buf.features, buf.labels, train_cfg)
    record.log(state, m - 1, cfg.selection_loss)

    block = 2 * kind.k0 * kind.b0
    step = 0
    while block > 0 and draws + block <= budget:
        z = _heuristic_select(kind, state, cfg, step, rng)
        train_batches = [spec.draw_batch(z, kind.b0, rng) for _ in range(kind.k0)]
        val_batches = [spec.draw_batch(z, kind.b0, rng) for _ in range(kind.k0)]
        state.data.add_batches(
            z,
            np.concatenate([b[0] for b in train_batches]),
            np.concatenate([b[1] for b in train_batches]),
            np.concatenate([b[0] for b in val_batches]),
            np.concatenate([b[1] for b in val_batches]),
        )
        draws += block
        state.bounds[z] = cfg.bounds.deviation(int(state.data.counts[z]))
        state.classifier = sgd_steps(state.classifier, train_batches, train_cfg.learning_rate)
        step += 1
        if step % record_stride == 0 or draws + block > budget:
            record.log(state, z, cfg.selection_loss)

    record.final_pi = state.pi
    record.final_classifier = state.classifier
    record.total_draws = draws
    return record


def run_scheme(
    cfg: SchemeConfig,
    spec,
    budget: int,
    train_cfg: TrainConfig,
    rng: np.random.Generator,
    record_stride: int = 10,
) -> RunRecord:
    """Dispatch to the exact or heuristic driver based on the scheme kind."""
    if isinstance(cfg.kind, Heuristic):
        return run_heuristic(cfg, spec, budget, train_cfg, rng, record_stride)
    return run_exact(cfg, spec, budget, train_cfg, rng, record_stride)
