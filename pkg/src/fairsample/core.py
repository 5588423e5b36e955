"""Shared domain types: samples, mixtures, datasets, and sampler state.

Attributes are plain integer indices in ``[0, m)`` with ``m >= 2``.  Counts
are kept as exact integers; the empirical mixture is derived from them on
demand rather than accumulated in floating point, so it cannot drift over
long runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import LinearClassifier

SIMPLEX_ATOL = 1e-9


@dataclass(frozen=True)
class LabeledSample:
    """One oracle observation: feature vector, binary label, attribute."""

    x: np.ndarray
    y: int
    z: int

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("feature must be a 1-d vector")
        if self.y not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.y}")
        if self.z < 0:
            raise ValueError(f"attribute index must be nonnegative, got {self.z}")
        object.__setattr__(self, "x", x)


class MixtureDistribution:
    """Point on the probability simplex over the m attributes.

    Weights are nonnegative and sum to one within ``SIMPLEX_ATOL``.  The
    backing array is read-only; instances are safe to share.
    """

    __slots__ = ("weights",)

    def __init__(self, weights) -> None:
        w = np.asarray(weights, dtype=np.float64).copy()
        if w.ndim != 1 or len(w) < 2:
            raise ValueError("mixture needs at least two attributes")
        if not np.all(np.isfinite(w)):
            raise ValueError("mixture weights must be finite")
        if np.any(w < 0):
            raise ValueError(f"mixture weights must be nonnegative, got {w}")
        total = w.sum()
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"mixture weights sum to {total}, expected 1")
        w.setflags(write=False)
        self.weights = w

    @classmethod
    def uniform(cls, m: int) -> "MixtureDistribution":
        return cls(np.full(m, 1.0 / m))

    @property
    def min_weight(self) -> float:
        return float(self.weights.min())

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, z: int) -> float:
        return float(self.weights[z])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixtureDistribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __repr__(self) -> str:
        return f"MixtureDistribution({self.weights.tolist()})"


def empirical_mixture(counts) -> MixtureDistribution:
    """Mixture implied by a per-attribute query history, counts[z] / total."""
    c = np.asarray(counts, dtype=np.int64)
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    total = int(c.sum())
    if total == 0:
        raise ValueError("empty history: all counts are zero")
    return MixtureDistribution(c / total)


class SampleBuffer:
    """Append-only (features, labels) storage with amortized growth.

    ``features``/``labels`` return views into the live prefix; views taken
    before an append may become stale, so re-read them at each use.
    """

    def __init__(self, dim: int, capacity: int = 64) -> None:
        if dim < 1:
            raise ValueError("feature dimension must be positive")
        self._x = np.empty((capacity, dim), dtype=np.float64)
        self._y = np.empty(capacity, dtype=np.int64)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def dim(self) -> int:
        return self._x.shape[1]

    @property
    def features(self) -> np.ndarray:
        return self._x[: self._size]

    @property
    def labels(self) -> np.ndarray:
        return self._y[: self._size]

    def _reserve(self, extra: int) -> None:
        need = self._size + extra
        if need <= self._x.shape[0]:
            return
        cap = max(need, 2 * self._x.shape[0])
        x = np.empty((cap, self.dim), dtype=np.float64)
        y = np.empty(cap, dtype=np.int64)
        x[: self._size] = self._x[: self._size]
        y[: self._size] = self._y[: self._size]
        self._x, self._y = x, y

    def append(self, x: np.ndarray, y: int) -> None:
        if len(x) != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got {len(x)}")
        self._reserve(1)
        self._x[self._size] = x
        self._y[self._size] = y
        self._size += 1

    def extend(self, xs: np.ndarray, ys: np.ndarray) -> None:
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys)
        if xs.ndim != 2 or xs.shape[1] != self.dim:
            raise ValueError(f"expected (k, {self.dim}) features, got {xs.shape}")
        if len(xs) != len(ys):
            raise ValueError("features and labels length mismatch")
        self._reserve(len(xs))
        self._x[self._size : self._size + len(xs)] = xs
        self._y[self._size : self._size + len(ys)] = ys
        self._size += len(xs)


@dataclass
class DatasetPair:
    """Training set plus per-attribute validation sets grown in lockstep.

    Every query routes one sample to the shared training buffer and one to
    the selected attribute's validation buffer, so ``counts[z]`` equals both
    the validation size and the number of training samples drawn from z.
    """

    train: SampleBuffer
    validation: list[SampleBuffer]
    counts: np.ndarray

    @classmethod
    def empty(cls, num_attributes: int, dim: int) -> "DatasetPair":
        if num_attributes < 2:
            raise ValueError("need at least two attributes")
        return cls(
            train=SampleBuffer(dim),
            validation=[SampleBuffer(dim) for _ in range(num_attributes)],
            counts=np.zeros(num_attributes, dtype=np.int64),
        )

    @property
    def num_attributes(self) -> int:
        return len(self.validation)

    def add_pair(self, z: int, train_sample: LabeledSample, val_sample: LabeledSample) -> None:
        if train_sample.z != z or val_sample.z != z:
            raise ValueError("sample attribute does not match the query")
        self.train.append(train_sample.x, train_sample.y)
        self.validation[z].append(val_sample.x, val_sample.y)
        self.counts[z] += 1

    def add_batches(self, z: int, train_x, train_y, val_x, val_y) -> None:
        if len(train_x) != len(val_x):
            raise ValueError("training and validation batches must grow in lockstep")
        self.train.extend(train_x, train_y)
        self.validation[z].extend(val_x, val_y)
        self.counts[z] += len(val_x)


@dataclass
class RunState:
    """Mutable state of one sampling run; owned by a single sequential run.

    ``bounds[z]`` caches the current deviation value e_z at the attribute's
    count.  ``t`` and ``pi`` are derived from the exact integer counts.
    """

    data: DatasetPair
    classifier: LinearClassifier | None = None
    bounds: np.ndarray = field(default_factory=lambda: np.array([]))

    @property
    def t(self) -> int:
        return int(self.data.counts.sum())

    @property
    def pi(self) -> MixtureDistribution:
        return empirical_mixture(self.data.counts)

    @property
    def num_attributes(self) -> int:
        return self.data.num_attributes


def proportional_counts(total: int, weights) -> np.ndarray:
    """Split ``total`` into integer counts proportional to ``weights``.

    Largest-remainder rounding; remainder ties go to the lowest attribute
    index, so the split is deterministic.
    """
    w = np.asarray(weights, dtype=np.float64)
    if total < 0:
        raise ValueError("total must be nonnegative")
    raw = w * total
    base = np.floor(raw).astype(np.int64)
    shortfall = total - int(base.sum())
    if shortfall > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:shortfall]] += 1
    return base


def rho(state: RunState) -> float:
    """Mixture-weighted deviation sum_z pi_t(z) * e_z(N_z) for the state."""
    counts = state.data.counts
    if np.any(counts == 0):
        raise ValueError("uninitialized attribute: every attribute needs a sample")
    if len(state.bounds) != len(counts):
        raise ValueError("bounds not initialized for every attribute")
    pi = counts / counts.sum()
    return float(np.dot(pi, state.bounds))
