"""Linear hypotheses with logistic-loss ERM training.

Training minimizes mean logistic loss plus an L2 ridge on the weights by
full-batch gradient descent; the small ridge makes the objective strictly
convex so retraining is deterministic.  Evaluation uses the 0-1 loss with
ties at the decision boundary predicting label 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit
from scipy.special import expit


class TrainingDivergence(RuntimeError):
    """Raised when an optimization step produces non-finite values."""


@dataclass(frozen=True)
class LinearClassifier:
    """Halfspace classifier: predict 1 iff w.x + b >= 0."""

    w: np.ndarray
    b: float

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64).copy()
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.b)):
            raise ValueError("classifier parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def zeros(cls, dim: int) -> "LinearClassifier":
        return cls(np.zeros(dim), 0.0)

    @property
    def dim(self) -> int:
        return len(self.w)

    def decision(self, xs: np.ndarray) -> np.ndarray:
        return np.asarray(xs) @ self.w + self.b

    def predict(self, xs: np.ndarray) -> np.ndarray:
        return (self.decision(xs) >= 0.0).astype(np.int64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearClassifier):
            return NotImplemented
        return self.b == other.b and np.array_equal(self.w, other.w)


class LossKind(Enum):
    ZERO_ONE = "zero_one"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 500
    tolerance: float = 1e-6
    l2: float = 1e-4
    warm_start: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")


def _as_xy(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 2:
        raise ValueError("features must be a (n, d) matrix")
    if len(xs) != len(ys):
        raise ValueError("features and labels length mismatch")
    if len(xs) == 0:
        raise ValueError("empty dataset")
    return xs, ys


def empirical_loss(f: LinearClassifier, xs, ys, kind: LossKind) -> float:
    """Mean per-sample loss of f on the data."""
    xs, ys = _as_xy(xs, ys)
    margins = f.decision(xs)
    if kind is LossKind.ZERO_ONE:
        preds = margins >= 0.0
        return float(np.mean(preds != ys.astype(bool)))
    # log(1 + exp(-s * margin)) with s = +-1, computed stably
    signs = 2.0 * ys - 1.0
    return float(np.mean(np.logaddexp(0.0, -signs * margins)))


def logistic_objective(f: LinearClassifier, xs, ys, l2: float = 0.0) -> float:
    """Mean logistic loss plus (l2 / 2) * ||w||^2."""
    base = empirical_loss(f, xs, ys, LossKind.LOGISTIC)
    return base + 0.5 * l2 * float(f.w @ f.w)


def logistic_gradient(f: LinearClassifier, xs, ys, l2: float = 0.0):
    """Gradient of the ridge logistic objective; returns (grad_w, grad_b)."""
    xs, ys = _as_xy(xs, ys)
    p = expit(f.decision(xs))
    resid = (p - ys) / len(ys)
    grad_w = xs.T @ resid + l2 * f.w
    grad_b = float(resid.sum())
    return grad_w, grad_b


@njit(cache=True)
def _gd_loop(xs, ys, w, b, lr, l2, tol_sq, max_epochs):
    """Full-batch gradient descent on the ridge logistic objective.

    Mutates w in place; returns (b, ok) where ok is False on a non-finite
    gradient.  Stops once the squared joint gradient norm falls to tol_sq.
    """
    n, dim = xs.shape
    inv_n = 1.0 / n
    grad_w = np.empty(dim)
    for _ in range(max_epochs):
        for j in range(dim):
            grad_w[j] = l2 * w[j]
        grad_b = 0.0
        for i in range(n):
            margin = b
            for j in range(dim):
                margin += xs[i, j] * w[j]
            p = 1.0 / (1.0 + np.exp(-margin))
            r = (p - ys[i]) * inv_n
            for j in range(dim):
                grad_w[j] += xs[i, j] * r
            grad_b += r
        gnorm_sq = grad_b * grad_b
        for j in range(dim):
            gnorm_sq += grad_w[j] * grad_w[j]
        if not np.isfinite(gnorm_sq):
            return b, False
        if gnorm_sq <= tol_sq:
            break
        for j in range(dim):
            w[j] -= lr * grad_w[j]
        b -= lr * grad_b
    return b, True


def train_erm(xs, ys, cfg: TrainConfig, init: LinearClassifier | None = None) -> LinearClassifier:
    """Fit a linear classifier by full-batch gradient descent.

    Runs until the joint gradient norm over (w, b) drops to ``cfg.tolerance``
    or ``cfg.max_epochs`` is reached.  ``init`` warm-starts the parameters;
    otherwise training starts from zero.  The epoch loop is JIT-compiled;
    retraining-per-round workloads call this thousands of times.
    """
    xs, ys = _as_xy(xs, ys)
    n, dim = xs.shape
    if init is not None:
        if init.dim != dim:
            raise ValueError(f"warm start dimension {init.dim} != data dimension {dim}")
        w = init.w.copy()
        b = init.b
    else:
        w = np.zeros(dim)
        b = 0.0
    b, ok = _gd_loop(
        np.ascontiguousarray(xs),
        ys,
        w,
        b,
        cfg.learning_rate,
        cfg.l2,
        cfg.tolerance * cfg.tolerance,
        cfg.max_epochs,
    )
    if not ok:
        raise TrainingDivergence("divergence: non-finite gradient (learning rate too large?)")
    if not (np.all(np.isfinite(w)) and np.isfinite(b)):
        raise TrainingDivergence("divergence: non-finite parameters")
    return LinearClassifier(w, b)


def sgd_steps(f: LinearClassifier, minibatches, rate: float) -> LinearClassifier:
    """Apply one logistic-loss gradient step per minibatch, in order.

    ``minibatches`` is a sequence of (features, labels) pairs; an empty
    sequence returns the classifier unchanged.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    w = f.w.copy()
    b = f.b
    for xs, ys in minibatches:
        xs, ys = _as_xy(xs, ys)
        if xs.shape[1] != len(w):
            raise ValueError("batch dimension does not match the classifier")
        p = expit(xs @ w + b)
        resid = (p - ys) / len(ys)
        w -= rate * (xs.T @ resid)
        b -= rate * resid.sum()
        if not (np.all(np.isfinite(w)) and np.isfinite(b)):
            raise TrainingDivergence("divergence: non-finite update")
    return LinearClassifier(w, b)
