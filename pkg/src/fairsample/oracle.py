"""Per-attribute conditional sample sources.

Two oracle kinds are provided: a two-dimensional Gaussian class-conditional
model with identity covariance and balanced labels, for which linear
classifiers admit exact population losses, and a finite labeled pool sampled
with replacement as a stand-in for real datasets.  Specs are immutable after
construction and safe to share across runs; randomness always comes from a
caller-owned generator.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.special import ndtr

from .classifier import LinearClassifier, empirical_loss, LossKind
from .core import LabeledSample


class GaussianModelSpec:
    """Gaussian synthetic model: x | y, z ~ N(means[z, y], I_2), P(y=1|z) = 0.5.

    ``means`` has shape (m, 2, 2): attribute, label, coordinate.  The label
    prior and the identity covariance are fixed, so an instance is fully
    described by its mean vectors.
    """

    __slots__ = ("means",)

    def __init__(self, means) -> None:
        mu = np.asarray(means, dtype=np.float64).copy()
        if mu.ndim != 3 or mu.shape[1] != 2 or mu.shape[2] != 2:
            raise ValueError(f"means must have shape (m, 2, 2), got {mu.shape}")
        if mu.shape[0] < 2:
            raise ValueError("need at least two attributes")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mean vectors must be finite")
        mu.setflags(write=False)
        self.means = mu

    @property
    def num_attributes(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return 2

    def _check_attribute(self, z: int) -> None:
        if not 0 <= z < self.num_attributes:
            raise ValueError(f"unknown attribute {z} (m={self.num_attributes})")

    def draw(self, z: int, rng: np.random.Generator) -> LabeledSample:
        self._check_attribute(z)
        y = int(rng.integers(0, 2))
        x = self.means[z, y] + rng.standard_normal(2)
        return LabeledSample(x=x, y=y, z=z)

    def draw_batch(self, z: int, n: int, rng: np.random.Generator):
        """Vectorized draw of n samples; returns (features, labels) arrays."""
        self._check_attribute(z)
        ys = rng.integers(0, 2, size=n)
        xs = self.means[z, ys] + rng.standard_normal((n, 2))
        return xs, ys

    def population_loss(self, f: LinearClassifier, z: int) -> float:
        """Exact 0-1 population loss of a linear classifier on attribute z.

        The decision value w.x + b is Gaussian with mean w.mu_yz + b and
        standard deviation ||w||, so each label's error probability is a
        standard normal tail.  The normal cdf is evaluated with
        ``scipy.special.ndtr`` (complementary error function, relative error
        well below 1e-12).
        """
        self._check_attribute(z)
        w = np.asarray(f.w, dtype=np.float64)
        if w.shape != (2,):
            raise ValueError("classifier dimension must be 2 for this model")
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            raise ValueError("degenerate classifier: zero weight vector")
        m0 = (float(w @ self.means[z, 0]) + f.b) / norm
        m1 = (float(w @ self.means[z, 1]) + f.b) / norm
        # mislabel y=0 when the decision value is positive, y=1 when negative
        return 0.5 * (float(ndtr(m0)) + float(ndtr(-m1)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaussianModelSpec):
            return NotImplemented
        return np.array_equal(self.means, other.means)

    def __hash__(self) -> int:
        return hash(self.means.tobytes())

    def __repr__(self) -> str:
        return f"GaussianModelSpec(means={self.means.tolist()})"


class FinitePoolSpec:
    """Finite labeled pools, one per attribute, sampled with replacement."""

    __slots__ = ("pools",)

    def __init__(self, pools) -> None:
        cleaned = []
        dim = None
        for z, (xs, ys) in enumerate(pools):
            xs = np.asarray(xs, dtype=np.float64).copy()
            ys = np.asarray(ys, dtype=np.int64).copy()
            if xs.ndim != 2 or len(xs) == 0:
                raise ValueError(f"pool for attribute {z} must be a non-empty matrix")
            if len(xs) != len(ys):
                raise ValueError(f"pool for attribute {z}: feature/label length mismatch")
            if not np.all((ys == 0) | (ys == 1)):
                raise ValueError(f"pool for attribute {z}: labels must be 0/1")
            if dim is None:
                dim = xs.shape[1]
            elif xs.shape[1] != dim:
                raise ValueError("all pools must share one feature dimension")
            xs.setflags(write=False)
            ys.setflags(write=False)
            cleaned.append((xs, ys))
        if len(cleaned) < 2:
            raise ValueError("need at least two attributes")
        self.pools = tuple(cleaned)

    @property
    def num_attributes(self) -> int:
        return len(self.pools)

    @property
    def dim(self) -> int:
        return self.pools[0][0].shape[1]

    def _check_attribute(self, z: int) -> None:
        if not 0 <= z < self.num_attributes:
            raise ValueError(f"unknown attribute {z} (m={self.num_attributes})")

    def draw(self, z: int, rng: np.random.Generator) -> LabeledSample:
        self._check_attribute(z)
        xs, ys = self.pools[z]
        i = int(rng.integers(0, len(xs)))
        return LabeledSample(x=xs[i].copy(), y=int(ys[i]), z=z)

    def draw_batch(self, z: int, n: int, rng: np.random.Generator):
        self._check_attribute(z)
        xs, ys = self.pools[z]
        idx = rng.integers(0, len(xs), size=n)
        return xs[idx], ys[idx]

    def pool_loss(self, f: LinearClassifier, z: int) -> float:
        """Held-out 0-1 loss over the full pool, standing in for the population."""
        self._check_attribute(z)
        xs, ys = self.pools[z]
        return empirical_loss(f, xs, ys, LossKind.ZERO_ONE)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinitePoolSpec):
            return NotImplemented
        if self.num_attributes != other.num_attributes:
            return False
        return all(
            np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
            for a, b in zip(self.pools, other.pools)
        )

    def __hash__(self) -> int:
        return hash(tuple(xs.tobytes() + ys.tobytes() for xs, ys in self.pools))


OracleSpec = GaussianModelSpec | FinitePoolSpec


def true_loss(spec: OracleSpec, f: LinearClassifier, z: int) -> float:
    """Ground-truth per-attribute loss: closed form for the Gaussian model,
    full-pool evaluation for finite pools."""
    if isinstance(spec, GaussianModelSpec):
        return spec.population_loss(f, z)
    if isinstance(spec, FinitePoolSpec):
        return spec.pool_loss(f, z)
    raise TypeError(f"unsupported oracle spec {type(spec).__name__}")


def worst_group_loss(spec: OracleSpec, f: LinearClassifier) -> float:
    return max(true_loss(spec, f, z) for z in range(spec.num_attributes))


def min_group_accuracy(spec: OracleSpec, f: LinearClassifier) -> float:
    return 1.0 - worst_group_loss(spec, f)


# ---------------------------------------------------------------------------
# Built-in presets
# ---------------------------------------------------------------------------

def instance1() -> GaussianModelSpec:
    """Attribute 0 well separated, attribute 1 hard; optimum favors 1."""
    return GaussianModelSpec(
        [
            [(-2.0, 2.0), (2.0, -2.0)],
            [(-1.0, -1.0), (1.0, 1.0)],
        ]
    )


def instance2() -> GaussianModelSpec:
    """Mirror of instance1: attribute 1 well separated, attribute 0 hard."""
    return GaussianModelSpec(
        [
            [(-1.5, 1.5), (1.5, -1.5)],
            [(-2.0, -2.0), (2.0, 2.0)],
        ]
    )


def lower_q_mu(r: float, r_prime: float) -> GaussianModelSpec:
    """Two-instance family member with attribute 0 at radius r, attribute 1 at r'."""
    if not 0 < r < r_prime:
        raise ValueError("require 0 < r < r_prime")
    return GaussianModelSpec(
        [
            [(-r, r), (r, -r)],
            [(-r_prime, -r_prime), (r_prime, r_prime)],
        ]
    )


def lower_q_gamma(r: float, r_prime: float) -> GaussianModelSpec:
    """Sibling of lower_q_mu with the radii swapped between attributes."""
    if not 0 < r < r_prime:
        raise ValueError("require 0 < r < r_prime")
    return GaussianModelSpec(
        [
            [(-r_prime, r_prime), (r_prime, -r_prime)],
            [(-r, -r), (r, r)],
        ]
    )


def load_pool_csv(path) -> FinitePoolSpec:
    """Load finite pools from CSV with header x0,...,x{d-1},y,z.

    Labels must be 0/1 and z a 0-based attribute index; every attribute in
    [0, max z] must appear at least once.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if len(header) < 3 or header[-2:] != ["y", "z"]:
            raise ValueError(f"{path}: header must end with 'y,z'")
        dim = len(header) - 2
        expected = [f"x{i}" for i in range(dim)]
        if header[:dim] != expected:
            raise ValueError(f"{path}: feature columns must be {','.join(expected)}")
        rows_x, rows_y, rows_z = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != dim + 2:
                raise ValueError(f"{path}:{lineno}: expected {dim + 2} fields")
            rows_x.append([float(v) for v in row[:dim]])
            y = int(row[dim])
            if y not in (0, 1):
                raise ValueError(f"{path}:{lineno}: label must be 0 or 1")
            rows_y.append(y)
            z = int(row[dim + 1])
            if z < 0:
                raise ValueError(f"{path}:{lineno}: attribute index must be >= 0")
            rows_z.append(z)
    if not rows_x:
        raise ValueError(f"{path}: no data rows")
    zs = np.asarray(rows_z)
    m = int(zs.max()) + 1
    xs = np.asarray(rows_x)
    ys = np.asarray(rows_y)
    pools = []
    for z in range(m):
        mask = zs == z
        if not mask.any():
            raise ValueError(f"{path}: attribute {z} has no samples")
        pools.append((xs[mask], ys[mask]))
    return FinitePoolSpec(pools)


def resolve_oracle(text: str) -> OracleSpec:
    """Build an oracle from a CLI-style string.

    Accepted forms: ``instance1``, ``instance2``, ``lower_q_mu:R,RP``,
    ``lower_q_gamma:R,RP``, and ``csv:PATH``.
    """
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "instance1":
        return instance1()
    if name == "instance2":
        return instance2()
    if name in ("lower_q_mu", "lower_q_gamma"):
        parts = [p for p in arg.split(",") if p.strip()]
        if len(parts) != 2:
            raise ValueError(f"{name} needs two radii, e.g. {name}:1.0,1.5")
        r, rp = float(parts[0]), float(parts[1])
        return lower_q_mu(r, rp) if name == "lower_q_mu" else lower_q_gamma(r, rp)
    if name == "csv":
        if not arg:
            raise ValueError("csv oracle needs a path, e.g. csv:pools.csv")
        return load_pool_csv(arg)
    raise ValueError(f"unknown oracle '{text}'")
