"""Ground-truth evaluation: brute-force optimal mixture and excess risk.

The optimal mixture is found the blunt way: for every mixture on a grid over
the simplex, draw a large training set with those attribute proportions,
fit a classifier, and score each attribute's true loss.  The argmin of the
per-mixture worst loss is the reference optimum that excess-risk
measurements and the equalization / monotonicity diagnostics build on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._parallel import pmap
from .classifier import TrainConfig, train_erm
from .core import MixtureDistribution, proportional_counts
from .oracle import OracleSpec, true_loss

_GRID_DOMAIN = 1  # seed-derivation namespace for grid points
_MAX_LATTICE_POINTS = 100_000


def draw_training_set(spec: OracleSpec, weights, size: int, rng: np.random.Generator):
    """Draw a training set of ``size`` samples split per-attribute by ``weights``."""
    counts = proportional_counts(size, weights)
    xs_parts, ys_parts = [], []
    for z, k in enumerate(counts):
        if k == 0:
            continue
        xs, ys = spec.draw_batch(z, int(k), rng)
        xs_parts.append(xs)
        ys_parts.append(ys)
    return np.concatenate(xs_parts), np.concatenate(ys_parts)


def _simplex_lattice(m: int, resolution: int) -> np.ndarray:
    """All mixtures with weights k / (resolution - 1); dense line for m = 2."""
    divisions = resolution - 1
    if m == 2:
        g = np.linspace(0.0, 1.0, resolution)
        return np.column_stack([g, 1.0 - g])
    # stars-and-bars enumeration of compositions of `divisions` into m parts
    from math import comb

    total = comb(divisions + m - 1, m - 1)
    if total > _MAX_LATTICE_POINTS:
        raise ValueError(
            f"simplex lattice with m={m}, resolution={resolution} has {total} points; "
            "use a coarser resolution"
        )
    points = np.empty((total, m))
    for i, cuts in enumerate(combinations(range(divisions + m - 1), m - 1)):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(divisions + m - 2 - prev)
        points[i] = np.asarray(parts) / divisions
    return points


@dataclass(frozen=True)
class GridSweepResult:
    """Per-mixture losses over a simplex grid plus the argmin-of-max point."""

    spec: OracleSpec
    mixtures: np.ndarray   # (G, m)
    losses: np.ndarray     # (G, m) true loss per attribute
    minimax: np.ndarray    # (G,) worst-attribute loss
    best_index: int
    train_size: int
    seed: int

    @property
    def best_mixture(self) -> MixtureDistribution:
        return MixtureDistribution(self.mixtures[self.best_index])

    @property
    def best_value(self) -> float:
        return float(self.minimax[self.best_index])

    def near_optimal_indices(self, tol: float) -> np.ndarray:
        """Grid points whose worst loss is within tol of the optimum; the
        optimum is reported as a set because the grid cannot certify
        uniqueness beyond its resolution."""
        return np.flatnonzero(self.minimax <= self.best_value + tol)


def _evaluate_point(spec, weights, train_size, train_cfg, rng):
    xs, ys = draw_training_set(spec, weights, train_size, rng)
    f = train_erm(xs, ys, train_cfg, init=None)
    return [true_loss(spec, f, z) for z in range(spec.num_attributes)]


def _sweep_chunk(payload):
    spec, rows, indices, train_size, train_cfg, seed = payload
    out = np.empty((len(rows), spec.num_attributes))
    for j, (i, weights) in enumerate(zip(indices, rows)):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_GRID_DOMAIN, i)))
        out[j] = _evaluate_point(spec, weights, train_size, train_cfg, rng)
    return indices, out


def grid_optimal_mixture(
    spec: OracleSpec,
    resolution: int,
    train_size: int,
    train_cfg: TrainConfig,
    seed: int,
    jobs: int = 1,
) -> GridSweepResult:
    """Brute-force sweep over the mixture simplex.

    Each grid point trains independently from a cold start with its own
    derived generator, so results do not depend on evaluation order or on
    ``jobs``; ties for the optimum go to the lowest grid index.
    """
    if resolution < 3:
        raise ValueError("resolution must be at least 3")
    if train_size < 1000:
        raise ValueError("train_size must be at least 1000 for a stable sweep")
    mixtures = _simplex_lattice(spec.num_attributes, resolution)
    n_points = len(mixtures)
    n_chunks = 1 if jobs <= 1 else min(n_points, 4 * jobs)
    splits = np.array_split(np.arange(n_points), n_chunks)
    payloads = [
        (spec, mixtures[idx], idx.tolist(), train_size, train_cfg, seed)
        for idx in splits
        if len(idx)
    ]
    losses = np.empty_like(mixtures)
    for indices, chunk_losses in pmap(_sweep_chunk, payloads, jobs):
        losses[indices] = chunk_losses
    minimax = losses.max(axis=1)
    return GridSweepResult(
        spec=spec,
        mixtures=mixtures,
        losses=losses,
        minimax=minimax,
        best_index=int(np.argmin(minimax)),
        train_size=train_size,
        seed=seed,
    )


def excess_risk(
    pi_n: MixtureDistribution,
    spec: OracleSpec,
    sweep: GridSweepResult,
    train_cfg: TrainConfig,
    rng,
) -> float:
    """Worst-attribute loss of a classifier trained at proportions pi_n,
    minus the sweep optimum.

    A fresh training set of the sweep's size is drawn, so the value reflects
    the mixture itself rather than any particular run's classifier.  Small
    negative values are possible within grid and sampling noise and are
    returned as-is.
    """
    if spec != sweep.spec:
        raise ValueError("mismatched spec: sweep was computed for a different oracle")
    rng = np.random.default_rng(rng)
    xs, ys = draw_training_set(spec, pi_n.weights, sweep.train_size, rng)
    f = train_erm(xs, ys, train_cfg, init=None)
    worst = max(true_loss(spec, f, z) for z in range(spec.num_attributes))
    return worst - sweep.best_value


@dataclass(frozen=True)
class EqualizationReport:
    """Spread of per-attribute losses at the sweep optimum."""

    losses: np.ndarray
    gap: float
    tolerance: float
    passed: bool


def check_equalization(sweep: GridSweepResult, tol: float = 0.02) -> EqualizationReport:
    """At the optimal mixture all attribute losses should coincide; report
    the max-min gap and whether it is within tol."""
    at_best = sweep.losses[sweep.best_index]
    gap = float(at_best.max() - at_best.min())
    return EqualizationReport(losses=at_best.copy(), gap=gap, tolerance=tol, passed=gap <= tol)


@dataclass(frozen=True)
class MonotonicityReport:
    """Directional consistency of the two loss curves along the m=2 grid.

    ``passed`` is None for a degenerate sweep where every step is a tie
    (zero magnitude), in which case the fractions are meaningless.
    """

    fraction_first_decreasing: float
    fraction_second_increasing: float
    max_violation: float
    threshold: float
    passed: bool | None


def check_monotonicity(sweep: GridSweepResult, threshold: float = 0.95) -> MonotonicityReport:
    """Fraction of adjacent grid steps where each attribute's loss moves the
    expected way: down for the attribute gaining mixture weight, up for the
    one losing it."""
    if sweep.mixtures.shape[1] != 2:
        raise ValueError("monotonicity check is defined for m=2 sweeps")
    d0 = np.diff(sweep.losses[:, 0])
    d1 = np.diff(sweep.losses[:, 1])
    frac0 = float(np.mean(d0 < 0))
    frac1 = float(np.mean(d1 > 0))
    violation = max(float(np.maximum(d0, 0.0).max()), float(np.maximum(-d1, 0.0).max()))
    degenerate = np.all(np.abs(d0) <= 1e-12) and np.all(np.abs(d1) <= 1e-12)
    passed = None if degenerate else (frac0 >= threshold and frac1 >= threshold)
    return MonotonicityReport(
        fraction_first_decreasing=frac0,
        fraction_second_increasing=frac1,
        max_violation=violation,
        threshold=threshold,
        passed=passed,
    )


def write_sweep_csv(sweep: GridSweepResult, path) -> None:
    """Export the sweep; m=2 uses the compact pi_u,loss_u,loss_v,minimax schema."""
    m = sweep.mixtures.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if m == 2:
            writer.writerow(["pi_u", "loss_u", "loss_v", "minimax"])
            for i in range(len(sweep.mixtures)):
                writer.writerow(
                    [_fmt(sweep.mixtures[i, 0])]
                    + [_fmt(v) for v in sweep.losses[i]]
                    + [_fmt(sweep.minimax[i])]
                )
        else:
            header = [f"pi_{z}" for z in range(m)] + [f"loss_{z}" for z in range(m)] + ["minimax"]
            writer.writerow(header)
            for i in range(len(sweep.mixtures)):
                writer.writerow(
                    [_fmt(v) for v in sweep.mixtures[i]]
                    + [_fmt(v) for v in sweep.losses[i]]
                    + [_fmt(sweep.minimax[i])]
                )


def _fmt(value: float) -> str:
    return f"{value:.9g}"
