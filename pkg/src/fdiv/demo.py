"""Small full-batch training demo for Fenchel-Young losses.

A linear classifier is fit by gradient descent on a seeded Gaussian-mixture
dataset.  Labels are either one-hot or, in distillation mode, soft targets
produced by a noisy teacher.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .generators import DomainError, Generator, make_generator
from .loss import fy_loss_batch
from .solver import DEFAULT_CONFIG, SolverConfig


@dataclass
class Dataset:
    x: np.ndarray
    labels: np.ndarray
    y: np.ndarray  # target distributions, one row per sample


def gaussian_mixture(n: int = 300, k: int = 3, dim: int = 2, separation: float = 6.0,
                     seed: int = 0) -> Dataset:
    """``k`` isotropic unit-variance blobs with centers on a circle of radius ``separation``."""
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(k) / k
    centers = np.zeros((k, dim))
    centers[:, 0] = separation * np.cos(angles)
    centers[:, 1 % dim] += separation * np.sin(angles) if dim > 1 else 0.0
    labels = rng.integers(0, k, size=n)
    x = centers[labels] + rng.standard_normal((n, dim))
    return Dataset(x, labels, np.eye(k)[labels])


def distillation_targets(data: Dataset, noise: float = 0.5, temperature: float = 2.0,
                         seed: int = 0) -> Dataset:
    """Replace one-hot targets by the softmax of noisy teacher logits.

    The teacher scores each class by negative squared distance to the class
    mean; its soft labels are strictly positive.
    """
    rng = np.random.default_rng(seed + 1)
    k = data.y.shape[1]
    means = np.stack([data.x[data.labels == c].mean(axis=0) for c in range(k)])
    logits = -0.5 * ((data.x[:, None, :] - means[None]) ** 2).sum(-1)
    logits = (logits + noise * rng.standard_normal(logits.shape)) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    soft = np.exp(logits)
    soft /= soft.sum(axis=1, keepdims=True)
    # keep the targets away from the boundary
    soft = np.maximum(soft, 1e-6)
    soft /= soft.sum(axis=1, keepdims=True)
    return Dataset(data.x, data.labels, soft)


@dataclass
class TrainReport:
    losses: List[float] = field(default_factory=list)
    accuracies: List[float] = field(default_factory=list)
    initial_accuracy: float = float("nan")
    final_accuracy: float = float("nan")  # with the weights after the last update
    weights: np.ndarray = None


def _design(x):
    return np.hstack([x, np.ones((x.shape[0], 1))])


def _accuracy(w, xb, labels):
    return float(np.mean(np.argmax(xb @ w, axis=1) == labels))


def train_linear(g: Generator, data: Dataset, epochs: int = 200, lr: float = 0.1,
                 cfg: SolverConfig = DEFAULT_CONFIG, q=None) -> TrainReport:
    """Full-batch gradient descent on the mean Fenchel-Young loss.

    ``losses[e]`` and ``accuracies[e]`` are measured before update ``e``,
    so ``losses`` traces the objective along the iterates.
    """
    if math.isinf(g.f_at_zero) and np.any(data.y <= 0):
        raise DomainError(f"{g.name} needs strictly positive soft labels; hard labels give an "
                          "infinite loss (use distillation targets instead)")
    if epochs < 0:
        raise ValueError("epochs must be nonnegative")
    xb = _design(data.x)
    n, k = data.y.shape
    w = np.zeros((xb.shape[1], k))
    report = TrainReport(initial_accuracy=_accuracy(w, xb, data.labels))
    for _ in range(epochs):
        out = fy_loss_batch(g, xb @ w, data.y, q, cfg)
        bad = [e for e in out.errors if e is not None]
        if bad:
            raise DomainError(bad[0])
        report.losses.append(out.mean)
        report.accuracies.append(_accuracy(w, xb, data.labels))
        w = w - lr * xb.T @ out.grad_theta / n
    report.weights = w
    report.final_accuracy = _accuracy(w, xb, data.labels)
    return report


def run_demo(divergence: str = "kl", alpha=None, epochs: int = 200, lr: float = 0.1,
             seed: int = 0, distill: bool = False, n: int = 300, k: int = 3,
             cfg: SolverConfig = DEFAULT_CONFIG) -> TrainReport:
    g = make_generator(divergence, alpha)
    data = gaussian_mixture(n=n, k=k, seed=seed)
    if distill:
        data = distillation_targets(data, seed=seed)
    return train_linear(g, data, epochs=epochs, lr=lr, cfg=cfg)
