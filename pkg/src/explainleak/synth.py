"""Synthetic hypercube-cluster datasets and the gradient-norm correlation study.

Classes are Gaussian clouds centered on distinct random vertices of the
scaled hypercube {-class_sep, +class_sep}^n. Sweeping the dimension n while
training a fixed architecture exposes how strongly the input-gradient
1-norm separates training members from non-members.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .models import (
    LayerSpec,
    TrainConfig,
    TrainingDivergedError,
    init_model,
    train,
)

ARCHS: dict[str, tuple[int, ...]] = {
    "small": (5,),
    "base": (50, 50),
    "big": (100, 100, 100),
}


@dataclass(frozen=True)
class SynthConfig:
    n_features: int
    n_classes: int = 2
    n_samples: int = 2000
    class_sep: float = 1.0
    cluster_std: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.n_samples < self.n_classes:
            raise ValueError("n_samples must be >= n_classes")
        if self.class_sep <= 0:
            raise ValueError("class_sep must be positive")
        if self.cluster_std < 0:
            raise ValueError("cluster_std must be non-negative")
        if self.n_features < 63 and self.n_classes > 2**self.n_features:
            raise ValueError(
                f"{self.n_classes} classes need {self.n_classes} distinct vertices "
                f"but a {self.n_features}-cube has only {2**self.n_features}"
            )

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "n_samples": self.n_samples,
            "class_sep": self.class_sep,
            "cluster_std": self.cluster_std,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SynthConfig":
        return cls(**payload)


def _hypercube_centers(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """k distinct vertices of {0,1}^n, as rows."""
    if n <= 10:
        all_vertices = np.array(
            [[(v >> j) & 1 for j in range(n)] for v in range(2**n)], dtype=np.float64
        )
        return all_vertices[rng.permutation(2**n)[:k]]
    chosen: list[np.ndarray] = []
    seen: set[tuple[int, ...]] = set()
    while len(chosen) < k:
        vertex = rng.integers(0, 2, size=n)
        key = tuple(int(v) for v in vertex)
        if key not in seen:
            seen.add(key)
            chosen.append(vertex.astype(np.float64))
    return np.stack(chosen)


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Gaussian clusters on distinct hypercube vertices, shuffled.

    Class c is centered on a seeded-random vertex of
    {-class_sep, +class_sep}^n; counts are equal up to one extra point for
    the first n_samples mod n_classes classes.
    """
    rng = np.random.default_rng(cfg.seed)
    centers = (2.0 * _hypercube_centers(rng, cfg.n_features, cfg.n_classes) - 1.0)
    centers *= cfg.class_sep
    base, extra = divmod(cfg.n_samples, cfg.n_classes)
    counts = [base + (1 if c < extra else 0) for c in range(cfg.n_classes)]
    blocks = []
    labels = []
    for c, count in enumerate(counts):
        noise = rng.normal(0.0, cfg.cluster_std, size=(count, cfg.n_features))
        blocks.append(centers[c] + noise)
        labels.append(np.full(count, c, dtype=np.int64))
    features = np.concatenate(blocks, axis=0)
    label_arr = np.concatenate(labels)
    order = rng.permutation(cfg.n_samples)
    return Dataset(features=features[order], labels=label_arr[order])


def grad_norm_l1(model, x: np.ndarray) -> float:
    """1-norm of the predicted-class input gradient at x."""
    return float(np.abs(model.input_gradient(np.asarray(x, dtype=np.float64))).sum())


def grad_norm_l1_batch(model, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.abs(model.input_gradient_batch(X, None)).sum(axis=1)


class CorrelationResult(NamedTuple):
    value: float
    degenerate: bool


def membership_correlation(
    norms: np.ndarray, membership: np.ndarray
) -> CorrelationResult:
    """Pearson correlation between a statistic and non-membership.

    The indicator is 1 for non-members, so a positive value means the
    statistic runs larger off the training set. Zero variance on either
    side makes the correlation undefined; it is reported as 0 with the
    degenerate flag set.
    """
    norms = np.asarray(norms, dtype=np.float64)
    membership = np.asarray(membership, dtype=bool)
    if norms.shape != membership.shape or norms.ndim != 1:
        raise ValueError("norms and membership must be 1-D arrays of equal length")
    indicator = 1.0 - membership.astype(np.float64)
    if np.ptp(norms) == 0.0 or np.ptp(indicator) == 0.0:
        return CorrelationResult(0.0, True)
    value = float(np.corrcoef(norms, indicator)[0, 1])
    return CorrelationResult(value, False)


@dataclass
class DimensionResult:
    dim: int
    arch: str
    correlation: float
    degenerate: bool
    train_accuracy: float
    test_accuracy: float
    seed: int
    diverged: bool = False


def _sweep_seed(base_seed: int, dim: int) -> int:
    return int(np.random.SeedSequence([base_seed, dim]).generate_state(1)[0])


def _run_dimension(
    template: SynthConfig, dim: int, arch: str, train_cfg: TrainConfig
) -> DimensionResult:
    seed = _sweep_seed(template.seed, dim)
    cfg = replace(template, n_features=dim, seed=seed)
    dataset = generate_synthetic(cfg)
    half = dataset.n_points // 2
    train_set = dataset.subset(np.arange(half))
    test_set = dataset.subset(np.arange(half, dataset.n_points))
    model = init_model(
        layers=[LayerSpec(w) for w in ARCHS[arch]] + [LayerSpec(dataset.n_classes)],
        input_dim=dim,
        seed=seed,
    )
    try:
        train(model, train_set, replace(train_cfg, seed=seed))
    except TrainingDivergedError:
        return DimensionResult(
            dim=dim,
            arch=arch,
            correlation=float("nan"),
            degenerate=True,
            train_accuracy=float("nan"),
            test_accuracy=float("nan"),
            seed=seed,
            diverged=True,
        )
    norms = np.concatenate(
        [
            grad_norm_l1_batch(model, train_set.features),
            grad_norm_l1_batch(model, test_set.features),
        ]
    )
    membership = np.concatenate(
        [np.ones(train_set.n_points, bool), np.zeros(test_set.n_points, bool)]
    )
    corr = membership_correlation(norms, membership)
    return DimensionResult(
        dim=dim,
        arch=arch,
        correlation=corr.value,
        degenerate=corr.degenerate,
        train_accuracy=model.accuracy(train_set.features, train_set.labels),
        test_accuracy=model.accuracy(test_set.features, test_set.labels),
        seed=seed,
    )


def dimension_sweep(
    dims: list[int],
    template: SynthConfig,
    arch: str = "base",
    train_cfg: TrainConfig | None = None,
    threads: int = 1,
) -> list[DimensionResult]:
    """Correlation + accuracies per dimension for one architecture.

    Dimensions must be given in ascending order. A dimension whose training
    diverges is kept in the output with NaN metrics and the diverged flag.
    """
    if not dims:
        raise ValueError("dims must be non-empty")
    if list(dims) != sorted(dims) or len(set(dims)) != len(dims):
        raise ValueError("dims must be strictly ascending")
    if arch not in ARCHS:
        raise ValueError(f"arch must be one of {sorted(ARCHS)}")
    if train_cfg is None:
        train_cfg = TrainConfig(optimizer="adagrad", lr=0.01, epochs=100)
    if threads <= 1 or len(dims) == 1:
        return [_run_dimension(template, d, arch, train_cfg) for d in dims]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_run_dimension, template, d, arch, train_cfg) for d in dims
        ]
        return [f.result() for f in futures]
