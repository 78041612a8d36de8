"""Dataset ingestion, the spline simulation generator, and resampling plans.

Datasets are held dense; the sparse "label idx:val idx:val" text format is
densified on load.  Classification labels are remapped to {-1, +1} with the
mapping logged.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DataFormatError
from .kernels import KernelSpec, cross_kernel, spline_kernel

logger = logging.getLogger(__name__)


class Task(enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class Dataset:
    """Dense design matrix with targets; immutable after construction.

    ``true_y`` optionally carries noiseless targets for synthetic data so
    excess risk can be estimated downstream.
    """

    x: np.ndarray
    y: np.ndarray
    task: Task
    name: str = ""
    true_y: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.ndim != 2 or x.shape[0] < 1:
            raise ValueError(f"x must be a nonempty 2-D matrix, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ValueError("y must have one entry per row of x")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains NaN or Inf")
        if self.task is Task.CLASSIFICATION and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("classification labels must be exactly +/-1")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class SplineSimConfig:
    """Configuration of the synthetic spline-kernel regression problem.

    ``t`` is the (even) order of the target kernel section, ``r`` the
    half-order of the learner's feature decomposition (learning kernel order
    2r), ``x0`` the section center, ``sigma`` the label noise level.
    """

    t: int = 2
    r: int = 1
    x0: float = 0.5
    sigma: float = 0.3
    n: int = 1000
    truncation: int = 5000

    def __post_init__(self):
        if self.t < 2 or self.t % 2 != 0:
            raise ValueError(f"t must be even and >= 2, got {self.t}")
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.n < 1 or self.truncation < 1:
            raise ValueError("n and truncation must be >= 1")

    def learner_kernel(self) -> KernelSpec:
        return spline_kernel(2 * self.r, self.truncation)

    def target_kernel(self) -> KernelSpec:
        return spline_kernel(self.t, self.truncation)


def parse_sparse_dataset(path, task: Task | None = None, name: str | None = None) -> Dataset:
    """Read a sparse "label idx:val idx:val" text file into a dense Dataset.

    Indices are 1-based in the file and mapped to 0-based columns; missing
    indices are zero.  Labels {0, 1} or {1, 2} are remapped to {-1, +1} for
    classification (logged).  When ``task`` is None it is inferred: two-valued
    integer label sets mean classification.  Malformed lines raise
    :class:`DataFormatError` with the line number.
    """
    labels: list[float] = []
    rows: list[dict[int, float]] = []
    max_col = 0
    non_monotone = 0
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            try:
                label = float(parts[0])
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: bad label {parts[0]!r}") from exc
            entries: dict[int, float] = {}
            previous = 0
            for token in parts[1:]:
                idx_str, _, val_str = token.partition(":")
                try:
                    idx = int(idx_str)
                    val = float(val_str)
                except ValueError as exc:
                    raise DataFormatError(
                        f"line {lineno}: bad feature token {token!r}"
                    ) from exc
                if idx < 1:
                    raise DataFormatError(f"line {lineno}: index {idx} must be >= 1")
                if idx <= previous:
                    non_monotone += 1
                previous = idx
                entries[idx - 1] = val
                max_col = max(max_col, idx)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise DataFormatError(f"{path}: empty dataset file")
    if non_monotone:
        logger.warning("%s: %d non-monotone feature indices accepted", path, non_monotone)
    x = np.zeros((len(rows), max_col))
    for i, entries in enumerate(rows):
        for col, val in entries.items():
            x[i, col] = val
    y = np.asarray(labels)

    unique = set(np.unique(y).tolist())
    if task is None:
        task = Task.CLASSIFICATION if unique in ({0.0, 1.0}, {1.0, 2.0}, {-1.0, 1.0}) else Task.REGRESSION
        logger.info("%s: inferred task %s from labels", path, task.value)
    if task is Task.CLASSIFICATION:
        if unique == {0.0, 1.0}:
            y = np.where(y == 0.0, -1.0, 1.0)
            logger.info("%s: remapped labels {0,1} -> {-1,+1}", path)
        elif unique == {1.0, 2.0}:
            y = np.where(y == 1.0, -1.0, 1.0)
            logger.info("%s: remapped labels {1,2} -> {-1,+1}", path)
        elif unique != {-1.0, 1.0}:
            raise DataFormatError(f"{path}: labels {sorted(unique)} not binary")
    return Dataset(x, y, task, name or str(path))


def write_sparse_dataset(dataset: Dataset, path) -> None:
    """Write the sparse text format; exact zeros are omitted.

    Values use 17 significant digits so a write/parse round trip is
    bit-exact.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row, label in zip(dataset.x, dataset.y):
            tokens = ["%.17g" % label]
            for j, val in enumerate(row):
                if val != 0.0:
                    tokens.append("%d:%s" % (j + 1, "%.17g" % val))
            handle.write(" ".join(tokens) + "\n")


@dataclass(frozen=True)
class StandardizeTransform:
    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        safe = np.where(self.zero_variance, 1.0, self.std)
        out = (np.asarray(x, dtype=float) - self.mean) / safe
        out[:, self.zero_variance] = 0.0
        return out


def standardize(dataset: Dataset) -> tuple[Dataset, StandardizeTransform]:
    """Center and scale each column to mean 0, std 1.

    Zero-variance columns are set to 0 and flagged; the returned transform
    reproduces the mapping on new points.
    """
    if dataset.n < 2:
        raise ValueError("standardize needs at least two rows")
    mean = dataset.x.mean(axis=0)
    std = dataset.x.std(axis=0)
    zero_variance = std == 0.0
    if np.any(zero_variance):
        logger.warning("standardize: %d constant columns zeroed", int(zero_variance.sum()))
    transform = StandardizeTransform(mean, std, zero_variance)
    return (
        Dataset(transform.apply(dataset.x), dataset.y, dataset.task, dataset.name, dataset.true_y),
        transform,
    )


def generate_spline_sim(
    config: SplineSimConfig, rng: np.random.Generator
) -> tuple[Dataset, Callable[[np.ndarray], np.ndarray]]:
    """Draw the spline-kernel regression sample.

    ``x ~ Uniform[0, 1]``, ``y = k_t(x, x0) + Normal(0, sigma^2)`` noise.
    Returns the dataset together with the noiseless target function for
    excess-risk estimation.
    """
    target = config.target_kernel()
    x0 = np.array([[config.x0]])

    def true_f(points) -> np.ndarray:
        return cross_kernel(target, points, x0)[:, 0]

    x = rng.random((config.n, 1))
    clean = true_f(x)
    y = clean + config.sigma * rng.standard_normal(config.n)
    return Dataset(x, y, Task.REGRESSION, "spline-sim", true_y=clean), true_f


def make_folds(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Partition 0..n-1 into k disjoint shuffled folds, sizes differing by <= 1."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    return np.array_split(rng.permutation(n), k)
