"""Feature-matrix construction and frequency-sampling schemes.

Three samplers produce :class:`WeightedFeatureSet` objects: plain spectral
sampling, exact leverage-weighted resampling from a spectral pool, and the
fast approximate scheme that scores a pool of s features through
``diag(Z_s^T Z_s ((1/s) Z_s^T Z_s + n lambda I)^{-1})`` and resamples l of
them.  Feature matrices fold the importance weight and the 1/sqrt(s)
Monte-Carlo scaling into their columns, so ``Z @ Z.T`` is directly the
approximate Gram matrix.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import solve_spd
from .errors import NumericalError
from .kernels import (
    KernelFamily,
    KernelSpec,
    _as_points,
    _spline_kernel_coeffs,
    _trig_basis,
    feature_matrix,
    gram_eigvals,
    gram_matrix,
    spectral_sample,
)


class SamplingScheme(enum.Enum):
    PLAIN = "plain"
    EXACT_LEVERAGE = "exact-leverage"
    APPROX_LEVERAGE = "approx-leverage"


@dataclass(frozen=True)
class WeightedFeatureSet:
    """Sampled frequencies with per-feature importance weights.

    Weights are sqrt(p(v) / q(v)) factors (1.0 under plain sampling) and are
    strictly positive and finite.
    """

    frequencies: np.ndarray
    weights: np.ndarray
    scheme: SamplingScheme
    source_seed: int | None = None

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        if freqs.ndim == 1:
            freqs = freqs[:, None]
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "weights", weights)
        if freqs.shape[0] < 1:
            raise ValueError("a feature set needs at least one frequency")
        if weights.shape != (freqs.shape[0],):
            raise ValueError("weights and frequencies must have equal length")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("weights must be strictly positive and finite")

    @property
    def size(self) -> int:
        return self.frequencies.shape[0]


@dataclass(frozen=True)
class FeatureMatrix:
    """n x D design matrix with weight and 1/sqrt(s) folded into the columns."""

    values: np.ndarray
    n_frequencies: int
    feature_set: WeightedFeatureSet | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class LeverageProfile:
    """Per-feature leverage scores for one pool.

    ``total`` is exactly ``sum(scores)``.  For profiles produced by the
    approximate scheme, ``dof`` equals ``total / s`` via the trace identity;
    for exact profiles it is the effective degrees of freedom of the exact
    Gram matrix.
    """

    scores: np.ndarray
    total: float
    dof: float
    lam: float


def sample_plain(
    spec: KernelSpec,
    s: int,
    rng: np.random.Generator,
    source_seed: int | None = None,
) -> WeightedFeatureSet:
    """Draw s frequencies from the spectral measure with unit weights."""
    freqs = spectral_sample(spec, rng, s)
    return WeightedFeatureSet(freqs, np.ones(s), SamplingScheme.PLAIN, source_seed)


def build_feature_matrix(
    fset: WeightedFeatureSet, spec: KernelSpec, x
) -> FeatureMatrix:
    """Scaled design matrix: entry (j, i) = weight_i * z(v_i, x_j) / sqrt(s).

    For the pair style both columns of a frequency carry its weight.
    """
    s = fset.size
    raw = feature_matrix(spec, fset.frequencies, x)
    scale = fset.weights / math.sqrt(s)
    if spec.columns_per_frequency == 2:
        scale = np.concatenate([scale, scale])
    return FeatureMatrix(raw * scale[None, :], s, fset)


def approx_gram(z) -> np.ndarray:
    """Z Z^T; PSD with rank at most the number of columns."""
    values = z.values if isinstance(z, FeatureMatrix) else np.asarray(z, dtype=float)
    return values @ values.T


def effective_dof_from_eigs(eigs: np.ndarray, lam: float, n: int) -> float:
    """sum_i e_i / (e_i + n * lambda) over nonnegative eigenvalues."""
    eigs = np.maximum(np.asarray(eigs, dtype=float), 0.0)
    return float(np.sum(eigs / (eigs + n * lam)))


def effective_dof(k: np.ndarray, lam: float, n: int) -> float:
    """Effective degrees of freedom Tr[K (K + n lambda I)^{-1}].

    Computed from the eigenvalues of K; negative eigenvalues beyond the
    -1e-8 * n tolerance raise, smaller ones are clipped at zero.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    k = np.asarray(k, dtype=float)
    eigs = np.linalg.eigvalsh(k)
    if eigs[0] < -1e-8 * n:
        raise NumericalError(f"matrix is not PSD within tolerance (min eig {eigs[0]:.3e})")
    return effective_dof_from_eigs(eigs, lam, n)


def _per_feature(colwise: np.ndarray, spec: KernelSpec, s: int) -> np.ndarray:
    """Reduce per-column quantities to per-frequency (sums the pair columns)."""
    if spec.columns_per_frequency == 2:
        return colwise[:s] + colwise[s:]
    return colwise


def _pool_scores_vs_gram(
    spec: KernelSpec, x: np.ndarray, pool: WeightedFeatureSet, lam: float
) -> np.ndarray:
    """z_v^T (K + n lambda I)^{-1} z_v for every pool frequency, exact K."""
    n = x.shape[0]
    z = feature_matrix(spec, pool.frequencies, x)
    if spec.family is KernelFamily.SPLINE_EVEN and 2 * spec.truncation + 1 < n:
        # Woodbury through the trig factor K = B B^T keeps the solve at the
        # factor width instead of n.
        root = np.sqrt(_spline_kernel_coeffs(spec))
        c, s_basis = _trig_basis(x[:, 0], spec.truncation)
        b = np.concatenate([np.ones((n, 1)), c * root, s_basis * root], axis=1)
        bz = b.T @ z
        inner = solve_spd(
            b.T @ b + n * lam * np.eye(b.shape[1]), bz, what="leverage scores"
        )
        quad = (np.einsum("ij,ij->j", z, z) - np.einsum("ij,ij->j", bz, inner)) / (
            n * lam
        )
    else:
        k = gram_matrix(spec, x)
        solved = solve_spd(k + n * lam * np.eye(n), z, what="leverage scores")
        quad = np.einsum("ij,ij->j", z, solved)
    return _per_feature(np.maximum(quad, 0.0), spec, pool.size)


def exact_leverage_scores(
    spec: KernelSpec, x, pool: WeightedFeatureSet, lam: float
) -> LeverageProfile:
    """Ridge leverage scores of a spectral-measure pool against the exact Gram.

    The pool must be plain-sampled so the density ratio p(v)/p(v) = 1 and the
    score reduces to the quadratic form itself.  Every score is bounded by
    z0^2 / lambda.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if not np.all(pool.weights == 1.0):
        raise ValueError("exact leverage scores need a plain (unit-weight) pool")
    x = _as_points(spec, x)
    scores = _pool_scores_vs_gram(spec, x, pool, lam)
    dof = effective_dof_from_eigs(gram_eigvals(spec, x), lam, x.shape[0])
    return LeverageProfile(scores, float(np.sum(scores)), dof, lam)


def _resample(
    pool_freqs: np.ndarray,
    scores: np.ndarray,
    n_draw: int,
    rng: np.random.Generator,
    scheme: SamplingScheme,
    source_seed: int | None,
    top_l: bool = False,
) -> WeightedFeatureSet:
    """Multinomial (or top-l) resampling with unbiased reweighting.

    Weights are sqrt((1/pool) / q_i) so the expected reweighted Gram equals
    the pool Gram.
    """
    total = float(np.sum(scores))
    if not np.isfinite(total) or total <= 0:
        raise NumericalError(
            "all leverage scores are zero; lambda is too large for this scale"
        )
    pool_size = scores.shape[0]
    probs = scores / total
    if top_l:
        # stable index order breaks ties deterministically
        idx = np.argsort(-probs, kind="stable")[:n_draw]
    else:
        idx = rng.choice(pool_size, size=n_draw, replace=True, p=probs)
    if np.any(probs[idx] <= 0):
        raise NumericalError("resampled a zero-probability feature")
    weights = np.sqrt((1.0 / pool_size) / probs[idx])
    return WeightedFeatureSet(pool_freqs[idx], weights, scheme, source_seed)


def sample_exact_leverage(
    spec: KernelSpec,
    x,
    lam: float,
    s: int,
    pool_size: int,
    rng: np.random.Generator,
    source_seed: int | None = None,
) -> WeightedFeatureSet:
    """Resample s features from a spectral pool proportional to exact scores."""
    if pool_size < s:
        raise ValueError(f"pool_size {pool_size} must be >= s {s}")
    pool = sample_plain(spec, pool_size, rng)
    profile = exact_leverage_scores(spec, x, pool, lam)
    return _resample(
        pool.frequencies,
        profile.scores,
        s,
        rng,
        SamplingScheme.EXACT_LEVERAGE,
        source_seed,
    )


def approx_leverage_sample(
    spec: KernelSpec,
    x,
    lam: float,
    s: int,
    rng: np.random.Generator,
    top_l: bool = False,
    block_size: int = 1024,
    source_seed: int | None = None,
) -> tuple[WeightedFeatureSet, LeverageProfile]:
    """Fast approximate leverage-weighted resampling from an s-feature pool.

    Samples s spectral features, scores them through the diagonal of
    ``Z_s^T Z_s ((1/s) Z_s^T Z_s + n lambda I)^{-1}`` and draws
    ``l = clamp(round(sum p_i / s), 1, s)`` features multinomially with the
    same unbiased reweighting as the exact scheme.  The scores sum to s
    times the effective degrees of freedom of the approximate Gram, so the
    drawn count equals that dof rounded; with the 1/sqrt(s) column scaling
    folded in, this is the trace of the scored matrix.  ``Z_s^T Z_s`` is
    accumulated over row blocks, so memory stays O(s^2 + block * s).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    x = _as_points(spec, x)
    n = x.shape[0]
    freqs = spectral_sample(spec, rng, s)
    cols = s * spec.columns_per_frequency
    a = np.zeros((cols, cols))
    for start in range(0, n, block_size):
        zb = feature_matrix(spec, freqs, x[start : start + block_size])
        a += zb.T @ zb
    m = a / s + n * lam * np.eye(cols)
    # A and M commute (M is a polynomial in A), so diag(M^{-1} A) = diag(A M^{-1})
    p_cols = np.diag(solve_spd(m, a, what="approximate leverage scores")).copy()
    scores = np.maximum(_per_feature(p_cols, spec, s), 0.0)
    total = float(np.sum(scores))
    profile = LeverageProfile(scores, total, total / s, lam)
    n_draw = int(np.clip(np.rint(total / s), 1, s))
    fset = _resample(
        freqs, scores, n_draw, rng, SamplingScheme.APPROX_LEVERAGE, source_seed, top_l
    )
    return fset, profile
