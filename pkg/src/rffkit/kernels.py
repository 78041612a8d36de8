"""Shift-invariant kernels, spectral-measure samplers, and feature functions.

Two kernel families are supported:

* Gaussian ``k(x, y) = exp(-gamma * ||x - y||^2 / 2)`` whose spectral measure
  is the zero-mean normal with covariance ``gamma * I``.  Each sampled
  frequency ``v`` maps either to the scalar ``cos(v.x) + sin(v.x)`` or to the
  pair ``(cos(v.x), sin(v.x))``.
* Even-order spline ``k_t(x, y) = 1 + sum_{m=1}^{M} m^-t cos(2 pi m (x - y))``
  on [0, 1], 1-periodic in ``x - y``.  Its feature decomposition draws
  frequencies uniformly on [0, 1] and evaluates half-order sections
  ``z(v, x) = 1 + sqrt(2) * sum_{m=1}^{M} m^(-t/2) cos(2 pi m (v - x))``.
  The sqrt(2) makes the Monte-Carlo average ``mean(z(v, x) z(v, y))`` an
  unbiased estimate of the M-term kernel.

All sampling is routed through an explicitly passed ``numpy.random.Generator``
so results are reproducible bit for bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

_TWO_PI = 2.0 * math.pi


class KernelFamily(enum.Enum):
    GAUSSIAN = "gaussian"
    SPLINE_EVEN = "spline"


class FeatureStyle(enum.Enum):
    COS_PLUS_SIN = "cos-plus-sin"
    COS_SIN_PAIR = "cos-sin-pair"


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a kernel and its random-feature map.

    Parameters
    ----------
    family : KernelFamily
        Which kernel family this spec describes.
    gamma : float
        Gaussian only; inverse squared lengthscale, > 0.  Frequencies are
        drawn with covariance ``gamma * I``.
    dim : int
        Gaussian only; input dimension, >= 1.  Spline inputs are scalar.
    order : int
        Spline only; even series exponent t >= 2.
    truncation : int
        Spline only; number of series terms M >= 1.  The dropped tail of the
        kernel series is at most ``M**(1 - t) / (t - 1)``.
    feature_style : FeatureStyle
        Gaussian only; scalar cos+sin feature (default) or the (cos, sin)
        pair occupying two matrix columns per frequency.
    """

    family: KernelFamily
    gamma: float = 1.0
    dim: int = 1
    order: int = 2
    truncation: int = 5000
    feature_style: FeatureStyle = FeatureStyle.COS_PLUS_SIN

    def __post_init__(self):
        if self.family is KernelFamily.GAUSSIAN:
            if not self.gamma > 0:
                raise ValueError(f"gamma must be > 0, got {self.gamma}")
            if self.dim < 1:
                raise ValueError(f"dim must be >= 1, got {self.dim}")
        else:
            if self.order < 2 or self.order % 2 != 0:
                raise ValueError(f"order must be even and >= 2, got {self.order}")
            if self.truncation < 1:
                raise ValueError(f"truncation must be >= 1, got {self.truncation}")

    @property
    def input_dim(self) -> int:
        return self.dim if self.family is KernelFamily.GAUSSIAN else 1

    @property
    def columns_per_frequency(self) -> int:
        """Feature-matrix columns one frequency occupies (2 for the pair style)."""
        if (
            self.family is KernelFamily.GAUSSIAN
            and self.feature_style is FeatureStyle.COS_SIN_PAIR
        ):
            return 2
        return 1

    @property
    def z0(self) -> float:
        """Uniform bound on the feature function, |z(v, x)| <= z0.

        sqrt(2) for the combined cos+sin feature, 1 per coordinate for the
        pair style, and ``1 + sqrt(2) * sum_{m<=M} m^(-t/2)`` for the spline
        sections (finite for every truncation M).
        """
        if self.family is KernelFamily.GAUSSIAN:
            if self.feature_style is FeatureStyle.COS_SIN_PAIR:
                return 1.0
            return math.sqrt(2.0)
        m = np.arange(1, self.truncation + 1, dtype=float)
        return 1.0 + math.sqrt(2.0) * float(np.sum(m ** (-self.order / 2.0)))


def gaussian_kernel(
    gamma: float, dim: int = 1, feature_style: FeatureStyle = FeatureStyle.COS_PLUS_SIN
) -> KernelSpec:
    return KernelSpec(
        KernelFamily.GAUSSIAN, gamma=gamma, dim=dim, feature_style=feature_style
    )


def spline_kernel(order: int, truncation: int = 5000) -> KernelSpec:
    return KernelSpec(KernelFamily.SPLINE_EVEN, order=order, truncation=truncation)


def _as_points(spec: KernelSpec, x) -> np.ndarray:
    """Coerce to an (n, d) array and validate the dimension against the spec."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim == 1:
        if spec.input_dim == 1:
            x = x[:, None]
        else:
            x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise DimensionMismatchError(
            f"expected points of dimension {spec.input_dim}, got shape {x.shape}"
        )
    return x


def _trig_basis(u: np.ndarray, n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    """cos/sin(2 pi m u) for m = 1..n_terms; u is a flat array."""
    angles = _TWO_PI * u[:, None] * np.arange(1, n_terms + 1, dtype=float)[None, :]
    return np.cos(angles), np.sin(angles)


def _spline_kernel_coeffs(spec: KernelSpec) -> np.ndarray:
    m = np.arange(1, spec.truncation + 1, dtype=float)
    return m ** (-float(spec.order))


def _spline_feature_coeffs(spec: KernelSpec) -> np.ndarray:
    # sqrt(2) * m^(-t/2): squares to twice the kernel coefficient, which the
    # 1/2 from integrating cos*cos over [0,1] cancels exactly.
    m = np.arange(1, spec.truncation + 1, dtype=float)
    return math.sqrt(2.0) * m ** (-float(spec.order) / 2.0)


def cross_kernel(spec: KernelSpec, xa, xb) -> np.ndarray:
    """Kernel matrix k(xa_i, xb_j) of shape (len(xa), len(xb))."""
    xa = _as_points(spec, xa)
    xb = _as_points(spec, xb)
    if spec.family is KernelFamily.GAUSSIAN:
        sq = (
            np.sum(xa**2, axis=1)[:, None]
            + np.sum(xb**2, axis=1)[None, :]
            - 2.0 * xa @ xb.T
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-0.5 * spec.gamma * sq)
    coeffs = _spline_kernel_coeffs(spec)
    ca, sa = _trig_basis(xa[:, 0], spec.truncation)
    cb, sb = _trig_basis(xb[:, 0], spec.truncation)
    # 1 + sum_m m^-t cos(2 pi m (a - b)) via the product formula; periodic in
    # a - b, so no explicit wrapping is needed.
    return 1.0 + (ca * coeffs) @ cb.T + (sa * coeffs) @ sb.T


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) for a single pair of points.

    Spline inputs outside [0, 1] are reduced by the fractional part of
    ``x - y``; the kernel is 1-periodic in the difference.
    """
    return float(cross_kernel(spec, x, y)[0, 0])


def gram_matrix(spec: KernelSpec, x) -> np.ndarray:
    """Symmetric kernel matrix over one sample of points."""
    k = cross_kernel(spec, x, x)
    return 0.5 * (k + k.T)


def gram_eigvals(spec: KernelSpec, x) -> np.ndarray:
    """Eigenvalues of ``gram_matrix(spec, x)`` in ascending order.

    For the spline family the Gram factors through the (2M + 1)-column trig
    design, so its nonzero spectrum equals that of a (2M + 1) x (2M + 1)
    matrix; this avoids forming the n x n Gram when n is large.
    """
    x = _as_points(spec, x)
    n = x.shape[0]
    if spec.family is KernelFamily.GAUSSIAN or 2 * spec.truncation + 1 >= n:
        return np.linalg.eigvalsh(gram_matrix(spec, x))
    root = np.sqrt(_spline_kernel_coeffs(spec))
    c, s = _trig_basis(x[:, 0], spec.truncation)
    # column factor B with K = B B^T
    b = np.concatenate([np.ones((n, 1)), c * root, s * root], axis=1)
    inner = np.linalg.eigvalsh(b.T @ b)
    out = np.zeros(n)
    out[n - inner.shape[0] :] = np.maximum(inner, 0.0)
    return out


def spectral_sample(spec: KernelSpec, rng: np.random.Generator, s: int) -> np.ndarray:
    """Draw ``s`` i.i.d. frequencies from the spectral measure, shape (s, d).

    Gaussian: N(0, gamma * I) in ``dim`` dimensions.  Spline: uniform on
    [0, 1].  Deterministic given the generator state.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if spec.family is KernelFamily.GAUSSIAN:
        return rng.normal(0.0, math.sqrt(spec.gamma), size=(s, spec.dim))
    return rng.random((s, 1))


def feature_matrix(spec: KernelSpec, frequencies: np.ndarray, x) -> np.ndarray:
    """Unscaled feature evaluations z(v_i, x_j), shape (n, s * cols).

    For the pair style the first s columns are cosines and the last s are
    sines; frequency i owns columns (i, s + i).  No 1/sqrt(s) or importance
    weight is applied here.
    """
    x = _as_points(spec, x)
    v = np.asarray(frequencies, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] != spec.input_dim:
        raise DimensionMismatchError(
            f"frequencies have dimension {v.shape[1]}, spec wants {spec.input_dim}"
        )
    if spec.family is KernelFamily.GAUSSIAN:
        proj = x @ v.T
        if spec.feature_style is FeatureStyle.COS_SIN_PAIR:
            return np.concatenate([np.cos(proj), np.sin(proj)], axis=1)
        return np.cos(proj) + np.sin(proj)
    coeffs = _spline_feature_coeffs(spec)
    cx, sx = _trig_basis(x[:, 0], spec.truncation)
    cv, sv = _trig_basis(v[:, 0], spec.truncation)
    # z(v, x) = 1 + sum_m a_m cos(2 pi m (v - x)), expanded into products so
    # the whole matrix is two GEMMs instead of an n*s*M loop.
    return 1.0 + (cx * coeffs) @ cv.T + (sx * coeffs) @ sv.T


def feature_value(spec: KernelSpec, v, x) -> np.ndarray:
    """z(v, x) for a single frequency and point; length 1, or 2 for pairs."""
    v = np.atleast_1d(np.asarray(v, dtype=float)).reshape(1, -1)
    row = feature_matrix(spec, v, np.atleast_1d(np.asarray(x, dtype=float)))
    return row[0]
