"""Computable diagnostics: whitened approximation error, feature-count
rules, eigenvalue-decay reports, and the local fixed-point bound."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import inv_sqrt_psd

logger = logging.getLogger(__name__)


class FeatureCountRule(enum.Enum):
    PLAIN_RFF = "plain"
    LEVERAGE_RFF = "leverage"


class DecayModel(enum.Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class DecayReport:
    """Spectrum of K/n with the better-fitting decay model.

    ``fit_exponent`` is the log-linear slope: ``log e_i ~ exponent * i`` for
    the exponential model, ``log e_i ~ exponent * log i`` for the polynomial
    one.
    """

    eigenvalues: np.ndarray
    fitted_model: DecayModel
    fit_exponent: float
    fit_r2: float


def whitened_error_norm(k: np.ndarray, k_tilde: np.ndarray, lam: float) -> float:
    """Operator norm of (K + n lambda I)^{-1/2} (K~ - K) (K + n lambda I)^{-1/2}.

    The inverse square root comes from the symmetric eigendecomposition of K
    with negative eigenvalues clipped at zero.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    k = np.asarray(k, dtype=float)
    k_tilde = np.asarray(k_tilde, dtype=float)
    n = k.shape[0]
    white = inv_sqrt_psd(k, shift=n * lam)
    middle = white @ (k_tilde - k) @ white
    eigs = np.linalg.eigvalsh(0.5 * (middle + middle.T))
    return float(max(abs(eigs[0]), abs(eigs[-1])))


def required_features(
    rule: FeatureCountRule, dof: float, lam: float, z0: float, delta: float
) -> int:
    """Sufficient feature counts for the two sampling strategies.

    Leverage-weighted sampling needs ``ceil(5 d log(16 d / delta))`` features;
    plain spectral sampling replaces the leading d with ``z0^2 / lambda``.
    Natural logarithm throughout.
    """
    if dof <= 0:
        raise ValueError(f"dof must be > 0, got {dof}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    log_term = math.log(16.0 * dof / delta)
    if rule is FeatureCountRule.LEVERAGE_RFF:
        lead = dof
    else:
        if lam <= 0:
            raise ValueError(f"lambda must be > 0, got {lam}")
        lead = z0**2 / lam
    return int(math.ceil(5.0 * lead * log_term))


def fixed_point_bound(eigs, n: int, lam: float, e7: float = 1.0) -> float:
    """min over h in {0..n} of (h/n) e7 / (n^2 lambda^2) + sqrt(sum_{i>h} e_i / n).

    ``eigs`` are the eigenvalues of K/n sorted nonincreasing.  The constant
    e7 is not pinned down by the analysis, so the bound is a relative
    diagnostic across n, not an absolute certificate.
    """
    eigs = np.asarray(eigs, dtype=float)
    if np.any(np.diff(eigs) > 1e-12):
        raise ValueError("eigenvalues must be sorted nonincreasing")
    tails = np.concatenate([np.cumsum(eigs[::-1])[::-1], [0.0]])
    h = np.arange(eigs.shape[0] + 1, dtype=float)
    candidates = (h / n) * e7 / (n**2 * lam**2) + np.sqrt(
        np.maximum(tails, 0.0) / n
    )
    return float(np.min(candidates))


def _least_squares_fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Slope and R^2 of a univariate least-squares line."""
    design = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((ys - fitted) ** 2))
    ss_tot = float(np.sum((ys - np.mean(ys)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), r2


def decay_report(k: np.ndarray, n: int, r2_threshold: float = 0.9) -> DecayReport:
    """Classify the spectrum of K/n as exponential or polynomial decay.

    Fits ``log e_i`` against i and against log i by least squares over the
    eigenvalues above 1e-12 and reports the model with the better R^2, or
    ``UNDETERMINED`` when both fall below the threshold.
    """
    k = np.asarray(k, dtype=float)
    eigs = np.linalg.eigvalsh(k / n)[::-1]
    clipped = int(np.sum(eigs < 0))
    eigs = np.maximum(eigs, 0.0)
    if clipped:
        logger.info("clipped %d negative eigenvalues in decay report", clipped)
    keep = eigs > 1e-12
    kept = eigs[keep]
    if kept.shape[0] < 3:
        return DecayReport(eigs, DecayModel.UNDETERMINED, float("nan"), 0.0)
    idx = np.arange(1, kept.shape[0] + 1, dtype=float)
    log_e = np.log(kept)
    exp_slope, exp_r2 = _least_squares_fit(idx, log_e)
    poly_slope, poly_r2 = _least_squares_fit(np.log(idx), log_e)
    if max(exp_r2, poly_r2) < r2_threshold:
        return DecayReport(eigs, DecayModel.UNDETERMINED, float("nan"), max(exp_r2, poly_r2))
    if exp_r2 >= poly_r2:
        return DecayReport(eigs, DecayModel.EXPONENTIAL, exp_slope, exp_r2)
    return DecayReport(eigs, DecayModel.POLYNOMIAL, poly_slope, poly_r2)
