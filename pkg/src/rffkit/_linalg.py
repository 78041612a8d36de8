"""Small shared linear-algebra helpers."""

from __future__ import annotations

import logging

import numpy as np
import scipy.linalg

from .errors import NumericalError

logger = logging.getLogger(__name__)


def solve_spd(a: np.ndarray, b: np.ndarray, what: str = "system") -> np.ndarray:
    """Solve A x = b for symmetric positive-definite A via Cholesky.

    Falls back once to a jittered diagonal (+1e-10 * trace / dim) if the
    factorization fails; the fallback is logged.
    """
    a = np.asarray(a, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = 1e-10 * np.trace(a) / a.shape[0]
        logger.warning("Cholesky failed for %s; retrying with jitter %.3e", what, jitter)
        try:
            factor = scipy.linalg.cho_factor(
                a + jitter * np.eye(a.shape[0]), lower=True, check_finite=False
            )
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SPD factorization failed for {what}") from exc
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    # one step of iterative refinement recovers digits on marginal systems
    x += scipy.linalg.cho_solve(factor, b - a @ x, check_finite=False)
    return x


def inv_sqrt_psd(k: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """(K + shift * I)^(-1/2) for symmetric PSD K via eigendecomposition.

    Negative eigenvalues are clipped at zero before the shift; clip events
    are logged.
    """
    w, u = np.linalg.eigh(np.asarray(k, dtype=float))
    n_clipped = int(np.sum(w < 0))
    if n_clipped:
        logger.info(
            "clipped %d negative eigenvalues (min %.3e) in inverse square root",
            n_clipped,
            float(w.min()),
        )
    w = np.maximum(w, 0.0) + shift
    if np.any(w <= 0):
        raise NumericalError("inverse square root of a singular matrix")
    return (u / np.sqrt(w)) @ u.T
