"""Learners over feature matrices and the exact kernel ridge oracle.

Closed-form ridge regression realizes the feature-space objective
``(1/n) ||Y - Z_q b||^2 + lambda * s * ||b||^2`` because the 1/sqrt(s)
column scaling of :class:`~rffkit.features.FeatureMatrix` absorbs the s.
Lipschitz losses (hinge, logistic) are minimized by a deterministic
full-batch descent with Armijo backtracking, so fits are reproducible.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from ._linalg import solve_spd
from .errors import DimensionMismatchError, NumericalError
from .features import FeatureMatrix, WeightedFeatureSet, build_feature_matrix
from .kernels import KernelSpec, cross_kernel

logger = logging.getLogger(__name__)


class LossKind(enum.Enum):
    SQUARED = "squared"
    HINGE = "hinge"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class LinearModel:
    """Fitted coefficients over a feature map.

    ``beta`` lives in the scaled feature coordinates, so ``||beta||^2``
    equals the s-scaled squared norm of the unscaled-problem coefficients.
    """

    beta: np.ndarray
    lam: float
    loss: LossKind
    feature_set: WeightedFeatureSet | None
    converged: bool = True
    grad_norm: float = 0.0
    objective_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class KRRModel:
    """Dual coefficients of exact kernel ridge regression."""

    alpha: np.ndarray
    lam: float
    x_train: np.ndarray | None = None


def _values(z) -> np.ndarray:
    return z.values if isinstance(z, FeatureMatrix) else np.asarray(z, dtype=float)


def _fset(z) -> WeightedFeatureSet | None:
    return z.feature_set if isinstance(z, FeatureMatrix) else None


def fit_ridge(z, y, lam: float) -> LinearModel:
    """Solve the normal equations (Z^T Z + n lambda I) beta = Z^T Y.

    Uses an SPD factorization; the residual is checked against
    1e-8 * ||Z^T Y||.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    zv = _values(z)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    gram = zv.T @ zv + n * lam * np.eye(zv.shape[1])
    rhs = zv.T @ y
    beta = solve_spd(gram, rhs, what="ridge normal equations")
    residual = np.linalg.norm(gram @ beta - rhs)
    if residual > 1e-8 * max(np.linalg.norm(rhs), 1e-300):
        raise NumericalError(f"normal-equation residual {residual:.3e} out of tolerance")
    return LinearModel(beta, lam, LossKind.SQUARED, _fset(z))


def fit_krr_exact(k: np.ndarray, y, lam: float, x_train=None) -> KRRModel:
    """Solve (K + n lambda I) alpha = Y; pass x_train to enable prediction."""
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    shifted = k + n * lam * np.eye(n)
    alpha = solve_spd(shifted, y, what="kernel ridge system")
    residual = np.linalg.norm(shifted @ alpha - y)
    if residual > 1e-8 * max(np.linalg.norm(y), 1e-300):
        raise NumericalError(f"KRR residual {residual:.3e} out of tolerance")
    xt = None if x_train is None else np.asarray(x_train, dtype=float)
    return KRRModel(alpha, lam, xt)


def lipschitz_objective(z, y, beta, loss: LossKind, lam: float) -> float:
    """(1/n) sum L(y_i, z_i^T beta) + lambda ||beta||^2."""
    zv = _values(z)
    margins = np.asarray(y, dtype=float) * (zv @ beta)
    if loss is LossKind.HINGE:
        values = np.maximum(0.0, 1.0 - margins)
    elif loss is LossKind.LOGISTIC:
        values = np.logaddexp(0.0, -margins)
    else:
        raise ValueError(f"not a Lipschitz loss: {loss}")
    return float(np.mean(values) + lam * beta @ beta)


def lipschitz_gradient(z, y, beta, loss: LossKind, lam: float) -> np.ndarray:
    """Full-batch (sub)gradient of :func:`lipschitz_objective` at beta.

    At hinge kinks (margin exactly 1) the zero element of the
    subdifferential is chosen, a deterministic tie rule.
    """
    zv = _values(z)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    margins = y * (zv @ beta)
    if loss is LossKind.HINGE:
        active = (margins < 1.0).astype(float)
        dl = -y * active
    elif loss is LossKind.LOGISTIC:
        dl = -y / (1.0 + np.exp(margins))
    else:
        raise ValueError(f"not a Lipschitz loss: {loss}")
    return zv.T @ dl / n + 2.0 * lam * beta


def fit_lipschitz(
    z,
    y,
    loss: LossKind,
    lam: float,
    tol: float = 1e-6,
    max_iter: int = 5000,
) -> LinearModel:
    """Deterministic full-batch descent on a strongly convex Lipschitz loss.

    Backtracking accepts only strictly improving steps, so the recorded
    objective sequence is non-increasing.  Terminates when the (sub)gradient
    norm drops below ``tol``; hitting ``max_iter`` or stalling at a hinge
    kink returns a flagged but usable model.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if loss is LossKind.SQUARED:
        raise ValueError("use fit_ridge for the squared loss")
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be in {-1, +1}")
    zv = _values(z)
    n, d = zv.shape
    curvature = 0.25 if loss is LossKind.LOGISTIC else 1.0
    top = float(np.linalg.eigvalsh(zv.T @ zv)[-1])
    step0 = 1.0 / (curvature * top / n + 2.0 * lam)

    beta = np.zeros(d)
    objective = lipschitz_objective(zv, y, beta, loss, lam)
    history = [objective]
    grad = lipschitz_gradient(zv, y, beta, loss, lam)
    converged = False
    for _ in range(max_iter):
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= tol:
            converged = True
            break
        step = step0
        while step > 1e-20 * step0:
            candidate = beta - step * grad
            cand_obj = lipschitz_objective(zv, y, candidate, loss, lam)
            if cand_obj <= objective - 1e-4 * step * grad_norm**2:
                break
            step *= 0.5
        else:
            # no improving step along the subgradient: stalled at a kink
            break
        beta, objective = candidate, cand_obj
        history.append(objective)
        grad = lipschitz_gradient(zv, y, beta, loss, lam)
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm <= tol:
        converged = True
    if not converged:
        logger.warning(
            "Lipschitz fit stopped with gradient norm %.3e after %d steps",
            grad_norm,
            len(history) - 1,
        )
    return LinearModel(
        beta, lam, loss, _fset(z), converged, grad_norm, tuple(history)
    )


def decision_function(model, spec: KernelSpec, x_new) -> np.ndarray:
    """Raw predicted values for either model type."""
    if isinstance(model, KRRModel):
        if model.x_train is None:
            raise DimensionMismatchError(
                "KRR model was fitted without training points; cannot predict"
            )
        return cross_kernel(spec, x_new, model.x_train) @ model.alpha
    if model.feature_set is None:
        raise DimensionMismatchError("model carries no feature set; cannot predict")
    z_new = build_feature_matrix(model.feature_set, spec, x_new)
    return z_new.values @ model.beta


def predict(model, spec: KernelSpec, x_new) -> np.ndarray:
    """Predictions at new points; classifiers return labels in {-1, +1}.

    The sign convention maps a raw value of exactly 0 to +1.
    """
    raw = decision_function(model, spec, x_new)
    if isinstance(model, LinearModel) and model.loss is not LossKind.SQUARED:
        return np.where(raw >= 0.0, 1.0, -1.0)
    return raw


def function_approx_error(f_x, z, lam: float) -> tuple[float, float]:
    """Optimum of ``(1/n)||f_x - Z b||^2 + lambda ||b||^2`` in closed form.

    Returns ``(lambda * f_x^T (K~ + n lambda I)^{-1} f_x, ||beta||^2)`` with
    ``K~ = Z Z^T``; the second value equals the s-scaled squared coefficient
    norm of the unscaled-feature problem.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    zv = _values(z)
    f_x = np.asarray(f_x, dtype=float)
    n = f_x.shape[0]
    u = solve_spd(zv @ zv.T + n * lam * np.eye(n), f_x, what="approximation error")
    error = float(lam * f_x @ u)
    beta = zv.T @ u  # push-through form of the normal-equation solution
    return error, float(beta @ beta)


def orthogonality_check(k: np.ndarray, z, y, lam: float) -> float:
    """<Y - f_hat, f_beta - f_hat> with both regularized smoothers.

    ``f_hat = K (K + n lambda I)^{-1} Y`` and
    ``f_beta = K~ (K~ + n lambda I)^{-1} Y``.  Vanishes when the feature span
    lies inside the span of K's columns and the smoothers approach
    projections (small lambda); exposed as a diagnostic, not an invariant.
    """
    k = np.asarray(k, dtype=float)
    zv = _values(z)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    f_hat = k @ solve_spd(k + n * lam * np.eye(n), y, what="orthogonality (exact)")
    kt = zv @ zv.T
    f_beta = kt @ solve_spd(kt + n * lam * np.eye(n), y, what="orthogonality (approx)")
    return float((y - f_hat) @ (f_beta - f_hat))
