"""Binary logistic-regression defect predictor and AUC evaluation.

Training minimizes the ridge-penalized mean negative log-likelihood with
damped Newton steps and Armijo backtracking, from a zero start, so the fit
is deterministic for a given training set. Only the metric vector enters the
model; defect counts drive selection, never prediction. AUC follows the
rank-sum convention with half credit for tied scores, so it is exactly the
probability that a random defective instance outscores a random defect-free
one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tdselector.corpus import Instance
from tdselector.errors import DimensionMismatchError, UndefinedAUCError


@dataclass
class LearnerParams:
    ridge: float = 1e-8
    tol: float = 1e-8
    max_iter: int = 500

    def __post_init__(self):
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    training_meta: dict = field(default_factory=dict)


@dataclass
class Prediction:
    instance_ref: str
    probability: float


def penalized_nll(theta, X, y, ridge):
    """Objective and gradient at theta = [weights..., bias].

    f = mean_i [log(1 + e^{z_i}) - y_i z_i] + ridge/2 * ||w||^2, z = Xw + b.
    The bias is not penalized. Returns (value, gradient over theta).
    """
    theta = np.asarray(theta, dtype=np.float64)
    w, b = theta[:-1], theta[-1]
    m = X.shape[0]
    z = X @ w + b
    value = float(np.mean(np.logaddexp(0.0, z) - y * z)
                  + 0.5 * ridge * (w @ w))
    p = _sigmoid(z)
    resid = (p - y) / m
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ resid + ridge * w
    grad[-1] = resid.sum()
    return value, grad


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _prior_model(y, n_features, ridge):
    """Constant model for a single-class pool: smoothed log-odds bias."""
    m = y.shape[0]
    prior = (y.sum() + 0.5) / (m + 1.0)
    bias = float(np.log(prior / (1.0 - prior)))
    meta = {
        "iterations": 0,
        "final_objective": float(np.mean(np.logaddexp(0.0, bias) - y * bias)),
        "ridge": ridge,
        "converged": False,
        "degenerate": True,
    }
    return LogisticModel(weights=np.zeros(n_features), bias=bias,
                         training_meta=meta)


def train(tds, params: LearnerParams | None = None) -> LogisticModel:
    """Fit the predictor on a selected training set.

    A single-class pool yields a degenerate prior-only model, flagged in
    training_meta. Otherwise Newton iterations run until the gradient
    infinity-norm drops below tol or max_iter is hit; every accepted step
    decreases the objective (Armijo backtracking, with a gradient-direction
    fallback when the Newton system is ill-posed).
    """
    params = params or LearnerParams()
    X = np.vstack([inst.metrics for inst in tds])
    y = np.array([inst.label for inst in tds], dtype=np.float64)
    m, n = X.shape
    if len(np.unique(y)) < 2:
        return _prior_model(y, n, params.ridge)

    theta = np.zeros(n + 1)
    value, grad = penalized_nll(theta, X, y, params.ridge)
    history = [value]
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        if np.max(np.abs(grad)) < params.tol:
            converged = True
            iterations -= 1
            break
        step = _newton_direction(theta, X, y, params.ridge)
        if step is None or float(step @ grad) >= 0.0:
            step = -grad
        theta_new, value_new = _backtrack(theta, value, grad, step, X, y,
                                          params.ridge)
        if theta_new is None:
            break  # no descent step found; gradient is numerically flat
        theta = theta_new
        value, grad = value_new, penalized_nll(theta, X, y, params.ridge)[1]
        history.append(value)
    else:
        iterations = params.max_iter
    if not converged:
        converged = bool(np.max(np.abs(grad)) < params.tol)

    meta = {
        "iterations": iterations,
        "final_objective": value,
        "ridge": params.ridge,
        "converged": converged,
        "degenerate": False,
        "gradient_inf_norm": float(np.max(np.abs(grad))),
        "objective_history": history,
    }
    return LogisticModel(weights=theta[:-1], bias=float(theta[-1]),
                         training_meta=meta)


def _newton_direction(theta, X, y, ridge):
    w, b = theta[:-1], theta[-1]
    m, n = X.shape
    z = X @ w + b
    p = _sigmoid(z)
    wdiag = p * (1.0 - p)
    A = np.hstack([X, np.ones((m, 1))])
    H = (A.T * wdiag) @ A / m
    H[:n, :n] += ridge * np.eye(n)
    H[np.diag_indices_from(H)] += 1e-12  # keeps the bias row solvable
    _, grad = penalized_nll(theta, X, y, ridge)
    try:
        return np.linalg.solve(H, -grad)
    except np.linalg.LinAlgError:
        return None


def _backtrack(theta, value, grad, step, X, y, ridge, c=1e-4, max_halvings=60):
    slope = float(grad @ step)
    t = 1.0
    for _ in range(max_halvings):
        candidate = theta + t * step
        cand_value, _ = penalized_nll(candidate, X, y, ridge)
        if cand_value <= value + c * t * slope:
            return candidate, cand_value
        t *= 0.5
    return None, None


def predict_proba(model: LogisticModel, instance: Instance) -> Prediction:
    """Probability that one instance is defective."""
    x = np.asarray(instance.metrics, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise DimensionMismatchError(
            f"instance has {x.shape[0]} metrics, model expects "
            f"{model.weights.shape[0]}"
        )
    z = float(model.weights @ x + model.bias)
    return Prediction(instance_ref=instance.uid,
                      probability=float(_sigmoid(np.array([z]))[0]))


def predict_proba_matrix(model: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != model.weights.shape[0]:
        raise DimensionMismatchError(
            f"matrix has {X.shape[1]} columns, model expects "
            f"{model.weights.shape[0]}"
        )
    return _sigmoid(X @ model.weights + model.bias)


def _scores_array(predictions):
    if len(predictions) and isinstance(predictions[0], Prediction):
        return np.array([p.probability for p in predictions], dtype=np.float64)
    return np.asarray(predictions, dtype=np.float64)


def auc(predictions, labels) -> float:
    """Probability a random positive outscores a random negative.

    Computed from rank sums with average ranks on ties, which equals
    (concordant + 0.5 * tied) / (positives * negatives) exactly.
    """
    scores = _scores_array(predictions)
    y = np.asarray(labels)
    if scores.shape != y.shape:
        raise DimensionMismatchError(
            f"{scores.shape[0]} scores vs {y.shape[0]} labels"
        )
    pos = int((y == 1).sum())
    neg = int((y == 0).sum())
    if pos == 0 or neg == 0:
        raise UndefinedAUCError(
            f"AUC undefined: {pos} positive / {neg} negative labels"
        )
    _, inverse, counts = np.unique(scores, return_inverse=True,
                                   return_counts=True)
    cum = np.cumsum(counts)
    avg_rank = cum - (counts - 1) / 2.0  # average 1-based rank per value
    ranks = avg_rank[inverse]
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)
