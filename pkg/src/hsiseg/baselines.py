"""Classical per-pixel baselines: SGD logistic, Gaussian NB, LDA, QDA.

All four operate on (N, C) pixel tables with integer class labels.
Covariances use the maximum-likelihood (divisor N) convention plus a ridge
scaled by the average variance; predictions are argmax of the
log-posterior with ties going to the lower class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericError

NB_VAR_FLOOR = 1e-9
RIDGE_SCALE = 1e-6


def _check_training_set(pixels: np.ndarray, labels: np.ndarray, classes: int) -> tuple[np.ndarray, np.ndarray]:
    pixels = np.asarray(pixels, dtype=np.float64)
    labels = np.asarray(labels)
    if pixels.ndim != 2 or pixels.shape[0] == 0:
        raise ValueError("training pixels must be a non-empty (N, C) table")
    if labels.shape != (pixels.shape[0],):
        raise ValueError("labels must align with pixel rows")
    present = np.unique(labels)
    missing = sorted(set(range(classes)) - set(int(c) for c in present))
    if missing:
        raise ValueError(f"classes {missing} absent from training data")
    return pixels, labels


def _ridge(cov: np.ndarray) -> np.ndarray:
    dim = cov.shape[0]
    eps = RIDGE_SCALE * np.trace(cov) / dim
    return cov + eps * np.eye(dim)


def _chol(cov: np.ndarray):
    try:
        return cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - needs adversarial input
        raise NumericError(f"covariance not positive definite: {exc}") from exc


# ---------------------------------------------------------------------------
# Gaussian Naive Bayes.
# ---------------------------------------------------------------------------


@dataclass
class GaussianNBModel:
    priors: np.ndarray        # (classes,)
    means: np.ndarray         # (classes, C)
    variances: np.ndarray     # (classes, C), floored


def nb_fit(pixels: np.ndarray, labels: np.ndarray, classes: int = 3) -> GaussianNBModel:
    pixels, labels = _check_training_set(pixels, labels, classes)
    c = pixels.shape[1]
    priors = np.empty(classes)
    means = np.empty((classes, c))
    variances = np.empty((classes, c))
    for k in range(classes):
        rows = pixels[labels == k]
        priors[k] = len(rows) / len(pixels)
        means[k] = rows.mean(axis=0)
        variances[k] = np.maximum(rows.var(axis=0), NB_VAR_FLOOR)
    return GaussianNBModel(priors, means, variances)


def nb_predict(model: GaussianNBModel, pixels: np.ndarray) -> np.ndarray:
    x = np.asarray(pixels, dtype=np.float64)
    # log posterior decomposes additively over channels
    log_post = np.stack([
        np.log(model.priors[k])
        - 0.5 * (np.log(2 * np.pi * model.variances[k])
                 + (x - model.means[k]) ** 2 / model.variances[k]).sum(axis=1)
        for k in range(len(model.priors))
    ], axis=1)
    return log_post.argmax(axis=1)


# ---------------------------------------------------------------------------
# Linear / Quadratic discriminant analysis.
# ---------------------------------------------------------------------------


@dataclass
class LdaModel:
    priors: np.ndarray
    means: np.ndarray         # (classes, C)
    covariance: np.ndarray    # shared, ridge-regularized


@dataclass
class QdaModel:
    priors: np.ndarray
    means: np.ndarray
    covariances: np.ndarray   # (classes, C, C), each ridge-regularized


def lda_fit(pixels: np.ndarray, labels: np.ndarray, classes: int = 3) -> LdaModel:
    pixels, labels = _check_training_set(pixels, labels, classes)
    c = pixels.shape[1]
    priors = np.empty(classes)
    means = np.empty((classes, c))
    pooled = np.zeros((c, c))
    for k in range(classes):
        rows = pixels[labels == k]
        priors[k] = len(rows) / len(pixels)
        means[k] = rows.mean(axis=0)
        centered = rows - means[k]
        pooled += centered.T @ centered
    return LdaModel(priors, means, _ridge(pooled / len(pixels)))


def lda_decision(model: LdaModel, pixels: np.ndarray) -> np.ndarray:
    """Per-class linear discriminants: affine in x by construction."""
    x = np.asarray(pixels, dtype=np.float64)
    chol = _chol(model.covariance)
    coefs = np.stack([cho_solve(chol, mu) for mu in model.means])      # (classes, C)
    intercepts = np.log(model.priors) - 0.5 * np.einsum("kc,kc->k", model.means, coefs)
    return x @ coefs.T + intercepts


def lda_predict(model: LdaModel, pixels: np.ndarray) -> np.ndarray:
    return lda_decision(model, pixels).argmax(axis=1)


def qda_fit(pixels: np.ndarray, labels: np.ndarray, classes: int = 3) -> QdaModel:
    pixels, labels = _check_training_set(pixels, labels, classes)
    c = pixels.shape[1]
    priors = np.empty(classes)
    means = np.empty((classes, c))
    covs = np.empty((classes, c, c))
    for k in range(classes):
        rows = pixels[labels == k]
        if len(rows) < c + 1:
            raise ValueError(
                f"QDA needs at least {c + 1} samples for class {k}, got {len(rows)}"
            )
        priors[k] = len(rows) / len(pixels)
        means[k] = rows.mean(axis=0)
        centered = rows - means[k]
        covs[k] = _ridge(centered.T @ centered / len(rows))
    return QdaModel(priors, means, covs)


def qda_decision(model: QdaModel, pixels: np.ndarray) -> np.ndarray:
    x = np.asarray(pixels, dtype=np.float64)
    scores = np.empty((len(x), len(model.priors)))
    for k in range(len(model.priors)):
        chol = _chol(model.covariances[k])
        logdet = 2.0 * np.log(np.diag(chol[0])).sum()
        d = x - model.means[k]
        maha = np.einsum("nc,nc->n", d, cho_solve(chol, d.T).T)
        scores[:, k] = np.log(model.priors[k]) - 0.5 * (logdet + maha)
    return scores


def qda_predict(model: QdaModel, pixels: np.ndarray) -> np.ndarray:
    return qda_decision(model, pixels).argmax(axis=1)


# ---------------------------------------------------------------------------
# Multinomial logistic regression trained by per-sample SGD.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SgdConfig:
    lr: float = 0.01
    epochs: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class SgdLinearModel:
    weight: np.ndarray        # (classes, C)
    bias: np.ndarray          # (classes,)
    config: SgdConfig


def sgd_fit(
    pixels: np.ndarray, labels: np.ndarray, config: SgdConfig = SgdConfig(), classes: int = 3
) -> SgdLinearModel:
    pixels, labels = _check_training_set(pixels, labels, classes)
    c = pixels.shape[1]
    weight = np.zeros((classes, c))
    bias = np.zeros(classes)
    rng = np.random.default_rng(config.seed)
    for _ in range(config.epochs):
        for i in rng.permutation(len(pixels)):
            x = pixels[i]
            z = weight @ x + bias
            z -= z.max()
            p = np.exp(z)
            p /= p.sum()
            p[labels[i]] -= 1.0
            weight -= config.lr * np.outer(p, x)
            bias -= config.lr * p
    return SgdLinearModel(weight, bias, config)


def sgd_predict(model: SgdLinearModel, pixels: np.ndarray) -> np.ndarray:
    x = np.asarray(pixels, dtype=np.float64)
    return (x @ model.weight.T + model.bias).argmax(axis=1)
