"""Loss family for fitting heuristic values.

``x`` below always denotes the signed error ``prediction - label``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, LabelOffGridError, NondifferentiableLossError, ZeroLabelError

TRUE_L = "true_l"
L_EPS = "l_eps"
MSE = "mse"
CROSS_ENTROPY = "cross_entropy"
SCALED = "scaled"

LOSS_KINDS = (TRUE_L, L_EPS, MSE, CROSS_ENTROPY, SCALED)


@dataclass(frozen=True)
class LossConfig:
    kind: str
    epsilon: float = 1.0
    c: float = 0.0
    num_classes: int = 0  # cross-entropy only: grid 0, eps, ..., (num_classes - 1) * eps

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not (np.isfinite(self.c) and self.c >= 0):
            raise ValueError("c must be finite and non-negative")
        if self.kind == CROSS_ENTROPY and self.num_classes < 1:
            raise ValueError("cross-entropy needs num_classes >= 1")

    @property
    def output_dim(self) -> int:
        return self.num_classes if self.kind == CROSS_ENTROPY else 1

    @property
    def differentiable(self) -> bool:
        return self.kind != TRUE_L


def sigmoid(z):
    """Logistic function, evaluated without overflow for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _errors(preds, labels) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if preds.shape != labels.shape:
        raise ValueError(f"length mismatch: {preds.shape} vs {labels.shape}")
    if preds.size == 0:
        raise EmptyInputError("loss of an empty batch")
    return preds - labels


def loss_true(preds, labels, eps: float) -> float:
    """Fraction of samples whose absolute error reaches eps / 2."""
    x = _errors(preds, labels)
    return float(np.mean(np.abs(x) >= eps / 2))


def loss_eps_terms(x, eps: float, c: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x * x * sigmoid(c * ((2 * x / eps) ** 2 - 1))


def loss_eps(preds, labels, eps: float, c: float) -> float:
    x = _errors(preds, labels)
    return float(np.mean(loss_eps_terms(x, eps, c)))


def loss_eps_grad(preds, labels, eps: float, c: float) -> np.ndarray:
    x = _errors(preds, labels)
    s = sigmoid(c * ((2 * x / eps) ** 2 - 1))
    d = 2 * x * s + x * x * s * (1 - s) * c * 8 * x / eps**2
    return d / x.size


def loss_mse(preds, labels) -> float:
    x = _errors(preds, labels)
    return float(np.mean(x * x))


def loss_mse_grad(preds, labels) -> np.ndarray:
    x = _errors(preds, labels)
    return 2 * x / x.size


def _check_scaled(labels):
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if np.any(labels == 0):
        raise ZeroLabelError("scaled loss is undefined for h* = 0; filter those samples first")
    return labels


def loss_scaled(preds, labels) -> float:
    labels = _check_scaled(labels)
    x = _errors(preds, labels)
    r = x / labels
    return float(np.mean(r * r))


def loss_scaled_grad(preds, labels) -> np.ndarray:
    labels = _check_scaled(labels)
    x = _errors(preds, labels)
    return 2 * x / labels**2 / x.size


def label_classes(labels, eps: float, num_classes: int) -> np.ndarray:
    """Map labels on the grid {0, eps, 2 eps, ...} to integer class indices."""
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    idx = np.rint(labels / eps)
    off = np.abs(idx * eps - labels) > 1e-6 * max(eps, 1.0)
    if np.any(off) or np.any(idx < 0) or np.any(idx >= num_classes):
        bad = labels[off | (idx < 0) | (idx >= num_classes)][0]
        raise LabelOffGridError(f"label {bad} is not on the {num_classes}-class grid of step {eps}")
    return idx.astype(np.int64)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss_cross_entropy(logits, labels, eps: float, num_classes: int) -> float:
    logits = np.asarray(logits, dtype=np.float64).reshape(-1, num_classes)
    if logits.shape[0] == 0:
        raise EmptyInputError("loss of an empty batch")
    cls = label_classes(labels, eps, num_classes)
    lp = _log_softmax(logits)
    return float(-lp[np.arange(len(cls)), cls].mean())


def loss_cross_entropy_grad(logits, labels, eps: float, num_classes: int) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64).reshape(-1, num_classes)
    cls = label_classes(labels, eps, num_classes)
    p = np.exp(_log_softmax(logits))
    p[np.arange(len(cls)), cls] -= 1.0
    return p / len(cls)


def accuracy(logits, labels, eps: float, num_classes: int) -> float:
    logits = np.asarray(logits, dtype=np.float64).reshape(-1, num_classes)
    cls = label_classes(labels, eps, num_classes)
    return float(np.mean(logits.argmax(axis=1) == cls))


def class_predictions(logits, eps: float) -> np.ndarray:
    """Heuristic values implied by argmax class."""
    return np.asarray(logits).argmax(axis=1) * eps


def evaluate(config: LossConfig, outputs, labels) -> float:
    if config.kind == TRUE_L:
        return loss_true(outputs, labels, config.epsilon)
    if config.kind == L_EPS:
        return loss_eps(outputs, labels, config.epsilon, config.c)
    if config.kind == MSE:
        return loss_mse(outputs, labels)
    if config.kind == SCALED:
        return loss_scaled(outputs, labels)
    return loss_cross_entropy(outputs, labels, config.epsilon, config.num_classes)


def gradient(config: LossConfig, outputs, labels) -> np.ndarray:
    """Gradient of the mean loss with respect to the network outputs, shaped like them."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if config.kind == TRUE_L:
        raise NondifferentiableLossError("the 0/1 loss has no useful gradient; train with l_eps")
    if config.kind == L_EPS:
        g = loss_eps_grad(outputs, labels, config.epsilon, config.c)
    elif config.kind == MSE:
        g = loss_mse_grad(outputs, labels)
    elif config.kind == SCALED:
        g = loss_scaled_grad(outputs, labels)
    else:
        g = loss_cross_entropy_grad(outputs, labels, config.epsilon, config.num_classes)
    return g.reshape(outputs.shape)


def value_and_grad(config: LossConfig, outputs, labels) -> tuple[float, np.ndarray]:
    """Mean loss and its gradient w.r.t. ``outputs`` in one pass (training hot path)."""
    if config.kind == L_EPS:
        x = _errors(outputs, labels)
        eps, c = config.epsilon, config.c
        s = sigmoid(c * ((2 * x / eps) ** 2 - 1))
        x2 = x * x
        g = (2 * x * s + x2 * s * (1 - s) * c * 8 * x / eps**2) / x.size
        return float(np.mean(x2 * s)), g
    if config.kind == MSE:
        x = _errors(outputs, labels)
        return float(np.mean(x * x)), 2 * x / x.size
    return evaluate(config, outputs, labels), gradient(config, outputs, labels)
