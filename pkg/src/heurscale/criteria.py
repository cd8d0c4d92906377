from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses
from .losses import CROSS_ENTROPY, TRUE_L, LossConfig

EXACT_L0 = "exact_l0"
THRESHOLD = "threshold"

STRICT_MAX_EPOCHS = 3000
RELAXED_MAX_EPOCHS = 300


@dataclass(frozen=True)
class FitCriterion:
    """When a trained network counts as having fit its training set.

    EXACT_L0: every sample within eps / 2 of its label.
    THRESHOLD: ``metric`` at most ``threshold``; for cross-entropy the metric is
    accuracy and must be at least ``threshold``.
    """

    kind: str
    metric: LossConfig
    threshold: float = 0.0
    max_epochs: int = STRICT_MAX_EPOCHS

    def __post_init__(self):
        if self.kind not in (EXACT_L0, THRESHOLD):
            raise ValueError(f"unknown criterion kind {self.kind!r}")
        if self.kind == THRESHOLD and not self.threshold > 0:
            raise ValueError("threshold criterion needs T > 0")
        if self.kind == EXACT_L0 and self.metric.kind != TRUE_L:
            raise ValueError("exact criterion is measured with the 0/1 loss")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")

    @classmethod
    def exact(cls, epsilon: float, max_epochs: int = STRICT_MAX_EPOCHS) -> "FitCriterion":
        return cls(EXACT_L0, LossConfig(TRUE_L, epsilon), 0.0, max_epochs)

    @classmethod
    def below(cls, metric: LossConfig, threshold: float, max_epochs: int = RELAXED_MAX_EPOCHS) -> "FitCriterion":
        return cls(THRESHOLD, metric, threshold, max_epochs)

    @property
    def higher_is_better(self) -> bool:
        return self.metric.kind == CROSS_ENTROPY

    def measure(self, outputs, labels) -> float:
        if self.metric.kind == CROSS_ENTROPY:
            return losses.accuracy(outputs, labels, self.metric.epsilon, self.metric.num_classes)
        return losses.evaluate(self.metric, outputs, labels)

    def satisfied_by(self, value: float) -> bool:
        if self.kind == EXACT_L0:
            return value == 0.0
        if self.higher_is_better:
            return value >= self.threshold
        return value <= self.threshold

    def better(self, a: float, b: float) -> bool:
        """True if metric value ``a`` is strictly better than ``b``."""
        if np.isnan(b):
            return not np.isnan(a)
        return a > b if self.higher_is_better else a < b

    @property
    def label(self) -> str:
        if self.kind == EXACT_L0:
            return "l0"
        return f"{self.metric.kind}<={self.threshold:g}" if not self.higher_is_better else f"acc>={self.threshold:g}"
