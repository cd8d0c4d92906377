from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Generic, Hashable, TypeVar

import numpy as np

S = TypeVar("S", bound=Hashable)


class Domain(ABC, Generic[S]):
    """A search domain with integer step costs.

    Step costs are expressed in internal integer units; ``cost_scale`` units
    make up one unit of real cost (10 for TSP, whose edges live on a 0.1 grid).
    Keeping costs integral makes every comparison of path costs exact.
    """

    name: str
    n: int
    epsilon: float
    cost_scale: int = 1

    @property
    @abstractmethod
    def dim(self) -> int:
        """Length of the feature vector produced by :meth:`encode`."""

    @abstractmethod
    def initial_state(self) -> S: ...

    @abstractmethod
    def goal_state(self) -> S: ...

    @abstractmethod
    def successors(self, state: S) -> list[tuple[S, int]]: ...

    @abstractmethod
    def is_goal(self, state: S) -> bool: ...

    @abstractmethod
    def encode(self, state: S) -> np.ndarray: ...

    @abstractmethod
    def validate(self, state: S) -> None:
        """Raise :class:`InvalidStateError` unless ``state`` is well formed."""

    def to_real(self, units: int | float) -> float:
        return units / self.cost_scale

    def encode_many(self, states) -> np.ndarray:
        out = np.zeros((len(states), self.dim), dtype=np.float64)
        for i, s in enumerate(states):
            out[i] = self.encode(s)
        return out
