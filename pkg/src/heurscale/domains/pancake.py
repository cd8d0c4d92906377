from __future__ import annotations

import numpy as np

from ..errors import InvalidStateError
from .base import Domain

# Stack read top-down: index 0 is the top pancake.
PancakeState = tuple[int, ...]


def flip(stack: PancakeState, k: int) -> PancakeState:
    """Reverse the top ``k`` pancakes."""
    return stack[:k][::-1] + stack[k:]


class PancakeDomain(Domain[PancakeState]):
    name = "pancake"
    epsilon = 1.0
    cost_scale = 1

    def __init__(self, n: int):
        if n < 2:
            raise InvalidStateError(f"pancake domain needs n >= 2, got {n}")
        self.n = n

    @property
    def dim(self) -> int:
        return self.n * self.n

    def state(self, stack) -> PancakeState:
        s = tuple(int(v) for v in stack)
        self.validate(s)
        return s

    def validate(self, state: PancakeState) -> None:
        if len(state) != self.n or sorted(state) != list(range(1, self.n + 1)):
            raise InvalidStateError(f"not a permutation of 1..{self.n}: {state!r}")

    def goal_state(self) -> PancakeState:
        return tuple(range(1, self.n + 1))

    initial_state = goal_state

    def is_goal(self, state: PancakeState) -> bool:
        return state == self.goal_state()

    def successors(self, state: PancakeState) -> list[tuple[PancakeState, int]]:
        # prefix length 1 is the identity and is left out
        return [(flip(state, k), 1) for k in range(2, self.n + 1)]

    def encode(self, state: PancakeState) -> np.ndarray:
        n = self.n
        out = np.zeros(n * n, dtype=np.float64)
        for pos, pancake in enumerate(state):
            out[pos * n + pancake - 1] = 1.0
        return out

    def random_walk(self, length: int, rng: np.random.Generator) -> PancakeState:
        s = self.goal_state()
        for k in rng.integers(2, self.n + 1, size=length):
            s = flip(s, int(k))
        return s
