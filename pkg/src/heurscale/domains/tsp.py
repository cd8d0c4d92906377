from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import InvalidStateError
from .base import Domain

MIN_TENTHS = 1
MAX_TENTHS = 50


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Complete directed graph with edge costs on the 0.1 grid in [0.1, 5.0].

    Costs are held as integer tenths (3.7 is stored as 37).
    """

    tenths: np.ndarray
    start: int

    def __post_init__(self):
        w = np.array(self.tenths, dtype=np.int64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidStateError(f"weights must be square, got shape {w.shape}")
        n = w.shape[0]
        if n < 2:
            raise InvalidStateError(f"TSP needs n >= 2, got {n}")
        off = ~np.eye(n, dtype=bool)
        if np.any(w[off] < MIN_TENTHS) or np.any(w[off] > MAX_TENTHS):
            raise InvalidStateError("edge weights must lie in [0.1, 5.0]")
        if not 0 <= self.start < n:
            raise InvalidStateError(f"start city {self.start} out of range")
        w[~off] = 0
        w.setflags(write=False)
        object.__setattr__(self, "tenths", w)

    @classmethod
    def from_weights(cls, weights, start: int = 0) -> "TspInstance":
        w = np.asarray(weights, dtype=np.float64)
        tenths = np.rint(w * 10).astype(np.int64)
        off = ~np.eye(w.shape[0], dtype=bool)
        if not np.allclose(tenths[off], w[off] * 10, rtol=0, atol=1e-9):
            raise InvalidStateError("edge weights must be multiples of 0.1")
        return cls(tenths, start)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "TspInstance":
        tenths = rng.integers(MIN_TENTHS, MAX_TENTHS + 1, size=(n, n))
        start = int(rng.integers(n))
        return cls(tenths, start)

    @property
    def n(self) -> int:
        return self.tenths.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self.tenths / 10.0


class TspState(NamedTuple):
    visited: int  # bitmask of visited cities
    current: int


class TspDomain(Domain[TspState]):
    """Tour construction over a single instance.

    Once every city is visited the only move is the arc back to the start;
    the state reached that way (all visited, standing at the start) is the goal.
    """

    name = "tsp"
    epsilon = 0.1
    cost_scale = 10

    def __init__(self, instance: TspInstance):
        self.instance = instance
        self.n = instance.n
        self.full = (1 << self.n) - 1

    @property
    def dim(self) -> int:
        return self.n * self.n + 2 * self.n

    def initial_state(self) -> TspState:
        s = self.instance.start
        return TspState(1 << s, s)

    def goal_state(self) -> TspState:
        return TspState(self.full, self.instance.start)

    def validate(self, state: TspState) -> None:
        visited, current = state
        start = self.instance.start
        if not 0 <= visited <= self.full or not 0 <= current < self.n:
            raise InvalidStateError(f"state out of range: {state!r}")
        if not (visited >> start) & 1 or not (visited >> current) & 1:
            raise InvalidStateError("start and current city must be visited")

    def is_goal(self, state: TspState) -> bool:
        return state.visited == self.full and state.current == self.instance.start

    def successors(self, state: TspState) -> list[tuple[TspState, int]]:
        visited, cur = state
        w = self.instance.tenths
        if visited == self.full:
            if cur == self.instance.start:
                return []
            return [(TspState(visited, self.instance.start), int(w[cur, self.instance.start]))]
        return [
            (TspState(visited | (1 << j), j), int(w[cur, j]))
            for j in range(self.n)
            if not (visited >> j) & 1
        ]

    def encode(self, state: TspState) -> np.ndarray:
        n = self.n
        out = np.zeros(self.dim, dtype=np.float64)
        out[: n * n] = self.instance.weights.ravel()
        for j in range(n):
            if (state.visited >> j) & 1:
                out[n * n + j] = 1.0
        out[n * n + n + self.instance.start] = 1.0
        return out
