from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np

from ..errors import InvalidStateError
from .base import Domain

TABLE = 0

# below[b - 1] is the support of block b: TABLE or another block id.
BlocksState = tuple[int, ...]


@lru_cache(maxsize=None)
def lah(n: int, k: int) -> int:
    """Number of ways to split ``n`` labelled blocks into ``k`` towers."""
    if n == 0 and k == 0:
        return 1
    if n == 0 or k == 0 or k > n:
        return 0
    return comb(n - 1, k - 1) * factorial(n) // factorial(k)


def count_states(n: int) -> int:
    """Number of distinct blocks-world states with ``n`` blocks (1, 3, 13, 73, ...)."""
    return sum(lah(n, k) for k in range(n + 1))


class BlocksWorldDomain(Domain[BlocksState]):
    """Blocks stacked into towers; goal is one tower 1..n with block 1 at the bottom."""

    name = "blocksworld"
    epsilon = 1.0
    cost_scale = 1

    def __init__(self, n: int):
        if n < 1:
            raise InvalidStateError(f"blocks world needs n >= 1, got {n}")
        self.n = n

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1)

    def state(self, below) -> BlocksState:
        s = tuple(int(v) for v in below)
        self.validate(s)
        return s

    def validate(self, state: BlocksState) -> None:
        n = self.n
        if len(state) != n:
            raise InvalidStateError(f"expected {n} supports, got {len(state)}")
        seen = set()
        for b, sup in enumerate(state, start=1):
            if not 0 <= sup <= n or sup == b:
                raise InvalidStateError(f"block {b} has invalid support {sup}")
            if sup != TABLE:
                if sup in seen:
                    raise InvalidStateError(f"block {sup} supports two blocks")
                seen.add(sup)
        for b in range(1, n + 1):
            cur, steps = b, 0
            while cur != TABLE:
                cur = state[cur - 1]
                steps += 1
                if steps > n:
                    raise InvalidStateError(f"support cycle through block {b}")

    def goal_state(self) -> BlocksState:
        return tuple(range(self.n))  # block b sits on b - 1, block 1 on the table

    def initial_state(self) -> BlocksState:
        return (TABLE,) * self.n

    def is_goal(self, state: BlocksState) -> bool:
        return state == self.goal_state()

    def clear_blocks(self, state: BlocksState) -> list[int]:
        covered = set(state)
        return [b for b in range(1, self.n + 1) if b not in covered]

    def successors(self, state: BlocksState) -> list[tuple[BlocksState, int]]:
        clear = self.clear_blocks(state)
        out = []
        for b in clear:
            for c in clear:
                if c != b:
                    out.append((state[: b - 1] + (c,) + state[b:], 1))
            if state[b - 1] != TABLE:
                out.append((state[: b - 1] + (TABLE,) + state[b:], 1))
        return out

    def encode(self, state: BlocksState) -> np.ndarray:
        width = self.n + 1
        out = np.zeros(self.n * width, dtype=np.float64)
        for b, sup in enumerate(state):
            out[b * width + sup] = 1.0
        return out

    def towers(self, state: BlocksState) -> list[list[int]]:
        """Towers listed bottom-up, sorted by bottom block."""
        above = {sup: b for b, sup in enumerate(state, start=1) if sup != TABLE}
        result = []
        for b in range(1, self.n + 1):
            if state[b - 1] == TABLE:
                tower = [b]
                while tower[-1] in above:
                    tower.append(above[tower[-1]])
                result.append(tower)
        return result

    def from_towers(self, towers) -> BlocksState:
        below = [TABLE] * self.n
        for tower in towers:
            for lower, upper in zip(tower, tower[1:]):
                below[upper - 1] = lower
        return self.state(below)

    def sample_uniform(self, rng: np.random.Generator) -> BlocksState:
        """Draw a state uniformly from all ``count_states(n)`` configurations.

        The tower count k is drawn with weight lah(n, k); a uniform permutation
        cut at a uniform (k - 1)-subset of the n - 1 gaps is then uniform over
        the configurations with k towers, since each one arises from exactly
        k! (permutation, cut) pairs.
        """
        n = self.n
        total = count_states(n)
        weights = np.array([lah(n, k) / total for k in range(1, n + 1)])
        k = int(rng.choice(np.arange(1, n + 1), p=weights / weights.sum()))
        perm = [int(v) + 1 for v in rng.permutation(n)]
        cuts = sorted(int(c) for c in rng.choice(np.arange(1, n), size=k - 1, replace=False))
        bounds = [0, *cuts, n]
        return self.from_towers(perm[a:b] for a, b in zip(bounds, bounds[1:]))
