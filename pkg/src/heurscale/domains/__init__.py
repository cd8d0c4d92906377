"""Search domains: pancake sorting, TSP tour construction, blocks world."""

from .base import Domain
from .blocksworld import TABLE, BlocksState, BlocksWorldDomain, count_states
from .pancake import PancakeDomain, PancakeState, flip
from .tsp import TspDomain, TspInstance, TspState

DOMAIN_NAMES = ("pancake", "tsp", "blocksworld")
EPSILON = {"pancake": 1.0, "tsp": 0.1, "blocksworld": 1.0}


def feature_dim(name: str, n: int) -> int:
    if name == "pancake":
        return n * n
    if name == "tsp":
        return n * n + 2 * n
    if name == "blocksworld":
        return n * (n + 1)
    raise ValueError(f"unknown domain {name!r}")


__all__ = [
    "Domain", "PancakeDomain", "PancakeState", "flip", "TspDomain", "TspInstance",
    "TspState", "BlocksWorldDomain", "BlocksState", "TABLE", "count_states",
    "DOMAIN_NAMES", "EPSILON", "feature_dim",
]
