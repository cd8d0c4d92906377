"""Exact solvers, admissible heuristics and the A* engine that produce h* labels."""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable

import numpy as np

from .domains import BlocksWorldDomain, Domain, PancakeDomain, TspDomain, TspInstance, TspState
from .errors import ResourceLimitError, SizeLimitError, UnsolvableError

HIGH_G = "high_g"
LOW_G = "low_g"

DEFAULT_MAX_EXPANSIONS = 10**7
HELD_KARP_CAP = 20


@dataclass(frozen=True)
class HeuristicFn:
    """A state evaluator plus metadata.

    Values are in the domain's internal cost units (see ``Domain.cost_scale``).
    """

    fn: Callable[[Hashable], float]
    admissible: bool = False
    name: str = ""

    def __call__(self, state) -> float:
        return self.fn(state)


@dataclass
class SearchResult:
    optimal_cost: float
    path: list
    expanded_count: int
    generated_count: int
    cost_units: int | float = field(default=0, repr=False)


def astar(
    domain: Domain,
    start,
    h: Callable[[Hashable], float],
    tie_break: str = HIGH_G,
    max_expansions: int = DEFAULT_MAX_EXPANSIONS,
) -> SearchResult:
    """Best-first search on f = g + h with a closed set and no re-opening.

    Equal-f entries are ordered by g (higher first under HIGH_G), then FIFO.
    """
    if tie_break not in (HIGH_G, LOW_G):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    sign = -1 if tie_break == HIGH_G else 1
    counter = itertools.count()
    g_best = {start: 0}
    parent = {start: None}
    closed = set()
    fringe = [(h(start), 0, next(counter), start)]
    generated = 1
    expanded = 0

    while fringe:
        _, _, _, s = heapq.heappop(fringe)
        if s in closed:
            continue
        g = g_best[s]
        closed.add(s)
        expanded += 1
        if domain.is_goal(s):
            path = [s]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            path.reverse()
            return SearchResult(domain.to_real(g), path, expanded, generated, g)
        if expanded >= max_expansions:
            raise ResourceLimitError(f"A* exceeded {max_expansions} expansions")
        for child, cost in domain.successors(s):
            if child in closed:
                continue
            g2 = g + cost
            if g2 < g_best.get(child, float("inf")):
                g_best[child] = g2
                parent[child] = s
                generated += 1
                heapq.heappush(fringe, (g2 + h(child), sign * g2, next(counter), child))
    raise UnsolvableError("fringe exhausted without reaching a goal")


def gap_heuristic(stack) -> int:
    """Count adjacent pairs differing by more than one, the plate acting as pancake n + 1."""
    n = len(stack)
    gaps = sum(1 for a, b in zip(stack, stack[1:]) if abs(a - b) > 1)
    return gaps + (stack[-1] != n)


def misplaced_blocks_heuristic(below) -> int:
    """Blocks whose support differs from the ordered-stack goal (block b on b - 1)."""
    return sum(1 for b, sup in enumerate(below, start=1) if sup != b - 1)


GAP = HeuristicFn(gap_heuristic, admissible=True, name="gap")
MISPLACED = HeuristicFn(misplaced_blocks_heuristic, admissible=True, name="misplaced")


def _held_karp_tenths(w: np.ndarray, start: int, visited: int, current: int) -> int:
    """Cheapest completion from (visited, current) through all remaining cities back to start."""
    n = w.shape[0]
    full = (1 << n) - 1
    if visited == full:
        return 0 if current == start else int(w[current, start])
    big = np.iinfo(np.int64).max // 4
    dp = np.full((1 << n, n), big, dtype=np.int64)
    dp[visited, current] = 0
    cols = np.arange(n)
    # masks only grow, so increasing numeric order is a valid DP order
    for mask in range(visited, full):
        if mask & visited != visited:
            continue
        row = dp[mask]
        live = row < big
        if not live.any():
            continue
        # best[j] = min_i dp[mask, i] + w[i, j]
        best = (row[live][:, None] + w[live]).min(axis=0)
        js = cols[((mask >> cols) & 1) == 0]
        nms = mask | (1 << js)
        dp[nms, js] = np.minimum(dp[nms, js], best[js])
    return int((dp[full] + w[:, start])[np.arange(n) != start].min())


def held_karp(inst: TspInstance, cap: int = HELD_KARP_CAP) -> float:
    """Optimal tour cost from ``inst.start`` through every city and back."""
    return held_karp_tenths(inst, cap) / 10.0


def held_karp_tenths(inst: TspInstance, cap: int = HELD_KARP_CAP, state: TspState | None = None) -> int:
    if inst.n > cap:
        raise SizeLimitError(f"Held-Karp capped at n={cap}, got n={inst.n}")
    if state is None:
        state = TspState(1 << inst.start, inst.start)
    return _held_karp_tenths(inst.tenths, inst.start, state.visited, state.current)


def tsp_cost_to_go(inst: TspInstance) -> np.ndarray:
    """Table ``t[visited, current]`` of exact remaining tour cost in tenths.

    Filled backwards from the full mask; entries for unreachable
    (visited, current) pairs are left at -1.
    """
    n, w, start = inst.n, inst.tenths, inst.start
    full = (1 << n) - 1
    table = np.full((1 << n, n), -1, dtype=np.int64)
    for j in range(n):
        table[full, j] = w[j, start]
    table[full, start] = 0
    for mask in range(full - 1, 0, -1):
        if not (mask >> start) & 1:
            continue
        for cur in range(n):
            if not (mask >> cur) & 1:
                continue
            table[mask, cur] = min(
                w[cur, j] + table[mask | (1 << j), j] for j in range(n) if not (mask >> j) & 1
            )
    return table


def hstar(domain: Domain, state, max_expansions: int = DEFAULT_MAX_EXPANSIONS) -> float:
    """Exact cost-to-goal of ``state`` in real units."""
    if isinstance(domain, PancakeDomain):
        return astar(domain, state, GAP, max_expansions=max_expansions).optimal_cost
    if isinstance(domain, BlocksWorldDomain):
        return astar(domain, state, MISPLACED, max_expansions=max_expansions).optimal_cost
    if isinstance(domain, TspDomain):
        return held_karp_tenths(domain.instance, state=state) / 10.0
    raise TypeError(f"no exact solver for {type(domain).__name__}")


def decide_via_heuristic(hhat: Callable[[Hashable], float], state, k: float, eps: float) -> bool:
    """Answer "is there a solution of cost <= k" with one heuristic query.

    Correct whenever ``|hhat - h*| < eps / 2`` on ``state``.
    """
    return hhat(state) < k + eps / 2


def bfs_cost(domain: Domain, start) -> int:
    """Forward breadth-first search; unit-cost domains only. Returns moves to goal."""
    if domain.is_goal(start):
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        s, d = frontier.popleft()
        for child, _ in domain.successors(s):
            if child in seen:
                continue
            if domain.is_goal(child):
                return d + 1
            seen.add(child)
            frontier.append((child, d + 1))
    raise UnsolvableError("goal unreachable")


def bfs_distances(domain: Domain) -> dict:
    """Distance to the goal for every state, by BFS outward from the goal.

    Valid for the reversible unit-cost domains (pancake, blocks world), where
    the distance from the goal equals the distance to it.
    """
    goal = domain.goal_state()
    dist = {goal: 0}
    frontier = deque([goal])
    while frontier:
        s = frontier.popleft()
        for child, _ in domain.successors(s):
            if child not in dist:
                dist[child] = dist[s] + 1
                frontier.append(child)
    return dist


def brute_force_tour_tenths(inst: TspInstance) -> int:
    """Minimum over all (n - 1)! tours; reference for Held-Karp."""
    w, start, n = inst.tenths.tolist(), inst.start, inst.n
    others = [c for c in range(n) if c != start]
    best = None
    for perm in itertools.permutations(others):
        cost = w[start][perm[0]] + w[perm[-1]][start]
        for a, b in zip(perm, perm[1:]):
            cost += w[a][b]
        if best is None or cost < best:
            best = cost
    return best
