"""Oracle cross-checks, runnable from the command line."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import BlocksWorldDomain, PancakeDomain, TspDomain, TspInstance
from .oracles import (
    GAP,
    MISPLACED,
    astar,
    bfs_distances,
    brute_force_tour_tenths,
    held_karp_tenths,
)

DEFAULT_LIMITS = {"pancake": 6, "tsp": 7, "blocksworld": 5}
MAX_LIMITS = {"pancake": 8, "tsp": 10, "blocksworld": 6}


@dataclass
class Check:
    name: str
    domain: str
    n: int
    passed: bool
    detail: str

    def line(self) -> str:
        return "\t".join([self.name, self.domain, str(self.n), "PASS" if self.passed else "FAIL", self.detail])


def heuristic_violations(domain, h, dist) -> tuple[int, int]:
    """(admissibility violations, consistency violations) over every state in ``dist``."""
    adm = con = 0
    for s, d in dist.items():
        hs = h(s)
        if hs > d:
            adm += 1
        for child, cost in domain.successors(s):
            if hs > cost + h(child):
                con += 1
    return adm, con


def check_heuristic(domain, h) -> Check:
    dist = bfs_distances(domain)
    adm, con = heuristic_violations(domain, h, dist)
    return Check(f"{h.name}-admissible-consistent", domain.name, domain.n, adm == con == 0,
                 f"states={len(dist)} admissibility_violations={adm} consistency_violations={con}")


def check_astar_vs_bfs(domain, h) -> Check:
    dist = bfs_distances(domain)
    bad = sum(1 for s, d in dist.items() if astar(domain, s, h).cost_units != d)
    return Check("astar-equals-bfs", domain.name, domain.n, bad == 0, f"states={len(dist)} mismatches={bad}")


def check_held_karp(n: int, instances: int, seed: int) -> Check:
    rng = np.random.default_rng([seed, n])
    bad = 0
    for _ in range(instances):
        inst = TspInstance.random(n, rng)
        if held_karp_tenths(inst) != brute_force_tour_tenths(inst):
            bad += 1
    return Check("held-karp-equals-brute-force", "tsp", n, bad == 0, f"instances={instances} mismatches={bad}")


def count_tsp_leaves(domain: TspDomain) -> int:
    """Number of complete tours in the successor tree below the initial state."""
    stack = [domain.initial_state()]
    leaves = 0
    while stack:
        s = stack.pop()
        if domain.is_goal(s):
            leaves += 1
            continue
        stack.extend(child for child, _ in domain.successors(s))
    return leaves


def check_tsp_tree(n: int, seed: int) -> Check:
    dom = TspDomain(TspInstance.random(n, np.random.default_rng([seed, n, 1])))
    leaves = count_tsp_leaves(dom)
    want = math.factorial(n - 1)
    return Check("tsp-tour-count", "tsp", n, leaves == want, f"leaves={leaves} expected={want}")


def run_checks(domain: str | None = None, n: int | None = None, instances: int = 50, seed: int = 0) -> list[Check]:
    """All checks up to the default size limits, or only ``domain`` at size ``n`` when given."""
    if n is not None and domain is None:
        raise ValueError("--n requires --domain")
    domains = [domain] if domain else list(DEFAULT_LIMITS)
    checks = []
    for name in domains:
        if n is not None and n > MAX_LIMITS[name]:
            raise ValueError(f"verify caps {name} at n={MAX_LIMITS[name]}")
        sizes = [n] if n is not None else None
        if name == "pancake":
            for k in sizes or range(2, DEFAULT_LIMITS[name] + 1):
                dom = PancakeDomain(k)
                checks += [check_heuristic(dom, GAP), check_astar_vs_bfs(dom, GAP)]
        elif name == "blocksworld":
            for k in sizes or range(1, DEFAULT_LIMITS[name] + 1):
                dom = BlocksWorldDomain(k)
                checks += [check_heuristic(dom, MISPLACED), check_astar_vs_bfs(dom, MISPLACED)]
        else:
            for k in sizes or range(2, DEFAULT_LIMITS[name] + 1):
                checks += [check_held_karp(k, instances, seed), check_tsp_tree(k, seed)]
    return checks
