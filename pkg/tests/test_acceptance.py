"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run just this module with ``pytest tests/test_acceptance.py -v``. The scaling
trend check trains many networks and takes on the order of 20 minutes on one
core.
"""

import itertools
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from heurscale import losses, nn
from heurscale.config import RunConfig
from heurscale.domains import BlocksWorldDomain, PancakeDomain, TspDomain, TspInstance
from heurscale.experiment import run_scaling_sweep, run_threshold_sweep
from heurscale.losses import CROSS_ENTROPY, L_EPS, MSE, SCALED, loss_eps_terms, loss_true
from heurscale.oracles import (
    GAP,
    HIGH_G,
    MISPLACED,
    astar,
    bfs_distances,
    brute_force_tour_tenths,
    decide_via_heuristic,
    held_karp_tenths,
    tsp_cost_to_go,
)
from heurscale.verify import heuristic_violations
from gradcheck import network_grad_error, random_config


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE\t{'PASS' if ok else 'FAIL'}\t{name}\t{detail}", flush=True)
        assert ok, f"{name}: {detail}"

    return emit


def random_tsp_state(dom, rng):
    s = dom.initial_state()
    for _ in range(int(rng.integers(0, dom.n + 1))):
        succ = dom.successors(s)
        if not succ:
            break
        s = succ[int(rng.integers(len(succ)))][0]
    return s


def test_oracle_exactness(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = checked = 0
    for n in range(4, 9):
        for _ in range(200):
            inst = TspInstance.random(n, rng)
            mismatches += held_karp_tenths(inst) != brute_force_tour_tenths(inst)
            checked += 1
    dt = time.perf_counter() - t0
    verdict("oracle-exactness", mismatches == 0 and dt < 60, f"instances={checked} mismatches={mismatches} seconds={dt:.1f}")


def test_heuristic_admissibility_consistency(verdict):
    t0 = time.perf_counter()
    total_adm = total_con = states = 0
    for dom, h in [(PancakeDomain(n), GAP) for n in range(2, 7)] + [(BlocksWorldDomain(n), MISPLACED) for n in range(1, 6)]:
        dist = bfs_distances(dom)
        adm, con = heuristic_violations(dom, h, dist)
        total_adm += adm
        total_con += con
        states += len(dist)
    dt = time.perf_counter() - t0
    ok = total_adm == 0 and total_con == 0 and dt < 60
    verdict("heuristic-admissible-consistent", ok,
            f"states={states} admissibility_violations={total_adm} consistency_violations={total_con} seconds={dt:.1f}")


def test_perfect_heuristic_expansion(verdict):
    rng = np.random.default_rng(7)
    bad = runs = 0
    pancake = PancakeDomain(6)
    pd = bfs_distances(pancake)
    for _ in range(100):
        s = tuple(int(v) for v in rng.permutation(6) + 1)
        r = astar(pancake, s, pd.__getitem__, HIGH_G)
        bad += r.expanded_count != len(r.path) or r.cost_units != pd[s]
        runs += 1
    for _ in range(100):
        inst = TspInstance.random(7, rng)
        dom = TspDomain(inst)
        table = tsp_cost_to_go(inst)
        r = astar(dom, dom.initial_state(), lambda s: int(table[s.visited, s.current]), HIGH_G)
        bad += r.expanded_count != len(r.path) or r.cost_units != held_karp_tenths(inst)
        runs += 1
    bw = BlocksWorldDomain(5)
    bd = bfs_distances(bw)
    for _ in range(100):
        s = bw.sample_uniform(rng)
        r = astar(bw, s, bd.__getitem__, HIGH_G)
        bad += r.expanded_count != len(r.path) or r.cost_units != bd[s]
        runs += 1
    verdict("perfect-heuristic-expansion", bad == 0, f"runs={runs} violations={bad}")


def test_decision_via_heuristic(verdict):
    rng = np.random.default_rng(11)
    errors = {}
    pancake = PancakeDomain(6)
    pd = bfs_distances(pancake)
    bw = BlocksWorldDomain(5)
    bd = bfs_distances(bw)

    def pancake_pair():
        s = tuple(int(v) for v in rng.permutation(6) + 1)
        return pancake, s, pd[s], lambda t: float(pd[t])

    def bw_pair():
        s = bw.sample_uniform(rng)
        return bw, s, bd[s], lambda t: float(bd[t])

    def tsp_pair():
        dom = TspDomain(TspInstance.random(7, rng))
        s = random_tsp_state(dom, rng)
        units = held_karp_tenths(dom.instance, state=s)
        return dom, s, units, lambda t: held_karp_tenths(dom.instance, state=t) / 10

    for name, make in (("pancake", pancake_pair), ("tsp", tsp_pair), ("blocksworld", bw_pair)):
        wrong = 0
        for _ in range(1000):
            dom, s, units, hhat = make()
            eps = dom.epsilon
            step = int(rng.choice([-2, -1, 0, 1]))
            k_units = units + step * round(eps * dom.cost_scale)
            truth = units <= k_units
            wrong += decide_via_heuristic(hhat, s, k_units / dom.cost_scale, eps) != truth
        errors[name] = wrong
    verdict("decision-via-heuristic", sum(errors.values()) == 0,
            "pairs_per_domain=1000 " + " ".join(f"{k}_errors={v}" for k, v in errors.items()))


def test_loss_analytics(verdict):
    failures = []
    for eps in (0.1, 1.0, 2.0):
        for c in (0.0, 1.0, 10.0, 100.0, 1e4):
            if loss_eps_terms(eps / 2, eps, c) != eps**2 / 8:
                failures.append(f"half eps={eps} c={c}")
            if loss_eps_terms(0.0, eps, c) != 0:
                failures.append(f"zero eps={eps} c={c}")
        x = np.linspace(-3 * eps, 3 * eps, 6001)
        x = x[np.abs(np.abs(x) - eps / 2) > 0.01 * eps]
        gap = np.max(np.abs(loss_eps_terms(x, eps, 1e4) - x * x * (np.abs(x) > eps / 2)))
        if gap >= 1e-6:
            failures.append(f"limit eps={eps} gap={gap:.2e}")
        if loss_true([eps / 2, -eps / 2], [0.0, 0.0], eps) != 1.0:
            failures.append(f"boundary eps={eps}")
    verdict("loss-analytics", not failures, "ok" if not failures else ";".join(failures))


def test_gradient_suite(verdict):
    t0 = time.perf_counter()
    cases = [(L_EPS, 0.0), (L_EPS, 1.0), (L_EPS, 10.0), (MSE, 0.0), (CROSS_ENTROPY, 0.0), (SCALED, 0.0)]
    archs = (nn.FIXED_DEPTH, nn.FIXED_WIDTH)
    rng = np.random.default_rng(31)
    worst = 0.0
    failed = 0
    combos = itertools.cycle(itertools.product(cases, archs))
    for _ in range(100):
        (kind, c), arch = next(combos)
        net, x, y, loss = random_config(rng, kind, arch, c)
        err = network_grad_error(net, x, y, loss, nn.TRAIN)
        worst = max(worst, err)
        failed += err >= 1e-4
    dt = time.perf_counter() - t0
    verdict("gradient-suite", failed == 0 and dt < 120,
            f"configs=100 failures={failed} worst_rel_error={worst:.2e} seconds={dt:.1f}")


def test_scaling_trend(verdict, tmp_path):
    cfg, _ = RunConfig(command="sweep", domain="pancake", sizes="5-7", profile="desk", seed=0).sweep_configs()
    assert (cfg.train_count, cfg.loss_kind, cfg.c, cfg.criterion_kind, cfg.arch_kind) == (3000, L_EPS, 10.0, "exact_l0", nn.FIXED_DEPTH)
    t0 = time.perf_counter()
    records = run_scaling_sweep(cfg, tmp_path)
    dt = time.perf_counter() - t0
    counts = [r.param_count for r in records]
    statuses = [r.status for r in records]
    ratios = [b / a for a, b in zip(counts, counts[1:])]
    ok = statuses == ["ok"] * 3 and all(r > 1.5 for r in ratios)
    detail = " ".join(f"n={r.n}:units={r.min_units}:params={r.param_count}:{r.status}" for r in records)
    verdict("scaling-trend", ok, f"{detail} ratios={','.join(f'{q:.2f}' for q in ratios)} minutes={dt / 60:.1f}")


def test_threshold_sensitivity(verdict, tmp_path):
    def sweep(restarts, out):
        rc = RunConfig(command="sweep", domain="pancake", sizes="6", loss="mse", thresholds="0.2,0.4,0.6", restarts=restarts)
        cfg, thresholds = rc.sweep_configs()
        return run_threshold_sweep(cfg, thresholds, out)

    records = sweep(None, tmp_path / "k3")
    counts = [r.param_count for r in records]
    rerun = ""
    if any(b > a for a, b in zip(counts, counts[1:])):
        records = sweep(5, tmp_path / "k5")
        counts = [r.param_count for r in records]
        rerun = " (best of 5 rerun)"
    ok = all(b <= a for a, b in zip(counts, counts[1:])) and all(r.status == "ok" for r in records)
    detail = " ".join(f"T={r.threshold:g}:units={r.min_units}:params={r.param_count}:{r.status}" for r in records)
    verdict("threshold-sensitivity", ok, detail + rerun)


def test_reproducibility(verdict, tmp_path):
    rc = RunConfig(command="sweep", domain="pancake", sizes="4-5", train_count=600, test_count=1000,
                   restarts=2, epochs=300, seed=99)
    cfg, _ = rc.sweep_configs()
    run_scaling_sweep(cfg, tmp_path / "a")
    run_scaling_sweep(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "results.csv").read_bytes()
    b = (tmp_path / "b" / "results.csv").read_bytes()
    verdict("reproducibility", a == b and a.count(b"\n") == 4, f"bytes={len(a)} identical={a == b}")


def test_bw_uniform_sampling(verdict):
    dom = BlocksWorldDomain(3)
    states = sorted(bfs_distances(dom))
    index = {s: i for i, s in enumerate(states)}
    rng = np.random.default_rng(5)
    counts = np.zeros(len(states))
    for _ in range(100_000):
        counts[index[dom.sample_uniform(rng)]] += 1
    p = chisquare(counts).pvalue
    verdict("bw-uniform-sampling", len(states) == 13 and p > 0.01, f"states={len(states)} draws=100000 p={p:.3f}")
