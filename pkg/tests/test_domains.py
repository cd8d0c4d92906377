import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heurscale.domains import (
    TABLE,
    BlocksWorldDomain,
    PancakeDomain,
    TspDomain,
    TspInstance,
    TspState,
    feature_dim,
)
from heurscale.domains.blocksworld import count_states, lah
from heurscale.domains.pancake import flip
from heurscale.errors import InvalidStateError
from heurscale.oracles import bfs_distances


def all_bw_states(n):
    """Every support assignment that passes validation; independent of the Lah count."""
    dom = BlocksWorldDomain(n)
    out = []
    for below in itertools.product(range(n + 1), repeat=n):
        try:
            dom.validate(below)
        except InvalidStateError:
            continue
        out.append(below)
    return out


def succ_set(dom, s):
    return set(dom.successors(s))


# -- pancake -------------------------------------------------------------------


def test_pancake_successor_examples():
    assert succ_set(PancakeDomain(2), (2, 1)) == {((1, 2), 1)}
    assert succ_set(PancakeDomain(3), (1, 2, 3)) == {((2, 1, 3), 1), ((3, 2, 1), 1)}


def test_pancake_goal():
    dom = PancakeDomain(3)
    assert dom.is_goal((1, 2, 3))
    assert not dom.is_goal((2, 1, 3))


@pytest.mark.parametrize(
    "n,stack,expected",
    [
        (2, (1, 2), [1, 0, 0, 1]),
        (2, (2, 1), [0, 1, 1, 0]),
        (3, (2, 1, 3), [0, 1, 0, 1, 0, 0, 0, 0, 1]),
    ],
)
def test_pancake_encode_examples(n, stack, expected):
    np.testing.assert_array_equal(PancakeDomain(n).encode(stack), expected)


def test_pancake_rejects_bad_input():
    with pytest.raises(InvalidStateError):
        PancakeDomain(1)
    dom = PancakeDomain(3)
    with pytest.raises(InvalidStateError):
        dom.state((1, 1, 3))
    with pytest.raises(InvalidStateError):
        dom.state((1, 2))


def test_flip_reverses_prefix():
    assert flip((1, 2, 3, 4), 3) == (3, 2, 1, 4)
    assert flip(flip((4, 1, 3, 2), 4), 4) == (4, 1, 3, 2)


@pytest.mark.parametrize("n", range(2, 7))
def test_pancake_branching_and_symmetry(n):
    dom = PancakeDomain(n)
    for s in itertools.permutations(range(1, n + 1)):
        succ = dom.successors(s)
        assert len(succ) == n - 1
        for t, cost in succ:
            assert (s, cost) in succ_set(dom, t)


@pytest.mark.parametrize("n", range(2, 7))
def test_pancake_encoding_injective(n):
    dom = PancakeDomain(n)
    perms = list(itertools.permutations(range(1, n + 1)))
    codes = {dom.encode(s).tobytes() for s in perms}
    assert len(codes) == len(perms)
    assert all(len(dom.encode(s)) == feature_dim("pancake", n) for s in perms[:3])


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_pancake_closure_fuzz(n, seed):
    dom = PancakeDomain(n)
    s = dom.random_walk(3 * n, np.random.default_rng(seed))
    dom.validate(s)
    for t, cost in dom.successors(s):
        dom.validate(t)
        assert cost == 1
        assert set(dom.encode(t)) <= {0.0, 1.0}


def test_pancake_closure_bulk():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(2, 10))
        dom = PancakeDomain(n)
        s = tuple(int(v) for v in rng.permutation(n) + 1)
        for t, _ in dom.successors(s):
            assert sorted(t) == list(range(1, n + 1))


# -- blocks world --------------------------------------------------------------


def test_bw_successor_examples():
    dom = BlocksWorldDomain(2)
    assert succ_set(dom, (TABLE, TABLE)) == {((TABLE, 1), 1), ((2, TABLE), 1)}
    assert succ_set(dom, (TABLE, 1)) == {((TABLE, TABLE), 1)}
    assert len(BlocksWorldDomain(3).successors((0, 0, 0))) == 6


def test_bw_goal_examples():
    dom = BlocksWorldDomain(3)
    assert dom.is_goal((TABLE, 1, 2))  # 3 on 2 on 1
    assert not dom.is_goal((0, 0, 0))
    assert not dom.is_goal((2, 3, TABLE))  # 1 on 2 on 3


def test_bw_encode_examples():
    dom = BlocksWorldDomain(2)
    np.testing.assert_array_equal(dom.encode((0, 0)), [1, 0, 0, 1, 0, 0])
    np.testing.assert_array_equal(dom.encode((0, 1)), [1, 0, 0, 0, 1, 0])


def test_bw_rejects_invalid():
    dom = BlocksWorldDomain(3)
    for bad in [(1, 0, 0), (0, 1, 1), (2, 1, 0), (0, 0, 4), (0, 0)]:
        with pytest.raises(InvalidStateError):
            dom.state(bad)
    with pytest.raises(InvalidStateError):
        BlocksWorldDomain(0)


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 3), (3, 13), (4, 73), (5, 501)])
def test_bw_state_counts(n, expected):
    states = all_bw_states(n)
    assert len(states) == expected
    assert count_states(n) == expected
    assert set(bfs_distances(BlocksWorldDomain(n))) == set(states)


def test_lah_small_values():
    # L(n, k) = C(n-1, k-1) n! / k!
    from math import comb, factorial

    for n in range(1, 8):
        for k in range(1, n + 1):
            assert lah(n, k) == comb(n - 1, k - 1) * factorial(n) // factorial(k)


@pytest.mark.parametrize("n", range(1, 6))
def test_bw_symmetry_branching_encoding(n):
    dom = BlocksWorldDomain(n)
    states = all_bw_states(n)
    codes = set()
    for s in states:
        succ = dom.successors(s)
        clear = len(dom.clear_blocks(s))
        assert len(succ) <= clear * clear
        for t, cost in succ:
            assert cost == 1
            assert (s, cost) in succ_set(dom, t)
        codes.add(dom.encode(s).tobytes())
    assert len(codes) == len(states)


def test_bw_towers_round_trip():
    dom = BlocksWorldDomain(5)
    for s in all_bw_states(5):
        towers = dom.towers(s)
        assert sorted(b for t in towers for b in t) == [1, 2, 3, 4, 5]
        assert dom.from_towers(towers) == s


def test_bw_closure_fuzz():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        n = int(rng.integers(1, 9))
        dom = BlocksWorldDomain(n)
        s = dom.sample_uniform(rng)
        dom.validate(s)
        for t, _ in dom.successors(s):
            dom.validate(t)


# -- TSP -----------------------------------------------------------------------


def test_tsp_instance_validation():
    with pytest.raises(InvalidStateError):
        TspInstance.from_weights([[0, 0.05], [0.3, 0]])
    with pytest.raises(InvalidStateError):
        TspInstance.from_weights([[0, 5.1], [0.3, 0]])
    with pytest.raises(InvalidStateError):
        TspInstance.from_weights([[0, 0.3], [0.4, 0]], start=2)
    with pytest.raises(InvalidStateError):
        TspInstance.from_weights([[0]])


def test_tsp_two_city_tour():
    inst = TspInstance.from_weights([[0, 0.3], [0.4, 0]], start=0)
    dom = TspDomain(inst)
    s = dom.initial_state()
    ((s1, c1),) = dom.successors(s)
    ((s2, c2),) = dom.successors(s1)
    assert s1 == TspState(0b11, 1)
    assert dom.is_goal(s2)
    assert dom.successors(s2) == []
    assert dom.to_real(c1 + c2) == pytest.approx(0.7)


def test_tsp_encode_example():
    inst = TspInstance.from_weights([[0, 0.3], [0.4, 0]], start=0)
    dom = TspDomain(inst)
    np.testing.assert_allclose(dom.encode(dom.initial_state()), [0, 0.3, 0.4, 0, 1, 0, 1, 0])


@pytest.mark.parametrize("n", range(2, 8))
def test_tsp_branching_and_closure(n):
    rng = np.random.default_rng(n)
    dom = TspDomain(TspInstance.random(n, rng))
    frontier = [dom.initial_state()]
    seen = set(frontier)
    while frontier:
        s = frontier.pop()
        dom.validate(s)
        succ = dom.successors(s)
        assert len(succ) <= n - 1
        for t, cost in succ:
            assert 1 <= cost <= 50
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    # reachable non-goal states: start alone, or start plus a non-empty set with any current in it
    assert len(seen) == 1 + sum(
        len(c) for k in range(1, n) for c in itertools.combinations(range(n - 1), k)
    ) + 1


@pytest.mark.parametrize("n", range(2, 7))
def test_tsp_encoding_injective_on_instances(n):
    rng = np.random.default_rng(100 + n)
    seen = {}
    for _ in range(300):
        inst = TspInstance.random(n, rng)
        dom = TspDomain(inst)
        key = (inst.tenths.tobytes(), inst.start)
        code = dom.encode(dom.initial_state()).tobytes()
        assert seen.setdefault(code, key) == key


def test_tsp_encoding_injective_on_visited_sets():
    dom = TspDomain(TspInstance.random(6, np.random.default_rng(3)))
    masks = [m for m in range(64) if m & (1 << dom.instance.start)]
    codes = {dom.encode(TspState(m, dom.instance.start)).tobytes() for m in masks}
    assert len(codes) == len(masks)


def test_tsp_encoding_values():
    dom = TspDomain(TspInstance.random(5, np.random.default_rng(9)))
    v = dom.encode(dom.initial_state())
    w = v[:25].reshape(5, 5)
    off = w[~np.eye(5, dtype=bool)]
    assert np.all((off >= 0.1) & (off <= 5.0))
    np.testing.assert_allclose(off * 10, np.round(off * 10))
    assert np.all(np.diag(w) == 0)
    assert set(v[25:]) <= {0.0, 1.0}
