"""Tests for canonical HF sets, coding, stages, collapse, and structures."""
from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from truthkit.errors import (
    CycleError,
    InputFormatError,
    NonExtensionalGraphError,
    StageLimitError,
)
from truthkit.hfset import (
    EMPTY,
    FinStructure,
    ackermann_code,
    ackermann_code_mod,
    collapse,
    decode,
    hfset,
    kur_split,
    kuratowski,
    nat,
    nat_value,
    stage,
    stage_sets,
    try_code,
)

# Independent oracles ------------------------------------------------------


def oracle_code(x) -> int:
    """Ackermann code by the defining sum, written independently."""
    return sum(2 ** oracle_code(m) for m in x.members)


def oracle_rank(x) -> int:
    if not x.members:
        return 0
    return 1 + max(oracle_rank(m) for m in x.members)


def random_code(rng: random.Random) -> int:
    return rng.randrange(0, 2**20)


# Basic canonicalization ----------------------------------------------------


def test_interning_and_equality():
    a = hfset([EMPTY, hfset([EMPTY])])
    b = hfset([hfset([EMPTY]), EMPTY, EMPTY])
    assert a is b
    assert len(a) == 2


def test_code_small_values():
    assert ackermann_code(EMPTY) == 0
    one = hfset([EMPTY])
    assert ackermann_code(one) == 1
    assert ackermann_code(hfset([one])) == 2
    assert ackermann_code(hfset([EMPTY, one])) == 3


def test_members_sorted_by_code():
    rng = random.Random(7)
    for _ in range(50):
        xs = [decode(random_code(rng)) for _ in range(4)]
        s = hfset(xs)
        codes = [ackermann_code(m) for m in s.members]
        assert codes == sorted(codes)
        assert len(set(codes)) == len(codes)


def test_code_decode_roundtrip_v4_exhaustive():
    for x in stage_sets(4):
        assert decode(ackermann_code(x)) is x


def test_code_decode_roundtrip_random_codes():
    rng = random.Random(20240817)
    for _ in range(1000):
        n = random_code(rng)
        assert ackermann_code(decode(n)) == n


def test_code_matches_oracle_on_v4():
    for x in stage_sets(4):
        assert ackermann_code(x) == oracle_code(x)


def test_rank_matches_oracle():
    rng = random.Random(3)
    for _ in range(200):
        x = decode(random_code(rng))
        assert x.rank == oracle_rank(x)


def test_code_mod_matches_exact_code():
    rng = random.Random(11)
    for m in (2, 3, 4, 7, 12, 16, 97, 65536):
        for x in stage_sets(4):
            assert ackermann_code_mod(x, m) == ackermann_code(x) % m
        for _ in range(50):
            x = decode(random_code(rng))
            assert ackermann_code_mod(x, m) == ackermann_code(x) % m


def test_code_mod_handles_tower_sized_codes():
    # rank-8 singleton chain: its code is a power tower of height 8,
    # far beyond any representable integer.
    x = EMPTY
    for _ in range(8):
        x = hfset([x])
    assert try_code(x) is None
    # 2^2^2^2^2^2^2^2 tower mod small numbers, checked against sympy-free math:
    # mod 2 it is 0; mod 3: tower exponent is even and 2^even mod 3 = 1.
    assert ackermann_code_mod(x, 2) == 0
    assert ackermann_code_mod(hfset([x]), 3) == 1


# Kuratowski pairs ----------------------------------------------------------


def test_kuratowski_degenerate():
    assert kuratowski(EMPTY, EMPTY) is hfset([hfset([EMPTY])])


def test_kuratowski_example():
    one = hfset([EMPTY])
    assert kuratowski(EMPTY, one) is hfset([hfset([EMPTY]), hfset([EMPTY, one])])


def test_kuratowski_injective_exhaustive_v3():
    v3 = stage_sets(3)
    seen = {}
    for a in v3:
        for b in v3:
            p = kuratowski(a, b)
            assert kur_split(p) == (a, b)
            assert p not in seen or seen[p] == (a, b)
            seen[p] = (a, b)


def test_kuratowski_rank_law_random():
    rng = random.Random(5)
    for _ in range(100):
        a = decode(random_code(rng))
        b = decode(random_code(rng))
        expected = max(oracle_rank(a), oracle_rank(b)) + 2
        assert kuratowski(a, b).rank == expected


@given(st.integers(0, 2**16), st.integers(0, 2**16))
@settings(max_examples=200)
def test_kuratowski_pair_equality_law(n, m):
    a, b = decode(n), decode(m)
    p, q = kuratowski(a, b), kuratowski(b, a)
    assert (p == q) == (a == b)


# Numerals -------------------------------------------------------------------


def test_nat_values():
    assert nat(0) is EMPTY
    assert nat(1) is hfset([EMPTY])
    assert nat(2) is hfset([EMPTY, hfset([EMPTY])])
    for k in range(8):
        assert nat_value(nat(k)) == k
    assert nat_value(hfset([hfset([EMPTY])])) is None


def test_nat_rank_is_value():
    for k in range(10):
        assert nat(k).rank == k


# Stages ----------------------------------------------------------------------


def test_stage_sizes():
    assert [len(stage_sets(n)) for n in range(5)] == [0, 1, 2, 4, 16]


def test_stage_is_rank_cut_exhaustive():
    # stage(n) = all sets of rank < n, for n <= 4, by brute enumeration of V_4.
    v4 = set(stage_sets(4))
    for n in range(5):
        cut = {x for x in v4 if oracle_rank(x) < n}
        assert set(stage_sets(n)) == cut


def test_stage_code_equals_position():
    for n in range(5):
        for i, x in enumerate(stage_sets(n)):
            assert ackermann_code(x) == i


def test_stage_downward_closed():
    for n in range(5):
        universe = set(stage_sets(n))
        for x in universe:
            for m in x.members:
                assert m in universe


def test_stage_cap_refused():
    with pytest.raises(StageLimitError):
        stage_sets(6)


def test_stage_env_cap(monkeypatch):
    monkeypatch.setenv("TK_MAX_STAGE", "3")
    with pytest.raises(StageLimitError):
        stage_sets(4)
    assert len(stage_sets(3)) == 4
    # the env cap only lowers, never raises, the hard cap
    monkeypatch.setenv("TK_MAX_STAGE", "9")
    with pytest.raises(StageLimitError):
        stage_sets(6)


def test_stage5_size():
    assert len(stage_sets(5)) == 65536


# Collapse ---------------------------------------------------------------------


def test_collapse_two_node_example():
    out = collapse(["a", "b"], [("b", "a")])
    assert out == {"a": hfset([EMPTY]), "b": EMPTY}


def test_collapse_two_childless_nodes_nonextensional():
    with pytest.raises(NonExtensionalGraphError) as exc:
        collapse(["a", "b"], [])
    assert set(exc.value.pair) == {"a", "b"}


def test_collapse_cycle_detected():
    with pytest.raises(CycleError) as exc:
        collapse(["a", "b", "c"], [("a", "b"), ("b", "c"), ("c", "a")])
    assert len(exc.value.cycle) >= 3


def test_collapse_undeclared_node():
    with pytest.raises(InputFormatError):
        collapse(["a"], [("a", "zz")])


def test_collapse_of_transitive_set_is_identity():
    # the membership digraph of a transitive set collapses onto itself
    rng = random.Random(13)
    samples = list(stage_sets(4))[:8] + [decode(random_code(rng)) for _ in range(5)]
    for x in samples:
        # transitive closure of {x}
        family = set()
        frontier = [x]
        while frontier:
            y = frontier.pop()
            if y in family:
                continue
            family.add(y)
            frontier.extend(y.members)
        names = {y: f"n{ackermann_code(y)}" for y in family}
        edges = [
            (names[m], names[y]) for y in family for m in y.members
        ]
        out = collapse(list(names.values()), edges)
        for y in family:
            assert out[names[y]] is y


def test_collapse_idempotent_up_to_iso():
    nodes = ["p", "q", "r", "s"]
    edges = [("q", "p"), ("r", "p"), ("s", "q"), ("s", "r"), ("q", "r")]
    first = collapse(nodes, edges)
    renames = {n: f"x{ackermann_code(v)}" for n, v in first.items()}
    second = collapse(
        list(renames.values()),
        [(renames[a], renames[b]) for a, b in edges],
    )
    for n in nodes:
        assert second[renames[n]] == first[n]


# Structures --------------------------------------------------------------------


def test_stage_structure():
    m = stage(3)
    assert len(m) == 4
    assert m.stage_index == 3
    assert m.ids() == (0, 1, 2, 3)


def test_structure_membership_indices():
    m = stage(3)
    rows = m.member_indices()
    #  0 = {} ; 1 = {0} ; 2 = {1} ; 3 = {0,1}
    assert rows[0] == frozenset()
    assert rows[1] == frozenset({0})
    assert rows[2] == frozenset({1})
    assert rows[3] == frozenset({0, 1})


def test_structure_non_transitive_universe():
    # {{∅}} has member {∅} outside the universe; membership is restricted
    m = FinStructure([EMPTY, hfset([hfset([EMPTY])])])
    rows = m.member_indices()
    assert rows[0] == frozenset()
    assert rows[1] == frozenset()


def test_structure_needs_elements():
    with pytest.raises(InputFormatError):
        FinStructure([])
