"""Evaluator tests: every route against the independent naive oracle."""
from __future__ import annotations

import itertools
import random

import pytest

from truthkit.errors import (
    ArityError,
    AssignmentDomainError,
    BudgetExceededError,
    ConstantDenotationError,
    StageLimitError,
    TruthkitError,
)
from truthkit.evaluator import (
    TruthClassView,
    compile_program,
    constants_of,
    diagram,
    kernel_available,
    least_reflecting,
    oracle_sat,
    reflects,
    sat,
)
from truthkit.hfset import EMPTY, FinStructure, HFSet, hfset, stage, stage_sets
from truthkit.pools import (
    eval_table,
    formulas_upto,
    random_formula,
    random_sentence,
)
from truthkit.syntax import (
    Not,
    Or,
    big_or,
    canonical_bound,
    close,
    parse,
    sim_equiv,
    var_key,
)

from oracle import naive_sat

S1, S2, S3, S4 = stage(1), stage(2), stage(3), stage(4)
ALL_MODES = ("fast", "vm-python", "vm-kernel", "oracle")


def assignments(m: FinStructure, phi):
    names = sorted(phi.free_vars, key=var_key)
    for combo in itertools.product(m.elements, repeat=len(names)):
        yield dict(zip(names, combo))


# ---------------------------------------------------------------------------
# Handpicked verdicts


def test_exists_empty_set_true_in_stage4():
    phi = parse("(ex x (all y (not (mem y x))))")
    for mode in ALL_MODES:
        assert sat(S4, phi, {}, mode) is True


def test_two_distinct_elements_false_in_stage1():
    phi = parse("(ex x (ex y (not (eq x y))))")
    for mode in ALL_MODES:
        assert sat(S1, phi, {}, mode) is False
        assert sat(S2, phi, {}, mode) is True


def test_membership_with_assignment_codes_and_sets():
    phi = parse("(mem x y)")
    pair = hfset([EMPTY, hfset([EMPTY])])  # {∅, {∅}} has code 3
    assert sat(S3, phi, {"x": EMPTY, "y": pair}) is True
    assert sat(S3, phi, {"x": 0, "y": 3}) is True  # same query via codes
    assert sat(S3, phi, {"x": 1, "y": 3}) is True  # code 1 is {∅}
    assert sat(S3, phi, {"x": 2, "y": 3}) is False  # code 2 is {{∅}}


def test_shadowed_binder():
    # ∃x(x∈y ∧ ∃x(x∈z)) — inner x independent of outer
    phi = parse("(not (or (not (ex x (mem x y))) (not (ex x (mem x z)))))")
    singleton = hfset([EMPTY])
    for mode in ALL_MODES:
        assert sat(S3, phi, {"y": singleton, "z": EMPTY}, mode) is False
        assert sat(S3, phi, {"y": singleton, "z": singleton}, mode) is True


def test_constant_atoms():
    assert sat(S2, parse("(mem #0 #1)"), {}) is True
    assert sat(S2, parse("(mem #1 #0)"), {}) is False
    assert sat(S2, parse("(eq #1 #1)"), {}) is True


# ---------------------------------------------------------------------------
# Route agreement sweeps


def test_all_routes_agree_on_single_variable_pool():
    pool = list(formulas_upto(3, ("x",), ()))
    assert len(pool) > 50
    for phi in pool:
        for alpha in assignments(S3, phi):
            expected = naive_sat(S3, phi, alpha)
            for mode in ALL_MODES:
                assert sat(S3, phi, dict(alpha), mode) is expected, (
                    f"{mode} disagrees with naive oracle on {phi} / {alpha}"
                )


def test_routes_agree_on_random_formulas_with_constants():
    rng = random.Random(20260819)
    consts = stage_sets(2)
    for _ in range(300):
        phi = random_formula(rng, max_depth=4, variables=("x", "y"),
                             constants=consts)
        alpha = {v: rng.choice(S3.elements) for v in phi.free_vars}
        expected = naive_sat(S3, phi, alpha)
        for mode in ALL_MODES:
            assert sat(S3, phi, dict(alpha), mode) is expected


def test_routes_agree_on_random_sentences_stage4():
    rng = random.Random(777)
    for _ in range(60):
        sigma = random_sentence(rng, max_depth=5, variables=("x", "y"),
                                constants=stage_sets(3))
        expected = naive_sat(S4, sigma, {})
        for mode in ALL_MODES:
            assert sat(S4, sigma, {}, mode) is expected


@pytest.mark.skipif(not kernel_available(), reason="compiled kernel absent")
def test_kernel_matches_python_vm_on_deep_sentences():
    rng = random.Random(31337)
    for _ in range(40):
        sigma = random_sentence(rng, max_depth=7, variables=("x", "y", "z"),
                                constants=stage_sets(2))
        assert sat(S3, sigma, {}, "vm-kernel") == sat(S3, sigma, {}, "vm-python")


def test_pure_python_env_switch(monkeypatch):
    monkeypatch.setenv("TK_PURE_PYTHON", "1")
    phi = parse("(ex x (all y (not (mem y x))))")
    assert sat(S3, phi, {}, "fast") is True


# ---------------------------------------------------------------------------
# Semantic laws


def test_close_preserves_satisfaction_exhaustive_depth2():
    pool = list(formulas_upto(2, ("x", "y"), ()))
    for phi in pool:
        for alpha in assignments(S3, phi):
            sigma = close(phi, alpha)
            assert sigma.is_sentence
            assert sat(S3, sigma, {}) == sat(S3, phi, alpha)


def test_close_preserves_satisfaction_random():
    rng = random.Random(4242)
    for _ in range(400):
        phi = random_formula(rng, max_depth=4, variables=("x", "y", "z"),
                             constants=())
        alpha = {v: rng.choice(S3.elements) for v in phi.free_vars}
        assert sat(S3, close(phi, alpha), {}) == sat(S3, phi, alpha)


def test_de_morgan_and_double_negation():
    rng = random.Random(99)
    for _ in range(200):
        a = random_formula(rng, max_depth=3, variables=("x",), constants=())
        b = random_formula(rng, max_depth=3, variables=("x",), constants=())
        both = Not(Or(a, b))
        for alpha in assignments(S2, both):
            aa = {v: alpha[v] for v in a.free_vars}
            bb = {v: alpha[v] for v in b.free_vars}
            assert sat(S2, both, alpha) == (
                not (sat(S2, a, aa) or sat(S2, b, bb))
            )
        dn = Not(Not(a))
        for alpha in assignments(S2, dn):
            assert sat(S2, dn, alpha) == sat(S2, a, alpha)


def test_big_or_matches_any():
    rng = random.Random(5150)
    for _ in range(120):
        parts = [
            random_formula(rng, max_depth=2, variables=("x",), constants=())
            for _ in range(rng.randint(1, 5))
        ]
        disj = big_or(parts)
        for alpha in assignments(S3, disj):
            expected = any(
                sat(S3, p, {v: alpha[v] for v in p.free_vars}) for p in parts
            )
            assert sat(S3, disj, alpha) == expected


def test_canonical_bound_renaming_preserves_satisfaction():
    rng = random.Random(616)
    checked = 0
    for _ in range(300):
        phi = random_formula(rng, max_depth=5, variables=("x", "y"),
                             constants=())
        psi = canonical_bound(phi)
        alpha = {v: rng.choice(S3.elements) for v in phi.free_vars}
        assert sat(S3, psi, dict(alpha)) == sat(S3, phi, alpha)
        if psi != phi:
            checked += 1
            assert sim_equiv((phi, alpha), (psi, alpha))
    assert checked > 50  # the sweep actually exercised renamed pairs


def test_sim_equiv_pairs_share_truth_value():
    rng = random.Random(2718)
    pool = list(formulas_upto(2, ("x", "y"), ()))
    hits = 0
    for _ in range(1000):
        f0, f1 = rng.choice(pool), rng.choice(pool)
        a0 = {v: rng.choice(S2.elements) for v in f0.free_vars}
        a1 = {v: rng.choice(S2.elements) for v in f1.free_vars}
        if sim_equiv((f0, a0), (f1, a1)):
            hits += 1
            assert sat(S2, f0, a0) == sat(S2, f1, a1)
    assert hits >= 2


# ---------------------------------------------------------------------------
# Oracle-mode literalism and budgets


def test_oracle_sweeps_quantifier_in_full():
    phi = parse("(ex x (eq x x))")
    # one step for the quantifier node, one per element of stage(4)
    assert oracle_sat(S4, phi, {}, budget=17) is True
    with pytest.raises(BudgetExceededError):
        oracle_sat(S4, phi, {}, budget=16)
    # the fast route exits on the first witness
    assert sat(S4, phi, {}, "fast", budget=2) is True


def test_budget_exhaustion_all_routes():
    phi = parse("(ex x (ex y (ex z (or (mem x y) (mem y z)))))")
    for mode in ALL_MODES:
        with pytest.raises(BudgetExceededError):
            sat(S4, phi, {}, mode, budget=3)


def test_default_budget_allows_normal_work():
    phi = parse("(all x (all y (or (mem x y) (or (eq x y) (not (mem x y))))))")
    assert sat(S4, phi, {}) is True


# ---------------------------------------------------------------------------
# Predicates


def _pred_structure():
    return FinStructure(
        stage_sets(3),
        name="withpreds",
        predicates={
            "isempty": frozenset({(EMPTY,)}),
            "ranked": lambda s: s.rank >= 1,
            "related": frozenset(
                {(EMPTY, hfset([EMPTY])), (hfset([EMPTY]), EMPTY)}
            ),
        },
    )


def test_pred_atoms_evaluate():
    m = _pred_structure()
    f1 = parse("(pred isempty x)")
    f2 = parse("(pred ranked x)")
    f3 = parse("(pred related x y)")
    for alpha in assignments(m, f1):
        for mode in ("fast", "vm-python", "oracle"):
            assert sat(m, f1, dict(alpha), mode) == (alpha["x"] == EMPTY)
            assert sat(m, f2, dict(alpha), mode) == (alpha["x"].rank >= 1)
    for alpha in assignments(m, f3):
        expected = naive_sat(m, f3, alpha)
        assert sat(m, f3, dict(alpha)) is expected


def test_pred_rejected_by_kernel_mode():
    m = _pred_structure()
    phi = parse("(pred isempty x)")
    if kernel_available():
        with pytest.raises(TruthkitError):
            sat(m, phi, {"x": EMPTY}, "vm-kernel")


def test_unknown_predicate_errors():
    phi = parse("(pred nosuch x)")
    with pytest.raises(ConstantDenotationError):
        sat(S2, phi, {"x": EMPTY})


# ---------------------------------------------------------------------------
# Errors and argument validation


def test_assignment_domain_must_match_exactly():
    phi = parse("(mem x y)")
    with pytest.raises(AssignmentDomainError):
        sat(S2, phi, {"x": EMPTY})
    with pytest.raises(AssignmentDomainError):
        sat(S2, phi, {"x": EMPTY, "y": EMPTY, "z": EMPTY})
    with pytest.raises(AssignmentDomainError):
        sat(S2, parse("(eq #0 #0)"), {"x": EMPTY})


def test_assignment_value_must_be_element():
    phi = parse("(eq x x)")
    big = hfset([hfset([hfset([EMPTY])])])  # rank 3, outside stage(2)
    with pytest.raises(ConstantDenotationError):
        sat(S2, phi, {"x": big})


def test_assignment_value_type_checked():
    phi = parse("(eq x x)")
    with pytest.raises(AssignmentDomainError):
        sat(S2, phi, {"x": "zero"})
    with pytest.raises(AssignmentDomainError):
        sat(S2, phi, {"x": True})


def test_constant_must_denote():
    with pytest.raises(ConstantDenotationError):
        sat(S1, parse("(mem #1 #0)"), {})
    with pytest.raises(ConstantDenotationError):
        sat(S1, parse("(mem #1 #0)"), {}, "oracle")


def test_unknown_mode_rejected():
    with pytest.raises(TruthkitError):
        sat(S1, parse("(eq #0 #0)"), {}, mode="warp")


# ---------------------------------------------------------------------------
# Compilation details


def test_program_structure_small():
    phi = parse("(ex x (mem x y))")
    prog = compile_program(phi)
    assert prog.root == len(prog.kinds) - 1
    assert set(prog.slot_names) == {"x", "y"}
    assert not prog.has_pred
    # the atom mentions y, which is never bound: still unstable? x is bound.
    # atom free vars {x, y} meet the binder set {x} → not stable
    assert prog.stable[0] is False
    # the closed quantified node has free var y only → stable
    assert prog.stable[prog.root] is True


def test_program_cache_returns_same_object():
    phi = parse("(ex x (mem x y))")
    assert compile_program(phi) is compile_program(phi)


def test_constants_of_collects_unique_values():
    phi = parse("(or (mem #0 #1) (not (eq #1 #0)))")
    found = constants_of(phi)
    assert len(found) == 2
    assert set(found) == {EMPTY, hfset([EMPTY])}


# ---------------------------------------------------------------------------
# Diagram views


def test_stage1_depth1_enumeration():
    view = diagram(S1, 1, with_constants=True)
    got = list(view)
    assert got == [parse("(eq #0 #0)")]


def test_contains_ignores_depth_bound():
    view = diagram(S1, 1, with_constants=True)
    assert view.contains(parse("(not (mem #0 #0))")) is True
    assert parse("(not (mem #0 #0))") in view


def test_contains_checks_constant_policy():
    with_c = diagram(S2, 2, with_constants=True)
    without_c = diagram(S2, 2, with_constants=False)
    sigma = parse("(eq #0 #0)")
    assert with_c.contains(sigma) is True
    assert without_c.contains(sigma) is False
    closed = parse("(ex x (eq x x))")
    assert with_c.contains(closed) is True
    assert without_c.contains(closed) is True


def test_contains_false_for_nondenoting_constant():
    view = diagram(S1, 3, with_constants=True)
    assert view.contains(parse("(eq #1 #1)")) is False


def test_contains_requires_sentence():
    view = diagram(S1, 1)
    with pytest.raises(ArityError):
        view.contains(parse("(eq x x)"))


def test_depth_bound_validated():
    with pytest.raises(ArityError):
        diagram(S1, 0)


def test_enumeration_restriction_invariant():
    wide = diagram(S2, 3, with_constants=True)
    narrow = diagram(S2, 2, with_constants=True)
    assert list(wide.enumerate(2)) == list(narrow.enumerate())
    # every depth-2 truth is also in the depth-3 stream
    deep = set(map(str, wide.enumerate(3)))
    for sigma in narrow:
        assert str(sigma) in deep


def test_enumeration_matches_naive_filter():
    view = diagram(S1, 2, with_constants=True)
    from truthkit.pools import sentences_upto

    expected = [
        s for s in sentences_upto(2, tuple(S1.elements))
        if naive_sat(S1, s, {})
    ]
    assert list(view) == expected


def test_deep_sentence_membership():
    # extensionality, desugared: true in every stage
    ext = parse(
        "(all x (all y (imp (all z (iff (mem z x) (mem z y))) (eq x y))))"
    )
    assert ext.depth == 20
    for m in (S1, S2, S3):
        assert diagram(m, 1).contains(ext) is True


# ---------------------------------------------------------------------------
# Reflection


def test_reflects_trivial_existence():
    assert reflects(4, 1, parse("(ex x (eq x x))")) is True


def test_reflects_monotone_example():
    phi = parse("(ex x (mem z x))")
    # in stage(4) every z has a container; in stage(3) only if rank(z) ≤ 1
    assert reflects(4, 3, phi) is False
    assert reflects(4, 4, phi) is True
    assert least_reflecting(4, phi) == 4


def test_reflects_delta0_everywhere():
    # bounded formulas can't tell stages apart at or above their parameters
    phi = parse("(all-in u x (not (mem u u)))")
    for a in (1, 2, 3):
        assert reflects(3, a, phi) is True


def test_reflects_pair_existence():
    phi = parse("(ex p (not (or (not (mem x p)) (not (mem y p)))))")
    # pairs of rank ≤1 sets exist at stage 3 but not at stage 2 for all pairs
    assert reflects(4, 2, phi) is False
    assert reflects(4, 4, phi) is True


def test_least_reflecting_scan_and_bounds():
    phi = parse("(ex x (mem z x))")
    assert least_reflecting(4, phi, a0=3) == 4
    assert least_reflecting(3, parse("(ex x (ex y (not (eq x y))))")) == 2
    with pytest.raises(StageLimitError):
        least_reflecting(3, phi, a0=4)


def test_reflects_validates_arguments():
    phi = parse("(ex x (eq x x))")
    with pytest.raises(StageLimitError):
        reflects(3, 0, phi)
    with pytest.raises(StageLimitError):
        reflects(3, 4, phi)
    with pytest.raises(StageLimitError):
        reflects(6, 1, phi)
    with pytest.raises(ArityError):
        reflects(3, 1, parse("(eq #0 #0)"))
    with pytest.raises(ArityError):
        reflects(3, 1, parse("(pred p x)"))


def test_reflects_oracle_mode_agrees():
    phi = parse("(ex x (mem z x))")
    assert reflects(3, 2, phi, mode="oracle") == reflects(3, 2, phi)


# ---------------------------------------------------------------------------
# Vectorized truth tables


def test_eval_table_matches_sat_handpicked():
    phi = parse("(ex x (mem x y))")
    table = eval_table(S3, phi, ("y",))
    for i, e in enumerate(S3.elements):
        assert bool(table[i]) == sat(S3, phi, {"y": e})


def test_eval_table_matches_sat_random():
    rng = random.Random(1234)
    for _ in range(60):
        phi = random_formula(rng, max_depth=4, variables=("x", "y"),
                             constants=stage_sets(2))
        order = tuple(sorted(phi.free_vars, key=var_key))
        table = eval_table(S3, phi, order)
        for combo_idx in itertools.product(range(len(S3)), repeat=len(order)):
            alpha = {v: S3.elements[i] for v, i in zip(order, combo_idx)}
            assert bool(table[combo_idx]) == sat(S3, phi, alpha)


def test_eval_table_with_predicates():
    m = _pred_structure()
    phi = parse("(or (pred isempty x) (pred related x y))")
    table = eval_table(m, phi, ("x", "y"))
    for i, a in enumerate(m.elements):
        for j, b in enumerate(m.elements):
            assert bool(table[i, j]) == sat(m, phi, {"x": a, "y": b})
