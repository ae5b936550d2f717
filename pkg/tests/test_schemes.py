"""Tests for scheme-instance generators, the finiteness-guard translation,
internal-scheme and correctness-property checkers, the negation-chain and
indexed-disjunction constructions, reflection instances, and theory files."""

import itertools

import pytest

from oracle import naive_sat
from truthkit import pools
from truthkit.classes import TruthClass, family_closure, induced_truth
from truthkit.errors import (
    ArityError,
    InputFormatError,
    NotDelta0Error,
    SyntaxToolError,
)
from truthkit.evaluator import sat
from truthkit.hfset import EMPTY, FinStructure, hfset, nat, nat_value, stage
from truthkit.schemes import (
    INTERNAL_TAGS,
    REF_TAGS,
    SCHEME_TAGS,
    SchemeInstance,
    Theory,
    TheoryEntry,
    check_internal,
    check_truth_property,
    delta0fin,
    fin_guard,
    gen_ref,
    gen_scheme,
    internal_template_pool,
    ordinal_recognizer,
    parse_theory,
    prov_symbol,
    psi_seq,
    render_theory,
    successor_graph,
    template_parameters,
    theory_from_instances,
    theta_s,
)
from truthkit.syntax import (
    Const,
    Eq,
    Exists,
    Mem,
    Not,
    Or,
    Pred,
    Var,
    all_,
    all_in,
    and_,
    big_and,
    big_or,
    ex_in,
    iff,
    imp,
    parse,
    render,
)


def sentences_of(m, depth, limit=None):
    out = list(pools.sentences_upto(depth, tuple(m.elements)))
    return out if limit is None else out[:limit]


# ---------------------------------------------------------------------------
# Scheme generation


class TestGenScheme:
    def test_separation_display(self):
        # for the simplest membership template the instance is pinned in full
        phi = parse("(mem x v)")
        inst = gen_scheme("Sep", phi)
        expected = all_(
            "v",
            all_(
                "a",
                Exists(
                    "b",
                    all_(
                        "x",
                        iff(
                            Mem(Var("x"), Var("b")),
                            and_(Mem(Var("x"), Var("a")), phi),
                        ),
                    ),
                ),
            ),
        )
        assert inst.sentence == expected
        assert inst.tag == "Sep"
        assert inst.template == phi

    def test_collection_display(self):
        phi = parse("(mem x y)")
        inst = gen_scheme("Coll", phi)
        ante = all_in("x", Var("a"), Exists("y", phi))
        conc = Exists("b", all_in("x", Var("a"), ex_in("y", Var("b"), phi)))
        assert inst.sentence == all_("v", all_("a", imp(ante, conc)))

    def test_replacement_display_with_uniqueness_unfolding(self):
        phi = parse("(mem x y)")
        inst = gen_scheme("Repl", phi)
        unique = Exists(
            "y",
            and_(
                phi,
                all_("z", imp(parse("(mem x z)"), Eq(Var("z"), Var("y")))),
            ),
        )
        ante = all_in("x", Var("a"), unique)
        conc = Exists(
            "b",
            all_("y", iff(Mem(Var("y"), Var("b")), ex_in("x", Var("a"), phi))),
        )
        assert inst.sentence == all_("v", all_("a", imp(ante, conc)))

    def test_foundation_display(self):
        phi = parse("(mem v x)")
        inst = gen_scheme("Found", phi)
        minimal = and_(phi, all_in("y", Var("x"), Not(parse("(mem v y)"))))
        expected = all_("v", imp(Exists("x", phi), Exists("x", minimal)))
        assert inst.sentence == expected

    def test_induction_display_parts(self):
        phi = parse("(mem x v)")
        inst = gen_scheme("Ind", phi)
        ords = ordinal_recognizer("x", {"v", "x", "s"})
        base = Mem(Const(EMPTY), Var("v"))
        step_body = imp(
            phi,
            all_(
                "s",
                imp(successor_graph("x", "s", {"v", "x"}), parse("(mem s v)")),
            ),
        )
        step = all_("x", imp(ords, step_body))
        conc = all_("x", imp(ords, phi))
        assert inst.sentence == all_("v", imp(and_(base, step), conc))

    def test_generated_sentences_closed_and_deterministic(self):
        for tag in SCHEME_TAGS:
            params = template_parameters(tag)
            for phi in pools.formulas_upto(2, params):
                inst = gen_scheme(tag, phi)
                assert inst.sentence.is_sentence
                again = gen_scheme(tag, phi)
                assert again.sentence == inst.sentence
                assert again.template == phi

    def test_subset_arity_allowed(self):
        # templates may use fewer parameters than the maximum
        for tag in SCHEME_TAGS:
            assert gen_scheme(tag, parse("(eq x x)")).sentence.is_sentence
            assert gen_scheme(tag, parse("(eq #0 #0)")).sentence.is_sentence

    def test_arity_mismatch_rejected(self):
        with pytest.raises(ArityError):
            gen_scheme("Sep", parse("(mem x y)"))  # y not a Sep parameter
        with pytest.raises(ArityError):
            gen_scheme("Ind", parse("(mem v w)"))
        with pytest.raises(ArityError):
            gen_scheme("Repl", parse("(mem x w)"))

    def test_unknown_tag_rejected(self):
        with pytest.raises(SyntaxToolError):
            gen_scheme("Pow", parse("(eq x x)"))
        with pytest.raises(SyntaxToolError):
            gen_scheme("REF", parse("(eq x x)"))  # reflection goes via gen_ref

    def test_template_binder_collision_gets_fresh_names(self):
        # a template that already binds the helper names still works
        phi = parse("(ex a (ex b (not (or (not (mem x a)) (not (mem a b))))))")
        assert phi.free_vars == frozenset({"x"})
        inst = gen_scheme("Sep", phi)
        assert inst.sentence.is_sentence
        text = render(inst.sentence)
        assert "(ex a0" in text or "(ex b0" in text

    def test_internal_tags_share_base_sentence(self):
        phi = parse("(mem x v)")
        for itag, btag in zip(INTERNAL_TAGS, ("Sep", "Coll", "Repl", "Ind")):
            tpl = phi if btag in ("Sep", "Ind", "Found") else parse("(mem x y)")
            inner = gen_scheme(itag, tpl)
            assert inner.tag == itag
            assert inner.sentence == gen_scheme(btag, tpl).sentence


class TestSchemeTruthAtStages:
    """Evaluation-oracle facts the checkers and the acceptance sweep rest on."""

    @pytest.mark.parametrize("n", [2, 3])
    def test_separation_true_everywhere(self, n):
        m = stage(n)
        for phi in pools.formulas_upto(2, ("v", "x")):
            assert sat(m, gen_scheme("Sep", phi).sentence, {})

    @pytest.mark.parametrize("n", [2, 3])
    def test_foundation_true_everywhere(self, n):
        m = stage(n)
        for phi in pools.formulas_upto(2, ("v", "x")):
            assert sat(m, gen_scheme("Found", phi).sentence, {})

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_induction_true_everywhere(self, n):
        m = stage(n)
        for phi in pools.formulas_upto(2, ("v", "x")):
            assert sat(m, gen_scheme("Ind", phi).sentence, {})

    def test_induction_trivial_template_true_at_stage_4(self):
        assert sat(stage(4), gen_scheme("Ind", parse("(eq x x)")).sentence, {})

    def test_collection_fails_in_truncated_stages(self):
        # members of a need a witness one rank up; the collecting set then
        # needs one rank more than the stage holds
        inst = gen_scheme("Coll", parse("(mem x y)"))
        assert sat(stage(1), inst.sentence, {})
        for n in (2, 3, 4):
            assert not sat(stage(n), inst.sentence, {})

    def test_replacement_constant_map_fails_in_truncated_stages(self):
        # the constant map at a maximal-rank parameter has a one-element
        # image one rank above the stage
        inst = gen_scheme("Repl", parse("(eq y v)"))
        assert sat(stage(1), inst.sentence, {})
        for n in (2, 3, 4):
            assert not sat(stage(n), inst.sentence, {})

    def test_replacement_inequality_map_fails_only_at_stage_2(self):
        # truncation-induced uniqueness: with two elements, "some other
        # element" is functional and its image overflows; with more
        # elements the uniqueness antecedent fails
        inst = gen_scheme("Repl", parse("(not (eq x y))"))
        assert not sat(stage(2), inst.sentence, {})
        assert sat(stage(3), inst.sentence, {})
        assert sat(stage(4), inst.sentence, {})

    def test_ordinal_recognizer_picks_exactly_numerals(self):
        rec = ordinal_recognizer("x")
        for n in (2, 3, 4):
            m = stage(n)
            picked = {e for e in m.elements if sat(m, rec, {"x": e})}
            assert picked == {nat(i) for i in range(n)}

    def test_successor_graph_is_the_successor_relation(self):
        m = stage(4)
        sg = successor_graph("x", "s")
        for i in range(3):
            picked = [e for e in m.elements if sat(m, sg, {"x": nat(i), "s": e})]
            assert picked == [nat(i + 1)]
        # the top numeral's successor is absent: no witness at all
        top = nat(3)
        assert not any(sat(m, sg, {"x": top, "s": e}) for e in m.elements)


# ---------------------------------------------------------------------------
# Finiteness-guard translation


def delta0_pool_with_preds(depth=2):
    """Small bounded-formula pool mixing core atoms with a unary P."""
    core = [
        f
        for f in pools.formulas_upto(depth, ("x", "y"))
        if delta0_recognized(f)
    ]
    out = list(core)
    px = Pred("P", (Var("x"),))
    py = Pred("P", (Var("y"),))
    for f in core[:40]:
        out.append(Or(f, px))
        out.append(Not(and_(f, py)))
        out.append(ex_in("w", Var("y"), and_(Pred("P", (Var("w"),)), f)))
        out.append(all_in("w", Var("x"), Or(Pred("P", (Var("w"),)), f)))
    return out


def delta0_recognized(phi):
    from truthkit.syntax import levy_class

    return levy_class(phi) == "delta0"


class TestDelta0Fin:
    def test_atoms_fixed(self):
        for text in ("(mem x y)", "(eq x y)", "(pred P x)"):
            phi = parse(text)
            assert delta0fin(phi) == phi

    def test_homomorphic_on_negation_and_disjunction(self):
        for phi in delta0_pool_with_preds()[:120]:
            assert delta0fin(Not(phi)) == Not(delta0fin(phi))
        pool = delta0_pool_with_preds()[:25]
        for a, b in itertools.product(pool, repeat=2):
            assert delta0fin(Or(a, b)) == Or(delta0fin(a), delta0fin(b))

    def test_bounded_existential_gains_guard(self):
        body = parse("(pred P w)")
        phi = ex_in("w", Var("y"), body)
        expected = ex_in("w", Var("y"), and_(fin_guard(Var("y")), body))
        assert delta0fin(phi) == expected

    def test_bounded_universal_dual_shape(self):
        body = parse("(pred P w)")
        phi = all_in("w", Var("y"), body)
        expected = Not(
            ex_in("w", Var("y"), and_(fin_guard(Var("y")), Not(body)))
        )
        assert delta0fin(phi) == expected

    def test_nested_bounds_guard_every_level(self):
        phi = ex_in("u", Var("x"), ex_in("w", Var("u"), parse("(mem w y)")))
        inner = ex_in(
            "w", Var("u"), and_(fin_guard(Var("u")), parse("(mem w y)"))
        )
        expected = ex_in("u", Var("x"), and_(fin_guard(Var("x")), inner))
        assert delta0fin(phi) == expected

    def test_constant_bound_allowed(self):
        c = Const(hfset([EMPTY]))
        phi = ex_in("w", c, parse("(eq w w)"))
        out = delta0fin(phi)
        assert out == ex_in("w", c, and_(fin_guard(c), parse("(eq w w)")))

    def test_guard_is_vacuous_self_equality(self):
        assert fin_guard(Var("y")) == Eq(Var("y"), Var("y"))

    def test_unbounded_rejected(self):
        for text in (
            "(ex x (mem x y))",
            "(all x (mem x y))",
            "(or (mem x y) (ex w (eq w w)))",
        ):
            with pytest.raises(NotDelta0Error):
                delta0fin(parse(text))

    def test_translation_preserves_bounded_class(self):
        for phi in delta0_pool_with_preds()[:120]:
            assert delta0_recognized(delta0fin(phi))

    @pytest.mark.parametrize("n", [2, 3])
    def test_semantic_identity_over_stages_all_pred_subsets(self, n):
        # everything in a stage is finite, so the guard changes nothing
        m = stage(n)
        pool = delta0_pool_with_preds()
        subsets = [
            frozenset((e,) for e in combo)
            for size in range(len(m.elements) + 1)
            for combo in itertools.combinations(m.elements, size)
        ]
        if n == 3:  # keep the product bounded: 16 subsets x pool is enough
            subsets = subsets[::3]
            pool = pool[::2]
        for interp in subsets:
            mp = FinStructure(
                m.elements, name=f"stage({n})+P", predicates={"P": interp}
            )
            for phi in pool:
                star = delta0fin(phi)
                names = sorted(phi.free_vars)
                for values in itertools.product(m.elements, repeat=len(names)):
                    alpha = dict(zip(names, values))
                    assert sat(mp, phi, alpha) == sat(mp, star, alpha)


# ---------------------------------------------------------------------------
# Internal-scheme checker


class TestCheckInternal:
    def build_truth(self, m, tag, bound):
        fam = frozenset(
            gen_scheme(tag, phi).sentence
            for phi in internal_template_pool(tag, bound)
        )
        return induced_truth(m, fam)

    def test_intsep_all_pass(self):
        m = stage(3)
        t = self.build_truth(m, "IntSep", 2)
        report = check_internal(m, t, "IntSep", 2)
        assert report.ok
        assert report.checked == len(internal_template_pool("IntSep", 2)) == 80

    def test_intind_all_pass_with_fragment_label(self):
        m = stage(3)
        t = self.build_truth(m, "IntInd", 1)
        report = check_internal(m, t, "IntInd", 1)
        assert report.ok
        assert "finite-ordinal-fragment" in report.subject

    def test_deleting_one_instance_is_reported_exactly(self):
        m = stage(3)
        t = self.build_truth(m, "IntSep", 1)
        target = gen_scheme("IntSep", parse("(mem x v)")).sentence
        assert target in t.sentences
        smaller = TruthClass(t.family, t.sentences - {target}, t.structure)
        report = check_internal(m, smaller, "IntSep", 1)
        assert not report.ok
        assert len(report.violations) == 1
        v = report.violations[0]
        assert v.kind == "missing-instance"
        assert "(mem x v)" in v.witness

    def test_family_too_small_reported_not_thrown(self):
        m = stage(3)
        tiny = TruthClass(
            frozenset([parse("(eq x x)")]), frozenset(), "stage(3)"
        )
        report = check_internal(m, tiny, "IntSep", 1)
        assert not report.ok
        assert len(report.violations) == 8
        assert all(v.kind == "family-too-small" for v in report.violations)

    def test_intrepl_reports_the_constant_map_instances(self):
        # replacement genuinely fails in a truncated stage at the
        # constant-map templates, so an evaluation-induced class must lack
        # exactly those two depth-1 instances
        m = stage(3)
        t = self.build_truth(m, "IntRepl", 1)
        report = check_internal(m, t, "IntRepl", 1)
        assert not report.ok
        missing = {v.witness for v in report.violations}
        assert len(report.violations) == 2
        assert any("(eq y v)" in w for w in missing)
        assert any("(eq v y)" in w for w in missing)
        assert all(v.kind == "missing-instance" for v in report.violations)

    def test_intcoll_reports_truncation_failures(self):
        m = stage(2)
        t = self.build_truth(m, "IntColl", 1)
        report = check_internal(m, t, "IntColl", 1)
        assert not report.ok
        assert any("(mem x y)" in v.witness for v in report.violations)

    def test_non_internal_tag_rejected(self):
        m = stage(2)
        t = self.build_truth(m, "IntSep", 1)
        with pytest.raises(SyntaxToolError):
            check_internal(m, t, "Sep", 1)

    def test_reports_deterministic(self):
        m = stage(3)
        t = self.build_truth(m, "IntRepl", 1)
        a = check_internal(m, t, "IntRepl", 1)
        b = check_internal(m, t, "IntRepl", 1)
        assert a == b


# ---------------------------------------------------------------------------
# Correctness properties


class TestCheckTruthProperty:
    def induced(self, m, seqs, extra=()):
        fam = set(extra)
        for seq in seqs:
            fam.update(seq)
            fam.add(big_or(seq))
            for i in range(len(seq) - 1):
                fam.add(imp(seq[i], seq[i + 1]))
            for j in range(1, len(seq)):
                fam.add(imp(big_and(seq[:j]), seq[j]))
        return induced_truth(m, frozenset(family_closure(fam)))

    def test_induced_truth_satisfies_all_properties(self):
        m = stage(2)
        sents = sentences_of(m, 2, limit=12)
        seqs = [
            tuple(s)
            for k in (1, 2, 3)
            for s in itertools.islice(
                itertools.product(sents, repeat=k), 0, 140
            )
        ]
        t = self.induced(m, seqs)
        for prop in ("DC_out", "DC_in", "PI", "SPI"):
            report = check_truth_property(m, t, prop, seqs)
            assert report.ok, report.summary_lines()
            assert report.checked == len(seqs)

    def test_dc_out_violation_when_disjunct_absent(self):
        m = stage(2)
        phi = parse("(mem #0 #0)")  # false sentence
        disj = big_or([phi, phi])
        fam = family_closure([disj])
        t = TruthClass(frozenset(fam), frozenset([disj]), "stage(2)")
        report = check_truth_property(m, t, "DC_out", [(phi, phi)])
        assert not report.ok
        assert report.violations[0].kind == "DC_out-violation"

    def test_dc_in_violation_when_disjunction_absent(self):
        m = stage(2)
        phi = parse("(eq #0 #0)")
        other = parse("(mem #0 #0)")
        fam = family_closure([big_or([phi, other]), phi, other])
        t = TruthClass(frozenset(fam), frozenset([phi]), "stage(2)")
        report = check_truth_property(m, t, "DC_in", [(phi, other)])
        assert not report.ok
        assert report.violations[0].kind == "DC_in-violation"

    def test_pi_violation_chain_present_conclusion_missing(self):
        m = stage(2)
        start = parse("(eq #0 #0)")
        end = parse("(mem #0 #0)")
        fam = family_closure([start, end, imp(start, end)])
        t = TruthClass(
            frozenset(fam), frozenset([start, imp(start, end)]), "stage(2)"
        )
        report = check_truth_property(m, t, "PI", [(start, end)])
        assert not report.ok
        assert report.violations[0].kind == "PI-violation"
        # the same class also violates SPI (step antecedent is just the start)
        report2 = check_truth_property(m, t, "SPI", [(start, end)])
        assert not report2.ok

    def test_spi_needs_conjunction_steps(self):
        # chain of length 3 where only the conjunction-step form is present:
        # PI's step (s1 -> s2) is missing, so PI does not fire, but SPI does
        m = stage(2)
        s0, s1, s2 = (
            parse("(eq #0 #0)"),
            parse("(eq #1 #1)"),
            parse("(mem #0 #1)"),
        )
        members = [s0, s1, imp(s0, s1), imp(big_and([s0, s1]), s2)]
        fam = family_closure(members + [s2, imp(s1, s2)])
        t = TruthClass(frozenset(fam), frozenset(members), "stage(2)")
        seq = (s0, s1, s2)
        assert check_truth_property(m, t, "PI", [seq]).ok
        report = check_truth_property(m, t, "SPI", [seq])
        assert not report.ok
        assert report.violations[0].kind == "SPI-violation"

    def test_singleton_sequences_never_violate(self):
        m = stage(2)
        sents = sentences_of(m, 2, limit=20)
        t = self.induced(m, [(s,) for s in sents])
        for prop in ("DC_out", "DC_in", "PI", "SPI"):
            assert check_truth_property(m, t, prop, [(s,) for s in sents]).ok

    def test_empty_sequence_rejected(self):
        m = stage(2)
        t = self.induced(m, [])
        with pytest.raises(SyntaxToolError):
            check_truth_property(m, t, "DC_out", [()])

    def test_unknown_property_rejected(self):
        m = stage(2)
        t = self.induced(m, [])
        with pytest.raises(SyntaxToolError):
            check_truth_property(m, t, "DC", [])


# ---------------------------------------------------------------------------
# Negation chains and indexed disjunctions


class TestPsiSeq:
    def test_shapes(self):
        a = parse("(eq #0 #0)")
        b = parse("(mem #0 #0)")
        c = parse("(not (mem #0 #0))")
        assert psi_seq([a]) == [Not(a)]
        assert psi_seq([a, b]) == [Not(a), imp(Not(b), Not(a))]
        assert psi_seq([a, b, c]) == [
            Not(a),
            imp(Not(b), Not(a)),
            imp(Not(c), big_or([Not(a), Not(b)])),
        ]

    def test_no_double_negation_simplification(self):
        a = parse("(not (mem #0 #0))")
        out = psi_seq([a, a])
        assert out[0] == Not(a)  # literally a double negation, untouched
        assert render(out[0]) == "(not (not (mem #0 #0)))"

    def test_length_preserved(self):
        pool = sentences_of(stage(2), 2, limit=6)
        for k in (1, 2, 3, 4):
            assert len(psi_seq(pool[:k])) == k

    def test_errors(self):
        with pytest.raises(SyntaxToolError):
            psi_seq([])
        with pytest.raises(SyntaxToolError):
            psi_seq([parse("(eq x x)")])

    @pytest.mark.parametrize("n", [2, 3])
    def test_semantic_laws(self, n):
        # the i-th chain item holds exactly when the first i inputs force
        # the (i+1)-st; the 0th is the negated start
        m = stage(n)
        pool = sentences_of(m, 2, limit=10)
        checked = 0
        for seq in itertools.islice(
            itertools.product(pool, repeat=3), 0, 400
        ):
            chain = psi_seq(seq)
            assert sat(m, chain[0], {}) == (not sat(m, seq[0], {}))
            for i in range(1, len(seq)):
                want = sat(m, imp(big_and(seq[:i]), seq[i]), {})
                assert sat(m, chain[i], {}) == want
                checked += 1
        assert checked >= 700

    def test_failure_propagates_into_chain(self):
        # if the start holds and the end fails, some chain item past 0 fails
        m = stage(2)
        pool = sentences_of(m, 2, limit=14)
        seen = 0
        for seq in itertools.product(pool, repeat=3):
            if not sat(m, seq[0], {}) or sat(m, seq[-1], {}):
                continue
            chain = psi_seq(seq)
            assert any(
                not sat(m, chain[i], {}) for i in range(1, len(chain))
            )
            seen += 1
        assert seen > 50


class TestThetaS:
    def test_single_sentence_shape(self):
        s = parse("(eq #0 #0)")
        assert theta_s([s]) == and_(Eq(Var("x"), Const(nat(0))), s)

    def test_left_nested_fold(self):
        a, b = parse("(eq #0 #0)"), parse("(mem #0 #0)")
        d0 = and_(Eq(Var("x"), Const(nat(0))), a)
        d1 = and_(Eq(Var("x"), Const(nat(1))), b)
        assert theta_s([a, b]) == Or(d0, d1)

    def test_free_variable_is_exactly_x(self):
        pool = sentences_of(stage(2), 2, limit=5)
        for k in (1, 2, 3):
            th = theta_s(pool[:k])
            assert th.free_vars == frozenset({"x"})

    def test_depth_linear_in_length(self):
        s = parse("(eq #0 #0)")
        depths = [theta_s([s] * k).depth for k in range(1, 7)]
        diffs = {b - a for a, b in zip(depths, depths[1:])}
        assert diffs == {1}  # one disjunction node per extra item

    def test_indexing_claim(self):
        # instantiating at numeral i decides exactly the i-th sentence
        m = stage(3)
        pool = sentences_of(m, 2)
        pool = pool[:: max(1, len(pool) // 12)]
        count = 0
        for k in (1, 2, 3):
            for seq in itertools.islice(
                itertools.product(pool, repeat=k), 0, 60
            ):
                th = theta_s(seq)
                for i, si in enumerate(seq):
                    assert sat(m, th, {"x": nat(i)}) == sat(m, si, {})
                    count += 1
        assert count >= 300

    def test_false_off_the_numeral_range(self):
        m = stage(3)
        pool = sentences_of(m, 2, limit=4)
        th = theta_s(pool[:2])
        for e in m.elements:
            value = nat_value(e)
            if value is None or value >= 2:
                assert not sat(m, th, {"x": e})

    def test_errors(self):
        with pytest.raises(SyntaxToolError):
            theta_s([])
        with pytest.raises(SyntaxToolError):
            theta_s([parse("(mem x y)")])


# ---------------------------------------------------------------------------
# Reflection and consistency instances


class TestGenRef:
    def test_ref_shape(self):
        phi = parse("(mem x x)")
        inst = gen_ref("ZF", 1, phi, "REF")
        from truthkit.syntax import formula_code

        code = Const(formula_code(phi))
        name = prov_symbol("ZF", 1, 1)
        expected = all_("x", imp(Pred(name, (code, Var("x"))), phi))
        assert inst.sentence == expected
        assert inst.sentence.is_sentence
        assert inst.tag == "REF"

    def test_con_shape_codes_the_negation(self):
        phi = parse("(mem x x)")
        inst = gen_ref("ZF", 1, phi, "CON")
        from truthkit.syntax import formula_code

        code = Const(formula_code(Not(phi)))
        name = prov_symbol("ZF", 1, 1)
        expected = all_("x", imp(phi, Not(Pred(name, (code, Var("x"))))))
        assert inst.sentence == expected

    def test_metadata_and_determinism(self):
        phi = parse("(eq w w)")
        inst = gen_ref("KP", 3, phi, "REF", iteration=2)
        assert inst.meta_dict() == {"base": "KP", "n": "3", "iter": "2"}
        again = gen_ref("KP", 3, phi, "REF", iteration=2)
        assert again == inst

    def test_distinct_parameters_give_distinct_sentences(self):
        phi = parse("(mem x x)")
        variants = {
            gen_ref("ZF", 1, phi, "REF").sentence,
            gen_ref("ZF", 2, phi, "REF").sentence,
            gen_ref("ZF", 1, phi, "REF", iteration=2).sentence,
            gen_ref("KP", 1, phi, "REF").sentence,
            gen_ref("ZF", 1, phi, "CON").sentence,
        }
        assert len(variants) == 5

    def test_placeholder_name_sanitized(self):
        assert prov_symbol("ZF", 1) == "Prov_ZF_n1_i1"
        assert prov_symbol("KP+Found", 2, 3) == "Prov_KP_Found_n2_i3"
        assert prov_symbol("", 1) == "Prov_U_n1_i1"

    def test_binds_the_template_variable(self):
        inst = gen_ref("ZF", 1, parse("(eq w w)"), "REF")
        assert inst.sentence.is_sentence
        assert "(ex w" in render(inst.sentence)

    def test_theory_object_accepted_as_base(self):
        theory = Theory("base9", ())
        inst = gen_ref(theory, 1, parse("(mem x x)"), "CON")
        assert inst.meta_dict()["base"] == "base9"

    def test_errors(self):
        phi2 = parse("(mem x y)")
        closed = parse("(eq #0 #0)")
        with pytest.raises(ArityError):
            gen_ref("ZF", 1, phi2, "REF")
        with pytest.raises(ArityError):
            gen_ref("ZF", 1, closed, "CON")
        with pytest.raises(SyntaxToolError):
            gen_ref("ZF", 0, parse("(mem x x)"), "REF")
        with pytest.raises(SyntaxToolError):
            gen_ref("ZF", 1, parse("(mem x x)"), "PROV")
        with pytest.raises(SyntaxToolError):
            gen_ref("ZF", 1, parse("(mem x x)"), "REF", iteration=0)

    def test_groundable_against_a_predicate_interpretation(self):
        # a structure whose universe holds the coded template and which
        # interprets the placeholder decides the instance
        from truthkit.evaluator import constants_of

        m = stage(2)
        name = prov_symbol("ZF", 1, 1)
        phi = parse("(eq x x)")
        inst = gen_ref("ZF", 1, phi, "REF")
        universe = list(m.elements) + constants_of(inst.sentence)
        grounded = FinStructure(
            universe,
            name="grounded",
            predicates={name: lambda code, point: True},
        )
        assert sat(grounded, inst.sentence, {})
        # a claims-everything interpretation flips a falsifiable template
        phi_false = parse("(mem x x)")
        inst2 = gen_ref("ZF", 1, phi_false, "REF")
        universe2 = list(m.elements) + constants_of(inst2.sentence)
        claims_all = FinStructure(
            universe2,
            name="claims-all",
            predicates={name: lambda code, point: True},
        )
        assert not sat(claims_all, inst2.sentence, {})


# ---------------------------------------------------------------------------
# Theory files


class TestTheoryFiles:
    def test_round_trip(self):
        insts = [
            gen_scheme("Sep", parse("(mem x v)")),
            gen_scheme("Found", parse("(eq x v)")),
            gen_ref("ZF", 1, parse("(mem x x)"), "REF"),
            gen_ref("ZF", 2, parse("(mem x x)"), "CON", iteration=3),
        ]
        theory = theory_from_instances("demo", insts)
        text = render_theory(theory)
        assert parse_theory(text) == theory

    def test_ref_metadata_only_on_reflection_entries(self):
        insts = [
            gen_scheme("Sep", parse("(mem x v)")),
            gen_ref("KP", 1, parse("(mem x x)"), "REF"),
        ]
        theory = theory_from_instances("t", insts)
        assert theory.entries[0].ref is None
        assert dict(theory.entries[1].ref) == {
            "base": "KP",
            "n": "1",
            "iter": "1",
        }

    def test_comments_and_blank_lines_skipped(self):
        text = (
            "# leading comment\n"
            "\n"
            "theory demo2\n"
            "(eq #0 #0)\n"
            "# interior comment\n"
            "(mem #0 #1) @ref base=ZF n=1 iter=1\n"
        )
        theory = parse_theory(text)
        assert theory.name == "demo2"
        assert len(theory) == 2
        assert theory.entries[0].ref is None
        assert theory.entries[1].ref is not None

    def test_sentences_property(self):
        a, b = parse("(eq #0 #0)"), parse("(mem #0 #1)")
        theory = Theory("t", (TheoryEntry(a), TheoryEntry(b)))
        assert theory.sentences == (a, b)

    def test_header_errors(self):
        with pytest.raises(InputFormatError):
            parse_theory("")
        with pytest.raises(InputFormatError):
            parse_theory("# only a comment\n")
        with pytest.raises(InputFormatError):
            parse_theory("axioms demo\n")
        with pytest.raises(InputFormatError):
            parse_theory("theory\n")
        with pytest.raises(InputFormatError):
            parse_theory("theory two words\n")

    def test_body_errors(self):
        with pytest.raises(InputFormatError):
            parse_theory("theory t\n(eq x x)\n")  # open formula
        with pytest.raises(InputFormatError):
            parse_theory("theory t\n(eq #0\n")  # unparsable
        with pytest.raises(InputFormatError):
            parse_theory("theory t\n(eq #0 #0) @ref base=ZF n=1\n")
        with pytest.raises(InputFormatError):
            parse_theory("theory t\n(eq #0 #0) @ref base=ZF n=0 iter=1\n")
        with pytest.raises(InputFormatError):
            parse_theory(
                "theory t\n(eq #0 #0) @ref base=Z n=1 iter=1 x=2\n"
            )

    def test_rendered_form_is_line_based(self):
        theory = theory_from_instances(
            "demo3", [gen_scheme("Sep", parse("(mem x v)"))]
        )
        lines = render_theory(theory).splitlines()
        assert lines[0] == "theory demo3"
        assert len(lines) == 2
        assert parse(lines[1]).is_sentence
