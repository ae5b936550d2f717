"""Axiom-scheme instance generators and truth-class property checkers.

This module turns formula templates into closed axiom-scheme instances
(separation, replacement, collection, foundation, and a finite-ordinal
induction rendering), applies the finiteness-guard translation to bounded
formulas, generates reflection/consistency sentences around a provability
placeholder predicate, and checks truth classes for disjunctive correctness
and chain-induction properties.  It also provides the small sentence
constructions those checks rest on (negation chains, indexed disjunctions)
and a plain-text theory file format.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .classes import Report, TruthClass, Violation, _finish_report, is_shaped, structure_ref
from .errors import (
    ArityError,
    InputFormatError,
    NotDelta0Error,
    SyntaxToolError,
)
from .hfset import EMPTY, FinStructure, nat
from .syntax import (
    Const,
    Eq,
    Exists,
    Formula,
    Mem,
    Not,
    Or,
    Pred,
    Term,
    Var,
    _bounded_exists_parts,
    _is_delta0,
    all_,
    all_in,
    all_names,
    and_,
    big_and,
    big_or,
    ex_in,
    formula_code,
    fresh_var,
    iff,
    imp,
    levy_class,
    parse,
    render,
    subst,
    var_key,
)

__all__ = [
    "SCHEME_TAGS",
    "REF_TAGS",
    "INTERNAL_TAGS",
    "SchemeInstance",
    "Theory",
    "TheoryEntry",
    "check_internal",
    "check_truth_property",
    "delta0fin",
    "fin_guard",
    "gen_ref",
    "gen_scheme",
    "internal_template_pool",
    "ordinal_recognizer",
    "parse_theory",
    "prov_symbol",
    "psi_seq",
    "render_theory",
    "successor_graph",
    "template_parameters",
    "theory_from_instances",
    "theta_s",
]


SCHEME_TAGS = ("Sep", "Coll", "Repl", "Ind", "Found")
REF_TAGS = ("REF", "CON")
INTERNAL_TAGS = ("IntSep", "IntColl", "IntRepl", "IntInd")

_TEMPLATE_PARAMS: dict[str, tuple[str, ...]] = {
    "Sep": ("v", "x"),
    "Ind": ("v", "x"),
    "Found": ("v", "x"),
    "Repl": ("v", "x", "y"),
    "Coll": ("v", "x", "y"),
}

_INTERNAL_BASE = {
    "IntSep": "Sep",
    "IntColl": "Coll",
    "IntRepl": "Repl",
    "IntInd": "Ind",
}


def template_parameters(tag: str) -> tuple[str, ...]:
    """The parameter variables a template for ``tag`` may use freely."""
    base = _INTERNAL_BASE.get(tag, tag)
    try:
        return _TEMPLATE_PARAMS[base]
    except KeyError:
        raise SyntaxToolError(
            f"unknown scheme tag {tag!r}; expected one of "
            f"{SCHEME_TAGS + INTERNAL_TAGS}"
        ) from None


@dataclass(frozen=True)
class SchemeInstance:
    """A generated axiom instance: tag, the template it came from, the sentence.

    ``meta`` carries extra generation parameters (reflection instances record
    the base-theory tag, the partial-truth index, and the iteration depth) as
    sorted key/value pairs so regeneration is deterministic and comparable.
    """

    tag: str
    template: Formula
    sentence: Formula
    meta: tuple[tuple[str, str], ...] = ()

    def meta_dict(self) -> dict[str, str]:
        return dict(self.meta)

    def line(self) -> str:
        extra = ""
        if self.meta:
            extra = " [" + " ".join(f"{k}={v}" for k, v in self.meta) + "]"
        return f"{self.tag}{extra} template={render(self.template)}"


# ---------------------------------------------------------------------------
# Scheme sentence builders


def _check_template(tag: str, phi: Formula) -> tuple[str, ...]:
    params = template_parameters(tag)
    extra = sorted(set(phi.free_vars) - set(params), key=var_key)
    if extra:
        raise ArityError(
            f"{tag} template may only use {'/'.join(params)} free; "
            f"extra variables {extra} in {render(phi)}"
        )
    return params


def _sep_sentence(phi: Formula) -> Formula:
    taken = set(all_names(phi)) | {"v", "x"}
    a = fresh_var(taken, "a")
    taken.add(a)
    b = fresh_var(taken, "b")
    matrix = iff(Mem(Var("x"), Var(b)), and_(Mem(Var("x"), Var(a)), phi))
    return all_("v", all_(a, Exists(b, all_("x", matrix))))


def _repl_sentence(phi: Formula) -> Formula:
    taken = set(all_names(phi)) | {"v", "x", "y"}
    a = fresh_var(taken, "a")
    taken.add(a)
    b = fresh_var(taken, "b")
    taken.add(b)
    z = fresh_var(taken, "z")
    # "exactly one y" unfolded: a witness all alternatives collapse onto
    unique = Exists(
        "y",
        and_(phi, all_(z, imp(subst(phi, "y", Var(z)), Eq(Var(z), Var("y"))))),
    )
    ante = all_in("x", Var(a), unique)
    conc = Exists(
        b, all_("y", iff(Mem(Var("y"), Var(b)), ex_in("x", Var(a), phi)))
    )
    return all_("v", all_(a, imp(ante, conc)))


def _coll_sentence(phi: Formula) -> Formula:
    taken = set(all_names(phi)) | {"v", "x", "y"}
    a = fresh_var(taken, "a")
    taken.add(a)
    b = fresh_var(taken, "b")
    ante = all_in("x", Var(a), Exists("y", phi))
    conc = Exists(b, all_in("x", Var(a), ex_in("y", Var(b), phi)))
    return all_("v", all_(a, imp(ante, conc)))


def _found_sentence(phi: Formula) -> Formula:
    taken = set(all_names(phi)) | {"v", "x"}
    y = fresh_var(taken, "y")
    minimal = and_(phi, all_in(y, Var("x"), Not(subst(phi, "x", Var(y)))))
    return all_("v", imp(Exists("x", phi), Exists("x", minimal)))


def ordinal_recognizer(var: str, taken: Iterable[str] = ()) -> Formula:
    """Recognize the finite von Neumann ordinals present in a structure.

    ``var`` is an ordinal iff it is transitive and linearly ordered by
    membership; over hereditarily finite universes these are exactly the
    numerals.
    """
    used = set(taken) | {var}
    p = fresh_var(used, "p")
    used.add(p)
    q = fresh_var(used, "q")
    trans = all_in(p, Var(var), all_in(q, Var(p), Mem(Var(q), Var(var))))
    linear = all_in(
        p,
        Var(var),
        all_in(
            q,
            Var(var),
            big_or(
                [
                    Mem(Var(p), Var(q)),
                    Mem(Var(q), Var(p)),
                    Eq(Var(p), Var(q)),
                ]
            ),
        ),
    )
    return and_(trans, linear)


def successor_graph(var: str, succ: str, taken: Iterable[str] = ()) -> Formula:
    """``succ`` is the successor of ``var``: it holds var's members plus var."""
    used = set(taken) | {var, succ}
    t = fresh_var(used, "t")
    return all_(
        t,
        iff(Mem(Var(t), Var(succ)), Or(Mem(Var(t), Var(var)), Eq(Var(t), Var(var)))),
    )


def _ind_sentence(phi: Formula) -> Formula:
    # Finite-ordinal rendering: numeral-bounded quantifiers become
    # "for ordinals present in the structure", zero is the empty-set
    # constant, and the successor step is guarded by the successor graph —
    # vacuous at the top numeral, so instances hold in truncated universes.
    taken = set(all_names(phi)) | {"v", "x"}
    s = fresh_var(taken, "s")
    taken.add(s)
    ords = ordinal_recognizer("x", taken | {"x"})
    base = subst(phi, "x", Const(EMPTY))
    step_body = imp(
        phi, all_(s, imp(successor_graph("x", s, taken), subst(phi, "x", Var(s))))
    )
    step = all_("x", imp(ords, step_body))
    conc = all_("x", imp(ords, phi))
    return all_("v", imp(and_(base, step), conc))


_BUILDERS = {
    "Sep": _sep_sentence,
    "Repl": _repl_sentence,
    "Coll": _coll_sentence,
    "Found": _found_sentence,
    "Ind": _ind_sentence,
}


def gen_scheme(tag: str, phi: Formula) -> SchemeInstance:
    """Generate the closed scheme instance for ``tag`` at template ``phi``.

    ``Sep``/``Ind``/``Found`` templates may use ``v`` and ``x`` freely;
    ``Repl``/``Coll`` templates may use ``v``, ``x``, and ``y``.  The
    ``Int*`` tags produce the same sentence as their base tag (their content
    is membership of that sentence in a truth class; see
    :func:`check_internal`).
    """
    if tag in REF_TAGS:
        raise SyntaxToolError(
            f"tag {tag!r} takes generation parameters; use gen_ref"
        )
    base = _INTERNAL_BASE.get(tag, tag)
    _check_template(base, phi)
    sentence = _BUILDERS[base](phi)
    return SchemeInstance(tag, phi, sentence)


# ---------------------------------------------------------------------------
# Finiteness-guard translation for bounded formulas


def fin_guard(t: Term) -> Formula:
    """Finiteness guard on a term.

    Over hereditarily finite structures every value is finite, so the guard
    is rendered as the vacuous self-equality; what matters (and what the
    rewrite laws check) is its structural placement inside every bounded
    quantifier the translation passes through.
    """
    return Eq(t, t)


def delta0fin(delta: Formula) -> Formula:
    """Insert finiteness guards into every bounded quantifier of ``delta``.

    ``delta`` must be recognized as having bounded quantifiers only (extra
    predicate atoms allowed).  Atoms are fixed; negation and disjunction are
    homomorphic; a bounded existential gains a guard on its bound:
    the translated body is "bound is finite AND translated inner body".
    """
    if not _is_delta0(delta):
        raise NotDelta0Error(
            f"not recognized as bounded-quantifier only "
            f"(class {levy_class(delta)}): {render(delta)}"
        )
    return _star(delta)


def _star(phi: Formula) -> Formula:
    if isinstance(phi, (Mem, Eq, Pred)):
        return phi
    if isinstance(phi, Exists):
        parts = _bounded_exists_parts(phi)
        if parts is None:  # unreachable behind the recognizer
            raise NotDelta0Error(f"unbounded existential: {render(phi)}")
        v, w, inner = parts
        # the matched shape is "exists v (v in w AND NOT inner)"
        if isinstance(inner, Not):
            body_star: Formula = _star(inner.body)
        else:
            body_star = Not(_star(inner))
        return ex_in(v, w, and_(fin_guard(w), body_star))
    if isinstance(phi, Not):
        return Not(_star(phi.body))
    if isinstance(phi, Or):
        return Or(_star(phi.left), _star(phi.right))
    raise NotDelta0Error(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Internal-scheme checker (depth-bounded content of scheme-closure claims)


def internal_template_pool(tag: str, depth_bound: int) -> list[Formula]:
    """All constant-free templates for ``tag`` of depth ≤ ``depth_bound``."""
    from . import pools

    params = template_parameters(tag)
    return list(pools.formulas_upto(depth_bound, params))


def _clip(text: str, limit: int = 160) -> str:
    return text if len(text) <= limit else text[: limit - 3] + "..."


def check_internal(
    m: FinStructure,
    t: TruthClass,
    tag: str,
    depth_bound: int,
) -> Report:
    """Check that every scheme instance at templates of depth ≤ bound is in t.

    For each template φ the generated instance must be a member of the truth
    class; a missing instance whose shape the family cannot even express is
    reported as ``family-too-small`` rather than raised.
    """
    if tag not in _INTERNAL_BASE:
        raise SyntaxToolError(
            f"check_internal tag must be one of {INTERNAL_TAGS}; got {tag!r}"
        )
    if not isinstance(t, TruthClass):
        raise ArityError("check_internal needs a truth class")
    note = " [finite-ordinal-fragment]" if tag == "IntInd" else ""
    subject = (
        f"{tag} depth<={depth_bound} over {structure_ref(m)}{note}"
    )
    violations: list[Violation] = []
    checked = 0
    for phi in internal_template_pool(tag, depth_bound):
        checked += 1
        inst = gen_scheme(tag, phi)
        s = inst.sentence
        if s in t.sentences:
            continue
        if s in t.family or is_shaped(s, t.family):
            violations.append(
                Violation(2, "missing-instance", _clip(inst.line()))
            )
        else:
            violations.append(
                Violation(1, "family-too-small", _clip(inst.line()))
            )
    return _finish_report(subject, checked, violations)


# ---------------------------------------------------------------------------
# Correctness-property checkers over truth classes


_PROP_CLAUSE = {"DC_out": 1, "DC_in": 2, "PI": 3, "SPI": 4}


def _seq_text(index: int, seq: Sequence[Formula]) -> str:
    return _clip(f"sequence {index}: " + " | ".join(render(s) for s in seq))


def check_truth_property(
    m: FinStructure,
    t: TruthClass,
    prop: str,
    sequences: Iterable[Sequence[Formula]],
) -> Report:
    """Check a correctness property of a truth class over a sequence pool.

    ``DC_out``: membership of a disjunction forces membership of a disjunct.
    ``DC_in``: membership of any disjunct forces membership of the disjunction.
    ``PI``: membership of the start and of every step implication forces
    membership of the end.  ``SPI``: as PI but each step's antecedent is the
    conjunction of everything before it.  Violating sequences are reported.
    """
    if prop not in _PROP_CLAUSE:
        raise SyntaxToolError(
            f"unknown property {prop!r}; expected one of {sorted(_PROP_CLAUSE)}"
        )
    clause = _PROP_CLAUSE[prop]
    subject = f"{prop} over {structure_ref(m)}"
    member = t.sentences.__contains__
    violations: list[Violation] = []
    checked = 0
    for index, raw in enumerate(sequences):
        seq = tuple(raw)
        if not seq:
            raise SyntaxToolError(f"sequence {index} is empty")
        checked += 1
        bad = False
        if prop == "DC_out":
            bad = member(big_or(seq)) and not any(member(s) for s in seq)
        elif prop == "DC_in":
            bad = any(member(s) for s in seq) and not member(big_or(seq))
        elif prop == "PI":
            k = len(seq) - 1
            bad = (
                member(seq[0])
                and all(member(imp(seq[i], seq[i + 1])) for i in range(k))
                and not member(seq[k])
            )
        else:  # SPI
            k = len(seq) - 1
            bad = (
                member(seq[0])
                and all(
                    member(imp(big_and(seq[:j]), seq[j]))
                    for j in range(1, k + 1)
                )
                and not member(seq[k])
            )
        if bad:
            violations.append(
                Violation(clause, f"{prop}-violation", _seq_text(index, seq))
            )
    return _finish_report(subject, checked, violations)


# ---------------------------------------------------------------------------
# Sequence constructions


def _require_sentences(name: str, seq: Sequence[Formula]) -> tuple[Formula, ...]:
    out = tuple(seq)
    if not out:
        raise SyntaxToolError(f"{name} needs a nonempty sequence")
    for i, s in enumerate(out):
        if not isinstance(s, Formula):
            raise SyntaxToolError(f"{name} item {i} is not a formula")
        if not s.is_sentence:
            raise SyntaxToolError(
                f"{name} item {i} has free variables: {render(s)}"
            )
    return out


def psi_seq(phis: Sequence[Formula]) -> list[Formula]:
    """Negation-chain sequence: first item negated, then each further item is
    "this one fails implies an earlier one fails" (kept fully unfolded, no
    double-negation simplification)."""
    seq = _require_sentences("psi_seq", phis)
    out: list[Formula] = [Not(seq[0])]
    for i in range(1, len(seq)):
        earlier = big_or([Not(seq[j]) for j in range(i)])
        out.append(imp(Not(seq[i]), earlier))
    return out


def theta_s(s: Sequence[Formula]) -> Formula:
    """Indexed disjunction with one free variable ``x``.

    The disjunct for position i is "x equals the i-th numeral AND the i-th
    sentence holds", so instantiating x at numeral i decides exactly the i-th
    sentence, and every non-numeral value makes the formula false.
    """
    seq = _require_sentences("theta_s", s)
    disjuncts = [
        and_(Eq(Var("x"), Const(nat(i))), si) for i, si in enumerate(seq)
    ]
    return big_or(disjuncts)


# ---------------------------------------------------------------------------
# Reflection / consistency instances around a provability placeholder


def prov_symbol(base: str, n: int, iteration: int = 1) -> str:
    """Placeholder predicate name for (base theory, truth index, iteration).

    The name carries all three parameters so instances from different
    generations stay distinct and regeneration is deterministic.
    """
    safe = re.sub(r"[^A-Za-z0-9_]", "_", base).strip("_") or "U"
    return f"Prov_{safe}_n{n}_i{iteration}"


def gen_ref(
    u: "Theory | str",
    n: int,
    phi: Formula,
    kind: str,
    iteration: int = 1,
) -> SchemeInstance:
    """Generate a reflection (REF) or consistency (CON) instance for ``phi``.

    ``phi`` must have exactly one free variable.  The provability side is an
    uninterpreted binary placeholder predicate applied to the coded template
    and the point; interpreting that predicate (e.g. by bounded proof search)
    is a separate grounding step.  REF: provable-at-the-point implies the
    formula; CON: the formula implies no refutation-at-the-point.
    """
    base = u.name if isinstance(u, Theory) else str(u)
    if kind not in REF_TAGS:
        raise SyntaxToolError(f"kind must be REF or CON; got {kind!r}")
    if n < 1:
        raise SyntaxToolError(f"truth index must be >= 1; got {n}")
    if iteration < 1:
        raise SyntaxToolError(f"iteration must be >= 1; got {iteration}")
    fv = sorted(phi.free_vars, key=var_key)
    if len(fv) != 1:
        raise ArityError(
            f"{kind} template must have exactly one free variable; "
            f"got {fv or 'none'} in {render(phi)}"
        )
    x = fv[0]
    name = prov_symbol(base, n, iteration)
    if kind == "REF":
        code = Const(formula_code(phi))
        sentence = all_(x, imp(Pred(name, (code, Var(x))), phi))
    else:
        code = Const(formula_code(Not(phi)))
        sentence = all_(x, imp(phi, Not(Pred(name, (code, Var(x))))))
    meta = (("base", base), ("iter", str(iteration)), ("n", str(n)))
    return SchemeInstance(kind, phi, sentence, meta)


# ---------------------------------------------------------------------------
# Theory files


@dataclass(frozen=True)
class TheoryEntry:
    """One theory axiom; reflection-generated axioms carry their metadata."""

    sentence: Formula
    ref: tuple[tuple[str, str], ...] | None = None


@dataclass(frozen=True)
class Theory:
    """A named finite list of axioms (a theory is its axiom list, not its
    deductive closure)."""

    name: str
    entries: tuple[TheoryEntry, ...]

    @property
    def sentences(self) -> tuple[Formula, ...]:
        return tuple(e.sentence for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


_THEORY_NAME_RE = re.compile(r"[A-Za-z0-9_.+\-^()]+\Z")


def _parse_ref_annotation(text: str, lineno: int) -> tuple[tuple[str, str], ...]:
    fields: dict[str, str] = {}
    for tok in text.split():
        if "=" not in tok:
            raise InputFormatError(
                f"line {lineno}: bad @ref field {tok!r} (need key=value)"
            )
        key, _, value = tok.partition("=")
        if key in fields:
            raise InputFormatError(f"line {lineno}: duplicate @ref key {key!r}")
        fields[key] = value
    if set(fields) != {"base", "n", "iter"}:
        raise InputFormatError(
            f"line {lineno}: @ref needs exactly base=, n=, iter=; "
            f"got {sorted(fields)}"
        )
    for key in ("n", "iter"):
        if not fields[key].isdigit() or int(fields[key]) < 1:
            raise InputFormatError(
                f"line {lineno}: @ref {key} must be a positive integer"
            )
    return (("base", fields["base"]), ("iter", fields["iter"]), ("n", fields["n"]))


def parse_theory(text: str) -> Theory:
    """Parse the theory file format.

    Line 1 (after blank/comment lines): ``theory <name>``.  Every further
    nonblank, noncomment line is one sentence s-expression, optionally
    followed by `` @ref base=<name> n=<k> iter=<m>`` marking a generated
    reflection axiom.  Lines whose first nonblank character is ``#`` are
    comments (the character also appears inside constant tokens, so comments
    are full-line only).
    """
    name: str | None = None
    entries: list[TheoryEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if name is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "theory":
                raise InputFormatError(
                    f"line {lineno}: expected 'theory <name>' header; got {line!r}"
                )
            if not _THEORY_NAME_RE.match(parts[1]):
                raise InputFormatError(
                    f"line {lineno}: bad theory name {parts[1]!r}"
                )
            name = parts[1]
            continue
        ref = None
        body = line
        if " @ref " in line:
            body, _, annot = line.partition(" @ref ")
            ref = _parse_ref_annotation(annot.strip(), lineno)
        elif line.startswith("@ref") or " @ref" in line:
            raise InputFormatError(
                f"line {lineno}: @ref annotation must follow a sentence"
            )
        try:
            sentence = parse(body.strip())
        except SyntaxToolError as exc:
            raise InputFormatError(f"line {lineno}: {exc}") from exc
        if not sentence.is_sentence:
            raise InputFormatError(
                f"line {lineno}: theory axioms must be sentences; "
                f"free variables {sorted(sentence.free_vars, key=var_key)}"
            )
        entries.append(TheoryEntry(sentence, ref))
    if name is None:
        raise InputFormatError("empty theory text (no 'theory <name>' header)")
    return Theory(name, tuple(entries))


def render_theory(theory: Theory) -> str:
    """Render a theory in the file format (inverse of :func:`parse_theory`)."""
    lines = [f"theory {theory.name}"]
    for entry in theory.entries:
        line = render(entry.sentence)
        if entry.ref is not None:
            fields = dict(entry.ref)
            line += (
                f" @ref base={fields['base']} n={fields['n']} "
                f"iter={fields['iter']}"
            )
        lines.append(line)
    return "\n".join(lines) + "\n"


def theory_from_instances(
    name: str, instances: Iterable[SchemeInstance]
) -> Theory:
    """Bundle generated instances into a theory; reflection metadata is kept."""
    entries = []
    for inst in instances:
        ref = inst.meta if inst.tag in REF_TAGS else None
        entries.append(TheoryEntry(inst.sentence, ref))
    return Theory(name, tuple(entries))
