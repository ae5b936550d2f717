"""Satisfaction classes and truth classes as explicit finite data.

A satisfaction class stores a family of formula shapes plus the set of
(formula, assignment) pairs it deems satisfied; a truth class stores a family
plus the set of closed instances it deems true.  Membership is the data —
absence means "not satisfied"/"not true" — so pathological classes are
representable and the validators check the compositional axioms against the
stored bits rather than against actual evaluation.

Supporting operations: extensionality checking (bits must agree across pairs
with literally identical closures), interconversion between the two kinds
(exact round trips on extensional input), evaluation-induced classes, the
balanced-disjunction pathology probe, and the diagonal refuter showing no
binary formula can define satisfaction for a coded formula pool.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Union

from .errors import (
    ArityError,
    ConstantDenotationError,
    ExtensionalityError,
    InputFormatError,
    SyntaxToolError,
)
from .evaluator import constants_of, sat
from .hfset import _ACK_KEY as _SET_KEY
from .hfset import FinStructure, HFSet, ackermann_code, ackermann_code_mod, decode
from .hierarchy import DepthFamily
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
    close,
    formula_code,
    immediate_subformulae,
    parse,
    render,
    subst,
    var_key,
)

__all__ = [
    "SatClass",
    "TruthClass",
    "Violation",
    "Report",
    "DiagonalWitness",
    "validate_class",
    "is_extensional",
    "convert",
    "induced_sat",
    "induced_truth",
    "family_closure",
    "match_instance",
    "is_shaped",
    "pathology_D",
    "diagonal_refute",
    "default_coding",
    "structure_ref",
    "parse_class",
    "render_class",
]


Assignment = Mapping[str, HFSet]
FrozenAssignment = tuple[tuple[str, HFSet], ...]
Entry = tuple[Formula, FrozenAssignment]


def freeze_assignment(alpha: Assignment) -> FrozenAssignment:
    """Canonical hashable form: (name, value) pairs in variable order."""
    return tuple(sorted(alpha.items(), key=lambda kv: var_key(kv[0])))


def structure_ref(m: FinStructure) -> str:
    """A stable textual reference for a structure (used in class headers)."""
    if m.name:
        return m.name
    return f"anon({len(m)})"


def _value_key(h: HFSet):
    return ackermann_code(h)


def _assignment_text(items: FrozenAssignment) -> str:
    return " ".join(f"{v}={ackermann_code(x)}" for v, x in items)


def _sorted_formulas(formulas: Iterable[Formula]) -> list[Formula]:
    return sorted(formulas, key=lambda f: (f.depth, f.size, render(f)))


# ---------------------------------------------------------------------------
# The two class kinds


@dataclass(frozen=True)
class SatClass:
    """A family of formula shapes plus the satisfied (formula, assignment)
    pairs, over a named structure.  Plain data: no axiom is enforced here."""

    family: frozenset[Formula]
    entries: frozenset[Entry]
    structure: str = ""

    kind = "sat"

    @staticmethod
    def build(
        family: Iterable[Formula],
        entries: Iterable[tuple[Formula, Assignment | FrozenAssignment]],
        structure: str = "",
    ) -> "SatClass":
        frozen = set()
        for phi, alpha in entries:
            if not isinstance(alpha, tuple):
                alpha = freeze_assignment(alpha)
            frozen.add((phi, alpha))
        return SatClass(frozenset(family), frozenset(frozen), structure)

    def holds(self, phi: Formula, alpha: Assignment | FrozenAssignment) -> bool:
        if not isinstance(alpha, tuple):
            alpha = freeze_assignment(alpha)
        return (phi, alpha) in self.entries

    def sorted_family(self) -> list[Formula]:
        return _sorted_formulas(self.family)

    def sorted_entries(self) -> list[Entry]:
        return sorted(
            self.entries,
            key=lambda e: (
                e[0].depth,
                e[0].size,
                render(e[0]),
                tuple((v, _value_key(x)) for v, x in e[1]),
            ),
        )

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class TruthClass:
    """A family of formula shapes plus the closed instances held true, over a
    named structure.  Plain data: no axiom is enforced here."""

    family: frozenset[Formula]
    sentences: frozenset[Formula]
    structure: str = ""

    kind = "truth"

    @staticmethod
    def build(
        family: Iterable[Formula],
        sentences: Iterable[Formula],
        structure: str = "",
    ) -> "TruthClass":
        return TruthClass(frozenset(family), frozenset(sentences), structure)

    def holds(self, sigma: Formula) -> bool:
        return sigma in self.sentences

    def sorted_family(self) -> list[Formula]:
        return _sorted_formulas(self.family)

    def sorted_sentences(self) -> list[Formula]:
        return _sorted_formulas(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)


AnyClass = Union[SatClass, TruthClass]


# ---------------------------------------------------------------------------
# Shape matching: σ = ψ*α for a constant substitution α


def match_instance(
    sigma: Formula,
    shape: Formula,
    free_allowed: frozenset[str] = frozenset(),
) -> dict[str, HFSet] | None:
    """If sigma is shape with each free variable replaced by a constant
    (variables in free_allowed may also stay in place), return the
    substitution; otherwise None.  Bound variables must match by name."""
    out: dict[str, object] = {}
    _STAYS = object()

    def match_term(t: Term, s: Term, bound: frozenset[str]) -> bool:
        if isinstance(s, Var):
            if s.name in bound:
                return isinstance(t, Var) and t.name == s.name
            if isinstance(t, Var):
                if t.name != s.name or s.name not in free_allowed:
                    return False
                prev = out.setdefault(s.name, _STAYS)
                return prev is _STAYS
            if isinstance(t, Const):
                prev = out.setdefault(s.name, t.value)
                return prev is not _STAYS and prev == t.value
            return False
        if isinstance(s, Const):
            return isinstance(t, Const) and t.value == s.value
        return False

    def walk(f: Formula, s: Formula, bound: frozenset[str]) -> bool:
        if type(f) is not type(s):
            return False
        if isinstance(s, (Mem, Eq)):
            return (
                match_term(f.t1, s.t1, bound)
                and match_term(f.t2, s.t2, bound)
            )
        if isinstance(s, Pred):
            return (
                f.name == s.name
                and len(f.args) == len(s.args)
                and all(
                    match_term(a, b, bound)
                    for a, b in zip(f.args, s.args)
                )
            )
        if isinstance(s, Not):
            return walk(f.body, s.body, bound)
        if isinstance(s, Or):
            return walk(f.left, s.left, bound) and walk(
                f.right, s.right, bound
            )
        if isinstance(s, Exists):
            return f.var == s.var and walk(
                f.body, s.body, bound | {s.var}
            )
        return False

    if not walk(sigma, shape, frozenset()):
        return None
    return {k: v for k, v in out.items() if v is not _STAYS}


def is_shaped(sigma: Formula, family: Iterable[Formula]) -> bool:
    """Whether sigma is a closed instance of some family shape."""
    return any(
        match_instance(sigma, psi) is not None for psi in family
    )


def family_closure(formulas: Iterable[Formula]) -> frozenset[Formula]:
    """The downward closure of the given formulas under immediate
    subformulae — the smallest admissible family containing them."""
    out: set[Formula] = set()
    stack = list(formulas)
    while stack:
        phi = stack.pop()
        if phi in out:
            continue
        out.add(phi)
        stack.extend(immediate_subformulae(phi))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class Violation:
    clause: int
    kind: str
    witness: str

    def line(self) -> str:
        return f"clause ({self.clause}) {self.kind}: {self.witness}"


@dataclass(frozen=True)
class Report:
    subject: str
    checked: int
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def clauses_violated(self) -> tuple[int, ...]:
        return tuple(sorted({v.clause for v in self.violations}))

    def summary_lines(self, limit: int = 20) -> list[str]:
        head = (
            f"{self.subject}: "
            f"{'OK' if self.ok else 'VIOLATIONS'} "
            f"({self.checked} checks, {len(self.violations)} violations)"
        )
        lines = [head]
        for v in self.violations[:limit]:
            lines.append("  " + v.line())
        if len(self.violations) > limit:
            lines.append(f"  ... and {len(self.violations) - limit} more")
        return lines


def _finish_report(subject: str, checked: int, raw: list[Violation]) -> Report:
    ordered = tuple(
        sorted(set(raw), key=lambda v: (v.clause, v.kind, v.witness))
    )
    return Report(subject, checked, ordered)


# ---------------------------------------------------------------------------
# Assignment sweeps


def _assignments(
    names: Iterable[str], m: FinStructure
) -> Iterator[dict[str, HFSet]]:
    ordered = sorted(names, key=var_key)
    for combo in itertools.product(m.elements, repeat=len(ordered)):
        yield dict(zip(ordered, combo))


def _family_constants_ok(phi: Formula, m: FinStructure) -> bool:
    stack: list[Formula] = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, (Mem, Eq)):
            terms = (f.t1, f.t2)
        elif isinstance(f, Pred):
            terms = tuple(f.args)
        elif isinstance(f, Not):
            stack.append(f.body)
            continue
        elif isinstance(f, Or):
            stack.extend((f.left, f.right))
            continue
        else:
            stack.append(f.body)
            continue
        for t in terms:
            if isinstance(t, Const) and t.value not in m.universe:
                return False
    return True


# ---------------------------------------------------------------------------
# Validation: satisfaction classes


def _validate_sat(m: FinStructure, c: SatClass) -> Report:
    raw: list[Violation] = []
    checked = 0
    family = c.family
    fam_sorted = c.sorted_family()

    # clause (1): family closed under immediate subformulae; constants denote
    for phi in fam_sorted:
        checked += 1
        if not _family_constants_ok(phi, m):
            raw.append(Violation(
                1, "family-constant-outside-structure", render(phi)
            ))
        for sub in immediate_subformulae(phi):
            checked += 1
            if sub not in family:
                raw.append(Violation(
                    1, "family-not-closed",
                    f"{render(phi)} misses {render(sub)}",
                ))

    # clause (1): entries are (family formula, exact-domain assignment
    # into the structure)
    for phi, items in c.sorted_entries():
        checked += 1
        text = f"{render(phi)} | {_assignment_text(items)}"
        if phi not in family:
            raw.append(Violation(1, "entry-formula-outside-family", text))
        if {v for v, _ in items} != set(phi.free_vars):
            raw.append(Violation(1, "entry-assignment-domain", text))
        if any(x not in m.universe for _, x in items):
            raw.append(Violation(1, "entry-value-outside-structure", text))

    def bit(phi: Formula, alpha: dict[str, HFSet]) -> bool:
        return c.holds(phi, alpha)

    def term_value(t: Term, alpha: dict[str, HFSet]) -> HFSet | None:
        if isinstance(t, Var):
            return alpha.get(t.name)
        value = t.value
        return value if value in m.universe else None

    # clauses (2)-(5): the compositional biconditionals, swept over every
    # family formula and every total assignment into the structure
    for phi in fam_sorted:
        for alpha in _assignments(phi.free_vars, m):
            text = (
                f"{render(phi)} | "
                f"{_assignment_text(freeze_assignment(alpha))}"
            )
            if isinstance(phi, (Mem, Eq)):
                checked += 1
                a = term_value(phi.t1, alpha)
                b = term_value(phi.t2, alpha)
                if a is None or b is None:
                    continue  # already reported under clause (1)
                if isinstance(phi, Eq):
                    expected = a == b
                else:
                    expected = a in b.members
                if bit(phi, alpha) != expected:
                    raw.append(Violation(2, "atomic-mismatch", text))
            elif isinstance(phi, Not):
                checked += 1
                if bit(phi, alpha) != (not bit(phi.body, alpha)):
                    raw.append(Violation(3, "negation-mismatch", text))
            elif isinstance(phi, Or):
                checked += 1
                left = {
                    v: alpha[v] for v in phi.left.free_vars
                }
                right = {
                    v: alpha[v] for v in phi.right.free_vars
                }
                expected = bit(phi.left, left) or bit(phi.right, right)
                if bit(phi, alpha) != expected:
                    raw.append(Violation(4, "disjunction-mismatch", text))
            elif isinstance(phi, Exists):
                checked += 1
                body = phi.body
                if phi.var in body.free_vars:
                    witnessed = any(
                        bit(body, {**alpha, phi.var: a})
                        for a in m.elements
                    )
                else:
                    witnessed = bit(body, alpha)
                if bit(phi, alpha) != witnessed:
                    raw.append(Violation(5, "witness-mismatch", text))
            # Pred atoms carry no compositional axiom: their bits are free
            # data for the class (the core language is membership/equality).

    subject = f"sat class over {c.structure or structure_ref(m)}"
    return _finish_report(subject, checked, raw)


# ---------------------------------------------------------------------------
# Validation: truth classes


def _shaped_instances(
    family_sorted: list[Formula], m: FinStructure
) -> list[Formula]:
    """Every closed instance of a family shape with constants drawn from the
    structure, deduplicated, in deterministic order."""
    seen: dict[Formula, None] = {}
    for psi in family_sorted:
        for alpha in _assignments(psi.free_vars, m):
            sigma = close(psi, alpha)
            if sigma.is_sentence:
                seen.setdefault(sigma, None)
    return list(seen)


def _validate_truth(m: FinStructure, c: TruthClass) -> Report:
    raw: list[Violation] = []
    checked = 0
    family = c.family
    fam_sorted = c.sorted_family()

    # clause (1): family closed under immediate subformulae; constants denote
    for phi in fam_sorted:
        checked += 1
        if not _family_constants_ok(phi, m):
            raw.append(Violation(
                1, "family-constant-outside-structure", render(phi)
            ))
        for sub in immediate_subformulae(phi):
            checked += 1
            if sub not in family:
                raw.append(Violation(
                    1, "family-not-closed",
                    f"{render(phi)} misses {render(sub)}",
                ))

    space = _shaped_instances(fam_sorted, m)
    in_space = set(space)

    # clause (1): members are sentences shaped by the family, with
    # constants denoting in the structure — exactly the instance space
    for sigma in c.sorted_sentences():
        checked += 1
        if not sigma.is_sentence:
            raw.append(Violation(1, "member-not-a-sentence", render(sigma)))
        elif sigma not in in_space:
            raw.append(Violation(
                1, "member-not-family-shaped", render(sigma)
            ))

    def bit(sigma: Formula) -> bool:
        return sigma in c.sentences

    for sigma in space:
        text = render(sigma)
        if isinstance(sigma, (Mem, Eq)):
            # clause (2): atomic truth anchored to the structure
            checked += 1
            a, b = sigma.t1, sigma.t2
            if not (isinstance(a, Const) and isinstance(b, Const)):
                continue
            if a.value not in m.universe or b.value not in m.universe:
                continue  # already reported under clause (1)
            if isinstance(sigma, Eq):
                expected = a.value == b.value
            else:
                expected = a.value in b.value.members
            if bit(sigma) != expected:
                raw.append(Violation(2, "atomic-mismatch", text))
        elif isinstance(sigma, Not):
            if sigma.body in in_space:
                checked += 1
                if bit(sigma) != (not bit(sigma.body)):
                    raw.append(Violation(3, "negation-mismatch", text))
        elif isinstance(sigma, Or):
            if sigma.left in in_space and sigma.right in in_space:
                checked += 1
                if bit(sigma) != (bit(sigma.left) or bit(sigma.right)):
                    raw.append(Violation(4, "disjunction-mismatch", text))
        elif isinstance(sigma, Exists):
            body = sigma.body
            if sigma.var in body.free_vars:
                instances = [
                    close(body, {sigma.var: a}) for a in m.elements
                ]
            else:
                instances = [body]
            if all(inst in in_space for inst in instances):
                checked += 1
                if bit(sigma) != any(bit(inst) for inst in instances):
                    raw.append(Violation(5, "witness-mismatch", text))

    subject = f"truth class over {c.structure or structure_ref(m)}"
    return _finish_report(subject, checked, raw)


def validate_class(m: FinStructure, c: AnyClass) -> Report:
    """Check the compositional axioms of the class against the structure;
    every violated clause is reported with a concrete witness.  A family
    that is not closed under immediate subformulae is itself a clause-(1)
    violation, not an exception."""
    if isinstance(c, SatClass):
        return _validate_sat(m, c)
    if isinstance(c, TruthClass):
        return _validate_truth(m, c)
    raise ArityError(f"not a class: {c!r}")


# ---------------------------------------------------------------------------
# Extensionality


def is_extensional(
    m: FinStructure, s: SatClass
) -> list[tuple[Entry, Entry]]:
    """Violating pairs of entries whose closures are literally the same
    sentence but whose membership bits differ; empty iff extensional."""
    if not isinstance(s, SatClass):
        raise ArityError("extensionality applies to satisfaction classes")
    groups: dict[Formula, list[tuple[Entry, bool]]] = {}
    for phi in s.sorted_family():
        for alpha in _assignments(phi.free_vars, m):
            frozen = freeze_assignment(alpha)
            key = close(phi, alpha)
            groups.setdefault(key, []).append(
                ((phi, frozen), s.holds(phi, frozen))
            )
    out: list[tuple[Entry, Entry]] = []
    for key in sorted(groups, key=render):
        bucket = groups[key]
        trues = [e for e, b in bucket if b]
        falses = [e for e, b in bucket if not b]
        if trues and falses:
            out.append((trues[0], falses[0]))
    return out


def _data_value_pool(s: SatClass) -> list[HFSet]:
    """Every set the class's own data can mention: entry values plus
    constants in family formulas, in canonical order."""
    values: set[HFSet] = set()
    for phi, items in s.entries:
        values.update(v for _, v in items)
    for phi in s.family:
        values.update(constants_of(phi))
    return sorted(values, key=_SET_KEY)


def _unsaturated_witness(s: SatClass) -> tuple[Entry, Entry] | None:
    """A stored entry together with a missing same-closure mate, if any.

    Saturation under the same-closure relation is exactly the fragment of
    extensionality that the stored bits can witness without a structure:
    every mate's values are transported from a stored entry's values, so
    sweeping family shapes over the data's own value pool covers every
    possible mate."""
    pool = _data_value_pool(s)
    groups: dict[Formula, list[tuple[Entry, bool]]] = {}
    for phi in s.sorted_family():
        names = sorted(phi.free_vars, key=var_key)
        for combo in itertools.product(pool, repeat=len(names)):
            alpha = dict(zip(names, combo))
            frozen = freeze_assignment(alpha)
            key = close(phi, alpha)
            groups.setdefault(key, []).append(
                ((phi, frozen), s.holds(phi, frozen))
            )
    for key in sorted(groups, key=render):
        bucket = groups[key]
        trues = [e for e, b in bucket if b]
        falses = [e for e, b in bucket if not b]
        if trues and falses:
            return (trues[0], falses[0])
    return None


# ---------------------------------------------------------------------------
# Interconversion


def convert(c: AnyClass) -> AnyClass:
    """Truth class -> satisfaction class (pairs whose closed instance is
    held true) and back (closed instances of held pairs).  Round trips are
    exact; a non-extensional satisfaction class is rejected."""
    if isinstance(c, TruthClass):
        # every (shape, assignment) whose closed instance is held true;
        # assignment values can only be constants the data mentions
        values: set[HFSet] = set()
        for sigma in c.sentences:
            values.update(constants_of(sigma))
        for phi in c.family:
            values.update(constants_of(phi))
        pool = sorted(values, key=_SET_KEY)
        entries: list[tuple[Formula, dict[str, HFSet]]] = []
        for psi in c.sorted_family():
            names = sorted(psi.free_vars, key=var_key)
            for combo in itertools.product(pool, repeat=len(names)):
                alpha = dict(zip(names, combo))
                if close(psi, alpha) in c.sentences:
                    entries.append((psi, alpha))
        return SatClass.build(c.family, entries, c.structure)
    if isinstance(c, SatClass):
        bad = _unsaturated_witness(c)
        if bad is not None:
            (phi, items), (psi, mates) = bad
            raise ExtensionalityError(
                "satisfaction class is not extensional: holds "
                f"{render(phi)} | {_assignment_text(items)} but not "
                f"{render(psi)} | {_assignment_text(mates)}"
            )
        sentences = {
            close(phi, dict(items)) for phi, items in c.entries
        }
        return TruthClass.build(c.family, sentences, c.structure)
    raise ArityError(f"not a class: {c!r}")


# ---------------------------------------------------------------------------
# Evaluation-induced classes


FamilyLike = Union[DepthFamily, Iterable[Formula]]

_CANONICAL_VARS = ("x", "y")


def _materialize_family(family: FamilyLike) -> list[Formula]:
    if isinstance(family, DepthFamily):
        # the canonical pool wraps fresh binders without emitting their open
        # bodies, so close the family downward to keep it admissible
        shapes = family_closure(family.formulas(_CANONICAL_VARS))
    else:
        shapes = family
    return list(dict.fromkeys(shapes))


def induced_sat(m: FinStructure, family: FamilyLike) -> SatClass:
    """The satisfaction class the evaluator induces: every (shape, total
    assignment) pair that actually holds.  A depth family is materialized
    over the canonical two-variable pool."""
    shapes = _materialize_family(family)
    entries = []
    for phi in shapes:
        for alpha in _assignments(phi.free_vars, m):
            if sat(m, phi, alpha):
                entries.append((phi, alpha))
    return SatClass.build(shapes, entries, structure_ref(m))


def induced_truth(m: FinStructure, family: FamilyLike) -> TruthClass:
    """The truth class the evaluator induces: every closed instance of a
    family shape (constants from the structure) that actually holds."""
    shapes = _materialize_family(family)
    sentences = set()
    for phi in shapes:
        for alpha in _assignments(phi.free_vars, m):
            if sat(m, phi, alpha):
                sentences.add(close(phi, alpha))
    return TruthClass.build(shapes, sentences, structure_ref(m))


# ---------------------------------------------------------------------------
# The balanced-disjunction probe


def pathology_D(k: int, phi: Formula) -> Formula:
    """The balanced 2^k-fold disjunction of phi (depth grows by k).

    Shared structure keeps it desk-sized for k up to twenty and beyond;
    under actual evaluation it always agrees with phi — only classes that
    are data rather than evaluation can break that agreement."""
    if k < 1:
        raise ArityError("the disjunction tower starts at index 1")
    d = Or(phi, phi)
    for _ in range(k - 1):
        d = Or(d, d)
    return d


# ---------------------------------------------------------------------------
# The diagonal refuter


@dataclass(frozen=True)
class DiagonalWitness:
    """The failed biconditional instance produced by diagonalization."""

    candidate: Formula  # the binary formula claimed to define satisfaction
    refuter: Formula  # R(x) = the negated diagonal of the candidate
    variable: str  # the refuter's free variable
    code: HFSet  # the element coding the refuter
    candidate_bit: bool  # candidate at (code, code)
    refuter_bit: bool  # refuter at code — always the opposite

    def line(self) -> str:
        return (
            f"S(r,r)={'T' if self.candidate_bit else 'F'} but "
            f"R(r)={'T' if self.refuter_bit else 'F'} for "
            f"R = {render(self.refuter)}, r = code {ackermann_code(self.code)}"
        )


def default_coding(m: FinStructure) -> Callable[[Formula], HFSet]:
    """Coding a formula as a structure element: the residue of the
    Ackermann integer of its set code picks the element.  Injective only on
    pools smaller than the structure at best — which is all the refuter
    needs per call."""

    def code(phi: Formula) -> HFSet:
        idx = ackermann_code_mod(formula_code(phi), len(m))
        return m.elements[idx]

    return code


def diagonal_refute(
    m: FinStructure,
    candidate: Formula,
    coding: Callable[[Formula], HFSet] | None = None,
) -> DiagonalWitness:
    """Refute the claim that the binary formula defines satisfaction for
    coded unary formulas: form R(x) = not candidate(x, x), code it as r,
    and exhibit candidate(r, r) <-> R(r) failing.  The construction makes
    the failure unconditional; it is asserted before returning."""
    fv = sorted(candidate.free_vars, key=var_key)
    if len(fv) != 2:
        raise ArityError(
            f"the candidate must have exactly two free variables, got "
            f"{len(fv)}"
        )
    x, y = fv
    refuter = Not(subst(candidate, y, Var(x)))
    if coding is None:
        coding = default_coding(m)
    r = coding(refuter)
    if not isinstance(r, HFSet) or r not in m.universe:
        raise ConstantDenotationError(
            "the coding must land inside the structure"
        )
    candidate_bit = sat(m, candidate, {x: r, y: r})
    refuter_bit = sat(m, refuter, {x: r})
    if refuter_bit != (not candidate_bit):
        raise ArityError(
            "internal check failed: the refuter must negate the diagonal"
        )
    return DiagonalWitness(
        candidate=candidate,
        refuter=refuter,
        variable=x,
        code=r,
        candidate_bit=candidate_bit,
        refuter_bit=refuter_bit,
    )


# ---------------------------------------------------------------------------
# Class files


def _take_sexpr(text: str, lineno: int) -> tuple[str, str]:
    """Split ``text`` into its leading balanced s-expression and the rest."""
    if not text.startswith("("):
        raise InputFormatError(
            f"line {lineno}: expected an s-expression, got {text!r}"
        )
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return text[: i + 1], text[i + 1 :].strip()
    raise InputFormatError(f"line {lineno}: unbalanced parentheses")


def _parse_bindings(rest: str, lineno: int) -> FrozenAssignment:
    alpha: dict[str, HFSet] = {}
    for token in rest.split():
        name, sep, code_text = token.partition("=")
        if not sep:
            raise InputFormatError(
                f"line {lineno}: expected '<var>=<code>', got {token!r}"
            )
        try:
            Var(name)
        except SyntaxToolError:
            raise InputFormatError(
                f"line {lineno}: bad variable name {name!r}"
            ) from None
        if name in alpha:
            raise InputFormatError(
                f"line {lineno}: variable {name!r} bound twice"
            )
        try:
            code = int(code_text)
        except ValueError:
            raise InputFormatError(
                f"line {lineno}: code {code_text!r} is not an integer"
            ) from None
        if code < 0:
            raise InputFormatError(f"line {lineno}: negative code {code}")
        alpha[name] = decode(code)
    return freeze_assignment(alpha)


def parse_class(text: str) -> Union[SatClass, TruthClass]:
    """Parse the class file format.

    Header ``class sat|truth over <structure-ref>``, then ``family
    <s-expr>`` lines, then ``entry <s-expr> [<var>=<ack-code> ...]`` lines.
    Truth-class entries are sentences and take no bindings.  Blank lines and
    full-line ``#`` comments are skipped.  The content is loaded as data;
    use :func:`validate_class` to audit it.
    """
    kind: str | None = None
    structure = ""
    family: list[Formula] = []
    sat_entries: list[tuple[Formula, FrozenAssignment]] = []
    sentences: list[Formula] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if kind is None:
            parts = line.split(None, 3)
            if (
                len(parts) < 3
                or parts[0] != "class"
                or parts[1] not in ("sat", "truth")
                or parts[2] != "over"
            ):
                raise InputFormatError(
                    f"line {lineno}: expected 'class sat|truth over "
                    f"<structure-ref>' header; got {line!r}"
                )
            kind = parts[1]
            structure = parts[3] if len(parts) == 4 else ""
            continue
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        if word == "family":
            if sat_entries or sentences:
                raise InputFormatError(
                    f"line {lineno}: family lines must precede entry lines"
                )
            body, extra = _take_sexpr(rest, lineno)
            if extra:
                raise InputFormatError(
                    f"line {lineno}: unexpected trailing text {extra!r}"
                )
            try:
                family.append(parse(body))
            except SyntaxToolError as exc:
                raise InputFormatError(f"line {lineno}: {exc}") from exc
        elif word == "entry":
            body, extra = _take_sexpr(rest, lineno)
            try:
                phi = parse(body)
            except SyntaxToolError as exc:
                raise InputFormatError(f"line {lineno}: {exc}") from exc
            if kind == "truth":
                if extra:
                    raise InputFormatError(
                        f"line {lineno}: truth-class entries take no "
                        f"bindings"
                    )
                if not phi.is_sentence:
                    raise InputFormatError(
                        f"line {lineno}: truth-class entries must be "
                        f"sentences; {render(phi)} has free variables"
                    )
                sentences.append(phi)
            else:
                sat_entries.append((phi, _parse_bindings(extra, lineno)))
        else:
            raise InputFormatError(
                f"line {lineno}: unknown directive {word!r}"
            )
    if kind is None:
        raise InputFormatError("missing 'class' header")
    if kind == "sat":
        return SatClass.build(family, sat_entries, structure)
    return TruthClass.build(family, sentences, structure)


def render_class(c: Union[SatClass, TruthClass]) -> str:
    """The text form of a class, parseable by :func:`parse_class`.

    Deterministic: the family and the entries are written in canonical
    (depth, size, render) order, assignments in variable order with
    Ackermann codes as values.
    """
    out = [f"class {c.kind} over {c.structure}".rstrip()]
    for phi in c.sorted_family():
        out.append(f"family {render(phi)}")
    if isinstance(c, SatClass):
        for phi, alpha in c.sorted_entries():
            if alpha:
                out.append(f"entry {render(phi)} {_assignment_text(alpha)}")
            else:
                out.append(f"entry {render(phi)}")
    else:
        for sigma in c.sorted_sentences():
            out.append(f"entry {render(sigma)}")
    return "\n".join(out) + "\n"
