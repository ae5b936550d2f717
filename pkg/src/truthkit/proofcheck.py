"""Bounded Hilbert-style proofs over the set language.

Three layers live here:

* a small trusted **checker** (:func:`check_proof`) for line-numbered proofs,
* a heuristic, budgeted **prover** (:func:`prove`) whose every returned proof
  is re-verified by the checker before it is handed back, and
* a **derivability audit** (:func:`check_gref`) that forward-saturates a
  truth class's sentence pool under the calculus and reports derivable
  in-scope sentences the class fails to contain.

The calculus
============

A proof is a sequence of lines, each a formula with one justification:

* ``Premise`` -- the formula is one of the ambient premises.
* ``PropAxiom(schema)`` -- an instance of one of three propositional
  schemas, written with the implication sugar ``a -> b := (or (not a) b)``:

  1. ``A -> (B -> A)``
  2. ``(A -> (B -> C)) -> ((A -> B) -> (A -> C))``
  3. ``(~B -> ~A) -> ((~B -> A) -> B)``

* ``EqAxiom`` -- reflexivity ``t = t``, or an atomic substitution step
  ``a = b -> (alpha -> alpha')`` where ``alpha`` is a membership or equality
  atom and ``alpha'`` replaces some occurrences of ``a`` by ``b``.
* ``QuantAxiom`` -- existential introduction ``phi[t/x] -> (ex x phi)``.
* ``MP(i, j)`` -- modus ponens: line ``j`` must be ``line(i) -> goal``.
* ``Gen(i, var)`` -- generalization: the goal is ``(all var line(i))``,
  legal only when ``var`` is not free in any premise line ``i`` depends on.

Because disjunction is primitive, the three propositional schemas axiomatize
exactly the fragment in which every disjunction has a negated left child
(the implication shape); a disjunction such as ``(or p (not p))`` whose left
child is not negated is treated as an opaque atom throughout.  Writing
excluded middle through the classical sugar ``a | b := ~a -> b`` keeps it
inside the fragment.

Failures found by :func:`check_proof` are **return values** carrying the
offending line number, never exceptions; only malformed proof *files* raise
(:class:`~truthkit.errors.ProofFormatError`).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping, Union

from .classes import (
    Report,
    TruthClass,
    Violation,
    _finish_report,
    is_shaped,
    structure_ref,
)
from .errors import ArityError, ProofFormatError, SyntaxToolError
from .evaluator import constants_of
from .hfset import FinStructure
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
    all_,
    imp,
    parse,
    render,
    render_term,
    subst,
)

__all__ = [
    "CheckResult",
    "EqAxiom",
    "Gen",
    "Justification",
    "MP",
    "Premise",
    "Proof",
    "PropAxiom",
    "QuantAxiom",
    "check_gref",
    "check_proof",
    "parse_proof",
    "prop_axiom",
    "prove",
    "render_proof",
]


# ---------------------------------------------------------------------------
# Proof objects


@dataclass(frozen=True)
class Premise:
    """The line restates one of the ambient premises."""


@dataclass(frozen=True)
class PropAxiom:
    """An instance of propositional schema 1, 2 or 3.  The instantiation
    may be stated explicitly in ``parts``; left as None, the checker
    recovers it by structural matching (the schemas are position-unique)."""

    schema: int
    parts: tuple[Formula, ...] | None = None


@dataclass(frozen=True)
class EqAxiom:
    """Reflexivity or atomic substitution for the equality relation."""


@dataclass(frozen=True)
class QuantAxiom:
    """Existential introduction ``phi[t/x] -> (ex x phi)``."""

    schema: int = 1


@dataclass(frozen=True)
class MP:
    """Modus ponens from line ``i`` and the implication at line ``j``."""

    i: int
    j: int


@dataclass(frozen=True)
class Gen:
    """Generalization of line ``i`` over ``var`` (eigenvariable condition)."""

    i: int
    var: str


Justification = Union[Premise, PropAxiom, EqAxiom, QuantAxiom, MP, Gen]

_PREM = Premise()


@dataclass(frozen=True)
class Proof:
    """An immutable sequence of (formula, justification) lines, 1-indexed."""

    lines: tuple[tuple[Formula, Justification], ...]

    @property
    def conclusion(self) -> Formula:
        return self.lines[-1][0]

    def step(self, n: int) -> tuple[Formula, Justification]:
        """The 1-indexed line ``n``."""
        return self.lines[n - 1]

    def __len__(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of :func:`check_proof`; falsy when the proof is rejected."""

    ok: bool
    line: int | None = None
    message: str | None = None

    def __bool__(self) -> bool:
        return self.ok

    def text(self) -> str:
        if self.ok:
            return "ok"
        where = f"line {self.line}: " if self.line is not None else ""
        return where + (self.message or "rejected")


# ---------------------------------------------------------------------------
# Schema recognizers


def _imp_parts(phi: Formula) -> tuple[Formula, Formula] | None:
    """``(a, b)`` when phi is the implication shape ``(or (not a) b)``."""
    if isinstance(phi, Or) and isinstance(phi.left, Not):
        return phi.left.body, phi.right
    return None


def _forall_parts(phi: Formula) -> tuple[str, Formula] | None:
    """``(v, body)`` when phi is the universal sugar ``(not (ex v (not body)))``."""
    if (
        isinstance(phi, Not)
        and isinstance(phi.body, Exists)
        and isinstance(phi.body.body, Not)
    ):
        return phi.body.var, phi.body.body.body
    return None


_PROP_ARITY = {1: 2, 2: 3, 3: 2}


def prop_axiom(schema: int, *parts: Formula) -> Formula:
    """Build the stated instance of propositional schema 1, 2 or 3."""
    if schema not in _PROP_ARITY:
        raise ProofFormatError(f"unknown propositional schema {schema!r}")
    if len(parts) != _PROP_ARITY[schema]:
        raise ProofFormatError(
            f"propositional schema {schema} takes {_PROP_ARITY[schema]} "
            f"formulas, got {len(parts)}"
        )
    if schema == 1:
        a, b = parts
        return imp(a, imp(b, a))
    if schema == 2:
        a, b, c = parts
        return imp(imp(a, imp(b, c)), imp(imp(a, b), imp(a, c)))
    a, b = parts
    return imp(imp(Not(b), Not(a)), imp(imp(Not(b), a), b))


def _match_prop(schema: int, phi: Formula) -> tuple[Formula, ...] | None:
    """Recover the unique instantiation making phi an instance of the
    schema, or None.  Verified by rebuilding."""
    top = _imp_parts(phi)
    if top is None:
        return None
    if schema == 1:
        a, rest = top
        inner = _imp_parts(rest)
        if inner is None:
            return None
        parts: tuple[Formula, ...] = (a, inner[0])
    elif schema == 2:
        ant = _imp_parts(top[0])
        if ant is None:
            return None
        a, rest = ant
        inner = _imp_parts(rest)
        if inner is None:
            return None
        parts = (a, inner[0], inner[1])
    elif schema == 3:
        ant = _imp_parts(top[0])
        if ant is None:
            return None
        nb, na = ant
        if not isinstance(nb, Not) or not isinstance(na, Not):
            return None
        parts = (na.body, nb.body)
    else:
        return None
    return parts if prop_axiom(schema, *parts) == phi else None


def _eq_axiom_ok(phi: Formula) -> bool:
    """Reflexivity ``t = t`` or ``a = b -> (alpha -> alpha')`` with alpha a
    membership/equality atom and alpha' replacing occurrences of a by b."""
    if isinstance(phi, Eq) and phi.t1 == phi.t2:
        return True
    top = _imp_parts(phi)
    if top is None:
        return False
    head, rest = top
    if not isinstance(head, Eq):
        return False
    a, b = head.t1, head.t2
    inner = _imp_parts(rest)
    if inner is None:
        return False
    alpha, beta = inner
    if type(alpha) is not type(beta) or not isinstance(alpha, (Mem, Eq)):
        return False
    pairs = ((alpha.t1, beta.t1), (alpha.t2, beta.t2))
    return all(x == y or (x == a and y == b) for x, y in pairs)


def _terms_of(phi: Formula) -> list[Term]:
    """Every term occurring in an atom of phi, first-occurrence order."""
    out: list[Term] = []
    seen: set[Term] = set()

    def note(t: Term) -> None:
        if t not in seen:
            seen.add(t)
            out.append(t)

    def walk(f: Formula) -> None:
        if isinstance(f, (Mem, Eq)):
            note(f.t1)
            note(f.t2)
        elif isinstance(f, Pred):
            for t in f.args:
                note(t)
        elif isinstance(f, Not):
            walk(f.body)
        elif isinstance(f, Or):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, Exists):
            walk(f.body)

    walk(phi)
    return out


def _quant_axiom_parts(
    phi: Formula,
) -> tuple[Term, str, Formula] | None:
    """``(t, x, body)`` when phi is ``body[t/x] -> (ex x body)``."""
    top = _imp_parts(phi)
    if top is None:
        return None
    lhs, rhs = top
    if not isinstance(rhs, Exists):
        return None
    x, body = rhs.var, rhs.body
    candidates = _terms_of(lhs)
    witness = Var(x)
    if witness not in candidates:
        candidates.append(witness)
    for t in candidates:
        if subst(body, x, t) == lhs:
            return t, x, body
    return None


# ---------------------------------------------------------------------------
# The checker


def _bad_citation(n: int, k: object) -> str | None:
    if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k < n:
        return f"cites line {k!r}, which is not an earlier line"
    return None


def check_proof(
    proof: Proof, premises: Iterable[Formula] = ()
) -> CheckResult:
    """Verify every line of the proof against the premises.

    The first defect is reported as a :class:`CheckResult` carrying its
    1-indexed line number and a message; nothing here raises on a bad proof.
    """
    prem = frozenset(premises)
    lines = proof.lines
    if not lines:
        return CheckResult(False, None, "a proof needs at least one line")
    uses: list[frozenset[Formula]] = []
    for n, (phi, just) in enumerate(lines, start=1):
        if not isinstance(phi, Formula):
            return CheckResult(False, n, "not a formula")
        used: frozenset[Formula] = frozenset()
        if isinstance(just, Premise):
            if phi not in prem:
                return CheckResult(
                    False, n, "formula is not among the premises"
                )
            used = frozenset((phi,))
        elif isinstance(just, PropAxiom):
            if just.schema not in _PROP_ARITY:
                return CheckResult(
                    False, n, f"unknown propositional schema {just.schema!r}"
                )
            if just.parts is not None:
                if (
                    len(just.parts) != _PROP_ARITY[just.schema]
                    or prop_axiom(just.schema, *just.parts) != phi
                ):
                    return CheckResult(
                        False,
                        n,
                        "stated instantiation does not produce this formula",
                    )
            elif _match_prop(just.schema, phi) is None:
                return CheckResult(
                    False,
                    n,
                    f"not an instance of propositional schema {just.schema}",
                )
        elif isinstance(just, EqAxiom):
            if not _eq_axiom_ok(phi):
                return CheckResult(
                    False,
                    n,
                    "not a reflexivity or atomic-substitution equality axiom",
                )
        elif isinstance(just, QuantAxiom):
            if just.schema != 1:
                return CheckResult(
                    False, n, f"unknown quantifier schema {just.schema!r}"
                )
            if _quant_axiom_parts(phi) is None:
                return CheckResult(
                    False, n, "not an existential-introduction instance"
                )
        elif isinstance(just, MP):
            for k in (just.i, just.j):
                bad = _bad_citation(n, k)
                if bad:
                    return CheckResult(False, n, bad)
            if lines[just.j - 1][0] != imp(lines[just.i - 1][0], phi):
                return CheckResult(
                    False,
                    n,
                    f"line {just.j} is not (line {just.i} -> this line)",
                )
            used = uses[just.i - 1] | uses[just.j - 1]
        elif isinstance(just, Gen):
            bad = _bad_citation(n, just.i)
            if bad:
                return CheckResult(False, n, bad)
            try:
                closed = all_(just.var, lines[just.i - 1][0])
            except SyntaxToolError:
                return CheckResult(
                    False, n, f"invalid variable name {just.var!r}"
                )
            if phi != closed:
                return CheckResult(
                    False,
                    n,
                    f"formula is not the universal closure of line {just.i} "
                    f"in {just.var}",
                )
            if any(just.var in psi.free_vars for psi in uses[just.i - 1]):
                return CheckResult(
                    False,
                    n,
                    f"eigenvariable {just.var} is free in a premise used by "
                    f"line {just.i}",
                )
            used = uses[just.i - 1]
        else:
            return CheckResult(
                False, n, f"unknown justification {type(just).__name__}"
            )
        uses.append(used)
    return CheckResult(True)


# ---------------------------------------------------------------------------
# Proof files


def _render_just(just: Justification) -> str:
    if isinstance(just, Premise):
        return "premise"
    if isinstance(just, PropAxiom):
        return f"prop {just.schema}"
    if isinstance(just, EqAxiom):
        return "eq"
    if isinstance(just, QuantAxiom):
        return "quant"
    if isinstance(just, MP):
        return f"mp {just.i} {just.j}"
    if isinstance(just, Gen):
        return f"gen {just.i} {just.var}"
    raise ProofFormatError(
        f"unknown justification {type(just).__name__}"
    )


def render_proof(proof: Proof) -> str:
    """The line-based text form: a ``proof`` header, then numbered steps
    ``n: <formula> ; <justification>``."""
    out = ["proof"]
    for n, (phi, just) in enumerate(proof.lines, start=1):
        out.append(f"{n}: {render(phi)} ; {_render_just(just)}")
    return "\n".join(out) + "\n"


def _parse_just(text: str, lineno: int) -> Justification:
    tokens = text.split()
    try:
        if tokens == ["premise"]:
            return _PREM
        if len(tokens) == 2 and tokens[0] == "prop":
            return PropAxiom(int(tokens[1]))
        if tokens == ["eq"]:
            return EqAxiom()
        if tokens == ["quant"]:
            return QuantAxiom()
        if len(tokens) == 3 and tokens[0] == "mp":
            return MP(int(tokens[1]), int(tokens[2]))
        if len(tokens) == 3 and tokens[0] == "gen":
            Var(tokens[2])
            return Gen(int(tokens[1]), tokens[2])
    except (ValueError, SyntaxToolError):
        pass
    raise ProofFormatError(f"line {lineno}: unknown justification {text!r}")


def parse_proof(text: str) -> Proof:
    """Parse the line-based proof format produced by :func:`render_proof`.

    Blank lines and full-line ``#`` comments are skipped.  Steps must be
    numbered consecutively from 1.  Malformed input raises
    :class:`~truthkit.errors.ProofFormatError` with the file line number.
    """
    header_seen = False
    expected = 1
    steps: list[tuple[Formula, Justification]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not header_seen:
            if stripped != "proof":
                raise ProofFormatError(
                    f"line {lineno}: expected 'proof' header, got "
                    f"{stripped!r}"
                )
            header_seen = True
            continue
        head, sep, rest = stripped.partition(":")
        if not sep:
            raise ProofFormatError(
                f"line {lineno}: expected '<n>: <formula> ; <justification>'"
            )
        try:
            number = int(head.strip())
        except ValueError:
            raise ProofFormatError(
                f"line {lineno}: step number {head.strip()!r} is not an "
                f"integer"
            ) from None
        if number != expected:
            raise ProofFormatError(
                f"line {lineno}: expected step {expected}, got {number}"
            )
        body, sep2, just_text = rest.partition(" ; ")
        if not sep2:
            raise ProofFormatError(
                f"line {lineno}: missing ' ; <justification>' separator"
            )
        try:
            phi = parse(body.strip())
        except SyntaxToolError as exc:
            raise ProofFormatError(f"line {lineno}: {exc}") from None
        steps.append((phi, _parse_just(just_text.strip(), lineno)))
        expected += 1
    if not header_seen:
        raise ProofFormatError("missing 'proof' header")
    if not steps:
        raise ProofFormatError("a proof needs at least one step")
    return Proof(tuple(steps))


# ---------------------------------------------------------------------------
# Proof construction machinery (internal)


class _Out(Exception):
    """Internal: the construction budget ran out."""


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int | None):
        self.left = n

    def spend(self, n: int = 1) -> None:
        if self.left is None:
            return
        self.left -= n
        if self.left < 0:
            raise _Out


_Lines = list[tuple[Formula, Justification]]


class _Build:
    """A proof under construction; methods return 1-based line handles."""

    __slots__ = ("lines", "budget")

    def __init__(self, budget: _Budget):
        self.lines: _Lines = []
        self.budget = budget

    def add(self, phi: Formula, just: Justification) -> int:
        self.budget.spend()
        self.lines.append((phi, just))
        return len(self.lines)

    def premise(self, phi: Formula) -> int:
        return self.add(phi, _PREM)

    def prop(self, schema: int, *parts: Formula) -> int:
        return self.add(prop_axiom(schema, *parts), PropAxiom(schema))

    def mp(self, i: int, j: int) -> int:
        """Apply the implication at handle j to the formula at handle i."""
        parts = _imp_parts(self.lines[j - 1][0])
        return self.add(parts[1], MP(i, j))

    def include(self, lines: _Lines) -> int:
        """Splice another line list, shifting its internal citations."""
        off = len(self.lines)
        for phi, just in lines:
            if isinstance(just, MP):
                just = MP(just.i + off, just.j + off)
            elif isinstance(just, Gen):
                just = Gen(just.i + off, just.var)
            self.add(phi, just)
        return len(self.lines)

    def compose(self, i_xy: int, i_yz: int) -> int:
        """From handles for x -> y and y -> z, derive x -> z."""
        x, y = _imp_parts(self.lines[i_xy - 1][0])
        y2, z = _imp_parts(self.lines[i_yz - 1][0])
        l1 = self.prop(1, imp(y, z), x)
        l2 = self.mp(i_yz, l1)
        l3 = self.prop(2, x, y, z)
        l4 = self.mp(l2, l3)
        return self.mp(i_xy, l4)


def _deduce(lines: _Lines, hyp: Formula) -> _Lines:
    """Deduction transform: rewrite a proof that uses ``hyp`` as a premise
    into one of ``hyp -> (line)`` for every line, dropping the hypothesis.
    Generalization steps are not supported here (callers never produce
    them under a discharged hypothesis)."""
    out: _Lines = []
    new_index: dict[int, int] = {}

    def emit(phi: Formula, just: Justification) -> int:
        out.append((phi, just))
        return len(out)

    for k, (phi, just) in enumerate(lines, start=1):
        if isinstance(just, Gen):  # pragma: no cover - internal invariant
            raise SyntaxToolError(
                "internal: deduction over a generalization step"
            )
        if isinstance(just, Premise) and phi == hyp:
            hh = imp(hyp, hyp)
            l1 = emit(
                prop_axiom(2, hyp, hh, hyp), PropAxiom(2)
            )
            l2 = emit(prop_axiom(1, hyp, hh), PropAxiom(1))
            l3 = emit(imp(imp(hyp, hh), hh), MP(l2, l1))
            l4 = emit(prop_axiom(1, hyp, hyp), PropAxiom(1))
            new_index[k] = emit(hh, MP(l4, l3))
        elif isinstance(just, MP):
            chi = lines[just.i - 1][0]
            l1 = emit(prop_axiom(2, hyp, chi, phi), PropAxiom(2))
            l2 = emit(
                imp(imp(hyp, chi), imp(hyp, phi)), MP(new_index[just.j], l1)
            )
            new_index[k] = emit(imp(hyp, phi), MP(new_index[just.i], l2))
        else:
            l1 = emit(phi, just)
            l2 = emit(prop_axiom(1, phi, hyp), PropAxiom(1))
            new_index[k] = emit(imp(hyp, phi), MP(l1, l2))
    return out


def _pf_id(a: Formula) -> _Lines:
    """|- a -> a"""
    return _deduce([(a, _PREM)], a)


def _pf_efq(a: Formula, b: Formula) -> _Lines:
    """|- ~a -> (a -> b)"""
    na, nb = Not(a), Not(b)
    inner: _Lines = [
        (na, _PREM),
        (a, _PREM),
        (prop_axiom(1, a, nb), PropAxiom(1)),
        (imp(nb, a), MP(2, 3)),
        (prop_axiom(1, na, nb), PropAxiom(1)),
        (imp(nb, na), MP(1, 5)),
        (prop_axiom(3, a, b), PropAxiom(3)),
        (imp(imp(nb, a), b), MP(6, 7)),
        (b, MP(4, 8)),
    ]
    return _deduce(_deduce(inner, a), na)


def _pf_dne(b: Formula) -> _Lines:
    """|- ~~b -> b"""
    nb = Not(b)
    nnb = Not(nb)
    build = _Build(_Budget(None))
    h = build.premise(nnb)
    l1 = build.prop(1, nnb, nb)
    l2 = build.mp(h, l1)
    l3 = build.prop(3, nb, b)
    l4 = build.mp(l2, l3)
    l5 = build.include(_pf_id(nb))
    build.mp(l5, l4)
    return _deduce(build.lines, nnb)


def _pf_dni(b: Formula) -> _Lines:
    """|- b -> ~~b"""
    nnb = Not(Not(b))
    n3b = Not(nnb)
    build = _Build(_Budget(None))
    h = build.premise(b)
    l1 = build.include(_pf_dne(Not(b)))
    l2 = build.prop(3, b, nnb)
    l3 = build.mp(l1, l2)
    l4 = build.prop(1, b, n3b)
    l5 = build.mp(h, l4)
    build.mp(l5, l3)
    return _deduce(build.lines, b)


def _pf_mp_formula(a: Formula, b: Formula) -> _Lines:
    """|- a -> ((a -> b) -> b)"""
    inner: _Lines = [
        (a, _PREM),
        (imp(a, b), _PREM),
        (b, MP(1, 2)),
    ]
    return _deduce(_deduce(inner, imp(a, b)), a)


def _pf_contrap(a: Formula, b: Formula) -> _Lines:
    """|- (a -> b) -> (~b -> ~a)"""
    na, nb = Not(a), Not(b)
    nna = Not(na)
    build = _Build(_Budget(None))
    h1 = build.premise(imp(a, b))
    h2 = build.premise(nb)
    l1 = build.include(_pf_dne(a))
    l2 = build.compose(l1, h1)
    l3 = build.prop(1, nb, nna)
    l4 = build.mp(h2, l3)
    l5 = build.prop(3, b, na)
    l6 = build.mp(l4, l5)
    build.mp(l2, l6)
    return _deduce(_deduce(build.lines, nb), imp(a, b))


def _pf_neg_imp(a: Formula, b: Formula) -> _Lines:
    """|- a -> (~b -> ~(a -> b))"""
    nb = Not(b)
    ab = imp(a, b)
    nnab = Not(Not(ab))
    build = _Build(_Budget(None))
    h1 = build.premise(a)
    h2 = build.premise(nb)
    l1 = build.include(_pf_mp_formula(a, b))
    l2 = build.mp(h1, l1)
    l3 = build.include(_pf_dne(ab))
    l4 = build.compose(l3, l2)
    l5 = build.prop(1, nb, nnab)
    l6 = build.mp(h2, l5)
    l7 = build.prop(3, b, Not(ab))
    l8 = build.mp(l6, l7)
    build.mp(l4, l8)
    return _deduce(_deduce(build.lines, nb), a)


def _merge_cases(
    build: _Build, i_pos: int, i_neg: int, p: Formula, tau: Formula
) -> int:
    """From handles proving p -> tau and ~p -> tau, derive tau."""
    g1 = build.include(_pf_contrap(p, tau))
    c1 = build.mp(i_pos, g1)
    g2 = build.include(_pf_contrap(Not(p), tau))
    c2 = build.mp(i_neg, g2)
    d = build.include(_pf_dne(p))
    c3 = build.compose(c2, d)
    l = build.prop(3, p, tau)
    m1 = build.mp(c1, l)
    return build.mp(c3, m1)


# ---------------------------------------------------------------------------
# Propositional skeleton: decision and proof generation


def _sk_atoms(phi: Formula) -> list[Formula]:
    """Skeleton atoms of phi: maximal subformulas that are neither
    negations nor implication-shaped disjunctions, first-occurrence order."""
    out: list[Formula] = []
    seen: set[Formula] = set()

    def walk(f: Formula) -> None:
        parts = _imp_parts(f)
        if parts is not None:
            walk(parts[0])
            walk(parts[1])
        elif isinstance(f, Not):
            walk(f.body)
        elif f not in seen:
            seen.add(f)
            out.append(f)

    walk(phi)
    return out


def _sk_eval(phi: Formula, val: Mapping[Formula, bool]) -> bool:
    parts = _imp_parts(phi)
    if parts is not None:
        return not _sk_eval(parts[0], val) or _sk_eval(parts[1], val)
    if isinstance(phi, Not):
        return not _sk_eval(phi.body, val)
    return val[phi]


_MAX_DECISION_ATOMS = 12


def _is_consequence(
    facts: list[Formula], goal: Formula
) -> bool | None:
    """Truth-table check over the joint skeleton; None when too many atoms."""
    atoms: list[Formula] = []
    seen: set[Formula] = set()
    for f in [*facts, goal]:
        for a in _sk_atoms(f):
            if a not in seen:
                seen.add(a)
                atoms.append(a)
    if len(atoms) > _MAX_DECISION_ATOMS:
        return None
    for bits in product((False, True), repeat=len(atoms)):
        val = dict(zip(atoms, bits))
        if all(_sk_eval(f, val) for f in facts) and not _sk_eval(goal, val):
            return False
    return True


def _kalmar_branch(
    build: _Build, phi: Formula, val: Mapping[Formula, bool]
) -> int:
    """Under literal premises {a if val[a] else ~a}, derive phi or ~phi
    according to the valuation; returns the handle."""
    parts = _imp_parts(phi)
    if parts is not None:
        a, b = parts
        if not _sk_eval(a, val):
            ha = _kalmar_branch(build, a, val)
            e = build.include(_pf_efq(a, b))
            return build.mp(ha, e)
        if _sk_eval(b, val):
            hb = _kalmar_branch(build, b, val)
            l = build.prop(1, b, a)
            return build.mp(hb, l)
        ha = _kalmar_branch(build, a, val)
        hb = _kalmar_branch(build, b, val)
        l = build.include(_pf_neg_imp(a, b))
        m = build.mp(ha, l)
        return build.mp(hb, m)
    if isinstance(phi, Not):
        hx = _kalmar_branch(build, phi.body, val)
        if _sk_eval(phi.body, val):
            d = build.include(_pf_dni(phi.body))
            return build.mp(hx, d)
        return hx
    return build.premise(phi if val[phi] else Not(phi))


def _prove_taut(budget: _Budget, tau: Formula) -> _Lines | None:
    """A premise-free proof of tau, when tau is a skeleton tautology."""
    atoms = _sk_atoms(tau)
    if _is_consequence([], tau) is not True:
        return None

    def go(fixed: dict[Formula, bool], rest: list[Formula]) -> _Lines:
        if not rest:
            build = _Build(budget)
            _kalmar_branch(build, tau, fixed)
            return build.lines
        p = rest[0]
        pos = go({**fixed, p: True}, rest[1:])
        neg = go({**fixed, p: False}, rest[1:])
        build = _Build(budget)
        hp = build.include(_deduce(pos, p))
        hn = build.include(_deduce(neg, Not(p)))
        _merge_cases(build, hp, hn, p, tau)
        return build.lines

    return go({}, atoms)


# ---------------------------------------------------------------------------
# Fact graphs: shared by the prover's forward closure and check_gref


def _emit_fact(
    build: _Build,
    nodes: Mapping[Formula, tuple],
    f: Formula,
    memo: dict[Formula, int],
) -> int:
    """Materialize the derivation of fact ``f`` into ``build``."""
    if f in memo:
        return memo[f]
    node = nodes[f]
    if node[0] == "prem":
        h = build.premise(f)
    elif node[0] == "mp":
        ha = _emit_fact(build, nodes, node[1], memo)
        hi = _emit_fact(build, nodes, node[2], memo)
        h = build.add(f, MP(ha, hi))
    else:  # ("uinst", universal_formula, witness_term)
        hp = _emit_fact(build, nodes, node[1], memo)
        h = _uinst_steps(build, hp, node[1], node[2])
    memo[f] = h
    return h


def _uinst_steps(
    build: _Build, h_all: int, universal: Formula, t: Term
) -> int:
    """From a handle proving the universal sugar ``(not (ex v (not b)))``,
    derive ``b[t/v]``."""
    v, body = _forall_parts(universal)
    inst = subst(body, v, t)
    na = Not(inst)
    ex = universal.body
    ax = build.add(imp(na, ex), QuantAxiom())
    g = build.include(_pf_contrap(na, ex))
    c = build.mp(ax, g)
    m = build.mp(h_all, c)
    d = build.include(_pf_dne(inst))
    return build.mp(m, d)


def _mp_saturate(
    pool: list[Formula],
    cap: int,
    instantiate: list[Term] | None = None,
) -> tuple[dict[Formula, tuple], list[Formula]]:
    """Forward closure of the pool under modus ponens (and, when a witness
    list is given, universal instantiation at those terms).  Returns the
    derivation node of every fact, insertion-ordered, plus the distinct
    pool members that were re-derived; at most ``cap`` new facts are
    derived."""
    nodes: dict[Formula, tuple] = {}
    by_ant: dict[Formula, list[Formula]] = {}
    queue: deque[Formula] = deque()
    rederived: list[Formula] = []
    reseen: set[Formula] = set()
    derived = 0

    def admit(f: Formula, node: tuple) -> None:
        nonlocal derived
        if f in nodes:
            if (
                node[0] != "prem"
                and nodes[f][0] == "prem"
                and f not in reseen
            ):
                reseen.add(f)
                rederived.append(f)
            return
        if node[0] != "prem":
            if derived >= cap:
                return
            derived += 1
        nodes[f] = node
        queue.append(f)

    for p in pool:
        admit(p, ("prem",))
    while queue:
        f = queue.popleft()
        parts = _imp_parts(f)
        if parts is not None:
            ant, cons = parts
            by_ant.setdefault(ant, []).append(f)
            if ant in nodes:
                admit(cons, ("mp", ant, f))
        for impf in by_ant.get(f, ()):
            admit(_imp_parts(impf)[1], ("mp", f, impf))
        if instantiate is not None:
            fa = _forall_parts(f)
            if fa is not None:
                v, body = fa
                for t in instantiate:
                    admit(subst(body, v, t), ("uinst", f, t))
    return nodes, rederived


# ---------------------------------------------------------------------------
# The prover


_MAX_GOAL_DEPTH = 8
_MAX_FACTS = 160
_MAX_CANDIDATE_TERMS = 8
_MAX_RELEVANT = 6
_PROBE_BUDGET = 3000


def _formula_key(phi: Formula) -> tuple:
    return (phi.depth, phi.size, render(phi))


def _candidate_terms(
    premises: list[Formula], goal: Formula
) -> list[Term]:
    """Witness candidates for one-point instantiation, deterministic."""
    seen: set[Term] = set()
    out: list[Term] = []
    for phi in [goal, *premises]:
        for t in _terms_of(phi):
            if t not in seen:
                seen.add(t)
                out.append(t)
    out.sort(key=lambda t: (isinstance(t, Const), render_term(t)))
    return out[:_MAX_CANDIDATE_TERMS]


def _relevant_premises(
    premises: list[Formula], goal: Formula
) -> list[Formula]:
    """Premises sharing skeleton atoms with the goal, grown to a fixpoint."""
    atoms = set(_sk_atoms(goal))
    chosen: list[Formula] = []
    remaining = list(premises)
    changed = True
    while changed and len(chosen) < _MAX_RELEVANT:
        changed = False
        for p in list(remaining):
            p_atoms = set(_sk_atoms(p))
            if p_atoms & atoms:
                chosen.append(p)
                remaining.remove(p)
                atoms |= p_atoms
                changed = True
                if len(chosen) >= _MAX_RELEVANT:
                    break
    return chosen


def _close_from_facts(
    budget: _Budget,
    nodes: Mapping[Formula, tuple],
    facts: list[Formula],
    taut_lines: _Lines,
) -> _Lines:
    """Combine a proof of facts_1 -> (... -> goal) with fact derivations."""
    build = _Build(budget)
    h = build.include(taut_lines)
    memo: dict[Formula, int] = {}
    for p in facts:
        hp = _emit_fact(build, nodes, p, memo)
        h = build.mp(hp, h)
    return build.lines


def _search(
    premises: list[Formula],
    goal: Formula,
    budget: _Budget,
    depth: int,
) -> _Lines | None:
    if depth > _MAX_GOAL_DEPTH:
        return None
    premset = set(premises)

    # 1. the goal is a premise
    if goal in premset:
        budget.spend()
        return [(goal, _PREM)]

    # 2. the goal is an axiom instance
    for schema in (1, 2, 3):
        if _match_prop(schema, goal) is not None:
            budget.spend()
            return [(goal, PropAxiom(schema))]
    if _eq_axiom_ok(goal):
        budget.spend()
        return [(goal, EqAxiom())]
    if _quant_axiom_parts(goal) is not None:
        budget.spend()
        return [(goal, QuantAxiom())]

    # 3. forward modus-ponens closure (with one-point universal
    #    instantiation) reaches the goal directly
    witnesses = _candidate_terms(premises, goal)
    nodes, _ = _mp_saturate(premises, _MAX_FACTS, witnesses)
    if goal in nodes:
        build = _Build(budget)
        _emit_fact(build, nodes, goal, {})
        return build.lines

    # 4. double negation of something provable
    if isinstance(goal, Not) and isinstance(goal.body, Not):
        sub = _search(premises, goal.body.body, budget, depth + 1)
        if sub is not None:
            build = _Build(budget)
            h = build.include(sub)
            d = build.include(_pf_dni(goal.body.body))
            build.mp(h, d)
            return build.lines

    # 5. universal goal, by generalization
    fa = _forall_parts(goal)
    if fa is not None:
        v, body = fa
        if all(v not in p.free_vars for p in premises):
            sub = _search(premises, body, budget, depth + 1)
            if sub is not None:
                budget.spend()
                return [*sub, (goal, Gen(len(sub), v))]

    # 6. existential goal, by one-point instantiation
    if isinstance(goal, Exists):
        for t in witnesses:
            inst = subst(goal.body, goal.var, t)
            sub = _search(premises, inst, budget, depth + 1)
            if sub is not None:
                build = _Build(budget)
                h = build.include(sub)
                ax = build.add(imp(inst, goal), QuantAxiom())
                build.mp(h, ax)
                return build.lines

    # 7. implication goal, by the deduction transform.  The recursion runs
    #    on a small isolated probe budget first: the transform triples the
    #    inner proof, so a large inner proof is better reached by the
    #    direct case analysis of stage 8.
    parts = _imp_parts(goal)
    probe_exhausted = False
    if parts is not None:
        a, c = parts
        inner_premises = premises if a in premset else [*premises, a]
        probe_cap = _PROBE_BUDGET
        if budget.left is not None:
            probe_cap = min(probe_cap, budget.left)
        probe = _Budget(probe_cap)
        try:
            sub = _search(inner_premises, c, probe, depth + 1)
        except _Out:
            sub, probe_exhausted = None, True
        if sub is not None and not any(
            isinstance(j, Gen) for _, j in sub
        ):
            lines = _deduce(sub, a)
            budget.spend(probe_cap - probe.left + len(lines))
            return lines

    # 8. propositional consequence of derived facts, via case analysis
    pool = sorted(nodes, key=_formula_key)
    facts = _relevant_premises(pool, goal)
    if _is_consequence(facts, goal) is True:
        tau = goal
        for p in reversed(facts):
            tau = imp(p, tau)
        taut_lines = _prove_taut(budget, tau)
        if taut_lines is not None:
            return _close_from_facts(budget, nodes, facts, taut_lines)

    # 9. the probe was too small: retry the deduction transform with the
    #    whole remaining budget.
    if probe_exhausted:
        a, c = parts
        inner_premises = premises if a in premset else [*premises, a]
        sub = _search(inner_premises, c, budget, depth + 1)
        if sub is not None and not any(
            isinstance(j, Gen) for _, j in sub
        ):
            lines = _deduce(sub, a)
            budget.spend(len(lines))
            return lines

    return None


def prove(
    premises: Iterable[Formula], goal: Formula, budget: int = 20_000
) -> Proof | None:
    """Search for a proof of ``goal`` from ``premises`` within ``budget``.

    The budget bounds the total number of lines the search may write
    across all attempted constructions.  The strategy is deterministic
    and deliberately bounded: premise and axiom recognition, forward
    modus-ponens closure with one-point universal instantiation,
    goal-directed quantifier steps, the deduction transform for
    implication goals, and case analysis over the propositional skeleton
    (disjunctions without a negated left child are opaque there).  A None
    result therefore means only that *this* search failed -- it is never
    evidence that no proof exists.  Every returned proof has been passed
    back through :func:`check_proof`.
    """
    prem_set = set(premises)
    for p in prem_set:
        if not isinstance(p, Formula):
            raise SyntaxToolError("premises must be formulas")
    prem_list = sorted(prem_set, key=_formula_key)
    if not isinstance(goal, Formula):
        raise SyntaxToolError("the goal must be a formula")
    if budget < 1:
        raise SyntaxToolError("the budget must be a positive integer")
    try:
        lines = _search(prem_list, goal, _Budget(budget), 0)
    except _Out:
        return None
    if lines is None:
        return None
    proof = Proof(tuple(lines))
    verdict = check_proof(proof, prem_list)
    if not verdict.ok:  # pragma: no cover - internal safety net
        raise SyntaxToolError(
            f"internal: generated proof rejected ({verdict.text()})"
        )
    return proof


# ---------------------------------------------------------------------------
# Derivability audit for truth classes


_WITNESS_CLIP = 320


def _clip(text: str, limit: int = _WITNESS_CLIP) -> str:
    return text if len(text) <= limit else text[: limit - 1] + "…"


def _proof_witness(proof: Proof) -> str:
    steps = [
        f"{n}: {render(phi)} ; {_render_just(just)}"
        for n, (phi, just) in enumerate(proof.lines, start=1)
    ]
    return _clip(" | ".join(steps))


def check_gref(
    m: FinStructure,
    t: TruthClass,
    mode: str = "full",
    budget: int = 10_000,
    depth_bound: int | None = None,
    extra: Iterable[Formula] = (),
) -> Report:
    """Audit a truth class for closure under bounded derivability.

    The class's sentences are taken as premises and forward-saturated
    under the calculus, deriving at most ``budget`` new facts:

    * ``mode="prop"`` closes under modus ponens only;
    * ``mode="full"`` also instantiates universal sentences at every
      element of the structure;
    * ``mode="depth"`` behaves like ``full`` but only conclusions of
      depth at most ``depth_bound`` are checked, and the sentences in
      ``extra`` join the premise pool without being audited themselves.

    Every derived conclusion that is a sentence, denotes inside the
    structure, and instantiates a family shape must already be held true
    by the class; each miss is reported with the derivation that produced
    it, and a derivation landing back on a pool sentence counts as a
    successful check.  The report is deterministic for fixed inputs.
    """
    if not isinstance(t, TruthClass):
        raise ArityError("the derivability audit applies to truth classes")
    if mode not in ("full", "prop", "depth"):
        raise SyntaxToolError(f"unknown audit mode {mode!r}")
    extra_pool = list(extra)
    if mode == "depth":
        if depth_bound is None or depth_bound < 1:
            raise SyntaxToolError(
                "depth mode needs a positive depth_bound"
            )
        for phi in extra_pool:
            if not isinstance(phi, Formula) or not phi.is_sentence:
                raise SyntaxToolError(
                    "auxiliary premises must be sentences"
                )
    else:
        if depth_bound is not None:
            raise SyntaxToolError(
                "depth_bound only applies to mode 'depth'"
            )
        if extra_pool:
            raise SyntaxToolError(
                "auxiliary premises only apply to mode 'depth'"
            )
    if budget < 0:
        raise SyntaxToolError("the budget must be non-negative")

    pool = t.sorted_sentences()
    seen_pool = set(pool)
    for phi in sorted(extra_pool, key=_formula_key):
        if phi not in seen_pool:
            seen_pool.add(phi)
            pool.append(phi)

    if mode == "prop":
        witnesses: list[Term] | None = None
    else:
        witnesses = [Const(h) for h in m.elements]
    nodes, rederived = _mp_saturate(pool, budget, witnesses)

    label = f"depth<={depth_bound}" if mode == "depth" else mode
    subject = (
        f"gref[{label}] over {structure_ref(m)}: {len(pool)} premises, "
        f"budget {budget}"
    )

    def in_scope(f: Formula) -> bool:
        if mode == "depth" and f.depth > depth_bound:
            return False
        if not f.is_sentence:
            return False
        if any(h not in m.universe for h in constants_of(f)):
            return False
        return is_shaped(f, t.family)

    checked = 0
    violations: list[Violation] = []
    for f, node in nodes.items():
        if node[0] == "prem" or not in_scope(f):
            continue
        checked += 1
        if f in t.sentences:
            continue
        build = _Build(_Budget(None))
        _emit_fact(build, nodes, f, {})
        proof = Proof(tuple(build.lines))
        verdict = check_proof(proof, pool)
        if not verdict.ok:  # pragma: no cover - internal safety net
            raise SyntaxToolError(
                f"internal: audit witness rejected ({verdict.text()})"
            )
        violations.append(
            Violation(1, "closure-failure", _proof_witness(proof))
        )
    # conclusions that re-derive a pool sentence of the class are checks
    # that trivially succeed; they still count as audited conclusions.
    for f in rederived:
        if f in t.sentences and in_scope(f):
            checked += 1
    return _finish_report(subject, checked, violations)
