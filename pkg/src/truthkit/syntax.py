"""Formula language over set membership.

Core connectives are {¬, ∨, ∃} plus the atoms t∈t, t=t and optional named
predicate atoms; everything else (∧, →, ∀, bounded quantifiers) is sugar that
parses into the core. Formulas are immutable trees with cached free-variable
sets, depth, and hash; subtrees can be shared, which keeps iterated
constructions (balanced disjunctions and the like) linear in the number of
distinct nodes.

Depth convention: atomic formulas have depth 1, ¬ and ∨ add 1, and ∃ adds 2
(the binder occupies a node of its own on the path).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    AssignmentDomainError,
    DecodeError,
    FreshNameError,
    SyntaxToolError,
    VariableCollisionError,
)
from .hfset import HFSet, decode, hfset, kur_split, kuratowski, nat, nat_value, try_code

__all__ = [
    "Term",
    "Var",
    "Const",
    "Formula",
    "Mem",
    "Eq",
    "Pred",
    "Not",
    "Or",
    "Exists",
    "and_",
    "imp",
    "iff",
    "all_",
    "ex_in",
    "all_in",
    "big_or",
    "big_and",
    "parse",
    "parse_term",
    "render",
    "render_term",
    "analyze",
    "AnalyzeResult",
    "close",
    "subst",
    "relativize",
    "ecl_becl",
    "sim_equiv",
    "canonical_bound",
    "levy_class",
    "var_key",
    "fresh_var",
    "all_names",
    "formula_code",
    "decode_formula",
    "term_code",
    "decode_term",
]


# ---------------------------------------------------------------------------
# Terms

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_KEYWORDS = frozenset(
    ["mem", "eq", "not", "or", "ex", "and", "imp", "iff", "all", "ex-in",
     "all-in", "pred"]
)


def _valid_var(name: str) -> bool:
    return bool(_IDENT_RE.match(name)) and name not in _KEYWORDS


class Term:
    __slots__ = ()


class Var(Term):
    __slots__ = ("name", "_hash")

    def __init__(self, name: str):
        if not _valid_var(name):
            raise SyntaxToolError(f"invalid variable name {name!r}")
        self.name = name
        self._hash = hash(("Var", name))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, Var) and self.name == other.name)

    def __repr__(self):
        return f"Var({self.name})"


class Const(Term):
    __slots__ = ("value", "_hash")

    def __init__(self, value: HFSet):
        if not isinstance(value, HFSet):
            raise SyntaxToolError("constants carry hereditarily finite sets")
        self.value = value
        self._hash = hash(("Const", value))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Const) and self.value == other.value
        )

    def __repr__(self):
        return f"Const({self.value!r})"


def _term_vars(t: Term) -> frozenset[str]:
    return frozenset((t.name,)) if isinstance(t, Var) else frozenset()


# ---------------------------------------------------------------------------
# Formulas

_EMPTY_VARS: frozenset[str] = frozenset()


class Formula:
    __slots__ = ("free_vars", "depth", "size", "_hash", "__weakref__")

    free_vars: frozenset[str]
    depth: int
    size: int

    def __hash__(self):
        return self._hash

    @property
    def is_sentence(self) -> bool:
        return not self.free_vars

    def __repr__(self):
        return render(self)


class Mem(Formula):
    __slots__ = ("t1", "t2")

    def __init__(self, t1: Term, t2: Term):
        self.t1, self.t2 = t1, t2
        self.free_vars = _term_vars(t1) | _term_vars(t2)
        self.depth = 1
        self.size = 1
        self._hash = hash(("Mem", t1._hash, t2._hash))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Mem)
            and self._hash == other._hash
            and self.t1 == other.t1
            and self.t2 == other.t2
        )

    __hash__ = Formula.__hash__


class Eq(Formula):
    __slots__ = ("t1", "t2")

    def __init__(self, t1: Term, t2: Term):
        self.t1, self.t2 = t1, t2
        self.free_vars = _term_vars(t1) | _term_vars(t2)
        self.depth = 1
        self.size = 1
        self._hash = hash(("Eq", t1._hash, t2._hash))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Eq)
            and self._hash == other._hash
            and self.t1 == other.t1
            and self.t2 == other.t2
        )

    __hash__ = Formula.__hash__


class Pred(Formula):
    """A named predicate atom (extension point: interpreted per structure)."""

    __slots__ = ("name", "args")

    def __init__(self, name: str, args: Sequence[Term] = ()):
        if not _IDENT_RE.match(name):
            raise SyntaxToolError(f"invalid predicate name {name!r}")
        self.name = name
        self.args = tuple(args)
        fv = _EMPTY_VARS
        for a in self.args:
            fv |= _term_vars(a)
        self.free_vars = fv
        self.depth = 1
        self.size = 1
        self._hash = hash(("Pred", name, tuple(a._hash for a in self.args)))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Pred)
            and self._hash == other._hash
            and self.name == other.name
            and self.args == other.args
        )

    __hash__ = Formula.__hash__


class Not(Formula):
    __slots__ = ("body",)

    def __init__(self, body: Formula):
        self.body = body
        self.free_vars = body.free_vars
        self.depth = body.depth + 1
        self.size = body.size + 1
        self._hash = hash(("Not", body._hash))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Not)
            and self._hash == other._hash
            and self.body == other.body
        )

    __hash__ = Formula.__hash__


class Or(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        self.left, self.right = left, right
        self.free_vars = left.free_vars | right.free_vars
        self.depth = max(left.depth, right.depth) + 1
        self.size = left.size + right.size + 1
        self._hash = hash(("Or", left._hash, right._hash))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Or)
            and self._hash == other._hash
            and self.left == other.left
            and self.right == other.right
        )

    __hash__ = Formula.__hash__


class Exists(Formula):
    __slots__ = ("var", "body")

    def __init__(self, var: str, body: Formula):
        if not _valid_var(var):
            raise SyntaxToolError(f"invalid variable name {var!r}")
        self.var = var
        self.body = body
        self.free_vars = body.free_vars - {var}
        self.depth = body.depth + 2
        self.size = body.size + 2
        self._hash = hash(("Exists", var, body._hash))

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Exists)
            and self._hash == other._hash
            and self.var == other.var
            and self.body == other.body
        )

    __hash__ = Formula.__hash__


# ---------------------------------------------------------------------------
# Sugar builders


def and_(a: Formula, b: Formula) -> Formula:
    return Not(Or(Not(a), Not(b)))


def imp(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return and_(imp(a, b), imp(b, a))


def all_(var: str, body: Formula) -> Formula:
    return Not(Exists(var, Not(body)))


def ex_in(var: str, bound: Term, body: Formula) -> Formula:
    """∃var∈bound body, desugared: ∃var(var∈bound ∧ body)."""
    return Exists(var, and_(Mem(Var(var), bound), body))


def all_in(var: str, bound: Term, body: Formula) -> Formula:
    """∀var∈bound body, desugared: ¬∃var¬(var∈bound → body)."""
    return all_(var, imp(Mem(Var(var), bound), body))


def big_or(formulas: Sequence[Formula]) -> Formula:
    """Left-nested fold: ⋁ of one formula is itself; ⋁_{i<j+1} = ⋁_{i<j} ∨ φⱼ."""
    if not formulas:
        raise SyntaxToolError("big_or of an empty sequence")
    out = formulas[0]
    for f in formulas[1:]:
        out = Or(out, f)
    return out


def big_and(formulas: Sequence[Formula]) -> Formula:
    if not formulas:
        raise SyntaxToolError("big_and of an empty sequence")
    out = formulas[0]
    for f in formulas[1:]:
        out = and_(out, f)
    return out


# ---------------------------------------------------------------------------
# Parsing


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "(){}":
            yield (ch, ch, i + 1)
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "(){}":
            j += 1
        yield ("atom", text[i:j], i + 1)
        i = j
    yield ("end", "", n + 1)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        if tok[0] != "end":
            self.pos += 1
        return tok

    def fail(self, message: str, offset: int):
        raise SyntaxToolError(f"{message} at offset {offset}")

    def expect(self, kind: str, what: str):
        tok = self.next()
        if tok[0] != kind:
            if tok[0] == "end":
                self.fail("unbalanced expression", tok[2])
            self.fail(f"expected {what}, found {tok[1]!r}", tok[2])
        return tok

    def parse_formula(self) -> Formula:
        kind, value, off = self.next()
        if kind == "end":
            self.fail("unbalanced expression", off)
        if kind != "(":
            self.fail(f"expected '(', found {value!r}", off)
        kind, op, off = self.next()
        if kind == "end":
            self.fail("unbalanced expression", off)
        if kind != "atom":
            self.fail(f"expected an operator, found {op!r}", off)
        out = self._dispatch(op, off)
        self.expect(")", "')'")
        return out

    def _dispatch(self, op: str, off: int) -> Formula:
        if op == "mem":
            return Mem(self.parse_term(), self.parse_term())
        if op == "eq":
            return Eq(self.parse_term(), self.parse_term())
        if op == "not":
            return Not(self.parse_formula())
        if op == "or":
            return Or(self.parse_formula(), self.parse_formula())
        if op == "and":
            return and_(self.parse_formula(), self.parse_formula())
        if op == "imp":
            return imp(self.parse_formula(), self.parse_formula())
        if op == "iff":
            return iff(self.parse_formula(), self.parse_formula())
        if op == "ex":
            return Exists(self.parse_var(), self.parse_formula())
        if op == "all":
            return all_(self.parse_var(), self.parse_formula())
        if op == "ex-in":
            return ex_in(self.parse_var(), self.parse_var_term(), self.parse_formula())
        if op == "all-in":
            return all_in(self.parse_var(), self.parse_var_term(), self.parse_formula())
        if op == "pred":
            kind, name, noff = self.next()
            if kind != "atom" or not _IDENT_RE.match(name):
                self.fail("expected a predicate name", noff)
            args = []
            while self.peek()[0] not in (")", "end"):
                args.append(self.parse_term())
            return Pred(name, args)
        self.fail(f"unknown operator {op!r}", off)

    def parse_var(self) -> str:
        kind, value, off = self.next()
        if kind == "end":
            self.fail("unbalanced expression", off)
        if kind != "atom" or not _valid_var(value):
            self.fail(f"expected a variable, found {value!r}", off)
        return value

    def parse_var_term(self) -> Term:
        # the bound of a bounded quantifier: a variable or a constant
        tok = self.peek()
        if tok[0] == "atom" and _valid_var(tok[1]):
            return Var(self.next()[1])
        return self.parse_term()

    def parse_term(self) -> Term:
        kind, value, off = self.next()
        if kind == "end":
            self.fail("unbalanced expression", off)
        if kind == "{":
            members = []
            while True:
                tok = self.peek()
                if tok[0] == "}":
                    self.next()
                    break
                if tok[0] == "end":
                    self.fail("unbalanced expression", tok[2])
                t = self.parse_term()
                if not isinstance(t, Const):
                    self.fail("set literals may only contain constants", tok[2])
                members.append(t.value)
            return Const(hfset(members))
        if kind != "atom":
            self.fail(f"expected a term, found {value!r}", off)
        if value.startswith("#"):
            digits = value[1:]
            if not digits.isdigit():
                self.fail(f"malformed constant literal {value!r}", off)
            return Const(decode(int(digits)))
        if _valid_var(value):
            return Var(value)
        self.fail(f"invalid term {value!r}", off)


def parse(text: str) -> Formula:
    p = _Parser(text)
    out = p.parse_formula()
    kind, value, off = p.peek()
    if kind != "end":
        p.fail(f"trailing input {value!r}", off)
    return out


def parse_term(text: str) -> Term:
    p = _Parser(text)
    out = p.parse_term()
    kind, value, off = p.peek()
    if kind != "end":
        p.fail(f"trailing input {value!r}", off)
    return out


# ---------------------------------------------------------------------------
# Rendering (canonical, desugared)


def render_term(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return _render_const(t.value)
    raise SyntaxToolError(f"not a term: {t!r}")


def _render_const(v: HFSet) -> str:
    code = try_code(v)
    if code is not None and code < (1 << 20):
        return f"#{code}"
    return "{" + " ".join(_render_const(m) for m in v.members) + "}"


def render(phi: Formula) -> str:
    parts: list[str] = []
    _render_into(phi, parts)
    return "".join(parts)


def _render_into(phi: Formula, parts: list[str]) -> None:
    if isinstance(phi, Mem):
        parts.append(f"(mem {render_term(phi.t1)} {render_term(phi.t2)})")
    elif isinstance(phi, Eq):
        parts.append(f"(eq {render_term(phi.t1)} {render_term(phi.t2)})")
    elif isinstance(phi, Pred):
        inner = " ".join(render_term(a) for a in phi.args)
        parts.append(f"(pred {phi.name}{' ' + inner if inner else ''})")
    elif isinstance(phi, Not):
        parts.append("(not ")
        _render_into(phi.body, parts)
        parts.append(")")
    elif isinstance(phi, Or):
        parts.append("(or ")
        _render_into(phi.left, parts)
        parts.append(" ")
        _render_into(phi.right, parts)
        parts.append(")")
    elif isinstance(phi, Exists):
        parts.append(f"(ex {phi.var} ")
        _render_into(phi.body, parts)
        parts.append(")")
    else:
        raise SyntaxToolError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# Analysis


@dataclass(frozen=True)
class AnalyzeResult:
    free_vars: tuple[str, ...]
    depth: int
    immediate_subformulae: tuple[Formula, ...]
    levy_class: str
    is_sentence: bool


def var_key(name: str) -> tuple[int, str]:
    """Canonical variable order: shortlex (so v0 < v1 < … < v10)."""
    return (len(name), name)


def immediate_subformulae(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, Not):
        return (phi.body,)
    if isinstance(phi, Or):
        return (phi.left, phi.right)
    if isinstance(phi, Exists):
        return (phi.body,)
    return ()


def analyze(phi: Formula) -> AnalyzeResult:
    return AnalyzeResult(
        free_vars=tuple(sorted(phi.free_vars, key=var_key)),
        depth=phi.depth,
        immediate_subformulae=immediate_subformulae(phi),
        levy_class=levy_class(phi),
        is_sentence=phi.is_sentence,
    )


def all_names(phi: Formula) -> frozenset[str]:
    """Every variable name occurring in φ, free, bound, or as a binder."""
    out: set[str] = set()
    stack = [phi]
    seen: set[int] = set()
    while stack:
        f = stack.pop()
        if id(f) in seen:
            continue
        seen.add(id(f))
        if isinstance(f, (Mem, Eq)):
            for t in (f.t1, f.t2):
                if isinstance(t, Var):
                    out.add(t.name)
        elif isinstance(f, Pred):
            for t in f.args:
                if isinstance(t, Var):
                    out.add(t.name)
        elif isinstance(f, Not):
            stack.append(f.body)
        elif isinstance(f, Or):
            stack.append(f.left)
            stack.append(f.right)
        elif isinstance(f, Exists):
            out.add(f.var)
            stack.append(f.body)
    return frozenset(out)


def fresh_var(taken: Iterable[str], base: str = "w") -> str:
    taken = set(taken)
    if base not in taken and _valid_var(base):
        return base
    for i in range(1_000_000):
        cand = f"{base}{i}"
        if cand not in taken:
            return cand
    raise FreshNameError(f"no fresh variable with base {base!r}")


# ---------------------------------------------------------------------------
# Levy classification (conservative syntactic recognizer)


def _bounded_exists_parts(phi: Formula) -> tuple[str, Term, Formula] | None:
    """Match ∃v(v∈w ∧ ψ) desugared: Exists(v, ¬(¬(v∈w) ∨ G)) with ψ = ¬G.

    Returns (v, w, G) — the recursive Δ0 obligation is on G (since ¬G ≈ ψ).
    """
    if not isinstance(phi, Exists):
        return None
    b = phi.body
    if not isinstance(b, Not) or not isinstance(b.body, Or):
        return None
    first, second = b.body.left, b.body.right
    if not isinstance(first, Not) or not isinstance(first.body, Mem):
        return None
    atom = first.body
    if not isinstance(atom.t1, Var) or atom.t1.name != phi.var:
        return None
    w = atom.t2
    if isinstance(w, Var) and w.name == phi.var:
        return None
    return (phi.var, w, second)


def _is_delta0(phi: Formula) -> bool:
    if isinstance(phi, (Mem, Eq, Pred)):
        return True
    if isinstance(phi, Not):
        return _is_delta0(phi.body)
    if isinstance(phi, Or):
        return _is_delta0(phi.left) and _is_delta0(phi.right)
    if isinstance(phi, Exists):
        parts = _bounded_exists_parts(phi)
        return parts is not None and _is_delta0(parts[2])
    return False


def _peel_forall(phi: Formula) -> tuple[str, Formula] | None:
    if (
        isinstance(phi, Not)
        and isinstance(phi.body, Exists)
        and isinstance(phi.body.body, Not)
    ):
        return (phi.body.var, phi.body.body.body)
    return None


def levy_class(phi: Formula) -> str:
    """Δ0 / Σn / Πn by pattern, 'unclassified' otherwise (never misclassifies)."""
    if _is_delta0(phi):
        return "delta0"
    kinds: list[str] = []
    rest = phi
    while True:
        if isinstance(rest, Exists):
            if not kinds or kinds[-1] != "E":
                kinds.append("E")
            rest = rest.body
            continue
        peeled = _peel_forall(rest)
        if peeled is not None:
            if not kinds or kinds[-1] != "A":
                kinds.append("A")
            rest = peeled[1]
            continue
        break
    if kinds and _is_delta0(rest):
        n = len(kinds)
        return f"sigma{n}" if kinds[0] == "E" else f"pi{n}"
    return "unclassified"


# ---------------------------------------------------------------------------
# Substitution and closure


def subst(phi: Formula, name: str, term: Term) -> Formula:
    """Capture-avoiding substitution of ``term`` for free ``name``."""
    if name not in phi.free_vars:
        return phi
    if isinstance(phi, Mem):
        return Mem(_subst_term(phi.t1, name, term), _subst_term(phi.t2, name, term))
    if isinstance(phi, Eq):
        return Eq(_subst_term(phi.t1, name, term), _subst_term(phi.t2, name, term))
    if isinstance(phi, Pred):
        return Pred(phi.name, [_subst_term(a, name, term) for a in phi.args])
    if isinstance(phi, Not):
        return Not(subst(phi.body, name, term))
    if isinstance(phi, Or):
        return Or(subst(phi.left, name, term), subst(phi.right, name, term))
    if isinstance(phi, Exists):
        # name is free in phi, so phi.var != name
        if isinstance(term, Var) and term.name == phi.var:
            fresh = fresh_var(
                all_names(phi.body) | {name, term.name}, base=phi.var
            )
            renamed = subst(phi.body, phi.var, Var(fresh))
            return Exists(fresh, subst(renamed, name, term))
        return Exists(phi.var, subst(phi.body, name, term))
    raise SyntaxToolError(f"not a formula: {phi!r}")


def _subst_term(t: Term, name: str, term: Term) -> Term:
    if isinstance(t, Var) and t.name == name:
        return term
    return t


def close(phi: Formula, alpha: Mapping[str, HFSet]) -> Formula:
    """Replace each free variable in α's domain by the constant for its value.

    With a total α this produces φ*α (a closed instance); a partial α
    substitutes only its domain; a singleton α is φ[ẋ/v].
    """
    extra = set(alpha) - set(phi.free_vars)
    if extra:
        raise AssignmentDomainError(
            f"assignment names non-free variables: {sorted(extra)}"
        )
    for v, val in alpha.items():
        if not isinstance(val, HFSet):
            raise AssignmentDomainError(f"value for {v!r} is not an HF set")
    if not alpha:
        return phi
    return _close(phi, dict(alpha))


def _close(phi: Formula, alpha: dict[str, HFSet]) -> Formula:
    if not (phi.free_vars & alpha.keys()):
        return phi
    if isinstance(phi, Mem):
        return Mem(_close_term(phi.t1, alpha), _close_term(phi.t2, alpha))
    if isinstance(phi, Eq):
        return Eq(_close_term(phi.t1, alpha), _close_term(phi.t2, alpha))
    if isinstance(phi, Pred):
        return Pred(phi.name, [_close_term(a, alpha) for a in phi.args])
    if isinstance(phi, Not):
        return Not(_close(phi.body, alpha))
    if isinstance(phi, Or):
        return Or(_close(phi.left, alpha), _close(phi.right, alpha))
    if isinstance(phi, Exists):
        inner = {k: v for k, v in alpha.items() if k != phi.var}
        return Exists(phi.var, _close(phi.body, inner))
    raise SyntaxToolError(f"not a formula: {phi!r}")


def _close_term(t: Term, alpha: dict[str, HFSet]) -> Term:
    if isinstance(t, Var) and t.name in alpha:
        return Const(alpha[t.name])
    return t


def relativize(phi: Formula, name: str) -> Formula:
    """Bound every quantifier to ``name``: each ∃v ψ becomes ∃v(v∈name ∧ ψ)."""
    if name in all_names(phi):
        raise VariableCollisionError(f"{name!r} already occurs in the formula")
    return _relativize(phi, name)


def _relativize(phi: Formula, name: str) -> Formula:
    if isinstance(phi, (Mem, Eq, Pred)):
        return phi
    if isinstance(phi, Not):
        return Not(_relativize(phi.body, name))
    if isinstance(phi, Or):
        return Or(_relativize(phi.left, name), _relativize(phi.right, name))
    if isinstance(phi, Exists):
        return Exists(
            phi.var,
            and_(Mem(Var(phi.var), Var(name)), _relativize(phi.body, name)),
        )
    raise SyntaxToolError(f"not a formula: {phi!r}")


def ecl_becl(phi: Formula, bound: str | None = None) -> Formula:
    """Existential closure; with ``bound``, each prefix quantifier is ∈-bounded.

    Free variables are quantified in canonical order (leftmost = first).
    """
    if bound is not None:
        if not _valid_var(bound):
            raise SyntaxToolError(f"invalid variable name {bound!r}")
        if bound in all_names(phi):
            raise VariableCollisionError(f"bound {bound!r} occurs in the formula")
    out = phi
    for v in sorted(phi.free_vars, key=var_key, reverse=True):
        if bound is None:
            out = Exists(v, out)
        else:
            out = ex_in(v, Var(bound), out)
    return out


# ---------------------------------------------------------------------------
# Same-modulo-free-variables (∼) equivalence


def canonical_bound(phi: Formula) -> Formula:
    """Rename binders to b0, b1, … in first-occurrence order (pre-order)."""
    free = phi.free_vars
    counter = [0]

    def next_name() -> str:
        while True:
            cand = f"b{counter[0]}"
            counter[0] += 1
            if cand not in free:
                return cand

    def walk(f: Formula, env: dict[str, str]) -> Formula:
        if isinstance(f, Mem):
            return Mem(_rename_term(f.t1, env), _rename_term(f.t2, env))
        if isinstance(f, Eq):
            return Eq(_rename_term(f.t1, env), _rename_term(f.t2, env))
        if isinstance(f, Pred):
            return Pred(f.name, [_rename_term(a, env) for a in f.args])
        if isinstance(f, Not):
            return Not(walk(f.body, env))
        if isinstance(f, Or):
            return Or(walk(f.left, env), walk(f.right, env))
        if isinstance(f, Exists):
            new = next_name()
            inner = dict(env)
            inner[f.var] = new
            return Exists(new, walk(f.body, inner))
        raise SyntaxToolError(f"not a formula: {f!r}")

    return walk(phi, {})


def _rename_term(t: Term, env: dict[str, str]) -> Term:
    if isinstance(t, Var) and t.name in env:
        return Var(env[t.name])
    return t


def sim_equiv(
    p0: tuple[Formula, Mapping[str, HFSet]],
    p1: tuple[Formula, Mapping[str, HFSet]],
) -> bool:
    """Same sentence modulo the free variables: the total assignments close the
    two formulas to the same instance (after canonical binder renaming)."""
    closed = []
    for phi, alpha in (p0, p1):
        if set(alpha) != set(phi.free_vars):
            raise AssignmentDomainError(
                f"assignment domain {sorted(alpha)} is not exactly the free "
                f"variables {sorted(phi.free_vars)}"
            )
        closed.append(canonical_bound(close(phi, alpha)))
    return closed[0] == closed[1]


# ---------------------------------------------------------------------------
# HF coding of formulas


_TAG_VAR, _TAG_CONST, _TAG_MEM, _TAG_EQ, _TAG_NOT, _TAG_OR, _TAG_EX = (
    nat(i) for i in range(7)
)


def _name_set(name: str) -> HFSet:
    return decode(int.from_bytes(name.encode("utf-8"), "big"))


def _name_from_set(h: HFSet) -> str:
    code = try_code(h)
    if code is None or code <= 0:
        raise DecodeError("variable-name component does not decode")
    data = code.to_bytes((code.bit_length() + 7) // 8, "big")
    try:
        name = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError("variable-name component is not UTF-8") from exc
    if not _valid_var(name):
        raise DecodeError(f"decoded name {name!r} is not a variable")
    return name


def term_code(t: Term) -> HFSet:
    if isinstance(t, Var):
        return kuratowski(_TAG_VAR, _name_set(t.name))
    if isinstance(t, Const):
        return kuratowski(_TAG_CONST, t.value)
    raise SyntaxToolError(f"not a term: {t!r}")


def formula_code(phi: Formula) -> HFSet:
    """The hereditarily finite set coding φ (predicate atoms have no code)."""
    memo: dict[int, HFSet] = {}

    def enc(f: Formula) -> HFSet:
        found = memo.get(id(f))
        if found is not None:
            return found
        if isinstance(f, Mem):
            out = kuratowski(_TAG_MEM, kuratowski(term_code(f.t1), term_code(f.t2)))
        elif isinstance(f, Eq):
            out = kuratowski(_TAG_EQ, kuratowski(term_code(f.t1), term_code(f.t2)))
        elif isinstance(f, Not):
            out = kuratowski(_TAG_NOT, enc(f.body))
        elif isinstance(f, Or):
            out = kuratowski(_TAG_OR, kuratowski(enc(f.left), enc(f.right)))
        elif isinstance(f, Exists):
            out = kuratowski(
                _TAG_EX, kuratowski(_name_set(f.var), enc(f.body))
            )
        elif isinstance(f, Pred):
            raise SyntaxToolError("predicate atoms have no set code")
        else:
            raise SyntaxToolError(f"not a formula: {f!r}")
        memo[id(f)] = out
        return out

    return enc(phi)


def _split_tagged(h: HFSet) -> tuple[int, HFSet]:
    parts = kur_split(h)
    if parts is None:
        raise DecodeError("not a tagged pair")
    tag = nat_value(parts[0])
    if tag is None or tag > 6:
        raise DecodeError("unknown tag")
    return tag, parts[1]


def decode_term(h: HFSet) -> Term:
    tag, rest = _split_tagged(h)
    if tag == 0:
        return Var(_name_from_set(rest))
    if tag == 1:
        return Const(rest)
    raise DecodeError(f"tag {tag} is not a term tag")


def decode_formula(h: HFSet) -> Formula:
    tag, rest = _split_tagged(h)
    if tag in (2, 3):
        parts = kur_split(rest)
        if parts is None:
            raise DecodeError("atom payload is not a pair")
        t1, t2 = decode_term(parts[0]), decode_term(parts[1])
        return Mem(t1, t2) if tag == 2 else Eq(t1, t2)
    if tag == 4:
        return Not(decode_formula(rest))
    if tag == 5:
        parts = kur_split(rest)
        if parts is None:
            raise DecodeError("disjunction payload is not a pair")
        return Or(decode_formula(parts[0]), decode_formula(parts[1]))
    if tag == 6:
        parts = kur_split(rest)
        if parts is None:
            raise DecodeError("quantifier payload is not a pair")
        return Exists(_name_from_set(parts[0]), decode_formula(parts[1]))
    raise DecodeError(f"tag {tag} is not a formula tag")
