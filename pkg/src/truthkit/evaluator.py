"""Tarskian satisfaction over finite structures.

Two in-package evaluation routes:

* fast mode — formulas compile to flat node-table programs run by the
  compiled kernel (truthkit._kernel, built from Cython) when it is available
  and by the pure-Python VM (truthkit._satvm) otherwise; short-circuit
  disjunction, early-exit quantifiers, stable-node memoization, step budget.
  Set TK_PURE_PYTHON=1 to refuse the compiled kernel.
* oracle mode — direct recursion over the formula tree following the
  satisfaction clauses literally: both disjuncts evaluated under restricted
  assignments, quantifiers swept in full, no memoization.

Plus elementary-diagram views and the stage-reflection explorer.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from . import _satvm
from .errors import (
    ArityError,
    AssignmentDomainError,
    ConstantDenotationError,
    StageLimitError,
    TruthkitError,
)
from .hfset import FinStructure, HFSet, decode, hfset, stage, stage_sets
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
    all_names,
    fresh_var,
    relativize,
    var_key,
)

try:  # compiled kernel is optional
    from . import _kernel  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - build-environment dependent
    _kernel = None

__all__ = [
    "DEFAULT_BUDGET",
    "kernel_available",
    "sat",
    "oracle_sat",
    "diagram",
    "TruthClassView",
    "reflects",
    "least_reflecting",
    "compile_program",
    "Program",
    "constants_of",
]

DEFAULT_BUDGET = 10**8


def kernel_available() -> bool:
    return _kernel is not None


def _force_python() -> bool:
    return os.environ.get("TK_PURE_PYTHON", "") not in ("", "0")


# ---------------------------------------------------------------------------
# Compilation to node tables


@dataclass
class Program:
    kinds: list[int]
    aa: list[int]
    bb: list[int]
    root: int
    slot_names: tuple[str, ...]
    consts: tuple[HFSet, ...]
    stable: list[bool]
    preds: tuple[tuple[str, tuple[int, ...]], ...]
    has_pred: bool
    _np_cache: dict = field(default_factory=dict, repr=False)

    def numpy_tables(self):
        cached = self._np_cache.get("tables")
        if cached is None:
            import numpy

            cached = (
                numpy.array(self.kinds, dtype=numpy.int32),
                numpy.array(self.aa, dtype=numpy.int32),
                numpy.array(self.bb, dtype=numpy.int32),
                numpy.array(
                    [1 if s else 0 for s in self.stable], dtype=numpy.int8
                ),
            )
            self._np_cache["tables"] = cached
        return cached


_program_cache: dict[Formula, Program] = {}


def compile_program(phi: Formula) -> Program:
    cached = _program_cache.get(phi)
    if cached is not None:
        return cached

    kinds: list[int] = []
    aa: list[int] = []
    bb: list[int] = []
    node_formulas: list[Formula] = []
    index: dict[int, int] = {}
    slots: dict[str, int] = {}
    consts: dict[HFSet, int] = {}
    preds: list[tuple[str, tuple[int, ...]]] = []
    binders: set[str] = set()

    def slot_of(name: str) -> int:
        s = slots.get(name)
        if s is None:
            s = slots[name] = len(slots)
        return s

    def term_op(t: Term) -> int:
        # slots are non-negative; constants provisionally negative, fixed below
        if isinstance(t, Var):
            return slot_of(t.name)
        if isinstance(t, Const):
            j = consts.get(t.value)
            if j is None:
                j = consts[t.value] = len(consts)
            return -(j + 1)
        raise TruthkitError(f"not a term: {t!r}")

    def emit(kind: int, a: int, b: int, f: Formula) -> int:
        kinds.append(kind)
        aa.append(a)
        bb.append(b)
        node_formulas.append(f)
        return len(kinds) - 1

    def walk(f: Formula) -> int:
        found = index.get(id(f))
        if found is not None:
            return found
        if isinstance(f, Eq):
            i = emit(_satvm.KIND_EQ, term_op(f.t1), term_op(f.t2), f)
        elif isinstance(f, Mem):
            i = emit(_satvm.KIND_MEM, term_op(f.t1), term_op(f.t2), f)
        elif isinstance(f, Not):
            i = emit(_satvm.KIND_NOT, walk(f.body), 0, f)
        elif isinstance(f, Or):
            i = emit(_satvm.KIND_OR, walk(f.left), walk(f.right), f)
        elif isinstance(f, Exists):
            binders.add(f.var)
            body = walk(f.body)
            i = emit(_satvm.KIND_EX, slot_of(f.var), body, f)
        elif isinstance(f, Pred):
            preds.append((f.name, tuple(term_op(a) for a in f.args)))
            i = emit(_satvm.KIND_PRED, len(preds) - 1, 0, f)
        else:
            raise TruthkitError(f"not a formula: {f!r}")
        index[id(f)] = i
        return i

    root = walk(phi)
    nslots = len(slots)

    def fix(op: int) -> int:
        return op if op >= 0 else nslots + (-op - 1)

    for i, k in enumerate(kinds):
        if k in (_satvm.KIND_EQ, _satvm.KIND_MEM):
            aa[i] = fix(aa[i])
            bb[i] = fix(bb[i])
    fixed_preds = tuple(
        (name, tuple(fix(op) for op in ops)) for name, ops in preds
    )
    # a node is stable (memoizable for a whole call) when none of its free
    # variables is bound anywhere in the program
    stable = [not (f.free_vars & binders) for f in node_formulas]

    program = Program(
        kinds=kinds,
        aa=aa,
        bb=bb,
        root=root,
        slot_names=tuple(slots),
        consts=tuple(consts),
        stable=stable,
        preds=fixed_preds,
        has_pred=bool(fixed_preds),
    )
    if len(_program_cache) > 50_000:
        _program_cache.clear()
    _program_cache[phi] = program
    return program


# ---------------------------------------------------------------------------
# Public satisfaction API


def constants_of(phi: Formula) -> list[HFSet]:
    """Constant values occurring in φ (deduplicated, first-occurrence order)."""
    out: dict[HFSet, None] = {}

    def walk_term(t: Term) -> None:
        if isinstance(t, Const):
            out.setdefault(t.value)

    seen: set[int] = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if id(f) in seen:
            continue
        seen.add(id(f))
        if isinstance(f, (Mem, Eq)):
            walk_term(f.t1)
            walk_term(f.t2)
        elif isinstance(f, Pred):
            for a in f.args:
                walk_term(a)
        elif isinstance(f, Not):
            stack.append(f.body)
        elif isinstance(f, Or):
            stack.append(f.left)
            stack.append(f.right)
        elif isinstance(f, Exists):
            stack.append(f.body)
    return list(out)


def _normalize_assignment(
    m: FinStructure, phi: Formula, alpha: Mapping[str, HFSet | int] | None
) -> dict[str, HFSet]:
    alpha = dict(alpha or {})
    for k, v in alpha.items():
        if isinstance(v, bool) or not isinstance(v, (HFSet, int)):
            raise AssignmentDomainError(
                f"value for {k!r} must be an HF set or an Ackermann code"
            )
        if isinstance(v, int):
            alpha[k] = decode(v)
    if set(alpha) != set(phi.free_vars):
        raise AssignmentDomainError(
            f"assignment domain {sorted(alpha)} != free variables "
            f"{sorted(phi.free_vars)}"
        )
    for k, v in alpha.items():
        if v not in m.universe:
            raise ConstantDenotationError(
                f"assignment value for {k!r} is not an element of {m.name}"
            )
    return alpha  # type: ignore[return-value]


def _check_constants(m: FinStructure, phi: Formula) -> None:
    for c in constants_of(phi):
        if c not in m.universe:
            raise ConstantDenotationError(
                f"constant {c!r} does not denote an element of {m.name}"
            )


def sat(
    m: FinStructure,
    phi: Formula,
    alpha: Mapping[str, HFSet | int] | None = None,
    mode: str = "fast",
    budget: int | None = None,
) -> bool:
    """Does m satisfy φ under α?  α's domain must be exactly freeVars(φ).

    Modes: "fast" (compiled kernel when available, else Python VM),
    "vm-python", "vm-kernel", "oracle" (literal clause-by-clause recursion).
    """
    alpha = _normalize_assignment(m, phi, alpha)
    total = DEFAULT_BUDGET if budget is None else budget
    if mode == "oracle":
        _check_constants(m, phi)
        return _oracle(m, phi, alpha, [total])
    if mode not in ("fast", "vm-python", "vm-kernel"):
        raise TruthkitError(f"unknown evaluation mode {mode!r}")

    program = compile_program(phi)
    const_ids = []
    for c in program.consts:
        idx = m.index_of(c)
        if idx is None:
            raise ConstantDenotationError(
                f"constant {c!r} does not denote an element of {m.name}"
            )
        const_ids.append(idx)
    env = [-1] * len(program.slot_names)
    for name, value in alpha.items():
        try:
            s = program.slot_names.index(name)
        except ValueError:  # pragma: no cover - free vars always have slots
            continue
        env[s] = m.index_of(value)

    use_kernel = False
    if mode == "vm-kernel":
        if _kernel is None:
            raise TruthkitError("compiled kernel is not available")
        if program.has_pred:
            raise TruthkitError("compiled kernel does not evaluate predicates")
        use_kernel = True
    elif mode == "fast":
        use_kernel = (
            _kernel is not None and not program.has_pred and not _force_python()
        )

    if use_kernel:
        import numpy

        kinds, paa, pbb, stable = program.numpy_tables()
        indptr, members = m.membership_csr()
        return _kernel.run(
            kinds,
            paa,
            pbb,
            program.root,
            len(program.slot_names),
            stable,
            numpy.array(const_ids, dtype=numpy.int32),
            indptr,
            members,
            len(m),
            numpy.array(env, dtype=numpy.int32),
            numpy.array([total], dtype=numpy.int64),
            numpy.full(len(program.kinds), -1, dtype=numpy.int8),
        )

    pred_eval = None
    if program.has_pred:
        nslots = len(program.slot_names)

        def pred_eval(desc: int, env_now) -> bool:
            name, ops = program.preds[desc]
            args = tuple(
                m.elements[env_now[op]]
                if op < nslots
                else program.consts[op - nslots]
                for op in ops
            )
            return m.predicate_holds(name, args)

    return _satvm.run(
        program.kinds,
        program.aa,
        program.bb,
        program.root,
        len(program.slot_names),
        program.stable,
        const_ids,
        m.member_indices(),
        len(m),
        env,
        [total],
        pred_eval,
    )


# ---------------------------------------------------------------------------
# Oracle mode: the satisfaction clauses, literally


def _oracle(
    m: FinStructure, phi: Formula, alpha: dict[str, HFSet], cell: list[int]
) -> bool:
    cell[0] -= 1
    if cell[0] < 0:
        from .errors import BudgetExceededError

        raise BudgetExceededError("evaluation step budget exhausted")
    if isinstance(phi, Mem):
        return _oracle_value(phi.t1, alpha) in _oracle_value(phi.t2, alpha)
    if isinstance(phi, Eq):
        return _oracle_value(phi.t1, alpha) == _oracle_value(phi.t2, alpha)
    if isinstance(phi, Pred):
        return m.predicate_holds(
            phi.name, tuple(_oracle_value(t, alpha) for t in phi.args)
        )
    if isinstance(phi, Not):
        return not _oracle(m, phi.body, alpha, cell)
    if isinstance(phi, Or):
        left_alpha = {v: alpha[v] for v in phi.left.free_vars}
        right_alpha = {v: alpha[v] for v in phi.right.free_vars}
        left = _oracle(m, phi.left, left_alpha, cell)
        right = _oracle(m, phi.right, right_alpha, cell)
        return left or right
    if isinstance(phi, Exists):
        body = phi.body
        keep = {v: alpha[v] for v in body.free_vars if v != phi.var}
        found = False
        for element in m.elements:
            modified = dict(keep)
            if phi.var in body.free_vars:
                modified[phi.var] = element
            found = _oracle(m, body, modified, cell) or found
        return found
    raise TruthkitError(f"not a formula: {phi!r}")


def _oracle_value(t: Term, alpha: dict[str, HFSet]) -> HFSet:
    if isinstance(t, Var):
        return alpha[t.name]
    if isinstance(t, Const):
        return t.value
    raise TruthkitError(f"not a term: {t!r}")


def oracle_sat(
    m: FinStructure,
    phi: Formula,
    alpha: Mapping[str, HFSet | int] | None = None,
    budget: int | None = None,
) -> bool:
    return sat(m, phi, alpha, mode="oracle", budget=budget)


# ---------------------------------------------------------------------------
# Elementary diagram views


@dataclass(frozen=True)
class TruthClassView:
    """A queryable truth set over a structure, tagged with a depth bound.

    ``contains`` defers to satisfaction (any depth); the bound governs
    enumeration. with_constants=True is the elementary-diagram flavour ED(M);
    False restricts to constant-free sentences Th(M).
    """

    structure: FinStructure
    depth_bound: int
    with_constants: bool = True
    mode: str = "fast"
    budget: int | None = None

    def contains(self, sigma: Formula) -> bool:
        if not sigma.is_sentence:
            raise ArityError("diagram membership is for sentences only")
        consts = constants_of(sigma)
        if not self.with_constants and consts:
            return False
        if any(c not in self.structure.universe for c in consts):
            return False
        return sat(self.structure, sigma, {}, self.mode, self.budget)

    def __contains__(self, sigma: Formula) -> bool:
        return self.contains(sigma)

    def enumerate(self, depth: int | None = None) -> Iterator[Formula]:
        """True sentences of depth ≤ bound (or the override), streamed."""
        from .pools import sentences_upto

        bound = self.depth_bound if depth is None else depth
        consts = tuple(self.structure.elements) if self.with_constants else ()
        for sigma in sentences_upto(bound, consts):
            if sat(self.structure, sigma, {}, self.mode, self.budget):
                yield sigma

    def __iter__(self) -> Iterator[Formula]:
        return self.enumerate()


def diagram(
    m: FinStructure,
    depth_bound: int,
    with_constants: bool = True,
    mode: str = "fast",
    budget: int | None = None,
) -> TruthClassView:
    if depth_bound < 1:
        raise ArityError("depth bound must be at least 1")
    return TruthClassView(m, depth_bound, with_constants, mode, budget)


# ---------------------------------------------------------------------------
# Reflection


def reflects(
    n: int,
    a: int,
    phi: Formula,
    budget: int | None = None,
    mode: str = "fast",
) -> bool:
    """Does stage(a) reflect φ from stage(n)?

    True iff every assignment of φ's free variables into stage(a) gives the
    same verdict in stage(n) and stage(a). The stage(a) verdict is computed
    both directly and via relativization evaluated inside stage(n); the two
    routes must agree (internal cross-check).
    """
    if not 1 <= a <= n:
        raise StageLimitError(f"need 1 ≤ a ≤ N, got a={a}, N={n}")
    small_sets = stage_sets(a)  # validates the cap
    if constants_of(phi):
        raise ArityError("reflection is for constant-free formulas")
    if compile_program(phi).has_pred:
        raise ArityError("reflection is for pure membership/equality formulas")
    big = stage(n)
    small = stage(a)
    fv = sorted(phi.free_vars, key=var_key)

    rel = None
    rel_var = None
    if a < n:
        rel_var = fresh_var(all_names(phi), base="w")
        rel = relativize(phi, rel_var)
        small_as_element = hfset(small_sets)

    out = True
    for combo in itertools.product(small_sets, repeat=len(fv)):
        alpha = dict(zip(fv, combo))
        in_small = sat(small, phi, alpha, mode, budget)
        if rel is not None:
            rel_alpha = dict(alpha)
            rel_alpha[rel_var] = small_as_element
            via_rel = sat(big, rel, rel_alpha, mode, budget)
            if via_rel != in_small:
                raise TruthkitError(
                    "internal cross-check failed: relativized evaluation "
                    "disagrees with direct substructure evaluation"
                )
        if sat(big, phi, alpha, mode, budget) != in_small:
            out = False
            break
    return out


def least_reflecting(
    n: int,
    phi: Formula,
    a0: int = 0,
    budget: int | None = None,
    mode: str = "fast",
) -> int | None:
    """Least a with a0 < a ≤ N reflecting φ, or None."""
    if not 0 <= a0 <= n:
        raise StageLimitError(f"need 0 ≤ a0 ≤ N, got a0={a0}, N={n}")
    for a in range(a0 + 1, n + 1):
        if reflects(n, a, phi, budget, mode):
            return a
    return None
