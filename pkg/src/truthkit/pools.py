"""Formula pools: exhaustive enumerators, random generators, and a vectorized
truth-table evaluator.

The enumerators are canonical and deterministic: formulas over a fixed
variable tuple and constant tuple are produced in a reproducible order, levels
below the top are cached, and the top level can be streamed so million-formula
sweeps never hold the whole pool in memory.

``eval_table`` is an independent evaluation route (numpy broadcasting over
assignment grids) used to cross-check the recursive evaluators and to
deduplicate scheme templates by semantic behavior.
"""
from __future__ import annotations

import itertools
import random
from typing import Iterable, Iterator, Sequence

import numpy

from .hfset import EMPTY, FinStructure, HFSet
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
    fresh_var,
)

__all__ = [
    "atoms",
    "exact_formulas",
    "formulas_upto",
    "count_upto",
    "sentences_upto",
    "random_formula",
    "random_sentence",
    "eval_table",
    "clear_pool_cache",
]


def _terms(variables: Sequence[str], constants: Sequence[HFSet]) -> list[Term]:
    return [Var(v) for v in variables] + [Const(c) for c in constants]


def atoms(
    variables: Sequence[str], constants: Sequence[HFSet] = ()
) -> list[Formula]:
    """All membership and equality atoms over the given terms."""
    ts = _terms(variables, constants)
    out: list[Formula] = []
    for t1 in ts:
        for t2 in ts:
            out.append(Mem(t1, t2))
    for t1 in ts:
        for t2 in ts:
            out.append(Eq(t1, t2))
    return out


_pool_cache: dict[tuple, list[Formula]] = {}


def clear_pool_cache() -> None:
    _pool_cache.clear()


def _fresh_binder(variables: tuple[str, ...]) -> str:
    return fresh_var(variables, base="w")


def exact_formulas(
    depth: int,
    variables: tuple[str, ...],
    constants: tuple[HFSet, ...] = (),
) -> list[Formula]:
    """All formulas of exactly this depth with free variables ⊆ ``variables``.

    Quantifiers may bind any listed variable or one fresh binder, so the pool
    is closed under the shapes the depth budget allows. Cached per key.
    """
    key = (depth, variables, constants)
    found = _pool_cache.get(key)
    if found is not None:
        return found
    out = list(_exact_formulas_iter(depth, variables, constants))
    _pool_cache[key] = out
    return out


def _exact_formulas_iter(
    depth: int,
    variables: tuple[str, ...],
    constants: tuple[HFSet, ...],
) -> Iterator[Formula]:
    if depth < 1:
        return
    if depth == 1:
        yield from atoms(variables, constants)
        return
    for f in exact_formulas(depth - 1, variables, constants):
        yield Not(f)
    # disjunctions of maximum child depth = depth - 1
    lower: list[list[Formula]] = [
        exact_formulas(d, variables, constants) for d in range(1, depth)
    ]
    top = lower[-1]
    rest = [f for level in lower[:-1] for f in level]
    for a in top:
        for b in top:
            yield Or(a, b)
    for a in top:
        for b in rest:
            yield Or(a, b)
    for a in rest:
        for b in top:
            yield Or(a, b)
    # quantifiers: body has depth - 2, over the variables plus the binder
    if depth >= 3:
        binders = list(variables) + [_fresh_binder(variables)]
        for u in binders:
            inner_vars = variables if u in variables else variables + (u,)
            for body in exact_formulas(depth - 2, inner_vars, constants):
                yield Exists(u, body)


def formulas_upto(
    depth: int,
    variables: tuple[str, ...],
    constants: tuple[HFSet, ...] = (),
    stream_top: bool = False,
) -> Iterator[Formula]:
    """All formulas of depth ≤ ``depth`` (free variables ⊆ ``variables``).

    With ``stream_top`` the deepest level is generated lazily and not cached —
    use this for million-formula sweeps.
    """
    for d in range(1, depth):
        yield from exact_formulas(d, variables, constants)
    if depth >= 1:
        if stream_top:
            yield from _exact_formulas_iter(depth, variables, constants)
        else:
            yield from exact_formulas(depth, variables, constants)


def count_upto(
    depth: int,
    variables: tuple[str, ...],
    constants: tuple[HFSet, ...] = (),
) -> int:
    """Pool size without materializing the top level beyond counting."""
    total = 0
    for _ in formulas_upto(depth, variables, constants, stream_top=True):
        total += 1
    return total


def sentences_upto(
    depth: int,
    constants: tuple[HFSet, ...],
    stream_top: bool = True,
) -> Iterator[Formula]:
    """All sentences (no free variables) of depth ≤ depth over the constants."""
    return formulas_upto(depth, (), constants, stream_top=stream_top)


# ---------------------------------------------------------------------------
# Random generation (seeded; used by round-trip sweeps and the fuzzer)


def random_formula(
    rng: random.Random,
    max_depth: int,
    variables: Sequence[str],
    constants: Sequence[HFSet] = (),
) -> Formula:
    """A random formula of depth ≤ max_depth over the given name/constant pool."""
    terms = _terms(variables, constants)
    if not terms:
        terms = [Const(EMPTY)]

    def rand_term() -> Term:
        return rng.choice(terms)

    def rand_atom() -> Formula:
        if rng.random() < 0.5:
            return Mem(rand_term(), rand_term())
        return Eq(rand_term(), rand_term())

    def gen(budget: int) -> Formula:
        options = ["atom"]
        if budget >= 2:
            options += ["not", "or"]
        if budget >= 3 and variables:
            options += ["exists", "exists"]
        pick = rng.choice(options)
        if pick == "atom":
            return rand_atom()
        if pick == "not":
            return Not(gen(budget - 1))
        if pick == "or":
            return Or(gen(budget - 1), gen(budget - 1))
        return Exists(rng.choice(list(variables)), gen(budget - 2))

    return gen(max_depth)


def random_sentence(
    rng: random.Random,
    max_depth: int,
    variables: Sequence[str],
    constants: Sequence[HFSet],
) -> Formula:
    """A random closed instance: a random formula with free slack closed off."""
    from .syntax import close

    phi = random_formula(rng, max_depth, variables, constants)
    alpha = {v: rng.choice(list(constants)) for v in phi.free_vars}
    return close(phi, alpha)


# ---------------------------------------------------------------------------
# Vectorized truth tables


def _mem_eq_matrices(m: FinStructure) -> tuple[numpy.ndarray, numpy.ndarray]:
    cached = m._cache.get("tables")
    if cached is None:
        n = len(m)
        mem = numpy.zeros((n, n), dtype=bool)
        for j, row in enumerate(m.member_indices()):
            for i in row:
                mem[i, j] = True
        eq = numpy.eye(n, dtype=bool)
        cached = (mem, eq)
        m._cache["tables"] = cached
    return cached


def eval_table(
    m: FinStructure, phi: Formula, var_order: tuple[str, ...]
) -> numpy.ndarray:
    """Truth table of φ over all assignments of ``var_order`` into m.

    Returns a bool array of shape (|m|,)*len(var_order); axis i varies the
    value of var_order[i] over m.elements in canonical order. Every free
    variable of φ must be listed. Fully vectorized; an independent route from
    the recursive evaluators.
    """
    missing = phi.free_vars - set(var_order)
    if missing:
        raise ValueError(f"table order misses free variables {sorted(missing)}")
    mem, eq = _mem_eq_matrices(m)
    n = len(m)

    def axis_index(order: tuple[str, ...], name: str) -> int:
        # innermost (rightmost) occurrence wins: quantifiers shadow outward
        return len(order) - 1 - tuple(reversed(order)).index(name)

    def term_grid(t: Term, order: tuple[str, ...]) -> numpy.ndarray:
        k = len(order)
        if isinstance(t, Var):
            pos = axis_index(order, t.name)
            shape = [1] * k
            shape[pos] = n
            return numpy.arange(n).reshape(shape)
        idx = m.index_of(t.value)
        if idx is None:
            from .errors import ConstantDenotationError

            raise ConstantDenotationError(
                f"constant {t.value!r} is not an element of {m.name}"
            )
        return numpy.array(idx)

    def rec(f: Formula, order: tuple[str, ...]) -> numpy.ndarray:
        if isinstance(f, Mem):
            return mem[term_grid(f.t1, order), term_grid(f.t2, order)]
        if isinstance(f, Eq):
            return eq[term_grid(f.t1, order), term_grid(f.t2, order)]
        if isinstance(f, Pred):
            return _pred_grid(m, f, order)
        if isinstance(f, Not):
            return ~rec(f.body, order)
        if isinstance(f, Or):
            return rec(f.left, order) | rec(f.right, order)
        if isinstance(f, Exists):
            inner = order + (f.var,)
            body = rec(f.body, inner)
            body = numpy.broadcast_to(body, (n,) * len(inner))
            return body.any(axis=-1)
        raise TypeError(f"not a formula: {f!r}")

    out = rec(phi, var_order)
    return numpy.broadcast_to(out, (n,) * len(var_order)).copy()


def _pred_grid(
    m: FinStructure, f: Pred, order: tuple[str, ...]
) -> numpy.ndarray:
    interp = m.predicates.get(f.name)
    if interp is None:
        from .errors import ConstantDenotationError

        raise ConstantDenotationError(f"structure interprets no predicate {f.name!r}")
    n = len(m)
    arity = len(f.args)
    table = numpy.zeros((n,) * arity, dtype=bool)
    if callable(interp):
        for combo in itertools.product(range(n), repeat=arity):
            if interp(*(m.elements[i] for i in combo)):
                table[combo] = True
    else:
        for tup in interp:
            idxs = tuple(m.index_of(v) for v in tup)
            if len(tup) == arity and all(i is not None for i in idxs):
                table[idxs] = True
    if arity == 0:
        return table  # 0-d bool

    k = len(order)

    def grid(t: Term) -> numpy.ndarray:
        if isinstance(t, Var):
            pos = len(order) - 1 - tuple(reversed(order)).index(t.name)
            shape = [1] * k
            shape[pos] = n
            return numpy.arange(n).reshape(shape)
        idx = m.index_of(t.value)
        if idx is None:
            from .errors import ConstantDenotationError

            raise ConstantDenotationError(
                f"constant {t.value!r} is not an element of {m.name}"
            )
        return numpy.array(idx)

    return table[tuple(grid(a) for a in f.args)]
