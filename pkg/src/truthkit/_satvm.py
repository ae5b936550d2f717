"""Pure-Python evaluation VM.

Interprets compiled formula programs (see evaluator.compile_program) over a
finite structure. Semantics mirror the compiled kernel exactly: short-circuit
disjunction, ascending-order quantifier search with early exit, per-call
memoization of stable nodes (nodes none of whose free variables are rebound
anywhere in the program), and a hard step budget.
"""
from __future__ import annotations

from .errors import BudgetExceededError

KIND_EQ = 0
KIND_MEM = 1
KIND_NOT = 2
KIND_OR = 3
KIND_EX = 4
KIND_PRED = 5


def run(
    kinds,
    aa,
    bb,
    root: int,
    nslots: int,
    stable,
    const_ids,
    member_sets,
    nelems: int,
    env,
    budget_cell,
    pred_eval=None,
) -> bool:
    """Evaluate the program rooted at ``root``; env is mutated in place."""
    memo: dict[int, bool] = {}

    def ev(i: int) -> bool:
        budget_cell[0] -= 1
        if budget_cell[0] < 0:
            raise BudgetExceededError("evaluation step budget exhausted")
        k = kinds[i]
        if k == KIND_EQ:
            a, b = aa[i], bb[i]
            va = env[a] if a < nslots else const_ids[a - nslots]
            vb = env[b] if b < nslots else const_ids[b - nslots]
            return va == vb
        if k == KIND_MEM:
            a, b = aa[i], bb[i]
            va = env[a] if a < nslots else const_ids[a - nslots]
            vb = env[b] if b < nslots else const_ids[b - nslots]
            return va in member_sets[vb]
        if k == KIND_NOT:
            return not evm(aa[i])
        if k == KIND_OR:
            return evm(aa[i]) or evm(bb[i])
        if k == KIND_EX:
            slot, body = aa[i], bb[i]
            saved = env[slot]
            found = False
            for m in range(nelems):
                env[slot] = m
                if evm(body):
                    found = True
                    break
            env[slot] = saved
            return found
        if k == KIND_PRED:
            if pred_eval is None:
                raise RuntimeError("predicate atom in a predicate-free program")
            return pred_eval(aa[i], env)
        raise RuntimeError(f"bad node kind {k}")

    def evm(i: int) -> bool:
        if stable[i]:
            v = memo.get(i)
            if v is None:
                v = ev(i)
                memo[i] = v
            return v
        return ev(i)

    return evm(root)
