# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel.

Same program format and semantics as the pure-Python VM in _satvm.py:
short-circuit disjunction, ascending quantifier search with early exit,
per-call memoization of stable nodes, hard step budget. Predicate atoms are
not supported here; the evaluator routes programs containing them to the
Python VM.
"""

from .errors import BudgetExceededError

cdef int KIND_EQ = 0
cdef int KIND_MEM = 1
cdef int KIND_NOT = 2
cdef int KIND_OR = 3
cdef int KIND_EX = 4


cdef inline bint _member(int x, int y, int[::1] indptr, int[::1] members) noexcept:
    cdef int lo = indptr[y]
    cdef int hi = indptr[y + 1]
    cdef int mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if members[mid] < x:
            lo = mid + 1
        elif members[mid] > x:
            hi = mid
        else:
            return True
    return False


cdef int _ev(
    int i,
    int[::1] kinds,
    int[::1] aa,
    int[::1] bb,
    int nslots,
    signed char[::1] stable,
    signed char[::1] memo,
    int[::1] const_ids,
    int[::1] indptr,
    int[::1] members,
    int nelems,
    int[::1] env,
    long long[::1] budget,
) except -9:
    cdef int k, a, b, va, vb, m, saved, out
    budget[0] -= 1
    if budget[0] < 0:
        raise BudgetExceededError("evaluation step budget exhausted")
    if stable[i] and memo[i] >= 0:
        return memo[i]
    k = kinds[i]
    if k == KIND_EQ or k == KIND_MEM:
        a = aa[i]
        b = bb[i]
        va = env[a] if a < nslots else const_ids[a - nslots]
        vb = env[b] if b < nslots else const_ids[b - nslots]
        if k == KIND_EQ:
            out = 1 if va == vb else 0
        else:
            out = 1 if _member(va, vb, indptr, members) else 0
    elif k == KIND_NOT:
        out = 1 - _ev(aa[i], kinds, aa, bb, nslots, stable, memo, const_ids,
                      indptr, members, nelems, env, budget)
    elif k == KIND_OR:
        out = _ev(aa[i], kinds, aa, bb, nslots, stable, memo, const_ids,
                  indptr, members, nelems, env, budget)
        if not out:
            out = _ev(bb[i], kinds, aa, bb, nslots, stable, memo, const_ids,
                      indptr, members, nelems, env, budget)
    elif k == KIND_EX:
        a = aa[i]
        b = bb[i]
        saved = env[a]
        out = 0
        for m in range(nelems):
            env[a] = m
            if _ev(b, kinds, aa, bb, nslots, stable, memo, const_ids,
                   indptr, members, nelems, env, budget):
                out = 1
                break
        env[a] = saved
    else:
        raise RuntimeError(f"bad node kind {k}")
    if stable[i]:
        memo[i] = <signed char> out
    return out


def run(
    int[::1] kinds,
    int[::1] aa,
    int[::1] bb,
    int root,
    int nslots,
    signed char[::1] stable,
    int[::1] const_ids,
    int[::1] indptr,
    int[::1] members,
    int nelems,
    int[::1] env,
    long long[::1] budget,
    signed char[::1] memo,
):
    """Evaluate the program rooted at ``root``; env/memo are call-local."""
    return bool(_ev(root, kinds, aa, bb, nslots, stable, memo, const_ids,
                    indptr, members, nelems, env, budget))
