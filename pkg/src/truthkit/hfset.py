"""Hereditarily finite sets and finite membership structures.

Sets are interned: building the same set twice yields the same object, so
equality is cheap and sets can key dicts. The canonical element order is the
Ackermann order (x < y iff code(x) < code(y), where code(x) = sum of
2**code(y) over members y). That order is rank-stratified — every set of rank
r precedes every set of rank r+1 — which lets us compare deeply nested sets
without materializing their code integers, which grow as power towers of the
rank.
"""
from __future__ import annotations

import os
from functools import cmp_to_key
from typing import Callable, Iterable, Iterator, Mapping

from .errors import (
    CodeSizeError,
    ConstantDenotationError,
    CycleError,
    DecodeError,
    InputFormatError,
    NonExtensionalGraphError,
    StageLimitError,
)

__all__ = [
    "HFSet",
    "hfset",
    "EMPTY",
    "ackermann_code",
    "ackermann_code_mod",
    "try_code",
    "decode",
    "kuratowski",
    "kur_split",
    "nat",
    "nat_value",
    "stage_sets",
    "stage",
    "max_stage",
    "collapse",
    "FinStructure",
    "parse_structure",
    "render_structure",
]

# Sets whose Ackermann code needs more bits than this are treated as having
# no representable integer code (the structural set is still fine).
_CODE_BIT_GUARD = 1 << 22

_TOO_BIG = object()


class HFSet:
    """An interned hereditarily finite set.

    ``members`` is a tuple in ascending Ackermann order with no duplicates.
    Do not call the constructor directly; use :func:`hfset`.
    """

    __slots__ = ("members", "rank", "_member_set", "_hash", "_code", "__weakref__")

    members: tuple["HFSet", ...]
    rank: int

    def __init__(self, members: tuple["HFSet", ...]):
        self.members = members
        self.rank = 1 + max((m.rank for m in members), default=-1)
        self._member_set = frozenset(members)
        self._hash = hash(("HFSet", tuple(m._hash for m in members)))
        self._code = None

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, HFSet):
            return NotImplemented
        return self._hash == other._hash and self.members == other.members

    def __iter__(self) -> Iterator["HFSet"]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item: object) -> bool:
        return item in self._member_set

    def __repr__(self) -> str:
        code = try_code(self)
        if code is not None and code < (1 << 20):
            return f"HFSet(#{code})"
        return f"HFSet(rank={self.rank}, size={len(self.members)})"

    def __str__(self) -> str:
        return "{" + " ".join(str(m) for m in self.members) + "}"


def _ack_cmp(a: HFSet, b: HFSet) -> int:
    """Compare by Ackermann code without computing the codes.

    Rank decides first (codes are rank-stratified). At equal rank the codes
    are compared like binary numerals: scan members from largest down; the
    first position where they differ decides, and a strict prefix (fewer,
    all-matching high members) is the smaller set.
    """
    if a is b:
        return 0
    if a.rank != b.rank:
        return -1 if a.rank < b.rank else 1
    for x, y in zip(reversed(a.members), reversed(b.members)):
        c = _ack_cmp(x, y)
        if c:
            return c
    if len(a.members) != len(b.members):
        return -1 if len(a.members) < len(b.members) else 1
    return 0


_ACK_KEY = cmp_to_key(_ack_cmp)

_intern: dict[tuple[HFSet, ...], HFSet] = {}


def hfset(members: Iterable[HFSet] = ()) -> HFSet:
    """The canonical set with the given members (duplicates collapse)."""
    unique = sorted(set(members), key=_ACK_KEY)
    key = tuple(unique)
    found = _intern.get(key)
    if found is None:
        found = _intern[key] = HFSet(key)
    return found


EMPTY = hfset()


def ackermann_code(x: HFSet) -> int:
    """The Ackermann code of ``x`` (sum of 2**code(member)).

    Raises CodeSizeError when the integer would exceed the guard size —
    codes grow as power towers of the rank, so only shallow sets have one.
    """
    code = try_code(x)
    if code is None:
        raise CodeSizeError(
            f"Ackermann code of a rank-{x.rank} set exceeds the "
            f"{_CODE_BIT_GUARD}-bit guard"
        )
    return code


def try_code(x: HFSet) -> int | None:
    """``ackermann_code`` or None when the integer is over the guard size."""
    cached = x._code
    if cached is _TOO_BIG:
        return None
    if cached is not None:
        return cached
    total = 0
    for m in x.members:
        c = try_code(m)
        if c is None or c >= _CODE_BIT_GUARD:
            x._code = _TOO_BIG
            return None
        total += 1 << c
    x._code = total
    return total


def _euler_phi(m: int) -> int:
    phi, n, p = 1, m, 2
    while p * p <= n:
        if n % p == 0:
            pk = 1
            while n % p == 0:
                n //= p
                pk *= p
            phi *= pk - pk // p
        p += 1
    if n > 1:
        phi *= n - 1
    return phi


def ackermann_code_mod(x: HFSet, m: int) -> int:
    """``ackermann_code(x) % m`` computed without the full integer.

    Uses generalized Euler: for k >= log2(m), 2**k = 2**((k mod phi(m)) +
    phi(m)) mod m. The phi-chain shrinks fast, so this runs on sets whose
    codes are power towers.
    """
    if m <= 0:
        raise ValueError("modulus must be positive")
    if m == 1:
        return 0
    total = 0
    for y in x.members:
        c = try_code(y)
        if c is not None and c.bit_length() <= 64:
            total += pow(2, c, m)
        else:
            phi = _euler_phi(m)
            red = ackermann_code_mod(y, phi)
            total += pow(2, red + phi, m)
    return total % m


_decode_memo: dict[int, HFSet] = {}


def decode(n: int) -> HFSet:
    """The set whose Ackermann code is ``n``."""
    if n < 0:
        raise DecodeError(f"negative code {n}")
    found = _decode_memo.get(n)
    if found is not None:
        return found
    members = []
    rest, bit = n, 0
    while rest:
        if rest & 1:
            members.append(decode(bit))
        rest >>= 1
        bit += 1
    result = hfset(members)
    if n.bit_length() <= (1 << 16):
        _decode_memo[n] = result
    return result


def kuratowski(a: HFSet, b: HFSet) -> HFSet:
    """The ordered pair {{a}, {a, b}}."""
    return hfset([hfset([a]), hfset([a, b])])


def kur_split(p: HFSet) -> tuple[HFSet, HFSet] | None:
    """Invert :func:`kuratowski`; None when ``p`` is not an ordered pair."""
    if len(p.members) == 1:
        inner = p.members[0]
        if len(inner.members) == 1:
            a = inner.members[0]
            return (a, a)
        return None
    if len(p.members) == 2:
        first, second = p.members  # ascending order: the singleton is smaller
        if len(first.members) == 1 and len(second.members) == 2:
            a = first.members[0]
            if a in second:
                b = next(m for m in second.members if m is not a)
                return (a, b)
    return None


_nats: list[HFSet] = [EMPTY]


def nat(n: int) -> HFSet:
    """The von Neumann numeral for ``n``."""
    if n < 0:
        raise ValueError("numerals are non-negative")
    while len(_nats) <= n:
        prev = _nats[-1]
        _nats.append(hfset(list(prev.members) + [prev]))
    return _nats[n]


def nat_value(x: HFSet) -> int | None:
    """``n`` when ``x`` is the numeral for ``n``; otherwise None."""
    n = len(x.members)
    return n if nat(n) is x else None


# ---------------------------------------------------------------------------
# Cumulative stages


_HARD_STAGE_CAP = 5


def max_stage() -> int:
    """The largest supported stage index (TK_MAX_STAGE may lower it)."""
    cap = _HARD_STAGE_CAP
    env = os.environ.get("TK_MAX_STAGE")
    if env is not None:
        try:
            requested = int(env)
        except ValueError:
            raise StageLimitError(f"TK_MAX_STAGE={env!r} is not an integer")
        cap = min(cap, requested)
    return cap


_stage_cache: list[tuple[HFSet, ...]] = [()]


def stage_sets(n: int) -> tuple[HFSet, ...]:
    """All sets of rank < n, in Ackermann-code order (code == position)."""
    if n < 0:
        raise StageLimitError("stage index must be non-negative")
    if n > max_stage():
        raise StageLimitError(
            f"stage({n}) exceeds the cap of {max_stage()} "
            f"(2**65536 elements are out of reach beyond stage 5)"
        )
    while len(_stage_cache) <= n:
        prev = _stage_cache[-1]
        level = tuple(
            hfset([prev[i] for i in range(len(prev)) if mask >> i & 1])
            for mask in range(1 << len(prev))
        )
        _stage_cache.append(level)
    return _stage_cache[n]


def is_transitive(x: HFSet) -> bool:
    return all(m in x._member_set for member in x.members for m in member.members)


# ---------------------------------------------------------------------------
# Mostowski collapse


def collapse(
    nodes: Iterable[str], edges: Iterable[tuple[str, str]]
) -> dict[str, HFSet]:
    """Collapse an extensional acyclic membership digraph onto actual sets.

    An edge ``(a, b)`` declares that a's image is a member of b's image.
    Raises CycleError on a membership cycle and NonExtensionalGraphError when
    two distinct nodes would collapse to the same set (reporting the pair).
    """
    node_list = list(nodes)
    known = set(node_list)
    if len(known) != len(node_list):
        raise InputFormatError("duplicate node declared")
    children: dict[str, list[str]] = {n: [] for n in node_list}
    for a, b in edges:
        if a not in known or b not in known:
            missing = a if a not in known else b
            raise InputFormatError(f"edge references undeclared node {missing!r}")
        children[b].append(a)

    WHITE, GREY, BLACK = 0, 1, 2
    color = {n: WHITE for n in node_list}
    value: dict[str, HFSet] = {}
    for root in node_list:
        if color[root] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(root, 0)]
        color[root] = GREY
        while stack:
            node, i = stack[-1]
            if i < len(children[node]):
                stack[-1] = (node, i + 1)
                child = children[node][i]
                if color[child] == GREY:
                    tail = [n for n, _ in stack]
                    start = tail.index(child)
                    raise CycleError(tuple(tail[start:] + [child]))
                if color[child] == WHITE:
                    color[child] = GREY
                    stack.append((child, 0))
            else:
                stack.pop()
                color[node] = BLACK
                value[node] = hfset(value[c] for c in children[node])

    by_value: dict[HFSet, str] = {}
    for node in sorted(node_list):
        v = value[node]
        if v in by_value:
            raise NonExtensionalGraphError((by_value[v], node))
        by_value[v] = node
    return value


# ---------------------------------------------------------------------------
# Finite membership structures


class FinStructure:
    """A finite structure for the language of sets.

    Elements are actual hereditarily finite sets; the membership relation is
    real membership restricted to the universe, so every structure is
    extensional and well-founded by construction (structure files go through
    :func:`collapse` first). Optional named predicates interpret extra
    relation symbols, either as an explicit set of tuples or as a callable.
    """

    __slots__ = ("name", "elements", "universe", "stage_index", "predicates",
                 "_index", "_member_indices", "_csr", "_cache")

    def __init__(
        self,
        elements: Iterable[HFSet],
        name: str | None = None,
        stage_index: int | None = None,
        predicates: Mapping[str, frozenset[tuple[HFSet, ...]] | Callable[..., bool]]
        | None = None,
    ):
        elems = sorted(set(elements), key=_ACK_KEY)
        if not elems:
            raise InputFormatError("a structure needs at least one element")
        self.elements: tuple[HFSet, ...] = tuple(elems)
        self.universe: frozenset[HFSet] = frozenset(elems)
        self.name = name or f"structure[{len(elems)}]"
        self.stage_index = stage_index
        self.predicates = dict(predicates or {})
        self._index: dict[HFSet, int] | None = None
        self._member_indices: list[frozenset[int]] | None = None
        self._csr = None
        self._cache: dict = {}

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        if self.stage_index is not None:
            return f"FinStructure(stage({self.stage_index}))"
        return f"FinStructure({self.name}, size={len(self.elements)})"

    def index_of(self, value: HFSet) -> int | None:
        if self._index is None:
            self._index = {e: i for i, e in enumerate(self.elements)}
        return self._index.get(value)

    def member_indices(self) -> list[frozenset[int]]:
        """For each element, the indices of its members that lie in M."""
        if self._member_indices is None:
            self._member_indices = [
                frozenset(
                    idx
                    for m in e.members
                    if (idx := self.index_of(m)) is not None
                )
                for e in self.elements
            ]
        return self._member_indices

    def membership_csr(self):
        """Flattened, sorted member-index arrays for the compiled kernel."""
        if self._csr is None:
            import numpy

            rows = self.member_indices()
            indptr = numpy.zeros(len(rows) + 1, dtype=numpy.int32)
            for i, r in enumerate(rows):
                indptr[i + 1] = indptr[i] + len(r)
            flat = numpy.empty(int(indptr[-1]), dtype=numpy.int32)
            for i, r in enumerate(rows):
                flat[indptr[i] : indptr[i + 1]] = sorted(r)
            self._csr = (indptr, flat)
        return self._csr

    def predicate_holds(self, name: str, args: tuple[HFSet, ...]) -> bool:
        interp = self.predicates.get(name)
        if interp is None:
            raise ConstantDenotationError(
                f"structure interprets no predicate {name!r}"
            )
        if callable(interp):
            return bool(interp(*args))
        return args in interp

    def ids(self) -> tuple[int, ...]:
        """Ackermann codes of the elements (ascending; code order)."""
        return tuple(ackermann_code(e) for e in self.elements)


def stage(n: int) -> FinStructure:
    """The cumulative stage as a structure: universe = all sets of rank < n."""
    return FinStructure(stage_sets(n), name=f"stage({n})", stage_index=n)


# ---------------------------------------------------------------------------
# Structure files


def parse_structure(text: str, name: str | None = None) -> FinStructure:
    """Parse the line-oriented structure format.

    Two forms.  Either a single ``stage <n>`` line, or a membership digraph
    given as ``element <id>`` lines followed by ``edge <a> <b>`` lines
    (``a``'s set is a member of ``b``'s).  The digraph is pushed through
    :func:`collapse`, so it must be acyclic and extensional.  Blank lines
    and full-line ``#`` comments are skipped.
    """
    stage_n: int | None = None
    nodes: list[str] = []
    edges: list[tuple[str, str]] = []
    saw_graph = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        word = tokens[0]
        if word == "stage":
            if len(tokens) != 2 or stage_n is not None:
                raise InputFormatError(f"line {lineno}: expected 'stage <n>'")
            try:
                stage_n = int(tokens[1])
            except ValueError:
                raise InputFormatError(
                    f"line {lineno}: stage index {tokens[1]!r} is not an "
                    f"integer"
                ) from None
        elif word == "element":
            if len(tokens) != 2:
                raise InputFormatError(
                    f"line {lineno}: expected 'element <id>'"
                )
            nodes.append(tokens[1])
            saw_graph = True
        elif word == "edge":
            if len(tokens) != 3:
                raise InputFormatError(
                    f"line {lineno}: expected 'edge <member> <holder>'"
                )
            edges.append((tokens[1], tokens[2]))
            saw_graph = True
        else:
            raise InputFormatError(
                f"line {lineno}: unknown directive {word!r}"
            )
    if stage_n is not None and saw_graph:
        raise InputFormatError(
            "'stage' must be the only declaration in a structure file"
        )
    if stage_n is not None:
        return stage(stage_n)
    if not nodes:
        raise InputFormatError("a structure file declares no elements")
    values = collapse(nodes, edges)
    return FinStructure(values.values(), name=name)


def render_structure(m: FinStructure) -> str:
    """The text form of a structure, parseable by :func:`parse_structure`.

    Stages render as ``stage <n>``.  Anything else renders as its membership
    digraph with Ackermann codes as node ids — which is faithful only when
    the universe is transitive (members of elements are themselves elements)
    and carries no extra predicate interpretations; other structures are
    refused rather than silently altered.
    """
    if m.stage_index is not None:
        return f"stage {m.stage_index}\n"
    if m.predicates:
        raise InputFormatError(
            "the structure file format carries no predicate interpretations"
        )
    for e in m.elements:
        for member in e.members:
            if member not in m.universe:
                raise InputFormatError(
                    "only transitive universes have a faithful file form: "
                    f"element #{ackermann_code(e)} has member "
                    f"#{ackermann_code(member)} outside the universe"
                )
    out = [f"element {code}" for code in m.ids()]
    pairs = sorted(
        (ackermann_code(member), ackermann_code(e))
        for e in m.elements
        for member in e.members
    )
    out.extend(f"edge {a} {b}" for a, b in pairs)
    return "\n".join(out) + "\n"
