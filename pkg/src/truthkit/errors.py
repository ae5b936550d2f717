"""Error taxonomy for truthkit.

Every failure the toolkit can signal deliberately derives from TruthkitError,
so callers (and the CLI) can separate tool-reported conditions from bugs.
"""
from __future__ import annotations


class TruthkitError(Exception):
    """Base class for all deliberate truthkit errors."""


class SyntaxToolError(TruthkitError):
    """Formula/term text could not be parsed, or a term is malformed."""


class VariableCollisionError(TruthkitError):
    """A requested variable name already occurs where it must be fresh."""


class AssignmentDomainError(TruthkitError):
    """An assignment's domain does not match the required variable set."""


class ConstantDenotationError(TruthkitError):
    """A constant's value is not an element of the structure at hand."""


class StageLimitError(TruthkitError):
    """A cumulative-stage index exceeds the supported (or configured) cap."""


class CodeSizeError(TruthkitError):
    """A set-code integer would exceed the representable guard size."""


class DecodeError(TruthkitError):
    """A hereditarily finite set does not decode to the expected shape."""


class CycleError(TruthkitError):
    """A membership digraph contains a cycle."""

    def __init__(self, cycle: tuple[str, ...]):
        self.cycle = cycle
        super().__init__(f"membership cycle: {' -> '.join(cycle)}")


class NonExtensionalGraphError(TruthkitError):
    """Two distinct digraph nodes collapse to the same set."""

    def __init__(self, pair: tuple[str, str]):
        self.pair = pair
        super().__init__(
            f"nodes {pair[0]!r} and {pair[1]!r} have identical membership and "
            f"cannot be separated"
        )


class BudgetExceededError(TruthkitError):
    """An evaluation or search exceeded its step budget."""


class ExtensionalityError(TruthkitError):
    """A satisfaction class is not extensional where it must be."""


class ArityError(TruthkitError):
    """A formula has the wrong free variables for the requested operation."""


class FreshNameError(TruthkitError):
    """No fresh variable name could be generated."""


class NotDelta0Error(TruthkitError):
    """A formula is not recognized as bounded (Delta-0)."""


class ProofFormatError(TruthkitError):
    """A proof object or proof file is malformed."""


class InputFormatError(TruthkitError):
    """A structure/class/theory file is malformed."""
