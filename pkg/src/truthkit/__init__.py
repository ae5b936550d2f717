"""truthkit: Tarskian satisfaction over finite set structures.

Hereditarily finite stages, an s-expression formula language, brute-force and
VM evaluators, satisfaction/truth classes with axiom validators, bounded
partial-truth predicates, axiom-scheme generators, and a small Hilbert-style
proof checker — everything cross-checkable at desk scale.
"""
from __future__ import annotations

from .classes import (
    DiagonalWitness,
    Report,
    SatClass,
    TruthClass,
    Violation,
    convert,
    diagonal_refute,
    family_closure,
    induced_sat,
    induced_truth,
    is_extensional,
    pathology_D,
    validate_class,
)
from .errors import TruthkitError
from .evaluator import (
    TruthClassView,
    diagram,
    kernel_available,
    least_reflecting,
    oracle_sat,
    reflects,
    sat,
)
from .hierarchy import (
    DepthFamily,
    materialize_true_k,
    mostowski_truth,
    piecewise_code,
    sigma_true,
    true_k,
)
from .proofcheck import (
    CheckResult,
    EqAxiom,
    Gen,
    MP,
    Premise,
    Proof,
    PropAxiom,
    QuantAxiom,
    check_gref,
    check_proof,
    parse_proof,
    prop_axiom,
    prove,
    render_proof,
)
from .schemes import (
    SchemeInstance,
    Theory,
    TheoryEntry,
    check_internal,
    check_truth_property,
    delta0fin,
    gen_ref,
    gen_scheme,
    parse_theory,
    psi_seq,
    render_theory,
    theory_from_instances,
    theta_s,
)
from .hfset import (
    EMPTY,
    FinStructure,
    HFSet,
    ackermann_code,
    ackermann_code_mod,
    collapse,
    decode,
    hfset,
    kur_split,
    kuratowski,
    nat,
    nat_value,
    stage,
    stage_sets,
)
from .syntax import (
    Const,
    Eq,
    Exists,
    Formula,
    Mem,
    Not,
    Or,
    Pred,
    Var,
    all_,
    analyze,
    and_,
    close,
    decode_formula,
    ecl_becl,
    ex_in,
    formula_code,
    iff,
    imp,
    levy_class,
    parse,
    parse_term,
    relativize,
    render,
    sim_equiv,
    subst,
)

__version__ = "0.1.0"
