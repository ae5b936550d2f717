"""Batch command-line surface: reproducible, file-driven runs.

Every command emits line-delimited JSON records ending in a summary record.
The records go to ``--out <file>`` when given (human summary then echoed to
stdout); without ``--out`` the records themselves go to stdout and the
summary to stderr.  The same configuration and seed always produce
byte-identical records.

Exit status: 0 = clean, 1 = violations or failed checks found,
2 = configuration or input errors (message on the diagnostic stream).
"""
from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
from pathlib import Path

from .classes import (
    TruthClass,
    convert,
    diagonal_refute,
    induced_truth,
    parse_class,
    render_class,
    structure_ref,
    validate_class,
)
from .errors import (
    CycleError,
    InputFormatError,
    NonExtensionalGraphError,
    TruthkitError,
)
from .evaluator import diagram, least_reflecting, reflects, sat
from .hfset import (
    FinStructure,
    ackermann_code,
    parse_structure,
    render_structure,
    stage,
)
from .hierarchy import true_k
from .proofcheck import check_gref
from .schemes import (
    INTERNAL_TAGS,
    REF_TAGS,
    SCHEME_TAGS,
    check_internal,
    check_truth_property,
    gen_ref,
    gen_scheme,
    parse_theory,
    render_theory,
    theory_from_instances,
)
from .syntax import close, parse, render

_PROPERTY_NAMES = ("DC_in", "DC_out", "PI", "SPI")
_GREF_MODES = ("prop", "full", "depth")


# ---------------------------------------------------------------------------
# Plumbing


class _Outcome:
    """What one command run produced: records, summary lines, a verdict."""

    def __init__(self, records, summary, ok):
        self.records = records
        self.summary = summary
        self.ok = ok


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_structure(args) -> FinStructure:
    has_stage = getattr(args, "stage", None) is not None
    has_file = getattr(args, "structure", None) is not None
    if has_stage == has_file:
        raise InputFormatError(
            "give exactly one of --stage <n> and --structure <file>"
        )
    if has_stage:
        return stage(args.stage)
    return parse_structure(_read_text(args.structure), name=Path(args.structure).stem)


def _load_class(args):
    if getattr(args, "cls", None) is None:
        raise InputFormatError("this command needs --class <file>")
    return parse_class(_read_text(args.cls))


def _load_truth_class(args) -> TruthClass:
    c = _load_class(args)
    if not isinstance(c, TruthClass):
        raise InputFormatError(
            "this command needs a truth class; the file holds a sat class "
            "(convert-class produces its truth form)"
        )
    return c


def _formula(args):
    if getattr(args, "formula", None) is None:
        raise InputFormatError("this command needs --formula <s-expr>")
    return parse(args.formula)


def _sentence(args):
    phi = _formula(args)
    if not phi.is_sentence:
        free = ", ".join(sorted(phi.free_vars))
        raise InputFormatError(f"expected a sentence; free variables: {free}")
    return phi


def _violation_records(report) -> list[dict]:
    return [
        {
            "record": "violation",
            "clause": v.clause,
            "kind": v.kind,
            "witness": v.witness,
        }
        for v in report.violations
    ]


def _report_outcome(report) -> _Outcome:
    records = [
        {"record": "report", "subject": report.subject, "checked": report.checked,
         "violations": len(report.violations)},
    ]
    records.extend(_violation_records(report))
    return _Outcome(records, report.summary_lines(), report.ok)


# ---------------------------------------------------------------------------
# Commands


def _cmd_eval(args) -> _Outcome:
    m = _load_structure(args)
    phi = _sentence(args)
    value = sat(m, phi, {})
    record = {
        "record": "eval",
        "structure": structure_ref(m),
        "formula": render(phi),
        "value": value,
    }
    return _Outcome([record], ["true" if value else "false"], value)


def _cmd_diagram(args) -> _Outcome:
    m = _load_structure(args)
    depth = args.depth if args.depth is not None else 2
    view = diagram(m, depth)
    records = []
    count = 0
    for sigma in view.enumerate():
        records.append({"record": "sentence", "sentence": render(sigma)})
        count += 1
    summary = [
        f"{count} true sentences of depth <= {depth} over {structure_ref(m)}"
    ]
    return _Outcome(records, summary, True)


def _cmd_validate_class(args) -> _Outcome:
    m = _load_structure(args)
    c = _load_class(args)
    report = validate_class(m, c)
    return _report_outcome(report)


def _cmd_convert_class(args) -> _Outcome:
    c = _load_class(args)
    out = convert(c)
    text = render_class(out)
    size_in = len(c.entries) if hasattr(c, "entries") else len(c.sentences)
    size_out = len(out.entries) if hasattr(out, "entries") else len(out.sentences)
    records = [{"record": "class", "kind": out.kind, "text": text}]
    summary = [
        f"converted {c.kind} class ({size_in} entries) -> "
        f"{out.kind} class ({size_out} entries)"
    ] + text.splitlines()
    return _Outcome(records, summary, True)


def _cmd_reflect(args) -> _Outcome:
    phi = _formula(args)
    n = args.N
    if args.scan:
        records = []
        summary = []
        ok = True
        for a in range(1, n + 1):
            bit = reflects(n, a, phi)
            ok = ok and bit
            records.append({"record": "reflect", "a": a, "reflects": bit})
            summary.append(f"a={a}: {'true' if bit else 'false'}")
        return _Outcome(records, summary, ok)
    least = least_reflecting(n, phi)
    records = [{"record": "least-reflecting", "a": least}]
    if least is None:
        return _Outcome(records, [f"no stage below {n} reflects"], False)
    return _Outcome(records, [f"least reflecting stage: {least}"], True)


def _cmd_true_k(args) -> _Outcome:
    m = _load_structure(args)
    if args.depth is None:
        raise InputFormatError("true-k needs --depth <k>")
    sigma = _sentence(args)
    value = true_k(m, args.depth, sigma)
    record = {
        "record": "true-k",
        "structure": structure_ref(m),
        "k": args.depth,
        "formula": render(sigma),
        "value": value,
    }
    return _Outcome([record], ["true" if value else "false"], value)


def _cmd_gen_scheme(args) -> _Outcome:
    inst = gen_scheme(args.tag, _formula(args))
    record = {
        "record": "instance",
        "tag": inst.tag,
        "template": render(inst.template),
        "sentence": render(inst.sentence),
        "meta": dict(inst.meta),
    }
    return _Outcome([record], [render(inst.sentence)], True)


def _cmd_gen_ref(args) -> _Outcome:
    if args.theory is not None:
        base = parse_theory(_read_text(args.theory))
    else:
        base = args.base
    inst = gen_ref(base, args.n, _formula(args), args.kind, args.iter)
    theory = theory_from_instances(
        f"{inst.meta_dict().get('base', 'U')}+{args.kind.lower()}", [inst]
    )
    record = {
        "record": "instance",
        "tag": inst.tag,
        "template": render(inst.template),
        "sentence": render(inst.sentence),
        "meta": dict(inst.meta),
        "theory": render_theory(theory),
    }
    return _Outcome([record], render_theory(theory).splitlines(), True)


def _cmd_check_internal(args) -> _Outcome:
    m = _load_structure(args)
    t = _load_truth_class(args)
    depth = args.depth if args.depth is not None else 1
    report = check_internal(m, t, args.tag, depth)
    return _report_outcome(report)


def _cmd_check_property(args) -> _Outcome:
    m = _load_structure(args)
    t = _load_truth_class(args)
    length = args.depth if args.depth is not None else 2
    pool = t.sorted_sentences()
    total = sum(len(pool) ** k for k in range(1, length + 1))
    if total > 200_000:
        raise InputFormatError(
            f"{total} sequences of length <= {length} from {len(pool)} "
            f"sentences; lower --depth or shrink the class"
        )
    sequences = []
    for k in range(1, length + 1):
        sequences.extend(itertools.product(pool, repeat=k))
    report = check_truth_property(m, t, args.property, sequences)
    return _report_outcome(report)


def _cmd_check_gref(args) -> _Outcome:
    m = _load_structure(args)
    t = _load_truth_class(args)
    budget = args.budget if args.budget is not None else 10_000
    report = check_gref(m, t, mode=args.mode, budget=budget,
                        depth_bound=args.depth)
    return _report_outcome(report)


def _cmd_diagonal(args) -> _Outcome:
    m = _load_structure(args)
    w = diagonal_refute(m, _formula(args))
    record = {
        "record": "diagonal",
        "candidate": render(w.candidate),
        "refuter": render(w.refuter),
        "variable": w.variable,
        "code": ackermann_code(w.code),
        "candidate_bit": w.candidate_bit,
        "refuter_bit": w.refuter_bit,
    }
    return _Outcome([record], [w.line()], True)


def _cmd_collapse(args) -> _Outcome:
    if args.structure is None:
        raise InputFormatError("collapse needs --structure <file>")
    try:
        m = parse_structure(
            _read_text(args.structure), name=Path(args.structure).stem
        )
    except CycleError as exc:
        cycle = " -> ".join(str(n) for n in exc.args[0])
        records = [
            {"record": "violation", "kind": "cycle", "witness": cycle}
        ]
        return _Outcome(records, [f"membership cycle: {cycle}"], False)
    except NonExtensionalGraphError as exc:
        a, b = exc.args[0]
        records = [
            {
                "record": "violation",
                "kind": "non-extensional",
                "witness": f"{a} and {b} collapse to the same set",
            }
        ]
        return _Outcome(
            records,
            [f"nodes {a} and {b} collapse to the same set"],
            False,
        )
    records = [
        {"record": "element", "code": code} for code in m.ids()
    ]
    records.append({"record": "structure", "text": render_structure(m)})
    summary = [
        f"{len(m)} elements; extensional and well-founded",
        f"codes: {' '.join(str(c) for c in m.ids())}",
    ]
    return _Outcome(records, summary, True)


def _cmd_fuzz(args) -> _Outcome:
    from . import pools

    m = _load_structure(args)
    depth = args.depth if args.depth is not None else 2
    count = args.budget if args.budget is not None else 100
    if count < 1:
        raise InputFormatError("fuzz needs a positive --budget")
    seed = args.seed if args.seed is not None else 0
    shapes = list(pools.formulas_upto(depth, ("x", "y")))
    t = induced_truth(m, shapes)
    candidates = set()
    for shape in shapes:
        free = sorted(shape.free_vars)
        for values in itertools.product(m.elements, repeat=len(free)):
            candidates.add(close(shape, dict(zip(free, values))))
    ordered = sorted(candidates, key=lambda f: (f.depth, f.size, render(f)))
    rng = random.Random(seed)
    records = []
    detected_count = 0
    for i in range(count):
        sigma = rng.choice(ordered)
        action = "remove" if sigma in t.sentences else "add"
        mutated = TruthClass.build(
            t.family, t.sentences ^ {sigma}, t.structure
        )
        report = validate_class(m, mutated)
        detected = not report.ok
        detected_count += detected
        records.append(
            {
                "record": "mutation",
                "index": i,
                "action": action,
                "sentence": render(sigma),
                "detected": detected,
                "clauses": list(report.clauses_violated()),
            }
        )
    ok = detected_count == count
    summary = [
        f"{detected_count}/{count} single-entry mutations detected "
        f"(depth <= {depth} over {structure_ref(m)}, seed {seed})"
    ]
    return _Outcome(records, summary, ok)


# ---------------------------------------------------------------------------
# Argument surface


def _add_structure_flags(sub):
    sub.add_argument("--stage", type=int, help="use stage(n) as the structure")
    sub.add_argument("--structure", help="structure file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="truthkit",
        description="finite truth-theoretic toolkit: evaluation, classes, "
        "schemes, proofs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write the JSONL records to this file")
        p.add_argument("--seed", type=int, help="seed for randomized sweeps")
        return p

    p = add("eval", _cmd_eval, "evaluate a sentence over a structure")
    _add_structure_flags(p)
    p.add_argument("--formula", help="sentence s-expression")

    p = add("diagram", _cmd_diagram, "list the true sentences up to a depth")
    _add_structure_flags(p)
    p.add_argument("--depth", type=int, help="depth bound (default 2)")

    p = add("validate-class", _cmd_validate_class,
            "audit a class file against the compositional axioms")
    _add_structure_flags(p)
    p.add_argument("--class", dest="cls", help="class file")

    p = add("convert-class", _cmd_convert_class,
            "convert between satisfaction and truth classes")
    p.add_argument("--class", dest="cls", help="class file")

    p = add("reflect", _cmd_reflect,
            "which stages reflect a formula into stage(N)")
    p.add_argument("--N", type=int, default=4, help="ambient stage (default 4)")
    p.add_argument("--formula", help="formula s-expression")
    p.add_argument("--scan", action="store_true",
                   help="tabulate every stage a = 1..N")

    p = add("true-k", _cmd_true_k, "bounded-depth truth predicate")
    _add_structure_flags(p)
    p.add_argument("--depth", type=int, help="the depth bound k")
    p.add_argument("--formula", help="sentence s-expression")

    p = add("gen-scheme", _cmd_gen_scheme, "generate one axiom-scheme instance")
    p.add_argument("tag", choices=SCHEME_TAGS + INTERNAL_TAGS)
    p.add_argument("--formula", help="template s-expression")

    p = add("gen-ref", _cmd_gen_ref,
            "generate a reflection/consistency instance")
    p.add_argument("kind", choices=REF_TAGS)
    p.add_argument("--theory", help="base theory file")
    p.add_argument("--base", default="U",
                   help="base theory name when no file is given")
    p.add_argument("--n", type=int, default=1,
                   help="partial-truth index (default 1)")
    p.add_argument("--iter", type=int, default=1,
                   help="iteration depth (default 1)")
    p.add_argument("--formula", help="unary template s-expression")

    p = add("check-internal", _cmd_check_internal,
            "check depth-bounded internal scheme membership in a truth class")
    p.add_argument("tag", choices=INTERNAL_TAGS)
    _add_structure_flags(p)
    p.add_argument("--class", dest="cls", help="truth-class file")
    p.add_argument("--depth", type=int, help="template depth bound (default 1)")

    p = add("check-property", _cmd_check_property,
            "check a disjunctive-correctness / induction property")
    p.add_argument("property", choices=_PROPERTY_NAMES)
    _add_structure_flags(p)
    p.add_argument("--class", dest="cls", help="truth-class file")
    p.add_argument("--depth", type=int,
                   help="max sequence length (default 2)")

    p = add("check-gref", _cmd_check_gref,
            "audit a truth class for derivability closure")
    p.add_argument("mode", nargs="?", choices=_GREF_MODES, default="prop")
    _add_structure_flags(p)
    p.add_argument("--class", dest="cls", help="truth-class file")
    p.add_argument("--budget", type=int,
                   help="derivation budget (default 10000)")
    p.add_argument("--depth", type=int,
                   help="conclusion depth bound (depth mode)")

    p = add("diagonal", _cmd_diagonal,
            "exhibit the diagonal refuter for a binary candidate")
    _add_structure_flags(p)
    p.add_argument("--formula", help="binary candidate s-expression")

    p = add("collapse", _cmd_collapse,
            "collapse a membership digraph onto actual sets")
    p.add_argument("--structure", help="structure file (digraph form)")

    p = add("fuzz", _cmd_fuzz,
            "seeded single-entry mutation sweep with detection matrix")
    _add_structure_flags(p)
    p.add_argument("--depth", type=int, help="family depth (default 2)")
    p.add_argument("--budget", type=int,
                   help="number of mutations (default 100)")

    return parser


def _config_record(args) -> dict:
    skip = {"func", "out"}
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None or value is False:
            continue
        config[key] = value
    return {"record": "run", "config": config}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        outcome = args.func(args)
    except TruthkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    records = [_config_record(args)]
    records.extend(outcome.records)
    records.append(
        {"record": "summary", "ok": outcome.ok, "lines": outcome.summary}
    )
    text = "".join(
        json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
        for r in records
    )
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        for line in outcome.summary:
            print(line)
    else:
        sys.stdout.write(text)
        for line in outcome.summary:
            print(line, file=sys.stderr)
    return 0 if outcome.ok else 1


if __name__ == "__main__":  # pragma: no cover - exercised via subprocess
    sys.exit(main())
