"""Command-line entry point: ``tslforge <command> ...``.

Exit codes: 0 success, 2 parse or input error, 3 encoding error, 4 synthesis
Unknown, 5 unrealizable, 6 simulation or monitoring failure (including a
Violated guarantee).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import corpus as corpus_mod
from .automata import spec_to_ucw, to_hoa
from .cfa import dumps_cfa, loads_cfa, machine_to_cfa
from .encode import ap_statistics, encode_parts, encoding_document, lt_counts
from .errors import EmptyUpdateGroup, EvalError, FormatError, ParseError, TSLError
from .parser import parse_spec
from .sim import (
    VIOLATED,
    Interpretation,
    Trace,
    literal_kinds,
    load_fun,
    load_inputs,
    monitor,
    random_inputs,
    random_interpretation,
    run,
    spec_obligations,
)
from .syntax import SECTIONS, Pred, Spec, Upd, pretty, walk
from .synth import (
    CHAIN_PLACEHOLDER,
    Realizable,
    UnrealizableCertified,
    Unknown,
    instantiate_chain,
    is_monotone,
    minimal_realizable,
    next_chain_experiment,
    synthesize,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ENCODE = 3
EXIT_UNKNOWN = 4
EXIT_UNREALIZABLE = 5
EXIT_SIM = 6

DEFAULT_CHAIN = 5


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


# --------------------------------------------------------------------------
# helpers


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CommandError(EXIT_PARSE, f"{path}: {exc.strerror or exc}") from exc


def load_spec_arg(path, chain: int | None = None) -> Spec:
    text = _read(path)
    if CHAIN_PLACEHOLDER in text:
        text = instantiate_chain(text, DEFAULT_CHAIN if chain is None else chain)
    try:
        return parse_spec(text)
    except ParseError as exc:
        raise CommandError(EXIT_PARSE, f"{path}:{exc}") from exc


def _encode(spec: Spec, hold_outputs: bool = True):
    try:
        return encode_parts(spec, hold_outputs)
    except EmptyUpdateGroup as exc:
        raise CommandError(EXIT_ENCODE, str(exc)) from exc


def spec_literal_kinds(spec: Spec) -> dict:
    preds, terms = [], []
    for f in spec.formulas():
        for n in walk(f):
            if isinstance(n, Pred):
                preds.append(n.term)
            elif isinstance(n, Upd):
                terms.append(n.term)
    return literal_kinds(preds, terms)


def cfa_literal_kinds(cfa) -> dict:
    terms = [t for sel in cfa.selection.values() for _, t in sel]
    return literal_kinds(cfa.predicates, terms)


def _interpretation(path, kinds, cells, seed) -> Interpretation:
    if path:
        try:
            return load_fun(path)
        except OSError as exc:
            raise CommandError(EXIT_PARSE, f"{path}: {exc.strerror or exc}") from exc
        except ParseError as exc:
            raise CommandError(EXIT_PARSE, f"{path}:{exc}") from exc
    return random_interpretation(kinds, cells, seed)


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _synthesize(spec: Spec, args, log=None):
    enc = _encode(spec, not getattr(args, "no_hold_outputs", False))
    return enc, synthesize(
        enc,
        args.max_bound,
        timeout=args.timeout_seconds,
        dual=args.dual,
        backend=args.solver,
        log=log if log is not None else [],
    )


def describe(result) -> str:
    if isinstance(result, Realizable):
        return f"realizable (minimal bound {result.bound})"
    if isinstance(result, UnrealizableCertified):
        return f"unrealizable (environment certificate with {result.bound} states)"
    text = f"unknown (no machine with at most {result.bound_exhausted} states"
    if result.resource_limited:
        text += ", resource limit reached"
    text += ")"
    if result.reason:
        text += f": {result.reason}"
    return text


def _result_code(result) -> int:
    if isinstance(result, Realizable):
        return EXIT_OK
    if isinstance(result, UnrealizableCertified):
        return EXIT_UNREALIZABLE
    return EXIT_UNKNOWN


def _obligation_names(spec: Spec) -> tuple[list[str], list[str]]:
    by_pos = {pos: label for label, pos in spec.labels.items()}

    def names(sections):
        out = []
        for section in sections:
            for i in range(len(getattr(spec, section))):
                out.append(by_pos.get((section, i), f"{section}[{i}]"))
        return out

    return (
        names(("initial_assumptions", "always_assumptions")),
        names(("initial_guarantees", "always_guarantees")),
    )


def verdicts(spec: Spec, trace: Trace, interp: Interpretation) -> dict:
    assumptions, guarantees = spec_obligations(spec)
    a_names, g_names = _obligation_names(spec)
    return {
        "assumptions": {n: monitor(f, trace, interp) for n, f in zip(a_names, assumptions)},
        "guarantees": {n: monitor(f, trace, interp) for n, f in zip(g_names, guarantees)},
    }


def _violations(doc: dict) -> bool:
    """A guarantee is Violated on a run that does not violate an assumption."""
    if VIOLATED in doc["assumptions"].values():
        return False
    return VIOLATED in doc["guarantees"].values()


# --------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    sig = spec.signals
    preds, updates, _ = ap_statistics(spec)
    pred_terms = sorted(
        {pretty(n) for f in spec.formulas() for n in walk(f) if isinstance(n, Pred)}
    )
    report = {
        "inputs": sorted(sig.inputs),
        "outputs": sorted(sig.outputs),
        "cells": sorted(sig.cells),
        "literals": {k: v for k, v in sorted(sig.literal_arities.items())},
        "predicates": pred_terms,
        "updates": updates,
        "sections": {s: len(getattr(spec, s)) for s in SECTIONS},
    }
    if args.json:
        sys.stdout.write(_dumps(report))
        return EXIT_OK
    print(f"inputs: {', '.join(report['inputs']) or '-'}")
    print(f"outputs: {', '.join(report['outputs']) or '-'}")
    print(f"cells: {', '.join(report['cells']) or '-'}")
    lits = ", ".join(f"{k}/{v}" for k, v in report["literals"].items())
    print(f"literals: {lits or '-'}")
    print(f"input predicates ({len(pred_terms)}): {'; '.join(pred_terms) or '-'}")
    print(f"updates: {updates}")
    for s in SECTIONS:
        print(f"{s.replace('_', ' ')}: {report['sections'][s]}")
    return EXIT_OK


def cmd_stats(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    counts = lt_counts(spec)
    preds, updates, groups = ap_statistics(spec)
    doc = {**counts, "predicate_terms": preds, "update_terms": updates}
    if args.json:
        sys.stdout.write(_dumps(doc))
        return EXIT_OK
    g, a = counts["guarantees"], counts["assumptions"]
    print(f"guarantees: L={g['L']} T={g['T']}")
    print(f"assumptions: L={a['L']} T={a['T']}")
    print(f"predicate terms: {preds}")
    print(f"update terms: {updates}")
    return EXIT_OK


def cmd_encode(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    enc = _encode(spec, not args.no_hold_outputs)
    if args.format == "json":
        text = _dumps(encoding_document(enc))
    elif args.format == "hoa":
        text = to_hoa(spec_to_ucw(enc.formula, enc.aps.ids), Path(args.spec).stem)
    else:
        lines = [pretty(enc.formula), ""]
        lines += [f"{e.id} = {pretty(e.binding)}" for e in enc.aps.entries]
        text = "\n".join(lines) + "\n"
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    log: list = []
    start = time.monotonic()
    _, result = _synthesize(spec, args, log)
    if args.verbose:
        for line in log:
            print(f"  {line}", file=sys.stderr)
        print(f"  {time.monotonic() - start:.1f}s", file=sys.stderr)
    print(describe(result))
    machine = getattr(result, "machine", None) or getattr(result, "counter_machine", None)
    if machine is not None and args.emit_machine:
        _write(args.emit_machine, machine.dumps())
    return _result_code(result)


def cmd_cfa(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    enc, result = _synthesize(spec, args)
    if not isinstance(result, Realizable):
        print(describe(result))
        return _result_code(result)
    text = dumps_cfa(machine_to_cfa(result.machine, enc.aps, spec.signals))
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_cfa(path):
    try:
        return loads_cfa(_read(path))
    except FormatError as exc:
        raise CommandError(EXIT_PARSE, f"{path}: {exc}") from exc


def _inputs(args, cfa):
    if args.inputs:
        try:
            return load_inputs(_read(args.inputs))
        except json.JSONDecodeError as exc:
            raise CommandError(EXIT_PARSE, f"{args.inputs}: {exc}") from exc
    return random_inputs(cfa, args.steps, args.seed)


def cmd_simulate(args) -> int:
    cfa = _load_cfa(args.cfa)
    interp = _interpretation(
        args.interp, cfa_literal_kinds(cfa), [c for c, _ in cfa.cells], args.seed
    )
    try:
        trace = run(cfa, interp, _inputs(args, cfa))
    except (EvalError, ValueError) as exc:
        raise CommandError(EXIT_SIM, f"simulation failed: {exc}") from exc
    text = trace.to_jsonl()
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_monitor(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    try:
        trace = Trace.from_jsonl(_read(args.trace))
    except (ValueError, KeyError, ParseError) as exc:
        raise CommandError(EXIT_PARSE, f"{args.trace}: malformed trace: {exc}") from exc
    interp = _interpretation(
        args.interp, spec_literal_kinds(spec), sorted(spec.signals.cells), args.seed
    )
    try:
        doc = verdicts(spec, trace, interp)
    except EvalError as exc:
        raise CommandError(EXIT_SIM, f"monitoring failed: {exc}") from exc
    sys.stdout.write(_dumps(doc))
    return EXIT_SIM if _violations(doc) else EXIT_OK


def cmd_pipeline(args) -> int:
    spec = load_spec_arg(args.spec, args.chain)
    out = Path(args.out_dir)
    enc = _encode(spec, not args.no_hold_outputs)
    _write(out / "encoding.json", _dumps(encoding_document(enc)))
    log: list = []
    _, result = _synthesize(spec, args, log)
    report = [f"spec: {Path(args.spec).name}", f"result: {describe(result)}"]
    code = _result_code(result)
    if isinstance(result, UnrealizableCertified):
        _write(out / "counter_machine.json", result.counter_machine.dumps())
    if isinstance(result, Realizable):
        _write(out / "machine.json", result.machine.dumps())
        cfa = machine_to_cfa(result.machine, enc.aps, spec.signals)
        _write(out / "cfa.json", dumps_cfa(cfa))
        kinds = spec_literal_kinds(spec)
        interp = _interpretation(args.interp, kinds, sorted(spec.signals.cells), args.seed)
        try:
            trace = run(cfa, interp, _inputs(args, cfa))
            doc = verdicts(spec, trace, interp)
        except (EvalError, ValueError) as exc:
            raise CommandError(EXIT_SIM, f"simulation failed: {exc}") from exc
        _write(out / "trace.jsonl", trace.to_jsonl())
        _write(out / "verdicts.json", _dumps(doc))
        report.append(f"steps simulated: {len(trace)}")
        for kind in ("assumptions", "guarantees"):
            for name, verdict in doc[kind].items():
                report.append(f"{kind[:-1]} {name}: {verdict}")
        if _violations(doc):
            code = EXIT_SIM
    _write(out / "report.txt", "\n".join(report) + "\n")
    print("\n".join(report))
    return code


def cmd_corpus(args) -> int:
    ok = True
    for e in corpus_mod.build_corpus():
        if args.only and e.name not in args.only:
            continue
        try:
            spec = e.spec()
        except ParseError as exc:
            print(f"{e.file}: parse error {exc}")
            ok = False
            continue
        missing = e.missing_tags()
        line = f"{e.file}: parsed"
        if missing:
            line += f", missing tags {missing}"
            ok = False
        if e.status == "realizable" or args.long:
            start = time.monotonic()
            _, result = _synthesize(spec, args)
            elapsed = time.monotonic() - start
            line += f", {describe(result)} in {elapsed:.1f}s"
            if e.status == "realizable" and not isinstance(result, Realizable):
                ok = False
                line += " [EXPECTED REALIZABLE]"
            if isinstance(result, Realizable) and e.expected_bound not in (None, result.bound):
                line += f" [expected bound {e.expected_bound}]"
                ok = False
            if e.status == "expected-unknown" and isinstance(result, Realizable):
                line += " [unexpectedly realizable]"
        else:
            line += f", synthesis skipped ({e.status}; use --long)"
        print(line)
    return EXIT_OK if ok else 1


def cmd_next_chain(args) -> int:
    path = args.template or str(corpus_mod.entry("ledmatrix_simple_n").path)
    template = _read(path)
    if CHAIN_PLACEHOLDER not in template:
        raise CommandError(EXIT_PARSE, f"{path}: no {CHAIN_PLACEHOLDER} placeholder")
    try:
        results = next_chain_experiment(
            template,
            range(args.start, args.stop + 1),
            max_k=args.max_bound,
            timeout=args.timeout_seconds,
            dual=args.dual,
            backend=args.solver,
        )
    except ParseError as exc:
        raise CommandError(EXIT_PARSE, f"{path}:{exc}") from exc
    for n, result in sorted(results.items()):
        print(f"n={n}: {describe(result)}")
    print(f"minimal realizable n: {minimal_realizable(results)}")
    print(f"monotone: {'yes' if is_monotone(results) else 'no'}")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


def _add_spec(p):
    p.add_argument("spec", help="specification file (.tsl)")
    p.add_argument(
        "--chain", type=int, default=None,
        help=f"chain length for template specs (default {DEFAULT_CHAIN})",
    )


def _add_synth(p):
    p.add_argument("--max-bound", type=int, default=8)
    p.add_argument("--timeout-seconds", type=float, default=600.0)
    p.add_argument("--dual", action=argparse.BooleanOptionalAction, default=True,
                   help="also search for an environment certificate")
    p.add_argument("--solver", default=None,
                   help="satisfiability backend: cadical, dpll or cmd:<path>")
    p.add_argument("--no-hold-outputs", action="store_true",
                   help="do not let outputs keep their value implicitly")


def _add_sim(p):
    p.add_argument("--interp", help="interpretation file (.fun); random if omitted")
    p.add_argument("--inputs", help="input trace (JSON lines); random if omitted")
    p.add_argument("--steps", type=int, default=100, help="random input steps")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tslforge", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and classify a specification")
    _add_spec(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("stats", help="count temporal and non-temporal conjuncts")
    _add_spec(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("encode", help="print the LTL encoding")
    _add_spec(p)
    p.add_argument("--format", choices=("text", "json", "hoa"), default="text")
    p.add_argument("--no-hold-outputs", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("synthesize", help="bounded synthesis")
    _add_spec(p)
    _add_synth(p)
    p.add_argument("--emit-machine", help="write the machine or certificate as JSON")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("cfa", help="synthesize and export the control flow architecture")
    _add_spec(p)
    _add_synth(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_cfa)

    p = sub.add_parser("simulate", help="run a CFA")
    p.add_argument("cfa", help="CFA file (.json)")
    _add_sim(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("monitor", help="check a trace against a specification")
    _add_spec(p)
    p.add_argument("trace", help="trace file (JSON lines)")
    p.add_argument("--interp")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("pipeline", help="encode, synthesize, export, simulate and monitor")
    _add_spec(p)
    _add_synth(p)
    _add_sim(p)
    p.add_argument("--out-dir", default="tslforge-out")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("corpus", help="regression run over the bundled corpus")
    _add_synth(p)
    p.add_argument("--long", action="store_true", help="also attempt expected-unknown specs")
    p.add_argument("--only", nargs="*", help="restrict to these entries")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("next-chain", help="sweep the X-chain length of a template")
    p.add_argument("template", nargs="?", help="template spec (default: bundled LedMatrix)")
    p.add_argument("--from", dest="start", type=int, default=1)
    p.add_argument("--to", dest="stop", type=int, default=6)
    _add_synth(p)
    p.set_defaults(func=cmd_next_chain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except EmptyUpdateGroup as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENCODE
    except TSLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
