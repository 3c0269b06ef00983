"""Command-line front end.

Exit codes: 0 = success / property holds, 1 = property violated (with a
machine-readable verdict on stdout), 2 = usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .attacks import build_attacked_closed_loop, verify_ae_safe_controllability
from .automata import ModelError, parallel_compose
from .modelio import (
    Bundle,
    ModelDocument,
    export_dot,
    parse_model,
    resolve_bundle,
    serialize_model,
)
from .recovery import (
    RecoveryCounterexample,
    RecoveryStrategy,
    synthesize_resilient_supervisor,
    validate_robust_region,
)
from .simulation import check_trace, parse_policy, simulate, trace_records

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _read_document(path: str) -> ModelDocument:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_model(handle.read())


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def _load_bundle(path: str, region_arg: str | None) -> tuple[Bundle, frozenset[str]]:
    bundle = resolve_bundle(_read_document(path))
    if region_arg:
        region = frozenset(tok for tok in region_arg.split(",") if tok)
    elif bundle.region is not None:
        region = bundle.region
    else:
        raise ModelError(
            "no region given: pass --region or add a [region] block to the bundle"
        )
    return bundle, region


def _strategy_payload(entry: RecoveryStrategy | RecoveryCounterexample) -> dict:
    if isinstance(entry, RecoveryStrategy):
        return {
            "recoverable": True,
            "nominal_path": list(entry.nominal_path),
            "contingency": {
                f"{state} {event}": list(path)
                for (state, event), path in sorted(entry.contingency.items())
            },
        }
    return {
        "recoverable": False,
        "removal_chain": [
            {"state": state, "reason": record.reason}
            for state, record in entry.chain
        ],
    }


def _cmd_compose(args: argparse.Namespace) -> int:
    left = _read_document(args.left).single()
    right = _read_document(args.right).single()
    composed = parallel_compose(left, right)
    _write_text(
        args.output,
        serialize_model(ModelDocument(1, {"main": composed}), fmt=args.format),
    )
    _emit(
        {
            "command": "compose",
            "states": len(composed.states),
            "transitions": len(composed.transitions),
            "output": args.output,
        }
    )
    return EXIT_OK


def _cmd_attack_model(args: argparse.Namespace) -> int:
    plant = _read_document(args.plant).single()
    supervisor = _read_document(args.supervisor).single()
    vulnerable = frozenset(tok for tok in args.vulnerable.split(",") if tok)
    doc = ModelDocument(
        1,
        {"plant": plant, "supervisor": supervisor},
        region=(
            frozenset(tok for tok in args.region.split(",") if tok)
            if args.region
            else None
        ),
        vulnerable=vulnerable,
    )
    bundle = resolve_bundle(doc)
    system = build_attacked_closed_loop(bundle.plant, bundle.supervisor)
    _write_text(args.output, serialize_model(doc, fmt=args.format))
    _emit(
        {
            "command": "attack-model",
            "output": args.output,
            "closed_loop_states": len(system.gr.states),
            "closed_loop_transitions": len(system.gr.transitions),
            "detection_states": sorted(system.detection_states),
            "vulnerable_plant_states": sorted(system.vulnerable_plant_states),
            "unsafe_plant_states": sorted(system.unsafe_plant_states),
        }
    )
    return EXIT_OK


def _cmd_verify_safe(args: argparse.Namespace) -> int:
    bundle = resolve_bundle(_read_document(args.bundle))
    system = build_attacked_closed_loop(bundle.plant, bundle.supervisor)
    verdict = verify_ae_safe_controllability(system)
    _emit(
        {
            "property": "ae-safe-controllability",
            "holds": verdict.holds,
            "witness": (
                None
                if verdict.witness is None
                else [list(step) for step in verdict.witness]
            ),
        }
    )
    return EXIT_OK if verdict.holds else EXIT_VIOLATED


def _cmd_verify_recoverable(args: argparse.Namespace) -> int:
    bundle, region_states = _load_bundle(args.bundle, args.region)
    system = build_attacked_closed_loop(bundle.plant, bundle.supervisor)
    region = validate_robust_region(bundle.plant, region_states)
    verdict = synthesize_resilient_supervisor(system, region)
    _emit(
        {
            "property": "ae-robust-recoverability",
            "recoverable": verdict.recoverable,
            "by_synthesis": verdict.recoverable,
            "by_game": system.detection_states <= verdict.winning_set,
            "method_agreement": verdict.method_agreement,
            "detection_states": {
                state: _strategy_payload(entry)
                for state, entry in sorted(verdict.per_detection.items())
            },
        }
    )
    return EXIT_OK if verdict.recoverable else EXIT_VIOLATED


def _cmd_synthesize(args: argparse.Namespace) -> int:
    bundle, region_states = _load_bundle(args.bundle, args.region)
    system = build_attacked_closed_loop(bundle.plant, bundle.supervisor)
    region = validate_robust_region(bundle.plant, region_states)
    verdict = synthesize_resilient_supervisor(system, region)
    supervisor = verdict.resilient_supervisor.supervisor
    if not supervisor.is_empty:
        _write_text(
            args.output,
            serialize_model(
                ModelDocument(1, {"supervisor": supervisor}), fmt=args.format
            ),
        )
    _emit(
        {
            "command": "synthesize-resilient",
            "recoverable": verdict.recoverable,
            "method_agreement": verdict.method_agreement,
            "supervisor_states": len(supervisor.states),
            "iterations": verdict.resilient_supervisor.iterations,
            "output": None if supervisor.is_empty else args.output,
            "strategies": {
                state: _strategy_payload(entry)
                for state, entry in sorted(verdict.per_detection.items())
            },
        }
    )
    return EXIT_OK if verdict.recoverable else EXIT_VIOLATED


def _cmd_simulate(args: argparse.Namespace) -> int:
    bundle, region_states = _load_bundle(args.bundle, args.region)
    system = build_attacked_closed_loop(bundle.plant, bundle.supervisor)
    region = validate_robust_region(bundle.plant, region_states)
    policy = parse_policy(args.attacker)
    if args.resilient:
        verdict = synthesize_resilient_supervisor(system, region)
        supervisor = verdict.resilient_supervisor.supervisor
        if supervisor.is_empty:
            raise ModelError("resilient synthesis returned the empty supervisor")
    else:
        supervisor = system.gr
    trace = simulate(
        system,
        supervisor,
        policy,
        max_steps=args.steps,
        seed=args.seed,
        region=region.region_states,
    )
    for record in trace_records(trace):
        print(json.dumps(record, sort_keys=True))
    report = check_trace(trace, system, region.region_states)
    _emit(
        {
            "command": "simulate",
            "steps": len(trace.steps),
            "terminated": trace.terminated_reason,
            "violations": list(report.violations),
            "ok": report.ok,
        }
    )
    return EXIT_OK if report.ok else EXIT_VIOLATED


def _cmd_export_dot(args: argparse.Namespace) -> int:
    doc = _read_document(args.model)
    automaton = (
        doc.automata[args.block] if args.block else doc.single()
    )
    text = export_dot(automaton, region=doc.region)
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desrec",
        description=(
            "Model discrete event systems under actuator-enablement attacks, "
            "verify recoverability, and synthesize resilient supervisors."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="synchronous composition of two models")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_compose)

    p = sub.add_parser(
        "attack-model",
        help="build the attacked closed loop and emit a bundle plus a report",
    )
    p.add_argument("--plant", required=True)
    p.add_argument("--supervisor", required=True)
    p.add_argument("--vulnerable", required=True, metavar="EV1,EV2,...")
    p.add_argument("--region", metavar="S1,S2,...")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_attack_model)

    verify = sub.add_parser("verify", help="decide a property of a bundle")
    vsub = verify.add_subparsers(dest="property", required=True)

    p = vsub.add_parser(
        "safe-controllability",
        help="after any attack, damage can be averted by disabling events",
    )
    p.add_argument("bundle")
    p.set_defaults(func=_cmd_verify_safe)

    p = vsub.add_parser(
        "recoverable",
        help="every detection state admits a robust-recovery strategy",
    )
    p.add_argument("bundle")
    p.add_argument("--region", metavar="S1,S2,...")
    p.set_defaults(func=_cmd_verify_recoverable)

    synth = sub.add_parser("synthesize", help="synthesize a supervisor")
    ssub = synth.add_subparsers(dest="target", required=True)

    p = ssub.add_parser(
        "resilient",
        help="resilient supervisor plus per-detection recovery strategies",
    )
    p.add_argument("bundle")
    p.add_argument("--region", metavar="S1,S2,...")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("simulate", help="run the closed loop under an attacker")
    p.add_argument("bundle")
    p.add_argument("--attacker", default="none",
                   help="none | first-opportunity | random:P[:SEED] | scripted:I,J")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", metavar="S1,S2,...")
    p.add_argument("--resilient", action="store_true",
                   help="simulate under the synthesized resilient supervisor")
    p.set_defaults(func=_cmd_simulate)

    export = sub.add_parser("export", help="export a model to another format")
    esub = export.add_subparsers(dest="format_name", required=True)

    p = esub.add_parser("dot", help="GraphViz DOT text")
    p.add_argument("model")
    p.add_argument("--block", help="automaton block name (default: the only block)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_export_dot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ModelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
