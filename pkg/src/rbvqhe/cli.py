"""
``rbvqhe`` command line.

Exit codes: 0 success, 1 a verify suite failed, 2 bad input (parse/spec
errors, unknown suite), 3 nondeterministic BV outcome, 4 resource cap.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bv import RecursiveInstance, build_recursive_circuit, solve_with_probability
from .circuit import Circuit, circuit_from_dict, circuit_to_dict, decompose_to_clifford_t, is_clifford_t, serialize, t_count
from .errors import NondeterministicOutcome, ProtocolError, RbvError, ResourceLimitError
from .protocol import RunReport, run_protocol
from .qhe import EvalTranscript, Mode, PauliKey, all_branches, replay_transcript
from .rcc import RccSpec, cost_report, synthesize_full
from .statevector import Statevector, marginal_probabilities, new_zero_state, random_state
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NONDETERMINISTIC, EXIT_RESOURCE = 0, 1, 2, 3, 4
PROB_TOL = 1e-9


class InputError(RbvError):
    """Bad command-line input; maps to exit code 2."""


# -- loading ------------------------------------------------------------------

def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_document(path: str) -> tuple[str, object]:
    """Classify a JSON file as ('circuit', Circuit), ('spec', RccSpec) or
    ('instance', RecursiveInstance)."""
    data = _read_json(path)
    try:
        if isinstance(data, dict) and "gates" in data:
            return "circuit", circuit_from_dict(data)
        if isinstance(data, dict) and "variant" in data:
            return "spec", RccSpec.from_dict(data)
        if isinstance(data, dict) and "s_map" in data:
            return "instance", RecursiveInstance.from_dict(data)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    raise InputError(f"{path}: not a circuit, spec or instance document")


def load_circuit(path: str) -> tuple[Circuit, dict]:
    kind, doc = load_document(path)
    try:
        if kind == "spec":
            return synthesize_full(doc), {"kind": "spec", **doc.to_dict()}
        if kind == "instance":
            return build_recursive_circuit(doc), {"kind": "instance", "n": doc.n, "s": doc.s}
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return doc, {"kind": "circuit", "num_qubits": doc.num_qubits, "gates": len(doc)}


# -- output -------------------------------------------------------------------

def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=1)
    rows = []

    def walk(prefix: str, value) -> None:
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        else:
            rows.append((prefix, json.dumps(value) if isinstance(value, (list, type(None))) else str(value)))

    walk("", report)
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def _emit(report: dict, args) -> None:
    print(render(report, args.format))


# -- commands -----------------------------------------------------------------

def cmd_synthesize(args) -> int:
    data = _read_json(args.spec)
    try:
        spec = RccSpec.from_dict(data)
        circuit = synthesize_full(spec)
    except ValueError as exc:
        raise InputError(f"{args.spec}: {exc}") from exc
    out = Path(args.output)
    out.write_text(serialize(circuit))
    listing = Path(args.listing) if args.listing else out.with_suffix(".txt")
    listing.write_text(circuit.listing() + "\n")
    counts = t_count(circuit)
    _emit({"spec": spec.to_dict(), "circuit": str(out), "listing": str(listing),
           "num_qubits": circuit.num_qubits, "gates": len(circuit), **counts.as_dict()}, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    circuit, summary = load_circuit(args.file)
    if "register1" not in circuit.labels:
        raise InputError(f"{args.file}: circuit has no 'register1' label to measure")
    bits, p = solve_with_probability(circuit)
    report = RunReport(summary, t_count(circuit).t_gates, measured_s=bits, probability=p,
                       wall_time=time.perf_counter() - start)
    deterministic = p > 1 - PROB_TOL
    report.extra["deterministic"] = deterministic
    _emit(report.to_dict(not args.no_timing), args)
    if not deterministic:
        err = NondeterministicOutcome(f"register 1 is not deterministic: top outcome {bits} has p={p:.6f}", bits, p)
        print(f"warning: {err}", file=sys.stderr)
        return EXIT_NONDETERMINISTIC
    return EXIT_OK


def cmd_tcount(args) -> int:
    circuit, summary = load_circuit(args.file)
    report = {"instance": summary, **t_count(circuit).as_dict()}
    if args.compare_general is not None:
        if args.compare_general < 1:
            raise InputError("--compare-general needs n >= 1")
        cost = cost_report(args.compare_general)
        report["general"] = {
            "n": cost.n,
            "mcx": cost.mcx_general,
            "t_gates_lower_bound": cost.t_gates_general_lower_bound,
            "mcx_single_application_lower_bound": cost.mcx_single_application_lower_bound,
            "rcc_t_gates_worst_case": cost.t_gates,
        }
    _emit(report, args)
    return EXIT_OK


def _plaintext(args, n: int) -> Statevector:
    if args.random_plaintext:
        return random_state(n, np.random.default_rng([args.seed, 1]))
    return new_zero_state(n)


def _measured(circuit: Circuit, state: Statevector) -> tuple[str | None, float | None]:
    qubits = circuit.labels.get("register1")
    if not qubits:
        return None, None
    probs = marginal_probabilities(state, qubits)
    idx = int(np.argmax(probs))
    return format(idx, f"0{len(qubits)}b"), float(probs[idx])


def _branch_job(payload: tuple[dict, dict, str, list]) -> tuple[float, str | None]:
    circuit_doc, key_doc, mode, branch = payload
    circuit = circuit_from_dict(circuit_doc)
    run = run_protocol(circuit, mode=Mode(mode), forced=[tuple(b) for b in branch], key=PauliKey.from_dict(key_doc))
    return run.report.fidelity, run.report.final_key.digest()


def cmd_qhe_run(args) -> int:
    start = time.perf_counter()
    circuit, summary = load_circuit(args.file)
    lowered = circuit if is_clifford_t(circuit) else decompose_to_clifford_t(circuit)
    if args.replay:
        return _replay(args, lowered, summary, start)
    rng = np.random.default_rng(args.seed)
    mode = Mode(args.mode)
    plaintext = _plaintext(args, circuit.num_qubits)
    run = run_protocol(lowered, plaintext, rng=rng, mode=mode)
    rep = run.report
    bits, p = _measured(lowered, rep.plaintext_out)
    report = RunReport(summary, t_count(lowered).t_gates, m=rep.m, fidelity=rep.fidelity, measured_s=bits,
                       probability=p, client_measurements=rep.client_measurements)
    report.extra.update({"mode": mode.value, "seed": args.seed, "messages": len(run.messages),
                         "final_key_digest": rep.final_key.digest()})

    if args.branches == "all":
        if rep.m > args.max_events:
            raise InputError(f"--branches all needs M <= {args.max_events}, circuit has M={rep.m}")
        if args.random_plaintext:
            raise InputError("--branches all runs on the zero plaintext only")
        jobs = [(circuit_to_dict(lowered), rep.initial_key.to_dict(), mode.value, [list(b) for b in branch])
                for branch in all_branches(rep.m)]
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                results = list(pool.map(_branch_job, jobs, chunksize=max(1, len(jobs) // (4 * args.workers))))
        else:
            results = [_branch_job(job) for job in jobs]
        fids = [f for f, _ in results]
        report.extra["branches"] = {"count": len(fids), "min_fidelity": round(min(fids), 12),
                                    "all_unit": all(f > 1 - PROB_TOL for f in fids)}

    if args.transcript:
        record = {"mode": mode.value, "seed": args.seed, "initial_key": rep.initial_key.to_dict(),
                  "random_plaintext": bool(args.random_plaintext), "transcript": rep.transcript.to_dict(),
                  "fidelity": round(rep.fidelity, 12)}
        Path(args.transcript).write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")
        report.extra["transcript"] = args.transcript
    report.wall_time = time.perf_counter() - start
    _emit(report.to_dict(not args.no_timing), args)
    return EXIT_OK


def _replay(args, circuit: Circuit, summary: dict, start: float) -> int:
    record = _read_json(args.replay)
    try:
        key = PauliKey.from_dict(record["initial_key"])
        transcript = EvalTranscript.from_dict(record["transcript"])
        args.seed = record.get("seed", args.seed)
        args.random_plaintext = record.get("random_plaintext", False)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.replay}: malformed transcript record: {exc!r}") from exc
    rep = replay_transcript(circuit, _plaintext(args, circuit.num_qubits), key, transcript)
    bits, p = _measured(circuit, rep.plaintext_out)
    report = RunReport(summary, t_count(circuit).t_gates, m=rep.m, fidelity=rep.fidelity, measured_s=bits,
                       probability=p, client_measurements=rep.client_measurements,
                       wall_time=time.perf_counter() - start)
    report.extra.update({"mode": rep.mode.value, "replayed": args.replay,
                         "recorded_fidelity": record.get("fidelity"),
                         "final_key_digest": rep.final_key.digest()})
    _emit(report.to_dict(not args.no_timing), args)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite != "all" and args.suite not in SUITES:
        print(json.dumps({"error": f"unknown suite {args.suite!r}", "suites": ["all", *SUITES]}, sort_keys=True))
        return EXIT_INPUT
    start = time.perf_counter()
    results = run_suite(args.suite, args.seed)
    report = {"suite": args.suite, "passed": all(r.passed for r in results),
              "results": [r.to_dict() for r in results]}
    if not args.no_timing:
        report["wall_time"] = round(time.perf_counter() - start, 4)
    _emit(report, args)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--no-timing", action="store_true", help="omit wall_time for byte-stable output")

    parser = argparse.ArgumentParser(prog="rbvqhe", description="Recursive Bernstein-Vazirani circuits and QHE evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", parents=[common], help="RCC spec -> circuit JSON and gate listing")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--listing", help="listing path (default: output with .txt suffix)")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", parents=[common], help="measure register 1 of a circuit, spec or instance")
    p.add_argument("file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tcount", parents=[common], help="T-count table")
    p.add_argument("file")
    p.add_argument("--compare-general", type=int, metavar="N")
    p.set_defaults(func=cmd_tcount)

    p = sub.add_parser("qhe-run", parents=[common], help="evaluate a circuit under the QHE scheme")
    p.add_argument("file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EAGER.value)
    p.add_argument("--branches", choices=("sampled", "all"), default="sampled")
    p.add_argument("--max-events", type=int, default=6, help="cap on M for --branches all")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--transcript", metavar="OUT")
    p.add_argument("--replay", metavar="TRANSCRIPT", help="re-run with the outcomes of a saved transcript")
    p.add_argument("--random-plaintext", action="store_true")
    p.set_defaults(func=cmd_qhe_run)

    p = sub.add_parser("verify", parents=[common], help="run self-check suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ProtocolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
