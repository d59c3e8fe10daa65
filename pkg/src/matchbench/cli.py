"""Command-line entry point: ``matchbench {score,bench,audit,sweep,prereg,demo}``.

Exit codes: 0 on success, 2 on invalid input or configuration, 1 on any
other failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__, docio
from .audit import audit_bottlenecks, load_traces
from .bench import DEMO_MANIFEST, load_records, run_bench
from .errors import ConfigurationError, DomainError
from .governance import PreregistrationNote
from .harness import RunManifest
from .metrics import QualityTimeSeries, load_rubric, tau_sweep

log = logging.getLogger("matchbench")

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


class InputError(Exception):
    """Bad user input; reported without a traceback."""


def _read_json(path: str | Path, what: str) -> Any:
    try:
        return docio.read_json(path)
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what} file {path} is not valid JSON: {exc}") from None


def _emit(doc: Any, out: str | None) -> None:
    if out:
        docio.write_json(out, doc)
        print(f"wrote {out}")


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.6g}"


# -- score -------------------------------------------------------------------

def _parse_assessment(doc: Any, rubric) -> tuple[list[tuple[str, bool]], float]:
    if not isinstance(doc, dict):
        raise InputError("assessment must be a JSON object")
    version = doc.get("rubric_version")
    if version is not None and version != rubric.version:
        raise InputError(f"assessment targets rubric {version!r} but rubric "
                         f"{rubric.version!r} was loaded")
    if "drift_ppm" not in doc:
        raise InputError("assessment field 'drift_ppm' is missing")
    drift = doc["drift_ppm"]
    if isinstance(drift, bool) or not isinstance(drift, (int, float)):
        raise InputError(f"assessment field 'drift_ppm' must be a number, got {drift!r}")
    checklist = doc.get("checklist")
    if isinstance(checklist, dict):
        pairs = list(checklist.items())
    elif isinstance(checklist, list):
        try:
            pairs = [(e["item"], e["satisfied"]) for e in checklist]
        except (KeyError, TypeError):
            raise InputError("assessment field 'checklist' entries need 'item' and "
                             "'satisfied'") from None
    else:
        raise InputError("assessment field 'checklist' must be an object or a list")
    for name, v in pairs:
        if not isinstance(v, bool):
            raise InputError(f"assessment field 'checklist.{name}' must be true or false")
    return pairs, float(drift)


def cmd_score(args) -> int:
    rubric, rubric_hash = load_rubric(args.rubric)
    pairs, drift = _parse_assessment(_read_json(args.assessment, "assessment"), rubric)
    result = rubric.score(pairs, drift)
    print(f"rubric   {rubric.version}")
    for name, pts in result.per_item_contribution:
        print(f"  {name:<28} {pts:g}")
    print(f"drift bonus  {result.drift_bonus:g}  (drift {drift:g} ppm)")
    print(f"S={result.score:g}  QRL={result.stage}")
    _emit({**result.to_dict(), "rubric_hash": rubric_hash}, args.out)
    return EXIT_OK


# -- bench / demo ------------------------------------------------------------

def _load_manifest(path: str) -> RunManifest:
    return RunManifest.from_dict(_read_json(path, "manifest"))


def _apply_overrides(manifest: RunManifest, args) -> tuple[RunManifest, list[str]]:
    notes = []
    if args.seed is not None and args.seed != manifest.master_seed:
        notes.append(f"master_seed overridden on command line: {manifest.master_seed} -> {args.seed}")
        manifest = manifest.with_overrides(master_seed=args.seed)
    if args.iteration_budget is not None and args.iteration_budget != manifest.iteration_budget:
        notes.append(f"iteration_budget overridden on command line: "
                     f"{manifest.iteration_budget} -> {args.iteration_budget}")
        manifest = manifest.with_overrides(iteration_budget=args.iteration_budget)
    return manifest, notes


def _print_bench(outcome) -> None:
    print(f"{len(outcome.records)} records -> {outcome.out_dir}")
    print(f"{'solver':<10} {'E[Q]':>8} {'E[T] s':>10} {'Q p95':>8} {'T p95':>10} {'n':>4}")
    for name, row in outcome.report["summary"].items():
        print(f"{name:<10} {row['mean_quality']:>8.4f} {row['mean_time_s']:>10.5f} "
              f"{row['quality_p95']:>8.4f} {row['time_p95']:>10.5f} {row['count']:>4}")
    for sp in outcome.report.get("speedup", []):
        value = sp["value"] if sp["reachable"] else "UNREACHABLE"
        ci = sp["ci"]
        print(f"S_norm({sp['tau']}) {sp['solver_a']}/{sp['solver_b']} = {value}  "
              f"CI{1 - ci['alpha']:.0%} [{ci['lower']}, {ci['upper']}]  "
              f"unreachable resamples {ci['n_unreachable_resamples']}")
    if outcome.report["budget_violations"]:
        print(f"warning: {outcome.report['budget_violations']} budget violations")
    if outcome.trail.deviating:
        print("warning: run DEVIATES from preregistration:")
        for d in outcome.trail.deviations:
            print(f"  {d}")


def cmd_bench(args) -> int:
    manifest = _load_manifest(args.manifest)
    manifest, notes = _apply_overrides(manifest, args)
    prereg = None
    if args.prereg:
        prereg = PreregistrationNote.from_dict(_read_json(args.prereg, "preregistration"))
    outcome = run_bench(manifest, args.out, prereg=prereg, sweep_taus=args.tau or (),
                        rubric_path=args.rubric, notes=notes + list(args.note or ()))
    _print_bench(outcome)
    return EXIT_OK


def cmd_demo(args) -> int:
    out = Path(args.out)
    doc = dict(DEMO_MANIFEST)
    if args.iteration_budget is not None:
        doc["iteration_budget"] = args.iteration_budget
    manifest = RunManifest.from_dict(doc)
    if args.seed is not None:
        manifest = manifest.with_overrides(master_seed=args.seed)
    outcome = run_bench(manifest, out, sweep_taus=args.tau or (0.5, 0.6, 0.7, 0.8, 0.9))
    _print_bench(outcome)
    return EXIT_OK


def cmd_prereg(args) -> int:
    manifest = _load_manifest(args.manifest)
    note = PreregistrationNote.from_manifest(manifest)
    docio.write_json(args.out, note.to_dict())
    print(f"preregistered manifest {manifest.config_hash[:12]} -> {args.out}")
    return EXIT_OK


# -- audit -------------------------------------------------------------------

def _load_drift(path: str) -> list[float]:
    doc = _read_json(path, "drift")
    if isinstance(doc, dict):
        doc = doc.get("drift_ppm")
    if not isinstance(doc, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in doc):
        raise InputError("drift file must hold a JSON list of numbers "
                         "(or an object with a 'drift_ppm' list)")
    return [float(v) for v in doc]


def cmd_audit(args) -> int:
    try:
        traces = load_traces(args.traces)
    except FileNotFoundError:
        raise InputError(f"traces file not found: {args.traces}") from None
    except (KeyError, ValueError, AttributeError) as exc:
        raise InputError(f"traces file {args.traces} is malformed: {exc}") from None
    if not traces:
        raise InputError(f"traces file {args.traces} holds no runs")
    drift = _load_drift(args.drift) if args.drift else None
    report = audit_bottlenecks(traces, args.top_k, drift)
    print(f"replicates {report.replicate_count} (skipped zero-total: {report.skipped_replicates})")
    for stage, share in sorted(report.mean_shares.items(), key=lambda kv: (-kv[1], kv[0])):
        print(f"  {stage:<20} {share:.6f}")
    if report.degenerate:
        print("bottlenecks: none (every run has zero total time)")
    else:
        print("bottlenecks: " + ", ".join(f"{s} {v:.6g}" for s, v in report.bottlenecks))
    if drift is not None:
        print(f"drift mean {_fmt(report.drift_mean_ppm)} ppm, p95 {_fmt(report.drift_p95_ppm)} ppm")
    _emit(report.to_dict(), args.out)
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

def cmd_sweep(args) -> int:
    try:
        records = load_records(args.records)
    except FileNotFoundError:
        raise InputError(f"records file not found: {args.records}") from None
    except (KeyError, ValueError) as exc:
        raise InputError(f"records file {args.records} is malformed: {exc}") from None
    solvers = {r.solver for r in records}
    for name in (args.solver_a, args.solver_b):
        if name not in solvers:
            raise InputError(f"unknown solver {name!r}; records hold {sorted(solvers)}")
    rows = tau_sweep(QualityTimeSeries.from_records(records, args.solver_a),
                     QualityTimeSeries.from_records(records, args.solver_b),
                     args.tau or [])
    print(f"{'tau':>8}  S_norm ({args.solver_a}/{args.solver_b})")
    for tau, o in rows:
        print(f"{tau:>8g}  {o.value if o.reachable else 'UNREACHABLE'}")
    _emit({"solver_a": args.solver_a, "solver_b": args.solver_b,
           "rows": [o.to_dict() for _, o in rows]}, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matchbench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("score", help="readiness score and stage for an assessment")
    s.add_argument("--rubric", help="rubric JSON (default: bundled 13-item rubric)")
    s.add_argument("--assessment", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_score)

    def run_flags(sp, manifest_required=True):
        if manifest_required:
            sp.add_argument("--manifest", required=True)
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--iteration-budget", type=int,
                        help="fixed iteration count per solver call (bit-reproducible)")
        sp.add_argument("--tau", type=float, action="append",
                        help="extra tau for an exploratory sweep (repeatable)")

    b = sub.add_parser("bench", help="run a benchmark manifest")
    run_flags(b)
    b.add_argument("--rubric", help="rubric whose hash goes in the audit trail")
    b.add_argument("--prereg", help="frozen preregistration note to check against")
    b.add_argument("--note", action="append", help="change-log note (repeatable)")
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("demo", help="synthetic QUBO demo: n=24, 50 ms, 20 instances")
    run_flags(d, manifest_required=False)
    d.set_defaults(func=cmd_demo)

    r = sub.add_parser("prereg", help="freeze a manifest into a preregistration note")
    r.add_argument("--manifest", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_prereg)

    a = sub.add_parser("audit", help="stage-share bottleneck audit")
    a.add_argument("--traces", required=True, help="JSONL, one run per line")
    a.add_argument("--top-k", type=int, default=3)
    a.add_argument("--drift", help="JSON list of drift samples in ppm")
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit)

    w = sub.add_parser("sweep", help="normalized speedup over a list of tau values")
    w.add_argument("--records", required=True)
    w.add_argument("--solver-a", required=True)
    w.add_argument("--solver-b", required=True)
    w.add_argument("--tau", type=float, action="append")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
