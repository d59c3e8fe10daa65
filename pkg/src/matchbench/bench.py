"""End-to-end benchmark runs: execute a manifest and write the artifact set.

Artifacts written to the output directory:

    manifest.json       the manifest actually executed, with its config_hash
    records.jsonl       one RunRecord per line
    instances.jsonl     every generated instance, for third-party replication
    traces.jsonl        harness stage timings, one line per instance
    report.json         summary table, normalized speedup + CI, tau sweep, audit
    bootstrap.json      raw bootstrap distributions
    audit_trail.json    hashes, seeds, versions, environment, change log
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from . import docio
from .audit import StageTrace, audit_bottlenecks
from .errors import ConfigurationError
from .governance import AuditTrail, PreregistrationNote, utc_now
from .harness import INSTANCE_STREAM, RunManifest, RunRecord, SolverSpec, derive_seed, run_benchmark
from .metrics import QualityTimeSeries, load_rubric, normalized_speedup, tau_sweep
from .solvers import SharedBoundsCalibrator, generate_qubo, solve_greedy, solve_sa
from .stats import paired_bootstrap_ci, summarize

log = logging.getLogger(__name__)

SOLVERS: dict[str, Callable] = {"sa": solve_sa, "greedy": solve_greedy}


def _qubo_generator(params: Mapping[str, Any]):
    n = int(params.get("n", 24))
    density = float(params.get("density", 0.25))

    def gen(index: int, seed: int):
        return generate_qubo(n, density, seed)
    return gen


GENERATORS: dict[str, Callable[[Mapping[str, Any]], Callable[[int, int], Any]]] = {
    "qubo": _qubo_generator,
}

DEMO_MANIFEST = {
    "master_seed": 7,
    "num_instances": 20,
    "budget": {"time_s": 0.05, "cost_usd": 0.0, "energy_j": 0.0},
    "solvers": ["sa", "greedy"],
    "instance_generator": {"id": "qubo", "params": {"n": 24, "density": 0.25}},
    "target_quality": 0.70,
    "rubric_version": "qrl-default-1.0",
    "iteration_budget": None,
    "overshoot_tolerance": 0.10,
    "quality_policy": "shared",
    "bootstrap": {"n_boot": 1000, "alpha": 0.05, "seed": 42},
}



def registry_for(manifest: RunManifest) -> list[SolverSpec]:
    unknown = [n for n in manifest.solver_names if n not in SOLVERS]
    if unknown:
        raise ConfigurationError(f"unknown solvers {unknown}; available: {sorted(SOLVERS)}")
    return [SolverSpec(n, SOLVERS[n]) for n in manifest.solver_names]


def generator_for(manifest: RunManifest):
    try:
        factory = GENERATORS[manifest.instance_generator_id]
    except KeyError:
        raise ConfigurationError(
            f"unknown instance generator {manifest.instance_generator_id!r}; "
            f"available: {sorted(GENERATORS)}") from None
    return factory(manifest.instance_params)


def calibrator_for(manifest: RunManifest):
    if manifest.quality_policy == "shared" and manifest.instance_generator_id == "qubo":
        return SharedBoundsCalibrator()
    return None


def speedup_section(records: Sequence[RunRecord], solver_a: str, solver_b: str,
                    tau: float, n_boot: int, alpha: float, seed: int):
    sa = QualityTimeSeries.from_records(records, solver_a)
    sb = QualityTimeSeries.from_records(records, solver_b)
    point = normalized_speedup(sa, sb, tau)
    ci = paired_bootstrap_ci(records, solver_a, solver_b, tau, n_boot, alpha, seed)
    entry = {"solver_a": solver_a, "solver_b": solver_b, **point.to_dict(),
             "ci": ci.to_dict()}
    return entry, ci


@dataclass
class BenchOutcome:
    records: list[RunRecord]
    report: dict[str, Any]
    trail: AuditTrail
    out_dir: Path
    traces: list[StageTrace] = field(default_factory=list)


def run_bench(manifest: RunManifest, out_dir: str | Path,
              prereg: PreregistrationNote | None = None,
              sweep_taus: Sequence[float] = (),
              rubric_path: str | Path | None = None,
              notes: Sequence[str] = ()) -> BenchOutcome:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, rubric_hash = load_rubric(rubric_path)
    trail = AuditTrail(manifest_hash=manifest.config_hash, rubric_hash=rubric_hash,
                       master_seed=manifest.master_seed, started_at=utc_now())
    for n in notes:
        trail.note(n)
    if prereg is not None:
        trail.deviations = prereg.deviations(manifest)
        trail.deviating = bool(trail.deviations)
        if trail.deviating:
            log.warning("run deviates from preregistration: %s", "; ".join(trail.deviations))
            trail.note("run deviates from preregistration")

    registry = registry_for(manifest)
    gen = generator_for(manifest)
    traces: list[StageTrace] = []
    records = run_benchmark(manifest, registry, gen, calibrator_for(manifest), traces)
    for i, st in enumerate(traces):
        st.run_id = f"instance-{i}"

    summary = summarize(records)
    report: dict[str, Any] = {
        "manifest_hash": manifest.config_hash,
        "summary": summary.to_dict(),
        "energy_cost_source": "solver-declared pass-through; not metered",
        "budget_violations": sum(1 for r in records if r.meta.get("budget_violation")),
        "solver_errors": sum(1 for r in records if "error" in r.meta),
        "time_mode": ("iteration-budget" if manifest.iteration_budget is not None
                      else "time-budget"),
    }
    boot_dump: dict[str, Any] = {}
    names = list(manifest.solver_names)
    pairs = [(names[0], b) for b in names[1:]]
    if manifest.target_quality is not None and pairs:
        report["speedup"] = []
        for a, b in pairs:
            entry, ci = speedup_section(records, a, b, manifest.target_quality,
                                        manifest.n_boot, manifest.alpha,
                                        manifest.bootstrap_seed)
            report["speedup"].append(entry)
            boot_dump[f"{a}/{b}@{manifest.target_quality}"] = ci.to_dict(include_samples=True)
    if sweep_taus and pairs:
        report["tau_sweep"] = [
            {"solver_a": a, "solver_b": b,
             "rows": [o.to_dict() for _, o in tau_sweep(
                 QualityTimeSeries.from_records(records, a),
                 QualityTimeSeries.from_records(records, b), list(sweep_taus))]}
            for a, b in pairs]
    report["harness_audit"] = audit_bottlenecks(traces, top_k=3).to_dict()

    instances = [gen(i, derive_seed(manifest.master_seed, i, INSTANCE_STREAM))
                 for i in range(manifest.num_instances)]

    files = {
        "manifest.json": manifest.to_dict(),
        "report.json": report,
        "bootstrap.json": boot_dump,
    }
    for name, doc in files.items():
        docio.write_json(out / name, doc)
    streams = {
        "records.jsonl": [r.to_dict() for r in records],
        "traces.jsonl": [t.to_dict() for t in traces],
    }
    if all(hasattr(x, "to_dict") for x in instances):
        streams["instances.jsonl"] = [x.to_dict() for x in instances]
    for name, docs in streams.items():
        docio.write_jsonl(out / name, docs)
    for name in sorted([*files, *streams]):
        trail.outputs[name] = docio.file_hash(out / name)
    trail.record_count = len(records)
    trail.finished_at = utc_now()
    docio.write_json(out / "audit_trail.json", trail.to_dict())
    return BenchOutcome(records, report, trail, out, traces)


def load_records(path: str | Path) -> list[RunRecord]:
    return [RunRecord.from_dict(d) for d in docio.read_jsonl(path)]
