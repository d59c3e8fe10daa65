"""Preregistration notes and audit trails for benchmark runs."""
from __future__ import annotations

import datetime as _dt
import platform
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping

from . import __version__, docio
from .harness import Budget, RunManifest

DEFAULT_DECLARED_METRICS = (
    "mean_quality", "mean_time_s", "mean_energy_j", "mean_cost_usd",
    "quality_p95", "time_p95", "normalized_speedup", "bootstrap_ci",
)


def utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def environment_fingerprint() -> dict[str, str]:
    import numpy
    return {
        "python": sys.version.split()[0],
        "implementation": platform.python_implementation(),
        "platform": platform.platform(),
        "machine": platform.machine(),
        "numpy": numpy.__version__,
        "matchbench": __version__,
    }


@dataclass(frozen=True)
class PreregistrationNote:
    tau: float | None
    budget: Budget
    instance_generator_id: str
    instance_params: Mapping[str, Any]
    solvers: tuple[str, ...]
    solver_config: Mapping[str, Any]
    declared_metrics: tuple[str, ...] = DEFAULT_DECLARED_METRICS
    created_at: str = ""
    frozen: bool = True
    manifest_hash: str = ""

    @classmethod
    def from_manifest(cls, m: RunManifest, created_at: str | None = None,
                      declared_metrics=DEFAULT_DECLARED_METRICS) -> "PreregistrationNote":
        return cls(
            tau=m.target_quality, budget=m.budget,
            instance_generator_id=m.instance_generator_id,
            instance_params=dict(m.instance_params),
            solvers=tuple(m.solver_names),
            solver_config=_solver_config(m),
            declared_metrics=tuple(declared_metrics),
            created_at=created_at or utc_now(), frozen=True,
            manifest_hash=m.config_hash)

    def deviations(self, m: RunManifest) -> list[str]:
        """Fields where ``m`` departs from this note; empty when it matches."""
        if not self.frozen:
            return []
        checks = [
            ("tau", self.tau, m.target_quality),
            ("budget", self.budget.to_dict(), m.budget.to_dict()),
            ("instance_generator_id", self.instance_generator_id, m.instance_generator_id),
            ("instance_params", dict(self.instance_params), dict(m.instance_params)),
            ("solvers", list(self.solvers), list(m.solver_names)),
            ("solver_config", dict(self.solver_config), _solver_config(m)),
        ]
        return [f"{name}: preregistered {want!r}, executed {got!r}"
                for name, want, got in checks if want != got]

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "budget": self.budget.to_dict(),
            "instance_generator": {"id": self.instance_generator_id,
                                   "params": dict(self.instance_params)},
            "solvers": list(self.solvers),
            "solver_config": dict(self.solver_config),
            "declared_metrics": list(self.declared_metrics),
            "created_at": self.created_at,
            "frozen": self.frozen,
            "manifest_hash": self.manifest_hash,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PreregistrationNote":
        return cls(
            tau=d["tau"], budget=Budget.from_dict(d["budget"]),
            instance_generator_id=d["instance_generator"]["id"],
            instance_params=dict(d["instance_generator"]["params"]),
            solvers=tuple(d["solvers"]), solver_config=dict(d.get("solver_config", {})),
            declared_metrics=tuple(d.get("declared_metrics", DEFAULT_DECLARED_METRICS)),
            created_at=d.get("created_at", ""), frozen=bool(d.get("frozen", True)),
            manifest_hash=d.get("manifest_hash", ""))


def _solver_config(m: RunManifest) -> dict[str, Any]:
    return {"iteration_budget": m.iteration_budget, "quality_policy": m.quality_policy,
            "master_seed": m.master_seed, "num_instances": m.num_instances}


@dataclass
class AuditTrail:
    manifest_hash: str
    rubric_hash: str
    master_seed: int
    tool_version: str = __version__
    environment_fingerprint: dict[str, str] = field(default_factory=environment_fingerprint)
    started_at: str = ""
    finished_at: str = ""
    record_count: int = 0
    change_log: list[tuple[str, str]] = field(default_factory=list)
    hash_algorithm: str = docio.HASH_ALGORITHM
    deviating: bool = False
    deviations: list[str] = field(default_factory=list)
    outputs: dict[str, str] = field(default_factory=dict)

    def note(self, message: str) -> None:
        self.change_log.append((utc_now(), message))

    def to_dict(self) -> dict[str, Any]:
        return {
            "manifest_hash": self.manifest_hash,
            "rubric_hash": self.rubric_hash,
            "master_seed": self.master_seed,
            "tool_version": self.tool_version,
            "environment_fingerprint": dict(self.environment_fingerprint),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "record_count": self.record_count,
            "change_log": [{"timestamp": t, "note": n} for t, n in self.change_log],
            "hash_algorithm": self.hash_algorithm,
            "deviating": self.deviating,
            "deviations": list(self.deviations),
            "outputs": dict(self.outputs),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AuditTrail":
        return cls(
            manifest_hash=d["manifest_hash"], rubric_hash=d["rubric_hash"],
            master_seed=int(d["master_seed"]), tool_version=d["tool_version"],
            environment_fingerprint=dict(d["environment_fingerprint"]),
            started_at=d["started_at"], finished_at=d["finished_at"],
            record_count=int(d["record_count"]),
            change_log=[(e["timestamp"], e["note"]) for e in d["change_log"]],
            hash_algorithm=d.get("hash_algorithm", docio.HASH_ALGORITHM),
            deviating=bool(d.get("deviating", False)),
            deviations=list(d.get("deviations", [])),
            outputs=dict(d.get("outputs", {})))
