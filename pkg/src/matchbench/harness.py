"""Matched-budget benchmark runs.

Every solver sees the same instance and the same :class:`Budget`. Seeds come
from :func:`derive_seed`, so they do not depend on loop order or on which
other solvers are registered.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

from . import docio
from .audit import StageTrace
from .errors import ConfigurationError, DomainError

log = logging.getLogger(__name__)

DEFAULT_OVERSHOOT_TOLERANCE = 0.10
_SEED_DOMAIN = b"matchbench.derive_seed.v1"

# Seed stream reserved for instance generation; solver j uses stream j + 1.
INSTANCE_STREAM = 0


@dataclass(frozen=True)
class Budget:
    time_s: float
    cost_usd: float = 0.0
    energy_j: float = 0.0

    def __post_init__(self):
        if not (self.time_s > 0 and math.isfinite(self.time_s)):
            raise DomainError(f"budget time_s must be a positive finite number, got {self.time_s}")
        if not self.cost_usd >= 0:
            raise DomainError(f"budget cost_usd must be >= 0, got {self.cost_usd}")
        if not self.energy_j >= 0:
            raise DomainError(f"budget energy_j must be >= 0, got {self.energy_j}")

    def to_dict(self) -> dict[str, float]:
        return {"time_s": self.time_s, "cost_usd": self.cost_usd, "energy_j": self.energy_j}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Budget":
        return cls(float(d["time_s"]), float(d.get("cost_usd", 0.0)),
                   float(d.get("energy_j", 0.0)))


class BudgetGuard:
    """Monotonic-clock deadline polled by cooperative solvers."""

    def __init__(self, seconds: float):
        self.seconds = float(seconds)
        self.start = time.perf_counter()
        self.deadline = self.start + self.seconds

    def expired(self) -> bool:
        return time.perf_counter() >= self.deadline

    def elapsed(self) -> float:
        return time.perf_counter() - self.start


def budget_guard(budget: Budget) -> BudgetGuard:
    return BudgetGuard(budget.time_s)


def derive_seed(master_seed: int, instance_index: int, solver_index: int) -> int:
    """Hash (master, instance, stream) into a 63-bit nonnegative seed.

    SHA-256 over a domain tag and the decimal triple; the first eight digest
    bytes, big-endian, shifted right by one bit.
    """
    for name, v in (("master_seed", master_seed), ("instance_index", instance_index),
                    ("solver_index", solver_index)):
        if int(v) != v or v < 0:
            raise DomainError(f"{name} must be a nonnegative integer, got {v!r}")
    msg = _SEED_DOMAIN + f":{int(master_seed)}:{int(instance_index)}:{int(solver_index)}".encode()
    return int.from_bytes(hashlib.sha256(msg).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class RunRecord:
    solver: str
    instance_id: int
    quality: float
    time_s: float
    energy_j: float = 0.0
    cost_usd: float = 0.0
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.quality <= 1.0:
            raise DomainError(f"quality must lie in [0, 1], got {self.quality}")
        if not self.time_s >= 0:
            raise DomainError(f"time_s must be >= 0, got {self.time_s}")

    def to_dict(self) -> dict[str, Any]:
        return {"solver": self.solver, "instance_id": self.instance_id,
                "quality": self.quality, "time_s": self.time_s,
                "energy_j": self.energy_j, "cost_usd": self.cost_usd,
                "meta": dict(self.meta)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RunRecord":
        return cls(str(d["solver"]), int(d["instance_id"]), float(d["quality"]),
                   float(d["time_s"]), float(d.get("energy_j", 0.0)),
                   float(d.get("cost_usd", 0.0)), dict(d.get("meta", {})))


SolveFn = Callable[..., "tuple[float, dict[str, Any]]"]


@dataclass(frozen=True)
class SolverSpec:
    """A named solver: ``solve(instance, budget, seed, **options) -> (quality, meta)``."""

    name: str
    solve: SolveFn

    def __post_init__(self):
        if not self.name:
            raise ConfigurationError("solver name must be nonempty")


@dataclass(frozen=True)
class RunManifest:
    """Preregistered run configuration.

    ``config_hash`` is derived from the canonical form of every other field, so
    two manifest files that differ only in key order hash identically.
    """

    master_seed: int
    num_instances: int
    budget: Budget
    solver_names: tuple[str, ...]
    instance_generator_id: str = "qubo"
    instance_params: Mapping[str, Any] = field(default_factory=dict)
    target_quality: float | None = None
    rubric_version: str = "qrl-default-1.0"
    iteration_budget: int | None = None
    overshoot_tolerance: float = DEFAULT_OVERSHOOT_TOLERANCE
    quality_policy: str = "shared"
    n_boot: int = 1000
    alpha: float = 0.05
    bootstrap_seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "solver_names", tuple(self.solver_names))
        object.__setattr__(self, "instance_params", dict(self.instance_params))
        if self.num_instances < 1:
            raise ConfigurationError(f"num_instances must be >= 1, got {self.num_instances}")
        if self.master_seed < 0:
            raise ConfigurationError(f"master_seed must be >= 0, got {self.master_seed}")
        if not self.solver_names:
            raise ConfigurationError("manifest lists no solvers")
        if len(set(self.solver_names)) != len(self.solver_names):
            raise ConfigurationError(f"duplicate solver names in {list(self.solver_names)}")
        if self.target_quality is not None and not 0.0 <= self.target_quality <= 1.0:
            raise ConfigurationError(
                f"target_quality must lie in [0, 1], got {self.target_quality}")
        if self.iteration_budget is not None and self.iteration_budget < 1:
            raise ConfigurationError(
                f"iteration_budget must be >= 1, got {self.iteration_budget}")
        if not self.overshoot_tolerance >= 0:
            raise ConfigurationError("overshoot_tolerance must be >= 0")
        if self.quality_policy not in ("shared", "self"):
            raise ConfigurationError(
                f"quality_policy must be 'shared' or 'self', got {self.quality_policy!r}")
        if self.n_boot < 1 or not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError("bootstrap needs n_boot >= 1 and alpha in (0, 1]")

    def to_dict(self) -> dict[str, Any]:
        d = self.content()
        d["config_hash"] = self.config_hash
        return d

    def content(self) -> dict[str, Any]:
        return {
            "master_seed": self.master_seed,
            "num_instances": self.num_instances,
            "budget": self.budget.to_dict(),
            "solvers": list(self.solver_names),
            "instance_generator": {"id": self.instance_generator_id,
                                   "params": dict(self.instance_params)},
            "target_quality": self.target_quality,
            "rubric_version": self.rubric_version,
            "iteration_budget": self.iteration_budget,
            "overshoot_tolerance": self.overshoot_tolerance,
            "quality_policy": self.quality_policy,
            "bootstrap": {"n_boot": self.n_boot, "alpha": self.alpha,
                          "seed": self.bootstrap_seed},
        }

    @property
    def config_hash(self) -> str:
        return docio.content_hash(self.content())

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "RunManifest":
        try:
            gen = d.get("instance_generator", {})
            boot = d.get("bootstrap", {})
            tq = d.get("target_quality")
            it = d.get("iteration_budget")
            manifest = cls(
                master_seed=int(d["master_seed"]),
                num_instances=int(d["num_instances"]),
                budget=Budget.from_dict(d["budget"]),
                solver_names=tuple(str(s) for s in d["solvers"]),
                instance_generator_id=str(gen.get("id", "qubo")),
                instance_params=_normalize_params(gen.get("params", {})),
                target_quality=None if tq is None else float(tq),
                rubric_version=str(d.get("rubric_version", "qrl-default-1.0")),
                iteration_budget=None if it is None else int(it),
                overshoot_tolerance=float(d.get("overshoot_tolerance",
                                                DEFAULT_OVERSHOOT_TOLERANCE)),
                quality_policy=str(d.get("quality_policy", "shared")),
                n_boot=int(boot.get("n_boot", 1000)),
                alpha=float(boot.get("alpha", 0.05)),
                bootstrap_seed=int(boot.get("seed", 42)),
            )
        except KeyError as exc:
            raise ConfigurationError(f"manifest missing required field {exc}") from exc
        except (TypeError, DomainError) as exc:
            raise ConfigurationError(f"manifest field invalid: {exc}") from exc
        stated = d.get("config_hash")
        if stated is not None and stated != manifest.config_hash:
            log.warning("manifest config_hash %s does not match content hash %s",
                        stated, manifest.config_hash)
        return manifest

    def with_overrides(self, **changes) -> "RunManifest":
        return replace(self, **changes)


def _normalize_params(params: Mapping[str, Any]) -> dict[str, Any]:
    # 24 and 24.0 must hash the same.
    out = {}
    for k, v in params.items():
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        out[str(k)] = v
    return out


# instance, seed, per-solver metas (None for failures) -> per-solver qualities
QualityCalibrator = Callable[[Any, int, Sequence["Mapping[str, Any] | None"]],
                             "Sequence[float | None]"]


def run_benchmark(manifest: RunManifest, registry: Sequence[SolverSpec],
                  instance_generator: Callable[[int, int], Any],
                  calibrator: QualityCalibrator | None = None,
                  traces: list[StageTrace] | None = None) -> list[RunRecord]:
    """Run every manifest solver on every generated instance, sequentially.

    Records come out instance-major, solvers in manifest order. A solver that
    raises yields a quality-0 record tagged with ``error``; a call that runs
    past ``budget.time_s * (1 + overshoot_tolerance)`` is tagged
    ``budget_violation``. With ``calibrator`` set, qualities are recomputed per
    instance from all solvers' metadata (the raw value stays in
    ``meta["quality_raw"]``). If ``traces`` is given, one stage-timing trace
    per instance is appended to it.
    """
    by_name = {}
    for spec in registry:
        if spec.name in by_name:
            raise ConfigurationError(f"duplicate solver {spec.name!r} in registry")
        by_name[spec.name] = spec
    missing = [n for n in manifest.solver_names if n not in by_name]
    if missing:
        raise ConfigurationError(
            f"unknown solvers {missing}; registered: {sorted(by_name)}")
    solvers = [by_name[n] for n in manifest.solver_names]
    budget = manifest.budget
    limit = budget.time_s * (1.0 + manifest.overshoot_tolerance)
    options = {}
    if manifest.iteration_budget is not None:
        options["max_iters"] = manifest.iteration_budget

    records: list[RunRecord] = []
    for i in range(manifest.num_instances):
        st = StageTrace()
        inst_seed = derive_seed(manifest.master_seed, i, INSTANCE_STREAM)
        t0 = time.perf_counter()
        instance = instance_generator(i, inst_seed)
        st.record("generate", time.perf_counter() - t0)

        raw = []
        for j, spec in enumerate(solvers):
            seed = derive_seed(manifest.master_seed, i, j + 1)
            t0 = time.perf_counter()
            try:
                q, info = spec.solve(instance, budget, seed, **options)
                err = None
            except Exception as exc:  # a failing solver must not drop the pair
                log.warning("solver %s failed on instance %d: %r", spec.name, i, exc)
                q, info, err = 0.0, {}, f"{type(exc).__name__}: {exc}"
            elapsed = time.perf_counter() - t0
            st.record(f"solve:{spec.name}", elapsed)
            raw.append((spec, seed, q, dict(info or {}), err, elapsed))

        qualities: Sequence[float | None] = [None] * len(raw)
        if calibrator is not None:
            t0 = time.perf_counter()
            qualities = calibrator(instance, inst_seed,
                                   [None if r[4] else r[3] for r in raw])
            st.record("calibrate", time.perf_counter() - t0)

        for (spec, seed, q, info, err, elapsed), q_cal in zip(raw, qualities):
            meta = {k: v for k, v in info.items() if _is_scalar(v)}
            meta["seed"] = seed
            meta["instance_seed"] = inst_seed
            if "time_s" in meta:
                meta["solver_time_s"] = meta.pop("time_s")
            quality = float(q)
            if err is not None:
                meta["error"] = err
                quality = 0.0
            elif q_cal is not None:
                meta["quality_raw"] = quality
                quality = float(q_cal)
            if not 0.0 <= quality <= 1.0:
                meta["error"] = f"quality {quality!r} outside [0, 1]"
                quality = 0.0
            if elapsed > limit:
                meta["budget_violation"] = True
                log.warning("solver %s overshot budget on instance %d: %.4fs > %.4fs",
                            spec.name, i, elapsed, limit)
            records.append(RunRecord(
                solver=spec.name, instance_id=i, quality=quality, time_s=elapsed,
                energy_j=float(info.get("energy_j", 0.0)),
                cost_usd=float(info.get("cost_usd", 0.0)), meta=meta))
        if traces is not None:
            traces.append(st)
    return records


def _is_scalar(v: Any) -> bool:
    return v is None or isinstance(v, (bool, int, float, str))
