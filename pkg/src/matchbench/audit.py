"""Stage timing and bottleneck attribution for pipeline runs."""
from __future__ import annotations

import contextlib
import functools
import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

from . import docio
from .errors import DomainError
from .quantile import quantile


@dataclass
class StageTrace:
    """Per-run accumulator of stage durations in seconds.

    Re-entering a stage adds to its total; insertion order is kept.
    """

    durations: dict[str, float] = field(default_factory=dict)
    run_id: str | None = None

    def record(self, stage_name: str, elapsed: float) -> "StageTrace":
        if not elapsed >= 0:
            raise DomainError(f"elapsed time must be >= 0, got {elapsed}")
        self.durations[stage_name] = self.durations.get(stage_name, 0.0) + float(elapsed)
        return self

    @contextlib.contextmanager
    def stage(self, stage_name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.record(stage_name, time.perf_counter() - t0)

    def timed(self, stage_name: str):
        """Decorator form of :meth:`stage`."""
        def deco(fn):
            @functools.wraps(fn)
            def wrapper(*args, **kwargs):
                with self.stage(stage_name):
                    return fn(*args, **kwargs)
            return wrapper
        return deco

    def __getitem__(self, stage_name: str) -> float:
        return self.durations[stage_name]

    def total(self) -> float:
        return math.fsum(self.durations.values())

    def to_dict(self) -> dict[str, Any]:
        # files carry milliseconds
        return {"run_id": self.run_id,
                "stages_ms": {k: v * 1e3 for k, v in self.durations.items()}}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "StageTrace":
        st = cls(run_id=d.get("run_id"))
        for name, ms in d["stages_ms"].items():
            st.record(str(name), float(ms) / 1e3)
        return st


def record_stage(trace: StageTrace, stage_name: str, elapsed: float) -> StageTrace:
    return trace.record(stage_name, elapsed)


@dataclass(frozen=True)
class AuditReport:
    mean_shares: Mapping[str, float]
    bottlenecks: tuple[tuple[str, float], ...]
    replicate_count: int
    skipped_replicates: int = 0
    drift_mean_ppm: float | None = None
    drift_p95_ppm: float | None = None
    degenerate: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_shares": dict(self.mean_shares),
            "bottlenecks": [{"stage": s, "mean_share": v} for s, v in self.bottlenecks],
            "replicate_count": self.replicate_count,
            "skipped_replicates": self.skipped_replicates,
            "drift_mean_ppm": self.drift_mean_ppm,
            "drift_p95_ppm": self.drift_p95_ppm,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AuditReport":
        return cls(dict(d["mean_shares"]),
                   tuple((b["stage"], float(b["mean_share"])) for b in d["bottlenecks"]),
                   int(d["replicate_count"]), int(d.get("skipped_replicates", 0)),
                   d.get("drift_mean_ppm"), d.get("drift_p95_ppm"),
                   bool(d.get("degenerate", False)))


def _durations(t: StageTrace | Mapping[str, float]) -> Mapping[str, float]:
    return t.durations if isinstance(t, StageTrace) else t


def stage_shares(trace: StageTrace | Mapping[str, float]) -> dict[str, float] | None:
    """Each stage's fraction of one run's total; None when the total is zero."""
    run = _durations(trace)
    total = math.fsum(run.values())
    if total <= 0:
        return None
    return {s: d / total for s, d in run.items()}


def audit_bottlenecks(traces: Sequence[StageTrace | Mapping[str, float]], top_k: int,
                      drift_samples_ppm: Sequence[float] | None = None) -> AuditReport:
    """Mean per-stage time shares across runs and the top-k stages by share.

    Runs whose total is zero contribute nothing to the shares but still count
    in the divisor, so the mean shares then sum to (positive runs / all runs).
    Ties in the ranking go to the alphabetically first stage.
    """
    if not traces:
        raise DomainError("audit needs at least one trace")
    if top_k < 1:
        raise DomainError(f"top_k must be >= 1, got {top_k}")
    runs = [_durations(t) for t in traces]
    for run in runs:
        for name, d in run.items():
            if not d >= 0:
                raise DomainError(f"stage {name!r} has negative duration {d}")
    stages = sorted({s for run in runs for s in run})

    per_stage: dict[str, list[float]] = {s: [] for s in stages}
    skipped = 0
    for run in runs:
        total = math.fsum(run.get(s, 0.0) for s in stages)
        if total <= 0:
            skipped += 1
            continue
        for s in stages:
            per_stage[s].append(run.get(s, 0.0) / total)
    R = len(runs)
    # fsum keeps the result independent of trace order
    mean_shares = {s: math.fsum(per_stage[s]) / R for s in stages}
    degenerate = skipped == R
    if degenerate:
        bottlenecks: tuple[tuple[str, float], ...] = ()
    else:
        ranked = sorted(mean_shares.items(), key=lambda kv: (-kv[1], kv[0]))
        bottlenecks = tuple(ranked[:top_k])

    drift_mean = drift_p95 = None
    if drift_samples_ppm is not None and len(drift_samples_ppm) > 0:
        xs = [float(x) for x in drift_samples_ppm]
        if any(not x >= 0 for x in xs):
            raise DomainError("drift samples must be >= 0")
        drift_mean = math.fsum(xs) / len(xs)
        drift_p95 = quantile(xs, 0.95)
    return AuditReport(mean_shares, bottlenecks, R, skipped, drift_mean, drift_p95,
                       degenerate)


def load_traces(path) -> list[StageTrace]:
    """One JSON record per run: ``{"run_id": ..., "stages_ms": {...}}``."""
    return [StageTrace.from_dict(d) for d in docio.read_jsonl(path)]
