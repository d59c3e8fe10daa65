"""Per-solver summaries and a paired bootstrap interval for the normalized speedup."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import docio
from .errors import DomainError
from .harness import RunRecord
from .metrics import QualityTimeSeries, normalized_speedup
from .quantile import quantile

DEFAULT_N_BOOT = 1000
DEFAULT_ALPHA = 0.05
DEFAULT_BOOT_SEED = 42


@dataclass(frozen=True)
class SolverSummary:
    mean_quality: float
    mean_time_s: float
    mean_energy_j: float
    mean_cost_usd: float
    quality_p95: float
    time_p95: float
    count: int


@dataclass(frozen=True)
class SummaryTable:
    rows: Mapping[str, SolverSummary]

    def __getitem__(self, solver: str) -> SolverSummary:
        return self.rows[solver]

    def to_dict(self) -> dict[str, Any]:
        return {name: vars(row).copy() for name, row in self.rows.items()}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SummaryTable":
        return cls({name: SolverSummary(**row) for name, row in d.items()})


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def summarize(records: Sequence[RunRecord]) -> SummaryTable:
    """Means over instances plus 95th percentiles of quality and time, per solver.

    Energy and cost are whatever the solvers declared; nothing is metered.
    """
    if not records:
        raise DomainError("cannot summarize an empty record set")
    groups: dict[str, list[RunRecord]] = {}
    for r in records:
        groups.setdefault(r.solver, []).append(r)
    rows = {}
    for name, rs in groups.items():
        q = [r.quality for r in rs]
        t = [r.time_s for r in rs]
        rows[name] = SolverSummary(
            mean_quality=_mean(q),
            mean_time_s=_mean(t),
            mean_energy_j=_mean([r.energy_j for r in rs]),
            mean_cost_usd=_mean([r.cost_usd for r in rs]),
            quality_p95=quantile(q, 0.95),
            time_p95=quantile(t, 0.95),
            count=len(rs),
        )
    return SummaryTable(rows)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    n_boot: int
    n_unreachable_resamples: int = 0
    degenerate: bool = False
    samples: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def to_dict(self, include_samples: bool = False) -> dict[str, Any]:
        d = {"lower": docio.encode_float(self.lower),
             "upper": docio.encode_float(self.upper),
             "alpha": self.alpha, "n_boot": self.n_boot,
             "n_unreachable_resamples": self.n_unreachable_resamples,
             "degenerate": self.degenerate}
        if include_samples:
            d["samples"] = [docio.encode_float(s) for s in self.samples]
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ConfidenceInterval":
        return cls(docio.decode_float(d["lower"]), docio.decode_float(d["upper"]),
                   float(d["alpha"]), int(d["n_boot"]),
                   int(d.get("n_unreachable_resamples", 0)),
                   bool(d.get("degenerate", False)),
                   tuple(docio.decode_float(s) for s in d.get("samples", ())))


def paired_series(records: Sequence[RunRecord], solver_a: str, solver_b: str
                  ) -> tuple[dict[int, list[tuple[float, float]]],
                             dict[int, list[tuple[float, float]]]]:
    """(time, quality) observations per instance for each solver; checks pairing."""
    a: dict[int, list[tuple[float, float]]] = {}
    b: dict[int, list[tuple[float, float]]] = {}
    for r in records:
        if r.solver == solver_a:
            a.setdefault(r.instance_id, []).append((r.time_s, r.quality))
        elif r.solver == solver_b:
            b.setdefault(r.instance_id, []).append((r.time_s, r.quality))
    for name, side in ((solver_a, a), (solver_b, b)):
        if not side:
            raise DomainError(f"no records for solver {name!r}")
    if set(a) != set(b):
        only_a = sorted(set(a) - set(b))
        only_b = sorted(set(b) - set(a))
        raise DomainError(
            f"unpaired instances: only {solver_a!r} has {only_a}, only {solver_b!r} has {only_b}")
    return a, b


def speedup_for_ids(a, b, ids: Sequence[int], tau: float) -> float:
    """Normalized speedup over the multiset ``ids``, with unreachable as +inf."""
    sa = QualityTimeSeries(tuple((i, t, q) for i in ids for t, q in a[i]))
    sb = QualityTimeSeries(tuple((i, t, q) for i in ids for t, q in b[i]))
    return normalized_speedup(sa, sb, tau).as_float()


def paired_bootstrap_ci(records: Sequence[RunRecord], solver_a: str, solver_b: str,
                        tau: float, n_boot: int = DEFAULT_N_BOOT,
                        alpha: float = DEFAULT_ALPHA,
                        seed: int = DEFAULT_BOOT_SEED) -> ConfidenceInterval:
    """Percentile interval from resampling instance ids with replacement.

    Each resample keeps both solvers' records for every drawn id. Resamples in
    which either side never reaches ``tau`` count as +inf.
    """
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must lie in [0, 1], got {tau}")
    if n_boot < 1:
        raise DomainError(f"n_boot must be >= 1, got {n_boot}")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    a, b = paired_series(records, solver_a, solver_b)
    ids = np.array(sorted(a))
    rng = np.random.default_rng(seed)
    boot = []
    for _ in range(n_boot):
        sample = rng.choice(ids, size=len(ids), replace=True)
        boot.append(speedup_for_ids(a, b, [int(i) for i in sample], tau))
    n_inf = sum(1 for v in boot if math.isinf(v))
    if n_inf == n_boot:
        return ConfidenceInterval(math.inf, math.inf, alpha, n_boot, n_inf, True, tuple(boot))
    lo = quantile(boot, alpha / 2)
    hi = quantile(boot, 1 - alpha / 2)
    return ConfidenceInterval(lo, hi, alpha, n_boot, n_inf, False, tuple(boot))
