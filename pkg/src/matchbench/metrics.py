"""Readiness scoring and normalized speedup at a target quality.

Everything here is a pure function over immutable inputs.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import docio
from .errors import ConfigurationError, DomainError

# Lower bounds of readiness stages 2..9; stage 1 is everything below 10.
STAGE_THRESHOLDS: tuple[float, ...] = (10, 20, 35, 50, 65, 75, 85, 95)


@dataclass(frozen=True)
class DriftBracket:
    """Bonus awarded when ``lower_exclusive < drift <= upper_inclusive``."""

    lower_exclusive: float
    upper_inclusive: float
    bonus: float

    def contains(self, drift_ppm: float) -> bool:
        return self.lower_exclusive < drift_ppm <= self.upper_inclusive


DEFAULT_DRIFT_BRACKETS: tuple[DriftBracket, ...] = (
    DriftBracket(0.0, 10.0, 10.0),
    DriftBracket(10.0, 100.0, 6.0),
)


def drift_bonus(drift_ppm: float,
                brackets: Sequence[DriftBracket] = DEFAULT_DRIFT_BRACKETS) -> float:
    """Bracketed bonus for long-term calibration drift (ppm); 0 outside every bracket."""
    if not drift_ppm >= 0:
        raise DomainError(f"drift_ppm must be >= 0, got {drift_ppm}")
    for b in brackets:
        if b.contains(drift_ppm):
            return float(b.bonus)
    return 0.0


def stage_map(score: float) -> int:
    """Readiness level 1..9; every bracket is closed at its lower end."""
    stage = 1
    for threshold in STAGE_THRESHOLDS:
        if score >= threshold:
            stage += 1
        else:
            break
    return stage


@dataclass(frozen=True)
class ReadinessAssessment:
    checklist: tuple[tuple[str, bool], ...]
    weights: tuple[float, ...]
    drift_ppm: float
    rubric_version: str = "unversioned"

    def __post_init__(self):
        object.__setattr__(self, "checklist",
                           tuple((str(n), bool(s)) for n, s in self.checklist))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.checklist) != len(self.weights):
            raise ConfigurationError(
                f"rubric {self.rubric_version!r}: checklist has {len(self.checklist)} "
                f"items but {len(self.weights)} weights")
        for (name, _), w in zip(self.checklist, self.weights):
            if not w >= 0:
                raise ConfigurationError(
                    f"rubric {self.rubric_version!r}: weight of {name!r} is negative ({w})")
        if not self.drift_ppm >= 0:
            raise DomainError(f"drift_ppm must be >= 0, got {self.drift_ppm}")

    @classmethod
    def from_bits(cls, bits: Sequence[int | bool], weights: Sequence[float],
                  drift_ppm: float, rubric_version: str = "unversioned",
                  names: Sequence[str] | None = None) -> "ReadinessAssessment":
        if names is None:
            names = [f"item_{i + 1}" for i in range(len(bits))]
        return cls(tuple(zip(names, (bool(b) for b in bits))), tuple(weights),
                   drift_ppm, rubric_version)


@dataclass(frozen=True)
class ReadinessResult:
    score: float
    stage: int
    drift_bonus: float
    per_item_contribution: tuple[tuple[str, float], ...]
    rubric_version: str = "unversioned"

    def to_dict(self) -> dict[str, Any]:
        return {
            "score": self.score,
            "stage": self.stage,
            "drift_bonus": self.drift_bonus,
            "per_item_contribution": [{"item": n, "points": p}
                                      for n, p in self.per_item_contribution],
            "rubric_version": self.rubric_version,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ReadinessResult":
        return cls(float(d["score"]), int(d["stage"]), float(d["drift_bonus"]),
                   tuple((e["item"], float(e["points"])) for e in d["per_item_contribution"]),
                   d.get("rubric_version", "unversioned"))


def readiness_score(assessment: ReadinessAssessment,
                    brackets: Sequence[DriftBracket] = DEFAULT_DRIFT_BRACKETS
                    ) -> ReadinessResult:
    """Weighted checklist sum plus the drift bonus, mapped to a stage."""
    contributions = tuple(
        (name, w if satisfied else 0.0)
        for (name, satisfied), w in zip(assessment.checklist, assessment.weights))
    bonus = drift_bonus(assessment.drift_ppm, brackets)
    score = math.fsum(p for _, p in contributions) + bonus
    return ReadinessResult(score, stage_map(score), bonus, contributions,
                           assessment.rubric_version)


@dataclass(frozen=True)
class Rubric:
    """A versioned checklist definition: item names, weights and drift brackets."""

    version: str
    items: tuple[str, ...]
    weights: tuple[float, ...]
    drift_brackets: tuple[DriftBracket, ...] = DEFAULT_DRIFT_BRACKETS
    description: str = ""

    def __post_init__(self):
        if len(self.items) != len(self.weights):
            raise ConfigurationError(
                f"rubric {self.version!r}: {len(self.items)} items but "
                f"{len(self.weights)} weights")
        if len(set(self.items)) != len(self.items):
            raise ConfigurationError(f"rubric {self.version!r}: duplicate item names")
        if any(not w >= 0 for w in self.weights):
            raise ConfigurationError(f"rubric {self.version!r}: weights must be >= 0")
        for b in self.drift_brackets:
            if not b.lower_exclusive < b.upper_inclusive:
                raise ConfigurationError(
                    f"rubric {self.version!r}: empty drift bracket {b}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "rubric_version": self.version,
            "description": self.description,
            "items": [{"name": n, "weight": w} for n, w in zip(self.items, self.weights)],
            "drift_brackets": [
                {"lower_exclusive": b.lower_exclusive,
                 "upper_inclusive": b.upper_inclusive, "bonus": b.bonus}
                for b in self.drift_brackets],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Rubric":
        try:
            version = str(d["rubric_version"])
            items = d["items"]
            names = tuple(str(it["name"]) for it in items)
            weights = tuple(float(it["weight"]) for it in items)
            brackets = tuple(
                DriftBracket(float(b["lower_exclusive"]), float(b["upper_inclusive"]),
                             float(b["bonus"]))
                for b in d.get("drift_brackets", []))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"rubric document missing field: {exc}") from exc
        return cls(version, names, weights, brackets or DEFAULT_DRIFT_BRACKETS,
                   str(d.get("description", "")))

    def assessment(self, satisfied: Mapping[str, bool] | Sequence[tuple[str, bool]],
                   drift_ppm: float) -> ReadinessAssessment:
        """Bind attested checklist answers to this rubric, in rubric order."""
        pairs = list(satisfied.items()) if isinstance(satisfied, Mapping) else list(satisfied)
        if len(pairs) != len(self.items):
            raise ConfigurationError(
                f"rubric {self.version!r} has {len(self.items)} items, "
                f"assessment answers {len(pairs)}")
        answers = dict(pairs)
        if len(answers) != len(pairs):
            raise ConfigurationError(f"rubric {self.version!r}: duplicate answers")
        unknown = sorted(set(answers) - set(self.items))
        if unknown:
            raise ConfigurationError(
                f"rubric {self.version!r}: unknown checklist items {unknown}")
        checklist = tuple((n, bool(answers[n])) for n in self.items)
        return ReadinessAssessment(checklist, self.weights, drift_ppm, self.version)

    def score(self, satisfied, drift_ppm: float) -> ReadinessResult:
        return readiness_score(self.assessment(satisfied, drift_ppm), self.drift_brackets)


def load_rubric(path: str | Path | None = None) -> tuple[Rubric, str]:
    """Load a rubric document; returns the rubric and the file's content hash.

    ``None`` loads the bundled default rubric.
    """
    if path is None:
        ref = resources.files("matchbench").joinpath("rubrics/default.json")
        raw = ref.read_bytes()
    else:
        raw = Path(path).read_bytes()
    return (Rubric.from_dict(json.loads(raw)),
            hashlib.new(docio.HASH_ALGORITHM, raw).hexdigest())


# ---------------------------------------------------------------------------
# normalized speedup

class _Unreachable(enum.Enum):
    UNREACHABLE = "UNREACHABLE"

    def __repr__(self):
        return "UNREACHABLE"


UNREACHABLE = _Unreachable.UNREACHABLE


@dataclass(frozen=True)
class QualityTimeSeries:
    """(instance_id, time, quality) observations for one solver."""

    entries: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self):
        clean = []
        for inst, t, q in self.entries:
            t, q = float(t), float(q)
            if not t >= 0:
                raise DomainError(f"time must be >= 0, got {t}")
            if not 0.0 <= q <= 1.0:
                raise DomainError(f"quality must lie in [0, 1], got {q}")
            clean.append((int(inst), t, q))
        object.__setattr__(self, "entries", tuple(clean))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "QualityTimeSeries":
        """Build from (time, quality) pairs numbered 0, 1, 2, ..."""
        return cls(tuple((i, t, q) for i, (t, q) in enumerate(pairs)))

    @classmethod
    def from_records(cls, records: Iterable[Any], solver: str) -> "QualityTimeSeries":
        return cls(tuple((r.instance_id, r.time_s, r.quality)
                         for r in records if r.solver == solver))

    def time_to_target(self, tau: float) -> float | None:
        """Smallest time among entries whose quality reaches ``tau``."""
        times = [t for _, t, q in self.entries if q >= tau]
        return min(times) if times else None

    def scaled(self, alpha: float) -> "QualityTimeSeries":
        return QualityTimeSeries(tuple((i, t * alpha, q) for i, t, q in self.entries))

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class SpeedupOutcome:
    value: float | _Unreachable
    tau: float
    numerator_time: float | None = None
    denominator_time: float | None = None

    @property
    def reachable(self) -> bool:
        return self.value is not UNREACHABLE

    def as_float(self) -> float:
        """Unreachable collapses to +inf; use only when serializing or ranking."""
        return math.inf if self.value is UNREACHABLE else float(self.value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "reachable": self.reachable,
            "value": docio.encode_float(self.as_float()),
            "numerator_time": self.numerator_time,
            "denominator_time": self.denominator_time,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SpeedupOutcome":
        value = docio.decode_float(d["value"]) if d["reachable"] else UNREACHABLE
        return cls(value, float(d["tau"]), d.get("numerator_time"), d.get("denominator_time"))


def _check_tau(tau: float) -> None:
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"tau must lie in [0, 1], got {tau}")


def normalized_speedup(series_a: QualityTimeSeries, series_b: QualityTimeSeries,
                       tau: float) -> SpeedupOutcome:
    """Ratio of A's to B's minimum time at quality >= tau.

    Values above 1 mean B reaches the target faster.
    """
    _check_tau(tau)
    ta = series_a.time_to_target(tau)
    tb = series_b.time_to_target(tau)
    if ta is None or tb is None:
        return SpeedupOutcome(UNREACHABLE, tau, ta, tb)
    if tb == 0.0:
        # 0/0 is a tie; x/0 means B needed no time at all.
        value = 1.0 if ta == 0.0 else math.inf
    else:
        value = ta / tb
    return SpeedupOutcome(value, tau, ta, tb)


def tau_sweep(series_a: QualityTimeSeries, series_b: QualityTimeSeries,
              taus: Sequence[float]) -> list[tuple[float, SpeedupOutcome]]:
    for tau in taus:
        _check_tau(tau)
    return [(tau, normalized_speedup(series_a, series_b, tau)) for tau in taus]
