"""Synthetic QUBO testbed: instances, objective, two budgeted heuristics and
an exhaustive oracle.

Both heuristics keep a local field ``h = (Q + Q^T) x`` so a single-bit flip is
scored in O(1) and applied in O(n). They poll a :class:`BudgetGuard` every
iteration; passing ``max_iters`` switches to a fixed iteration count instead,
which makes results bit-reproducible regardless of machine load.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .harness import Budget, BudgetGuard

BRUTE_FORCE_MAX_N = 24
SA_UPHILL_PROB = 0.01
_BATCH = 1024
_BF_ROWS = 256
# Gains above -_IMPROVE_EPS * (1 + |f|) are rounding residue in the local field.
_IMPROVE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class QuboInstance:
    matrix: np.ndarray
    n: int
    density: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        Q = np.asarray(self.matrix, dtype=float)
        if Q.shape != (self.n, self.n):
            raise DomainError(f"matrix shape {Q.shape} does not match n={self.n}")
        Q.setflags(write=False)
        object.__setattr__(self, "matrix", Q)

    @classmethod
    def from_matrix(cls, Q, density: float = 1.0, seed: int | None = None) -> "QuboInstance":
        Q = np.asarray(Q, dtype=float)
        return cls(Q, Q.shape[0], density, seed)

    def __eq__(self, other):
        if not isinstance(other, QuboInstance):
            return NotImplemented
        return (self.n == other.n and self.density == other.density
                and self.seed == other.seed and np.array_equal(self.matrix, other.matrix))

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "density": self.density, "seed": self.seed,
                "values": self.matrix.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "QuboInstance":
        n = int(d["n"])
        values = np.asarray(d["values"], dtype=float)
        if values.size != n * n:
            raise DomainError(f"expected {n * n} matrix values, got {values.size}")
        return cls(values.reshape(n, n), n, float(d["density"]), d.get("seed"))


def generate_qubo(n: int, density: float = 0.25, seed: int = 0) -> QuboInstance:
    """Symmetric, zero-diagonal matrix with standard-normal couplings.

    The Bernoulli(density) mask is drawn for the upper triangle and mirrored,
    so the result stays symmetric.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 < density <= 1.0:
        raise DomainError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.normal(size=(n, n)), 1)
    mask = np.triu(rng.random(size=(n, n)) < density, 1)
    upper = upper * mask
    return QuboInstance(upper + upper.T, n, float(density), int(seed))


def _as_bits(instance: QuboInstance, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (instance.n,):
        raise DomainError(f"bit vector of length {x.size} for an n={instance.n} instance")
    if not np.all((x == 0) | (x == 1)):
        raise DomainError("bit vector entries must be 0 or 1")
    return x.astype(float)


def objective(instance: QuboInstance, x) -> float:
    """x^T Q x."""
    xf = _as_bits(instance, x)
    return float(xf @ instance.matrix @ xf)


@dataclass(frozen=True)
class QualityBounds:
    f_reference_low: float
    f_reference_high: float

    def __post_init__(self):
        if not self.f_reference_low <= self.f_reference_high:
            raise DomainError(
                f"bounds out of order: low={self.f_reference_low} > high={self.f_reference_high}")


def quality_from_objective(f: float, bounds: QualityBounds) -> float:
    """Map an objective to [0, 1]: 1 at the low reference, 0 at the high one."""
    lo, hi = bounds.f_reference_low, bounds.f_reference_high
    if hi == lo:
        return 1.0
    return float(np.clip((hi - f) / (hi - lo), 0.0, 1.0))


def _self_quality(f_best: float, f_worst: float) -> float:
    # Self-referenced quality: the walk's own best against its own worst.
    hi = f_worst if f_worst > f_best else f_best + 1.0
    return quality_from_objective(f_best, QualityBounds(f_best, hi))


class _Stream:
    """Batched draws from one generator; the sequence depends only on the seed."""

    def __init__(self, rng: np.random.Generator, n: int):
        self.rng, self.n = rng, n
        self._idx = self._u = None
        self._pos = _BATCH

    def next(self) -> tuple[int, float]:
        if self._pos == _BATCH:
            self._idx = self.rng.integers(0, self.n, size=_BATCH)
            self._u = self.rng.random(size=_BATCH)
            self._pos = 0
        k = self._pos
        self._pos += 1
        return int(self._idx[k]), float(self._u[k])


def _stop_condition(budget: Budget, max_iters: int | None):
    if max_iters is not None:
        if max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {max_iters}")
        return None
    return BudgetGuard(budget.time_s)


def solve_sa(instance: QuboInstance, budget: Budget, seed: int,
             max_iters: int | None = None) -> tuple[float, dict[str, Any]]:
    """Single-flip Metropolis-style walk with a fixed uphill acceptance rate.

    Non-increasing flips are always taken; increasing ones with probability
    ``SA_UPHILL_PROB``. There is no cooling schedule.
    """
    guard = _stop_condition(budget, max_iters)
    Q = instance.matrix
    n = instance.n
    S = Q + Q.T
    diag = np.diag(Q).copy()
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n).astype(float)
    f = float(x @ Q @ x)
    h = S @ x
    f_best = f_worst = f
    best_x = x.copy()
    stream = _Stream(rng, n)
    flips = accepted = 0
    t_best = 0.0
    while True:
        if guard is None:
            if flips >= max_iters:
                break
        elif guard.expired():
            break
        i, u = stream.next()
        d = 1.0 - 2.0 * x[i]
        delta = d * h[i] + diag[i]
        flips += 1
        if delta <= 0.0 or u < SA_UPHILL_PROB:
            x[i] += d
            h += d * S[:, i]
            f += delta
            accepted += 1
            if f < f_best:
                f_best = f
                best_x[:] = x
                if guard is not None:
                    t_best = guard.elapsed()
            if f > f_worst:
                f_worst = f
    # incremental updates drift; report the exact objective of the best state
    f_best = float(best_x @ Q @ best_x)
    meta = {
        "time_s": guard.elapsed() if guard is not None else None,
        "energy_j": 0.0,
        "cost_usd": 0.0,
        "f_best": f_best,
        "f_worst": f_worst,
        "flips_evaluated": flips,
        "flips_accepted": accepted,
        "time_to_best_s": t_best if guard is not None else None,
        "best_x": "".join(str(int(b)) for b in best_x),
    }
    return _self_quality(f_best, f_worst), meta


def solve_greedy(instance: QuboInstance, budget: Budget, seed: int,
                 max_iters: int | None = None,
                 record_trajectory: bool = False) -> tuple[float, dict[str, Any]]:
    """Steepest single-flip descent with random restarts.

    Starts from the all-zeros string. Each iteration scores all n flips and
    takes the best strictly improving one (lowest index on ties); when none
    improves, it restarts from a uniform random bitstring.
    ``record_trajectory`` adds ``meta["trajectory"]``, a list of
    (restart_index, objective) pairs; off by default as it is not a scalar.
    """
    guard = _stop_condition(budget, max_iters)
    Q = instance.matrix
    n = instance.n
    S = Q + Q.T
    diag = np.diag(Q).copy()
    rng = np.random.default_rng(seed)
    x = np.zeros(n)
    f = 0.0
    h = np.zeros(n)
    f_best = f_worst = f
    best_x = x.copy()
    steps = restarts = improving = 0
    t_best = 0.0
    trajectory = [(0, f)] if record_trajectory else None
    while True:
        if guard is None:
            if steps >= max_iters:
                break
        elif guard.expired():
            break
        steps += 1
        gains = (1.0 - 2.0 * x) * h + diag
        i = int(np.argmin(gains))
        if gains[i] < -_IMPROVE_EPS * (1.0 + abs(f)):
            d = 1.0 - 2.0 * x[i]
            x[i] += d
            h += d * S[:, i]
            f += float(gains[i])
            improving += 1
            if f < f_best:
                f_best = f
                best_x[:] = x
                if guard is not None:
                    t_best = guard.elapsed()
            f_worst = max(f_worst, f)
        else:
            restarts += 1
            x = rng.integers(0, 2, size=n).astype(float)
            h = S @ x
            f = float(x @ Q @ x)
            f_worst = max(f_worst, f)
            if f < f_best:
                f_best = f
                best_x[:] = x
                if guard is not None:
                    t_best = guard.elapsed()
        if trajectory is not None:
            trajectory.append((restarts, f))
    f_best = float(best_x @ Q @ best_x)
    meta = {
        "time_s": guard.elapsed() if guard is not None else None,
        "energy_j": 0.0,
        "cost_usd": 0.0,
        "f_best": f_best,
        "f_worst": f_worst,
        "flips_evaluated": steps * n,
        "steps": steps,
        "improving_flips": improving,
        "restarts": restarts,
        "time_to_best_s": t_best if guard is not None else None,
        "best_x": "".join(str(int(b)) for b in best_x),
    }
    if trajectory is not None:
        meta["trajectory"] = trajectory
    return _self_quality(f_best, f_worst), meta


def _all_bits(k: int) -> np.ndarray:
    """All 2^k bit rows in lexicographic order (first column most significant)."""
    if k == 0:
        return np.zeros((1, 0))
    ints = np.arange(1 << k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((ints[:, None] >> shifts) & 1).astype(float)


def brute_force_optimum(instance: QuboInstance) -> tuple[float, np.ndarray]:
    """Exact minimum of x^T Q x over all 2^n bitstrings.

    Ties go to the lexicographically smallest bitstring. The enumeration splits
    x into a leading and a trailing half and evaluates all combinations as one
    2^a by 2^b table, built in row blocks to bound memory.
    """
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise DomainError(f"brute force is capped at n={BRUTE_FORCE_MAX_N}, got n={n}")
    Q = instance.matrix
    a = n // 2
    A, B = _all_bits(a), _all_bits(n - a)
    Qaa, Qab, Qba, Qbb = Q[:a, :a], Q[:a, a:], Q[a:, :a], Q[a:, a:]
    fa = np.einsum("ij,jk,ik->i", A, Qaa, A)
    fb = np.einsum("ij,jk,ik->i", B, Qbb, B)
    coupling = (Qab + Qba.T) @ B.T
    best_val, best_k = np.inf, 0
    # row blocks in ascending order; strict < keeps the earliest minimum
    for start in range(0, A.shape[0], _BF_ROWS):
        block = (fa[start:start + _BF_ROWS, None]
                 + A[start:start + _BF_ROWS] @ coupling + fb[None, :])
        k = int(np.argmin(block))
        if block.flat[k] < best_val:
            best_val = block.flat[k]
            best_k = start * B.shape[0] + k
    ra, rb = divmod(best_k, B.shape[0])
    x = np.concatenate([A[ra], B[rb]]).astype(np.int8)
    return objective(instance, x), x


class SharedBoundsCalibrator:
    """Per-instance quality against references shared by every solver.

    The low reference is the best objective any solver found on the instance,
    or the exact optimum when ``n <= exact_max_n``, whichever is lower. The
    high reference is the mean objective of ``n_random`` seeded uniform
    bitstrings. Solver qualities on one instance are therefore comparable.
    """

    def __init__(self, exact_max_n: int = 20, n_random: int = 256):
        self.exact_max_n = exact_max_n
        self.n_random = n_random

    def bounds(self, instance: QuboInstance, seed: int,
               metas: Sequence[Mapping[str, Any] | None]) -> QualityBounds:
        found = [m["f_best"] for m in metas if m is not None and "f_best" in m]
        if instance.n <= self.exact_max_n:
            found.append(brute_force_optimum(instance)[0])
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 2, size=(self.n_random, instance.n)).astype(float)
        high = float(np.mean(np.einsum("ij,jk,ik->i", X, instance.matrix, X)))
        low = min(found) if found else high
        return QualityBounds(min(low, high), high)

    def __call__(self, instance: QuboInstance, seed: int,
                 metas: Sequence[Mapping[str, Any] | None]) -> list[float | None]:
        b = self.bounds(instance, seed, metas)
        return [None if m is None or "f_best" not in m
                else quality_from_objective(m["f_best"], b) for m in metas]
