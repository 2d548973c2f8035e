"""Monte Carlo operating characteristics of the score test and its interval.

Every replicate draws from its own Philox stream keyed on (seed, replicate
index), so results do not depend on chunking or on the number of worker
processes.  Tallies from chunks are merged by addition.
"""

from __future__ import annotations

import enum
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ci import confidence_interval
from .core import FMError, InputError, Margin, TrialCounts, as_margin
from .inference import z_statistic
from .mle import CaseTag

__all__ = [
    "Alternative",
    "SimConfig",
    "SimResult",
    "replicate_stream",
    "binomial_draw",
    "simulate",
]

MAX_DIAGNOSTICS = 100


class Alternative(str, enum.Enum):
    TWO_SIDED = "two-sided"
    GREATER = "greater"
    LESS = "less"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SimConfig:
    n1: int
    n2: int
    p1_true: float
    p2_true: float
    s0: Margin
    level: float = 0.95
    alternative: Alternative = Alternative.TWO_SIDED
    replicates: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "s0", as_margin(self.s0))
        object.__setattr__(self, "alternative", Alternative(self.alternative))
        for name in ("n1", "n2", "replicates"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InputError(f"{name} must be a positive integer, got {v!r}")
        for name in ("p1_true", "p2_true"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {getattr(self, name)!r}")
        if not 0.0 < self.level < 1.0:
            raise InputError(f"level must lie in (0, 1), got {self.level!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise InputError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass
class SimResult:
    replicates_run: int = 0
    rejections: int = 0
    ci_covered: int = 0
    failures: int = 0
    extreme_case_counts: dict = field(default_factory=lambda: {t.value: 0 for t in CaseTag})
    diagnostics: list = field(default_factory=list)

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replicates_run if self.replicates_run else 0.0

    @property
    def coverage_rate(self) -> float:
        return self.ci_covered / self.replicates_run if self.replicates_run else 0.0

    def merge(self, other: SimResult) -> SimResult:
        counts = Counter(self.extreme_case_counts)
        counts.update(other.extreme_case_counts)
        diagnostics = sorted(self.diagnostics + other.diagnostics, key=lambda d: d["replicate"])
        return SimResult(
            replicates_run=self.replicates_run + other.replicates_run,
            rejections=self.rejections + other.rejections,
            ci_covered=self.ci_covered + other.ci_covered,
            failures=self.failures + other.failures,
            extreme_case_counts={t.value: counts[t.value] for t in CaseTag}
            | {k: v for k, v in counts.items() if k not in CaseTag._value2member_map_},
            diagnostics=diagnostics[:MAX_DIAGNOSTICS],
        )

    def to_dict(self) -> dict:
        return {
            "replicates_run": self.replicates_run,
            "rejections": self.rejections,
            "ci_covered": self.ci_covered,
            "failures": self.failures,
            "rejection_rate": self.rejection_rate,
            "coverage_rate": self.coverage_rate,
            "extreme_case_counts": dict(self.extreme_case_counts),
            "failure_diagnostics": list(self.diagnostics),
        }


def replicate_stream(seed: int, replicate: int) -> np.random.Generator:
    """Independent counter-based generator for one replicate."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate,))
    return np.random.Generator(np.random.Philox(ss))


def binomial_draw(n: int, p: float, stream: np.random.Generator) -> int:
    """Exact Binomial(n, p) variate."""
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    return int(stream.binomial(n, p))


def _analyse(counts: TrialCounts, config: SimConfig):
    """(case tag, rejected, covered) for one table, or the error raised."""
    try:
        result = z_statistic(counts, config.s0)
    except FMError as exc:
        return None, exc
    tag = result.mle.case_tag.value
    alpha = 1.0 - config.level
    if config.alternative is Alternative.TWO_SIDED:
        p = result.p_two_sided
    elif config.alternative is Alternative.GREATER:
        p = result.p_upper
    else:
        p = result.p_lower
    try:
        ci = confidence_interval(counts, config.level)
    except FMError as exc:
        return tag, exc
    return tag, (p < alpha, config.p1_true - config.p2_true in ci)


def _run_chunk(config: SimConfig, start: int, stop: int) -> SimResult:
    out = SimResult()
    cache = {}
    for i in range(start, stop):
        stream = replicate_stream(config.seed, i)
        r1 = binomial_draw(config.n1, config.p1_true, stream)
        r2 = binomial_draw(config.n2, config.p2_true, stream)
        key = (r1, r2)
        if key not in cache:
            cache[key] = _analyse(TrialCounts(r1, config.n1, r2, config.n2), config)
        tag, outcome = cache[key]
        out.replicates_run += 1
        out.extreme_case_counts[tag or "Failed"] = out.extreme_case_counts.get(tag or "Failed", 0) + 1
        if isinstance(outcome, Exception):
            out.failures += 1
            if len(out.diagnostics) < MAX_DIAGNOSTICS:
                out.diagnostics.append(
                    {"replicate": i, "r1": r1, "r2": r2,
                     "error": type(outcome).__name__, "message": str(outcome)}
                )
            continue
        rejected, covered = outcome
        out.rejections += rejected
        out.ci_covered += covered
    return out


def simulate(config: SimConfig, workers: int | None = 1) -> SimResult:
    """Run ``config.replicates`` simulated trials.

    ``workers`` > 1 splits the replicates over processes; ``None`` uses all
    CPUs.  The result is identical for any worker count.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    n = config.replicates
    if workers <= 1 or n < 2:
        return _run_chunk(config, 0, n)
    chunks = min(workers * 4, n)
    bounds = [n * k // chunks for k in range(chunks + 1)]
    result = SimResult()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, config, a, b) for a, b in zip(bounds, bounds[1:])]
        for f in futures:
            result = result.merge(f.result())
    return result
