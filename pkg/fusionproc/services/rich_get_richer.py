"""The (C, x, y) rich-get-richer process and its concentration checks.

Step ``q`` draws one uniform ``u`` in [0, 1) and gives ``c_q`` to X when
``u < X / (X + Y)``, otherwise to Y. Batch simulations draw one row of
``runs`` uniforms per step from the same Philox sub-stream, so column ``j``
of the draws reproduces run ``j`` exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from fusionproc.core.edge_stream import STREAM_CXY, make_generator
from fusionproc.models import CxyTrajectory, MetricSummary
from fusionproc.schemas import CxyConfig
from fusionproc.services.stats import summarize

logger = logging.getLogger(__name__)

TWO_SIDED_EPSILON_MAX = 1.5
_TAIL_CHUNK = 4096


class HypothesisViolationError(ValueError):
    """Raised when a configuration does not satisfy a checker's hypothesis."""


class ScaleSeparationError(ValueError):
    """Raised when c or x is not small enough against y."""


class ChernoffBounds(NamedTuple):
    upper: float
    lower: float
    two_sided: float


@dataclass(frozen=True)
class TailEstimate:
    t: float
    upper_empirical: float
    lower_empirical: float
    two_sided_empirical: float
    upper_bound: float
    lower_bound: float
    two_sided_bound: float
    stderr: float

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class KeyLemmaCheck:
    empirical: float
    bound: float
    stderr: float
    ratio_empirical: float
    threshold: float
    runs: int

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CxyLemmaCheck:
    ratio: MetricSummary
    median_fraction: float
    bound: float
    runs: int

    def as_dict(self) -> dict[str, Any]:
        return {
            "ratio": self.ratio.as_dict(),
            "median_fraction": self.median_fraction,
            "bound": self.bound,
            "runs": self.runs,
        }


@dataclass(frozen=True)
class MartingaleCheck:
    mean: float
    stderr: float
    expected: float
    runs: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == self.expected else math.inf
        return (self.mean - self.expected) / self.stderr

    def as_dict(self) -> dict[str, Any]:
        return {**asdict(self), "z_score": self.z_score}


def run_cxy(cfg: CxyConfig, draws: Optional[Sequence[float]] = None) -> CxyTrajectory:
    """Simulate one run, drawing from the config seed unless ``draws`` is given."""

    increments = cfg.C
    if draws is None:
        draws = make_generator(cfg.seed, STREAM_CXY).random(len(increments)).tolist()
    elif len(draws) != len(increments):
        raise ValueError(f"expected {len(increments)} draws, got {len(draws)}")
    x, y = cfg.x, cfg.y
    t_values = [x + y]
    x_values = [x]
    y_values = [y]
    probabilities: list[float] = []
    for increment, u in zip(increments, draws):
        p = x / (x + y)
        probabilities.append(p)
        if u < p:
            x += increment
        else:
            y += increment
        t_values.append(x + y)
        x_values.append(x)
        y_values.append(y)
    return CxyTrajectory(
        t=tuple(t_values), X=tuple(x_values), Y=tuple(y_values), p=tuple(probabilities)
    )


def simulate_cxy_batch(
    C: Sequence[int], x: int, y: int, runs: int, seed: int
) -> np.ndarray:
    """Return X(t_r) for ``runs`` independent runs."""

    if runs < 1:
        raise ValueError("runs must be at least 1")
    rng = make_generator(seed, STREAM_CXY)
    X = np.full(runs, x, dtype=np.int64)
    Y = np.full(runs, y, dtype=np.int64)
    for increment in C:
        u = rng.random(runs)
        gain = u < X / (X + Y)
        X += increment * gain
        Y += increment * ~gain
    return X


def chernoff_bounds(C: Sequence[int], p: float, t: float) -> ChernoffBounds:
    """Closed-form tail bounds for the weighted Bernoulli sum with weights ``C``.

    The two-sided bound is the epsilon form with ``epsilon = t / mu``; it is
    reported as 1.0 once epsilon exceeds 3/2, where the form does not apply.
    """

    if not C:
        raise HypothesisViolationError("the increment sequence must be non-empty")
    if not 0.0 < p < 1.0:
        raise HypothesisViolationError(f"p must lie in (0, 1), got {p}")
    if t < 0:
        raise HypothesisViolationError("t must be non-negative")
    c = max(C)
    mu = p * sum(C)
    upper = math.exp(-t * t / (2 * c * (mu + t / 3)))
    lower = math.exp(-t * t / (2 * c * mu))
    epsilon = t / mu
    two_sided = 1.0
    if epsilon <= TWO_SIDED_EPSILON_MAX:
        two_sided = 2 * math.exp(-epsilon * epsilon * mu / (3 * c))
    return ChernoffBounds(upper=upper, lower=lower, two_sided=two_sided)


def chernoff_tail_estimate(
    C: Sequence[int], p: float, t_grid: Sequence[float], runs: int, seed: int
) -> list[TailEstimate]:
    """Monte Carlo tails of the maximal deviations of the partial sums.

    For each ``t`` this estimates ``P(max_j (S_j - mu_j) >= t)``, the
    matching lower tail and the two-sided maximum, next to the closed-form
    bounds.
    """

    if runs < 1:
        raise ValueError("runs must be at least 1")
    weights = np.asarray(C, dtype=np.float64)
    rng = make_generator(seed, STREAM_CXY)
    upper_max = np.empty(runs)
    lower_max = np.empty(runs)
    for start in range(0, runs, _TAIL_CHUNK):
        size = min(_TAIL_CHUNK, runs - start)
        hits = rng.random((size, weights.size)) < p
        deviation = np.cumsum(weights * (hits - p), axis=1)
        upper_max[start : start + size] = deviation.max(axis=1)
        lower_max[start : start + size] = (-deviation).max(axis=1)
    two_sided_max = np.maximum(upper_max, lower_max)

    estimates = []
    for t in t_grid:
        bounds = chernoff_bounds(C, p, t)
        upper = float(np.mean(upper_max >= t))
        estimates.append(
            TailEstimate(
                t=float(t),
                upper_empirical=upper,
                lower_empirical=float(np.mean(lower_max >= t)),
                two_sided_empirical=float(np.mean(two_sided_max >= t)),
                upper_bound=bounds.upper,
                lower_bound=bounds.lower,
                two_sided_bound=bounds.two_sided,
                stderr=math.sqrt(upper * (1 - upper) / runs),
            )
        )
    return estimates


def _final_times(cfg: CxyConfig) -> int:
    return cfg.x + cfg.y + sum(cfg.C)


def check_martingale(cfg: CxyConfig, runs: int) -> MartingaleCheck:
    fractions = simulate_cxy_batch(cfg.C, cfg.x, cfg.y, runs, cfg.seed) / _final_times(cfg)
    stderr = float(fractions.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return MartingaleCheck(
        mean=float(fractions.mean()),
        stderr=stderr,
        expected=cfg.x / (cfg.x + cfg.y),
        runs=runs,
    )


def check_key_lemma(cfg: CxyConfig, w: float, runs: int) -> KeyLemmaCheck:
    """Estimate ``P(X(t_r) > x t_r / (x + y) + x / w)`` next to ``exp(-x / (12 c w^2))``."""

    if not cfg.C:
        raise HypothesisViolationError("the increment sequence must be non-empty")
    if 2 * sum(cfg.C) >= cfg.x + cfg.y:
        raise HypothesisViolationError(
            f"sum of increments {sum(cfg.C)} must be below (x + y) / 2 = {(cfg.x + cfg.y) / 2}"
        )
    if w < 1:
        raise HypothesisViolationError("w must be at least 1")
    t_r = _final_times(cfg)
    share = cfg.x / (cfg.x + cfg.y)
    threshold = cfg.x * t_r / (cfg.x + cfg.y) + cfg.x / w
    final = simulate_cxy_batch(cfg.C, cfg.x, cfg.y, runs, cfg.seed)
    empirical = float(np.mean(final > threshold))
    ratio_empirical = float(np.mean(final / t_r > share * (1 + 1 / w)))
    bound = math.exp(-cfg.x / (12 * cfg.c * w * w))
    logger.debug("Key lemma check x=%s y=%s w=%s: empirical=%s bound=%s", cfg.x, cfg.y, w, empirical, bound)
    return KeyLemmaCheck(
        empirical=empirical,
        bound=bound,
        stderr=math.sqrt(empirical * (1 - empirical) / runs),
        ratio_empirical=ratio_empirical,
        threshold=threshold,
        runs=runs,
    )


def check_cxy_lemma(cfg: CxyConfig, runs: int) -> CxyLemmaCheck:
    """Distribution of ``X(t_r) y / (x t_r)`` with the failure bound ``exp(-x / (20 c))``."""

    if not cfg.C:
        raise HypothesisViolationError("the increment sequence must be non-empty")
    if 100 * cfg.c > cfg.y or 100 * cfg.x > cfg.y:
        raise ScaleSeparationError(
            f"need c <= y/100 and x <= y/100, got c={cfg.c} x={cfg.x} y={cfg.y}"
        )
    t_r = _final_times(cfg)
    final = simulate_cxy_batch(cfg.C, cfg.x, cfg.y, runs, cfg.seed)
    ratio = summarize(final * cfg.y / (cfg.x * t_r))
    return CxyLemmaCheck(
        ratio=ratio,
        median_fraction=float(np.median(final / t_r)),
        bound=math.exp(-cfg.x / (20 * cfg.c)),
        runs=runs,
    )
