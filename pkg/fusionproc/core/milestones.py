"""Milestone steps and reference scales for the k-process.

All logarithms are natural. Steps index considered pairs, so they can be
used directly as snapshot steps of a coupled run.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Optional

logger = logging.getLogger(__name__)

OMEGA_CHOICES = ("loglog", "log", "const:<c>")


class MilestoneError(ValueError):
    """Raised for unknown omega choices or invalid (n, k)."""


def resolve_omega(choice: str, n: int) -> float:
    """Evaluate the slowly growing function omega(n).

    ``loglog`` and ``log`` are clamped below at 1 so small desk-scale n do
    not produce non-positive values.
    """

    text = (choice or "loglog").strip().lower()
    if text == "loglog":
        value = math.log(math.log(n)) if n > 1 else 0.0
        return max(value, 1.0)
    if text == "log":
        return max(math.log(n), 1.0) if n > 1 else 1.0
    if text.startswith("const:"):
        try:
            value = float(text.split(":", 1)[1])
        except ValueError as exc:
            raise MilestoneError(f"invalid omega constant in {choice!r}") from exc
        if not value > 0:
            raise MilestoneError("omega constant must be positive")
        return value
    raise MilestoneError(f"unknown omega choice {choice!r}; expected one of {', '.join(OMEGA_CHOICES)}")


@dataclass(frozen=True)
class Milestones:
    n: int
    k: int
    omega_choice: str
    omega: float
    lambda1: float
    m1: int
    lambda2: float
    m2_bound: int
    lambda3: float
    m3: int
    lambda3_clamped: bool
    l1_at_m1_pred: float
    l2_at_m1_scale: Optional[float]
    l1_at_m3_scale: float
    special_total_at_m3_lower: Optional[float]
    regime: str

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)

    def resolve(self, token: str) -> int:
        """Map a snapshot token (``m1``, ``m2``, ``m3`` or an integer) to a step."""

        name = token.strip().lower()
        if name == "m1":
            return self.m1
        if name == "m2":
            return self.m2_bound
        if name == "m3":
            return self.m3
        try:
            return int(name)
        except ValueError as exc:
            raise MilestoneError(f"unknown snapshot token {token!r}") from exc


def _step(n: int, lam: float, sign: int) -> int:
    raw = math.floor((n / 2) * (1 + sign * lam * n ** (-1 / 3)))
    return min(max(raw, 0), n * (n - 1) // 2)


def regime(n: int, k: int, omega: float) -> str:
    """Label (n, k) with its scaling regime."""

    cube_root = n ** (1 / 3)
    log_n = math.log(n) if n > 1 else 0.0
    loglog_n = math.log(log_n) if log_n > 1 else 0.0
    if k <= cube_root / omega:
        return "a"
    if log_n > 0 and k > n / log_n:
        return "c"
    if k >= cube_root * log_n ** (4 / 3) * loglog_n ** (1 / 3) and loglog_n > 0:
        return "b"
    return "window"


def compute_milestones(n: int, k: int, omega: str = "loglog") -> Milestones:
    if n < 2:
        raise MilestoneError("milestones need n >= 2")
    if not 1 <= k <= n:
        raise MilestoneError(f"k must satisfy 1 <= k <= n, got k={k} n={n}")
    omega_value = resolve_omega(omega, n)
    cube_root = n ** (1 / 3)

    lambda1 = cube_root / (k * omega_value)
    lambda2 = cube_root * omega_value / k
    log_ratio = math.log(k / cube_root)
    clamped = log_ratio < 1.0
    if clamped:
        logger.warning(
            "log(k/n^(1/3)) = %.4f clamped to 1 for n=%s k=%s when computing lambda3",
            log_ratio,
            n,
            k,
        )
    lambda3 = math.sqrt(k * max(log_ratio, 1.0) / cube_root)

    l2_scale = None
    if lambda1 > 1:
        l2_scale = n ** (2 / 3) * lambda1 ** (-2) * math.log(lambda1)
    special_lower = None
    if k > cube_root and log_ratio > 0:
        special_lower = 0.25 * math.sqrt(n * k / log_ratio)

    return Milestones(
        n=n,
        k=k,
        omega_choice=omega,
        omega=omega_value,
        lambda1=lambda1,
        m1=_step(n, lambda1, +1),
        lambda2=lambda2,
        m2_bound=_step(n, lambda2, +1),
        lambda3=lambda3,
        m3=_step(n, lambda3, -1),
        lambda3_clamped=clamped,
        l1_at_m1_pred=2 * lambda1 * n ** (2 / 3),
        l2_at_m1_scale=l2_scale,
        l1_at_m3_scale=n / k,
        special_total_at_m3_lower=special_lower,
        regime=regime(n, k, omega_value),
    )
