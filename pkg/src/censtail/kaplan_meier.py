"""Kaplan-Meier curves evaluated at the order statistics."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKaplanMeier

__all__ = ["SurvivalTarget", "SurvivalCurve", "km_survival", "survival_ratio", "LOG_SPACE_MIN_N"]

# above this size the product is accumulated as a sum of logs
LOG_SPACE_MIN_N = 10_000


class SurvivalTarget(enum.Enum):
    EVENT = "event"    # distribution F of the variable of interest
    CENSOR = "censor"  # distribution G of the censoring variable


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Survival estimate ``values[i] = S(Z_{i+1,n})``.

    The last entry is always exactly zero (``forced_zero_at_max``).
    """

    target: SurvivalTarget
    values: np.ndarray
    forced_zero_at_max: bool = True

    def __len__(self) -> int:
        return int(self.values.shape[0])


def km_survival(ordered, target: SurvivalTarget = SurvivalTarget.EVENT) -> SurvivalCurve:
    """Product-limit estimate of ``1 - F`` (EVENT) or ``1 - G`` (CENSOR).

    Each rank ``m`` contributes the factor ``1 - 1/(n - m + 1)`` when its
    indicator counts as an event for ``target`` (``delta`` for EVENT,
    ``1 - delta`` for CENSOR). Ties are handled by rank, which together with
    the events-first ordering matches the usual tied-time convention.
    """
    target = SurvivalTarget(target)
    n = ordered.n
    events = ordered.delta if target is SurvivalTarget.EVENT else ~ordered.delta
    at_risk = np.arange(n, 0, -1, dtype=float)  # n - m + 1 for m = 1..n
    if n > LOG_SPACE_MIN_N:
        logs = np.zeros(n)
        # rank n has factor 0; its value is overwritten below anyway
        logs[:-1] = np.where(events[:-1], np.log1p(-1.0 / at_risk[:-1]), 0.0)
        values = np.exp(np.cumsum(logs))
    else:
        values = np.cumprod(np.where(events, (at_risk - 1.0) / at_risk, 1.0))
    values[-1] = 0.0
    values.flags.writeable = False
    return SurvivalCurve(target, values)


def survival_ratio(curve: SurvivalCurve, j: int, k: int, n: int) -> float:
    """``S(Z_{n-j+1,n}) / S(Z_{n-k,n})`` for ``1 <= j <= k <= n-1``."""
    if not (1 <= j <= k <= n - 1):
        raise ValueError(f"need 1 <= j <= k <= n-1, got j={j}, k={k}, n={n}")
    den = curve.values[n - k - 1]
    if den <= 0.0:
        raise DegenerateKaplanMeier("degenerate Kaplan-Meier denominator")
    return float(curve.values[n - j] / den)
