"""Choosing a tipping-point analysis from the direction of dropout imbalance."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .imputation import Arm, Direction, Method


class Imbalance(enum.Enum):
    CONTROL_HEAVIER = "control-heavier"
    EXPERIMENTAL_HEAVIER = "experimental-heavier"
    BALANCED = "balanced"


@dataclass(frozen=True)
class Recommendation:
    method: Method
    arm: Arm | None
    direction: Direction | None
    rationale: str


@dataclass(frozen=True)
class PlanRecommendation:
    imbalance_direction: Imbalance
    control_rate: float
    experimental_rate: float
    recommended_methods: tuple

    def lines(self):
        yield (f"dropout control={self.control_rate:.4g} experimental={self.experimental_rate:.4g}"
               f" -> {self.imbalance_direction.value}")
        for i, r in enumerate(self.recommended_methods, start=1):
            arm = "both arms" if r.arm is None else r.arm.name.lower()
            yield f"{i}. {r.method.value} [{arm}]: {r.rationale}"


_CONTROL = (
    Recommendation(Method.DETERMINISTIC, Arm.CONTROL, Direction.BEST,
                   "kappa sweep extending control dropouts' censoring to the data cut-off"),
    Recommendation(Method.MODEL_WEIBULL, Arm.CONTROL, None,
                   "delta < 1 sweep deflating the fitted control hazard after dropout"),
    Recommendation(Method.DONOR, Arm.CONTROL, Direction.BEST,
                   "kappa sweep sampling control dropouts from the best observed times"),
)

_EXPERIMENTAL = (
    Recommendation(Method.DETERMINISTIC, Arm.EXPERIMENTAL, Direction.WORST,
                   "kappa sweep imputing experimental dropouts as events at dropout"),
    Recommendation(Method.MODEL_WEIBULL, Arm.EXPERIMENTAL, None,
                   "delta > 1 sweep inflating the fitted experimental hazard after dropout"),
    Recommendation(Method.DONOR, Arm.EXPERIMENTAL, Direction.WORST,
                   "kappa sweep sampling experimental dropouts from the worst observed times"),
)

_BALANCED = (
    Recommendation(Method.DETERMINISTIC, None, None,
                   "dropout is balanced: justify any single-arm imputation, or stress both "
                   "arms with arm-specific sensitivity parameters"),
)


def plan(control_rate, experimental_rate, tolerance=0.0):
    """Recommend analyses from arm-wise dropout proportions.

    Only the sign of ``control_rate - experimental_rate`` matters once the
    absolute difference exceeds ``tolerance``.
    """
    for r in (control_rate, experimental_rate):
        if not 0 <= r <= 1:
            raise ValueError(f"dropout rates must lie in [0, 1], got {r}")
    diff = control_rate - experimental_rate
    if abs(diff) <= tolerance:
        imbalance, recs = Imbalance.BALANCED, _BALANCED
    elif diff > 0:
        imbalance, recs = Imbalance.CONTROL_HEAVIER, _CONTROL
    else:
        imbalance, recs = Imbalance.EXPERIMENTAL_HEAVIER, _EXPERIMENTAL
    return PlanRecommendation(imbalance, float(control_rate), float(experimental_rate), recs)


def plan_dataset(dataset, tolerance=0.0):
    return plan(dataset.dropout_rate(0), dataset.dropout_rate(1), tolerance)
