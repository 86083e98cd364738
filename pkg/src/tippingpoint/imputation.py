"""Multiple-imputation engines for censored subjects.

Three mechanisms are provided:

* model-based delta adjustment: a parametric model is fitted per arm to the
  subjects not selected for imputation, and selected subjects receive event
  times drawn beyond their censoring time from the hazard scaled by ``delta``;
* deterministic assignment: a random fraction ``kappa`` of the selected
  subjects either has an event at its censoring time or is censored at the
  data cut-off;
* donor sampling: each selected subject copies the outcome of a donor drawn
  from the ``kappa`` fraction of shortest (worst) or longest (best) observed
  times across both arms.

Imputation ``m`` at sweep point ``p`` always draws from the stream
``substream(seed, p, m)``, so results do not depend on execution order.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .streams import open_uniform, substream
from .survival import Family, fit_parametric, sample_conditional_event_time

_EPS = 1e-9


class Arm(enum.IntEnum):
    CONTROL = 0
    EXPERIMENTAL = 1


class Method(enum.Enum):
    MODEL_EXPONENTIAL = "model-exponential"
    MODEL_WEIBULL = "model-weibull"
    DETERMINISTIC = "deterministic"
    DONOR = "donor"

    @property
    def model_based(self):
        return self in (Method.MODEL_EXPONENTIAL, Method.MODEL_WEIBULL)

    @property
    def family(self):
        return {Method.MODEL_EXPONENTIAL: Family.EXPONENTIAL,
                Method.MODEL_WEIBULL: Family.WEIBULL}[self]


class Direction(enum.Enum):
    """Which extreme a model-free imputation pushes towards.

    ``WORST``: events at the censoring time, or donors from the shortest
    observed times.  ``BEST``: censoring extended to the cut-off, or donors
    from the longest observed times.
    """

    WORST = "worst"
    BEST = "best"

    @classmethod
    def for_arm(cls, arm):
        return cls.WORST if Arm(arm) is Arm.EXPERIMENTAL else cls.BEST


@dataclass(frozen=True)
class SelectionCriteria:
    """Which censored subjects are imputed.

    Parameters
    ----------
    target_arm : Arm
    reason_filter : frozenset of str
        Censoring reasons that qualify, among ``{"dropout", "admin"}``.
    early_window : float, optional
        Only censorings at or before this time qualify.
    """

    target_arm: Arm
    reason_filter: frozenset = frozenset({"dropout"})
    early_window: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "target_arm", Arm(self.target_arm))
        reasons = frozenset(self.reason_filter)
        if not reasons:
            raise ValueError("reason_filter must not be empty")
        unknown = reasons - {"dropout", "admin"}
        if unknown:
            raise ValueError(f"unknown censoring reasons: {sorted(unknown)}")
        object.__setattr__(self, "reason_filter", reasons)
        if self.early_window is not None and not self.early_window > 0:
            raise ValueError("early_window must be positive")


@dataclass(frozen=True)
class ImputationSpec:
    """One imputation configuration; ``sensitivity`` is delta or kappa.

    ``direction`` overrides the model-free direction that otherwise follows
    the target arm (experimental: worst, control: best).  ``coherent_donors``
    restricts donors to times beyond the recipient's censoring time.
    """

    method: Method
    selection: SelectionCriteria
    sensitivity: float
    m_imputations: int = 100
    seed: int = 0
    direction: Direction | None = None
    coherent_donors: bool = False

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.direction is not None:
            object.__setattr__(self, "direction", Direction(self.direction))
        check_sensitivity(self.method, self.sensitivity)
        if int(self.m_imputations) < 1:
            raise ValueError("m_imputations must be positive")

    @property
    def resolved_direction(self):
        if self.direction is not None:
            return self.direction
        return Direction.for_arm(self.selection.target_arm)

    def with_sensitivity(self, value):
        return dataclasses.replace(self, sensitivity=float(value))


def check_sensitivity(method, value):
    value = float(value)
    if Method(method).model_based:
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"delta must be positive and finite, got {value}")
    elif not 0 <= value <= 1:
        raise ValueError(f"kappa must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ImputedDataset:
    """One completed dataset, stored as outcome replacements on a base dataset."""

    base: object
    index: np.ndarray
    time: np.ndarray
    event: np.ndarray
    imputation_index: int

    @property
    def replacements(self):
        ids = self.base.ids
        return {str(ids[i]): (float(t), bool(e))
                for i, t, e in zip(self.index, self.time, self.event)}

    def materialize(self):
        if self.index.size == 0:
            return self.base
        time = np.array(self.base.time)
        event = np.array(self.base.event)
        time[self.index] = self.time
        event[self.index] = self.event
        return self.base.with_outcomes(time, event)


def round_half_up(x):
    return int(math.floor(x + 0.5 + _EPS))


def select_imputable(dataset, criteria):
    """Positions of the subjects selected for imputation, in dataset order."""
    reasons = criteria.reason_filter
    reason_ok = np.zeros(len(dataset), dtype=bool)
    if "dropout" in reasons:
        reason_ok |= dataset.dropout
    if "admin" in reasons:
        reason_ok |= ~dataset.dropout
    mask = (~dataset.event) & (dataset.arm == int(criteria.target_arm)) & reason_ok
    if criteria.early_window is not None:
        mask &= dataset.time <= criteria.early_window
    return np.flatnonzero(mask)


def selected_ids(dataset, criteria):
    return {str(dataset.ids[i]) for i in select_imputable(dataset, criteria)}


def _truncate(time, cutoff):
    over = time > cutoff
    return np.where(over, cutoff, time), ~over


def _noop(dataset, spec):
    empty = np.empty(0, dtype=np.int64)
    return [ImputedDataset(dataset, empty, np.empty(0), np.empty(0, dtype=bool), m + 1)
            for m in range(spec.m_imputations)]


def fit_for_imputation(dataset, selected, family):
    """Per-arm parametric fits on the subjects not selected for imputation.

    Only arms that contain selected subjects are fitted.
    """
    keep = np.ones(len(dataset), dtype=bool)
    keep[selected] = False
    fits = {}
    for arm in np.unique(dataset.arm[selected]):
        mask = keep & (dataset.arm == arm)
        fits[int(arm)] = fit_parametric(family, dataset.time[mask], dataset.event[mask])
    return fits


def impute_model_based(dataset, spec, point=0, *, fits=None):
    """Delta-adjusted parametric imputation.

    Returns ``spec.m_imputations`` :class:`ImputedDataset` objects.  Drawn
    times beyond the cut-off are censored at the cut-off.
    """
    if not spec.method.model_based:
        raise ValueError(f"{spec.method} is not a model-based method")
    delta = float(spec.sensitivity)
    check_sensitivity(spec.method, delta)
    selected = select_imputable(dataset, spec.selection)
    if selected.size == 0:
        return _noop(dataset, spec)
    if fits is None:
        fits = fit_for_imputation(dataset, selected, spec.method.family)
    c = dataset.time[selected]
    arms = dataset.arm[selected]
    out = []
    for m in range(spec.m_imputations):
        rng = substream(spec.seed, point, m)
        u = open_uniform(rng, selected.size)
        t = np.empty(selected.size)
        for arm, fit in fits.items():
            rows = arms == arm
            t[rows] = sample_conditional_event_time(fit, c[rows], delta, u[rows])
        time, event = _truncate(t, dataset.cutoff)
        out.append(ImputedDataset(dataset, selected, time, event, m + 1))
    return out


def impute_deterministic(dataset, spec, point=0):
    """Deterministic model-free assignment to a random ``kappa`` fraction.

    Each imputation draws a fresh subset of ``round_half_up(kappa * n)``
    selected subjects.
    """
    if spec.method is not Method.DETERMINISTIC:
        raise ValueError("spec.method must be DETERMINISTIC")
    kappa = float(spec.sensitivity)
    selected = select_imputable(dataset, spec.selection)
    size = round_half_up(kappa * selected.size)
    if size == 0:
        return _noop(dataset, spec)
    worst = spec.resolved_direction is Direction.WORST
    out = []
    for m in range(spec.m_imputations):
        rng = substream(spec.seed, point, m)
        chosen = np.sort(rng.choice(selected, size=size, replace=False))
        if worst:
            time = dataset.time[chosen].copy()
            event = np.ones(size, dtype=bool)
        else:
            time = np.full(size, dataset.cutoff)
            event = np.zeros(size, dtype=bool)
        out.append(ImputedDataset(dataset, chosen, time, event, m + 1))
    return out


@dataclass(frozen=True)
class DonorPool:
    """Observed outcomes available for donor sampling, in pool order."""

    direction: Direction
    kappa: float
    time: np.ndarray
    event: np.ndarray
    ids: np.ndarray

    def __len__(self):
        return self.time.size


def build_donor_pool(dataset, direction, kappa, selected=None):
    """The ``ceil(kappa * N)`` shortest (worst) or longest (best) observed times.

    Donors are all subjects not in ``selected``, from both arms, ordered by
    observed time with ties broken by subject id.
    """
    direction = Direction(direction)
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    eligible = np.ones(len(dataset), dtype=bool)
    if selected is not None:
        eligible[selected] = False
    idx = np.flatnonzero(eligible)
    if idx.size == 0:
        raise ValueError("no donor-eligible subjects")
    ids = dataset.ids[idx].astype(str)
    order = idx[np.lexsort((ids, dataset.time[idx]))]
    size = min(idx.size, math.ceil(kappa * idx.size - _EPS))
    chosen = order[:size] if direction is Direction.WORST else order[idx.size - size:]
    return DonorPool(direction, float(kappa), dataset.time[chosen].copy(),
                     dataset.event[chosen].copy(), dataset.ids[chosen].copy())


def impute_donor_sampling(dataset, spec, point=0):
    """Model-free imputation by sampling donors uniformly with replacement."""
    if spec.method is not Method.DONOR:
        raise ValueError("spec.method must be DONOR")
    kappa = float(spec.sensitivity)
    selected = select_imputable(dataset, spec.selection)
    if selected.size == 0 or kappa == 0:
        return _noop(dataset, spec)
    pool = build_donor_pool(dataset, spec.resolved_direction, kappa, selected)
    c = dataset.time[selected]
    out = []
    for m in range(spec.m_imputations):
        rng = substream(spec.seed, point, m)
        if spec.coherent_donors:
            time = dataset.time[selected].copy()
            event = dataset.event[selected].copy()
            for j, cj in enumerate(c):
                ok = np.flatnonzero(pool.time > cj)
                if ok.size:
                    k = ok[rng.integers(ok.size)]
                    time[j], event[j] = pool.time[k], pool.event[k]
        else:
            k = rng.integers(len(pool), size=selected.size)
            time, event = pool.time[k], pool.event[k]
        time, kept = _truncate(time, dataset.cutoff)
        out.append(ImputedDataset(dataset, selected, time, event & kept, m + 1))
    return out


def impute(dataset, spec, point=0):
    """Dispatch to the engine for ``spec.method``."""
    if spec.method.model_based:
        return impute_model_based(dataset, spec, point)
    if spec.method is Method.DETERMINISTIC:
        return impute_deterministic(dataset, spec, point)
    return impute_donor_sampling(dataset, spec, point)
