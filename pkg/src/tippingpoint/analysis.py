"""Tipping-point sweeps, Rubin pooling and plausibility anchors."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .imputation import (Arm, Direction, Method, check_sensitivity, fit_for_imputation,
                         impute, impute_model_based, select_imputable)
from .survival import (Z_95, EstimationError, Family, HrEstimate, cox_fit, fit_exponential,
                       km_fit)

CLOGLOG_CLAMP = 1e-10
MIN_SUCCESS = 0.9


class Criterion(enum.Enum):
    UPPER_CI = "upper-ci"
    POINT_ESTIMATE = "point"


class ScanOrder(enum.Enum):
    """Order in which the grid is scanned for the first crossing.

    Deflation sweeps stress by lowering delta, so they scan downwards;
    inflation and kappa sweeps scan upwards.
    """

    ASCENDING = "ascending"
    DESCENDING = "descending"


@dataclass(frozen=True)
class PooledEstimate:
    param: float
    pooled_log_hr: float
    within_var: float
    between_var: float
    m: int
    total_var: float = field(init=False)
    pooled_hr: float = field(init=False)
    ci_low: float = field(init=False)
    ci_high: float = field(init=False)

    def __post_init__(self):
        total = self.within_var + (1.0 + 1.0 / self.m) * self.between_var
        half = Z_95 * math.sqrt(total)
        object.__setattr__(self, "total_var", total)
        object.__setattr__(self, "pooled_hr", math.exp(self.pooled_log_hr))
        object.__setattr__(self, "ci_low", math.exp(self.pooled_log_hr - half))
        object.__setattr__(self, "ci_high", math.exp(self.pooled_log_hr + half))

    def criterion_value(self, criterion):
        return self.ci_high if Criterion(criterion) is Criterion.UPPER_CI else self.pooled_hr


def rubin_pool(estimates, param=float("nan")):
    """Combine per-imputation log hazard ratios with Rubin's rules.

    The between-imputation variance is the sample variance of the log hazard
    ratios, on the same scale as the pooled point estimate.
    """
    estimates = list(estimates)
    m = len(estimates)
    if m < 2:
        raise ValueError("between-variance undefined for fewer than 2 estimates")
    log_hr = np.array([e.log_hr for e in estimates], dtype=float)
    se = np.array([e.se for e in estimates], dtype=float)
    if not (np.all(np.isfinite(log_hr)) and np.all(np.isfinite(se))):
        raise ValueError("estimates must be finite")
    # Deviations from the first estimate: identical estimates pool exactly.
    dev = log_hr - log_hr[0]
    return PooledEstimate(
        param=float(param),
        pooled_log_hr=float(log_hr[0] + dev.mean()),
        within_var=float(np.mean(se ** 2)),
        between_var=float(np.var(dev, ddof=1)),
        m=m,
    )


@dataclass(frozen=True)
class TippingPoint:
    """First grid value, in scan order, whose criterion value is at least 1.

    ``previous`` is the grid value scanned just before it, or ``None`` when the
    very first value already tips (nothing to tip).
    """

    value: float
    previous: float | None
    criterion: Criterion

    @property
    def bracket(self):
        return (self.previous, self.value)

    @property
    def already_tipped(self):
        return self.previous is None


@dataclass(frozen=True)
class PooledKmCurve:
    times: np.ndarray
    survival: np.ndarray
    per_imputation: tuple | None = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right")
        return np.concatenate(([1.0], self.survival))[idx]


@dataclass(frozen=True)
class SensitivitySweep:
    spec: object
    grid: tuple
    points: tuple
    criterion: Criterion = Criterion.UPPER_CI
    order: ScanOrder = ScanOrder.ASCENDING
    km: dict | None = None
    failures: tuple = ()

    @property
    def tipping(self):
        return find_tipping_point(self)

    def scan(self):
        """(grid value, pooled estimate) pairs in scan order."""
        pairs = list(zip(self.grid, self.points))
        return pairs[::-1] if self.order is ScanOrder.DESCENDING else pairs


def find_tipping_point(sweep, criterion=None):
    """Locate the first crossing of 1 in the sweep's stress direction."""
    criterion = Criterion(criterion or sweep.criterion)
    previous = None
    for value, point in sweep.scan():
        if point.criterion_value(criterion) >= 1.0:
            return TippingPoint(float(value), previous, criterion)
        previous = float(value)
    return None


def default_order(method, grid):
    """Deflation (model-based grid not exceeding 1) scans downwards."""
    if Method(method).model_based and max(grid) <= 1.0:
        return ScanOrder.DESCENDING
    return ScanOrder.ASCENDING


def validate_grid(method, grid):
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly ascending")
    for g in grid:
        check_sensitivity(method, g)
    return tuple(grid)


def _target_km(datasets, arm):
    return [km_fit(d.time[d.arm == arm], d.event[d.arm == arm]) for d in datasets]


def _sweep_point(task):
    dataset, spec, point, value, fits, keep_km = task
    spec = spec.with_sensitivity(value)
    if fits is not None:
        imputations = impute_model_based(dataset, spec, point, fits=fits)
    else:
        imputations = impute(dataset, spec, point)
    estimates, failures = [], []
    completed = [imp.materialize() for imp in imputations]
    for d in completed:
        try:
            estimates.append(cox_fit(d))
        except EstimationError as exc:
            failures.append(str(exc))
    curves = _target_km(completed, int(spec.selection.target_arm)) if keep_km else None
    return estimates, failures, curves


def run_sweep(dataset, spec, grid, *, criterion=Criterion.UPPER_CI, order=None,
              keep_km=False, workers=1):
    """Impute, analyse and pool at every grid value.

    Parameters
    ----------
    dataset : TrialDataset
    spec : ImputationSpec
        Template; its ``sensitivity`` is replaced by each grid value.
    grid : sequence of float
        Strictly ascending sensitivity values.
    criterion : Criterion
    order : ScanOrder, optional
        Defaults to :func:`default_order`.
    keep_km : bool
        Also pool the target arm's Kaplan-Meier curves at each point.
    workers : int
        Process count for sweep points; results do not depend on it.

    Returns
    -------
    SensitivitySweep
    """
    grid = validate_grid(spec.method, grid)
    if spec.m_imputations < 2:
        raise ValueError("a sweep needs at least 2 imputations per point")
    order = ScanOrder(order) if order is not None else default_order(spec.method, grid)
    fits = None
    if spec.method.model_based:
        selected = select_imputable(dataset, spec.selection)
        if selected.size:
            # The fit does not depend on delta: estimate once for the sweep.
            fits = fit_for_imputation(dataset, selected, spec.method.family)
    tasks = [(dataset, spec, i, g, fits, keep_km) for i, g in enumerate(grid)]
    results = parallel_map(_sweep_point, tasks, workers)
    points, failures, km = [], [], {} if keep_km else None
    for g, (estimates, failed, curves) in zip(grid, results):
        n = len(estimates) + len(failed)
        if failed:
            if len(estimates) < MIN_SUCCESS * n or len(estimates) < 2:
                raise EstimationError(
                    f"Cox fit failed in {len(failed)} of {n} imputations at {g:g}: {failed[0]}")
            warnings.warn(f"dropped {len(failed)} of {n} imputations at {g:g}: {failed[0]}",
                          RuntimeWarning, stacklevel=2)
            failures.append((g, len(failed)))
        points.append(rubin_pool(estimates, param=g))
        if keep_km:
            km[g] = pool_km_curves(curves)
    return SensitivitySweep(spec, grid, tuple(points), Criterion(criterion), order, km,
                            tuple(failures))


# --------------------------------------------------------------------------
# Anchors
# --------------------------------------------------------------------------

def anchor_hr(delta, reference_hr):
    """Hazard ratio of imputed subjects against the opposite arm.

    ``delta`` compares imputed subjects with their own arm; dividing by the
    between-arm ``reference_hr`` re-expresses it against the other arm.
    """
    if not (delta > 0 and reference_hr > 0):
        raise ValueError("delta and reference_hr must be positive")
    return delta / reference_hr


def compute_j2r_delta(fit_experimental, fit_control):
    """Hazard multiplier that makes experimental imputations follow the control hazard."""
    for fit in (fit_experimental, fit_control):
        if fit.family is not Family.EXPONENTIAL:
            raise ValueError("jump-to-reference anchor needs exponential fits")
    return fit_control.rate / fit_experimental.rate


def j2r_delta_from_data(dataset, selection):
    """Jump-to-reference delta from exponential fits to the non-selected subjects."""
    keep = np.ones(len(dataset), dtype=bool)
    keep[select_imputable(dataset, selection)] = False
    fits = {arm: fit_exponential(dataset.time[keep & (dataset.arm == arm)],
                                 dataset.event[keep & (dataset.arm == arm)])
            for arm in (0, 1)}
    return compute_j2r_delta(fits[1], fits[0])


def kappa_event_rate_anchor(dataset, selection, arm=None):
    """Kappa matching the observed event rate of ``arm`` (default: target arm)."""
    if select_imputable(dataset, selection).size == 0:
        raise ValueError("no subjects selected for imputation")
    arm = selection.target_arm if arm is None else Arm(arm)
    in_arm = dataset.arm == int(arm)
    if not in_arm.any():
        raise ValueError(f"arm {int(arm)} has no subjects")
    return float(np.clip(dataset.event[in_arm].mean(), 0.0, 1.0))


# --------------------------------------------------------------------------
# Kaplan-Meier pooling
# --------------------------------------------------------------------------

def pool_km_curves(curves, grid=None, *, keep=False):
    """Pool step-function survival curves on the complementary log-log scale.

    Parameters
    ----------
    curves : sequence of KmCurve or PooledKmCurve
    grid : array_like, optional
        Evaluation times; defaults to the union of the curves' jump times.
    keep : bool
        Retain the input curves on the result.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("need at least one curve")
    if grid is None:
        grid = np.unique(np.concatenate([np.asarray(c.times, dtype=float) for c in curves]))
    grid = np.asarray(grid, dtype=float)
    values = np.vstack([c(grid) for c in curves]) if grid.size else np.empty((len(curves), 0))
    s = np.clip(values, CLOGLOG_CLAMP, 1.0 - CLOGLOG_CLAMP)
    z = np.log(-np.log(s)).mean(axis=0)
    pooled = np.exp(-np.exp(z))
    return PooledKmCurve(grid, pooled, tuple(curves) if keep else None)
