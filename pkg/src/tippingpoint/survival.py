"""Survival-analysis primitives.

Dataset model, Kaplan-Meier and reverse Kaplan-Meier estimation, exponential
and Weibull maximum likelihood for right-censored data, a single-covariate Cox
model with Efron ties, and inverse-transform sampling of event times beyond a
censoring time under a scaled hazard.

Times are in months throughout.  Parametric fits use the hazard
parameterisation ``h(t) = shape * rate * t**(shape - 1)``, so that
``H(t) = rate * t**shape`` and the exponential model is ``shape == 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

Z_95 = 1.96


class EstimationError(ValueError):
    """A model could not be estimated from the data (no events, monotone likelihood, ...)."""


class ConvergenceError(EstimationError):
    """An iterative fit stopped without converging.

    The last iterate is kept on ``last`` for diagnosis.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class Reason(enum.Enum):
    ADMINISTRATIVE = "admin"
    DROPOUT = "dropout"


class Family(enum.Enum):
    EXPONENTIAL = "exponential"
    WEIBULL = "weibull"


@dataclass(frozen=True)
class SubjectRecord:
    """One patient's observed outcome."""

    id: str
    arm: int
    time: float
    event: bool
    reason: Reason = Reason.ADMINISTRATIVE
    covariate: float | None = None


class TrialDataset:
    """Two-arm right-censored trial data with a data cut-off.

    Stored column-wise; ``records`` rebuilds :class:`SubjectRecord` views on
    demand.  Instances are treated as immutable: the arrays are flagged
    read-only and every transformation returns a new dataset.

    Parameters
    ----------
    ids, arm, time, event, dropout : array_like
        Per-subject columns.  ``arm`` is 0 (control) or 1 (experimental);
        ``dropout`` marks censorings for non-administrative reasons and is
        ignored wherever ``event`` is true.
    cutoff : float
        Data cut-off (maximum potential follow-up).
    covariate : array_like, optional
        Prognostic covariate; NaN where missing.
    """

    def __init__(self, ids, arm, time, event, dropout, cutoff, covariate=None,
                 *, _validate=True):
        self.ids = _frozen(np.asarray(ids, dtype=object))
        self.arm = _frozen(np.asarray(arm, dtype=np.int8))
        self.time = _frozen(np.asarray(time, dtype=np.float64))
        self.event = _frozen(np.asarray(event, dtype=bool))
        self.dropout = _frozen(np.asarray(dropout, dtype=bool))
        n = len(self.ids)
        if covariate is None:
            covariate = np.full(n, np.nan)
        self.covariate = _frozen(np.asarray(covariate, dtype=np.float64))
        self.cutoff = float(cutoff)
        if _validate:
            self._validate()

    def _validate(self):
        n = len(self.ids)
        for name in ("arm", "time", "event", "dropout", "covariate"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name!r} has length {len(getattr(self, name))}, expected {n}")
        if not (self.cutoff > 0 and math.isfinite(self.cutoff)):
            raise ValueError(f"cutoff must be positive and finite, got {self.cutoff}")
        if len(set(self.ids.tolist())) != n:
            raise ValueError("subject ids are not unique")
        if not np.all((self.arm == 0) | (self.arm == 1)):
            raise ValueError("arm must be 0 or 1")
        if not np.all(np.isfinite(self.time)) or np.any(self.time < 0):
            raise ValueError("times must be finite and nonnegative")
        if np.any(self.time > self.cutoff):
            i = int(np.argmax(self.time > self.cutoff))
            raise ValueError(f"subject {self.ids[i]!r} has time {self.time[i]} beyond cutoff {self.cutoff}")

    @classmethod
    def from_records(cls, records, cutoff):
        records = list(records)
        return cls(
            ids=[r.id for r in records],
            arm=[r.arm for r in records],
            time=[r.time for r in records],
            event=[r.event for r in records],
            dropout=[r.reason is Reason.DROPOUT for r in records],
            covariate=[np.nan if r.covariate is None else r.covariate for r in records],
            cutoff=cutoff,
        )

    @property
    def records(self):
        out = []
        for i in range(len(self)):
            cov = float(self.covariate[i])
            out.append(SubjectRecord(
                id=str(self.ids[i]),
                arm=int(self.arm[i]),
                time=float(self.time[i]),
                event=bool(self.event[i]),
                reason=Reason.DROPOUT if self.dropout[i] else Reason.ADMINISTRATIVE,
                covariate=None if math.isnan(cov) else cov,
            ))
        return out

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return (f"TrialDataset(n={len(self)}, events={int(self.event.sum())}, "
                f"cutoff={self.cutoff:g})")

    def __eq__(self, other):
        if not isinstance(other, TrialDataset):
            return NotImplemented
        return (self.cutoff == other.cutoff
                and np.array_equal(self.ids, other.ids)
                and np.array_equal(self.arm, other.arm)
                and np.array_equal(self.time, other.time)
                and np.array_equal(self.event, other.event)
                and np.array_equal(self.dropout, other.dropout)
                and np.array_equal(self.covariate, other.covariate, equal_nan=True))

    __hash__ = None

    def with_outcomes(self, time, event):
        """Copy of the dataset with outcome columns replaced (ids, arms, covariates kept)."""
        time = np.asarray(time, dtype=np.float64)
        if time.shape != self.time.shape or np.any(time > self.cutoff) or np.any(time < 0):
            raise ValueError("replacement times must match the dataset and lie in [0, cutoff]")
        return TrialDataset(self.ids, self.arm, time, event, self.dropout, self.cutoff,
                            self.covariate, _validate=False)

    def subset(self, mask):
        mask = np.asarray(mask)
        return TrialDataset(self.ids[mask], self.arm[mask], self.time[mask], self.event[mask],
                            self.dropout[mask], self.cutoff, self.covariate[mask],
                            _validate=False)

    def arm_subset(self, arm):
        return self.subset(self.arm == arm)

    def dropout_rate(self, arm):
        """Fraction of the arm censored for non-administrative reasons."""
        in_arm = self.arm == arm
        if not in_arm.any():
            raise ValueError(f"arm {arm} has no subjects")
        return float(np.mean(self.dropout[in_arm] & ~self.event[in_arm]))


def _frozen(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


def _time_event(data, event):
    if event is None:
        if not hasattr(data, "time"):
            raise TypeError("pass a TrialDataset or (time, event) arrays")
        return np.asarray(data.time, dtype=float), np.asarray(data.event, dtype=bool)
    time = np.asarray(data, dtype=float)
    event = np.asarray(event, dtype=bool)
    if time.shape != event.shape or time.ndim != 1:
        raise ValueError("time and event must be 1-D arrays of equal length")
    return time, event


# --------------------------------------------------------------------------
# Kaplan-Meier
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KmCurve:
    """Product-limit survival estimate with Greenwood standard errors.

    ``survival[j]`` is the estimate on ``[times[j], times[j+1])``; the curve
    equals 1 before the first event time.
    """

    times: np.ndarray
    survival: np.ndarray
    se: np.ndarray
    at_risk: np.ndarray
    n_events: np.ndarray

    def __call__(self, t):
        """Right-continuous step evaluation at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right")
        padded = np.concatenate(([1.0], self.survival))
        return padded[idx]


def km_fit(data, event=None):
    """Kaplan-Meier estimate.

    Parameters
    ----------
    data : TrialDataset or array_like
        A dataset, or observed times (then ``event`` is required).
    event : array_like of bool, optional
        Event indicators when ``data`` holds times.

    Returns
    -------
    KmCurve
    """
    time, event = _time_event(data, event)
    if time.size == 0:
        raise ValueError("empty dataset")
    if np.any(time < 0) or not np.all(np.isfinite(time)):
        raise ValueError("times must be finite and nonnegative")
    order = np.sort(time)
    ev_times, n_events = np.unique(time[event], return_counts=True)
    at_risk = time.size - np.searchsorted(order, ev_times, side="left")
    surv = np.cumprod(1.0 - n_events / at_risk)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = n_events / (at_risk * (at_risk - n_events))
    gw = np.cumsum(terms)
    with np.errstate(invalid="ignore"):
        se = np.where(surv > 0, surv * np.sqrt(gw), 0.0)
    return KmCurve(ev_times, surv, se, at_risk.astype(np.int64), n_events.astype(np.int64))


def reverse_km(data, event=None):
    """Kaplan-Meier estimate of the censoring-time distribution (roles swapped)."""
    time, event = _time_event(data, event)
    return km_fit(time, ~event)


# --------------------------------------------------------------------------
# Parametric models
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricFit:
    """Fitted exponential or Weibull model, ``H(t) = rate * t**shape``."""

    family: Family
    shape: float
    rate: float
    loglik: float
    n_used: int
    shape_se: float | None = None
    rate_se: float | None = None

    def survival(self, t):
        return survival_eval(self, t)

    def hazard(self, t):
        return hazard_eval(self, t)

    def cumhaz(self, t):
        return cumhaz_eval(self, t)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("t must be nonnegative")
    return t


def cumhaz_eval(fit, t):
    t = _check_t(t)
    return fit.rate * t ** fit.shape


def survival_eval(fit, t):
    return np.exp(-cumhaz_eval(fit, t))


def hazard_eval(fit, t):
    t = _check_t(t)
    with np.errstate(divide="ignore"):
        return fit.shape * fit.rate * t ** (fit.shape - 1.0)


def fit_exponential(data, event=None):
    """Closed-form exponential MLE, ``rate = events / total follow-up``."""
    time, event = _time_event(data, event)
    total = float(time.sum())
    if not total > 0:
        raise EstimationError("total follow-up time is zero")
    d = int(event.sum())
    if d == 0:
        raise EstimationError("no events: hazard unidentifiable")
    rate = d / total
    loglik = d * math.log(rate) - rate * total
    return ParametricFit(Family.EXPONENTIAL, 1.0, rate, loglik, int(time.size),
                         shape_se=None, rate_se=rate / math.sqrt(d))


def weibull_loglik(shape, rate, time, event):
    """Right-censored Weibull log-likelihood at ``(shape, rate)``."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    te = time[event]
    return float(event.sum() * math.log(shape * rate) + (shape - 1.0) * np.log(te).sum()
                 - rate * np.sum(time ** shape))


def fit_weibull(data, event=None, *, tol=1e-8, max_iter=100, bounds=(1e-3, 1e3)):
    """Weibull MLE for right-censored data.

    The rate is profiled out in closed form, ``rate(shape) = d / sum(t**shape)``,
    leaving a strictly concave one-dimensional problem in the shape, solved by
    Newton's method with a bisection safeguard on ``bounds``.

    Raises
    ------
    EstimationError
        Fewer than two distinct positive event times.
    ConvergenceError
        No root of the profile score inside ``bounds`` or the iteration limit
        reached; ``last`` holds the last shape iterate.
    """
    time, event = _time_event(data, event)
    te = time[event]
    if np.any(te <= 0):
        raise EstimationError("Weibull fit needs positive event times")
    if np.unique(te).size < 2:
        raise EstimationError("need at least 2 distinct event times to identify the shape")
    d = te.size
    pos = time > 0
    # Rescale by the largest time: keeps u**shape in [0, 1] for any shape.
    scale = float(time.max())
    log_u = np.log(time[pos] / scale)
    sum_log_ue = float(np.sum(np.log(te / scale)))

    def moments(shape):
        w = np.exp(shape * log_u)
        a0 = w.sum()
        a1 = np.dot(w, log_u)
        a2 = np.dot(w, log_u * log_u)
        return a0, a1, a2

    def score(shape):
        a0, a1, a2 = moments(shape)
        m1 = a1 / a0
        g = d / shape + sum_log_ue - d * m1
        dg = -d / shape ** 2 - d * (a2 / a0 - m1 * m1)
        return g, dg

    lo, hi = bounds
    g_lo, _ = score(lo)
    g_hi, _ = score(hi)
    if not (g_lo > 0 > g_hi):
        raise ConvergenceError(f"profile score has no root in [{lo:g}, {hi:g}]",
                               last=hi if g_hi > 0 else lo)
    shape = 1.0
    for _ in range(max_iter):
        g, dg = score(shape)
        if g > 0:
            lo = shape
        else:
            hi = shape
        step = -g / dg
        new = shape + step
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        converged = abs(new - shape) < tol
        shape = new
        if converged:
            break
    else:
        raise ConvergenceError("Weibull shape iteration did not converge", last=shape)
    # One more Newton step: quadratic convergence makes it essentially free.
    g, dg = score(shape)
    shape = shape - g / dg

    a0, a1, a2 = moments(shape)
    log_scale = math.log(scale)
    log_rate = math.log(d) - shape * log_scale - math.log(a0)
    rate = math.exp(log_rate)
    loglik = d * math.log(shape) + d * log_rate + (shape - 1.0) * float(np.log(te).sum()) - d

    # Observed information in (shape, log rate); at the optimum rate * sum(t**shape) = d.
    m1 = a1 / a0 + log_scale
    m2 = a2 / a0 + 2 * log_scale * a1 / a0 + log_scale ** 2
    info = np.array([[d / shape ** 2 + d * m2, d * m1],
                     [d * m1, d]])
    cov = np.linalg.inv(info)
    return ParametricFit(Family.WEIBULL, float(shape), rate, float(loglik), int(time.size),
                         shape_se=float(math.sqrt(cov[0, 0])),
                         rate_se=float(rate * math.sqrt(cov[1, 1])))


def fit_parametric(family, data, event=None):
    if Family(family) is Family.EXPONENTIAL:
        return fit_exponential(data, event)
    return fit_weibull(data, event)


# --------------------------------------------------------------------------
# Cox proportional hazards
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HrEstimate:
    """Log hazard ratio (experimental vs control) with a 95% Wald interval."""

    log_hr: float
    se: float
    hr: float = field(init=False)
    ci_low: float = field(init=False)
    ci_high: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "hr", math.exp(self.log_hr))
        object.__setattr__(self, "ci_low", math.exp(self.log_hr - Z_95 * self.se))
        object.__setattr__(self, "ci_high", math.exp(self.log_hr + Z_95 * self.se))


class _CoxRiskSets:
    """Efron-expanded risk-set counts for a binary covariate.

    Each event contributes one row ``l = 0 .. d_j - 1`` of its tie group, with
    control/experimental at-risk counts reduced by ``l / d_j`` of the tied
    events.
    """

    def __init__(self, time, event, arm):
        ev_t = time[event]
        ev_arm = arm[event]
        uniq, inv = np.unique(ev_t, return_inverse=True)
        d = np.bincount(inv, minlength=uniq.size).astype(float)
        d1 = np.bincount(inv, weights=ev_arm, minlength=uniq.size)
        d0 = d - d1
        t0 = np.sort(time[arm == 0])
        t1 = np.sort(time[arm == 1])
        n0 = t0.size - np.searchsorted(t0, uniq, side="left")
        n1 = t1.size - np.searchsorted(t1, uniq, side="left")
        counts = d.astype(np.int64)
        group = np.repeat(np.arange(uniq.size), counts)
        first = np.repeat(np.cumsum(counts) - counts, counts)
        frac = (np.arange(group.size) - first) / d[group]
        self.r0 = n0[group] - frac * d0[group]
        self.r1 = n1[group] - frac * d1[group]
        self.events_exp = float(d1.sum())

    def evaluate(self, beta):
        w = math.exp(beta)
        den = self.r0 + self.r1 * w
        p = self.r1 * w / den
        loglik = beta * self.events_exp - float(np.log(den).sum())
        score = self.events_exp - float(p.sum())
        info = float(np.dot(p, 1.0 - p))
        return loglik, score, info


def cox_partial_loglik(beta, data):
    """Efron partial log-likelihood of the arm coefficient."""
    rs = _CoxRiskSets(*_cox_columns(data))
    return rs.evaluate(beta)[0]


def _cox_columns(data):
    time = np.asarray(data.time, dtype=float)
    event = np.asarray(data.event, dtype=bool)
    arm = np.asarray(data.arm, dtype=float)
    return time, event, arm


def cox_fit(data, *, tol=1e-9, max_iter=100, beta_limit=30.0):
    """Cox model with the arm indicator as sole covariate (Efron ties).

    Newton-Raphson from 0 with step halving; the standard error comes from the
    observed information at the maximiser.

    Raises
    ------
    ValueError
        Only one arm present.
    EstimationError
        No events, or a monotone likelihood (``"non-finite MLE"``).
    """
    time, event, arm = _cox_columns(data)
    if not (np.any(arm == 0) and np.any(arm == 1)):
        raise ValueError("both arms must be present")
    if not event.any():
        raise EstimationError("no events")
    rs = _CoxRiskSets(time, event, arm)
    beta = 0.0
    loglik, score, info = rs.evaluate(beta)
    for _ in range(max_iter):
        if not info > 0:
            raise EstimationError("non-finite MLE")
        step = score / info
        new = beta + step
        new_ll, new_score, new_info = rs.evaluate(new)
        halvings = 0
        while new_ll < loglik - 1e-12 * abs(loglik) and halvings < 30:
            step *= 0.5
            new = beta + step
            new_ll, new_score, new_info = rs.evaluate(new)
            halvings += 1
        if abs(new) > beta_limit:
            raise EstimationError("non-finite MLE")
        converged = abs(new - beta) < tol
        beta, loglik, score, info = new, new_ll, new_score, new_info
        if converged:
            break
    else:
        raise ConvergenceError("Cox iteration did not converge", last=beta)
    if not info > 0:
        raise EstimationError("non-finite MLE")
    return HrEstimate(beta, 1.0 / math.sqrt(info))


# --------------------------------------------------------------------------
# Conditional sampling under a scaled hazard
# --------------------------------------------------------------------------

def sample_conditional_event_time(fit, c, delta, u):
    """Draw event times beyond ``c`` from the hazard ``delta * h(t)``.

    Inverse transform of ``G(t) = exp(-delta * (H(t) - H(c)))`` for ``t > c``,
    i.e. ``t = ((rate * c**shape - log(u) / delta) / rate) ** (1 / shape)``.
    Vectorised over ``c`` and ``u``.  Results are strictly greater than ``c``
    and may be infinite when ``delta`` is tiny.
    """
    if not (delta > 0 and math.isfinite(delta)):
        raise ValueError(f"delta must be positive and finite, got {delta}")
    c = np.asarray(c, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(c < 0):
        raise ValueError("censoring times must be nonnegative")
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie in (0, 1)")
    c, u = np.broadcast_arrays(c, u)
    extra = -np.log(u) / (delta * fit.rate)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        # Relative form keeps t - c resolvable when delta is huge.
        ratio = extra / c ** fit.shape
        rel = c * np.exp(np.log1p(ratio) / fit.shape)
        absolute = extra ** (1.0 / fit.shape)
    t = np.where(c > 0, rel, absolute)
    return np.maximum(t, np.nextafter(c, np.inf))
