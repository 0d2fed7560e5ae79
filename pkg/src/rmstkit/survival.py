"""Kaplan-Meier estimation and restricted mean survival time (RMST).

The survival curve is the product-limit estimator

    S(t) = prod_{j : t_j <= t} (1 - d_j / n_j)

over distinct event times ``t_j`` with ``d_j`` events and ``n_j`` subjects at
risk.  Subjects censored exactly at an event time are still counted at risk at
that time (events precede censorings at ties).  The RMST at restriction time
``tau`` is the area under the curve on ``[0, tau]``; its standard error comes
from the integrated Greenwood formula

    Var(RMST) = sum_j A_j^2 * d_j / (n_j * (n_j - d_j)),   A_j = int_{t_j}^{tau} S,

with terms where ``n_j == d_j`` contributing zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from math import isfinite
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput, RestrictionTimeBeyondData


class Arm(IntEnum):
    CONTROL = 0
    TREATMENT = 1


@dataclass(frozen=True, slots=True)
class SurvivalSample:
    """One subject: follow-up time, event indicator, arm, covariates."""

    time: float
    event: bool
    arm: Arm
    covariates: tuple[float, ...] = ()

    def __post_init__(self):
        if not isfinite(self.time) or self.time < 0:
            raise InvalidInput(f"time must be finite and >= 0, got {self.time!r}")
        for value in self.covariates:
            if not isfinite(value):
                raise InvalidInput(f"covariate values must be finite, got {value!r}")


@dataclass(frozen=True)
class KmCurve:
    """Fitted product-limit curve.

    ``jump_times`` are the distinct event times in increasing order;
    ``survival[k]`` is the curve value on ``[jump_times[k], jump_times[k+1])``.
    The curve is 1 before the first jump.  ``max_time`` is the largest observed
    time in the fitted data, events or censorings, which bounds the valid
    restriction times.
    """

    jump_times: np.ndarray
    survival: np.ndarray
    n_at_risk: np.ndarray
    n_events: np.ndarray
    n_total: int
    max_time: float

    def survival_at(self, t: float) -> float:
        """Curve value at time ``t`` (right-continuous step lookup)."""
        k = int(np.searchsorted(self.jump_times, t, side="right"))
        return 1.0 if k == 0 else float(self.survival[k - 1])


@dataclass(frozen=True)
class RmstEstimate:
    value: float
    std_err: float
    tau: float
    n: int


@dataclass(frozen=True)
class KmRmstDifference:
    """Arm difference of RMST values (treatment minus control).

    ``std_err`` is the square root of the sum of the per-arm integrated
    Greenwood variances.  ``pooled_per_subject_variance`` is the per-subject
    variance scale v for which the equivalent form v / (n*pi*(1-pi)) equals
    that same sum, pooling the arms with weights (1-pi, pi).
    """

    estimate: float
    std_err: float
    treatment: RmstEstimate
    control: RmstEstimate
    pooled_per_subject_variance: float
    n: int
    pi: float


def _extract_arrays(samples: Sequence[SurvivalSample]):
    """Validate a dataset and return (times, events, arms, covariates or None)."""
    if len(samples) == 0:
        raise InvalidInput("dataset is empty")
    times = np.fromiter((s.time for s in samples), dtype=float, count=len(samples))
    events = np.fromiter((s.event for s in samples), dtype=bool, count=len(samples))
    arms = np.fromiter((int(s.arm) for s in samples), dtype=np.int64, count=len(samples))
    width = len(samples[0].covariates)
    if any(len(s.covariates) != width for s in samples):
        raise InvalidInput("covariate tuples must have identical length across the dataset")
    covs = None
    if width:
        covs = np.array([s.covariates for s in samples], dtype=float)
    return times, events, arms, covs


def km_fit(samples: Sequence[SurvivalSample]) -> KmCurve:
    """Fit the product-limit estimator to one group of subjects.

    Reordering the input leaves the fitted curve bit-identical: counts are
    accumulated over the sorted distinct event times.
    """
    times, events, _, _ = _extract_arrays(samples)
    return _km_fit_arrays(times, events)


def _km_fit_arrays(times: np.ndarray, events: np.ndarray) -> KmCurve:
    n = times.size
    sorted_times = np.sort(times)
    jump_times, d = np.unique(times[events], return_counts=True)
    # everyone with time >= t_j is at risk at t_j, censored-at-t_j included
    n_risk = n - np.searchsorted(sorted_times, jump_times, side="left")
    survival = np.cumprod(1.0 - d / n_risk)
    return KmCurve(
        jump_times=jump_times,
        survival=survival,
        n_at_risk=n_risk,
        n_events=d,
        n_total=n,
        max_time=float(sorted_times[-1]),
    )


def _rmst_from_steps(jump_times, survival, tau):
    """Area under the step curve on [0, tau] plus the per-strip geometry.

    Returns (value, boundaries, step_values) where strip k spans
    [boundaries[k-1], boundaries[k]) with value step_values[k].
    """
    m = int(np.searchsorted(jump_times, tau, side="left"))  # jumps strictly below tau
    boundaries = np.append(jump_times[:m], tau)
    widths = np.diff(np.concatenate(([0.0], boundaries)))
    step_values = np.concatenate(([1.0], survival[:m]))
    return float(np.dot(widths, step_values)), boundaries, step_values


def rmst(curve: KmCurve, tau: float) -> RmstEstimate:
    """Restricted mean survival time at ``tau`` with its Greenwood standard error.

    ``tau`` may exceed the largest observed time only when the curve has
    reached exactly zero there; a curve left hanging above zero has an
    undetermined tail and restriction times past it are rejected rather than
    extrapolated.
    """
    if not isfinite(tau) or tau <= 0:
        raise InvalidInput(f"restriction time must be finite and > 0, got {tau!r}")
    curve_exhausted = curve.survival.size > 0 and curve.survival[-1] == 0.0
    if tau > curve.max_time and not curve_exhausted:
        raise RestrictionTimeBeyondData(tau, curve.max_time)
    value, boundaries, step_values = _rmst_from_steps(curve.jump_times, curve.survival, tau)
    m = boundaries.size - 1
    if m == 0:
        return RmstEstimate(value=value, std_err=0.0, tau=tau, n=curve.n_total)
    # tail areas from each jump to tau: A_j = sum of strips after jump j
    widths = np.diff(boundaries)  # width of strip following jump j, j = 0..m-1
    strip_areas = widths * step_values[1:]
    tail_areas = np.cumsum(strip_areas[::-1])[::-1]
    d = curve.n_events[:m].astype(float)
    n_risk = curve.n_at_risk[:m].astype(float)
    at_risk_after = n_risk - d
    terms = np.where(
        at_risk_after > 0, tail_areas**2 * d / (n_risk * np.maximum(at_risk_after, 1.0)), 0.0
    )
    return RmstEstimate(
        value=value, std_err=float(np.sqrt(terms.sum())), tau=tau, n=curve.n_total
    )


def km_rmst_difference(samples: Sequence[SurvivalSample], tau: float) -> KmRmstDifference:
    """Treatment-minus-control RMST difference with per-arm KM fits.

    Both arms must be non-empty and ``tau`` must be a valid restriction time
    for each arm's curve separately.
    """
    times, events, arms, _ = _extract_arrays(samples)
    n = times.size
    treated = arms == int(Arm.TREATMENT)
    if not treated.any() or treated.all():
        raise InvalidInput("both arms must contain at least one subject")
    estimates = {}
    for label, mask in (("treatment", treated), ("control", ~treated)):
        curve = _km_fit_arrays(times[mask], events[mask])
        estimates[label] = rmst(curve, tau)
    trt, ctl = estimates["treatment"], estimates["control"]
    pi = float(treated.mean())
    var_sum = trt.std_err**2 + ctl.std_err**2
    return KmRmstDifference(
        estimate=trt.value - ctl.value,
        std_err=float(np.sqrt(var_sum)),
        treatment=trt,
        control=ctl,
        pooled_per_subject_variance=float(n * pi * (1.0 - pi) * var_sum),
        n=n,
        pi=pi,
    )
