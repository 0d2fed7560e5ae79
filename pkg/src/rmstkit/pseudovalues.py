"""Jackknife pseudovalues for the restricted mean survival time.

For a sample of n subjects with pooled-sample RMST estimate theta_hat, the
pseudovalue of subject i is

    theta_i = n * theta_hat - (n - 1) * theta_hat_minus_i,

where theta_hat_minus_i refits the Kaplan-Meier curve on the n - 1 remaining
subjects.  Without censoring this reduces to theta_i = min(time_i, tau).

Two implementations are provided.  ``pseudovalues_naive`` refits the curve per
subject and is quadratic in n; it exists as the reference the fast path is
checked against.  ``pseudovalues_fast`` computes all leave-one-out RMST values
from a single sorted pass, which makes the whole computation O(n log n):

Deleting subject i only changes the product-limit factors at event times up to
and including the subject's own time: at event times strictly before it, the
at-risk count drops by one; at the subject's own time the event count (for an
event) or only the at-risk count (for a censoring) drops.  Factors at later
event times are untouched.  The leave-one-out curve is therefore a prefix of
the "one fewer at risk" product, one adjusted factor, and a suffix of the
full-sample product, so every removed subject's RMST is assembled in O(1) from

  * prefix products of q_j = 1 - d_j/(n_j - 1) and their running integral,
  * the tail integrals G_j of the full-sample factor products restarted at
    each event time, built by one backward recurrence.

Subjects sharing a (time, status) pair get identical leave-one-out values, as
the definition requires.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite
from typing import Sequence

import numpy as np

from .errors import InvalidInput, RestrictionTimeBeyondData
from .survival import SurvivalSample, _extract_arrays, _km_fit_arrays, _rmst_from_steps, rmst


@dataclass(frozen=True)
class PseudovalueSet:
    """Per-subject pseudovalues aligned with the input ordering."""

    values: np.ndarray
    tau: float
    theta_hat: float
    n: int


def _validate(times: np.ndarray, tau: float) -> None:
    if times.size < 2:
        raise InvalidInput("pseudovalues need at least 2 subjects")
    if not isfinite(tau) or tau <= 0:
        raise InvalidInput(f"restriction time must be finite and > 0, got {tau!r}")


def _check_leave_one_out_reach(times: np.ndarray, events: np.ndarray, tau: float) -> None:
    """Every size n-1 subsample must determine the curve through tau.

    A curve is determined past its largest time only when it has dropped to
    exactly zero there, which happens when every subject at that time is an
    event.  The only subsample whose largest time can fall below tau is the
    one deleting a unique-maximum subject, so that is the only case to probe.
    """
    order = np.argsort(times, kind="stable")
    last, second = order[-1], order[-2]
    t_max, t_second = float(times[last]), float(times[second])
    if tau > t_max and np.any((times == t_max) & ~events):
        raise RestrictionTimeBeyondData(tau, t_max)
    if t_max > t_second and tau > t_second:
        if np.any((times == t_second) & ~events):
            raise RestrictionTimeBeyondData(tau, t_second, subject_index=int(last))


def pseudovalues_naive(samples: Sequence[SurvivalSample], tau: float) -> PseudovalueSet:
    """Reference implementation: one full KM refit per left-out subject."""
    times, events, _, _ = _extract_arrays(samples)
    _validate(times, tau)
    n = times.size
    full = rmst(_km_fit_arrays(times, events), tau)
    keep = np.ones(n, dtype=bool)
    loo = np.empty(n)
    for i in range(n):
        keep[i] = False
        curve = _km_fit_arrays(times[keep], events[keep])
        exhausted = curve.survival.size > 0 and curve.survival[-1] == 0.0
        if tau > curve.max_time and not exhausted:
            raise RestrictionTimeBeyondData(tau, curve.max_time, subject_index=i)
        loo[i] = _rmst_from_steps(curve.jump_times, curve.survival, tau)[0]
        keep[i] = True
    values = n * full.value - (n - 1) * loo
    return PseudovalueSet(values=values, tau=tau, theta_hat=full.value, n=n)


def pseudovalues_fast(samples: Sequence[SurvivalSample], tau: float) -> PseudovalueSet:
    """Incremental leave-one-out pseudovalues; matches the naive path to 1e-10."""
    times, events, _, _ = _extract_arrays(samples)
    _validate(times, tau)
    _check_leave_one_out_reach(times, events, tau)
    n = times.size

    sorted_times = np.sort(times)
    event_times, d = np.unique(times[events], return_counts=True)
    if event_times.size == 0:
        # no events anywhere: every curve is flat at 1 and every pseudovalue is tau
        return PseudovalueSet(values=np.full(n, tau), tau=tau, theta_hat=tau, n=n)
    n_risk = (n - np.searchsorted(sorted_times, event_times, side="left")).astype(float)
    d = d.astype(float)
    p = 1.0 - d / n_risk
    theta = _rmst_from_steps(event_times, np.cumprod(p), tau)[0]

    # only event times strictly below tau shape the integrals on [0, tau]
    m = int(np.searchsorted(event_times, tau, side="left"))
    # q_j: factor at event time j once one at-risk non-event subject is removed.
    # n_risk == 1 can only happen at a time no other subject reaches, where q is
    # never consumed; the placeholder silences the division.
    q = np.where(n_risk[:m] > 1, 1.0 - d[:m] / np.maximum(n_risk[:m] - 1.0, 1.0), 0.0)
    q_prefix = np.concatenate(([1.0], np.cumprod(q)))  # q_prefix[k] = prod q[:k]

    boundaries = np.append(event_times[:m], tau)
    widths = np.diff(np.concatenate(([0.0], boundaries)))
    # integral of the reduced-risk-set step curve up to each boundary
    cum_area = np.cumsum(widths * q_prefix)
    area_to_tau = cum_area[-1]
    if m == 0:
        # no event below tau: every leave-one-out curve is flat at 1 there
        values = np.full(n, n * theta - (n - 1) * area_to_tau)
        return PseudovalueSet(values=values, tau=tau, theta_hat=theta, n=n)

    # G[k]: integral over [event_times[k], tau] of the full-sample factor
    # products restarted at 1 just after event k
    G = np.empty(m)
    G[m - 1] = tau - event_times[m - 1]
    for k in range(m - 2, -1, -1):
        G[k] = (event_times[k + 1] - event_times[k]) + p[k + 1] * G[k + 1]

    # position of each subject among the sub-tau event times
    pos = np.searchsorted(event_times[:m], times, side="left")
    pos_censored = np.searchsorted(event_times[:m], times, side="right")
    pos = np.where(events, pos, pos_censored)
    inside = pos < m
    K = np.where(inside, pos, 0)  # safe index for the gathers below

    # adjusted factor at the removed subject's own position
    d_K, risk_K, p_K = d[K], n_risk[K], p[K]
    with np.errstate(divide="ignore", invalid="ignore"):
        event_factor = np.where(d_K > 1, 1.0 - (d_K - 1.0) / (risk_K - 1.0), 1.0)
    factor = np.where(events, event_factor, p_K)

    loo = np.where(
        inside,
        cum_area[K] + q_prefix[K] * factor * G[K],
        area_to_tau,
    )
    values = n * theta - (n - 1) * loo
    return PseudovalueSet(values=values, tau=tau, theta_hat=theta, n=n)
