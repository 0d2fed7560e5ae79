"""Builders and Monte Carlo utilities shared by the test modules."""

from __future__ import annotations

import numpy as np

from rmstkit import Arm, SurvivalSample


def make_samples(times, events=None, arms=None, covariates=None):
    """Assemble SurvivalSample rows from parallel per-subject value lists."""
    n = len(times)
    if events is None:
        events = [True] * n
    if arms is None:
        arms = [0] * n
    rows = []
    for i in range(n):
        if covariates is None:
            covs = ()
        else:
            value = covariates[i]
            if isinstance(value, (tuple, list, np.ndarray)):
                covs = tuple(float(v) for v in value)
            else:
                covs = (float(value),)
        rows.append(
            SurvivalSample(
                time=float(times[i]),
                event=bool(events[i]),
                arm=Arm(int(arms[i])),
                covariates=covs,
            )
        )
    return rows


def random_censored_arrays(rng, n, tie_grid=True):
    """Observed times and event flags with a censoring mix and frequent ties."""
    base = rng.exponential(2.0, n)
    if tie_grid:
        base = np.round(base, 2)
    base = base + 0.01
    censor = rng.exponential(3.0, n)
    events = base <= censor
    times = np.minimum(base, censor)
    return times, events


def safe_tau(times, fraction=0.9):
    """A restriction time that every leave-one-out subsample can reach.

    Any value at or below the second largest observed time qualifies: even the
    subsample that deletes the largest subject still extends that far.
    """
    ts = np.sort(np.asarray(times, dtype=float))
    return max(float(ts[-2]) * fraction, 1e-3)


def ols_beta1_mc(n, replicates, beta2, var_delta, sigma_eps,
                 pi=0.5, beta1=0.5, seed=0, chunk=500):
    """Per-replicate least squares of y on (1, treated, covariate), batched.

    The generating model is y = 2 + beta1 * treated + beta2 * u + eps with
    u ~ Exponential(1) (unit variance) and regressor c = u + Normal(0, var_delta).
    Returns (treatment coefficient per replicate, control minus treatment mean
    of u per replicate).  Solving the stacked 3x3 normal equations keeps even
    n * replicates in the tens of millions affordable.
    """
    n1 = int(round(n * pi))
    rng = np.random.default_rng(seed)
    estimates, gaps = [], []
    done = 0
    while done < replicates:
        b = min(chunk, replicates - done)
        u = rng.exponential(1.0, (b, n))
        if var_delta > 0:
            c = u + rng.normal(0.0, np.sqrt(var_delta), (b, n))
        else:
            c = u
        y = 2.0 + beta2 * u + rng.normal(0.0, sigma_eps, (b, n))
        y[:, :n1] += beta1

        s_c, s_cc = c.sum(axis=1), (c * c).sum(axis=1)
        s_tc = c[:, :n1].sum(axis=1)
        s_y, s_cy = y.sum(axis=1), (c * y).sum(axis=1)
        s_ty = y[:, :n1].sum(axis=1)
        ones = np.full(b, float(n))
        n1s = np.full(b, float(n1))
        xtx = np.stack(
            [
                np.stack([ones, n1s, s_c], axis=1),
                np.stack([n1s, n1s, s_tc], axis=1),
                np.stack([s_c, s_tc, s_cc], axis=1),
            ],
            axis=1,
        )
        xty = np.stack([s_y, s_ty, s_cy], axis=1)
        beta = np.linalg.solve(xtx, xty[:, :, np.newaxis])[:, :, 0]
        estimates.append(beta[:, 1])
        gaps.append(u[:, n1:].mean(axis=1) - u[:, :n1].mean(axis=1))
        done += b
    return np.concatenate(estimates), np.concatenate(gaps)
