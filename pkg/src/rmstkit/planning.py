"""Closed-form design quantities for covariate-adjusted RMST comparisons.

Under 1:1-style randomization with treated fraction pi, adjusting the
pseudovalue regression for a prognostic covariate shrinks the treatment
effect variance by the squared weighted correlation

    r_w = (1 - pi) * r1 + pi * r0,

where r0 and r1 are the pseudovalue-covariate correlations in the control
and treatment arm.  The adjusted effect variance is sigma_eps^2 / (n pi (1-pi)).

When the fitted covariate is a noisy surrogate c = u + delta for the true
prognostic variable u (delta independent noise with variance var_delta), the
covariate-arm imbalance g = mean(u | control) - mean(u | treatment) leaves a
residual contamination of the treatment coefficient,

    b(g) = beta2 * var_delta * g / (var_u + var_delta - pi (1-pi) g^2),

with g ~ Normal(0, var_u / (n pi (1-pi))) over repeated randomizations, so the
contamination vanishes as n grows while the effect variance approaches
(sigma_eps^2 + beta2_std^2 * var_delta / var_u) / (n pi (1-pi)) with
beta2_std^2 = beta2^2 * var_u (the covariate rescaled to unit variance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateCovariate, InvalidInput
from .pseudovalues import PseudovalueSet


def _check_fraction(pi: float) -> None:
    if not 0.0 < pi < 1.0:
        raise InvalidInput(f"treated fraction must be in (0, 1), got {pi!r}")


@dataclass(frozen=True)
class CorrelationProfile:
    """Per-arm pseudovalue-covariate correlations and the treated fraction."""

    r0: float  # control arm
    r1: float  # treatment arm
    pi: float  # treated fraction

    def __post_init__(self):
        for r in (self.r0, self.r1):
            if not -1.0 <= r <= 1.0:
                raise InvalidInput(f"correlations must lie in [-1, 1], got {r!r}")
        _check_fraction(self.pi)


def weighted_correlation(profile: CorrelationProfile, swap_weights: bool = False) -> float:
    """r_w = (1 - pi) * r1 + pi * r0.

    ``swap_weights`` pairs each arm's correlation with its own fraction
    instead, (1 - pi) * r0 + pi * r1, for sensitivity analysis; the two agree
    at pi = 1/2.
    """
    if swap_weights:
        return (1.0 - profile.pi) * profile.r0 + profile.pi * profile.r1
    return (1.0 - profile.pi) * profile.r1 + profile.pi * profile.r0


def predict_variance_reduction(profile: CorrelationProfile, swap_weights: bool = False) -> float:
    """Predicted fractional reduction in Var(effect): the squared weighted correlation."""
    return weighted_correlation(profile, swap_weights) ** 2


def adjusted_treatment_variance(sigma_eps2: float, n: int, pi: float) -> float:
    """Variance of the adjusted treatment effect: sigma_eps^2 / (n pi (1 - pi))."""
    if sigma_eps2 < 0.0:
        raise InvalidInput(f"residual variance must be >= 0, got {sigma_eps2!r}")
    if n < 1:
        raise InvalidInput(f"sample size must be >= 1, got {n!r}")
    _check_fraction(pi)
    return sigma_eps2 / (n * pi * (1.0 - pi))


@dataclass(frozen=True)
class NoisyCovariateSpec:
    """Population quantities for the noisy-surrogate analysis."""

    var_u: float        # variance of the true prognostic covariate
    var_delta: float    # variance of the measurement noise
    beta2_true: float   # covariate coefficient on the original scale
    sigma_eps2: float   # residual variance given treatment and true covariate
    n: int
    pi: float

    def __post_init__(self):
        if self.var_u <= 0.0:
            raise InvalidInput(f"var_u must be > 0, got {self.var_u!r}")
        if self.var_delta < 0.0:
            raise InvalidInput(f"var_delta must be >= 0, got {self.var_delta!r}")
        if self.sigma_eps2 < 0.0:
            raise InvalidInput(f"sigma_eps2 must be >= 0, got {self.sigma_eps2!r}")
        if self.n < 1:
            raise InvalidInput(f"n must be >= 1, got {self.n!r}")
        _check_fraction(self.pi)


def bias_limit_random_covariate(spec: NoisyCovariateSpec, mean_gap: float) -> float:
    """Treatment-coefficient contamination at a given covariate-mean gap.

    ``mean_gap`` is the control-minus-treatment mean of the true covariate.
    The expected fitted effect is the true effect minus this value.  Gap zero
    gives exactly zero.  ``var_delta`` must be positive: with an exactly
    measured covariate there is no contamination to quantify.
    """
    if spec.var_delta == 0.0:
        raise InvalidInput("var_delta is 0; use the exact-covariate analysis instead")
    g = mean_gap
    denom = spec.var_u + spec.var_delta - spec.pi * (1.0 - spec.pi) * g * g
    return spec.beta2_true * spec.var_delta * g / denom


def bias_limit_standardized(spec: NoisyCovariateSpec, z: float) -> float:
    """Same contamination with the gap expressed as a standard normal draw.

    ``z`` standardizes the gap against its sampling scale
    sqrt(var_u / (n pi (1-pi))); the formula is stated on the unit-variance
    covariate scale, where the covariate coefficient is beta2 * sqrt(var_u).
    """
    if spec.var_delta == 0.0:
        raise InvalidInput("var_delta is 0; use the exact-covariate analysis instead")
    if z == 0.0:
        return 0.0
    n, pi = spec.n, spec.pi
    ratio = spec.var_u / spec.var_delta
    beta2_std = spec.beta2_true * math.sqrt(spec.var_u)
    denom = (
        math.sqrt(n * pi * (1.0 - pi)) * (1.0 + ratio) / z
        - math.sqrt(pi * (1.0 - pi) / n) * ratio * z
    )
    return beta2_std / denom


def expected_bias_random_covariate(
    spec: NoisyCovariateSpec, draws: int = 200_000, seed: int = 20_210_531
) -> float:
    """Monte Carlo expectation of the contamination over the gap distribution.

    The gap is symmetric around zero and the contamination is odd in the gap,
    so the expectation is zero up to Monte Carlo error; the estimator is kept
    for sensitivity work with non-zero gap centers.
    """
    rng = np.random.default_rng(seed)
    scale = math.sqrt(spec.var_u / (spec.n * spec.pi * (1.0 - spec.pi)))
    gaps = rng.normal(0.0, scale, draws)
    denom = spec.var_u + spec.var_delta - spec.pi * (1.0 - spec.pi) * gaps**2
    return float(np.mean(spec.beta2_true * spec.var_delta * gaps / denom))


def variance_limit_random_covariate(spec: NoisyCovariateSpec) -> float:
    """Large-sample variance of the treatment effect with the noisy covariate.

    (sigma_eps^2 + beta2_std^2 * var_delta / var_u) / (n pi (1 - pi)), where
    beta2_std^2 = beta2^2 * var_u.  At var_delta = 0 this is the adjusted
    variance exactly.
    """
    beta2_std_sq = spec.beta2_true**2 * spec.var_u
    numerator = spec.sigma_eps2 + beta2_std_sq * spec.var_delta / spec.var_u
    return numerator / (spec.n * spec.pi * (1.0 - spec.pi))


def required_sample_size(
    delta: float,
    base_var_unit: float,
    reduction: float,
    pi: float,
    alpha: float = 0.05,
    power: float = 0.8,
) -> int:
    """Smallest n whose two-sided level-alpha test reaches the target power.

    ``base_var_unit`` is the per-subject pseudovalue variance; the adjusted
    effect variance is (1 - reduction) * base_var_unit / (n pi (1 - pi)) and
    n solves (z_{1-alpha/2} + z_{power})^2 * variance <= delta^2.
    """
    if delta == 0.0:
        raise InvalidInput("effect size delta must be non-zero")
    if base_var_unit <= 0.0:
        raise InvalidInput(f"base variance must be > 0, got {base_var_unit!r}")
    if not 0.0 <= reduction < 1.0:
        raise InvalidInput(f"variance reduction must be in [0, 1), got {reduction!r}")
    _check_fraction(pi)
    if not 0.0 < alpha < 1.0:
        raise InvalidInput(f"alpha must be in (0, 1), got {alpha!r}")
    if not 0.0 < power < 1.0:
        raise InvalidInput(f"power must be in (0, 1), got {power!r}")
    z = stats.norm.ppf(1.0 - alpha / 2.0) + stats.norm.ppf(power)
    raw = z**2 * (1.0 - reduction) * base_var_unit / (pi * (1.0 - pi) * delta**2)
    return int(math.ceil(raw - 1e-12))


def empirical_correlation_profile(
    pv: PseudovalueSet | np.ndarray,
    covariate: Sequence[float],
    arms: Sequence[int],
) -> CorrelationProfile:
    """Per-arm Pearson correlations between pseudovalues and one covariate."""
    values = pv.values if isinstance(pv, PseudovalueSet) else np.asarray(pv, dtype=float)
    cov = np.asarray(covariate, dtype=float)
    arm = np.asarray(arms, dtype=np.int64)
    if not (values.shape == cov.shape == arm.shape):
        raise InvalidInput("pseudovalues, covariate and arms must have equal length")
    if not np.isin(arm, (0, 1)).all():
        raise InvalidInput("arms must contain only 0 and 1")
    r = {}
    for label in (0, 1):
        mask = arm == label
        if mask.sum() < 3:
            raise InvalidInput(f"arm {label} needs at least 3 subjects for a correlation")
        x, y = cov[mask], values[mask]
        sx, sy = x.std(), y.std()
        if sx == 0.0 or sy == 0.0:
            side = "covariate" if sx == 0.0 else "pseudovalues"
            raise DegenerateCovariate(f"{side} are constant within arm {label}")
        r[label] = float(np.corrcoef(x, y)[0, 1])
    pi = float(arm.mean())
    return CorrelationProfile(r0=r[0], r1=r[1], pi=pi)
