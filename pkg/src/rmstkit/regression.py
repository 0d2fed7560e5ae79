"""Least-squares regression of pseudovalues with robust (sandwich) covariance.

The fit minimizes sum_i (theta_i - x_i' beta)^2 for design rows
x_i' = (1, treatment_i, covariates_i...).  Because pseudovalues are not an
iid response, the reported covariance is the sandwich

    A^{-1} B A^{-1} / n,   A = (1/n) sum x_i x_i',   B = (1/n) sum x_i x_i' e_i^2,

optionally scaled by the small-sample factor n / (n - p) (variant ``hc1``,
the default; ``hc0`` applies no factor).  Covariate columns are centered
before solving so the treatment coefficient is invariant to covariate
location; the intercept and its covariance are mapped back to the original
coordinates afterwards.  The solve uses an orthogonal (QR) factorization.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InvalidInput, SingularDesign
from .pseudovalues import PseudovalueSet

RCOND_LIMIT = 1e-12


class ColumnRole(Enum):
    INTERCEPT = "intercept"
    TREATMENT = "treatment"
    COVARIATE = "covariate"


@dataclass(frozen=True)
class DesignMatrix:
    entries: np.ndarray
    column_roles: tuple[ColumnRole, ...]

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]


def design_matrix(treatment: Sequence[float], covariates: Sequence[Sequence[float]] = ()) -> DesignMatrix:
    """Assemble (1, treatment, covariates...) rows from per-column inputs."""
    arm = np.asarray(treatment, dtype=float)
    if arm.ndim != 1 or arm.size == 0:
        raise InvalidInput("treatment indicator must be a non-empty vector")
    if not np.isin(arm, (0.0, 1.0)).all():
        raise InvalidInput("treatment indicator must contain only 0 and 1")
    columns = [np.ones(arm.size), arm]
    roles = [ColumnRole.INTERCEPT, ColumnRole.TREATMENT]
    for cov in covariates:
        col = np.asarray(cov, dtype=float)
        if col.shape != arm.shape:
            raise InvalidInput("covariate length does not match the treatment vector")
        if not np.isfinite(col).all():
            raise InvalidInput("covariate values must be finite")
        columns.append(col)
        roles.append(ColumnRole.COVARIATE)
    return DesignMatrix(entries=np.column_stack(columns), column_roles=tuple(roles))


@dataclass(frozen=True)
class RegressionFit:
    beta: np.ndarray
    sandwich_cov: np.ndarray
    residual_var: float
    n: int
    p: int
    hc_variant: str
    column_roles: tuple[ColumnRole, ...]


@dataclass(frozen=True)
class WaldResult:
    estimate: float
    std_err: float
    ci_low: float
    ci_high: float
    p_value: float
    level: float


def _validate_design(design: DesignMatrix) -> None:
    X = design.entries
    roles = design.column_roles
    if X.ndim != 2 or len(roles) != X.shape[1]:
        raise InvalidInput("design entries and column roles are inconsistent")
    if roles.count(ColumnRole.INTERCEPT) != 1 or roles.count(ColumnRole.TREATMENT) != 1:
        raise InvalidInput("design needs exactly one intercept and one treatment column")
    intercept = X[:, roles.index(ColumnRole.INTERCEPT)]
    if not (intercept == 1.0).all():
        raise InvalidInput("intercept column must be identically 1")
    arm = X[:, roles.index(ColumnRole.TREATMENT)]
    if not np.isin(arm, (0.0, 1.0)).all():
        raise InvalidInput("treatment column must contain only 0 and 1")
    if not np.isfinite(X).all():
        raise InvalidInput("design entries must be finite")


def fit_pseudovalue_ols(
    design: DesignMatrix, pv: PseudovalueSet | np.ndarray, hc_variant: str = "hc1"
) -> RegressionFit:
    """Fit the pseudovalue regression and assemble the robust covariance."""
    _validate_design(design)
    if hc_variant not in ("hc0", "hc1"):
        raise InvalidInput(f"unknown covariance variant {hc_variant!r}")
    y = pv.values if isinstance(pv, PseudovalueSet) else np.asarray(pv, dtype=float)
    X = design.entries
    n, p = X.shape
    if y.shape != (n,):
        raise InvalidInput("response length does not match the design")
    if n <= p:
        raise InvalidInput(f"need more observations than parameters (n={n}, p={p})")

    covariate_cols = [k for k, role in enumerate(design.column_roles) if role is ColumnRole.COVARIATE]
    means = np.zeros(p)
    means[covariate_cols] = X[:, covariate_cols].mean(axis=0)
    Xc = X - means

    if np.linalg.cond(Xc) > 1.0 / RCOND_LIMIT:
        raise SingularDesign(
            "design matrix is numerically singular (reciprocal condition below 1e-12)"
        )
    Q, R = np.linalg.qr(Xc)
    beta_c = np.linalg.solve(R, Q.T @ y)

    residuals = y - Xc @ beta_c
    A = Xc.T @ Xc / n
    B = (Xc * residuals[:, None] ** 2).T @ Xc / n
    cov_c = np.linalg.solve(A, np.linalg.solve(A, B).T).T / n
    if hc_variant == "hc1":
        cov_c *= n / (n - p)

    # map back to the uncentered coordinates: only the intercept moves
    shift = np.eye(p)
    shift[design.column_roles.index(ColumnRole.INTERCEPT), :] = -means
    shift[design.column_roles.index(ColumnRole.INTERCEPT),
          design.column_roles.index(ColumnRole.INTERCEPT)] = 1.0
    beta = shift @ beta_c
    cov = shift @ cov_c @ shift.T

    return RegressionFit(
        beta=beta,
        sandwich_cov=cov,
        residual_var=float(residuals @ residuals / (n - p)),
        n=n,
        p=p,
        hc_variant=hc_variant,
        column_roles=design.column_roles,
    )


def wald_treatment_effect(fit: RegressionFit, level: float = 0.95) -> WaldResult:
    """Normal-approximation interval and two-sided p-value for the treatment effect."""
    if not 0.0 < level < 1.0:
        raise InvalidInput(f"confidence level must be in (0, 1), got {level!r}")
    if ColumnRole.TREATMENT not in fit.column_roles:
        raise InvalidInput("fit has no treatment column")
    k = fit.column_roles.index(ColumnRole.TREATMENT)
    estimate = float(fit.beta[k])
    variance = float(fit.sandwich_cov[k, k])
    std_err = float(np.sqrt(max(variance, 0.0)))
    z = stats.norm.ppf(0.5 + level / 2.0)
    if std_err == 0.0:
        p_value = 1.0 if estimate == 0.0 else 0.0
    else:
        p_value = float(2.0 * stats.norm.sf(abs(estimate / std_err)))
    return WaldResult(
        estimate=estimate,
        std_err=std_err,
        ci_low=estimate - z * std_err,
        ci_high=estimate + z * std_err,
        p_value=p_value,
        level=level,
    )
