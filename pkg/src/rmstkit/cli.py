"""Command line interface: ``analyze``, ``simulate`` and ``plan``.

Exit codes: 0 on success, 2 for input problems (bad arguments, unparseable
data or configuration), 3 for numeric failures (restriction time beyond the
data, singular designs, degenerate covariates, aborted scenarios).
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import reporting
from .dataset_io import read_dataset
from .errors import (
    ConfigError,
    DegenerateCovariate,
    InvalidInput,
    ParseError,
    RestrictionTimeBeyondData,
    RmstError,
    ScenarioError,
    SingularDesign,
)
from .planning import (
    CorrelationProfile,
    empirical_correlation_profile,
    predict_variance_reduction,
    required_sample_size,
)
from .pseudovalues import pseudovalues_fast
from .regression import ColumnRole, design_matrix, fit_pseudovalue_ols, wald_treatment_effect
from .simulation import Link, ScenarioConfig, run_scenario
from .survival import km_rmst_difference

EXIT_INPUT_ERROR = 2
EXIT_NUMERIC_ERROR = 3

_INPUT_ERRORS = (InvalidInput, ParseError, ConfigError)
_NUMERIC_ERRORS = (RestrictionTimeBeyondData, SingularDesign, DegenerateCovariate, ScenarioError)


def cmd_analyze(
    csv_path: str | Path,
    tau: float,
    covariate_columns: Sequence[str] = (),
    level: float = 0.95,
    hc_variant: str = "hc1",
) -> dict:
    """Analyze one dataset: unadjusted and covariate-adjusted RMST difference."""
    samples, available = read_dataset(csv_path)
    missing = [name for name in covariate_columns if name not in available]
    if missing:
        raise InvalidInput(
            f"requested covariates not in the file: {', '.join(missing)} "
            f"(available: {', '.join(available) or 'none'})"
        )
    if len(set(covariate_columns)) != len(covariate_columns):
        raise InvalidInput("covariate columns must not repeat")
    km = km_rmst_difference(samples, tau)
    pv = pseudovalues_fast(samples, tau)
    arms = np.fromiter((int(s.arm) for s in samples), dtype=np.int64, count=len(samples))
    columns = [
        np.fromiter(
            (s.covariates[available.index(name)] for s in samples),
            dtype=float,
            count=len(samples),
        )
        for name in covariate_columns
    ]
    design = design_matrix(arms, columns)
    fit = fit_pseudovalue_ols(design, pv, hc_variant=hc_variant)
    wald = wald_treatment_effect(fit, level=level)

    from scipy import stats

    z = stats.norm.ppf(0.5 + level / 2.0)
    km_block = {
        "estimate": km.estimate,
        "std_err": km.std_err,
        "ci_low": km.estimate - z * km.std_err,
        "ci_high": km.estimate + z * km.std_err,
        "treatment_rmst": km.treatment.value,
        "control_rmst": km.control.value,
    }
    pv_block = {
        "estimate": wald.estimate,
        "std_err": wald.std_err,
        "ci_low": wald.ci_low,
        "ci_high": wald.ci_high,
        "p_value": wald.p_value,
        "coefficients": {
            _coefficient_name(fit.column_roles[k], k, covariate_columns): float(fit.beta[k])
            for k in range(fit.p)
        },
    }
    observed = None
    if km.std_err > 0.0:
        observed = 1.0 - (wald.std_err / km.std_err) ** 2
    predicted = _predicted_reduction(pv, columns, arms)

    times = np.fromiter((s.time for s in samples), dtype=float, count=len(samples))
    events = np.fromiter((s.event for s in samples), dtype=bool, count=len(samples))
    n_events = int((events & (times <= tau)).sum())
    n_censored = int((~events & (times < tau)).sum())
    return reporting.analysis_report(
        tau=tau,
        n=len(samples),
        n_events=n_events,
        n_censored=n_censored,
        km=km_block,
        pv_adjusted=pv_block,
        variance_reduction_observed=observed,
        variance_reduction_predicted=predicted,
        covariates=covariate_columns,
        hc_variant=hc_variant,
        level=level,
    )


def _coefficient_name(role: ColumnRole, index: int, covariates: Sequence[str]) -> str:
    if role is ColumnRole.INTERCEPT:
        return "intercept"
    if role is ColumnRole.TREATMENT:
        return "treatment"
    return covariates[index - 2]


def _predicted_reduction(pv, columns, arms) -> float | None:
    """Squared weighted correlation prediction from the requested covariates.

    With several covariates the per-arm correlations are taken against the
    fitted linear combination of the covariate columns (a single prognostic
    score); with none there is nothing to predict from.
    """
    if not columns:
        return None
    if len(columns) == 1:
        score = columns[0]
    else:
        design = design_matrix(arms, columns)
        fit = fit_pseudovalue_ols(design, pv)
        weights = [
            fit.beta[k]
            for k, role in enumerate(fit.column_roles)
            if role is ColumnRole.COVARIATE
        ]
        score = sum(w * col for w, col in zip(weights, columns))
    profile = empirical_correlation_profile(pv, score, arms)
    return predict_variance_reduction(profile)


_CONFIG_KEYS = {
    "link": lambda raw: Link(raw),
    "a": float,
    "treatment_effect": float,
    "n": int,
    "pi": float,
    "censor_rate": float,
    "tau_quantile": float,
    "covariate_noise_var": float,
    "replicates": int,
    "seed": int,
}


def load_scenario_configs(
    path: str | Path,
    replicates: int | None = None,
    seed: int | None = None,
) -> list[ScenarioConfig]:
    """Parse a scenario configuration file.

    Grammar: INI-style sections, one scenario per section, ``key = value``
    lines with the keys of ``ScenarioConfig``.  A ``[defaults]`` section
    supplies values shared by every scenario.  ``replicates`` and ``seed``
    arguments override the file for every scenario.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidInput(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, default_section="defaults")
    try:
        with path.open() as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from None
    if not parser.sections():
        raise ConfigError(f"{path} defines no scenario sections")

    configs = []
    for section in parser.sections():
        values: dict = {"name": section}
        for key, raw in parser[section].items():
            if key not in _CONFIG_KEYS:
                raise ConfigError(
                    f"unknown key {key!r} in scenario {section!r} "
                    f"(known keys: {', '.join(sorted(_CONFIG_KEYS))})"
                )
            try:
                values[key] = _CONFIG_KEYS[key](raw)
            except (TypeError, ValueError):
                raise ConfigError(
                    f"invalid value {raw!r} for key {key!r} in scenario {section!r}"
                ) from None
        if replicates is not None:
            values["replicates"] = replicates
        if seed is not None:
            values["seed"] = seed
        try:
            configs.append(ScenarioConfig(**values))
        except InvalidInput as exc:
            raise ConfigError(f"scenario {section!r}: {exc}") from None
    return configs


def cmd_simulate(
    config_path: str | Path,
    replicates: int | None = None,
    seed: int | None = None,
    threads: int = 1,
    out: str | Path | None = None,
    csv_out: str | Path | None = None,
    figures: str | Path | None = None,
) -> tuple[str, dict]:
    """Run every scenario in a config file; returns (table text, JSON report)."""
    configs = load_scenario_configs(config_path, replicates=replicates, seed=seed)
    results = [run_scenario(config, threads=threads) for config in configs]
    table = reporting.scenario_table(results)
    report = reporting.simulation_report(configs, results)
    if out is not None:
        reporting.write_json(report, out)
    if csv_out is not None:
        reporting.write_scenario_csv(results, csv_out)
    if figures is not None:
        directory = Path(figures)
        directory.mkdir(parents=True, exist_ok=True)
        reporting.render_reduction_figure(results, directory / "variance_reduction.png")
    return table, report


@dataclass(frozen=True)
class PlanReport:
    n_unadjusted: int
    n_adjusted: int
    predicted_reduction: float

    def to_dict(self) -> dict:
        return {
            "schema_version": reporting.SCHEMA_VERSION,
            "kind": "plan",
            "n_unadjusted": self.n_unadjusted,
            "n_adjusted": self.n_adjusted,
            "predicted_reduction": self.predicted_reduction,
        }


def cmd_plan(
    delta: float,
    r0: float,
    r1: float,
    pi: float,
    base_var_unit: float,
    alpha: float = 0.05,
    power: float = 0.8,
) -> PlanReport:
    """Sample sizes with and without covariate adjustment."""
    profile = CorrelationProfile(r0=r0, r1=r1, pi=pi)
    reduction = predict_variance_reduction(profile)
    return PlanReport(
        n_unadjusted=required_sample_size(delta, base_var_unit, 0.0, pi, alpha, power),
        n_adjusted=required_sample_size(delta, base_var_unit, reduction, pi, alpha, power),
        predicted_reduction=reduction,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rmstkit",
        description="Covariate-adjusted restricted mean survival time analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze one dataset")
    analyze.add_argument("--data", required=True, help="CSV file with time/event/arm columns")
    analyze.add_argument("--tau", required=True, type=float, help="restriction time")
    analyze.add_argument(
        "--covariates",
        default="",
        help="comma-separated covariate column names (default: none)",
    )
    analyze.add_argument("--level", type=float, default=0.95, help="confidence level")
    analyze.add_argument("--hc", default="hc1", choices=("hc0", "hc1"), help="covariance variant")
    analyze.add_argument("--out", default=None, help="write the JSON report here")

    simulate = sub.add_parser("simulate", help="run Monte Carlo scenarios")
    simulate.add_argument("--config", required=True, help="scenario configuration file")
    simulate.add_argument("--replicates", type=int, default=None, help="override replicate count")
    simulate.add_argument("--seed", type=int, default=None, help="override the base seed")
    simulate.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes (default: RMST_THREADS environment variable, else 1)",
    )
    simulate.add_argument("--out", default=None, help="write the JSON report here")
    simulate.add_argument("--csv", default=None, help="write per-scenario delimited rows here")
    simulate.add_argument("--figures", default=None, help="render figures into this directory")

    plan = sub.add_parser("plan", help="sample size with covariate adjustment")
    plan.add_argument("--delta", required=True, type=float, help="target effect size")
    plan.add_argument("--r0", required=True, type=float, help="control-arm correlation")
    plan.add_argument("--r1", required=True, type=float, help="treatment-arm correlation")
    plan.add_argument("--pi", required=True, type=float, help="treated fraction")
    plan.add_argument("--alpha", type=float, default=0.05, help="two-sided test level")
    plan.add_argument("--power", type=float, default=0.8, help="target power")
    plan.add_argument(
        "--var", required=True, type=float, help="per-subject pseudovalue variance"
    )
    plan.add_argument("--out", default=None, help="write the JSON report here")
    return parser


def _resolve_threads(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("RMST_THREADS", "").strip()
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidInput(f"RMST_THREADS must be an integer, got {env!r}") from None
    return 1


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "analyze":
        covariates = [name.strip() for name in args.covariates.split(",") if name.strip()]
        report = cmd_analyze(
            args.data, args.tau, covariates, level=args.level, hc_variant=args.hc
        )
        print(reporting.analysis_text(report))
        if args.out is not None:
            reporting.write_json(report, args.out)
    elif args.command == "simulate":
        table, report = cmd_simulate(
            args.config,
            replicates=args.replicates,
            seed=args.seed,
            threads=_resolve_threads(args.threads),
            out=args.out,
            csv_out=args.csv,
            figures=args.figures,
        )
        print(table)
    else:
        plan = cmd_plan(
            args.delta, args.r0, args.r1, args.pi, args.var,
            alpha=args.alpha, power=args.power,
        )
        print(f"predicted variance reduction: {plan.predicted_reduction * 100:.1f}%")
        print(f"required n without adjustment: {plan.n_unadjusted}")
        print(f"required n with adjustment:    {plan.n_adjusted}")
        if args.out is not None:
            reporting.write_json(plan.to_dict(), args.out)


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
