"""Report assembly: JSON documents, fixed-width tables, delimited rows, figures.

All report dictionaries carry ``schema_version`` so downstream consumers can
detect format changes.  Figure rendering is optional and imports matplotlib
lazily with the Agg backend, keeping headless use dependency-light.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

from .simulation import ScenarioConfig, ScenarioResult

SCHEMA_VERSION = 1


def scenario_table(results: Sequence[ScenarioResult]) -> str:
    """Fixed-width text table, one row per scenario."""
    header = (
        f"{'scenario':<24} {'cens%':>6} {'trunc%':>7} {'r':>6} "
        f"{'km_bias':>8} {'pv_bias':>8} {'reduction%':>10} {'km_cov%':>8} {'pv_cov%':>8}"
    )
    lines = [header, "-" * len(header)]
    for res in results:
        reduction = res.variance_reduction
        lines.append(
            f"{res.name:<24} {res.pct_censored:>6.1f} {res.pct_truncated:>7.1f} "
            f"{res.r_pooled:>6.2f} {res.km_bias:>8.3f} {res.pv_bias:>8.3f} "
            + (f"{reduction * 100:>10.1f} " if reduction == reduction else f"{'n/a':>10} ")
            + f"{res.km_coverage * 100:>8.1f} {res.pv_coverage * 100:>8.1f}"
        )
    return "\n".join(lines)


def figure_points(results: Sequence[ScenarioResult]) -> list[dict]:
    """(x = squared correlation, y = observed reduction) pairs for plotting."""
    return [
        {
            "scenario": res.name,
            "r2_latent": res.r_pooled**2,
            "r2_observed": res.r_pooled_observed**2,
            "reduction": res.variance_reduction,
            "predicted_reduction": res.predicted_reduction,
        }
        for res in results
    ]


def simulation_report(
    configs: Sequence[ScenarioConfig], results: Sequence[ScenarioResult]
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "scenarios": [
            {
                "config": {
                    "name": cfg.name,
                    "link": cfg.link.value,
                    "a": cfg.a,
                    "treatment_effect": cfg.treatment_effect,
                    "n": cfg.n,
                    "pi": cfg.pi,
                    "censor_rate": cfg.censor_rate,
                    "tau_quantile": cfg.tau_quantile,
                    "covariate_noise_var": cfg.covariate_noise_var,
                    "replicates": cfg.replicates,
                    "seed": cfg.seed,
                },
                "result": res.to_dict(),
            }
            for cfg, res in zip(configs, results)
        ],
        "figure_points": figure_points(results),
    }


def write_json(report: dict, path: str | Path) -> None:
    with Path(path).open("w") as handle:
        json.dump(report, handle, indent=2)
        handle.write("\n")


def write_scenario_csv(results: Sequence[ScenarioResult], path: str | Path) -> None:
    """One delimited row per scenario with every aggregate metric."""
    rows = [res.to_dict() for res in results]
    with Path(path).open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def render_reduction_figure(results: Sequence[ScenarioResult], path: str | Path) -> None:
    """Scatter of observed variance reduction against squared correlation.

    Draws the diagonal the exact-covariate prediction would follow; when any
    scenario carries covariate noise, a second marker series shows the squared
    correlation of the observed covariate.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    points = [p for p in figure_points(results) if p["reduction"] == p["reduction"]]
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    top = 0.05
    if points:
        top = max(
            [p["r2_latent"] for p in points]
            + [p["reduction"] for p in points]
            + [top]
        )
    grid = [0.0, top * 1.15]
    ax.plot(grid, grid, color="0.6", linewidth=1.0, zorder=1)
    ax.scatter(
        [p["r2_latent"] for p in points],
        [p["reduction"] for p in points],
        marker="o", s=28, color="black", zorder=2, label="latent covariate",
    )
    if any(abs(p["r2_observed"] - p["r2_latent"]) > 1e-9 for p in points):
        ax.scatter(
            [p["r2_observed"] for p in points],
            [p["reduction"] for p in points],
            marker="x", s=30, color="0.35", zorder=3, label="observed covariate",
        )
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("squared pseudovalue-covariate correlation")
    ax.set_ylabel("observed variance reduction")
    ax.set_xlim(grid)
    ax.set_ylim(grid)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def analysis_report(
    *,
    tau: float,
    n: int,
    n_events: int,
    n_censored: int,
    km: dict,
    pv_adjusted: dict,
    variance_reduction_observed: float | None,
    variance_reduction_predicted: float | None,
    covariates: Sequence[str],
    hc_variant: str,
    level: float,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "tau": tau,
        "n": n,
        "n_events": n_events,
        "n_censored": n_censored,
        "n_at_risk_at_tau": n - n_events - n_censored,
        "covariates": list(covariates),
        "hc_variant": hc_variant,
        "level": level,
        "km": km,
        "pv_adjusted": pv_adjusted,
        "variance_reduction_observed": variance_reduction_observed,
        "variance_reduction_predicted": variance_reduction_predicted,
    }


def analysis_text(report: dict) -> str:
    """Human-readable analysis summary: estimate (se) per method plus reductions."""
    km, pv = report["km"], report["pv_adjusted"]
    lines = [
        f"restricted mean difference at tau = {report['tau']:g}",
        f"subjects: {report['n']}  events by tau: {report['n_events']}  "
        f"censored before tau: {report['n_censored']}  "
        f"at risk at tau: {report['n_at_risk_at_tau']}",
        "",
        f"{'method':<28} {'estimate (se)':>20} {'95% CI':>22} {'p':>8}",
        "-" * 82,
        f"{'unadjusted (km)':<28} "
        f"{km['estimate']:>12.3f} ({km['std_err']:.3f}) "
        f"[{km['ci_low']:>8.3f}, {km['ci_high']:>8.3f}] {'':>8}",
        f"{'adjusted (pseudovalue)':<28} "
        f"{pv['estimate']:>12.3f} ({pv['std_err']:.3f}) "
        f"[{pv['ci_low']:>8.3f}, {pv['ci_high']:>8.3f}] {pv['p_value']:>8.4f}",
    ]
    observed = report["variance_reduction_observed"]
    predicted = report["variance_reduction_predicted"]
    if observed is not None:
        lines.append(f"observed variance reduction:  {observed * 100:.1f}%")
    if predicted is not None:
        lines.append(f"predicted variance reduction: {predicted * 100:.1f}%")
    return "\n".join(lines)
