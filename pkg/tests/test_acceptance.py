"""End-to-end acceptance checks at pinned seeds.

Each test prints one [PASS]/[FAIL] line per verified requirement together
with the Monte Carlo standard error of the measured quantity, so tolerance
margins stay visible.  Run ``pytest -s tests/test_acceptance.py`` to see the
lines for passing tests too.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from rmstkit import (
    CorrelationProfile,
    NoisyCovariateSpec,
    ScenarioConfig,
    bias_limit_random_covariate,
    expected_bias_random_covariate,
    predict_variance_reduction,
    pseudovalues_fast,
    pseudovalues_naive,
    run_scenario,
    variance_limit_random_covariate,
)

from helpers import make_samples, ols_beta1_mc, random_censored_arrays, safe_tau

GRID_SEED = 20260821
THREADS = min(4, os.cpu_count() or 1)

LINEAR_CELLS = (
    # (a, restriction quantile, expected reduction %)
    (0.0, 0.50, 16.1),
    (1.0, 0.50, 8.5),
    (0.0, 0.35, 10.5),
    (1.0, 0.35, 5.1),
)
NOISY_TARGETS = {(0.0, 0.50): 14.5, (1.0, 0.50): 7.7, (0.0, 0.35): 9.5, (1.0, 0.35): 4.8}
QUADRATIC_CELLS = ((0.0, 0.50, 17.7), (2.0, 0.35, 5.2))


def _cell_config(name, a, quantile, **kw):
    values = dict(
        name=name, a=a, tau_quantile=quantile, n=500, pi=0.5,
        treatment_effect=0.5, censor_rate=0.0, replicates=1000, seed=GRID_SEED,
    )
    values.update(kw)
    return ScenarioConfig(**values)


def _check(checks, label, ok, detail):
    checks.append(bool(ok))
    print(f"[{'PASS' if ok else 'FAIL'}] {label}  ({detail})")


def _reduction_mcse(reduction, replicates):
    return (1.0 - reduction) * math.sqrt(4.0 * max(reduction, 0.0) / replicates)


def _coverage_mcse(p, replicates):
    return math.sqrt(p * (1.0 - p) / replicates)


@pytest.fixture(scope="module")
def linear_rows():
    start = time.perf_counter()
    rows = {}
    for a, q, target in LINEAR_CELLS:
        cfg = _cell_config(f"linear-a{a:g}-q{q:g}", a, q)
        rows[(a, q)] = (run_scenario(cfg, threads=THREADS), target)
    return rows, time.perf_counter() - start


@pytest.fixture(scope="module")
def noisy_rows():
    rows = {}
    for a, q, _ in LINEAR_CELLS:
        cfg = _cell_config(f"noisy-a{a:g}-q{q:g}", a, q, covariate_noise_var=0.1)
        rows[(a, q)] = (run_scenario(cfg, threads=THREADS), NOISY_TARGETS[(a, q)])
    return rows


@pytest.fixture(scope="module")
def quadratic_rows():
    rows = {}
    for a, q, target in QUADRATIC_CELLS:
        cfg = _cell_config(f"quadratic-a{a:g}-q{q:g}", a, q, link="quadratic")
        rows[(a, q)] = (run_scenario(cfg, threads=THREADS), target)
    return rows


def _grid_checks(checks, rows, label):
    for (a, q), (res, target) in rows.items():
        red = res.variance_reduction * 100.0
        mcse = _reduction_mcse(res.variance_reduction, res.replicates_used) * 100.0
        _check(
            checks,
            f"{label} a={a:g} q={q:g} reduction",
            abs(red - target) <= 2.0,
            f"got {red:.1f}%, expected {target:.1f}% +-2.0pp, mc-se {mcse:.2f}pp",
        )
        for side, cover in (("km", res.km_coverage), ("pv", res.pv_coverage)):
            cover_pct = cover * 100.0
            cover_mcse = _coverage_mcse(cover, res.replicates_used) * 100.0
            _check(
                checks,
                f"{label} a={a:g} q={q:g} {side} coverage",
                93.5 <= cover_pct <= 96.5,
                f"got {cover_pct:.1f}%, band [93.5, 96.5], mc-se {cover_mcse:.2f}pp",
            )
        bias_mcse = math.sqrt(res.km_variance / res.replicates_used)
        _check(
            checks,
            f"{label} a={a:g} q={q:g} bias",
            abs(res.km_bias) <= 0.05 and abs(res.pv_bias) <= 0.05,
            f"km {res.km_bias:+.4f}, pv {res.pv_bias:+.4f}, bound 0.05, "
            f"mc-se {bias_mcse:.4f}",
        )
        _check(
            checks,
            f"{label} a={a:g} q={q:g} estimator bias agreement",
            abs(res.km_bias - res.pv_bias) <= 0.003,
            f"gap {abs(res.km_bias - res.pv_bias):.5f}, bound 0.003",
        )


def test_acceptance_01_linear_grid(linear_rows):
    rows, elapsed = linear_rows
    checks = []
    _grid_checks(checks, rows, "linear")
    _check(checks, "linear grid runtime", elapsed < 300.0, f"{elapsed:.1f}s, bound 300s")
    assert all(checks)


def test_acceptance_02_noisy_covariate_grid(noisy_rows, linear_rows):
    rows = noisy_rows
    checks = []
    _grid_checks(checks, rows, "noisy")
    for (a, q), (res, _) in rows.items():
        latent_limit = res.r_pooled**2 * 100.0
        red = res.variance_reduction * 100.0
        _check(
            checks,
            f"noisy a={a:g} q={q:g} strictly attenuated",
            0.0 < red < latent_limit,
            f"0 < {red:.1f}% < latent r^2 {latent_limit:.1f}%",
        )
    assert all(checks)


def test_acceptance_03_quadratic_grid(quadratic_rows):
    checks = []
    _grid_checks(checks, quadratic_rows, "quadratic")
    assert all(checks)


def test_acceptance_04_predicted_reduction(linear_rows):
    rows, _ = linear_rows
    checks = []
    predicted = predict_variance_reduction(CorrelationProfile(r0=0.41, r1=0.35, pi=2.0 / 3.0))
    _check(
        checks,
        "closed-form prediction at (0.41, 0.35, 2/3)",
        0.149 <= predicted <= 0.159,
        f"got {predicted:.4f}, band [0.149, 0.159]",
    )
    for (a, q), (res, _) in rows.items():
        gap = abs(res.variance_reduction - res.predicted_reduction) * 100.0
        _check(
            checks,
            f"observed vs predicted reduction a={a:g} q={q:g}",
            gap < 2.0,
            f"observed {res.variance_reduction * 100:.1f}%, "
            f"predicted {res.predicted_reduction * 100:.1f}%, gap {gap:.2f}pp < 2pp",
        )
    assert all(checks)


def test_acceptance_05_fast_pseudovalues_match_reference():
    rng = np.random.default_rng(777)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(5, 201))
        times, events = random_censored_arrays(rng, n)
        samples = make_samples(times, events)
        tau = safe_tau(times, fraction=float(rng.uniform(0.3, 0.99)))
        fast = pseudovalues_fast(samples, tau)
        naive = pseudovalues_naive(samples, tau)
        worst = max(worst, float(np.max(np.abs(fast.values - naive.values))))

    worst_identity = 0.0
    for _ in range(50):
        n = int(rng.integers(5, 201))
        times = np.round(rng.exponential(2.0, n), 2) + 0.01
        tau = float(rng.uniform(0.3, 1.2) * times.max())
        values = pseudovalues_fast(make_samples(times), tau).values
        worst_identity = max(
            worst_identity, float(np.max(np.abs(values - np.minimum(times, tau))))
        )

    checks = []
    _check(
        checks,
        "fast vs reference on 200 censored datasets",
        worst < 1e-10,
        f"max abs deviation {worst:.3e} < 1e-10",
    )
    _check(
        checks,
        "uncensored pseudovalues equal truncated times",
        worst_identity < 1e-12,
        f"max abs deviation {worst_identity:.3e} < 1e-12",
    )
    assert all(checks)


def test_acceptance_06_estimator_variance_identity():
    cfg = _cell_config("variance-identity", 0.0, 0.5, replicates=5000)
    res = run_scenario(cfg, threads=THREADS)
    analytic = float(res.per_replicate["residual_var"].mean()) / (cfg.n * 0.25)
    ratio = res.pv_variance / analytic
    ratio_mcse = math.sqrt(2.0 / res.replicates_used)
    checks = []
    _check(
        checks,
        "replicate variance matches analytic sandwich scale",
        abs(ratio - 1.0) < 0.05,
        f"ratio {ratio:.4f}, band 1 +-0.05, mc-se {ratio_mcse:.3f}",
    )
    _check(
        checks,
        "adjusted interval does not overcover",
        res.pv_coverage <= 0.965,
        f"coverage {res.pv_coverage * 100:.1f}% <= 96.5%",
    )
    assert all(checks)


def test_acceptance_07_random_covariate_limits():
    checks = []
    replicates = 5000
    sizes = (500, 2000, 8000)
    envelope = []
    for n in sizes:
        spec = NoisyCovariateSpec(
            var_u=1.0, var_delta=0.1, beta2_true=3.0, sigma_eps2=1.0, n=n, pi=0.5
        )
        estimates, _ = ols_beta1_mc(
            n=n, replicates=replicates, beta2=3.0, var_delta=0.1,
            sigma_eps=1.0, seed=GRID_SEED + n,
        )
        bias = float(estimates.mean()) - 0.5
        mcse = float(estimates.std(ddof=1)) / math.sqrt(replicates)
        expected = expected_bias_random_covariate(spec)
        _check(
            checks,
            f"mean estimation error at n={n}",
            abs(bias - expected) <= 3.0 * mcse,
            f"bias {bias:+.5f}, expected {expected:+.6f}, 3*mc-se {3 * mcse:.5f}",
        )
        if n == 2000:
            limit = variance_limit_random_covariate(spec)
            ratio = float(estimates.var(ddof=1)) / limit
            _check(
                checks,
                "estimator variance near its large-sample limit (n=2000)",
                abs(ratio - 1.0) < 0.10,
                f"ratio {ratio:.4f}, band 1 +-0.10, mc-se {math.sqrt(2 / replicates):.3f}",
            )
        gap_scale = math.sqrt(1.0 / (n * 0.25))
        envelope.append(abs(bias_limit_random_covariate(spec, gap_scale)))
    _check(
        checks,
        "contamination envelope decays over n in {500, 2000, 8000}",
        envelope[0] > envelope[1] > envelope[2],
        "envelope " + " > ".join(f"{v:.5f}" for v in envelope),
    )
    assert all(checks)


def test_acceptance_08_null_rejection_rate():
    cfg = _cell_config("null-effect", 0.0, 0.5, treatment_effect=0.0, replicates=5000)
    res = run_scenario(cfg, threads=THREADS)
    rate = float((res.per_replicate["pv_p"] < 0.05).mean())
    mcse = math.sqrt(0.05 * 0.95 / res.replicates_used)
    checks = []
    _check(
        checks,
        "two-sided size at the null",
        0.04 <= rate <= 0.06,
        f"rejection rate {rate:.4f}, band [0.04, 0.06], mc-se {mcse:.4f}",
    )
    assert all(checks)


def test_acceptance_09_worker_count_reproducibility(tmp_path):
    config = tmp_path / "grid.cfg"
    config.write_text(
        "[defaults]\nn = 100\nreplicates = 40\nseed = 3\ntau_quantile = 0.5\n"
        "\n[cell-one]\na = 0.0\n\n[cell-two]\na = 1.0\ncensor_rate = 0.1\n"
    )
    outputs = {}
    for threads in (1, 4):
        out = tmp_path / f"report-{threads}.json"
        csv_out = tmp_path / f"rows-{threads}.csv"
        result = subprocess.run(
            [sys.executable, "-m", "rmstkit.cli", "simulate",
             "--config", str(config), "--threads", str(threads),
             "--out", str(out), "--csv", str(csv_out)],
            capture_output=True,
        )
        assert result.returncode == 0, result.stderr.decode()
        outputs[threads] = (result.stdout, out.read_bytes(), csv_out.read_bytes())

    stdout_same = outputs[1][0] == outputs[4][0]
    json_same = outputs[1][1] == outputs[4][1]
    csv_same = outputs[1][2] == outputs[4][2]
    checks = []
    _check(
        checks,
        "single and multi worker runs byte-identical",
        stdout_same and json_same and csv_same,
        f"stdout {stdout_same}, json {json_same}, csv {csv_same}",
    )
    assert all(checks)

    report = json.loads(outputs[1][1])
    assert report["schema_version"] == 1
