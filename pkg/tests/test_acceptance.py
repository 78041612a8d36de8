"""Acceptance suite: one test per criterion, each printing a PASS line.

Runtimes are desk scale; the convergence criterion is the heaviest at a few
minutes single-threaded.
"""

import math
import time

import numpy as np
import pytest

import rffkit as rk
from rffkit import (
    ExperimentConfig,
    FeatureCountRule,
    LambdaRule,
    SamplingScheme,
    SplineSimConfig,
    SRule,
    run_pipeline,
    run_benchmark,
    run_convergence,
)
from rffkit.cli import main as cli_main
from rffkit.estimators import lipschitz_gradient, lipschitz_objective
from rffkit.features import effective_dof_from_eigs


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


# -- criterion 1 -----------------------------------------------------------


def test_criterion_1_convergence_slopes():
    started = time.perf_counter()
    slopes = {}
    for rule, target in ((LambdaRule.INV_SQRT_N, -0.50), (LambdaRule.INV_CBRT_N, -1.0 / 3.0)):
        config = ExperimentConfig(
            sim=SplineSimConfig(t=2, r=1, x0=0.5, sigma=0.3, truncation=300),
            scheme=SamplingScheme.EXACT_LEVERAGE,
            n_grid=(128, 256, 512, 1024, 2048, 4096),
            repetitions=20,
            seed=7,
            lambda_rule=rule,
            lambda_const=1.0,
            s_rule=SRule.DOF_PROPORTIONAL,
            s_factor=4.0,
        )
        result = run_convergence(config)
        slopes[rule] = (result.summary["slope"], target)
    elapsed = time.perf_counter() - started
    ok = all(abs(slope - target) <= 0.15 for slope, target in slopes.values())
    ok = ok and elapsed < 300.0
    detail = (
        f"slope(inv-sqrt-n)={slopes[LambdaRule.INV_SQRT_N][0]:.3f} (target -0.50 +- 0.15), "
        f"slope(inv-cbrt-n)={slopes[LambdaRule.INV_CBRT_N][0]:.3f} (target -0.33 +- 0.15), "
        f"runtime={elapsed:.0f}s (< 300s)"
    )
    _report("criterion 1 (convergence slopes)", ok, detail)


# -- criteria 2 and 3 share the 50-trial loop ------------------------------


@pytest.fixture(scope="module")
def approx_bound_trials():
    spec = rk.spline_kernel(2, truncation=500)
    n = 200
    lam = n**-0.5
    delta = 0.1
    x0 = 0.3
    records = []
    for i in range(50):
        rng = np.random.default_rng(10_000 + i)
        x = rng.random((n, 1))
        dof = effective_dof_from_eigs(rk.gram_eigvals(spec, x), lam, n)
        s = rk.required_features(FeatureCountRule.LEVERAGE_RFF, dof, lam, spec.z0, delta)
        f_x = rk.cross_kernel(spec, x, np.array([[x0]]))[:, 0]
        f_x /= math.sqrt(rk.eval_kernel(spec, x0, x0))
        fset = rk.sample_exact_leverage(spec, x, lam, s, max(4 * s, 1000), rng)
        z = rk.build_feature_matrix(fset, spec, x)
        error, beta_norm_sq = rk.function_approx_error(f_x, z.values, lam)
        norm = rk.whitened_error_norm(
            rk.gram_matrix(spec, x), z.values @ z.values.T, lam
        )
        records.append((error, beta_norm_sq, norm, s))
    return lam, records


def test_criterion_2_function_approx_bound(approx_bound_trials):
    lam, records = approx_bound_trials
    hits = sum(1 for err, bns, _, _ in records if err <= 2 * lam and bns <= 2.0)
    detail = f"error<=2*lambda and s||beta||^2<=2 in {hits}/50 trials (need >= 45), s={records[0][3]}"
    _report("criterion 2 (function approximation bound)", hits >= 45, detail)


def test_criterion_3_concentration(approx_bound_trials):
    _, records = approx_bound_trials
    hits = sum(1 for _, _, norm, _ in records if norm <= 0.5)
    detail = f"whitened norm <= 0.5 in {hits}/50 trials (need >= 45)"
    _report("criterion 3 (whitened concentration)", hits >= 45, detail)


# -- criterion 4 ------------------------------------------------------------


def test_criterion_4_weighted_beats_plain():
    sim = SplineSimConfig(t=2, r=1, x0=0.5, sigma=0.3, n=1000, truncation=500)
    dataset, _ = rk.generate_spline_sim(sim, np.random.default_rng(123))
    s_sweep = (10, 20, 40, 80)
    common = dict(
        kernel=rk.gaussian_kernel(16.0, dim=1),
        n_grid=(1000,),
        s_sweep=s_sweep,
        repetitions=10,
        seed=5,
        lambda_grid=(1e-3,),
        gamma_grid=(16.0,),
        standardize=False,
        pool_factor=20.0,
    )
    res_plain = run_benchmark(
        ExperimentConfig(scheme=SamplingScheme.PLAIN, **common), dataset
    )
    res_lev = run_benchmark(
        ExperimentConfig(scheme=SamplingScheme.EXACT_LEVERAGE, **common), dataset
    )
    pairs = {
        s: (res_lev.summary[f"mean_test_s{s}"], res_plain.summary[f"mean_test_s{s}"])
        for s in s_sweep
    }
    ok = all(lev <= plain for lev, plain in pairs.values())
    detail = ", ".join(
        f"s={s}: leverage {lev:.4f} vs plain {plain:.4f}" for s, (lev, plain) in pairs.items()
    )
    _report("criterion 4 (weighted beats plain)", ok, detail)


# -- criterion 5 ------------------------------------------------------------


def test_criterion_5_pipeline_compression():
    sim = SplineSimConfig(t=2, r=1, x0=0.5, sigma=0.75, n=1000, truncation=500)
    dataset, _ = rk.generate_spline_sim(sim, np.random.default_rng(123))
    config = ExperimentConfig(
        kernel=rk.spline_kernel(2, truncation=500),
        scheme=SamplingScheme.APPROX_LEVERAGE,
        n_grid=(1000,),
        s_rule=SRule.FIXED,
        s_sweep=(512,),
        lambda_rule=LambdaRule.INV_SQRT_N,
        repetitions=10,
        seed=5,
    )
    result = run_pipeline(config, dataset)
    compression = result.summary["mean_compression"]
    ratio = result.summary["test_ratio"]
    # the emitted count echoes the profile's rounded dof (checked per rep
    # inside the runner; re-check the recorded rows here)
    pipe_sizes = [row.s for row in result.rows[1::2]]
    ok = compression <= 0.5 and ratio <= 1.2 and all(1 <= s <= 512 for s in pipe_sizes)
    detail = (
        f"l/s={compression:.3f} (<= 0.5), test RMSE ratio={ratio:.3f} (<= 1.2), "
        f"l values={sorted(set(pipe_sizes))}"
    )
    _report("criterion 5 (fast-approximation pipeline)", ok, detail)


# -- criterion 6 ------------------------------------------------------------


def test_criterion_6_exact_identities():
    rng = np.random.default_rng(4096)
    checks = []
    started = time.perf_counter()

    # push-through identity
    z = rng.standard_normal((60, 25))
    y = rng.standard_normal(60)
    lam, n = 0.05, 60
    primal = z @ np.linalg.solve(z.T @ z + n * lam * np.eye(25), z.T @ y)
    dual = (z @ z.T) @ np.linalg.solve(z @ z.T + n * lam * np.eye(n), y)
    checks.append(("push-through", np.abs(primal - dual).max(), 1e-8))

    # trace identity of the approximate scheme
    spec = rk.spline_kernel(2, truncation=100)
    x = rng.random((70, 1))
    s = 40
    _, profile = rk.approx_leverage_sample(spec, x, 0.05, s, np.random.default_rng(1))
    freqs = rk.spectral_sample(spec, np.random.default_rng(1), s)
    zf = rk.feature_matrix(spec, freqs, x)
    d_tilde = rk.effective_dof(zf @ zf.T / s, 0.05, 70)
    checks.append(("trace identity", abs(profile.total - s * d_tilde), 1e-8 * s))

    # effective dof eigen form vs solve form
    a = rng.standard_normal((50, 50))
    k = a @ a.T
    solve_form = float(np.trace(k @ np.linalg.solve(k + 50 * 0.02 * np.eye(50), np.eye(50))))
    checks.append(("dof forms", abs(rk.effective_dof(k, 0.02, 50) - solve_form), 1e-10))

    # closed-form approximation error vs brute-force fit
    f_x = rng.standard_normal(60)
    error, _ = rk.function_approx_error(f_x, z, lam)
    model = rk.fit_ridge(z, f_x, lam)
    brute = float(np.mean((f_x - z @ model.beta) ** 2) + lam * model.beta @ model.beta)
    checks.append(("approx error closed form", abs(error - brute), 1e-9))

    # logistic gradient vs central finite differences (relative)
    labels = np.where(rng.standard_normal(60) > 0, 1.0, -1.0)
    beta = 0.3 * rng.standard_normal(25)
    grad = lipschitz_gradient(z, labels, beta, rk.LossKind.LOGISTIC, lam)
    fd = np.zeros(25)
    h = 1e-6
    for j in range(25):
        e = np.zeros(25)
        e[j] = h
        fd[j] = (
            lipschitz_objective(z, labels, beta + e, rk.LossKind.LOGISTIC, lam)
            - lipschitz_objective(z, labels, beta - e, rk.LossKind.LOGISTIC, lam)
        ) / (2 * h)
    rel = float(np.linalg.norm(grad - fd) / np.linalg.norm(grad))
    checks.append(("logistic gradient", rel, 1e-5))

    elapsed = time.perf_counter() - started
    ok = all(value <= tol for _, value, tol in checks) and elapsed < 1.0
    detail = (
        ", ".join(f"{name}={value:.2e} (tol {tol:g})" for name, value, tol in checks)
        + f", runtime={elapsed:.2f}s (< 1s)"
    )
    _report("criterion 6 (exact identities)", ok, detail)


# -- criterion 7 ------------------------------------------------------------


def test_criterion_7_cli_determinism(tmp_path):
    sim = SplineSimConfig(t=2, r=1, x0=0.5, sigma=0.3, n=100, truncation=50)
    dataset, _ = rk.generate_spline_sim(sim, np.random.default_rng(7))
    data_path = tmp_path / "sim.txt"
    rk.write_sparse_dataset(dataset, data_path)

    commands = {
        "simulate": [
            "simulate", "--n-grid", "32,64", "--reps", "2", "--seed", "5",
            "--s-rule", "fixed", "--s-const", "24", "--truncation", "60",
            "--eval-points", "300", "--scheme", "exact-leverage",
        ],
        "benchmark": [
            "benchmark", "--data", str(data_path), "--scheme", "exact-leverage",
            "--kernel", "gaussian", "--gamma", "16", "--s-const", "8,16",
            "--reps", "2", "--seed", "5", "--lambda-grid", "0.001",
            "--gamma-grid", "16", "--cv-folds", "3", "--no-standardize",
        ],
        "pipeline": [
            "pipeline", "--data", str(data_path), "--kernel", "spline",
            "--order", "2", "--truncation", "60", "--s-rule", "fixed",
            "--s-const", "48", "--reps", "2", "--seed", "5",
        ],
        "diagnose": [
            "diagnose", "--n-grid", "60", "--seed", "5", "--truncation", "60",
            "--scheme", "plain", "--s-rule", "fixed", "--s-const", "30",
        ],
    }
    failures = []
    for name, args in commands.items():
        outputs = []
        for tag, threads in (("a", "1"), ("b", "1"), ("c", "4"), ("d", "4")):
            out = tmp_path / f"{name}_{tag}.csv"
            code = cli_main(args + ["--threads", threads, "--out", str(out)])
            if code != 0:
                failures.append(f"{name} exited {code}")
                break
            outputs.append(out.read_bytes())
        else:
            if len(set(outputs)) != 1:
                failures.append(f"{name} produced differing bytes")
    ok = not failures
    detail = "all subcommands byte-identical across reruns and 1 vs 4 threads" if ok else "; ".join(failures)
    _report("criterion 7 (CLI determinism)", ok, detail)
