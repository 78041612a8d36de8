"""Experiment harness: convergence simulation, scheme benchmark, two-stage
pipeline, and CSV emission.

Every repetition owns a generator derived from ``SeedSequence(seed,
spawn_key=...)`` where the spawn key encodes (command, grid point,
repetition), so results are independent of execution order and thread
count.  Wall times are recorded only when ``timings`` is enabled; otherwise
the column is written as 0 so output bytes are reproducible.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, SplineSimConfig, Task, generate_spline_sim, make_folds, standardize
from .diagnostics import FeatureCountRule, decay_report, fixed_point_bound, required_features, whitened_error_norm
from .errors import NumericalError
from .estimators import LinearModel, LossKind, fit_lipschitz, fit_ridge, predict
from .features import (
    SamplingScheme,
    WeightedFeatureSet,
    approx_leverage_sample,
    build_feature_matrix,
    effective_dof_from_eigs,
    sample_exact_leverage,
    sample_plain,
)
from .kernels import KernelFamily, KernelSpec, gram_eigvals, gram_matrix

logger = logging.getLogger(__name__)

# spawn-key tags keeping the per-command generator families disjoint
_TAG_SIMULATE = 0
_TAG_BENCHMARK = 1
_TAG_SUBSAMPLE = 2
_TAG_PIPELINE = 3
_TAG_DIAGNOSE = 4


class LambdaRule:
    INV_SQRT_N = "inv-sqrt-n"
    INV_CBRT_N = "inv-cbrt-n"
    INV_N = "inv-n"
    LOG_N_OVER_N = "log-n-over-n"
    FIXED = "fixed"
    ALL = (INV_SQRT_N, INV_CBRT_N, INV_N, LOG_N_OVER_N, FIXED)


class SRule:
    DOF_PROPORTIONAL = "dof-proportional"
    SUFFICIENT_COUNT = "sufficient-count"
    FIXED = "fixed"
    ALL = (DOF_PROPORTIONAL, SUFFICIENT_COUNT, FIXED)


def lambda_from_rule(rule: str, const: float, n: int) -> float:
    if rule == LambdaRule.INV_SQRT_N:
        return const * n**-0.5
    if rule == LambdaRule.INV_CBRT_N:
        return const * n ** (-1.0 / 3.0)
    if rule == LambdaRule.INV_N:
        return const / n
    if rule == LambdaRule.LOG_N_OVER_N:
        return const * math.log(n) / n
    if rule == LambdaRule.FIXED:
        return const
    raise ValueError(f"unknown lambda rule {rule!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared configuration for all experiment commands."""

    kernel: KernelSpec | None = None
    scheme: SamplingScheme = SamplingScheme.PLAIN
    n_grid: tuple[int, ...] = (128, 256, 512, 1024, 2048, 4096)
    lambda_rule: str = LambdaRule.INV_SQRT_N
    lambda_const: float = 1.0
    lambda_star_const: float | None = None
    s_rule: str = SRule.DOF_PROPORTIONAL
    s_factor: float = 4.0
    s_sweep: tuple[int, ...] = (100,)
    repetitions: int = 10
    seed: int = 0
    loss: LossKind = LossKind.SQUARED
    sim: SplineSimConfig | None = None
    delta: float = 0.1
    pool_factor: float = 4.0
    eval_points: int = 10_000
    test_fraction: float = 0.3
    standardize: bool = True
    cv_folds: int = 5
    lambda_grid: tuple[float, ...] = tuple(np.logspace(-6, 0, 7))
    gamma_grid: tuple[float, ...] = tuple(np.logspace(-4, 4, 5, base=2.0))
    threads: int = 1
    top_l: bool = False
    subsample: int | None = None
    timings: bool = False

    def __post_init__(self):
        if any(n <= 0 for n in self.n_grid):
            raise ValueError("n grid values must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(s <= 0 for s in self.s_sweep):
            raise ValueError("s sweep values must be positive")


@dataclass(frozen=True)
class ResultRow:
    n: int
    lam: float
    s: int
    scheme: str
    rep: int
    train_metric: float
    test_metric: float
    excess_risk: float
    wall_time_ms: float


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    summary: dict[str, object] = field(default_factory=dict)


def _rng(seed: int, key: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _child_seed(seed: int, key: tuple[int, ...]) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def _run_indexed(tasks: Sequence[Callable[[], object]], threads: int) -> list[object]:
    """Run callables, preserving order; thread count never affects values."""
    if threads <= 1 or len(tasks) <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda task: task(), tasks))


def sample_scheme_features(
    spec: KernelSpec,
    scheme: SamplingScheme,
    x: np.ndarray,
    lam: float,
    s: int,
    rng: np.random.Generator,
    pool_factor: float = 4.0,
    top_l: bool = False,
    source_seed: int | None = None,
) -> WeightedFeatureSet:
    """Draw a feature set under the requested sampling scheme.

    For the approximate scheme, s is the pool size; the returned set holds
    the resampled l features.
    """
    if scheme is SamplingScheme.PLAIN:
        return sample_plain(spec, s, rng, source_seed)
    if scheme is SamplingScheme.EXACT_LEVERAGE:
        pool_size = max(s, int(math.ceil(pool_factor * s)))
        return sample_exact_leverage(spec, x, lam, s, pool_size, rng, source_seed)
    fset, _ = approx_leverage_sample(
        spec, x, lam, s, rng, top_l=top_l, source_seed=source_seed
    )
    return fset


def _fit_model(z, y, loss: LossKind, lam: float) -> LinearModel:
    if loss is LossKind.SQUARED:
        return fit_ridge(z, y, lam)
    return fit_lipschitz(z, y, loss, lam)


def _metric(pred: np.ndarray, y: np.ndarray, task: Task) -> float:
    if task is Task.CLASSIFICATION:
        return float(np.mean(pred != y))
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def fit_loglog_slope(ns: Sequence[float], values: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log(values) against log(ns) with its std error."""
    xs = np.log(np.asarray(ns, dtype=float))
    ys = np.log(np.asarray(values, dtype=float))
    design = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    k = xs.shape[0]
    if k <= 2:
        return float(coef[0]), float("nan")
    residual = ys - design @ coef
    sigma2 = float(residual @ residual) / (k - 2)
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    return float(coef[0]), math.sqrt(sigma2 / sxx)


def _config_summary(command: str, config: ExperimentConfig) -> dict[str, object]:
    out: dict[str, object] = {"command": command}
    if config.kernel is not None:
        k = config.kernel
        if k.family is KernelFamily.GAUSSIAN:
            out["kernel"] = f"gaussian(gamma={k.gamma:g},dim={k.dim},style={k.feature_style.value})"
        else:
            out["kernel"] = f"spline(order={k.order},truncation={k.truncation})"
    if config.sim is not None:
        sim = config.sim
        out["sim"] = (
            f"t={sim.t},r={sim.r},x0={sim.x0:g},sigma={sim.sigma:g},truncation={sim.truncation}"
        )
    out.update(
        scheme=config.scheme.value,
        lambda_rule=config.lambda_rule,
        lambda_const=config.lambda_const,
        s_rule=config.s_rule,
        s_factor=config.s_factor,
        s_sweep=",".join(str(s) for s in config.s_sweep),
        repetitions=config.repetitions,
        seed=config.seed,
        loss=config.loss.value,
        standardize=config.standardize,
        subsample=config.subsample if config.subsample is not None else "none",
        pool_factor=config.pool_factor,
        delta=config.delta,
        top_l=config.top_l,
    )
    return out


def _resolve_s(
    config: ExperimentConfig, dof: float, lam: float, z0: float, fallback: int
) -> int:
    if config.s_rule == SRule.DOF_PROPORTIONAL:
        return max(1, int(np.rint(config.s_factor * dof)))
    if config.s_rule == SRule.SUFFICIENT_COUNT:
        rule = (
            FeatureCountRule.LEVERAGE_RFF
            if config.scheme is not SamplingScheme.PLAIN
            else FeatureCountRule.PLAIN_RFF
        )
        return required_features(rule, dof, lam, z0, config.delta)
    return fallback


def run_convergence(config: ExperimentConfig) -> ExperimentResult:
    """Spline-simulation convergence experiment with log-log slope fit.

    For each (n, repetition): generate data, set lambda by rule, set s by
    rule from the effective degrees of freedom of the exact Gram, sample
    features under the scheme, fit ridge, and estimate the excess risk as
    the mean squared deviation from the noiseless target on a fresh
    evaluation sample.
    """
    if config.sim is None:
        raise ValueError("run_convergence needs a spline simulation config")
    sim_base = config.sim
    spec = config.kernel if config.kernel is not None else sim_base.learner_kernel()

    def one(grid_idx: int, rep: int) -> ResultRow:
        n = config.n_grid[grid_idx]
        key = (_TAG_SIMULATE, grid_idx, rep)
        data_rng = _rng(config.seed, key + (0,))
        feat_rng = _rng(config.seed, key + (1,))
        eval_rng = _rng(config.seed, key + (2,))
        started = time.perf_counter()
        try:
            dataset, true_f = generate_spline_sim(replace(sim_base, n=n), data_rng)
            lam = lambda_from_rule(config.lambda_rule, config.lambda_const, n)
            eigs = gram_eigvals(spec, dataset.x)
            dof = effective_dof_from_eigs(eigs, lam, n)
            s = _resolve_s(config, dof, lam, spec.z0, config.s_sweep[0])
            fset = sample_scheme_features(
                spec,
                config.scheme,
                dataset.x,
                lam,
                s,
                feat_rng,
                config.pool_factor,
                config.top_l,
                source_seed=_child_seed(config.seed, key),
            )
            z = build_feature_matrix(fset, spec, dataset.x)
            model = fit_ridge(z, dataset.y, lam)
            train = float(np.mean((z.values @ model.beta - dataset.y) ** 2))
            x_eval = eval_rng.random((config.eval_points, 1))
            truth = true_f(x_eval)
            pred = predict(model, spec, x_eval)
            excess = float(np.mean((pred - truth) ** 2))
            noisy = truth + sim_base.sigma * eval_rng.standard_normal(truth.shape[0])
            test = float(np.mean((pred - noisy) ** 2))
        except Exception as exc:
            raise NumericalError(
                f"convergence repetition failed (n={n}, rep={rep}, seed={config.seed}): {exc}"
            ) from exc
        wall = (time.perf_counter() - started) * 1e3 if config.timings else 0.0
        return ResultRow(n, lam, fset.size, config.scheme.value, rep, train, test, excess, wall)

    tasks = [
        (lambda gi=gi, rep=rep: one(gi, rep))
        for gi in range(len(config.n_grid))
        for rep in range(config.repetitions)
    ]
    rows = list(_run_indexed(tasks, config.threads))

    summary = _config_summary("simulate", config)
    means = []
    for gi, n in enumerate(config.n_grid):
        chunk = rows[gi * config.repetitions : (gi + 1) * config.repetitions]
        mean_excess = float(np.mean([r.excess_risk for r in chunk]))
        means.append(mean_excess)
        summary[f"mean_excess_n{n}"] = mean_excess
    slope, stderr = fit_loglog_slope(config.n_grid, means)
    summary["slope"] = slope
    summary["slope_stderr"] = stderr
    return ExperimentResult(rows, summary)


def _split(dataset: Dataset, fraction: float, rng: np.random.Generator):
    n_test = max(1, int(round(fraction * dataset.n)))
    perm = rng.permutation(dataset.n)
    return perm[n_test:], perm[:n_test]


def _maybe_standardize(config: ExperimentConfig, spec: KernelSpec, x_tr, x_te):
    """Fit the column transform on train and apply to both splits.

    Spline inputs live on [0, 1], so standardization is skipped for that
    family regardless of the flag.
    """
    if not config.standardize or spec.family is KernelFamily.SPLINE_EVEN:
        return x_tr, x_te
    ds = Dataset(x_tr, np.zeros(x_tr.shape[0]), Task.REGRESSION)
    std_ds, transform = standardize(ds)
    return std_ds.x, transform.apply(x_te)


def _subsampled(config: ExperimentConfig, dataset: Dataset) -> Dataset:
    if config.subsample is None or config.subsample >= dataset.n:
        return dataset
    rng = _rng(config.seed, (_TAG_SUBSAMPLE,))
    idx = rng.choice(dataset.n, size=config.subsample, replace=False)
    true_y = None if dataset.true_y is None else dataset.true_y[idx]
    return Dataset(dataset.x[idx], dataset.y[idx], dataset.task, dataset.name, true_y)


def _candidate_specs(config: ExperimentConfig, base: KernelSpec) -> list[tuple[KernelSpec, float]]:
    lambdas = config.lambda_grid
    if base.family is KernelFamily.GAUSSIAN:
        return [
            (replace(base, gamma=float(g)), float(lam))
            for g in config.gamma_grid
            for lam in lambdas
        ]
    return [(base, float(lam)) for lam in lambdas]


def run_benchmark(config: ExperimentConfig, dataset: Dataset) -> ExperimentResult:
    """Train/test benchmark of one sampling scheme over an s sweep.

    Each repetition draws a split, tunes (kernel parameter, lambda) by
    k-fold cross-validation at each s, refits on the full training split,
    and records the test metric (RMSE for regression, misclassification
    rate for classification).
    """
    if config.kernel is None:
        raise ValueError("run_benchmark needs a kernel spec")
    if (config.loss is LossKind.SQUARED) != (dataset.task is Task.REGRESSION):
        raise ValueError(
            f"loss {config.loss.value} does not match dataset task {dataset.task.value}"
        )
    dataset = _subsampled(config, dataset)
    base = config.kernel
    candidates = _candidate_specs(config, base)

    def one(rep: int, s_idx: int) -> ResultRow:
        s = config.s_sweep[s_idx]
        key = (_TAG_BENCHMARK, rep)
        split_rng = _rng(config.seed, key + (0,))
        cv_rng = _rng(config.seed, key + (1,))
        tr, te = _split(dataset, config.test_fraction, split_rng)
        x_tr, x_te = _maybe_standardize(config, base, dataset.x[tr], dataset.x[te])
        y_tr, y_te = dataset.y[tr], dataset.y[te]
        folds = make_folds(x_tr.shape[0], config.cv_folds, cv_rng)
        started = time.perf_counter()

        best = None
        for cand_idx, (spec_c, lam_c) in enumerate(candidates):
            scores = []
            for fold_idx, holdout in enumerate(folds):
                mask = np.ones(x_tr.shape[0], dtype=bool)
                mask[holdout] = False
                rng = _rng(config.seed, key + (2, s_idx, cand_idx, fold_idx))
                fset = sample_scheme_features(
                    spec_c, config.scheme, x_tr[mask], lam_c, s, rng,
                    config.pool_factor, config.top_l,
                )
                z = build_feature_matrix(fset, spec_c, x_tr[mask])
                model = _fit_model(z, y_tr[mask], config.loss, lam_c)
                pred = predict(model, spec_c, x_tr[holdout])
                scores.append(_metric(pred, y_tr[holdout], dataset.task))
            mean_score = float(np.mean(scores))
            if best is None or mean_score < best[0]:
                best = (mean_score, spec_c, lam_c)
        _, spec_best, lam_best = best

        rng = _rng(config.seed, key + (3, s_idx))
        fset = sample_scheme_features(
            spec_best, config.scheme, x_tr, lam_best, s, rng,
            config.pool_factor, config.top_l,
            source_seed=_child_seed(config.seed, key + (3, s_idx)),
        )
        z = build_feature_matrix(fset, spec_best, x_tr)
        model = _fit_model(z, y_tr, config.loss, lam_best)
        train = _metric(predict(model, spec_best, x_tr), y_tr, dataset.task)
        pred_te = predict(model, spec_best, x_te)
        test = _metric(pred_te, y_te, dataset.task)
        if dataset.true_y is not None and dataset.task is Task.REGRESSION:
            excess = float(np.mean((pred_te - dataset.true_y[te]) ** 2))
        else:
            excess = float("nan")
        wall = (time.perf_counter() - started) * 1e3 if config.timings else 0.0
        return ResultRow(
            x_tr.shape[0], lam_best, fset.size, config.scheme.value, rep,
            train, test, excess, wall,
        )

    tasks = [
        (lambda rep=rep, si=si: one(rep, si))
        for si in range(len(config.s_sweep))
        for rep in range(config.repetitions)
    ]
    rows = list(_run_indexed(tasks, config.threads))

    summary = _config_summary("benchmark", config)
    summary["dataset"] = dataset.name
    summary["n_total"] = dataset.n
    for si, s in enumerate(config.s_sweep):
        chunk = rows[si * config.repetitions : (si + 1) * config.repetitions]
        tests = np.array([r.test_metric for r in chunk])
        summary[f"mean_test_s{s}"] = float(tests.mean())
        if tests.shape[0] > 1:
            summary[f"halfwidth_test_s{s}"] = float(
                2.0 * tests.std(ddof=1) / math.sqrt(tests.shape[0])
            )
    return ExperimentResult(rows, summary)


def run_pipeline(config: ExperimentConfig, dataset: Dataset) -> ExperimentResult:
    """Two-stage pipeline: plain pool at lambda, resample via the fast
    approximate scheme, refit at lambda*.

    Emits one baseline row (full plain pool) and one pipeline row (l
    resampled features) per repetition; the summary reports the mean
    compression ratio l/s and the test-metric ratio.
    """
    if config.kernel is None:
        raise ValueError("run_pipeline needs a kernel spec")
    if (config.loss is LossKind.SQUARED) != (dataset.task is Task.REGRESSION):
        raise ValueError(
            f"loss {config.loss.value} does not match dataset task {dataset.task.value}"
        )
    dataset = _subsampled(config, dataset)
    spec = config.kernel

    def one(rep: int) -> tuple[ResultRow, ResultRow, float]:
        key = (_TAG_PIPELINE, rep)
        split_rng = _rng(config.seed, key + (0,))
        tr, te = _split(dataset, config.test_fraction, split_rng)
        x_tr, x_te = _maybe_standardize(config, spec, dataset.x[tr], dataset.x[te])
        y_tr, y_te = dataset.y[tr], dataset.y[te]
        n_tr = x_tr.shape[0]
        lam = lambda_from_rule(config.lambda_rule, config.lambda_const, n_tr)
        lam_star = (
            lam
            if config.lambda_star_const is None
            else lambda_from_rule(config.lambda_rule, config.lambda_star_const, n_tr)
        )
        if config.s_rule == SRule.FIXED:
            s = config.s_sweep[0]
        else:
            eigs = gram_eigvals(spec, x_tr)
            dof = effective_dof_from_eigs(eigs, lam, n_tr)
            s = _resolve_s(config, dof, lam, spec.z0, config.s_sweep[0])
        started = time.perf_counter()

        # the same stream seeds both draws, so the baseline pool and the
        # algorithm's internal pool hold identical frequencies
        pool_key = key + (1,)
        pool = sample_plain(spec, s, _rng(config.seed, pool_key),
                            source_seed=_child_seed(config.seed, pool_key))
        z_pool = build_feature_matrix(pool, spec, x_tr)
        base_model = _fit_model(z_pool, y_tr, config.loss, lam)
        base_train = _metric(predict(base_model, spec, x_tr), y_tr, dataset.task)
        base_pred = predict(base_model, spec, x_te)
        base_test = _metric(base_pred, y_te, dataset.task)

        fset, profile = approx_leverage_sample(
            spec, x_tr, lam, s, _rng(config.seed, pool_key),
            top_l=config.top_l, source_seed=_child_seed(config.seed, pool_key),
        )
        z_l = build_feature_matrix(fset, spec, x_tr)
        pipe_model = _fit_model(z_l, y_tr, config.loss, lam_star)
        pipe_train = _metric(predict(pipe_model, spec, x_tr), y_tr, dataset.task)
        pipe_pred = predict(pipe_model, spec, x_te)
        pipe_test = _metric(pipe_pred, y_te, dataset.task)

        if dataset.true_y is not None and dataset.task is Task.REGRESSION:
            base_excess = float(np.mean((base_pred - dataset.true_y[te]) ** 2))
            pipe_excess = float(np.mean((pipe_pred - dataset.true_y[te]) ** 2))
        else:
            base_excess = pipe_excess = float("nan")
        wall = (time.perf_counter() - started) * 1e3 if config.timings else 0.0
        base_row = ResultRow(
            n_tr, lam, s, SamplingScheme.PLAIN.value, rep,
            base_train, base_test, base_excess, wall,
        )
        pipe_row = ResultRow(
            n_tr, lam_star, fset.size, SamplingScheme.APPROX_LEVERAGE.value, rep,
            pipe_train, pipe_test, pipe_excess, 0.0 if not config.timings else wall,
        )
        expected_l = int(np.clip(np.rint(profile.total / s), 1, s))
        if fset.size != expected_l:
            raise NumericalError("resampled feature count disagrees with the profile")
        return base_row, pipe_row, fset.size / s

    results = list(
        _run_indexed(
            [(lambda rep=rep: one(rep)) for rep in range(config.repetitions)],
            config.threads,
        )
    )
    rows: list[ResultRow] = []
    for base_row, pipe_row, _ in results:
        rows.extend((base_row, pipe_row))
    summary = _config_summary("pipeline", config)
    summary["dataset"] = dataset.name
    summary["mean_compression"] = float(np.mean([c for *_, c in results]))
    base_mean = float(np.mean([b.test_metric for b, _, _ in results]))
    pipe_mean = float(np.mean([p.test_metric for _, p, _ in results]))
    summary["mean_test_baseline"] = base_mean
    summary["mean_test_pipeline"] = pipe_mean
    summary["test_ratio"] = pipe_mean / base_mean if base_mean > 0 else float("nan")
    return ExperimentResult(rows, summary)


def run_diagnose(config: ExperimentConfig, dataset: Dataset | None) -> list[tuple[str, object]]:
    """Leverage, degrees-of-freedom, decay, and concentration report."""
    if dataset is None:
        if config.sim is None:
            raise ValueError("diagnose needs either a dataset or a simulation config")
        sim = replace(config.sim, n=config.n_grid[0])
        dataset, _ = generate_spline_sim(sim, _rng(config.seed, (_TAG_DIAGNOSE, 0)))
    else:
        dataset = _subsampled(config, dataset)
    spec = config.kernel if config.kernel is not None else (
        config.sim.learner_kernel() if config.sim is not None else None
    )
    if spec is None:
        raise ValueError("diagnose needs a kernel spec")
    n = dataset.n
    lam = lambda_from_rule(config.lambda_rule, config.lambda_const, n)
    k = gram_matrix(spec, dataset.x)
    eigs = np.linalg.eigvalsh(k)
    dof = effective_dof_from_eigs(eigs, lam, n)
    z0 = spec.z0
    s_lev = required_features(FeatureCountRule.LEVERAGE_RFF, dof, lam, z0, config.delta)
    s_plain = required_features(FeatureCountRule.PLAIN_RFF, dof, lam, z0, config.delta)
    s_used = _resolve_s(config, dof, lam, z0, config.s_sweep[0])
    fset = sample_scheme_features(
        spec, config.scheme, dataset.x, lam, s_used,
        _rng(config.seed, (_TAG_DIAGNOSE, 1)), config.pool_factor, config.top_l,
    )
    z = build_feature_matrix(fset, spec, dataset.x)
    norm = whitened_error_norm(k, z.values @ z.values.T, lam)
    report = decay_report(k, n)
    bound = fixed_point_bound(np.maximum(eigs, 0.0)[::-1] / n, n, lam)
    return [
        ("n", n),
        ("lambda", lam),
        ("dof", dof),
        ("z0", z0),
        ("required_features_leverage", s_lev),
        ("required_features_plain", s_plain),
        ("scheme", config.scheme.value),
        ("s_used", fset.size),
        ("whitened_error_norm", norm),
        ("decay_model", report.fitted_model.value),
        ("decay_exponent", report.fit_exponent),
        ("decay_r2", report.fit_r2),
        ("fixed_point_bound", bound),
    ]


_CSV_HEADER = "n,lambda,s,scheme,rep,train_metric,test_metric,excess_risk,wall_time_ms"


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def emit_csv(result: ExperimentResult, path) -> None:
    """Write rows plus a '#'-prefixed summary block; UTF-8, LF endings.

    Floats carry 17 significant digits so values round-trip exactly.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(_CSV_HEADER + "\n")
            for row in result.rows:
                handle.write(
                    ",".join(
                        (
                            str(row.n),
                            _fmt(row.lam),
                            str(row.s),
                            row.scheme,
                            str(row.rep),
                            _fmt(row.train_metric),
                            _fmt(row.test_metric),
                            _fmt(row.excess_risk),
                            _fmt(row.wall_time_ms),
                        )
                    )
                    + "\n"
                )
            for key, value in result.summary.items():
                handle.write(f"# {key}={_fmt(value)}\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path) -> ExperimentResult:
    """Read back a CSV produced by :func:`emit_csv`."""
    rows: list[ResultRow] = []
    summary: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != _CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                summary[key] = value
                continue
            parts = line.split(",")
            rows.append(
                ResultRow(
                    int(parts[0]), float(parts[1]), int(parts[2]), parts[3],
                    int(parts[4]), float(parts[5]), float(parts[6]),
                    float(parts[7]), float(parts[8]),
                )
            )
    return ExperimentResult(rows, summary)
