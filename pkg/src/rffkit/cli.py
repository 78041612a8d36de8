"""Command-line front end.

Subcommands: ``simulate`` (convergence experiment), ``benchmark`` (scheme
comparison on a dataset), ``pipeline`` (two-stage approximate-leverage run),
and ``diagnose`` (leverage/dof/concentration report).  A flat key=value file
can seed any option via ``--config``; explicit flags win.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
BLAS pools are limited to one thread so output bytes do not depend on the
``--threads`` setting.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .data import SplineSimConfig, Task, parse_sparse_dataset
from .errors import DataFormatError, NumericalError
from .estimators import LossKind
from .experiments import (
    ExperimentConfig,
    LambdaRule,
    SRule,
    emit_csv,
    run_pipeline,
    run_benchmark,
    run_convergence,
    run_diagnose,
)
from .features import SamplingScheme
from .kernels import FeatureStyle, KernelSpec, gaussian_kernel, spline_kernel


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; we want 1
        raise UsageError(message)


_SCHEMES = {s.value: s for s in SamplingScheme}
_LOSSES = {l.value: l for l in LossKind}
_STYLES = {s.value: s for s in FeatureStyle}


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok)


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# option name -> (parser, default); None parser means store_true
_OPTIONS: dict[str, tuple[object, object]] = {
    "kernel": (str, "gaussian"),
    "gamma": (float, 1.0),
    "order": (int, 2),
    "half_order": (int, 1),
    "truncation": (int, 5000),
    "feature_style": (str, FeatureStyle.COS_PLUS_SIN.value),
    "scheme": (str, SamplingScheme.PLAIN.value),
    "n_grid": (_ints, (128, 256, 512, 1024, 2048, 4096)),
    "lambda_rule": (str, LambdaRule.INV_SQRT_N),
    "lambda_const": (float, 1.0),
    "lambda_star_const": (float, None),
    "s_rule": (str, SRule.DOF_PROPORTIONAL),
    "s_factor": (float, 4.0),
    "s_const": (_ints, (100,)),
    "reps": (int, 10),
    "seed": (int, 0),
    "loss": (str, None),
    "data": (str, None),
    "out": (str, None),
    "config": (str, None),
    "top_l": (None, False),
    "subsample": (int, None),
    "threads": (int, 1),
    "x0": (float, 0.5),
    "sigma": (float, 0.3),
    "delta": (float, 0.1),
    "pool_factor": (float, 4.0),
    "eval_points": (int, 10_000),
    "split": (float, 0.3),
    "no_standardize": (None, False),
    "timings": (None, False),
    "cv_folds": (int, 5),
    "lambda_grid": (_floats, tuple(np.logspace(-6, 0, 7))),
    "gamma_grid": (_floats, tuple(np.logspace(-4, 4, 5, base=2.0))),
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="rffkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "benchmark", "pipeline", "diagnose"):
        p = sub.add_parser(name)
        for opt, (conv, _) in _OPTIONS.items():
            flag = "--" + opt.replace("_", "-")
            if conv is None:
                p.add_argument(flag, dest=opt, action="store_const", const=True, default=None)
            else:
                p.add_argument(flag, dest=opt, type=str, default=None)
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                key, sep, value = stripped.partition("=")
                if not sep:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    unknown = set(values) - set(_OPTIONS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return values


def _resolve(args: argparse.Namespace, file_values: dict[str, str]) -> dict[str, object]:
    resolved: dict[str, object] = {}
    for opt, (conv, default) in _OPTIONS.items():
        cli_value = getattr(args, opt, None)
        if cli_value is not None:
            resolved[opt] = cli_value if conv is None else conv(cli_value)
        elif opt in file_values:
            resolved[opt] = _bool(file_values[opt]) if conv is None else conv(file_values[opt])
        else:
            resolved[opt] = default
    return resolved


def _kernel_from(opts: dict[str, object], dim: int) -> KernelSpec:
    kind = str(opts["kernel"]).lower()
    if kind == "gaussian":
        style = _STYLES.get(str(opts["feature_style"]))
        if style is None:
            raise UsageError(f"unknown feature style {opts['feature_style']!r}")
        return gaussian_kernel(float(opts["gamma"]), dim=dim, feature_style=style)
    if kind == "spline":
        return spline_kernel(int(opts["order"]), int(opts["truncation"]))
    raise UsageError(f"unknown kernel {opts['kernel']!r}")


def _sim_from(opts: dict[str, object]) -> SplineSimConfig:
    return SplineSimConfig(
        t=int(opts["order"]),
        r=int(opts["half_order"]),
        x0=float(opts["x0"]),
        sigma=float(opts["sigma"]),
        n=int(opts["n_grid"][0]),
        truncation=int(opts["truncation"]),
    )


def _experiment_config(opts: dict[str, object], kernel, sim, loss) -> ExperimentConfig:
    scheme = _SCHEMES.get(str(opts["scheme"]))
    if scheme is None:
        raise UsageError(f"unknown scheme {opts['scheme']!r}")
    if opts["lambda_rule"] not in LambdaRule.ALL:
        raise UsageError(f"unknown lambda rule {opts['lambda_rule']!r}")
    if opts["s_rule"] not in SRule.ALL:
        raise UsageError(f"unknown s rule {opts['s_rule']!r}")
    return ExperimentConfig(
        kernel=kernel,
        scheme=scheme,
        n_grid=tuple(opts["n_grid"]),
        lambda_rule=str(opts["lambda_rule"]),
        lambda_const=float(opts["lambda_const"]),
        lambda_star_const=opts["lambda_star_const"],
        s_rule=str(opts["s_rule"]),
        s_factor=float(opts["s_factor"]),
        s_sweep=tuple(opts["s_const"]),
        repetitions=int(opts["reps"]),
        seed=int(opts["seed"]),
        loss=loss,
        sim=sim,
        delta=float(opts["delta"]),
        pool_factor=float(opts["pool_factor"]),
        eval_points=int(opts["eval_points"]),
        test_fraction=float(opts["split"]),
        standardize=not bool(opts["no_standardize"]),
        cv_folds=int(opts["cv_folds"]),
        lambda_grid=tuple(opts["lambda_grid"]),
        gamma_grid=tuple(opts["gamma_grid"]),
        threads=int(opts["threads"]),
        top_l=bool(opts["top_l"]),
        subsample=opts["subsample"],
        timings=bool(opts["timings"]),
    )


def _load_dataset(opts: dict[str, object], loss_text):
    path = opts["data"]
    if path is None:
        return None
    task = None
    if loss_text is not None:
        task = Task.REGRESSION if loss_text == "squared" else Task.CLASSIFICATION
    return parse_sparse_dataset(str(path), task=task)


def _dispatch(command: str, opts: dict[str, object]) -> int:
    loss_text = opts["loss"]
    if loss_text is not None and loss_text not in _LOSSES:
        raise UsageError(f"unknown loss {loss_text!r}")

    if command == "simulate":
        if opts["out"] is None:
            raise UsageError("simulate requires --out")
        sim = _sim_from(opts)
        config = _experiment_config(opts, None, sim, LossKind.SQUARED)
        result = run_convergence(config)
        emit_csv(result, opts["out"])
        print(f"simulate: slope={result.summary['slope']:.4f} rows={len(result.rows)}")
        return 0

    dataset = _load_dataset(opts, loss_text)
    if command in ("benchmark", "pipeline") and dataset is None:
        raise UsageError(f"{command} requires --data")
    if dataset is not None:
        loss = (
            _LOSSES[loss_text]
            if loss_text is not None
            else (LossKind.SQUARED if dataset.task is Task.REGRESSION else LossKind.HINGE)
        )
        kernel = _kernel_from(opts, dataset.dim)
    else:
        loss = LossKind.SQUARED if loss_text is None else _LOSSES[loss_text]
        kernel = None

    sim = _sim_from(opts) if dataset is None else None
    config = _experiment_config(opts, kernel, sim, loss)

    if command == "benchmark":
        if opts["out"] is None:
            raise UsageError("benchmark requires --out")
        result = run_benchmark(config, dataset)
        emit_csv(result, opts["out"])
        print(f"benchmark: rows={len(result.rows)}")
        return 0
    if command == "pipeline":
        if opts["out"] is None:
            raise UsageError("pipeline requires --out")
        result = run_pipeline(config, dataset)
        emit_csv(result, opts["out"])
        print(
            "pipeline: compression=%.3f ratio=%.3f"
            % (result.summary["mean_compression"], result.summary["test_ratio"])
        )
        return 0
    if command == "diagnose":
        metrics = run_diagnose(config, dataset)
        lines = ["metric,value"] + [
            f"{key},{value:.17g}" if isinstance(value, float) else f"{key},{value}"
            for key, value in metrics
        ]
        text = "\n".join(lines) + "\n"
        if opts["out"] is not None:
            with open(str(opts["out"]), "w", encoding="utf-8", newline="") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
        return 0
    raise UsageError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
        opts = _resolve(args, file_values)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            return _dispatch(args.command, opts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
