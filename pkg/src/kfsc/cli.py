"""Command-line front end: fit, predict, synth, eval, and bench.

Exit codes: 0 success, 2 invalid flags, 3 data errors, 4 solver errors.
Diagnostics go to stderr; results go to files only.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import io as kio
from .exceptions import (
    HeaderMismatchError,
    InvalidConfigError,
    InvalidParamsError,
    KFSCError,
    ParseError,
    ShapeMismatchError,
    ZeroColumnError,
    EmptyColumnObservationError,
    EmptyClusterError,
    LengthMismatchError,
)
from .metrics import clustering_accuracy, kpc_fit, nmi
from .ops import assign_by_residual, normalize_columns
from .initialization import spherical_kmeans
from .solver import fit
from .synth import SynthConfig, generate
from .types import DataMatrix, HyperParams
from .variants import (
    LandmarkParams,
    MiniBatchParams,
    RobustParams,
    fit_landmark,
    fit_minibatch,
    fit_missing,
    fit_robust_sparse,
)

_DATA_ERRORS = (
    OSError,
    ParseError,
    HeaderMismatchError,
    ShapeMismatchError,
    ZeroColumnError,
    EmptyColumnObservationError,
    EmptyClusterError,
    LengthMismatchError,
    InvalidConfigError,
)

_FORMATS = ("csv-rows", "csv-cols", "binary")


def _fail(code: int, message: str) -> int:
    print(f"kfsc: error: {message}", file=sys.stderr)
    return code


def _parse_lambda(text: str):
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise InvalidParamsError(f"--lambda must be a number or 'auto', got {text!r}")
    if value <= 0:
        raise InvalidParamsError("--lambda must be positive")
    return value


def _hyper_params(args) -> HyperParams:
    return HyperParams(
        k=args.k,
        d=args.d,
        lam=_parse_lambda(args.lam),
        max_iters=args.max_iters,
        tol=args.tol,
        ridge_small=args.ridge,
        c_solver=args.solver,
        init=args.init,
        seed=args.seed,
    )


def _run_variant(data: DataMatrix, args):
    """Dispatch to the requested fit variant; returns (result, notes)."""
    params = _hyper_params(args)
    notes = []
    if args.variant == "missing" and data.mask is None:
        notes.append("mask all-ones, reduces to batch")
        data = DataMatrix(data.values, mask=np.ones_like(data.values))
    if args.variant != "missing" and data.mask is not None:
        notes.append("masked entries zero-filled for the unmasked variant")
        data = DataMatrix(data.values * data.mask)
    if args.variant == "batch":
        return fit(data, params), notes
    if args.variant == "minibatch":
        mb = MiniBatchParams(
            batch_size=args.batch_size,
            c_passes=args.tc,
            d_steps=args.td,
            epochs=args.epochs,
            shuffle_seed=args.shuffle_seed,
        )
        return fit_minibatch(data, params, mb), notes
    if args.variant == "landmark":
        lm = LandmarkParams(landmark_count=args.landmarks, seed=args.seed)
        return fit_landmark(data, params, lm), notes
    if args.variant == "robust-sparse":
        rp = RobustParams(noise_weight=args.noise_weight, noise_norm=args.noise_norm)
        result, _ = fit_robust_sparse(data, params, rp)
        return result, notes
    if args.variant == "missing":
        result, _ = fit_missing(data, params)
        return result, notes
    raise InvalidParamsError(f"unknown variant {args.variant!r}")


def _write_report(path: str, args, result, notes, total_seconds, truth=None):
    report = {
        "config": {
            key: value
            for key, value in sorted(vars(args).items())
            if key != "func" and not key.startswith("_")
        },
        "n": int(result.labels.size),
        "lambda": result.lam,
        "label_rule": result.label_rule,
        "iterations": len(result.seconds_per_iter),
        "objective_trace": [float(v) for v in result.state.objective_trace],
        "rel_change_trace": [[float(a), float(b)] for a, b in result.state.rel_change_trace],
        "seconds_per_iter": [float(s) for s in result.seconds_per_iter],
        "total_seconds": total_seconds,
        "peak_elements": int(result.peak_elements),
        "labels_path": getattr(args, "out_labels", None),
        "notes": notes,
    }
    if truth is not None:
        report["acc"] = clustering_accuracy(result.labels, truth)
        report["nmi"] = nmi(result.labels, truth)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_fit(args) -> int:
    if args.k < 1 or args.d < 1:
        return _fail(2, "--k and --d must be positive integers")
    try:
        params_check = _hyper_params(args)
        params_check.validate()
    except (InvalidParamsError, KFSCError) as exc:
        return _fail(2, str(exc))
    try:
        data = kio.load_matrix(args.data, args.format)
        truth = kio.read_labels(args.truth) if args.truth else None
    except _DATA_ERRORS as exc:
        return _fail(3, str(exc))
    try:
        tic = time.perf_counter()
        result, notes = _run_variant(data, args)
        total = time.perf_counter() - tic
    except InvalidParamsError as exc:
        return _fail(2, str(exc))
    except _DATA_ERRORS as exc:
        return _fail(3, str(exc))
    except KFSCError as exc:
        return _fail(4, str(exc))
    try:
        if args.out_labels:
            kio.write_labels(args.out_labels, result.labels)
        if args.out_model:
            kio.save_model(args.out_model, result.dictionary, result.lam, args.ridge)
        if args.out_report:
            _write_report(args.out_report, args, result, notes, total, truth)
    except OSError as exc:
        return _fail(3, str(exc))
    return 0


def cmd_predict(args) -> int:
    try:
        dictionary, _, ridge = kio.load_model(args.model)
        data = kio.load_matrix(args.data, args.format)
    except _DATA_ERRORS as exc:
        return _fail(3, str(exc))
    if data.m != dictionary.m:
        return _fail(
            3, f"model expects {dictionary.m} features but data has {data.m}"
        )
    try:
        if data.mask is not None:
            data = DataMatrix(data.values * data.mask)
        normalized = normalize_columns(data)
        labels = assign_by_residual(normalized, dictionary, ridge)
        kio.write_labels(args.out_labels, labels)
    except _DATA_ERRORS as exc:
        return _fail(3, str(exc))
    except KFSCError as exc:
        return _fail(4, str(exc))
    return 0


def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(
            k=args.k,
            ambient_dim=args.m,
            subspace_dim=args.d0,
            per_cluster=args.n0,
            similarity=args.alpha,
            noise_level=args.noise,
            sparse_density=args.sparse_density,
            missing_rate=args.missing_rate,
            seed=args.seed,
        )
        data, labels, _ = generate(cfg)
    except InvalidConfigError as exc:
        return _fail(2, str(exc))
    try:
        kio.save_matrix(data, args.out_data, args.format)
        kio.write_labels(args.out_labels, labels)
    except OSError as exc:
        return _fail(3, str(exc))
    return 0


def cmd_eval(args) -> int:
    try:
        pred = kio.read_labels(args.pred)
        truth = kio.read_labels(args.truth)
        metrics = {
            "acc": clustering_accuracy(pred, truth),
            "nmi": nmi(pred, truth),
            "n": int(pred.size),
        }
    except _DATA_ERRORS as exc:
        return _fail(3, str(exc))
    except KFSCError as exc:
        return _fail(2, str(exc))
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(metrics, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        return _fail(3, str(exc))
    return 0


def _bench_cell(args, sweep: str, value: float, seed: int):
    """Run one benchmark cell; returns (acc, nmi, seconds)."""
    cfg = SynthConfig(
        k=args.k,
        ambient_dim=args.m,
        subspace_dim=args.d0,
        per_cluster=args.n0 if sweep != "n" else max(int(value) // args.k, 1),
        similarity=args.alpha,
        noise_level=value if sweep == "noise" else args.noise,
        sparse_density=value if sweep == "sparse" else args.sparse_density,
        missing_rate=value if sweep == "missing" else args.missing_rate,
        seed=seed,
    )
    data, truth, _ = generate(cfg)
    d = int(value) if sweep == "d" else args.d
    params = HyperParams(k=args.k, d=d, seed=seed, init=args.init)
    tic = time.perf_counter()
    if args.algo == "kmeans":
        labels, _ = spherical_kmeans(
            normalize_columns(DataMatrix(data.observed_values())), args.k, seed=seed
        )
    elif args.algo == "kpc":
        labels = kpc_fit(
            normalize_columns(DataMatrix(data.observed_values())),
            args.k,
            min(args.d0, args.m - 1) if sweep != "d" else min(d, args.m - 1),
            seed=seed,
        )
    else:
        if sweep == "lambda":
            # values are multipliers of the automatically estimated weight
            from .initialization import init_dictionary_kmeans
            from .ops import estimate_lambda

            base = normalize_columns(DataMatrix(data.observed_values()))
            d0_dict = init_dictionary_kmeans(base, args.k, d, seed=seed)
            params.lam = float(value) * estimate_lambda(base, d0_dict)
        if args.variant == "missing" and data.mask is not None:
            result, _ = fit_missing(data, params)
        elif args.variant == "robust-sparse":
            rp = RobustParams(noise_weight=args.noise_weight, noise_norm=args.noise_norm)
            plain = DataMatrix(data.observed_values())
            result, _ = fit_robust_sparse(plain, params, rp)
        elif args.variant == "landmark":
            lm = LandmarkParams(landmark_count=args.landmarks, seed=seed)
            result = fit_landmark(DataMatrix(data.observed_values()), params, lm)
        elif args.variant == "minibatch":
            mb = MiniBatchParams(
                batch_size=args.batch_size,
                c_passes=args.tc,
                d_steps=args.td,
                epochs=args.epochs,
            )
            result = fit_minibatch(DataMatrix(data.observed_values()), params, mb)
        else:
            result = fit(DataMatrix(data.observed_values()), params)
        labels = result.labels
    seconds = time.perf_counter() - tic
    return clustering_accuracy(labels, truth), nmi(labels, truth), seconds


def cmd_bench(args) -> int:
    try:
        values = [float(v) for v in args.values.split(",") if v != ""]
    except ValueError:
        return _fail(2, f"--values must be a comma-separated number list, got {args.values!r}")
    if not values or args.seeds < 1:
        return _fail(2, "--values must be non-empty and --seeds positive")
    try:
        fh = open(args.out, "w", encoding="utf-8", newline="")
    except OSError as exc:
        return _fail(3, str(exc))
    with fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "seed", "acc", "nmi", "seconds"])
        fh.flush()
        for value in values:
            for seed in range(args.seed, args.seed + args.seeds):
                try:
                    acc, mi, seconds = _bench_cell(args, args.sweep, value, seed)
                except InvalidParamsError as exc:
                    return _fail(2, str(exc))
                except _DATA_ERRORS as exc:
                    return _fail(3, str(exc))
                except KFSCError as exc:
                    return _fail(4, str(exc))
                writer.writerow(
                    [value, seed, f"{acc:.6f}", f"{mi:.6f}", f"{seconds:.6f}"]
                )
                fh.flush()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kfsc",
        description="Subspace clustering by direct group-sparse factorization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="cluster a data file")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--format", choices=_FORMATS, default="csv-rows")
    p_fit.add_argument("--k", type=int, required=True)
    p_fit.add_argument("--d", type=int, required=True)
    p_fit.add_argument("--lambda", dest="lam", default="auto",
                       help="group-sparsity weight, or 'auto'")
    p_fit.add_argument(
        "--variant",
        choices=("batch", "minibatch", "landmark", "robust-sparse", "missing"),
        default="batch",
    )
    p_fit.add_argument("--solver", choices=("gauss-seidel", "jacobi"),
                       default="gauss-seidel")
    p_fit.add_argument("--init", choices=("random", "kmeans"), default="kmeans")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--max-iters", type=int, default=200)
    p_fit.add_argument("--tol", type=float, default=1e-4)
    p_fit.add_argument("--ridge", type=float, default=1e-5)
    p_fit.add_argument("--batch-size", type=int, default=50)
    p_fit.add_argument("--epochs", type=int, default=1)
    p_fit.add_argument("--tc", type=int, default=5, help="code sweeps per batch")
    p_fit.add_argument("--td", type=int, default=5, help="dictionary steps per batch")
    p_fit.add_argument("--shuffle-seed", type=int, default=None)
    p_fit.add_argument("--landmarks", type=int, default=100)
    p_fit.add_argument("--noise-weight", type=float, default=0.15)
    p_fit.add_argument("--noise-norm", choices=("l1", "l21"), default="l1")
    p_fit.add_argument("--truth", default=None,
                       help="optional true-label file for report metrics")
    p_fit.add_argument("--out-model", default=None)
    p_fit.add_argument("--out-labels", default=None)
    p_fit.add_argument("--out-report", default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_pred = sub.add_parser("predict", help="label a data file with a saved model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--format", choices=_FORMATS, default="csv-rows")
    p_pred.add_argument("--out-labels", required=True)
    p_pred.set_defaults(func=cmd_predict)

    p_synth = sub.add_parser("synth", help="generate a synthetic benchmark instance")
    p_synth.add_argument("--k", type=int, default=5)
    p_synth.add_argument("--m", type=int, default=25)
    p_synth.add_argument("--d0", type=int, default=5)
    p_synth.add_argument("--n0", type=int, default=50)
    p_synth.add_argument("--alpha", type=float, default=1.0)
    p_synth.add_argument("--noise", type=float, default=0.0)
    p_synth.add_argument("--sparse-density", type=float, default=0.0)
    p_synth.add_argument("--missing-rate", type=float, default=0.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--format", choices=_FORMATS, default="binary")
    p_synth.add_argument("--out-data", required=True)
    p_synth.add_argument("--out-labels", required=True)
    p_synth.set_defaults(func=cmd_synth)

    p_eval = sub.add_parser("eval", help="score a label file against ground truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="sweep a parameter grid over seeds")
    p_bench.add_argument(
        "--sweep",
        choices=("noise", "d", "lambda", "sparse", "missing", "n"),
        required=True,
    )
    p_bench.add_argument("--values", required=True,
                         help="comma-separated sweep values; for 'lambda' these "
                              "multiply the auto-estimated weight")
    p_bench.add_argument("--seeds", type=int, default=10)
    p_bench.add_argument("--seed", type=int, default=0, help="first seed of the range")
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--algo", choices=("kfsc", "kpc", "kmeans"), default="kfsc")
    p_bench.add_argument(
        "--variant",
        choices=("batch", "minibatch", "landmark", "robust-sparse", "missing"),
        default="batch",
    )
    p_bench.add_argument("--k", type=int, default=5)
    p_bench.add_argument("--m", type=int, default=25)
    p_bench.add_argument("--d0", type=int, default=5)
    p_bench.add_argument("--n0", type=int, default=50)
    p_bench.add_argument("--alpha", type=float, default=1.0)
    p_bench.add_argument("--noise", type=float, default=0.0)
    p_bench.add_argument("--sparse-density", type=float, default=0.0)
    p_bench.add_argument("--missing-rate", type=float, default=0.0)
    p_bench.add_argument("--d", type=int, default=10)
    p_bench.add_argument("--init", choices=("random", "kmeans"), default="kmeans")
    p_bench.add_argument("--batch-size", type=int, default=50)
    p_bench.add_argument("--epochs", type=int, default=1)
    p_bench.add_argument("--tc", type=int, default=5)
    p_bench.add_argument("--td", type=int, default=5)
    p_bench.add_argument("--landmarks", type=int, default=100)
    p_bench.add_argument("--noise-weight", type=float, default=0.15)
    p_bench.add_argument("--noise-norm", choices=("l1", "l21"), default="l1")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    return args.func(args)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
