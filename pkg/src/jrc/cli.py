"""Command-line entry point: ``jrc solve | classify | benchmark | export-trace``."""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import baselines
from .classifier import classify, robust_classify
from .dataset import (
    assemble_dictionary,
    downsample,
    load_image_dir,
    make_synthetic,
    split,
    vectorize,
)
from .matrix_io import read_matrix_csv, read_trace_json, write_matrix_csv, write_trace_json
from .matrixcore import NumericalBreakdown, ShapeError
from .solver import SolverConfig, iqm_solve

RESULTS_SCHEMA = "jrc.results/1"
DEFAULT_QP = ["2,2", "2,1", "1.5,1", "1.5,0.5", "1,1", "1,0.5"]
DEFAULT_LAMBDAS = "0.01,0.1,1,10"


class CLIError(Exception):
    pass


def _add_solver_flags(p):
    g = p.add_argument_group("solver")
    g.add_argument("--q", type=float, default=2.0)
    g.add_argument("--p", type=float, default=1.0)
    g.add_argument("--lambda", dest="lam", type=float, default=0.1)
    g.add_argument("--eps-outer", type=float, default=1e-3)
    g.add_argument("--eps-inner", type=float, default=1e-3)
    g.add_argument("--delta", type=float, default=1e-8)
    g.add_argument("--max-outer", type=int, default=100)
    g.add_argument("--max-inner", type=int, default=200)
    g.add_argument("--mode", choices=["exact", "bb"], default="bb")
    g.add_argument("--bb-formula", choices=["45", "45prime"], default="45")
    g.add_argument("--inner-stop", choices=["reduction", "b_scaled"], default="reduction")
    g.add_argument("--init", choices=["ridge", "zeros"], default="ridge")


def _add_data_flags(p):
    g = p.add_argument_group("data")
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", help="image directory (class subdirectories or manifest.tsv)")
    src.add_argument("--synthetic", action="store_true", help="use the built-in synthetic generator")
    g.add_argument("--format", choices=["pgm", "flat"], default="pgm")
    g.add_argument("--shape", help="HxW of flat binary images")
    g.add_argument("--synthetic-classes", type=int, default=5)
    g.add_argument("--synthetic-per-class", type=int, default=10)
    g.add_argument("--synthetic-shape", default="12x10")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--train-fraction", type=float, default=0.8)
    g.add_argument("--downsample", help="ratio such as 1/8, or target HxW such as 11x10")
    g.add_argument("--normalize-columns", choices=["on", "off"], default="on")


def _dims(text):
    try:
        h, w = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise CLIError(f"expected HxW, got {text!r}") from None
    return h, w


def _config(args, **override):
    kw = dict(q=args.q, p=args.p, lam=args.lam, eps_outer=args.eps_outer,
              eps_inner=args.eps_inner, delta=args.delta, max_outer=args.max_outer,
              max_inner=args.max_inner, mode=args.mode, bb_formula=args.bb_formula,
              inner_stop=args.inner_stop, init=args.init)
    kw.update(override)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise CLIError(str(exc)) from None


def _load_experiment(args):
    if args.synthetic:
        ds = make_synthetic(n_classes=args.synthetic_classes, per_class=args.synthetic_per_class,
                            shape=_dims(args.synthetic_shape), seed=args.seed)
    else:
        shape = _dims(args.shape) if args.shape else None
        ds = load_image_dir(args.dataset, format=args.format, shape=shape)
    if args.downsample:
        text = args.downsample
        if "x" in text.lower():
            target = _dims(text)
            ds = ds.map(lambda img: downsample(img, shape=target))
        else:
            ratio = float(Fraction(text))
            ds = ds.map(lambda img: downsample(img, ratio=ratio))
    train, test = split(ds, args.train_fraction, args.seed)
    D = assemble_dictionary(train)
    return D, vectorize(test.images), list(test.labels)


def cmd_solve(args):
    A = read_matrix_csv(args.A)
    Y = read_matrix_csv(args.Y)
    if A.shape[0] != Y.shape[0]:
        raise CLIError(f"{args.Y}: has {Y.shape[0]} rows; expected shape ({A.shape[0]}, n) "
                       f"to match {args.A} of shape {A.shape}")
    cfg = _config(args)
    X, trace = iqm_solve(A, Y, cfg)
    write_matrix_csv(args.out_x, X)
    write_trace_json(args.out_trace, trace)
    status = "converged" if trace.converged else "NOT converged"
    print(f"{status} after {trace.iterations} outer iterations, J = {trace.objectives[-1] if trace.records else 0.0:.6g}")
    return 0


def _results_doc(args, D, labels, true, residuals, trace, accuracy):
    return {
        "schema": RESULTS_SCHEMA,
        "config": {"q": args.q, "p": args.p, "lambda": args.lam, "mode": args.mode,
                   "robust": bool(args.robust), "seed": args.seed,
                   "train_fraction": args.train_fraction},
        "class_labels": list(D.labels),
        "accuracy": accuracy,
        "converged": trace.converged,
        "iterations": trace.iterations,
        "queries": [
            {"index": j, "predicted": labels[j], "true": true[j],
             "residuals": [float(v) for v in residuals[:, j]]}
            for j in range(len(true))
        ],
    }


def cmd_classify(args):
    D, Y, true = _load_experiment(args)
    cfg = _config(args)
    normalize = args.normalize_columns == "on"
    t0 = time.perf_counter()
    if args.robust:
        result, E = robust_classify(D, Y, cfg, normalize=normalize)
    else:
        result, E = classify(D, Y, cfg, normalize=normalize), None
    elapsed = time.perf_counter() - t0
    acc = result.accuracy(true)
    doc = _results_doc(args, D, result.labels, true, result.residuals, result.trace, acc)
    with open(args.output, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if E is not None:
        err_path = args.error_output or os.path.splitext(args.output)[0] + "_E.csv"
        write_matrix_csv(err_path, E)
    print(f"accuracy {100 * acc:.2f}% on {len(true)} queries, {elapsed:.3f} s")
    return 0


def _jrc_cell(D, Y, true, cfg, normalize):
    t0 = time.thread_time()
    try:
        res = classify(D, Y, cfg, normalize=normalize)
    except (NumericalBreakdown, ValueError) as exc:
        return {"accuracy": None, "cpu": time.thread_time() - t0, "status": f"failed: {exc}"}
    status = "ok" if res.converged else "not_converged"
    return {"accuracy": res.accuracy(true), "cpu": time.thread_time() - t0, "status": status}


def _baseline_cell(fn, D, Y, true, lam, normalize):
    t0 = time.thread_time()
    try:
        labels, _ = fn(D, Y, lam, normalize=normalize)
    except (NumericalBreakdown, ValueError) as exc:
        return {"accuracy": None, "cpu": time.thread_time() - t0, "status": f"failed: {exc}"}
    acc = float(np.mean([a == b for a, b in zip(labels, true)]))
    return {"accuracy": acc, "cpu": time.thread_time() - t0, "status": "ok"}


def _parse_pairs(items):
    pairs = []
    for text in items:
        try:
            q, p = (float(v) for v in text.split(","))
        except ValueError:
            raise CLIError(f"--qp expects 'q,p', got {text!r}") from None
        pairs.append((q, p))
    return pairs


def _fmt(v):
    return f"{v:g}"


def cmd_benchmark(args):
    D, Y, true = _load_experiment(args)
    normalize = args.normalize_columns == "on"
    lambdas = [float(v) for v in args.lambdas.split(",") if v.strip()]
    pairs = _parse_pairs(args.qp or DEFAULT_QP)
    names = [b.strip().lower() for b in args.baselines.split(",") if b.strip()]
    known = {"src": baselines.src_classify, "crc": baselines.crc_classify}
    for b in names:
        if b not in known:
            raise CLIError(f"unknown baseline {b!r}; choose from src, crc")

    jobs = {}
    for q, p in pairs:
        for lam in lambdas:
            jobs[("JRC", q, p, lam)] = (_jrc_cell, (D, Y, true, _config(args, q=q, p=p, lam=lam), normalize))
    for b in names:
        for lam in lambdas:
            jobs[(b.upper(), None, None, lam)] = (_baseline_cell, (known[b], D, Y, true, lam, normalize))

    workers = max(1, int(os.environ.get("JRC_THREADS", "1")))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {key: pool.submit(fn, *fargs) for key, (fn, fargs) in jobs.items()}
        cells = {key: fut.result() for key, fut in futures.items()}

    rows = []
    schemes = [("JRC", q, p) for q, p in pairs] + [(b.upper(), None, None) for b in names]
    for method, q, p in schemes:
        per = [cells[(method, q, p, lam)] for lam in lambdas]
        done = [(c["accuracy"], -i) for i, c in enumerate(per) if c["accuracy"] is not None]
        row = {"method": "CRC-RLS" if method == "CRC" else method,
               "q": "" if q is None else _fmt(q), "p": "" if p is None else _fmt(p)}
        if done:
            _, neg_i = max(done)
            best = per[-neg_i]
            row.update(best_lambda=_fmt(lambdas[-neg_i]), accuracy=f"{100 * best['accuracy']:.2f}",
                       cpu_time=f"{best['cpu']:.4f}")
        else:
            row.update(best_lambda="", accuracy="", cpu_time="")
        failed = [c["status"] for c in per if c["status"] != "ok"]
        row["status"] = "ok" if not failed else ";".join(sorted(set(failed)))
        for lam, c in zip(lambdas, per):
            row[f"acc@{_fmt(lam)}"] = "" if c["accuracy"] is None else f"{100 * c['accuracy']:.2f}"
        rows.append(row)

    fields = ["method", "q", "p", "best_lambda", "accuracy", "cpu_time", "status"] + \
        [f"acc@{_fmt(lam)}" for lam in lambdas]
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        label = row["method"] if not row["q"] else f"JRC(q={row['q']},p={row['p']})"
        print(f"{label:<20} {row['accuracy']:>7}  {row['cpu_time']:>9}  lambda={row['best_lambda']}")
    return 0


def cmd_export_trace(args):
    doc = read_trace_json(args.trace)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "J", "rho", "log10_rho", "inner_steps", "elapsed_ms"])
        for k, (J, rho, steps, ms) in enumerate(
                zip(doc["J"], doc["rho"], doc["inner_steps"], doc["elapsed_ms"]), start=1):
            log_rho = repr(float(np.log10(rho))) if rho > 0 else ""
            writer.writerow([k, repr(J), repr(rho), log_rho, steps, repr(ms)])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="jrc", description="Joint representation classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the mixed-norm coding problem for CSV matrices")
    p.add_argument("A", help="dictionary CSV (m x d)")
    p.add_argument("Y", help="query CSV (m x n)")
    p.add_argument("--out-x", default="X.csv")
    p.add_argument("--out-trace", default="trace.json")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("classify", help="split, code and classify an image collection")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--robust", action="store_true", help="code with an explicit corruption term")
    p.add_argument("--output", default="results.json")
    p.add_argument("--error-output", help="CSV path for the recovered corruption (robust mode)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("benchmark", help="accuracy and CPU time over a (q, p) x lambda grid")
    _add_data_flags(p)
    _add_solver_flags(p)
    p.add_argument("--qp", action="append", help="q,p pair (repeatable); default: six standard pairs")
    p.add_argument("--lambdas", default=DEFAULT_LAMBDAS)
    p.add_argument("--baselines", default="src,crc", help="comma list from src, crc; empty for none")
    p.add_argument("--output", default="benchmark.csv")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("export-trace", help="flatten a trace JSON into a per-iteration CSV")
    p.add_argument("trace")
    p.add_argument("--output", default="trace.csv")
    p.set_defaults(func=cmd_export_trace)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, ShapeError, ValueError, FileNotFoundError, NumericalBreakdown) as exc:
        print(f"jrc {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
