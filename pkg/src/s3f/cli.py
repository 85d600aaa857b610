"""Command-line pipeline: fit, generate, evaluate, bench, sensitivity.

One JSON config file is the source of truth; CLI flags override file values,
which override built-in defaults. Every command writes a run.json with the
fully resolved config next to its outputs. Exit codes: 0 success, 2 argument
error, 3 data error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import json
import os
import sys

import numpy as np

from .exceptions import ArgumentError, S3FError
from .flow import DEFAULT_GBT_PARAMS, load_bank, save_bank
from .generate import DEFAULT_PERTURBATIONS, GenerationRequest, generate, run_sensitivity
from .metrics import REPORT_COLUMNS, MetricsReport, full_report
from .solver import SolverConfig, TimeGrid
from .synthesizer import FlowSynthesizer
from .tabular import load_csv, read_csv_as, split, write_csv

DEFAULT_BENCH_METHODS = ("ff-euler", "cs3f-euler", "cs3f-rk4", "hs3f-euler", "hs3f-rk4")
SENSITIVITY_METHODS = ("ff-euler", "cs3f-rk4", "hs3f-rk4")

DEFAULT_CONFIG = {
    "data": None,
    "schema_override": None,
    "categorical_threshold": 20,
    "split": {"test_fraction": 0.2, "seed": 0, "stratify": True},
    "plan": {
        "method": "hs3f",
        "duplication": 100,
        "n_levels": 50,
        "feature_order": None,
        "conditioning": "auto",
        "seed": 0,
    },
    "solver": "euler",
    "gbt": dict(DEFAULT_GBT_PARAMS),
    "generation": {"n_samples": None, "seed": 0, "init_mu": 0.0, "init_sigma": 1.0},
    "metrics": {"k": 5, "ot_max_points": 1000, "seed": 0},
    "bench_methods": list(DEFAULT_BENCH_METHODS),
    "workers": None,
    "out": "runs",
}


def _deep_merge(base, extra):
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if key not in out:
            raise ArgumentError(f"unknown config key {key!r}")
        if isinstance(out[key], dict) and isinstance(value, dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve_config(args):
    config = copy.deepcopy(DEFAULT_CONFIG)
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_config = json.load(fh)
        except FileNotFoundError as exc:
            raise ArgumentError(f"config file not found: {args.config}") from exc
        except json.JSONDecodeError as exc:
            raise ArgumentError(f"config file is not valid JSON: {exc}") from exc
        config = _deep_merge(config, file_config)
    if getattr(args, "data", None):
        config["data"] = args.data
    if getattr(args, "method", None):
        config["plan"]["method"] = args.method
    if getattr(args, "solver", None):
        config["solver"] = args.solver
    if getattr(args, "seed", None) is not None:
        config["plan"]["seed"] = args.seed
        config["generation"]["seed"] = args.seed
    if getattr(args, "n_samples", None) is not None:
        config["generation"]["n_samples"] = args.n_samples
    if getattr(args, "init_mu", None) is not None:
        config["generation"]["init_mu"] = args.init_mu
    if getattr(args, "init_sigma", None) is not None:
        config["generation"]["init_sigma"] = args.init_sigma
    if getattr(args, "out", None):
        config["out"] = args.out
    return config


def _write_run_record(config, command, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
        json.dump({"command": command, "config": config}, fh, indent=1, sort_keys=True)


def _load_and_split(config):
    if not config["data"]:
        raise ArgumentError("no data file configured (--data or config.data)")
    table = load_csv(
        config["data"],
        schema_override=config["schema_override"],
        categorical_threshold=config["categorical_threshold"],
    )
    sp = config["split"]
    train, test = split(table, sp["test_fraction"], sp["seed"], sp["stratify"])
    return table, train, test


def _task_of(schema):
    if schema.target_column is None:
        raise ArgumentError("dataset has no target column; mark one in the schema override")
    return "classification" if schema.target_kind.is_categorical else "regression"


def _synthesizer(config, method, solver):
    plan = config["plan"]
    gbt = config["gbt"]
    TimeGrid(plan["n_levels"])  # validates early so bad configs exit 2
    return FlowSynthesizer(
        method=method,
        solver=solver,
        n_noise_levels=plan["n_levels"],
        duplication=plan["duplication"],
        conditioning=plan["conditioning"],
        feature_order=plan["feature_order"],
        n_estimators=gbt["n_estimators"],
        learning_rate=gbt["learning_rate"],
        max_depth=gbt["max_depth"],
        min_samples_leaf=gbt["min_samples_leaf"],
        classifier_n_estimators=gbt["classifier_n_estimators"],
        classifier_learning_rate=gbt["classifier_learning_rate"],
        classifier_max_depth=gbt["classifier_max_depth"],
        random_state=plan["seed"],
    )


def _parse_method_solver(tag):
    try:
        method, solver = tag.split("-", 1)
    except ValueError as exc:
        raise ArgumentError(f"method tag {tag!r} is not of the form <method>-<solver>") from exc
    return method, solver


def cmd_fit(args):
    config = resolve_config(args)
    out_dir = config["out"]
    _write_run_record(config, "fit", out_dir)
    _, train, _ = _load_and_split(config)
    synth = _synthesizer(config, config["plan"]["method"], config["solver"])
    synth.fit(train)
    bank_dir = os.path.join(out_dir, "bank")
    save_bank(synth.bank_, bank_dir)
    bank = synth.bank_
    print(
        f"bank={bank_dir} method={bank.method} sub_banks={len(bank.sub_banks)} "
        f"regressors={bank.regressor_count()} classifiers={bank.classifier_count()} "
        f"seconds={synth.fit_seconds_:.3f}"
    )
    return 0


def cmd_generate(args):
    config = resolve_config(args)
    out_dir = config["out"]
    _write_run_record(config, "generate", out_dir)
    bank = load_bank(args.bank)
    gen_cfg = config["generation"]
    n_samples = gen_cfg["n_samples"]
    if n_samples is None:
        n_samples = bank.n_train_rows
    req = GenerationRequest(
        method=bank.method,
        solver=SolverConfig(config["solver"], bank.plan.grid),
        n_samples=int(n_samples),
        seed=gen_cfg["seed"],
        init_mu=gen_cfg["init_mu"],
        init_sigma=gen_cfg["init_sigma"],
    )
    result = generate(bank, req)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "generated.csv")
    write_csv(result.table, csv_path)
    with open(os.path.join(out_dir, "provenance.json"), "w", encoding="utf-8") as fh:
        json.dump(result.provenance, fh, indent=1, sort_keys=True)
    print(f"generated={csv_path} rows={result.table.n_rows} seconds={result.provenance['seconds']:.3f}")
    return 0


def _report_csv(path, reports):
    lines = [MetricsReport.csv_header()]
    lines += [r.csv_row() for r in reports]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_evaluate(args):
    config = resolve_config(args)
    out_dir = config["out"]
    _write_run_record(config, "evaluate", out_dir)
    table, train, test = _load_and_split(config)
    task = _task_of(table.schema)
    fake = read_csv_as(args.fake, table.schema)
    m = config["metrics"]
    report = full_report(
        train,
        test,
        fake,
        task,
        seconds=0.0,
        dataset=os.path.basename(config["data"]),
        method="external",
        solver="",
        k=m["k"],
        ot_max_points=m["ot_max_points"],
        seed=m["seed"],
    )
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    _report_csv(os.path.join(out_dir, "report.csv"), [report])
    print(report.to_json())
    return 0


def _bench_row(config, tag):
    """Fit + generate + report for one (method, solver) cell."""
    method, solver = _parse_method_solver(tag)
    _, train, test = _load_and_split(config)
    task = _task_of(train.schema)
    synth = _synthesizer(config, method, solver)
    synth.fit(train)
    gen_cfg = config["generation"]
    n_samples = gen_cfg["n_samples"] or train.n_rows
    result = synth.sample(
        n_samples=int(n_samples),
        seed=gen_cfg["seed"],
        init_mu=gen_cfg["init_mu"],
        init_sigma=gen_cfg["init_sigma"],
    )
    seconds = synth.fit_seconds_ + result.provenance["seconds"]
    m = config["metrics"]
    report = full_report(
        train,
        test,
        result.table,
        task,
        seconds=seconds,
        scaler_state=synth.bank_.scaler,
        dataset=os.path.basename(config["data"]),
        method=method,
        solver=solver,
        k=m["k"],
        ot_max_points=m["ot_max_points"],
        seed=m["seed"],
    )
    return report.to_dict()


def _bench_worker(payload):
    config, tag = payload
    try:
        return {"ok": True, "tag": tag, "report": _bench_row(config, tag)}
    except S3FError as exc:
        return {"ok": False, "tag": tag, "error": type(exc).__name__, "message": str(exc)}


def _resolve_workers(config, n_rows):
    workers = config["workers"]
    if workers is None:
        workers = max(1, (os.cpu_count() or 2) - 1)
    env_cap = os.environ.get("S3F_THREADS")
    if env_cap:
        workers = min(workers, max(1, int(env_cap)))
    return max(1, min(workers, n_rows))


def _mean_report(reports, dataset):
    numeric = {
        col: float(np.mean([r[col] for r in reports]))
        for col in REPORT_COLUMNS
        if col not in ("dataset", "method", "solver")
    }
    return MetricsReport(
        dataset=dataset, method="mean", solver="", task=reports[0]["task"], **numeric
    )


def cmd_bench(args):
    config = resolve_config(args)
    if getattr(args, "methods", None):
        config["bench_methods"] = [t.strip() for t in args.methods.split(",") if t.strip()]
    out_dir = config["out"]
    _write_run_record(config, "bench", out_dir)
    tags = config["bench_methods"]
    if not tags:
        raise ArgumentError("bench needs at least one method tag")
    for tag in tags:
        _parse_method_solver(tag)
    workers = _resolve_workers(config, len(tags))
    payloads = [(config, tag) for tag in tags]
    if workers == 1:
        outcomes = [_bench_worker(p) for p in payloads]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_bench_worker, payloads))
    reports = [o["report"] for o in outcomes if o["ok"]]
    failures = [o for o in outcomes if not o["ok"]]
    os.makedirs(out_dir, exist_ok=True)
    rows = [MetricsReport(**r) for r in reports]
    if rows:
        rows.append(_mean_report(reports, reports[0]["dataset"]))
    _report_csv(os.path.join(out_dir, "bench.csv"), rows)
    with open(os.path.join(out_dir, "bench.json"), "w", encoding="utf-8") as fh:
        json.dump({"reports": reports, "failures": failures}, fh, indent=1, sort_keys=True)
    for o in outcomes:
        if o["ok"]:
            print(json.dumps(o["report"]))
        else:
            print(json.dumps(o), file=sys.stderr)
    return 0


def cmd_sensitivity(args):
    config = resolve_config(args)
    out_dir = config["out"]
    _write_run_record(config, "sensitivity", out_dir)
    _, train, test = _load_and_split(config)
    gen_cfg = config["generation"]
    m = config["metrics"]
    rows = []
    failures = []
    for tag in SENSITIVITY_METHODS:
        method, solver = _parse_method_solver(tag)
        try:
            synth = _synthesizer(config, method, solver)
            synth.fit(train)
            n_samples = gen_cfg["n_samples"] or train.n_rows
            base_req = GenerationRequest(
                method=method,
                solver=SolverConfig(solver, synth.bank_.plan.grid),
                n_samples=int(n_samples),
                seed=gen_cfg["seed"],
            )
            for entry in run_sensitivity(
                synth.bank_,
                train,
                test,
                base_req,
                DEFAULT_PERTURBATIONS,
                ot_max_points=m["ot_max_points"],
                subsample_seed=m["seed"],
            ):
                rows.append({"method": method, "solver": solver, **entry})
        except S3FError as exc:
            failures.append({"tag": tag, "error": type(exc).__name__, "message": str(exc)})
    os.makedirs(out_dir, exist_ok=True)
    columns = ("method", "solver", "init_mu", "init_sigma", "dW_tr", "dW_te")
    lines = [",".join(columns)]
    for row in rows:
        lines.append(
            ",".join(
                repr(float(row[c])) if isinstance(row[c], float) else str(row[c]) for c in columns
            )
        )
    with open(os.path.join(out_dir, "sensitivity.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(os.path.join(out_dir, "sensitivity.json"), "w", encoding="utf-8") as fh:
        json.dump({"rows": rows, "failures": failures}, fh, indent=1, sort_keys=True)
    for row in rows:
        print(json.dumps(row))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="s3f", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, generation=False):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--data", help="CSV data file")
        p.add_argument("--method", help="ff | cs3f | hs3f")
        p.add_argument("--solver", help="euler | rk4")
        p.add_argument("--seed", type=int, help="training and generation seed")
        p.add_argument("--out", help="output directory")
        if generation:
            p.add_argument("--n-samples", dest="n_samples", type=int)
            p.add_argument("--init-mu", dest="init_mu", type=float)
            p.add_argument("--init-sigma", dest="init_sigma", type=float)

    p_fit = sub.add_parser("fit", help="train a velocity model bank")
    common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_gen = sub.add_parser("generate", help="sample from a saved bank")
    common(p_gen, generation=True)
    p_gen.add_argument("--bank", required=True, help="bank directory from fit")
    p_gen.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("evaluate", help="score an external fake CSV")
    common(p_eval)
    p_eval.add_argument("--fake", required=True, help="generated CSV to evaluate")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("bench", help="multi-method comparison on one dataset")
    common(p_bench, generation=True)
    p_bench.add_argument("--methods", help="comma-separated tags, e.g. hs3f-euler,ff-euler")
    p_bench.set_defaults(func=cmd_bench)

    p_sens = sub.add_parser("sensitivity", help="initial-condition perturbation study")
    common(p_sens, generation=True)
    p_sens.set_defaults(func=cmd_sensitivity)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except S3FError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
