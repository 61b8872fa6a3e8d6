"""Command-line entry point: ``gaen {gen,run,tune,compare}``.

Configuration precedence is built-in defaults < ``--config`` JSON file <
command-line flags. Every command prints the resolved configuration and
writes it to ``<out>/config.json``; that file can be fed back through
``--config`` to reproduce a run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import SynthSpec, generate_synthetic, load_csv, write_csv, write_truth
from .errors import GaenError
from .ga import FitnessWeights
from .pipeline import (PipelineConfig, canonical_method, compare_methods,
                       grid_tune, nested_cv_evaluate)


class UsageError(Exception):
    """Bad input from the command line; exits with status 2."""


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


@dataclass
class RunConfig:
    data: str | None = None
    response: str = "y"
    out: str = "out"
    jobs: int = 1
    method: str = "GA-EN"
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def to_dict(self) -> dict:
        return {"data": self.data, "response": self.response, "out": self.out,
                "jobs": self.jobs, "method": self.method,
                "pipeline": self.pipeline.to_dict()}

    def experiment_dict(self) -> dict:
        """The settings that determine results (no output path or workers)."""
        d = self.to_dict()
        del d["out"], d["jobs"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        pipe = PipelineConfig.from_dict(d.pop("pipeline", {}))
        unknown = set(d) - {"data", "response", "out", "jobs", "method"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(pipeline=pipe, **d)


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            cfg = RunConfig.from_dict(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON in {path}: {exc}") from None
    top = {k: getattr(args, k) for k in ("data", "response", "out", "jobs")
           if getattr(args, k, None) is not None}
    if getattr(args, "method", None):
        top["method"] = args.method
    cfg = replace(cfg, **top)
    cfg.method = canonical_method(cfg.method)
    pipe = {}
    if args.seed is not None:
        pipe["seed"] = args.seed
    if args.outer_k is not None:
        pipe["outer_k"] = args.outer_k
    if args.ga_iterations is not None:
        pipe["n_ga_iterations"] = args.ga_iterations
    if args.fsp is not None:
        pipe["fsp"] = args.fsp
    if args.w_r is not None:
        pipe["weights"] = FitnessWeights(args.w_r, 1.0 - args.w_r)
    if args.tune_inside:
        pipe["tune_inside"] = True
    if pipe:
        cfg.pipeline = replace(cfg.pipeline, **pipe)
    if cfg.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    return cfg


def _load(cfg: RunConfig):
    if not cfg.data:
        raise UsageError("no data file given (use --data)")
    path = Path(cfg.data)
    if not path.is_file():
        raise UsageError(f"data file not found: {path}")
    return load_csv(path, cfg.response)


def _start(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    text = dumps(cfg.to_dict())
    print("# resolved config")
    print(text, end="")
    (out / "config.json").write_text(text)
    return out


def _write_trace(path: Path, results):
    with path.open("w") as fh:
        for res in results:
            for fold, it, records in res.traces:
                for rec in records:
                    row = {"method": res.method, "fold": fold,
                           "iteration": it, **rec}
                    fh.write(json.dumps(row, sort_keys=True,
                                        default=_json_default) + "\n")


def _summary(res) -> str:
    lines = [f"method: {res.method}",
             f"relative RMSE_CV: {100 * res.relative_rmse_cv:.2f}%",
             f"RMSE_CV: {res.rmse_cv:.6g}",
             f"mean final predictors: {res.mean_final_predictors:.2f}"]
    for f in res.per_fold:
        lines.append(f"  fold {f.fold}: {f.selected_count} predictors, "
                     f"rmse {f.rmse:.6g}")
    return "\n".join(lines) + "\n"


def cmd_gen(args) -> int:
    try:
        spec = SynthSpec(n=args.n, P=args.p, k_true=args.k,
                         beta_magnitude=args.beta, noise_sd=args.noise,
                         adjacent_correlation=args.corr,
                         missing_rate=args.missing,
                         binary_predictors=not args.continuous, seed=args.seed)
    except GaenError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        d, support, beta = generate_synthetic(spec)
        write_csv(d, out / "data.csv")
        write_truth(out / "truth.json", support, beta, spec.seed)
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from None
    print(f"wrote {out / 'data.csv'} ({d.n} x {d.P + 1}) and "
          f"{out / 'truth.json'}")
    return 0


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    d = _load(cfg)
    out = _start(cfg)
    res = nested_cv_evaluate(d, cfg.pipeline, cfg.method, n_jobs=cfg.jobs)
    payload = {"config": cfg.experiment_dict(), "result": res.to_dict()}
    (out / "result.json").write_text(dumps(payload))
    trace = out / "trace.jsonl"
    if res.layer1:
        _write_trace(trace, [res])
    elif trace.exists():
        trace.unlink()
    text = _summary(res)
    (out / "summary.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_tune(args) -> int:
    cfg = resolve_config(args)
    d = _load(cfg)
    out = _start(cfg)
    res = grid_tune(d, cfg.pipeline, n_jobs=cfg.jobs)
    cells = res.cells_table()
    with (out / "grid.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(cells[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(cells)
    payload = {"config": cfg.experiment_dict(),
               "best": {"w_r": res.weights.w_r, "w_p": res.weights.w_p,
                        "fsp": res.fsp},
               "result": res.result.to_dict(), "cells": cells}
    (out / "result.json").write_text(dumps(payload))
    print(f"best: w_r={res.weights.w_r} w_p={res.weights.w_p} fsp={res.fsp} "
          f"relative RMSE_CV={100 * res.result.relative_rmse_cv:.2f}%")
    return 0


def cmd_compare(args) -> int:
    cfg = resolve_config(args)
    d = _load(cfg)
    out = _start(cfg)
    rep = compare_methods(d, cfg.pipeline, n_jobs=cfg.jobs)
    (out / "report.json").write_text(
        dumps({"config": cfg.experiment_dict(), "report": rep.to_dict()}))
    table = rep.to_table()
    (out / "report.md").write_text(table + "\n")
    _write_trace(out / "trace.jsonl",
                 [r for r in rep.results.values() if r.layer1])
    print(table)
    return 0


def _shared(p):
    p.add_argument("--data", help="input CSV")
    p.add_argument("--response", help="response column name (default y)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--outer-k", type=int, help="outer CV folds (default 3)")
    p.add_argument("--ga-iterations", type=int,
                   help="GA repeats in layer 1 (default 5)")
    p.add_argument("--fsp", type=float, help="fraction-of-selected threshold")
    p.add_argument("--w-r", type=float,
                   help="error weight in the GA fitness; w_p = 1 - w_r")
    p.add_argument("--tune-inside", action="store_true",
                   help="grid-search weights and FSP inside each outer fold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaen", description="Two-layer GA + elastic net feature selection")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("--n", type=int, default=30)
    g.add_argument("--p", type=int, default=120)
    g.add_argument("--k", type=int, default=5, help="number of true predictors")
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--noise", type=float, default=0.5)
    g.add_argument("--corr", type=float, default=0.3,
                   help="correlation between adjacent predictors")
    g.add_argument("--missing", type=float, default=0.0)
    g.add_argument("--continuous", action="store_true",
                   help="Gaussian instead of binary predictors")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="nested-CV evaluation of one method")
    _shared(r)
    r.add_argument("--method", choices=["ga-en", "en", "ga-lr"])
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("tune", help="grid search over fitness weights and FSP")
    _shared(t)
    t.set_defaults(func=cmd_tune)

    c = sub.add_parser("compare", help="GA-EN vs EN vs GA-Lr")
    _shared(c)
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gaen: error: {exc}", file=sys.stderr)
        return 2
    except GaenError as exc:
        print(f"gaen: error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ValueError) else 1


if __name__ == "__main__":
    sys.exit(main())
