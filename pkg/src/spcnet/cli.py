"""Experiment runner: one JSON config in, one JSON report out.

Tasks: classify (dataset), sbm (synthetic per-seed graphs), grid
(hyperparameter search over k and t), plot-filter (frequency-response
CSV), stability (linear-stability bound vs observed), robustness
(perturb-ratio sweep). All randomness flows from config seeds; seeds can
run in a worker pool and the report content is identical regardless of
worker count. Timing fields live under "timing" keys only and are
excluded from determinism guarantees.
"""
import argparse
import concurrent.futures
import copy
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .data import (SbmConfig, SplitProtocol, generate_sbm, load_dataset,
                   make_split, resolve_dataset_dir, save_dataset)
from .filters import FilterSpec
from .graph import build_normalized_laplacian
from .model import ModelConfig, evaluate, filter_spec_for, train
from .pcpoly import frequency_response, pc_coefficients
from .robustness import MIXED, PerturbSpec, perturb, robustness_sweep, \
    stability_check

TASKS = ("classify", "sbm", "grid", "plot-filter", "stability", "robustness")

DEFAULT_K_GRID = (0.5, 1.0, 1.5, 2.0)
DEFAULT_T_GRID = (0.25, 0.5, 1.0, 2.0)


@dataclass
class ExperimentConfig:
    task: str = "classify"
    dataset: str | None = None
    sbm: dict | None = None
    split: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: [0])
    grid: dict = field(default_factory=dict)
    filter: dict = field(default_factory=dict)
    perturb: dict = field(default_factory=dict)
    ratios: list = field(default_factory=lambda: [0.0, 0.1, 0.2])
    lambda_max: float = 2.0
    lambda_step: float = 0.05
    normalize_features: bool = True
    output: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.task in ("classify", "grid") and self.dataset is None \
                and self.sbm is None:
            raise ValueError(f"task {self.task!r} needs a dataset or an sbm block")
        if self.task == "sbm" and self.sbm is None:
            self.sbm = {}
        ModelConfig(**self.model)  # validates, incl. pcnet/learnable-k clash

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def to_dict(self):
        return asdict(self)


def _model_config(cfg: ExperimentConfig, seed) -> ModelConfig:
    return ModelConfig(**{**cfg.model, "seed": seed})


def _split_protocol(cfg: ExperimentConfig, seed) -> SplitProtocol:
    return SplitProtocol(**{**cfg.split, "seed": seed})


def _build_graph(cfg: ExperimentConfig, seed=None):
    """Dataset graphs are seed-independent; SBM graphs are drawn per seed."""
    if cfg.task != "sbm" and cfg.dataset is not None:
        path = resolve_dataset_dir(cfg.dataset)
        return load_dataset(path, normalize_features=cfg.normalize_features)
    sbm_kwargs = dict(cfg.sbm or {})
    if seed is not None:
        sbm_kwargs["seed"] = seed
    if "mu0" in sbm_kwargs:
        sbm_kwargs["mu0"] = tuple(sbm_kwargs["mu0"])
    return generate_sbm(SbmConfig(**sbm_kwargs))


def _seed_cell(payload):
    """One (config, seed) training cell; module-level so pools can pickle it."""
    cfg_dict, seed = payload
    cfg = ExperimentConfig(**cfg_dict)
    t0 = time.perf_counter()
    g = _build_graph(cfg, seed=seed)
    split = make_split(g, _split_protocol(cfg, seed))
    best, history = train(g, split, _model_config(cfg, seed))
    acc = evaluate(g, best, filter_spec_for(best), split.test_idx)
    total = time.perf_counter() - t0
    epoch_mean = float(np.mean([h["time_s"] for h in history])) if history else 0.0
    return {"seed": seed, "accuracy": acc, "epochs_run": len(history),
            "timing": {"total_s": total, "epoch_mean_s": epoch_mean}}


def _run_seeds(cfg: ExperimentConfig, workers):
    payloads = [(cfg.to_dict(), seed) for seed in cfg.seeds]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_seed_cell, payloads))
    else:
        results = [_seed_cell(p) for p in payloads]
    return results


def _ci95(accs):
    if len(accs) < 2:
        return 0.0
    return float(1.96 * np.std(accs, ddof=1) / np.sqrt(len(accs)))


def _classification_report(cfg: ExperimentConfig, workers):
    cells = _run_seeds(cfg, workers)
    accs = [c["accuracy"] for c in cells]
    per_seed = [{k: v for k, v in c.items() if k != "timing"} for c in cells]
    return {
        "task": cfg.task,
        "library_version": __version__,
        "config": cfg.to_dict(),
        "per_seed": per_seed,
        "mean_accuracy": float(np.mean(accs)),
        "ci95": _ci95(accs),
        "timing": {"per_seed": [{"seed": c["seed"], **c["timing"]}
                                for c in cells]},
    }


def grid_search(cfg: ExperimentConfig, workers=1):
    """Mean validation accuracy for every (k, t) cell; best cell selected.

    Ties break toward smaller t, then smaller k. Test accuracy is
    recorded per cell as well so the selected cell needs no retraining.
    """
    k_grid = list(cfg.grid.get("k", DEFAULT_K_GRID))
    t_grid = list(cfg.grid.get("t", DEFAULT_T_GRID))
    if not k_grid or not t_grid:
        raise ValueError("grids must be non-empty")
    rows = []
    for k in k_grid:
        for t in t_grid:
            cell_cfg = copy.deepcopy(cfg)
            cell_cfg.model = {**cfg.model, "k": k, "t": t}
            val_accs, test_accs = [], []
            for cell in _grid_cells(cell_cfg, workers):
                val_accs.append(cell["val_accuracy"])
                test_accs.append(cell["accuracy"])
            rows.append({"k": k, "t": t,
                         "val_accuracy": float(np.mean(val_accs)),
                         "test_accuracy": float(np.mean(test_accs)),
                         "test_ci95": _ci95(test_accs)})
    best = max(rows, key=lambda r: (r["val_accuracy"], -r["t"], -r["k"]))
    return best, rows


def _grid_cell(payload):
    cfg_dict, seed = payload
    cfg = ExperimentConfig(**cfg_dict)
    g = _build_graph(cfg, seed=seed)
    split = make_split(g, _split_protocol(cfg, seed))
    if np.asarray(split.val_idx).size == 0:
        raise ValueError("grid search needs a split with validation nodes")
    best, history = train(g, split, _model_config(cfg, seed))
    spec = filter_spec_for(best)
    return {"seed": seed,
            "val_accuracy": evaluate(g, best, spec, split.val_idx),
            "accuracy": evaluate(g, best, spec, split.test_idx),
            "epochs_run": len(history)}


def _grid_cells(cfg: ExperimentConfig, workers):
    payloads = [(cfg.to_dict(), seed) for seed in cfg.seeds]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_grid_cell, payloads))
    return [_grid_cell(p) for p in payloads]


def _grid_report(cfg: ExperimentConfig, workers):
    best, rows = grid_search(cfg, workers)
    return {
        "task": "grid",
        "library_version": __version__,
        "config": cfg.to_dict(),
        "best": best,
        "grid": rows,
        "mean_accuracy": best["test_accuracy"],
        "ci95": best["test_ci95"],
    }


def _filter_curve(cfg: ExperimentConfig):
    fspec = {"k": 1.0, "t": 1.0, "n_terms": 20, **cfg.filter}
    coeffs = pc_coefficients(fspec["k"], fspec["t"], fspec["n_terms"])
    lams = np.arange(0.0, cfg.lambda_max + 1e-12, cfg.lambda_step)
    resp = frequency_response(coeffs, lams)
    return [[float(l), float(r)] for l, r in zip(lams, resp)]


def _plot_filter_report(cfg: ExperimentConfig):
    return {
        "task": "plot-filter",
        "library_version": __version__,
        "config": cfg.to_dict(),
        "filter_curve": _filter_curve(cfg),
    }


def _filter_spec(cfg: ExperimentConfig) -> FilterSpec:
    allowed = {"k", "t", "n_terms", "include_identity"}
    fspec = {k: v for k, v in cfg.filter.items() if k in allowed}
    return FilterSpec(**fspec)


def _stability_report(cfg: ExperimentConfig):
    g = _build_graph(cfg)
    pspec = PerturbSpec(**{"ratio": 0.2, "seed": cfg.seeds[0], **cfg.perturb})
    g_pert = perturb(g, pspec)
    result = stability_check(build_normalized_laplacian(g),
                             build_normalized_laplacian(g_pert),
                             _filter_spec(cfg))
    return {
        "task": "stability",
        "library_version": __version__,
        "config": cfg.to_dict(),
        "stability": result,
    }


def _robustness_report(cfg: ExperimentConfig):
    g = _build_graph(cfg)
    mode = cfg.perturb.get("mode", MIXED)
    sweep = robustness_sweep(
        g, _split_protocol(cfg, cfg.seeds[0]),
        _model_config(cfg, cfg.seeds[0]), cfg.ratios, cfg.seeds, mode=mode)
    return {
        "task": "robustness",
        "library_version": __version__,
        "config": cfg.to_dict(),
        "robustness": sweep,
    }


def run(cfg: ExperimentConfig, workers=1):
    """Execute the configured task and return the report dict."""
    t0 = time.perf_counter()
    if cfg.task in ("classify", "sbm"):
        report = _classification_report(cfg, workers)
    elif cfg.task == "grid":
        report = _grid_report(cfg, workers)
    elif cfg.task == "plot-filter":
        report = _plot_filter_report(cfg)
    elif cfg.task == "stability":
        report = _stability_report(cfg)
    else:
        report = _robustness_report(cfg)
    report.setdefault("timing", {})["total_s"] = time.perf_counter() - t0
    return report


def strip_timing(report):
    """Copy of a report without timing fields (determinism comparisons)."""
    def scrub(obj):
        if isinstance(obj, dict):
            return {k: scrub(v) for k, v in obj.items() if k != "timing"}
        if isinstance(obj, list):
            return [scrub(v) for v in obj]
        return obj
    return scrub(report)


def _write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(report, out_path):
    if out_path:
        _write_report(report, out_path)
    task = report["task"]
    if "mean_accuracy" in report:
        print(f"{task}: mean accuracy {report['mean_accuracy']:.4f} "
              f"+/- {report.get('ci95', 0.0):.4f} "
              f"({len(report.get('per_seed', report.get('grid', [])))} entries)")
    if "best" in report:
        b = report["best"]
        print(f"grid best: k={b['k']} t={b['t']} "
              f"val={b['val_accuracy']:.4f} test={b['test_accuracy']:.4f}")
    if "stability" in report:
        s = report["stability"]
        print(json.dumps({k: s[k] for k in ("bound", "observed", "margin")}))
    if "robustness" in report:
        for row in report["robustness"]["per_ratio"]:
            print(f"ratio {row['ratio']:.3f}: "
                  f"mean {row['mean_accuracy']:.4f} ci95 {row['ci95']:.4f}")


def _csv_rows(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.10g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _add_config_arg(sub):
    sub.add_argument("--config", required=True, help="experiment JSON file")
    sub.add_argument("--out", default=None, help="report output path")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spcnet", description="spectral graph filter experiment runner")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="execute the task in a config file")
    _add_config_arg(p_run)
    p_run.add_argument("--workers", type=int, default=0,
                       help="worker processes (0 = available parallelism)")

    p_grid = subs.add_parser("grid", help="grid search over k and t")
    _add_config_arg(p_grid)
    p_grid.add_argument("--workers", type=int, default=0)

    p_plot = subs.add_parser("plot-filter",
                             help="frequency response CSV (lambda,response)")
    p_plot.add_argument("--k", type=float, default=1.0)
    p_plot.add_argument("--t", type=float, default=1.0)
    p_plot.add_argument("--n-terms", type=int, default=20)
    p_plot.add_argument("--lambda-max", type=float, default=2.0)
    p_plot.add_argument("--step", type=float, default=0.05)
    p_plot.add_argument("--out", default=None, help="CSV output path")

    p_stab = subs.add_parser("stability",
                             help="stability bound vs observed change")
    _add_config_arg(p_stab)

    p_rob = subs.add_parser("robustness", help="perturb-ratio sweep")
    _add_config_arg(p_rob)
    p_rob.add_argument("--ratios", default=None,
                       help="comma-separated perturb ratios")
    p_rob.add_argument("--seeds", default=None, help="comma-separated seeds")
    p_rob.add_argument("--mode", default=None,
                       choices=["add", "remove", "mixed"])

    p_gen = subs.add_parser("sbm-gen", help="write a synthetic SBM dataset")
    p_gen.add_argument("--nodes", type=int, default=500)
    p_gen.add_argument("--p", type=float, required=True)
    p_gen.add_argument("--q", type=float, required=True)
    p_gen.add_argument("--sigma", type=float, default=1.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--feature-dim", type=int, default=2)
    p_gen.add_argument("--out", required=True, help="dataset directory")
    return parser


def _effective_workers(requested, n_seeds):
    if requested and requested > 0:
        return requested
    return max(1, min(os.cpu_count() or 1, n_seeds))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "grid"):
            cfg = ExperimentConfig.from_json(args.config)
            if args.command == "grid":
                cfg.task = "grid"
            out = args.out or cfg.output
            workers = _effective_workers(args.workers, len(cfg.seeds))
            report = run(cfg, workers=workers)
            _emit(report, out)
            if report["task"] == "grid" and out:
                _csv_rows(out + ".grid.csv",
                          ["k", "t", "val_accuracy", "test_accuracy"],
                          [(r["k"], r["t"], r["val_accuracy"],
                            r["test_accuracy"]) for r in report["grid"]])
        elif args.command == "plot-filter":
            cfg = ExperimentConfig(
                task="plot-filter",
                filter={"k": args.k, "t": args.t, "n_terms": args.n_terms},
                lambda_max=args.lambda_max, lambda_step=args.step)
            curve = _filter_curve(cfg)
            lines = ["lambda,response"] + \
                [f"{l:.10g},{r:.17g}" for l, r in curve]
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write("\n".join(lines) + "\n")
            else:
                print("\n".join(lines))
        elif args.command == "stability":
            cfg = ExperimentConfig.from_json(args.config)
            cfg.task = "stability"
            report = run(cfg)
            _emit(report, args.out or cfg.output)
        elif args.command == "robustness":
            cfg = ExperimentConfig.from_json(args.config)
            cfg.task = "robustness"
            if args.ratios:
                cfg.ratios = [float(x) for x in args.ratios.split(",")]
            if args.seeds:
                cfg.seeds = [int(x) for x in args.seeds.split(",")]
            if args.mode:
                cfg.perturb = {**cfg.perturb, "mode": args.mode}
            out = args.out or cfg.output
            report = run(cfg)
            _emit(report, out)
            if out:
                _csv_rows(out + ".csv", ["ratio", "mean_acc", "ci95"],
                          [(r["ratio"], r["mean_accuracy"], r["ci95"])
                           for r in report["robustness"]["per_ratio"]])
        else:  # sbm-gen
            cfg = SbmConfig(nodes=args.nodes, p=args.p, q=args.q,
                            sigma=args.sigma, seed=args.seed,
                            feature_dim=args.feature_dim,
                            mu0=tuple([1.0] * args.feature_dim))
            g = generate_sbm(cfg)
            save_dataset(g, args.out, name=f"sbm-{args.nodes}-{args.p}-{args.q}")
            print(f"wrote {g.num_nodes} nodes / {g.num_edges} edges to {args.out}")
    except (ValueError, FileNotFoundError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
