"""Command-line front end.

Subcommands:
    select    rank and select a training set for one target, write the report
    run       full pipeline per target (alpha search, selection, train, AUC)
    sweep-k   AUC as a function of k per combination
    compare   combination tables, pairwise effect sizes, baseline comparison
    synth     generate a deterministic synthetic repository

Every pipeline flag overrides the corresponding experiment-config field, so
a config file is optional when --repository points straight at a repository
config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from tdselector import __version__
from tdselector.config import ExperimentConfig, load_experiment_config
from tdselector.errors import TDSelectorError
from tdselector.experiment import (
    ALL_NORMALIZATIONS,
    ALL_SIMILARITIES,
    TargetRun,
    _jsonable,
    compare_combinations,
    resolve_targets,
    run_experiment,
    sweep_k,
)
from tdselector.synth import SynthSpec, generate_repository, write_repository

log = logging.getLogger("tdselector")


def _add_pipeline_flags(p):
    p.add_argument("--config", type=Path, help="experiment config YAML")
    p.add_argument("--repository", type=Path,
                   help="repository config YAML (alternative to --config)")
    p.add_argument("--target", help="target project name, or 'all'")
    p.add_argument("--similarity", choices=ALL_SIMILARITIES)
    p.add_argument("--normalization", choices=ALL_NORMALIZATIONS)
    p.add_argument("--alpha", help="'optimize' or a fixed value in [0, 1]")
    p.add_argument("--alpha-step", type=float, dest="alpha_step")
    p.add_argument("--k", type=int)
    p.add_argument("--bug-threshold", dest="bug_threshold",
                   help="integer >= 1, or 'off'")
    p.add_argument("--scope", choices=("per_project", "pooled", "none"),
                   help="metric standardization scope")
    p.add_argument("--alpha-objective", dest="alpha_objective",
                   choices=("test", "holdout"))
    p.add_argument("--out", type=Path, help="output directory root")
    p.add_argument("--run-id", dest="run_id",
                   help="run directory name (default: timestamp)")
    p.add_argument("--seed", type=int)


def _build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_experiment_config(args.config)
    elif args.repository:
        cfg = ExperimentConfig(repository_config=args.repository)
    else:
        raise TDSelectorError("provide --config or --repository")
    if args.repository:
        cfg.repository_config = args.repository
    if args.target:
        cfg.targets = "all" if args.target == "all" else [args.target]
    sel = cfg.selector
    if args.similarity:
        sel = replace(sel, similarity=args.similarity)
    if args.normalization:
        sel = replace(sel, normalization=args.normalization)
    if args.k:
        sel = replace(sel, k=args.k)
    if args.alpha_step:
        sel = replace(sel, alpha_step=args.alpha_step)
    if args.bug_threshold is not None:
        off = args.bug_threshold.lower() in ("off", "none")
        sel = replace(sel, bug_threshold=None if off
                      else int(args.bug_threshold))
    if args.alpha is not None:
        if args.alpha == "optimize":
            cfg.alpha_mode = "optimize"
        else:
            cfg.alpha_mode = float(args.alpha)
            sel = replace(sel, alpha=cfg.alpha_mode)
    cfg.selector = sel
    if args.scope:
        cfg.normalization_scope = args.scope
    if args.alpha_objective:
        cfg.alpha_objective = args.alpha_objective
    if args.out:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_select(args) -> int:
    """Selection only: write the chosen TDS and the per-test rankings."""
    from tdselector.config import RepositoryConfig

    cfg = _build_config(args)
    datasets = RepositoryConfig.from_file(cfg.repository_config).load()
    targets = resolve_targets(datasets, cfg.targets)
    out_root = Path(cfg.output_dir) / (args.run_id
                                       or time.strftime("select-%Y%m%d-%H%M%S"))
    if out_root.exists():
        raise TDSelectorError(f"{out_root} already exists; runs are append-only")
    out_root.mkdir(parents=True)
    failures = 0
    for target in targets:
        try:
            run = TargetRun(datasets, target, cfg)
            alpha = (cfg.selector.alpha if cfg.alpha_mode == "optimize"
                     else float(cfg.alpha_mode))
            selection = run.selection(replace(cfg.selector, alpha=alpha))
        except TDSelectorError as exc:
            log.error("selection for %s failed: %s", target, exc)
            failures += 1
            continue
        report = {
            "tool_version": __version__,
            "target": target,
            "alpha": selection.alpha_used,
            "config": cfg.snapshot(),
            "provenance": run.split.provenance,
            "selected": [
                {"uid": inst.uid, "defect_count": inst.defect_count,
                 "forced": inst.uid in selection.forced_uids}
                for inst in selection.selected
            ],
            "per_test_topk": selection.per_test_topk,
        }
        path = out_root / f"selection-{target}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        print(f"{target}: selected {len(selection.selected)} instances "
              f"({len(selection.forced_uids)} forced) -> {path}")
    return 1 if failures else 0


def cmd_run(args) -> int:
    cfg = _build_config(args)
    record = run_experiment(cfg, run_id=args.run_id)
    ok = True
    for target, rec in record["targets"].items():
        if rec["status"] == "ok":
            print(f"{target}: alpha={rec['alpha']:g} AUC={rec['auc']:.4f} "
                  f"(NoD {rec['nod_auc']:.4f}, selected {rec['n_selected']})")
        else:
            print(f"{target}: FAILED ({rec['error']})")
            ok = False
    print(f"run written to {Path(cfg.output_dir) / record['run_id']}")
    return 0 if ok else 1


def cmd_sweep_k(args) -> int:
    cfg = _build_config(args)
    similarities = [args.similarity] if args.similarity else None
    normalizations = [args.normalization] if args.normalization else None
    result = sweep_k(cfg, args.k_min, args.k_max,
                     similarities=similarities, normalizations=normalizations,
                     run_id=args.run_id)
    print(f"{len(result['rows'])} sweep rows -> "
          f"{Path(cfg.output_dir) / result['run_id']}")
    return 0


def cmd_compare(args) -> int:
    cfg = _build_config(args)
    similarities = [args.similarity] if args.similarity else None
    normalizations = [args.normalization] if args.normalization else None
    result = compare_combinations(
        cfg, similarities=similarities, normalizations=normalizations,
        bug_threshold=args.compare_threshold, run_id=args.run_id)
    print(f"best combination: {result['best_combination']}")
    print(f"comparison written to {Path(cfg.output_dir) / result['run_id']}")
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_projects=args.projects,
        n_instances=args.instances,
        n_metrics=args.metrics,
        defect_rate=args.defect_rate,
        informativeness=args.informativeness,
    )
    datasets = generate_repository(spec, seed=args.seed)
    config_path = write_repository(datasets, args.out)
    print(f"synthetic repository ({args.projects} projects x "
          f"{args.instances} instances) -> {config_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdselector",
        description="Training-data selection for cross-project defect "
                    "prediction: blended similarity/defect-count scoring, "
                    "top-k selection, logistic-regression evaluation.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="select a training set, write the report")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("run", help="full pipeline per target")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-k", help="AUC vs k per combination")
    _add_pipeline_flags(p)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=10)
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("compare", help="combination and baseline tables")
    _add_pipeline_flags(p)
    p.add_argument("--compare-threshold", type=int, default=3,
                   help="bug count for the forced-selection variant")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic repository")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--projects", type=int, default=3)
    p.add_argument("--instances", type=int, default=120)
    p.add_argument("--metrics", type=int, default=8)
    p.add_argument("--defect-rate", dest="defect_rate", type=float, default=0.3)
    p.add_argument("--informativeness", type=float, default=0.8)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TDSelectorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
