"""End-to-end experiment harness.

For each target project: build the many-to-one split, search (or fix) the
blend weight alpha, select the final training set, fit the logistic model
and score the test set with AUC. A TargetRun caches the expensive pieces --
one similarity matrix per (index, transform, threshold pool) and one trained
AUC per distinct selected set -- so grid sweeps over alpha, normalization
methods and k reuse them instead of recomputing.

Run artifacts land in a fresh timestamped directory: a config snapshot, the
raw JSON records, and CSV tables whose cells are all recomputable from the
records via the stats module.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from tdselector import __version__
from tdselector.config import ExperimentConfig, RepositoryConfig
from tdselector.corpus import Dataset, prepare_split
from tdselector.errors import TDSelectorError
from tdselector.kernels import active_backend
from tdselector.learner import auc, predict_proba_matrix, train
from tdselector.selector import (
    AlphaSearchResult,
    SelectionResult,
    SelectorConfig,
    canonical_pool,
    merge_forced,
    optimize_alpha,
    select_from_similarity,
)
from tdselector.similarity import similarity_matrix
from tdselector.stats import growth_or_none, growth_rate

log = logging.getLogger(__name__)

ALL_SIMILARITIES = ("cosine", "euclidean", "manhattan")
ALL_NORMALIZATIONS = ("linear", "logistic", "sqrt", "log", "arctan")


@dataclass
class _PoolView:
    pool: list
    matrix: np.ndarray
    forced: list = field(default_factory=list)


class TargetRun:
    """One target's split plus caches shared across grid evaluations."""

    def __init__(self, datasets: list[Dataset], target: str,
                 cfg: ExperimentConfig):
        self.cfg = cfg
        self.split = prepare_split(datasets, target, cfg.normalization_scope)
        self.test_set = self.split.test_set
        self.test_matrix = self.test_set.metrics_matrix()
        self.test_labels = self.test_set.labels()
        self._full_pool = canonical_pool(self.split.initial_tds)
        self._pool_views: dict = {}
        self._sim_cache: dict = {}
        self._auc_cache: dict = {}

    # -- cached building blocks -------------------------------------------

    def _pool_view(self, threshold) -> _PoolView:
        if threshold not in self._pool_views:
            if threshold is None:
                view = _PoolView(
                    pool=self._full_pool,
                    matrix=np.vstack([i.metrics for i in self._full_pool]),
                )
            else:
                forced = [i for i in self._full_pool
                          if i.defect_count >= threshold]
                rest = [i for i in self._full_pool
                        if i.defect_count < threshold]
                view = _PoolView(
                    pool=rest,
                    matrix=(np.vstack([i.metrics for i in rest])
                            if rest else np.empty((0, self.test_matrix.shape[1]))),
                    forced=forced,
                )
            self._pool_views[threshold] = view
        return self._pool_views[threshold]

    def _sim(self, sel_cfg: SelectorConfig) -> np.ndarray:
        key = (sel_cfg.similarity, sel_cfg.distance_transform,
               sel_cfg.bug_threshold)
        if key not in self._sim_cache:
            view = self._pool_view(sel_cfg.bug_threshold)
            self._sim_cache[key] = similarity_matrix(
                sel_cfg.similarity, self.test_matrix, view.matrix,
                sel_cfg.distance_transform)
        return self._sim_cache[key]

    # -- pipeline stages ----------------------------------------------------

    def selection(self, sel_cfg: SelectorConfig) -> SelectionResult:
        """Equivalent to selector.select(), reusing the cached matrices."""
        view = self._pool_view(sel_cfg.bug_threshold)
        if sel_cfg.bug_threshold is not None and not view.pool:
            log.warning(
                "bug threshold %d captured the whole pool (%d instances); "
                "skipping the scored selection stage",
                sel_cfg.bug_threshold, len(view.forced))
            return SelectionResult(
                selected=list(view.forced), per_test_topk={},
                alpha_used=sel_cfg.alpha,
                forced_uids=frozenset(i.uid for i in view.forced))
        scored = select_from_similarity(view.pool, self.test_set,
                                        self._sim(sel_cfg), sel_cfg)
        if sel_cfg.bug_threshold is None:
            return scored
        return merge_forced(view.forced, scored)

    def evaluate(self, selection: SelectionResult) -> float:
        """AUC on the test set of a model trained on the selection (memoized)."""
        key = selection.selected_uids
        if key not in self._auc_cache:
            model = train(selection.selected, self.cfg.learner)
            probs = predict_proba_matrix(model, self.test_matrix)
            self._auc_cache[key] = (auc(probs, self.test_labels), model)
        return self._auc_cache[key][0]

    def model_for(self, selection: SelectionResult):
        self.evaluate(selection)
        return self._auc_cache[selection.selected_uids][1]

    def optimize(self, sel_cfg: SelectorConfig) -> AlphaSearchResult:
        if self.cfg.alpha_objective == "holdout":
            return self._optimize_holdout(sel_cfg)
        return optimize_alpha(self._full_pool, self.test_set, sel_cfg,
                              evaluate=self.evaluate,
                              select_fn=self.selection)

    def _optimize_holdout(self, sel_cfg: SelectorConfig) -> AlphaSearchResult:
        """Pick alpha on a slice of the pool instead of the test labels."""
        fit_pool, holdout = [], []
        seen = {0: 0, 1: 0}
        for inst in self._full_pool:  # every 5th per class, canonical order
            seen[inst.label] += 1
            (holdout if seen[inst.label] % 5 == 0 else fit_pool).append(inst)
        labels = {i.label for i in holdout}
        if len(labels) < 2 or not fit_pool:
            log.warning("holdout slice lacks both classes; falling back to "
                        "test-set alpha objective")
            return optimize_alpha(self._full_pool, self.test_set, sel_cfg,
                                  evaluate=self.evaluate,
                                  select_fn=self.selection)
        holdout_set = Dataset(project="holdout", version="0",
                              repository=self.test_set.repository,
                              schema=self.test_set.schema, instances=holdout)
        holdout_matrix = holdout_set.metrics_matrix()
        holdout_labels = holdout_set.labels()

        def evaluate(selection):
            model = train(selection.selected, self.cfg.learner)
            return auc(predict_proba_matrix(model, holdout_matrix),
                       holdout_labels)

        return optimize_alpha(fit_pool, holdout_set, sel_cfg,
                              evaluate=evaluate)

    def run(self, sel_cfg: SelectorConfig, alpha_mode) -> dict:
        """Full pipeline for one selector configuration; returns the record."""
        started = time.perf_counter()
        if alpha_mode == "optimize":
            search = self.optimize(sel_cfg)
            alpha = search.alpha
            trace = search.trace
        else:
            alpha = float(alpha_mode)
            trace = None
        final_cfg = replace(sel_cfg, alpha=alpha)
        selection = self.selection(final_cfg)
        auc_value = self.evaluate(selection)
        model = self.model_for(selection)
        nod = self.nod_auc(sel_cfg)
        return {
            "status": "ok",
            "alpha": alpha,
            "auc": auc_value,
            "nod_auc": nod,
            "growth_pct": growth_rate(auc_value, nod) if nod > 0 else None,
            "alpha_trace": trace,
            "n_selected": len(selection.selected),
            "n_forced": len(selection.forced_uids),
            "pool_size": len(self._full_pool),
            "test_size": self.test_set.m,
            "model": {
                "weights": dict(zip(self.test_set.schema.names,
                                    model.weights.tolist())),
                "bias": model.bias,
                "training_meta": model.training_meta,
            },
            "timing_s": time.perf_counter() - started,
        }

    def nod_auc(self, sel_cfg: SelectorConfig) -> float:
        """Baseline: similarity-only selection (alpha = 1), no bug threshold."""
        cfg = replace(sel_cfg, alpha=1.0, bug_threshold=None)
        return self.evaluate(self.selection(cfg))


def resolve_targets(datasets: list[Dataset], requested) -> list[str]:
    names = []
    for d in datasets:
        if d.project not in names:
            names.append(d.project)
    if requested in ("all", ["all"], None):
        return names
    requested = [requested] if isinstance(requested, str) else list(requested)
    unknown = [t for t in requested if t not in names]
    if unknown:
        raise TDSelectorError(
            f"unknown target(s) {unknown}; repository has {names}"
        )
    return requested


def run_experiment(cfg: ExperimentConfig, run_id: str | None = None) -> dict:
    """cmd_run backend: one record per target, artifacts on disk."""
    out_dir = _prepare_run_dir(cfg, run_id)
    datasets = RepositoryConfig.from_file(cfg.repository_config).load()
    targets = resolve_targets(datasets, cfg.targets)
    if cfg.alpha_mode == "optimize" and cfg.alpha_objective == "test":
        log.warning(
            "alpha is optimized against test-set labels (the published "
            "procedure); the reported best AUC is optimistically biased. "
            "Set alpha_objective: holdout to tune alpha on pool data only.")
    records = {}
    for target in targets:
        try:
            run = TargetRun(datasets, target, cfg)
            records[target] = run.run(cfg.selector, cfg.alpha_mode)
        except TDSelectorError as exc:
            log.error("target %s failed: %s", target, exc)
            records[target] = {"status": "error", "error": str(exc)}
    record = {
        "tool_version": __version__,
        "kernel_backend": active_backend(),
        "run_id": out_dir.name,
        "config": cfg.snapshot(),
        "targets": records,
    }
    _write_run_artifacts(out_dir, cfg, record)
    return record


def _prepare_run_dir(cfg: ExperimentConfig, run_id: str | None) -> Path:
    run_id = run_id or time.strftime("run-%Y%m%d-%H%M%S")
    out_dir = Path(cfg.output_dir) / run_id
    if out_dir.exists():
        raise TDSelectorError(
            f"run directory {out_dir} already exists; runs are append-only"
        )
    out_dir.mkdir(parents=True)
    return out_dir


def _write_run_artifacts(out_dir: Path, cfg: ExperimentConfig, record: dict):
    with open(out_dir / "config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(_jsonable(cfg.snapshot()), fh, sort_keys=False)
    with open(out_dir / "records.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "status", "alpha", "auc", "nod_auc",
                         "growth_pct", "n_selected", "n_forced"])
        for target, rec in record["targets"].items():
            if rec["status"] != "ok":
                writer.writerow([target, rec["status"], "", "", "", "", "", ""])
                continue
            writer.writerow([
                target, "ok", _num(rec["alpha"]), _num(rec["auc"]),
                _num(rec["nod_auc"]),
                "" if rec["growth_pct"] is None else f"{rec['growth_pct']:.1f}",
                rec["n_selected"], rec["n_forced"],
            ])
    traces = [(t, rec) for t, rec in record["targets"].items()
              if rec.get("alpha_trace")]
    if traces:
        with open(out_dir / "alpha_trace.csv", "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["target", "alpha", "auc"])
            for target, rec in traces:
                for alpha, value in rec["alpha_trace"]:
                    writer.writerow([target, _num(alpha), _num(value)])
    log.info("run artifacts written to %s", out_dir)


def sweep_k(cfg: ExperimentConfig, k_min: int, k_max: int,
            similarities=None, normalizations=None,
            run_id: str | None = None) -> dict:
    """cmd_sweep_k backend: AUC as a function of k per combination."""
    if not 1 <= k_min <= k_max:
        raise TDSelectorError(f"bad k range [{k_min}, {k_max}]")
    out_dir = _prepare_run_dir(cfg, run_id or time.strftime("sweep-%Y%m%d-%H%M%S"))
    datasets = RepositoryConfig.from_file(cfg.repository_config).load()
    targets = resolve_targets(datasets, cfg.targets)
    similarities = similarities or [cfg.selector.similarity.value]
    normalizations = normalizations or [cfg.selector.normalization.value]
    runs = {t: TargetRun(datasets, t, cfg) for t in targets}
    rows = []
    for sim in similarities:
        for norm in normalizations:
            for k in range(k_min, k_max + 1):
                base = replace(cfg.selector, similarity=sim,
                               normalization=norm, k=k)
                per_target = {}
                for target in targets:
                    run = runs[target]
                    if cfg.alpha_mode == "optimize":
                        per_target[target] = run.optimize(base).best_auc
                    else:
                        sel = run.selection(
                            replace(base, alpha=float(cfg.alpha_mode)))
                        per_target[target] = run.evaluate(sel)
                rows.append({"similarity": sim, "normalization": norm,
                             "k": k, "per_target": per_target,
                             "mean": float(np.mean(list(per_target.values())))})
    result = {
        "tool_version": __version__,
        "config": cfg.snapshot(),
        "k_range": [k_min, k_max],
        "targets": targets,
        "rows": rows,
        "run_id": out_dir.name,
    }
    with open(out_dir / "sweep_records.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(result), fh, indent=2, sort_keys=True)
    with open(out_dir / "sweep_k.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["similarity", "normalization", "k", *targets, "mean"])
        for row in rows:
            writer.writerow([
                row["similarity"], row["normalization"], row["k"],
                *[_num(row["per_target"][t]) for t in targets],
                _num(row["mean"]),
            ])
    log.info("sweep artifacts written to %s", out_dir)
    return result


def compare_combinations(cfg: ExperimentConfig, similarities=None,
                         normalizations=None, bug_threshold: int = 3,
                         run_id: str | None = None) -> dict:
    """cmd_compare backend: per-combination tables and pairwise effect sizes.

    Emits best-alpha AUC per combination and target, growth against the
    similarity-only baseline, the pairwise Cliff's-delta matrix across
    combinations, and a baseline table comparing the best combination with
    NoD and the bug-threshold variant. External reference methods are out of
    scope and their slots carry explicit not_implemented markers.
    """
    from tdselector.stats import build_eval_report, pairwise_compare

    similarities = similarities or list(ALL_SIMILARITIES)
    normalizations = normalizations or list(ALL_NORMALIZATIONS)
    out_dir = _prepare_run_dir(
        cfg, run_id or time.strftime("compare-%Y%m%d-%H%M%S"))
    datasets = RepositoryConfig.from_file(cfg.repository_config).load()
    targets = resolve_targets(datasets, cfg.targets)
    runs = {t: TargetRun(datasets, t, cfg) for t in targets}

    combos = {}
    nod = {}
    for sim in similarities:
        nod[sim] = {}
        for norm in normalizations:
            name = f"{sim}+{norm}"
            base = replace(cfg.selector, similarity=sim, normalization=norm,
                           bug_threshold=None)
            per_target = {}
            for target in targets:
                run = runs[target]
                search = run.optimize(base)
                per_target[target] = {
                    "auc": search.best_auc,
                    "alpha": search.alpha,
                    "trace": search.trace,
                }
                nod[sim][target] = run.nod_auc(base)
            combos[name] = per_target

    reports = {}
    for name, per_target in combos.items():
        sim = name.split("+")[0]
        reports[name] = build_eval_report(per_target, nod[sim])

    result_sets = {name: [combos[name][t]["auc"] for t in targets]
                   for name in combos}
    matrix_names, matrix = pairwise_compare(result_sets)

    best_name = max(reports, key=lambda n: reports[n].mean)
    best_sim = best_name.split("+")[0]
    tds3 = {}
    base_best = replace(cfg.selector,
                        similarity=best_sim,
                        normalization=best_name.split("+")[1],
                        bug_threshold=bug_threshold)
    for target in targets:
        tds3[target] = runs[target].optimize(base_best).best_auc

    result = {
        "tool_version": __version__,
        "config": cfg.snapshot(),
        "targets": targets,
        "combinations": combos,
        "nod": nod,
        "best_combination": best_name,
        "bug_threshold_variant": {"threshold": bug_threshold, "auc": tds3},
        "pairwise": {"names": matrix_names, "matrix": matrix.tolist()},
        "external_baselines": {
            "relevancy_filter": "not_implemented",
            "transfer_component_analysis": "not_implemented",
        },
        "run_id": out_dir.name,
    }
    _write_compare_artifacts(out_dir, result, reports, targets)
    return result


def _write_compare_artifacts(out_dir, result, reports, targets):
    with open(out_dir / "compare_records.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonable(result), fh, indent=2, sort_keys=True)

    with open(out_dir / "combinations.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["similarity", "normalization",
                         *[f"auc_{t}" for t in targets],
                         *[f"alpha_{t}" for t in targets],
                         "mean", "std", "cliffs_delta_vs_nod", "effect_band",
                         "mean_growth_of_rates_pct", "growth_of_means_pct"])
        for name, report in reports.items():
            sim, norm = name.split("+")
            writer.writerow([
                sim, norm,
                *[_num(report.per_target[t]["auc"]) for t in targets],
                *[_num(report.per_target[t]["alpha"]) for t in targets],
                _num(report.mean), _num(report.std),
                _num(report.cliffs_delta_vs_baseline), report.band,
                f"{report.mean_growth_of_rates:.1f}",
                f"{report.growth_of_means:.1f}",
            ])

    names = result["pairwise"]["names"]
    matrix = result["pairwise"]["matrix"]
    with open(out_dir / "pairwise_delta.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["combination", *names])
        for i, name in enumerate(names):
            writer.writerow([name, *[_num(v) for v in matrix[i]]])

    best = result["best_combination"]
    best_sim = best.split("+")[0]
    tds3 = result["bug_threshold_variant"]["auc"]
    with open(out_dir / "baselines.csv", "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", f"best({best})", "nod",
                         "growth_vs_nod_pct",
                         f"bug_threshold_{result['bug_threshold_variant']['threshold']}",
                         "growth_threshold_vs_best_pct",
                         "relevancy_filter", "transfer_component_analysis"])
        for t in targets:
            best_auc = result["combinations"][best][t]["auc"]
            nod_auc = result["nod"][best_sim][t]
            growth = growth_or_none(best_auc, nod_auc)
            t3_growth = growth_or_none(tds3[t], best_auc)
            writer.writerow([
                t, _num(best_auc), _num(nod_auc),
                "" if growth is None else f"{growth:.1f}",
                _num(tds3[t]),
                "" if t3_growth is None else f"{t3_growth:.1f}",
                "not_implemented", "not_implemented",
            ])
    log.info("comparison artifacts written to %s", out_dir)


def _num(x) -> str:
    return f"{float(x):.6f}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    return obj
