"""Experiment configuration: YAML schemas and loading.

Two file kinds exist. A *repository config* describes a set of dataset files
sharing one metric schema:

    repository: PROMISE
    delimiter: ","
    defect_column: bug
    metric_columns: [wmc, dit, noc, ...]
    datasets:
      - {project: ant, version: "1.7", path: ant-1.7.csv}

An *experiment config* points at a repository config and sets the pipeline
knobs; every field can be overridden from the CLI:

    repository_config: repository.yaml
    targets: all              # or a list of project names
    selector:
      similarity: euclidean   # cosine | euclidean | manhattan
      normalization: linear   # linear | logistic | sqrt | log | arctan
      alpha: optimize         # or a float in [0, 1]
      alpha_step: 0.1
      k: 10
      bug_threshold: off      # or an integer >= 1
      distance_transform: inverse   # inverse | negate
    learner: {ridge: 1.0e-8, tol: 1.0e-8, max_iter: 500}
    normalization_scope: per_project   # per_project | pooled | none
    alpha_objective: test     # test (as published; leaks test labels) | holdout
    output_dir: runs
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from tdselector.corpus import ColumnMapping, Dataset, load_dataset
from tdselector.errors import SchemaError
from tdselector.learner import LearnerParams
from tdselector.selector import SelectorConfig

SCOPES = ("per_project", "pooled", "none")
ALPHA_OBJECTIVES = ("test", "holdout")


@dataclass
class RepositoryConfig:
    repository: str
    mapping: ColumnMapping
    datasets: list[dict]
    base_dir: Path

    @classmethod
    def from_file(cls, path) -> "RepositoryConfig":
        path = Path(path)
        raw = _read_yaml(path)
        for key in ("repository", "metric_columns", "defect_column", "datasets"):
            if key not in raw:
                raise SchemaError(f"repository config {path} lacks '{key}'")
        mapping = ColumnMapping(
            metric_columns=tuple(raw["metric_columns"]),
            defect_column=raw["defect_column"],
            delimiter=raw.get("delimiter", ","),
        )
        return cls(repository=raw["repository"], mapping=mapping,
                   datasets=raw["datasets"], base_dir=path.parent)

    def load(self) -> list[Dataset]:
        loaded = []
        for entry in self.datasets:
            for key in ("project", "version", "path"):
                if key not in entry:
                    raise SchemaError(f"dataset entry {entry} lacks '{key}'")
            loaded.append(load_dataset(
                self.base_dir / entry["path"], self.mapping,
                project=str(entry["project"]), version=str(entry["version"]),
                repository=self.repository,
            ))
        return loaded


@dataclass
class ExperimentConfig:
    repository_config: Path
    targets: list[str] | str = "all"
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    alpha_mode: str | float = "optimize"
    learner: LearnerParams = field(default_factory=LearnerParams)
    normalization_scope: str = "per_project"
    alpha_objective: str = "test"
    output_dir: Path = Path("runs")
    seed: int | None = None

    def __post_init__(self):
        if self.normalization_scope not in SCOPES:
            raise ValueError(
                f"normalization_scope must be one of {SCOPES}"
            )
        if self.alpha_objective not in ALPHA_OBJECTIVES:
            raise ValueError(
                f"alpha_objective must be one of {ALPHA_OBJECTIVES}"
            )
        if isinstance(self.alpha_mode, str):
            if self.alpha_mode != "optimize":
                self.alpha_mode = float(self.alpha_mode)
        if isinstance(self.alpha_mode, float) and not 0 <= self.alpha_mode <= 1:
            raise ValueError("fixed alpha must lie in [0, 1]")

    def snapshot(self) -> dict:
        """JSON-serializable copy of every knob, for the run record."""
        return {
            "repository_config": str(self.repository_config),
            "targets": self.targets,
            "selector": {
                "similarity": self.selector.similarity.value,
                "normalization": self.selector.normalization.value,
                "alpha": self.selector.alpha,
                "k": self.selector.k,
                "bug_threshold": self.selector.bug_threshold,
                "alpha_step": self.selector.alpha_step,
                "distance_transform": self.selector.distance_transform,
                "clip_log": self.selector.clip_log,
            },
            "alpha_mode": self.alpha_mode,
            "learner": {
                "ridge": self.learner.ridge,
                "tol": self.learner.tol,
                "max_iter": self.learner.max_iter,
            },
            "normalization_scope": self.normalization_scope,
            "alpha_objective": self.alpha_objective,
            "seed": self.seed,
        }


def _read_yaml(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path} is not a mapping")
    return raw


def _parse_bug_threshold(value):
    if value in (None, "off", "none", False):
        return None
    return int(value)


def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    raw = _read_yaml(path)
    if "repository_config" not in raw:
        raise SchemaError(f"experiment config {path} lacks 'repository_config'")
    sel = raw.get("selector", {}) or {}
    alpha_mode = sel.get("alpha", "optimize")
    fixed_alpha = 0.5 if alpha_mode == "optimize" else float(alpha_mode)
    selector = SelectorConfig(
        similarity=sel.get("similarity", "euclidean"),
        normalization=sel.get("normalization", "linear"),
        alpha=fixed_alpha,
        k=int(sel.get("k", 10)),
        bug_threshold=_parse_bug_threshold(sel.get("bug_threshold")),
        alpha_step=float(sel.get("alpha_step", 0.1)),
        distance_transform=sel.get("distance_transform", "inverse"),
        clip_log=bool(sel.get("clip_log", False)),
    )
    lrn = raw.get("learner", {}) or {}
    learner = LearnerParams(
        ridge=float(lrn.get("ridge", 1e-8)),
        tol=float(lrn.get("tol", 1e-8)),
        max_iter=int(lrn.get("max_iter", 500)),
    )
    repo_path = Path(raw["repository_config"])
    if not repo_path.is_absolute():
        repo_path = path.parent / repo_path
    return ExperimentConfig(
        repository_config=repo_path,
        targets=raw.get("targets", "all"),
        selector=selector,
        alpha_mode=alpha_mode if alpha_mode == "optimize" else float(alpha_mode),
        learner=learner,
        normalization_scope=raw.get("normalization_scope", "per_project"),
        alpha_objective=raw.get("alpha_objective", "test"),
        output_dir=Path(raw.get("output_dir", "runs")),
        seed=raw.get("seed"),
    )
