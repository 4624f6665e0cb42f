"""Defect datasets: file loading, validation, standardization, M2O splits.

A dataset file is UTF-8 delimiter-separated text with one header row. A
column mapping names the metric columns (in order) and the defect-count
column; unmapped columns are ignored. Instances keep their source row index,
and (dataset_id, row) is the identity used for deduplication downstream --
two instances with equal metric vectors are still distinct instances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from tdselector.errors import (
    DatasetNotFoundError,
    RowParseError,
    SchemaError,
    ValidationError,
)


@dataclass(frozen=True)
class MetricSchema:
    """Ordered metric names shared by every instance of a dataset."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) < 1:
            raise SchemaError("a schema needs at least one metric")
        if any(not n for n in self.names):
            raise SchemaError("metric names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise SchemaError("metric names must be unique")

    @property
    def n(self) -> int:
        return len(self.names)


@dataclass
class Instance:
    """One object-class record: metric vector, defect count, derived label."""

    dataset_id: str
    row: int
    metrics: np.ndarray
    defect_count: int
    label: int = field(init=False)

    def __post_init__(self):
        if self.defect_count < 0:
            raise ValidationError(
                f"negative defect count {self.defect_count} "
                f"({self.dataset_id} row {self.row})"
            )
        self.metrics = np.asarray(self.metrics, dtype=np.float64)
        if not np.all(np.isfinite(self.metrics)):
            raise ValidationError(
                f"non-finite metric value ({self.dataset_id} row {self.row})"
            )
        # defect-free only when the count is exactly zero
        self.label = 1 if self.defect_count > 0 else 0

    @property
    def uid(self) -> str:
        return f"{self.dataset_id}:{self.row}"

    @property
    def sort_key(self) -> tuple[str, int]:
        return (self.dataset_id, self.row)


@dataclass
class Dataset:
    """A named project release with a metric schema and its instances."""

    project: str
    version: str
    repository: str
    schema: MetricSchema
    instances: list[Instance]

    def __post_init__(self):
        if not self.instances:
            raise ValidationError(f"dataset {self.dataset_id} is empty")
        n = self.schema.n
        for inst in self.instances:
            if inst.metrics.shape != (n,):
                raise ValidationError(
                    f"instance {inst.uid} has {inst.metrics.shape[0]} metrics, "
                    f"schema expects {n}"
                )
        uids = [inst.uid for inst in self.instances]
        if len(set(uids)) != len(uids):
            raise ValidationError(f"duplicate instance ids in {self.dataset_id}")

    @property
    def dataset_id(self) -> str:
        return f"{self.project}@{self.version}"

    @property
    def m(self) -> int:
        return len(self.instances)

    @property
    def defect_ratio(self) -> float:
        return sum(i.label for i in self.instances) / self.m

    def metrics_matrix(self) -> np.ndarray:
        return np.vstack([inst.metrics for inst in self.instances])

    def labels(self) -> np.ndarray:
        return np.array([inst.label for inst in self.instances], dtype=np.int64)


@dataclass(frozen=True)
class ColumnMapping:
    """Resolves file columns: metric names in order plus the defect column."""

    metric_columns: tuple[str, ...]
    defect_column: str
    delimiter: str = ","


@dataclass
class CpdpSplit:
    """One target (test) dataset paired with the pooled initial TDS."""

    test_set: Dataset
    initial_tds: list[Instance]
    provenance: list[tuple[str, str]]


def load_dataset(path, mapping: ColumnMapping, *, project: str, version: str,
                 repository: str) -> Dataset:
    """Load one delimiter-separated dataset file.

    Raises SchemaError when a mapped column is missing, RowParseError (with
    the 0-based data row index) on non-numeric cells, and ValidationError on
    negative defect counts. Row order is preserved.
    """
    schema = MetricSchema(tuple(mapping.metric_columns))
    dataset_id = f"{project}@{version}"
    instances = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=mapping.delimiter)
        header = reader.fieldnames or []
        for col in (*mapping.metric_columns, mapping.defect_column):
            if col not in header:
                raise SchemaError(f"column '{col}' missing from {path}")
        for row_idx, record in enumerate(reader):
            metrics = np.empty(schema.n)
            for j, col in enumerate(mapping.metric_columns):
                cell = record[col]
                try:
                    metrics[j] = float(cell)
                except (TypeError, ValueError):
                    raise RowParseError(
                        f"non-numeric value {cell!r} in column '{col}' of {path}",
                        row_idx,
                    ) from None
            cell = record[mapping.defect_column]
            try:
                count = int(float(cell))
            except (TypeError, ValueError):
                raise RowParseError(
                    f"non-numeric defect count {cell!r} in {path}", row_idx
                ) from None
            if count < 0:
                raise ValidationError(
                    f"negative defect count {count} in {path} (row {row_idx})"
                )
            instances.append(
                Instance(dataset_id=dataset_id, row=row_idx,
                         metrics=metrics, defect_count=count)
            )
    if not instances:
        raise ValidationError(f"{path} contains a header but no data rows")
    return Dataset(project=project, version=version, repository=repository,
                   schema=schema, instances=instances)


def _zscore_columns(matrix: np.ndarray) -> np.ndarray:
    """Standardize columns with population std; constant columns map to 0."""
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)  # population (divide by m)
    out = matrix - mean
    nonzero = std > 0
    out[:, nonzero] /= std[nonzero]
    out[:, ~nonzero] = 0.0
    return out


def zscore_normalize(dataset: Dataset) -> Dataset:
    """Z-score each metric over this dataset's own instances.

    Defect counts and labels are untouched. Features with zero variance map
    to 0 so schemas stay aligned across projects.
    """
    standardized = _zscore_columns(dataset.metrics_matrix())
    instances = [
        replace(inst, metrics=standardized[i])
        for i, inst in enumerate(dataset.instances)
    ]
    return replace(dataset, instances=instances)


def build_m2o_split(repository: list[Dataset], target: str) -> CpdpSplit:
    """Pool every non-target project of a repository against one target.

    All releases of the target project are excluded from the pool, whichever
    release serves as the test set. A bare project name picks its newest
    (last-listed) release; 'project@version' pins one explicitly. Schemas
    must agree across the pooled datasets and the target.
    """
    if "@" in target:
        matches = [d for d in repository if d.dataset_id == target]
    else:
        matches = [d for d in repository if d.project == target]
    if not matches:
        known = sorted(d.dataset_id for d in repository)
        raise DatasetNotFoundError(
            f"target '{target}' not in repository (releases: {', '.join(known)})"
        )
    test_set = matches[-1]
    others = [d for d in repository if d.project != test_set.project]
    if not others:
        raise DatasetNotFoundError(
            f"no non-target projects available to pool for '{target}'"
        )
    pool = []
    provenance = []
    for d in others:
        if d.schema != test_set.schema:
            raise SchemaError(
                f"schema mismatch: {d.dataset_id} has {d.schema.n} metrics "
                f"{d.schema.names[:3]}..., target expects {test_set.schema.n}"
            )
        pool.extend(d.instances)
        provenance.append((d.project, d.version))
    return CpdpSplit(test_set=test_set, initial_tds=pool, provenance=provenance)


def zscore_split_pooled(split: CpdpSplit) -> CpdpSplit:
    """Standardize a split with statistics computed over the pooled TDS.

    Alternative to per-project z-scoring: the pool's mean/std are applied to
    both the pool and the test set.
    """
    pool_matrix = np.vstack([inst.metrics for inst in split.initial_tds])
    mean = pool_matrix.mean(axis=0)
    std = pool_matrix.std(axis=0)
    safe = np.where(std > 0, std, 1.0)

    def transform(matrix):
        out = (matrix - mean) / safe
        out[:, std == 0] = 0.0
        return out

    pool_std = transform(pool_matrix)
    pool = [replace(inst, metrics=pool_std[i])
            for i, inst in enumerate(split.initial_tds)]
    test_std = transform(split.test_set.metrics_matrix())
    test_instances = [replace(inst, metrics=test_std[i])
                      for i, inst in enumerate(split.test_set.instances)]
    test_set = replace(split.test_set, instances=test_instances)
    return CpdpSplit(test_set=test_set, initial_tds=pool,
                     provenance=list(split.provenance))


def prepare_split(repository: list[Dataset], target: str,
                  scope: str = "per_project") -> CpdpSplit:
    """Build the M2O split under the configured preprocessing scope.

    scope: 'per_project' z-scores each dataset independently before pooling,
    'pooled' derives statistics from the initial TDS, 'none' keeps raw values.
    """
    if scope == "per_project":
        repository = [zscore_normalize(d) for d in repository]
        return build_m2o_split(repository, target)
    if scope == "pooled":
        return zscore_split_pooled(build_m2o_split(repository, target))
    if scope == "none":
        return build_m2o_split(repository, target)
    raise ValueError(f"unknown normalization scope '{scope}'")
