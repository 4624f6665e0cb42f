"""Synthetic defect repositories for desk-scale experiments.

Generation is fully deterministic for a given seed. Each project draws
metric vectors around its own center, a shared hidden linear boundary
assigns true defectiveness, and observed labels get a configurable flip
noise. Bug counts for defective instances are where the informativeness
knob acts:

    intensity = informativeness * (margin depth of clean positives)
              + (1 - informativeness) * uniform noise
    count     = 1 + Poisson(count_scale * intensity)

At informativeness 0 the count magnitudes carry nothing beyond the label
itself; at 1 a high count marks a correctly-labeled instance deep inside
the defective region, which is exactly the situation where blending counts
into the selection score pays off.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from tdselector.corpus import ColumnMapping, Dataset, Instance, MetricSchema


@dataclass
class SynthSpec:
    n_projects: int = 3
    n_instances: int = 120
    n_metrics: int = 8
    defect_rate: float = 0.3
    informativeness: float = 0.8
    label_noise: float = 0.25
    count_scale: float = 4.0
    project_shift: float = 0.6

    def __post_init__(self):
        if self.n_projects < 2:
            raise ValueError("need at least 2 projects to form a split")
        if self.n_instances < 2 or self.n_metrics < 1:
            raise ValueError("invalid project size or metric count")
        if not 0.0 < self.defect_rate < 1.0:
            raise ValueError("defect_rate must lie in (0, 1)")
        if not 0.0 <= self.informativeness <= 1.0:
            raise ValueError("informativeness must lie in [0, 1]")
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")


def generate_repository(spec: SynthSpec, seed: int) -> list[Dataset]:
    """Deterministically generate one repository of related projects."""
    rng = np.random.default_rng(seed)
    n = spec.n_metrics
    direction = rng.normal(size=n)
    direction /= np.linalg.norm(direction)

    centers = rng.normal(scale=spec.project_shift, size=(spec.n_projects, n))
    features = [
        centers[p] + rng.normal(size=(spec.n_instances, n))
        for p in range(spec.n_projects)
    ]
    latent = [X @ direction for X in features]
    threshold = float(np.quantile(np.concatenate(latent),
                                  1.0 - spec.defect_rate))
    top = float(np.concatenate(latent).max())
    span = max(top - threshold, 1e-9)

    schema = MetricSchema(tuple(f"m{j + 1}" for j in range(n)))
    datasets = []
    for p in range(spec.n_projects):
        project = f"proj{p + 1:02d}"
        dataset_id = f"{project}@1.0"
        s = latent[p]
        true_label = s > threshold
        flip = rng.random(spec.n_instances) < spec.label_noise
        observed = true_label ^ flip
        depth = np.clip((s - threshold) / span, 0.0, 1.0)
        clean_positive = observed & true_label
        noise = rng.random(spec.n_instances)
        intensity = (spec.informativeness * np.where(clean_positive, depth, 0.0)
                     + (1.0 - spec.informativeness) * noise)
        extra = rng.poisson(spec.count_scale * intensity)
        counts = np.where(observed, 1 + extra, 0)
        instances = [
            Instance(dataset_id=dataset_id, row=i,
                     metrics=features[p][i], defect_count=int(counts[i]))
            for i in range(spec.n_instances)
        ]
        datasets.append(Dataset(project=project, version="1.0",
                                repository="SYNTH", schema=schema,
                                instances=instances))
    return datasets


def write_repository(datasets: list[Dataset], out_dir) -> Path:
    """Write datasets as CSV files plus the repository config YAML.

    Returns the config path; loading it back through the corpus loader
    reproduces the in-memory datasets exactly.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema = datasets[0].schema
    entries = []
    for ds in datasets:
        fname = f"{ds.project}-{ds.version}.csv"
        with open(out / fname, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join([*schema.names, "bugs"]) + "\n")
            for inst in ds.instances:
                cells = [repr(float(v)) for v in inst.metrics]
                cells.append(str(inst.defect_count))
                fh.write(",".join(cells) + "\n")
        entries.append({"project": ds.project, "version": ds.version,
                        "path": fname})
    config = {
        "repository": datasets[0].repository,
        "delimiter": ",",
        "defect_column": "bugs",
        "metric_columns": list(schema.names),
        "datasets": entries,
    }
    config_path = out / "repository.yaml"
    with open(config_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config, fh, sort_keys=False)
    return config_path


def default_mapping(schema: MetricSchema) -> ColumnMapping:
    return ColumnMapping(metric_columns=schema.names, defect_column="bugs")
