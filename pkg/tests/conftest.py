import numpy as np
import pytest

from tdselector.corpus import Dataset, Instance, MetricSchema

# 5-instance worked example: 4 metrics, defect counts (3, 1, 0, 0, 0), and a
# single test vector equidistant (d = 0.5) from rows 0, 1 and 4.
FIG2_POOL = [
    ((0.1, 0.0, 0.5, 0.0), 3),   # I1
    ((0.1, 0.0, 0.0, 0.5), 1),   # I2
    ((0.4, 0.3, 0.0, 0.1), 0),   # I3
    ((0.0, 0.0, 0.4, 0.0), 0),   # I4
    ((0.1, 0.0, 0.0, 0.5), 0),   # I5
]
FIG2_TEST = (0.1, 0.0, 0.5, 0.5)
FIG2_SCHEMA = MetricSchema(("f1", "f2", "f3", "f4"))


def make_dataset(project, rows, version="1.0", repository="TEST",
                 schema=None):
    """rows: iterable of (metric tuple, defect count)."""
    if schema is None:
        n = len(rows[0][0])
        schema = MetricSchema(tuple(f"f{j + 1}" for j in range(n)))
    dataset_id = f"{project}@{version}"
    instances = [
        Instance(dataset_id=dataset_id, row=i, metrics=np.array(m, dtype=float),
                 defect_count=c)
        for i, (m, c) in enumerate(rows)
    ]
    return Dataset(project=project, version=version, repository=repository,
                   schema=schema, instances=instances)


def random_rows(rng, m, n, max_count=5, defect_rate=0.5):
    rows = []
    for _ in range(m):
        metrics = tuple(rng.normal(size=n))
        count = int(rng.integers(1, max_count + 1)) \
            if rng.random() < defect_rate else 0
        rows.append((metrics, count))
    return rows


@pytest.fixture
def fig2_pool():
    return make_dataset("source", FIG2_POOL, schema=FIG2_SCHEMA).instances


@pytest.fixture
def fig2_test_set():
    return make_dataset("target", [(FIG2_TEST, 0)], schema=FIG2_SCHEMA)
