"""Result aggregation: effect sizes, growth rates, summary tables.

Cliff's delta counts how often values in one sample exceed the other's,
scaled to [-1, 1]; magnitudes are banded on the conventional thresholds
(0.01 / 0.2 / 0.5 / 0.8). Growth rates are percentages rounded to one
decimal with ties away from zero, matching how result tables are printed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from tdselector.errors import TDSelectorError

EFFECT_SIZE_BANDS = (
    (0.01, "negligible"),
    (0.2, "very small"),
    (0.5, "small"),
    (0.8, "medium"),
    (float("inf"), "large"),
)


def cliffs_delta(xs, ys) -> float:
    """(#{x > y} - #{x < y}) / (|xs| * |ys|) over all cross pairs."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size == 0 or ys.size == 0:
        raise TDSelectorError("cliffs_delta needs non-empty samples")
    diff = np.sign(xs[:, None] - ys[None, :])
    return float(diff.sum()) / (xs.size * ys.size)


def effect_size_band(d: float) -> str:
    """Magnitude label for |d| on the conventional bands."""
    magnitude = abs(d)
    for upper, label in EFFECT_SIZE_BANDS:
        if magnitude < upper:
            return label
    return "large"


def mean_std(values, sample: bool = True) -> tuple[float, float]:
    """Arithmetic mean and standard deviation (sample n-1 by default)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise TDSelectorError("mean_std needs a non-empty list")
    ddof = 1 if (sample and values.size > 1) else 0
    return float(values.mean()), float(values.std(ddof=ddof))


def growth_rate(new_auc: float, baseline_auc: float) -> float:
    """Percent change vs the baseline, one decimal, ties away from zero."""
    if baseline_auc <= 0:
        raise TDSelectorError(
            f"growth rate undefined for baseline {baseline_auc}"
        )
    pct = 100.0 * (new_auc - baseline_auc) / baseline_auc
    return float(Decimal(repr(pct)).quantize(Decimal("0.1"),
                                             rounding=ROUND_HALF_UP))


def growth_or_none(new_auc: float, baseline_auc: float) -> float | None:
    """Table-cell form: non-positive growth is blank (None), not zero."""
    pct = growth_rate(new_auc, baseline_auc)
    return pct if pct > 0 else None


def pairwise_compare(result_sets: dict[str, list[float]]) -> tuple[list[str], np.ndarray]:
    """Cliff's delta matrix across named result sets (antisymmetric, 0 diag)."""
    names = list(result_sets)
    lengths = {len(result_sets[name]) for name in names}
    if len(lengths) > 1:
        raise TDSelectorError(
            f"result sets differ in length: {sorted(lengths)}"
        )
    matrix = np.zeros((len(names), len(names)))
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if i < j:
                d = cliffs_delta(result_sets[a], result_sets[b])
                matrix[i, j] = d
                matrix[j, i] = -d
    return names, matrix


@dataclass
class EvalReport:
    """Per-target AUCs for one configuration, against a baseline run."""

    per_target: dict[str, dict]
    mean: float
    std: float
    growth_vs_baseline: dict[str, float | None]
    cliffs_delta_vs_baseline: float
    mean_growth_of_rates: float = 0.0
    growth_of_means: float = 0.0
    band: str = field(init=False)

    def __post_init__(self):
        if not -1.0 <= self.cliffs_delta_vs_baseline <= 1.0:
            raise TDSelectorError("cliffs delta out of [-1, 1]")
        self.band = effect_size_band(self.cliffs_delta_vs_baseline)


def build_eval_report(per_target: dict[str, dict],
                      baseline_aucs: dict[str, float],
                      sample_std: bool = True) -> EvalReport:
    """Aggregate per-target AUCs and compare against a baseline's.

    The two labeled mean-growth conventions are both reported: the mean of
    per-target growth rates, and the growth of the mean AUC.
    """
    targets = list(per_target)
    aucs = [per_target[t]["auc"] for t in targets]
    base = [baseline_aucs[t] for t in targets]
    mean, std = mean_std(aucs, sample=sample_std)
    base_mean, _ = mean_std(base, sample=sample_std)
    growth = {t: growth_or_none(per_target[t]["auc"], baseline_aucs[t])
              for t in targets}
    rates = [growth_rate(per_target[t]["auc"], baseline_aucs[t])
             for t in targets]
    return EvalReport(
        per_target=per_target,
        mean=mean,
        std=std,
        growth_vs_baseline=growth,
        cliffs_delta_vs_baseline=cliffs_delta(aucs, base),
        mean_growth_of_rates=float(np.mean(rates)),
        growth_of_means=growth_rate(mean, base_mean),
    )
