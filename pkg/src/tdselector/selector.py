"""Training-data selection by blended similarity / defect-count scoring.

Each candidate training instance is scored against a test instance as

    score = alpha * sim + (1 - alpha) * N(defect_count)

where N maps the candidate's recorded bug count into [0, 1] (five methods
below). For every test instance the top-k candidates by score are taken with
a tie-inclusive cut (everything tied with the k-th score stays in), then the
per-test picks are unioned and deduplicated by instance identity to form the
final training set. alpha is either fixed or grid-searched against an
end-to-end AUC evaluator. A bug-count threshold variant force-selects heavily
defective instances before the scored stage runs on the remainder.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from tdselector.corpus import CpdpSplit, Dataset, Instance
from tdselector.errors import AlphaSearchError, EmptyPoolError
from tdselector.similarity import (
    DISTANCE_TRANSFORMS,
    SimilarityIndex,
    similarity_matrix,
    similarity_of,
)

log = logging.getLogger(__name__)


class NormalizationMethod(str, enum.Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"
    SQUARE_ROOT = "sqrt"
    LOGARITHMIC = "log"
    INVERSE_COTANGENT = "arctan"


@dataclass(frozen=True)
class NormalizationContext:
    """Min/max defect counts over the candidate pool (Linear needs them)."""

    min: int
    max: int

    @classmethod
    def from_pool(cls, instances) -> "NormalizationContext":
        counts = [inst.defect_count for inst in instances]
        return cls(min=min(counts), max=max(counts))


@dataclass
class SelectorConfig:
    similarity: SimilarityIndex = SimilarityIndex.EUCLIDEAN
    normalization: NormalizationMethod = NormalizationMethod.LINEAR
    alpha: float = 0.5
    k: int = 10
    bug_threshold: int | None = None
    alpha_step: float = 0.1
    distance_transform: str = "inverse"
    clip_log: bool = False

    def __post_init__(self):
        self.similarity = SimilarityIndex(self.similarity)
        self.normalization = NormalizationMethod(self.normalization)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.alpha_step <= 1.0:
            raise ValueError(f"alpha_step must lie in (0, 1], got {self.alpha_step}")
        if self.bug_threshold is not None and self.bug_threshold < 1:
            raise ValueError("bug_threshold must be >= 1 (or None to disable)")
        if self.distance_transform not in DISTANCE_TRANSFORMS:
            raise ValueError(
                f"distance_transform must be one of {DISTANCE_TRANSFORMS}"
            )


@dataclass
class ScoredCandidate:
    instance_ref: str
    sim: float
    norm_defects: float
    score: float


@dataclass
class SelectionResult:
    selected: list[Instance]
    per_test_topk: dict[str, list[str]]
    alpha_used: float
    forced_uids: frozenset[str] = field(default_factory=frozenset)

    @property
    def selected_uids(self) -> tuple[str, ...]:
        return tuple(inst.uid for inst in self.selected)


@dataclass
class AlphaSearchResult:
    alpha: float
    best_auc: float
    trace: list[tuple[float, float]]


def normalize_defect_count(method: NormalizationMethod, x: int,
                           context: NormalizationContext | None = None,
                           clip_log: bool = False) -> float:
    """Map a non-negative bug count to the configured normalized value.

    Linear rescales over the pool's [min, max] (0 when the pool is constant);
    the other four are fixed monotone curves. Logarithmic exceeds 1 for
    counts above 9 and is passed through unless clip_log is set.
    """
    if x < 0:
        raise ValueError(f"defect count must be >= 0, got {x}")
    method = NormalizationMethod(method)
    if method is NormalizationMethod.LINEAR:
        if context is None:
            raise ValueError("linear normalization needs a pool min/max context")
        if context.max == context.min:
            return 0.0
        return (x - context.min) / (context.max - context.min)
    if method is NormalizationMethod.LOGISTIC:
        return 1.0 / (1.0 + math.exp(-x)) - 0.5
    if method is NormalizationMethod.SQUARE_ROOT:
        return 1.0 - 1.0 / math.sqrt(1.0 + x)
    if method is NormalizationMethod.LOGARITHMIC:
        value = math.log10(x + 1.0)
        return min(value, 1.0) if clip_log else value
    # inverse cotangent
    return math.atan(x) * 2.0 / math.pi


def _normalize_counts(method, counts, context, clip_log):
    """Vectorized normalize_defect_count over an integer count array."""
    counts = np.asarray(counts, dtype=np.float64)
    if method is NormalizationMethod.LINEAR:
        if context.max == context.min:
            return np.zeros_like(counts)
        return (counts - context.min) / (context.max - context.min)
    if method is NormalizationMethod.LOGISTIC:
        return 1.0 / (1.0 + np.exp(-counts)) - 0.5
    if method is NormalizationMethod.SQUARE_ROOT:
        return 1.0 - 1.0 / np.sqrt(1.0 + counts)
    if method is NormalizationMethod.LOGARITHMIC:
        values = np.log10(counts + 1.0)
        return np.minimum(values, 1.0) if clip_log else values
    return np.arctan(counts) * 2.0 / np.pi


def score_pair(candidate: Instance, test: Instance, cfg: SelectorConfig,
               context: NormalizationContext | None = None) -> ScoredCandidate:
    """Score one candidate against one test instance."""
    sim = similarity_of(cfg.similarity, candidate.metrics, test.metrics,
                        cfg.distance_transform)
    nd = normalize_defect_count(cfg.normalization, candidate.defect_count,
                                context, cfg.clip_log)
    return ScoredCandidate(
        instance_ref=candidate.uid,
        sim=sim,
        norm_defects=nd,
        score=cfg.alpha * sim + (1.0 - cfg.alpha) * nd,
    )


def canonical_pool(tds):
    """Candidates in (dataset_id, row) order; the deterministic tie order."""
    return sorted(tds, key=lambda inst: inst.sort_key)


def _topk_tie_inclusive(scores_row, k):
    """Indexes of the top-k scores plus everything tied with the k-th.

    Returned in descending score order; ties keep ascending pool (canonical)
    order. Score comparisons are exact, no epsilon.
    """
    m = scores_row.shape[0]
    if k >= m:
        order = np.argsort(-scores_row, kind="stable")
        return order
    kth = np.partition(scores_row, m - k)[m - k]  # k-th largest value
    idx = np.flatnonzero(scores_row >= kth)
    return idx[np.argsort(-scores_row[idx], kind="stable")]


def select_training_set(tds, test_set: Dataset,
                        cfg: SelectorConfig) -> SelectionResult:
    """Rank the pool per test instance, cut at k, union and deduplicate.

    The result is deterministic: candidates are processed in (dataset_id,
    row) order, rank ties keep that order, and the final selection is sorted
    by the same key.
    """
    if not tds:
        raise EmptyPoolError("cannot select from an empty training pool")
    pool = canonical_pool(tds)
    X = np.vstack([inst.metrics for inst in pool])
    T = test_set.metrics_matrix()
    sim = similarity_matrix(cfg.similarity, T, X, cfg.distance_transform)
    return select_from_similarity(pool, test_set, sim, cfg)


def select_from_similarity(pool, test_set: Dataset, sim,
                           cfg: SelectorConfig) -> SelectionResult:
    """Selection given a precomputed (l, m) similarity matrix.

    The experiment harness computes each similarity matrix once per target
    and re-blends it across the alpha grid and normalization methods; this
    entry point must stay equivalent to select_training_set. pool must
    already be in canonical order and column-aligned with sim.
    """
    if not pool:
        raise EmptyPoolError("cannot select from an empty training pool")
    counts = np.array([inst.defect_count for inst in pool])
    context = NormalizationContext(min=int(counts.min()), max=int(counts.max()))
    nd = _normalize_counts(cfg.normalization, counts, context, cfg.clip_log)
    scores = cfg.alpha * sim + (1.0 - cfg.alpha) * nd
    return _select_from_scores(pool, test_set, scores, cfg.k, cfg.alpha)


def _select_from_scores(pool, test_set, scores, k, alpha):
    per_test_topk = {}
    chosen = set()
    for i, test_inst in enumerate(test_set.instances):
        idx = _topk_tie_inclusive(scores[i], k)
        per_test_topk[test_inst.uid] = [pool[j].uid for j in idx]
        chosen.update(idx)
    selected = [pool[j] for j in sorted(chosen)]  # pool is canonical already
    return SelectionResult(selected=selected, per_test_topk=per_test_topk,
                           alpha_used=alpha)


def select_with_bug_threshold(tds, test_set: Dataset,
                              cfg: SelectorConfig) -> SelectionResult:
    """Force-select instances with >= bug_threshold bugs, score the rest.

    The forced set and the scored stage's picks are unioned with duplicates
    removed. If everything crosses the threshold the scored stage has no pool
    and is skipped with a warning.
    """
    threshold = cfg.bug_threshold
    if threshold is None or threshold < 1:
        raise ValueError("select_with_bug_threshold needs bug_threshold >= 1")
    if not tds:
        raise EmptyPoolError("cannot select from an empty training pool")
    forced = [inst for inst in tds if inst.defect_count >= threshold]
    remaining = [inst for inst in tds if inst.defect_count < threshold]
    forced_uids = frozenset(inst.uid for inst in forced)
    if not remaining:
        log.warning(
            "bug threshold %d captured the whole pool (%d instances); "
            "skipping the scored selection stage", threshold, len(forced))
        selected = canonical_pool(forced)
        return SelectionResult(selected=selected, per_test_topk={},
                               alpha_used=cfg.alpha, forced_uids=forced_uids)
    scored = select_training_set(remaining, test_set, cfg)
    return merge_forced(forced, scored)


def merge_forced(forced, scored: SelectionResult) -> SelectionResult:
    """Union the forced subset with a scored selection, dropping duplicates."""
    merged = {inst.uid: inst for inst in forced}
    merged.update({inst.uid: inst for inst in scored.selected})
    selected = sorted(merged.values(), key=lambda inst: inst.sort_key)
    return SelectionResult(selected=selected,
                           per_test_topk=scored.per_test_topk,
                           alpha_used=scored.alpha_used,
                           forced_uids=frozenset(i.uid for i in forced))


def select(tds, test_set: Dataset, cfg: SelectorConfig) -> SelectionResult:
    """Dispatch to the plain or threshold-forcing selection per config."""
    if cfg.bug_threshold is not None:
        return select_with_bug_threshold(tds, test_set, cfg)
    return select_training_set(tds, test_set, cfg)


def alpha_grid(step: float) -> list[float]:
    """The search grid {0, step, ..., 1}; step must evenly divide 1."""
    nsteps = round(1.0 / step)
    if nsteps < 1 or abs(nsteps * step - 1.0) > 1e-9:
        raise ValueError(f"alpha_step {step} does not divide 1 evenly")
    return [i / nsteps for i in range(nsteps + 1)]


def optimize_alpha(tds, test_set: Dataset, cfg: SelectorConfig,
                   evaluate, select_fn=None) -> AlphaSearchResult:
    """Grid-search alpha against an end-to-end AUC evaluator.

    evaluate(selection) must return the AUC of a predictor trained on that
    selection. Returns the first (smallest) alpha attaining the maximum, with
    the full trace in ascending alpha order. select_fn(cfg_at_alpha) may
    replace the stock selection (the harness passes a similarity-caching
    one); it must return exactly what select() would.
    """
    if select_fn is None:
        select_fn = lambda c: select(tds, test_set, c)
    best_alpha = None
    best_auc = -np.inf
    trace = []
    for alpha in alpha_grid(cfg.alpha_step):
        selection = select_fn(replace(cfg, alpha=alpha))
        try:
            auc_value = float(evaluate(selection))
        except Exception as exc:
            raise AlphaSearchError(f"evaluator failed: {exc}", alpha) from exc
        trace.append((alpha, auc_value))
        if auc_value > best_auc:
            best_alpha = alpha
            best_auc = auc_value
    return AlphaSearchResult(alpha=best_alpha, best_auc=best_auc, trace=trace)
