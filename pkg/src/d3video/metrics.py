"""Tie-exact ranking metrics: Average Precision, AUROC, per-subset mAP.

Both metrics depend only on the ordering and tie structure of the scores, so
they are computed in exact integer/rational arithmetic and rounded once on
return. This makes oracle tests exact-equality and keeps results invariant
under any strictly increasing transform of the scores.

AP tie convention: items sorted by descending score; equal scores form one
block whose precision is evaluated at the block end, and every positive in
the block contributes that precision. AUROC is the Mann-Whitney statistic
with half credit for tied (positive, negative) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from typing import Iterable, Sequence

from .errors import UndefinedMetricError

REAL_POOL_TAG = "real"


@dataclass(frozen=True)
class ScoredLabel:
    """One item to rank: higher score = more likely generated (positive)."""

    score: float
    label: int
    subset: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "score", float(self.score))
        object.__setattr__(self, "label", int(self.label))
        if not math.isfinite(self.score):
            raise ValueError(f"score must be finite, got {self.score}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class SubsetMetrics:
    ap: float
    auroc: float
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class EvalReport:
    """Per-subset AP/AUROC plus their unweighted means across subsets."""

    per_subset: dict[str, SubsetMetrics]
    mean_ap: float
    mean_auroc: float
    config_digest: str = ""

    def to_dict(self) -> dict:
        return {
            "per_subset": {
                name: {"ap": m.ap, "auroc": m.auroc, "n_pos": m.n_pos, "n_neg": m.n_neg}
                for name, m in self.per_subset.items()
            },
            "mAP": self.mean_ap,
            "mean_auroc": self.mean_auroc,
            "config_digest": self.config_digest,
        }


def _tie_blocks(items: Iterable[ScoredLabel], *, descending: bool) -> list[tuple[int, int]]:
    """(n_pos, n_neg) per tied-score block, ordered by score."""
    ordered = sorted(items, key=lambda it: it.score, reverse=descending)
    blocks = []
    for _, group in groupby(ordered, key=lambda it: it.score):
        labels = [it.label for it in group]
        blocks.append((sum(labels), len(labels) - sum(labels)))
    return blocks


def average_precision(items: Sequence[ScoredLabel]) -> float:
    """Step-wise AP (no interpolation) with block-end precision for ties."""
    n_pos = sum(it.label for it in items)
    if n_pos == 0:
        raise UndefinedMetricError("average precision needs at least one positive item")
    tp = fp = 0
    ap = Fraction(0)
    for btp, bfp in _tie_blocks(items, descending=True):
        tp += btp
        fp += bfp
        if btp:
            ap += Fraction(btp, n_pos) * Fraction(tp, tp + fp)
    return float(ap)


def auroc(items: Sequence[ScoredLabel]) -> float:
    """Mann-Whitney AUROC: P(pos outranks neg), ties counted half."""
    n_pos = sum(it.label for it in items)
    n_neg = len(items) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUROC needs both classes, got {n_pos} positives and {n_neg} negatives"
        )
    twice_num = 0  # 2*(wins) + (ties), accumulated over ascending-score blocks
    neg_below = 0
    for btp, bfp in _tie_blocks(items, descending=False):
        twice_num += btp * (2 * neg_below + bfp)
        neg_below += bfp
    return twice_num / (2 * n_pos * n_neg)


def evaluate_subsets(
    items: Sequence[ScoredLabel], real_pool_tag: str = REAL_POOL_TAG
) -> EvalReport:
    """Score each generated subset against the shared real pool.

    Items tagged ``real_pool_tag`` form the negative pool for every subset;
    all other tags are generated subsets evaluated independently. Mean AP and
    mean AUROC are unweighted means over subsets.
    """
    pool = [it for it in items if it.subset == real_pool_tag]
    if not pool:
        raise UndefinedMetricError(f"real pool {real_pool_tag!r} is empty")
    if any(it.label != 0 for it in pool):
        raise ValueError(f"real pool {real_pool_tag!r} contains positive-labelled items")
    by_subset: dict[str, list[ScoredLabel]] = {}
    for it in items:
        if it.subset == real_pool_tag:
            continue
        if it.label != 1:
            raise ValueError(f"generated subset {it.subset!r} contains negative-labelled items")
        by_subset.setdefault(it.subset, []).append(it)
    if not by_subset:
        raise UndefinedMetricError("no generated subsets to evaluate")
    per_subset: dict[str, SubsetMetrics] = {}
    for name in sorted(by_subset):
        group = by_subset[name] + pool
        per_subset[name] = SubsetMetrics(
            ap=average_precision(group),
            auroc=auroc(group),
            n_pos=len(by_subset[name]),
            n_neg=len(pool),
        )
    n = len(per_subset)
    return EvalReport(
        per_subset=per_subset,
        mean_ap=sum(m.ap for m in per_subset.values()) / n,
        mean_auroc=sum(m.auroc for m in per_subset.values()) / n,
    )
