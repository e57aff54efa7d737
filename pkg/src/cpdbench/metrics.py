"""Evaluation metrics against multiple ground-truth annotations.

Two complementary views of detection quality: the segmentation covering
metric (clustering view) and margin-based precision/recall/F-measure
(classification view). Both accept several annotators per series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .data import ChangePoints, Partition, partition_length, to_partition

DEFAULT_MARGIN = 5


@dataclass(frozen=True)
class MetricConfig:
    """Margin of error (time steps) and the beta of the F-measure."""

    margin: int = DEFAULT_MARGIN
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f_beta: float


def f_beta_score(precision: float, recall: float, beta: float = 1.0) -> float:
    """Combine precision and recall; 0 when both are 0."""
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    return (1.0 + b2) * precision * recall / (b2 * precision + recall)


def jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    """Intersection over union of two index sets; 0 when both are empty."""
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


def covering(gt: Partition, pred: Partition) -> float:
    """Weighted best-overlap score of ``gt`` by ``pred``.

    Every ground-truth segment contributes its length times the best
    Jaccard overlap with any predicted segment, normalized by T.
    """
    t = partition_length(gt)
    if partition_length(pred) != t:
        raise ValueError(f"partitions cover different ranges: {t} vs {partition_length(pred)}")
    total = 0.0
    for a, b in gt:
        size = b - a + 1
        best = 0.0
        for a2, b2 in pred:
            inter = min(b, b2) - max(a, a2) + 1
            if inter <= 0:
                continue
            union = size + (b2 - a2 + 1) - inter
            best = max(best, inter / union)
        total += size * best
    return total / t


def covering_multi(gts: Sequence[Partition], pred: Partition) -> float:
    """Mean covering of ``pred`` against each ground-truth partition."""
    if not gts:
        raise ValueError("need at least one ground-truth partition")
    return sum(covering(gt, pred) for gt in gts) / len(gts)


def true_positives(gt: Iterable[int], detections: Iterable[int], margin: int) -> ChangePoints:
    """Ground-truth locations matched one-to-one to detections within ``margin``.

    Matching is a maximum bipartite matching, so no detection is counted
    twice and the number of matches does not depend on scan order. Only
    the cardinality of the result is canonical; when several maximum
    matchings exist the identity of matched elements is unspecified.
    """
    gts = sorted(set(gt))
    dets = sorted(set(detections))
    adjacency = [
        [j for j, x in enumerate(dets) if abs(t - x) <= margin] for t in gts
    ]
    owner = [-1] * len(dets)  # detection j -> gt index

    def augment(i: int, seen: list[bool]) -> bool:
        for j in adjacency[i]:
            if not seen[j]:
                seen[j] = True
                if owner[j] < 0 or augment(owner[j], seen):
                    owner[j] = i
                    return True
        return False

    for i in range(len(gts)):
        augment(i, [False] * len(dets))
    matched = sorted({owner[j] for j in range(len(dets)) if owner[j] >= 0})
    return tuple(gts[i] for i in matched)


def f_measure(
    annotations: Sequence[Iterable[int]],
    detections: Iterable[int],
    cfg: MetricConfig = MetricConfig(),
) -> PRF:
    """Precision/recall/F against one set of annotations per annotator.

    t = 1 is added to every annotation set and to the detections as a
    trivial change point, so empty sets still yield defined scores.
    Precision is computed against the union of all annotations; recall is
    macro-averaged over annotators so no single annotator dominates.
    """
    if len(annotations) == 0:
        raise ValueError("need at least one annotator")
    ann = [tuple(sorted(set(a) | {1})) for a in annotations]
    det = tuple(sorted(set(detections) | {1}))
    union = tuple(sorted(set().union(*ann)))
    precision = len(true_positives(union, det, cfg.margin)) / len(det)
    recall = sum(
        len(true_positives(a, det, cfg.margin)) / len(a) for a in ann
    ) / len(ann)
    return PRF(precision, recall, f_beta_score(precision, recall, cfg.beta))


def ovr_agreement(
    annotations: Mapping[str, ChangePoints],
    n_obs: int,
    metric: str = "cover",
    cfg: MetricConfig = MetricConfig(),
) -> tuple[dict[str, float], float]:
    """One-vs-rest agreement: each annotator scored against the others.

    Returns per-annotator scores (annotator treated as the detection, the
    remaining annotators as ground truth) plus their mean.
    """
    if len(annotations) < 2:
        raise ValueError("one-vs-rest agreement needs at least 2 annotators")
    if metric not in ("cover", "f1"):
        raise ValueError(f"unknown metric {metric!r}")
    scores: dict[str, float] = {}
    ids = sorted(annotations)
    for k in ids:
        rest = [annotations[other] for other in ids if other != k]
        if metric == "cover":
            pred = to_partition(annotations[k], n_obs)
            scores[k] = covering_multi([to_partition(r, n_obs) for r in rest], pred)
        else:
            scores[k] = f_measure(rest, annotations[k], cfg).f_beta
    return scores, sum(scores.values()) / len(scores)
