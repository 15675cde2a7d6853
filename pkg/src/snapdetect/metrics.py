"""Accuracy scoring, trend statistics and empirical complexity counters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

# Classification bands for growth-exponent estimates.  Chosen wide enough
# to tolerate additive constants at desk-scale sizes.
CONSTANT_MAX = 0.3
LINEAR_BAND = (0.7, 1.3)
QUADRATIC_BAND = (1.7, 2.3)


@dataclass
class OpCounters:
    """Work counters accumulated while a detector runs.

    ``stamp_words_sent`` sums payload sizes in machine words over every
    emitted message or broadcast (counted once per emission, not per
    recipient).  ``events_processed`` counts notifications that triggered
    detector work: local occurrences, sends and deliveries.
    """

    clock_updates: int = 0
    stamp_words_sent: int = 0
    pair_checks: int = 0
    events_processed: int = 0

    def merge(self, other: "OpCounters") -> None:
        self.clock_updates += other.clock_updates
        self.stamp_words_sent += other.stamp_words_sent
        self.pair_checks += other.pair_checks
        self.events_processed += other.events_processed


@dataclass(frozen=True)
class OverlapMarginStats:
    """Signed wall-overlap (microseconds) among missed concurrent pairs."""

    min_us: int
    max_us: int
    mean_us: float


@dataclass(frozen=True)
class AccuracyReport:
    recall: float
    precision: float
    true_pairs: int
    detected_pairs: int
    false_negatives: int
    overlap_margin_stats: Optional[OverlapMarginStats] = None


def score(detected, truth, spans: Optional[Mapping] = None) -> AccuracyReport:
    """Score a detector's output against ground truth.

    ``truth`` is either a ``GroundTruth`` (its ``concurrent_pairs`` are
    used) or a plain set of canonical event-id pairs.  Recall over an
    empty truth set, and precision over an empty detection set, are
    defined as 1.  When ``spans`` maps event ids to ``(start_us,
    end_us)``, signed overlap margins of missed pairs are reported.
    """
    true_pairs = getattr(truth, "concurrent_pairs", truth)
    detected = set(detected)
    true_pairs = set(true_pairs)
    hits = detected & true_pairs
    recall = len(hits) / len(true_pairs) if true_pairs else 1.0
    precision = len(hits) / len(detected) if detected else 1.0
    missed = true_pairs - detected
    margins = None
    if spans is not None and missed:
        values = []
        for a, b in missed:
            (sa, ea), (sb, eb) = spans[a], spans[b]
            values.append(min(ea, eb) - max(sa, sb))
        margins = OverlapMarginStats(
            min_us=min(values), max_us=max(values), mean_us=sum(values) / len(values)
        )
    return AccuracyReport(
        recall=recall,
        precision=precision,
        true_pairs=len(true_pairs),
        detected_pairs=len(detected),
        false_negatives=len(missed),
        overlap_margin_stats=margins,
    )


def _average_ranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        # Tied values share the average of their rank positions.
        ranks[order[i : j + 1]] = (i + j) / 2.0
        i = j + 1
    return ranks


def trend(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation of (xs, ys), with average ranks for ties.

    Returns 0.0 when either side is constant (no ordering information),
    so a flat accuracy curve counts as a non-positive trend.
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError(f"need at least 3 points, got {len(xs)}")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    sx = rx.std()
    sy = ry.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


@dataclass(frozen=True)
class ComplexityFit:
    exponent: float
    label: str  # constant | linear | quadratic | indeterminate


def complexity_fit(sizes: Sequence[float], counts: Sequence[float]) -> ComplexityFit:
    """Least-squares slope of log(count) against log(size).

    Classifies the slope as constant (< 0.3), linear (0.7..1.3) or
    quadratic (1.7..2.3); anything else is indeterminate.
    """
    if len(sizes) != len(counts):
        raise ValueError(f"length mismatch: {len(sizes)} vs {len(counts)}")
    if len(sizes) < 3:
        raise ValueError(f"need at least 3 sizes, got {len(sizes)}")
    if any(c <= 0 for c in counts):
        raise ValueError("counts must be positive for a log-log fit")
    if any(s <= 0 for s in sizes):
        raise ValueError("sizes must be positive for a log-log fit")
    slope = float(np.polyfit(np.log(np.asarray(sizes, float)),
                             np.log(np.asarray(counts, float)), 1)[0])
    if abs(slope) < CONSTANT_MAX:
        label = "constant"
    elif LINEAR_BAND[0] <= slope <= LINEAR_BAND[1]:
        label = "linear"
    elif QUADRATIC_BAND[0] <= slope <= QUADRATIC_BAND[1]:
        label = "quadratic"
    else:
        label = "indeterminate"
    return ComplexityFit(exponent=slope, label=label)
