"""Rank-based statistical comparison of methods across datasets.

Methods are ranked per dataset (1 = best, fractional ties), compared
globally with the Friedman test, and pairwise with Wilcoxon signed-rank
tests under Holm's family-wise error correction. Results can be drawn as
a critical-difference diagram where bars join maximal groups of mutually
non-significant methods.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import chi2, rankdata

from .experiments import ScoreMatrix


@dataclass(frozen=True)
class RankTable:
    """Per-dataset fractional ranks of each method, 1 = best."""

    methods: tuple[str, ...]
    datasets: tuple[str, ...]
    ranks: np.ndarray  # (N datasets, L methods)

    @property
    def mean_ranks(self) -> dict[str, float]:
        means = self.ranks.mean(axis=0)
        return {m: float(v) for m, v in zip(self.methods, means)}

    def write_csv(self, path: str | Path) -> None:
        lines = ["dataset," + ",".join(self.methods)]
        for name, row in zip(self.datasets, self.ranks):
            lines.append(name + "," + ",".join(repr(float(v)) for v in row))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def rank_scores(matrix: ScoreMatrix) -> RankTable:
    """Rank methods per series; higher scores get lower (better) ranks."""
    if not matrix.series or not matrix.methods:
        raise ValueError("empty score matrix")
    rows = []
    for series in matrix.series:
        values = [matrix.cells[(series, method)] for method in matrix.methods]
        if any(v is None for v in values):
            raise ValueError(f"series {series!r} has absent cells; filter rows first")
        rows.append(rankdata([-v for v in values], method="average"))
    return RankTable(matrix.methods, matrix.series, np.array(rows, dtype=float))


def friedman(table: RankTable) -> tuple[float, float]:
    """Friedman chi-square over mean ranks and its p-value (L-1 dof)."""
    n, m = table.ranks.shape
    if m < 2 or n < 2:
        raise ValueError("Friedman test needs at least 2 methods and 2 datasets")
    mean_ranks = table.ranks.mean(axis=0)
    stat = 12.0 * n / (m * (m + 1)) * (np.sum(mean_ranks**2) - m * (m + 1) ** 2 / 4.0)
    return float(stat), float(chi2.sf(stat, m - 1))


EXACT_WILCOXON_LIMIT = 25


def wilcoxon_signed_rank(
    a: Sequence[float], b: Sequence[float], zero_method: str = "wilcox"
) -> float:
    """Two-sided paired Wilcoxon signed-rank p-value.

    Zero differences are dropped (``wilcox``) or retained in the ranking
    (``pratt``). Small samples use the exact sign-enumeration null
    distribution; larger ones a normal approximation with tie correction.
    With no nonzero differences the methods are indistinguishable, p = 1.
    """
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    if zero_method not in ("wilcox", "pratt"):
        raise ValueError(f"unknown zero_method {zero_method!r}")
    diffs = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    nonzero = diffs[diffs != 0]
    if nonzero.size == 0:
        return 1.0
    if zero_method == "wilcox":
        ranks = rankdata(np.abs(nonzero), method="average")
        w_plus = float(ranks[nonzero > 0].sum())
        n_zero = 0
    else:
        ranks_all = rankdata(np.abs(diffs), method="average")
        ranks = ranks_all[diffs != 0]
        w_plus = float(ranks[nonzero > 0].sum())
        n_zero = int(np.sum(diffs == 0))
    if nonzero.size <= EXACT_WILCOXON_LIMIT and zero_method == "wilcox":
        return _exact_two_sided(ranks, w_plus)
    return _normal_two_sided(ranks, w_plus, n_zero)


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    # Doubled ranks are integers even with fractional ties, so the null
    # distribution is a polynomial product over {0, 2r} per observation.
    doubled = np.rint(2.0 * ranks).astype(int)
    counts = np.zeros(int(doubled.sum()) + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    total = counts.sum()
    w2 = int(round(2.0 * w_plus))
    p_low = counts[: w2 + 1].sum() / total
    p_high = counts[w2:].sum() / total
    return float(min(1.0, 2.0 * min(p_low, p_high)))


def _normal_two_sided(ranks: np.ndarray, w_plus: float, n_zero: int) -> float:
    n = ranks.size + n_zero
    mu = (n * (n + 1) - n_zero * (n_zero + 1)) / 4.0
    var = (n * (n + 1) * (2 * n + 1) - n_zero * (n_zero + 1) * (2 * n_zero + 1)) / 24.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    if var <= 0:
        return 1.0
    z = (w_plus - mu) / math.sqrt(var)
    return float(math.erfc(abs(z) / math.sqrt(2.0)))


def holm_adjust(p_values: Sequence[float], alpha: float = 0.05) -> list[bool]:
    """Holm step-down rejection flags, in the order of the input p-values."""
    order = sorted(range(len(p_values)), key=lambda i: p_values[i])
    reject = [False] * len(p_values)
    m = len(p_values)
    for step, i in enumerate(order):
        if p_values[i] <= alpha / (m - step):
            reject[i] = True
        else:
            break
    return reject


@dataclass(frozen=True)
class TestReport:
    """Friedman statistic plus Holm-corrected pairwise Wilcoxon decisions."""

    alpha: float
    friedman_chi2: float
    friedman_p: float
    pairs: tuple[tuple[str, str], ...]
    p_values: tuple[float, ...]
    reject: tuple[bool, ...]
    groups: tuple[tuple[str, ...], ...]

    def significantly_different(self, a: str, b: str) -> bool:
        for (x, y), rej in zip(self.pairs, self.reject):
            if {x, y} == {a, b}:
                return rej
        raise KeyError(f"no pair ({a}, {b})")

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "friedman": {"chi2": self.friedman_chi2, "p": self.friedman_p},
            "pairwise": [
                {"a": a, "b": b, "p": p, "significant": rej}
                for (a, b), p, rej in zip(self.pairs, self.p_values, self.reject)
            ],
            "groups": [list(g) for g in self.groups],
        }


def _maximal_cliques(vertices: Sequence[str], edges: set[frozenset]) -> list[tuple[str, ...]]:
    """Bron-Kerbosch with pivoting; output deterministic and sorted."""
    neighbors = {v: {u for u in vertices if u != v and frozenset((u, v)) in edges} for v in vertices}
    cliques: list[tuple[str, ...]] = []

    def expand(r: set, p: set, x: set) -> None:
        if not p and not x:
            cliques.append(tuple(sorted(r)))
            return
        pivot = max(sorted(p | x), key=lambda v: len(neighbors[v] & p))
        for v in sorted(p - neighbors[pivot]):
            expand(r | {v}, p & neighbors[v], x & neighbors[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(vertices), set())
    return sorted(cliques)


def analyze(matrix: ScoreMatrix, alpha: float = 0.05) -> tuple[RankTable, TestReport]:
    """Full pipeline: ranks, Friedman, pairwise Wilcoxon with Holm groups."""
    table = rank_scores(matrix)
    stat, p = friedman(table)
    pairs = list(combinations(matrix.methods, 2))
    p_values = []
    for a, b in pairs:
        scores_a = [matrix.cells[(s, a)] for s in matrix.series]
        scores_b = [matrix.cells[(s, b)] for s in matrix.series]
        p_values.append(wilcoxon_signed_rank(scores_a, scores_b))
    reject = holm_adjust(p_values, alpha)
    non_sig = {
        frozenset(pair) for pair, rej in zip(pairs, reject) if not rej
    }
    groups = _maximal_cliques(matrix.methods, non_sig)
    report = TestReport(
        alpha=alpha,
        friedman_chi2=stat,
        friedman_p=p,
        pairs=tuple(pairs),
        p_values=tuple(p_values),
        reject=tuple(reject),
        groups=tuple(groups),
    )
    return table, report


def cd_diagram(table: RankTable, report: TestReport) -> str:
    """Render mean ranks and non-significance bars as an SVG document.

    The axis runs from rank 1 (best, left) to L; labels stem from the
    axis, alternating above positions between left and right columns;
    bars below the axis join each maximal group of size >= 2.
    """
    methods = sorted(table.methods, key=lambda m: (table.mean_ranks[m], m))
    mean_ranks = table.mean_ranks
    l_methods = len(methods)

    width, margin = 640.0, 60.0
    axis_y = 70.0
    scale = (width - 2 * margin) / max(l_methods - 1, 1)

    def x_of(rank: float) -> float:
        return margin + (rank - 1.0) * scale

    bars = [g for g in report.groups if len(g) > 1]
    bar_gap = 16.0
    label_rows = (l_methods + 1) // 2
    height = axis_y + 30.0 + len(bars) * bar_gap + label_rows * 0 + 60.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" '
        f'font-family="Helvetica, Arial, sans-serif" font-size="11">',
        f'<line x1="{margin}" y1="{axis_y}" x2="{width - margin}" y2="{axis_y}" '
        'stroke="black" stroke-width="1"/>',
    ]
    for tick in range(1, l_methods + 1):
        x = x_of(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{axis_y - 4}" x2="{x:.2f}" y2="{axis_y}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{axis_y - 8}" text-anchor="middle">{tick}</text>'
        )
    # Labels: best half hangs off the left edge, the rest off the right.
    for i, method in enumerate(methods):
        x = x_of(mean_ranks[method])
        left = i < (l_methods + 1) // 2
        label_x = margin - 10 if left else width - margin + 10
        label_y = axis_y + 24 + (i if left else l_methods - 1 - i) * 14
        anchor = "end" if left else "start"
        parts.append(
            f'<line x1="{x:.2f}" y1="{axis_y}" x2="{x:.2f}" y2="{label_y - 4:.2f}" '
            'stroke="black" stroke-width="0.7"/>'
        )
        parts.append(
            f'<line x1="{x:.2f}" y1="{label_y - 4:.2f}" x2="{label_x:.2f}" '
            f'y2="{label_y - 4:.2f}" stroke="black" stroke-width="0.7"/>'
        )
        parts.append(
            f'<text x="{label_x:.2f}" y="{label_y:.2f}" text-anchor="{anchor}">'
            f"{method} ({mean_ranks[method]:.2f})</text>"
        )
    bar_y = axis_y + 24 + ((l_methods + 1) // 2) * 14 + 10
    for i, group in enumerate(sorted(bars, key=lambda g: min(mean_ranks[m] for m in g))):
        lo = min(mean_ranks[m] for m in group)
        hi = max(mean_ranks[m] for m in group)
        y = bar_y + i * bar_gap
        parts.append(
            f'<line x1="{x_of(lo) - 3:.2f}" y1="{y:.2f}" x2="{x_of(hi) + 3:.2f}" '
            f'y2="{y:.2f}" stroke="black" stroke-width="4" stroke-linecap="round"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_report(report: TestReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=1), encoding="utf-8")
