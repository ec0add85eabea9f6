"""Locating time regions with nonzero mean by descent over subdivisions.

A trial matrix holds repeated recordings of a time series whose mean is
hypothesized to be zero everywhere.  The time axis is subdivided into a
complete m-adic tree of intervals; each interval is tested with a Gaussian
grand-mean z-test over all trials and samples it covers, and the tree
descent walks the subdivision: a subinterval is examined only while its
parent shows a significant departure, so the procedure zooms in on
conspicuous regions while the root level bounds the probability of flagging
any truly-null interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .procedures import TreeRejections, descend
from .trees import TestTree, build_complete_tree, uniform_levels

__all__ = [
    "TrialMatrix",
    "IntervalNode",
    "IntervalTree",
    "build_interval_tree",
    "interval_pvalue",
    "interval_pvalues",
    "LocalizeResult",
    "localize",
]


@dataclass(frozen=True)
class TrialMatrix:
    """Stacked trials (rows) by time points (columns) with known noise scale."""

    data: np.ndarray
    sigma: float = 1.0

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("trial data must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(data)):
            raise ValueError("trial data must be finite")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_trials(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_times(self) -> int:
        return int(self.data.shape[1])


@dataclass(frozen=True)
class IntervalNode:
    """One tree vertex with its half-open sample-index interval."""

    vertex: int
    start: int
    end: int
    depth: int

    @property
    def width(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class IntervalTree:
    """Complete m-adic subdivision of [0, T) with one node per vertex."""

    tree: TestTree
    nodes: tuple[IntervalNode, ...]


def build_interval_tree(n_times: int, depth: int, arity: int = 2) -> IntervalTree:
    """Subdivide ``[0, n_times)`` into a complete ``arity``-adic tree.

    Every vertex's interval splits into ``arity`` contiguous near-equal
    parts; when the length is not divisible the leftmost children take the
    remainder (sizes differ by at most one).  Requires
    ``arity**depth <= n_times`` so every leaf interval is nonempty.
    """
    if n_times < 1:
        raise ValueError("n_times must be positive")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if arity < 1:
        raise ValueError("arity must be >= 1")
    if arity**depth > n_times:
        raise ValueError(f"{arity}**{depth} leaf intervals do not fit into {n_times} samples")

    tree = build_complete_tree([arity] * depth)
    spans: list[tuple[int, int]] = [(0, n_times)]
    for v in range(tree.n_vertices):
        start, end = spans[v]
        kids = tree.children(v)
        if kids.size == 0:
            continue
        width = end - start
        base, rem = divmod(width, kids.size)
        cursor = start
        for i in range(kids.size):
            size = base + (1 if i < rem else 0)
            spans.append((cursor, cursor + size))
            cursor += size
    nodes = tuple(
        IntervalNode(v, spans[v][0], spans[v][1], int(tree.depth_of[v]))
        for v in range(tree.n_vertices)
    )
    return IntervalTree(tree, nodes)


def interval_pvalue(trials: TrialMatrix, node: IntervalNode) -> float:
    """Two-sided z-test of zero grand mean over one interval.

    Pools all trials and samples in the interval: with R trials and width
    w the effective sample size is R*w and the z-score is
    ``sum / (sigma * sqrt(R*w))``.
    """
    if not 0 <= node.start < node.end <= trials.n_times:
        raise ValueError(f"interval [{node.start}, {node.end}) is empty or out of range")
    total = float(trials.data[:, node.start : node.end].sum())
    n_eff = trials.n_trials * node.width
    z = total / (trials.sigma * np.sqrt(n_eff))
    return float(2.0 * special.ndtr(-abs(z)))


def interval_pvalues(trials: TrialMatrix, itree: IntervalTree) -> np.ndarray:
    """p-values of every interval node, via prefix sums over time."""
    prefix = np.concatenate(([0.0], np.cumsum(trials.data.sum(axis=0))))
    starts = np.array([nd.start for nd in itree.nodes])
    ends = np.array([nd.end for nd in itree.nodes])
    totals = prefix[ends] - prefix[starts]
    n_eff = trials.n_trials * (ends - starts)
    z = totals / (trials.sigma * np.sqrt(n_eff))
    return 2.0 * special.ndtr(-np.abs(z))


@dataclass(frozen=True)
class LocalizeResult:
    """Intervals flagged by the descent, from coarsest to finest."""

    rejected: tuple[IntervalNode, ...]
    maximal: tuple[IntervalNode, ...]  # deepest rejected node on each path
    frontier: tuple[IntervalNode, ...]
    pvalues: np.ndarray
    levels: np.ndarray

    def to_doc(self) -> dict:
        def row(nd: IntervalNode, decision: Optional[str] = None) -> dict:
            out = {
                "vertex": nd.vertex,
                "start": nd.start,
                "end": nd.end,
                "depth": nd.depth,
                "p_value": float(self.pvalues[nd.vertex]),
                "level": float(self.levels[nd.vertex]),
            }
            if decision is not None:
                out["decision"] = decision
            return out

        tested = sorted(
            [(nd, "rejected") for nd in self.rejected]
            + [(nd, "accepted") for nd in self.frontier],
            key=lambda pair: pair[0].vertex,
        )
        return {
            "intervals": [row(nd, decision) for nd, decision in tested],
            "rejected": [row(nd) for nd in self.rejected],
            "maximal": [row(nd) for nd in self.maximal],
            "frontier": [row(nd) for nd in self.frontier],
        }


def localize(
    trials: TrialMatrix,
    alpha: float,
    depth: int,
    arity: int = 2,
    *,
    itree: Optional[IntervalTree] = None,
) -> LocalizeResult:
    """Run the interval descent and report flagged regions.

    Uses the uniform budget split over the subdivision tree.  ``maximal``
    holds the deepest rejected node of each search path (the localization
    answer); ``frontier`` the intervals where the walk stopped.
    """
    if itree is None:
        itree = build_interval_tree(trials.n_times, depth, arity)
    tree = itree.tree
    alloc = uniform_levels(tree, alpha)
    pvals = interval_pvalues(trials, itree)
    result: TreeRejections = descend(tree, alloc, pvals, validate=False)

    rejected = sorted(result.rejected)
    rejected_set = result.rejected
    maximal = [
        v for v in rejected if not any(int(c) in rejected_set for c in tree.children(v))
    ]
    return LocalizeResult(
        rejected=tuple(itree.nodes[v] for v in rejected),
        maximal=tuple(itree.nodes[v] for v in maximal),
        frontier=tuple(itree.nodes[v] for v in sorted(result.frontier)),
        pvalues=pvals,
        levels=alloc.levels,
    )
