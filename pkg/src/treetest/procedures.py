"""Multiple testing procedures: the tree descent and flat baselines.

``descend`` is the package's core procedure.  Starting at the root it keeps
testing downward along each branch as long as the vertex null is rejected,
stops a branch at the first acceptance, and reports everything rejected so
far.  With a budget-valid level allocation its familywise error is bounded
by the root level, with no assumption on the joint distribution of the
p-values.

``descend_local`` generalizes the walk: each vertex hosts a small local
family of hypotheses tested by a familywise-valid procedure (Holm by
default) at the vertex's level; the walk continues below a vertex only when
its entire local family is rejected.

Flat baselines (``holm``, ``bonferroni``, ``benjamini_hochberg``) and the
per-run error accounting (``error_report``) round out the module.

All functions are pure and reentrant.  Rejection uses the closed comparison
``p <= level`` so boundary ties count as rejections.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .trees import LevelsLike, TestTree, as_levels, level_budget_violations

__all__ = [
    "TreeRejections",
    "ErrorReport",
    "holm",
    "bonferroni",
    "benjamini_hochberg",
    "descend",
    "descend_batch",
    "descend_local",
    "error_report",
]


@dataclass(frozen=True)
class TreeRejections:
    """Outcome of a tree walk.

    ``rejected`` holds the ids whose nulls were rejected; ``frontier`` the
    ids where the walk stopped on an acceptance.  For ``descend`` the
    rejected set is path-closed: a non-root vertex is only ever rejected
    after its parent.
    """

    rejected: frozenset[int]
    frontier: frozenset[int]

    def to_doc(self, metrics: Optional["ErrorReport"] = None) -> dict:
        doc = {
            "rejected": sorted(self.rejected),
            "frontier": sorted(self.frontier),
        }
        if metrics is not None:
            doc["metrics"] = metrics.to_doc()
        return doc


@dataclass(frozen=True)
class ErrorReport:
    """Error accounting for one realized rejection set.

    ``false_rejections`` counts rejected true nulls, ``fdp`` is their share
    among all rejections (0 when nothing is rejected), ``any_false`` flags a
    familywise error, and ``power`` is the fraction of false nulls rejected.
    """

    false_rejections: int
    rejections: int
    fdp: float
    any_false: bool
    power: float

    def to_doc(self) -> dict:
        return {
            "V": self.false_rejections,
            "R": self.rejections,
            "FDP": self.fdp,
            "any_false": int(self.any_false),
            "power": self.power,
        }


# ---------------------------------------------------------------------------
# Flat procedures
# ---------------------------------------------------------------------------


def _checked_pvalues(pvals: Sequence[float]) -> np.ndarray:
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("need a non-empty 1-D list of p-values")
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def holm(pvals: Sequence[float], level: float) -> np.ndarray:
    """Holm's step-down test at familywise level ``level``.

    The i-th smallest p-value is compared against ``level / (m - i + 1)``;
    testing stops at the first failure.  Returns boolean rejection flags in
    input order.  Rejects a superset of ``bonferroni`` on every input.
    """
    p = _checked_pvalues(pvals)
    if not 0.0 < level <= 1.0:
        raise ValueError("level must lie in (0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = level / np.arange(m, 0, -1)
    passed = p[order] <= thresholds
    k = m if passed.all() else int(np.argmin(passed))
    flags = np.zeros(m, dtype=bool)
    flags[order[:k]] = True
    return flags


def bonferroni(pvals: Sequence[float], level: float) -> np.ndarray:
    """Reject every p-value at or below ``level / m``."""
    p = _checked_pvalues(pvals)
    if not 0.0 < level <= 1.0:
        raise ValueError("level must lie in (0, 1]")
    return p <= level / p.size


def benjamini_hochberg(pvals: Sequence[float], q: float) -> np.ndarray:
    """Step-up false-discovery-rate procedure at target rate ``q``.

    Rejects the k smallest p-values where k is the largest index with
    ``p_(k) <= k q / m`` (none when no index qualifies).
    """
    p = _checked_pvalues(pvals)
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    passed = np.nonzero(p[order] <= np.arange(1, m + 1) * q / m)[0]
    k = int(passed[-1]) + 1 if passed.size else 0
    flags = np.zeros(m, dtype=bool)
    flags[order[:k]] = True
    return flags


# ---------------------------------------------------------------------------
# Tree descent
# ---------------------------------------------------------------------------

PValuesLike = Union[Mapping[int, float], Sequence[float], np.ndarray]


def _pvalue_lookup(pvals: PValuesLike, n_vertices: int):
    """Return a getter for per-vertex p-values.

    Mappings may omit vertices the walk never reaches; arrays may mark them
    with NaN.  A missing value at a tested vertex raises.
    """
    if isinstance(pvals, Mapping):
        def get(v: int) -> float:
            if v not in pvals:
                raise ValueError(f"p-value required at tested vertex {v}")
            return float(pvals[v])
    else:
        arr = np.asarray(pvals, dtype=np.float64)
        if arr.shape != (n_vertices,):
            raise ValueError(f"p-value array covers {arr.size} vertices, tree has {n_vertices}")
        def get(v: int) -> float:
            x = float(arr[v])
            if np.isnan(x):
                raise ValueError(f"p-value required at tested vertex {v}")
            return x
    def checked(v: int) -> float:
        x = get(v)
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"p-value at vertex {v} lies outside [0, 1]")
        return x
    return checked


def _require_valid_budget(tree: TestTree, levels: np.ndarray) -> None:
    bad = level_budget_violations(tree, levels)
    if bad.size:
        raise ValueError(f"level budget violated at vertices {bad.tolist()}")


def descend(
    tree: TestTree,
    alloc: LevelsLike,
    pvals: PValuesLike,
    *,
    validate: bool = True,
) -> TreeRejections:
    """Top-down sequential test over a rooted tree.

    A vertex is tested exactly when it is the root or its parent was
    rejected; it is rejected when its p-value is at or below its allocated
    level.  Branches stop at the first acceptance.  Lowering any p-value can
    only enlarge the rejected set.

    Parameters
    ----------
    tree : TestTree
    alloc : AlphaAllocation or array or mapping
        Per-vertex levels; must satisfy the level budget.
    pvals : mapping or array
        Per-vertex p-values.  Vertices the walk never reaches may be
        omitted (mapping) or NaN (array).
    validate : bool
        Set False to skip the budget re-check when the allocation is known
        to be valid.
    """
    levels = as_levels(alloc, tree.n_vertices)
    if validate:
        _require_valid_budget(tree, levels)
    pvalue = _pvalue_lookup(pvals, tree.n_vertices)

    rejected: set[int] = set()
    frontier: set[int] = set()
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        if pvalue(v) <= levels[v]:
            rejected.add(v)
            queue.extend(int(c) for c in tree.children(v))
        else:
            frontier.add(v)
    return TreeRejections(frozenset(rejected), frozenset(frontier))


def descend_batch(
    tree: TestTree,
    alloc: LevelsLike,
    pmatrix: np.ndarray,
    *,
    validate: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``descend`` over many replications at once.

    ``pmatrix`` has shape (replications, n_vertices) and must be fully
    populated.  Returns boolean (rejected, frontier) matrices of the same
    shape; row i agrees exactly with ``descend`` run on row i.
    """
    levels = as_levels(alloc, tree.n_vertices)
    if validate:
        _require_valid_budget(tree, levels)
    P = np.asarray(pmatrix, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != tree.n_vertices:
        raise ValueError("pmatrix must have shape (replications, n_vertices)")
    if validate and not np.all((P >= 0.0) & (P <= 1.0)):
        raise ValueError("p-values must lie in [0, 1]")

    n = tree.n_vertices
    rejected = np.empty(P.shape, dtype=bool)
    frontier = np.empty(P.shape, dtype=bool)
    small = P <= levels  # closed comparison: boundary ties reject
    rejected[:, 0] = small[:, 0]
    frontier[:, 0] = ~small[:, 0]
    for v in range(1, n):
        tested = rejected[:, tree.parent[v]]
        rejected[:, v] = tested & small[:, v]
        frontier[:, v] = tested & ~small[:, v]
    return rejected, frontier


# ---------------------------------------------------------------------------
# Descent over local multiple-testing problems
# ---------------------------------------------------------------------------

_LOCAL_METHODS = {"holm": holm, "bonferroni": bonferroni}


def descend_local(
    tree: TestTree,
    alloc: LevelsLike,
    local_pvals: Mapping[int, Sequence[float]],
    *,
    method: str = "holm",
    hypotheses: str = "children",
    validate: bool = True,
) -> TreeRejections:
    """Tree descent where each vertex hosts a local family of hypotheses.

    At an active vertex ``v`` the local family is tested by a
    familywise-valid procedure at level ``alloc[v]``.  When every member of
    the family is rejected the walk continues at all children; when at least
    one is accepted the walk stops below ``v`` (hypotheses already rejected
    at ``v`` stay rejected).

    Parameters
    ----------
    local_pvals : mapping vertex id -> sequence of p-values
        The local families.  Layout depends on ``hypotheses``:

        ``"children"``
            The family at ``v`` holds one hypothesis per child, in child
            order, and rejected hypotheses are reported under the child ids.
            Leaves host no family.  List lengths must match child counts.
        ``"self"``
            Each vertex's family is its own single hypothesis (one p-value),
            reported under the vertex's id.  With this layout the procedure
            coincides exactly with ``descend``.
    method : "holm" or "bonferroni"
        Local procedure.
    """
    if hypotheses not in ("children", "self"):
        raise ValueError("hypotheses must be 'children' or 'self'")
    try:
        local = _LOCAL_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown local method {method!r}") from None
    levels = as_levels(alloc, tree.n_vertices)
    if validate:
        _require_valid_budget(tree, levels)

    rejected: set[int] = set()
    frontier: set[int] = set()
    queue = deque([tree.root])
    while queue:
        v = queue.popleft()
        kids = tree.children(v)
        if hypotheses == "children":
            if kids.size == 0:
                continue  # leaves host no local family
            if v not in local_pvals:
                raise ValueError(f"local p-values required at active vertex {v}")
            pv = np.asarray(local_pvals[v], dtype=np.float64)
            if pv.shape != (kids.size,):
                raise ValueError(
                    f"vertex {v} has {kids.size} children but {pv.size} local p-values"
                )
            flags = local(pv, float(levels[v]))
            rejected.update(int(kids[i]) for i in np.nonzero(flags)[0])
            if flags.all():
                queue.extend(int(c) for c in kids)
            else:
                frontier.add(v)
        else:
            if v not in local_pvals:
                raise ValueError(f"local p-value required at active vertex {v}")
            pv = np.atleast_1d(np.asarray(local_pvals[v], dtype=np.float64))
            if pv.size != 1:
                raise ValueError(f"'self' layout expects one p-value per vertex, got {pv.size}")
            if local(pv, float(levels[v]))[0]:
                rejected.add(int(v))
                queue.extend(int(c) for c in kids)
            else:
                frontier.add(int(v))
    return TreeRejections(frozenset(rejected), frozenset(frontier))


# ---------------------------------------------------------------------------
# Error accounting
# ---------------------------------------------------------------------------


def error_report(
    rejected: Union[TreeRejections, Iterable[int], np.ndarray],
    truth: Union[Sequence[int], np.ndarray],
) -> ErrorReport:
    """Count false rejections against a truth assignment.

    ``rejected`` may be a ``TreeRejections``, a set of indices, or a boolean
    array aligned with ``truth``; ``truth`` holds 1 where the null is true.
    Power is the fraction of false nulls rejected (1 denominator when there
    are none).
    """
    t = np.asarray(truth)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("truth must be a non-empty 1-D array")
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("truth values must be 0 or 1")
    t = t.astype(bool)

    if isinstance(rejected, TreeRejections):
        idx = rejected.rejected
        flags = np.zeros(t.size, dtype=bool)
        for v in idx:
            if not 0 <= v < t.size:
                raise ValueError(f"rejected id {v} outside the truth index range")
            flags[v] = True
    else:
        arr = np.asarray(rejected)
        if arr.dtype == bool:
            if arr.shape != t.shape:
                raise ValueError("rejection flags and truth must have equal length")
            flags = arr
        else:
            flags = np.zeros(t.size, dtype=bool)
            for v in np.asarray(list(rejected), dtype=np.int64).ravel():
                if not 0 <= v < t.size:
                    raise ValueError(f"rejected id {v} outside the truth index range")
                flags[v] = True

    false_rej = int(np.count_nonzero(flags & t))
    rej = int(np.count_nonzero(flags))
    hits = int(np.count_nonzero(flags & ~t))
    n_false_nulls = int(np.count_nonzero(~t))
    return ErrorReport(
        false_rejections=false_rej,
        rejections=rej,
        fdp=false_rej / max(rej, 1),
        any_false=false_rej >= 1,
        power=hits / max(n_false_nulls, 1),
    )
