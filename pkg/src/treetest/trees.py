"""Rooted complete trees, forests, and per-vertex test-level budgets.

The procedures in this package walk a rooted tree top-down, testing one null
hypothesis per vertex.  Validity of the walk rests on a single structural
condition on the per-vertex test levels: at every internal vertex the
children's levels must sum to at most the vertex's own level (a local
Bonferroni budget).  Under that budget the root level bounds the familywise
error of the whole walk, whatever the joint distribution of the test
statistics.

This module provides the tree and forest containers, level allocations that
satisfy the budget by construction, and the combinatorial helpers the
verification engine is built on: ancestor paths, the set of vertices whose
null is true while every ancestor's null is false (``first_true_vertices``),
and level sums over that set restricted to subtrees.

Vertices are dense integers.  Ids are assigned breadth-first by the
constructors, and every parent id is smaller than its children's ids; trees
are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

__all__ = [
    "LEVEL_SUM_TOL",
    "Vertex",
    "TestTree",
    "Forest",
    "AlphaAllocation",
    "build_complete_tree",
    "uniform_levels",
    "weighted_levels",
    "uniform_forest",
    "level_budget_violations",
    "ancestors",
    "first_true_vertices",
    "subtree_vertices",
    "subtree_alpha_sum",
    "allocation_doc",
    "allocation_from_doc",
    "as_levels",
    "as_truth",
]

# Absolute slack when comparing children's level sums against the parent
# level; absorbs binary-float division residue of the constructors.
LEVEL_SUM_TOL = 1e-12

# Refuse to build trees above this vertex count unless the caller raises it.
DEFAULT_MAX_VERTICES = 10**7


class Vertex(NamedTuple):
    """Read-only view of one tree vertex."""

    id: int
    depth: int
    parent: Optional[int]
    children: tuple[int, ...]


class TestTree:
    """A rooted tree in which every leaf sits at the same depth.

    Parameters
    ----------
    parents : sequence of int
        ``parents[v]`` is the parent id of vertex ``v``; the root is vertex 0
        with parent -1.  Every parent id must be smaller than the child's id.
        Children of a vertex are ordered by id.

    Raises
    ------
    ValueError
        If the parent array does not describe a single rooted tree, or if
        some leaf does not sit at the maximum depth (the procedures require
        every branch to end at the bottom layer).
    """

    __slots__ = ("parent", "depth_of", "_children", "n_vertices", "depth", "_branching")

    __test__ = False  # not a test case, despite the name

    def __init__(self, parents: Sequence[int]):
        parent = np.asarray(parents, dtype=np.int64)
        if parent.ndim != 1 or parent.size == 0:
            raise ValueError("parents must be a non-empty 1-D sequence")
        n = int(parent.size)
        if parent[0] != -1:
            raise ValueError("vertex 0 must be the root (parent -1)")
        if n > 1:
            ids = np.arange(1, n)
            if np.any(parent[1:] < 0) or np.any(parent[1:] >= ids):
                raise ValueError("every non-root parent id must be a smaller vertex id")

        depth_of = np.zeros(n, dtype=np.int64)
        for v in range(1, n):
            depth_of[v] = depth_of[parent[v]] + 1

        children: list[np.ndarray] = [None] * n  # type: ignore[list-item]
        order = np.argsort(parent[1:], kind="stable") + 1 if n > 1 else np.array([], dtype=np.int64)
        counts = np.zeros(n, dtype=np.int64)
        if n > 1:
            np.add.at(counts, parent[1:], 1)
        start = 0
        for v in range(n):
            c = int(counts[v])
            children[v] = order[start : start + c].copy()
            children[v].setflags(write=False)
            start += c

        depth = int(depth_of.max())
        leaf_depths = depth_of[counts == 0]
        if leaf_depths.size and (leaf_depths != depth).any():
            raise ValueError("tree is not complete: every leaf must sit at the bottom layer")

        parent.setflags(write=False)
        depth_of.setflags(write=False)
        self.parent = parent
        self.depth_of = depth_of
        self._children = tuple(children)
        self.n_vertices = n
        self.depth = depth
        self._branching: Optional[tuple[int, ...]] = None

    # -- basic structure ------------------------------------------------

    root = 0

    def children(self, v: int) -> np.ndarray:
        """Ordered child ids of vertex ``v`` (empty for leaves)."""
        return self._children[v]

    def is_leaf(self, v: int) -> bool:
        return self._children[v].size == 0

    @property
    def leaves(self) -> np.ndarray:
        counts = np.fromiter((c.size for c in self._children), dtype=np.int64, count=self.n_vertices)
        out = np.nonzero(counts == 0)[0]
        out.setflags(write=False)
        return out

    def vertex(self, v: int) -> Vertex:
        """Vertex view with id, depth, parent and children."""
        self._check_vertex(v)
        par = None if v == self.root else int(self.parent[v])
        return Vertex(int(v), int(self.depth_of[v]), par, tuple(int(c) for c in self._children[v]))

    def _check_vertex(self, v: int) -> None:
        if not 0 <= int(v) < self.n_vertices:
            raise ValueError(f"unknown vertex id {v!r}")

    def __len__(self) -> int:
        return self.n_vertices

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"TestTree(n_vertices={self.n_vertices}, depth={self.depth})"

    # -- layer-uniform helpers -------------------------------------------

    def layer_branching(self) -> tuple[int, ...]:
        """Per-layer branching factors, if the tree is layer-uniform.

        Raises ``ValueError`` when two vertices at the same depth have
        different child counts (such trees cannot be described by a
        branching list).
        """
        if self._branching is not None:
            return self._branching
        branching = []
        for layer in range(self.depth):
            at_layer = np.nonzero(self.depth_of == layer)[0]
            sizes = {self._children[int(v)].size for v in at_layer}
            if len(sizes) != 1:
                raise ValueError("tree is not layer-uniform")
            branching.append(sizes.pop())
        self._branching = tuple(branching)
        return self._branching


def build_complete_tree(
    branching: Sequence[int],
    depth: Optional[int] = None,
    *,
    max_vertices: int = DEFAULT_MAX_VERTICES,
) -> TestTree:
    """Build the complete tree in which every depth-``l`` vertex has
    ``branching[l]`` children.

    Parameters
    ----------
    branching : sequence of int
        One branching factor (>= 1) per layer above the bottom one.  An
        empty sequence gives the single-vertex tree.
    depth : int, optional
        Expected depth; must equal ``len(branching)`` when given.
    max_vertices : int
        Construction is refused above this vertex count.
    """
    branching = tuple(int(b) for b in branching)
    if depth is None:
        depth = len(branching)
    if depth != len(branching):
        raise ValueError(f"depth {depth} does not match {len(branching)} branching factors")
    if any(b < 1 for b in branching):
        raise ValueError("branching factors must be >= 1")

    total = 1
    width = 1
    for b in branching:
        width *= b
        total += width
        if total > max_vertices:
            raise ValueError(f"tree would exceed {max_vertices} vertices")

    parents = np.empty(total, dtype=np.int64)
    parents[0] = -1
    next_id = 1
    layer_start, layer_width = 0, 1
    for b in branching:
        layer = np.arange(layer_start, layer_start + layer_width)
        parents[next_id : next_id + layer_width * b] = np.repeat(layer, b)
        layer_start = next_id
        layer_width *= b
        next_id += layer_width
    tree = TestTree(parents)
    tree._branching = branching
    return tree


# ---------------------------------------------------------------------------
# Level allocations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlphaAllocation:
    """Per-vertex test levels, indexed by vertex id.

    The array is validated to lie in (0, 1]; whether it satisfies the level
    budget of a particular tree is checked by ``level_budget_violations``.
    """

    levels: np.ndarray

    def __post_init__(self) -> None:
        levels = np.array(self.levels, dtype=np.float64)
        if levels.ndim != 1 or levels.size == 0:
            raise ValueError("levels must be a non-empty 1-D array")
        if not np.all((levels > 0.0) & (levels <= 1.0)):
            raise ValueError("test levels must lie in (0, 1]")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @property
    def root_level(self) -> float:
        return float(self.levels[0])

    def __len__(self) -> int:
        return int(self.levels.size)


LevelsLike = Union[AlphaAllocation, Sequence[float], np.ndarray, Mapping[int, float]]


def as_levels(alloc: LevelsLike, n_vertices: Optional[int] = None) -> np.ndarray:
    """Coerce an allocation (object, array, or id->level mapping) to an array."""
    if isinstance(alloc, AlphaAllocation):
        levels = alloc.levels
    elif isinstance(alloc, Mapping):
        if n_vertices is None:
            n_vertices = len(alloc)
        levels = np.empty(n_vertices, dtype=np.float64)
        for v in range(n_vertices):
            if v not in alloc:
                raise ValueError(f"allocation is missing vertex {v}")
            levels[v] = alloc[v]
    else:
        levels = np.asarray(alloc, dtype=np.float64)
    if n_vertices is not None and levels.size != n_vertices:
        raise ValueError(f"allocation covers {levels.size} vertices, tree has {n_vertices}")
    return levels


def as_truth(tree: TestTree, truth: Union[Sequence[int], np.ndarray, Mapping[int, int]]) -> np.ndarray:
    """Coerce a truth assignment (1 = null true) to an int8 array over vertices."""
    n = tree.n_vertices
    if isinstance(truth, Mapping):
        out = np.empty(n, dtype=np.int8)
        for v in range(n):
            if v not in truth:
                raise ValueError(f"truth assignment is missing vertex {v}")
            out[v] = truth[v]
    else:
        out = np.asarray(truth, dtype=np.int8)
        if out.shape != (n,):
            raise ValueError(f"truth assignment covers {out.size} vertices, tree has {n}")
        out = out.copy()
    if not np.all((out == 0) | (out == 1)):
        raise ValueError("truth values must be 0 or 1")
    return out


def uniform_levels(tree: TestTree, alpha: float) -> AlphaAllocation:
    """Split each vertex's level equally among its children.

    The root gets ``alpha``; every internal vertex passes its own level down
    in equal shares, so the budget holds with equality at every vertex.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    levels = np.empty(tree.n_vertices, dtype=np.float64)
    levels[0] = alpha
    for v in range(tree.n_vertices):
        kids = tree.children(v)
        if kids.size:
            levels[kids] = levels[v] / kids.size
    return AlphaAllocation(levels)


def weighted_levels(
    tree: TestTree,
    alpha: float,
    weights: Union[Sequence[float], np.ndarray, Mapping[int, float]],
) -> AlphaAllocation:
    """Split each vertex's level among its children proportionally to
    positive per-child weights.  With equal weights this reduces to
    ``uniform_levels``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    n = tree.n_vertices
    if isinstance(weights, Mapping):
        w = np.empty(n, dtype=np.float64)
        w[0] = 1.0
        for v in range(1, n):
            if v not in weights:
                raise ValueError(f"weight map is missing vertex {v}")
            w[v] = weights[v]
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (n,):
            raise ValueError(f"weights cover {w.size} vertices, tree has {n}")
    if np.any(w[1:] <= 0.0):
        raise ValueError("weights must be positive")
    levels = np.empty(n, dtype=np.float64)
    levels[0] = alpha
    for v in range(n):
        kids = tree.children(v)
        if kids.size:
            levels[kids] = levels[v] * w[kids] / w[kids].sum()
    return AlphaAllocation(levels)


def level_budget_violations(tree: TestTree, alloc: LevelsLike) -> np.ndarray:
    """Ids of internal vertices whose children's levels sum above their own.

    The comparison allows an absolute slack of ``LEVEL_SUM_TOL``.  An empty
    result means the allocation is admissible for the descent procedures.
    """
    levels = as_levels(alloc, tree.n_vertices)
    bad = [
        v
        for v in range(tree.n_vertices)
        if tree.children(v).size
        and levels[tree.children(v)].sum() > levels[v] + LEVEL_SUM_TOL
    ]
    return np.asarray(bad, dtype=np.int64)


# ---------------------------------------------------------------------------
# Forests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Forest:
    """A collection of rooted trees tested side by side.

    The trees may have different depths.  Each tree is entered at its own
    root level, and the root levels must sum to at most the global level so
    that the familywise guarantee carries over by a union bound across
    roots.
    """

    trees: tuple[TestTree, ...]
    root_levels: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.trees) == 0:
            raise ValueError("forest needs at least one tree")
        if len(self.trees) != len(self.root_levels):
            raise ValueError("one root level per tree is required")
        if any(not 0.0 < a <= 1.0 for a in self.root_levels):
            raise ValueError("root levels must lie in (0, 1]")

    def check_budget(self, alpha: float) -> None:
        if sum(self.root_levels) > alpha + LEVEL_SUM_TOL:
            raise ValueError("forest root levels exceed the global level")


def uniform_forest(trees: Sequence[TestTree], alpha: float) -> Forest:
    """Forest splitting the global level equally across the given trees."""
    trees = tuple(trees)
    if not trees:
        raise ValueError("forest needs at least one tree")
    share = alpha / len(trees)
    return Forest(trees, tuple(share for _ in trees))


# ---------------------------------------------------------------------------
# Combinatorial helpers used by the verification engine
# ---------------------------------------------------------------------------


def ancestors(tree: TestTree, v: int) -> np.ndarray:
    """Vertices strictly above ``v`` on its root path, parent first."""
    tree._check_vertex(v)
    out = []
    v = int(v)
    while v != tree.root:
        v = int(tree.parent[v])
        out.append(v)
    return np.asarray(out, dtype=np.int64)


def first_true_vertices(
    tree: TestTree, truth: Union[Sequence[int], np.ndarray, Mapping[int, int]]
) -> np.ndarray:
    """Vertices whose null is true while every strict ancestor's null is false.

    This is the support set of the union bound behind the familywise
    guarantee: any false rejection of the descent procedure forces a false
    rejection at one of these vertices.  Equals ``{root}`` whenever the
    root's null is true; always an antichain (no member is an ancestor of
    another).
    """
    t = as_truth(tree, truth).astype(bool)
    anc_true = np.zeros(tree.n_vertices, dtype=bool)
    for v in range(1, tree.n_vertices):
        p = tree.parent[v]
        anc_true[v] = anc_true[p] | t[p]
    return np.nonzero(t & ~anc_true)[0]


def subtree_vertices(tree: TestTree, root: int) -> np.ndarray:
    """All vertices of the complete subtree hanging from ``root`` (inclusive)."""
    tree._check_vertex(root)
    out = [int(root)]
    i = 0
    while i < len(out):
        out.extend(int(c) for c in tree.children(out[i]))
        i += 1
    return np.asarray(sorted(out), dtype=np.int64)


def subtree_alpha_sum(
    tree: TestTree,
    alloc: LevelsLike,
    truth: Union[Sequence[int], np.ndarray, Mapping[int, int]],
    subtree_root: int,
) -> float:
    """Total level attached to first-true vertices inside one subtree.

    The descent procedures' validity rests on this sum never exceeding the
    subtree root's own level; the verification engine checks that bound
    exhaustively on small trees.
    """
    levels = as_levels(alloc, tree.n_vertices)
    ft = first_true_vertices(tree, truth)
    sub = subtree_vertices(tree, subtree_root)
    members = np.intersect1d(ft, sub, assume_unique=True)
    return float(levels[members].sum())


# ---------------------------------------------------------------------------
# Serialization (JSON-compatible documents)
# ---------------------------------------------------------------------------


def allocation_doc(tree: TestTree, alloc: LevelsLike) -> dict:
    """JSON-compatible document for a layer-uniform tree and its allocation.

    Layout: ``{"depth", "branching", "alpha_root", "allocation"}`` with the
    per-vertex levels listed in breadth-first id order.
    """
    levels = as_levels(alloc, tree.n_vertices)
    return {
        "depth": tree.depth,
        "branching": list(tree.layer_branching()),
        "alpha_root": float(levels[0]),
        "allocation": [float(x) for x in levels],
    }


def allocation_from_doc(doc: Mapping) -> tuple[TestTree, AlphaAllocation]:
    """Inverse of ``allocation_doc``; validates lengths, not the budget."""
    try:
        branching = [int(b) for b in doc["branching"]]
        depth = int(doc["depth"])
        allocation = [float(x) for x in doc["allocation"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed allocation document: {exc}") from exc
    tree = build_complete_tree(branching, depth)
    if len(allocation) != tree.n_vertices:
        raise ValueError(
            f"allocation lists {len(allocation)} levels, tree has {tree.n_vertices} vertices"
        )
    alloc = AlphaAllocation(np.asarray(allocation))
    if "alpha_root" in doc and abs(float(doc["alpha_root"]) - alloc.root_level) > LEVEL_SUM_TOL:
        raise ValueError("alpha_root disagrees with the allocation's root entry")
    return tree, alloc
