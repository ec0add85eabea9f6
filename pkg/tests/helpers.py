"""Shared test utilities: independent reference implementations and tree
generators.  Nothing here reuses the production traversal or kernel code
paths; that independence is the point.
"""

from __future__ import annotations

import numpy as np


def children_from_parents(parents) -> list[list[int]]:
    """Plain child lists rebuilt from a parent array."""
    kids: list[list[int]] = [[] for _ in parents]
    for v, p in enumerate(parents):
        if p >= 0:
            kids[p].append(v)
    return kids


def reference_descend(children, levels, pvals):
    """Naive recursive top-down walk, independent of the library's code.

    Tests the root; recurses into the children of every rejected vertex;
    records acceptances as the frontier.
    """
    rejected: set[int] = set()
    frontier: set[int] = set()

    def visit(v: int) -> None:
        if pvals[v] <= levels[v]:
            rejected.add(v)
            for c in children[v]:
                visit(c)
        else:
            frontier.add(v)

    visit(0)
    return rejected, frontier


def normal_cdf_oracle(x: float) -> float:
    """Standard normal CDF via mpmath's arbitrary-precision series."""
    import mpmath

    with mpmath.workdps(40):
        return float(mpmath.ncdf(x))


def uniform_shapes(max_vertices: int) -> list[tuple[int, ...]]:
    """All per-layer branching tuples whose complete tree has at most
    ``max_vertices`` vertices (including the single-vertex tree)."""
    shapes: list[tuple[int, ...]] = [()]

    def extend(prefix: tuple[int, ...], size: int, width: int) -> None:
        b = 1
        while True:
            new_width = width * b
            new_size = size + new_width
            if new_size > max_vertices:
                break
            shapes.append(prefix + (b,))
            extend(prefix + (b,), new_size, new_width)
            b += 1

    extend((), 1, 1)
    return shapes


def random_uniform_shape(rng: np.random.Generator, max_depth: int = 4, max_vertices: int = 120):
    """Random per-layer branching tuple with a vertex cap."""
    depth = int(rng.integers(0, max_depth + 1))
    shape: list[int] = []
    size = width = 1
    for _ in range(depth):
        b = int(rng.integers(1, 4))
        if size + width * b > max_vertices:
            break
        shape.append(b)
        width *= b
        size += width
    return tuple(shape)


def blocks_signal(n: int = 1024) -> np.ndarray:
    """Piecewise-constant fixture whose jumps survive the finest-level
    threshold at sigma = 1 (finest coefficient of a jump h is h/sqrt(2),
    and every jump here is at least 14)."""
    edges = [0, 97, 240, 350, 620, 800, n]
    values = [0.0, 14.0, -4.0, 12.0, -6.0, 8.0]
    x = np.empty(n)
    for lo, hi, val in zip(edges[:-1], edges[1:], values):
        x[lo:hi] = val
    return x


def random_general_parents(
    rng: np.random.Generator, max_depth: int = 3, max_children: int = 3, max_vertices: int = 80
) -> list[int]:
    """Parent array of a random complete tree with per-vertex branching.

    Unlike layer-uniform trees, two vertices at the same depth may have
    different child counts; every leaf still sits at the bottom layer.
    """
    depth = int(rng.integers(0, max_depth + 1))
    parents = [-1]
    layer = [0]
    for _ in range(depth):
        next_layer = []
        for v in layer:
            b = int(rng.integers(1, max_children + 1))
            if len(parents) + b > max_vertices:
                b = 1
            for _ in range(b):
                parents.append(v)
                next_layer.append(len(parents) - 1)
        layer = next_layer
    return parents
