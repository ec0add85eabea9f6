"""
Tree descent basics
===================

Build a small hypothesis tree, spread a test budget over it, and walk it
top-down: keep testing down each branch while nulls are rejected, stop a
branch at the first acceptance.
"""

import numpy as np

from treetest import (
    ancestors,
    build_complete_tree,
    descend,
    error_report,
    first_true_vertices,
    level_budget_violations,
    uniform_levels,
    weighted_levels,
)

# A complete binary tree of depth 2: vertex 0 is the root, 1-2 its children,
# 3-6 the leaves.
tree = build_complete_tree([2, 2])
print("vertices:", tree.n_vertices, "depth:", tree.depth)
print("children of the root:", tree.children(0))
print("ancestors of leaf 5:", ancestors(tree, 5))

# The budget rule: children's test levels sum to at most the parent's.
# The uniform allocation halves the level at every split.
alloc = uniform_levels(tree, alpha=0.05)
print("\nuniform levels:", alloc.levels)
print("budget violations:", level_budget_violations(tree, alloc))

# Weighted splits are fine too, as long as the sums stay within budget.
weighted = weighted_levels(tree, 0.05, np.array([1, 3, 1, 1, 1, 1, 1.0]))
print("weighted levels:", weighted.levels)

# Run the descent on some p-values.  The root and left subtree are strongly
# significant; the right child is not, so nothing below it is ever tested.
pvals = {0: 0.001, 1: 0.004, 2: 0.2, 3: 0.011, 4: 0.6}
result = descend(tree, alloc, pvals)
print("\nrejected:", sorted(result.rejected))
print("stopped at:", sorted(result.frontier))

# Error accounting against a ground truth (1 = null really true).
truth = [0, 0, 1, 0, 1, 1, 1]
print("metrics:", error_report(result, truth).to_doc())

# The familywise guarantee rests on the vertices whose null is true while
# every ancestor's null is false: any false rejection implies a rejection
# at one of them, and their levels sum to at most the root level.
print("\nfirst-true vertices for that truth:", first_true_vertices(tree, truth))
levels_there = alloc.levels[first_true_vertices(tree, truth)]
print("their level sum:", levels_there.sum(), "<= 0.05")
