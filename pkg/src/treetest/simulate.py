"""Monte Carlo and exhaustive verification engine.

Two kinds of evidence back the familywise guarantee of the tree descent:

* ``simulate`` estimates FWER / FDR / PCER / power for the descent, its
  local-family variant, and flat baselines under configurable truth
  assignments, effect sizes and dependence structures, with reproducible
  counter-based random streams (replication block ``b`` always draws from
  ``default_rng([seed, b])``, so results are bit-identical for any degree
  of parallelism).

* ``audit_alpha_sums`` exhaustively verifies the combinatorial inequality
  the guarantee rests on: over every truth assignment of every tree shape
  in range, the total level attached to the first-true vertices never
  exceeds the root level.  The level sum depends on an assignment only
  through its first-true set, so the audit enumerates the attainable sums
  per subtree (covering all ``2^|V|`` assignments exactly) and additionally
  re-checks small shapes by literal per-assignment enumeration.

``audit_subtree_sums`` checks the same bound at every subtree root for a
given tree, allocation and truth assignment.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy import special

from .trees import (
    LEVEL_SUM_TOL,
    AlphaAllocation,
    TestTree,
    as_levels,
    as_truth,
    build_complete_tree,
    subtree_alpha_sum,
    uniform_levels,
    weighted_levels,
)

__all__ = [
    "PROCEDURES",
    "BudgetError",
    "SimConfig",
    "SimReport",
    "simulate",
    "compare_procedures",
    "format_comparison",
    "monte_carlo_bound",
    "AlphaSumAudit",
    "audit_alpha_sums",
    "SubtreeAudit",
    "audit_subtree_sums",
]

PROCEDURES = ("descend", "descend_local", "holm_flat", "bonferroni_flat", "bh_flat")

_TRUTH_KINDS = ("global_null", "explicit", "random")
_DEPENDENCE = ("independent", "nested_means")


class BudgetError(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its budget."""


def monte_carlo_bound(alpha: float, n: int, z: float = 3.0) -> float:
    """Upper acceptance bound ``alpha + z * binomial standard error``."""
    return alpha + z * float(np.sqrt(alpha * (1.0 - alpha) / n))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Configuration of one simulation study.

    ``trees`` holds one branching list per tree; a single entry means a
    single tree, several entries a forest whose root levels (uniform split
    of ``alpha`` unless ``root_levels`` is given) must sum to at most
    ``alpha``.

    Truth assignment kinds:

    ``global_null``
        Every null is true.
    ``explicit``
        ``truth_values`` lists 0/1 per vertex across all trees in id order.
    ``random``
        Each vertex is a true null independently with probability
        ``truth_density``, redrawn every replication (all-false draws are
        kept; they contribute no familywise error).

    Under ``nested_means`` dependence each internal vertex's statistic is
    the normalized sum of its descendant leaves' data, so truth settings
    apply to the leaves and internal truth is derived (true null iff every
    descendant leaf is true).
    """

    trees: tuple[tuple[int, ...], ...] = ((),)
    root_levels: Optional[tuple[float, ...]] = None
    allocation: str = "uniform"
    weights: Optional[tuple[float, ...]] = None
    alpha: float = 0.05
    truth: str = "global_null"
    truth_density: float = 0.5
    truth_values: Optional[tuple[int, ...]] = None
    effect: float = 0.0
    dependence: str = "independent"
    replications: int = 10_000
    seed: int = 1729
    block_size: int = 8192

    def __post_init__(self) -> None:
        if not self.trees:
            raise ValueError("at least one tree is required")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.truth not in _TRUTH_KINDS:
            raise ValueError(f"truth must be one of {_TRUTH_KINDS}")
        if self.truth == "explicit" and self.truth_values is None:
            raise ValueError("explicit truth requires truth_values")
        if not 0.0 <= self.truth_density <= 1.0:
            raise ValueError("truth_density must lie in [0, 1]")
        if self.effect < 0.0:
            raise ValueError("effect must be nonnegative")
        if self.dependence not in _DEPENDENCE:
            raise ValueError(f"dependence must be one of {_DEPENDENCE}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.replications > 10**9:
            raise ValueError("replication counter above 10^9 is not supported")
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")
        if self.allocation not in ("uniform", "weighted"):
            raise ValueError("allocation must be 'uniform' or 'weighted'")
        if self.allocation == "weighted":
            if self.weights is None:
                raise ValueError("weighted allocation requires weights")
            if len(self.trees) != 1:
                raise ValueError("weighted allocation supports a single tree only")
        if self.root_levels is not None:
            if len(self.root_levels) != len(self.trees):
                raise ValueError("one root level per tree is required")
            if sum(self.root_levels) > self.alpha + LEVEL_SUM_TOL:
                raise ValueError("root levels exceed the global level")

    @classmethod
    def from_doc(cls, doc: Mapping) -> "SimConfig":
        """Build a configuration from a JSON-compatible document."""
        if not isinstance(doc, Mapping):
            raise ValueError("configuration must be a JSON object")
        known = {
            "tree", "forest", "root_levels", "allocation", "alpha", "truth",
            "effect", "dependence", "replications", "seed", "block_size",
        }
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "forest" in doc:
            kwargs["trees"] = tuple(
                tuple(int(b) for b in entry["branching"]) for entry in doc["forest"]
            )
        elif "tree" in doc:
            kwargs["trees"] = (tuple(int(b) for b in doc["tree"]["branching"]),)
        if "root_levels" in doc:
            kwargs["root_levels"] = tuple(float(x) for x in doc["root_levels"])
        alloc = doc.get("allocation", "uniform")
        if isinstance(alloc, str):
            kwargs["allocation"] = alloc
        else:
            kwargs["allocation"] = str(alloc.get("kind", "uniform"))
            if "weights" in alloc:
                kwargs["weights"] = tuple(float(w) for w in alloc["weights"])
        truth = doc.get("truth", "global_null")
        if isinstance(truth, str):
            kwargs["truth"] = truth
        else:
            kwargs["truth"] = str(truth.get("kind", "global_null"))
            if "density" in truth:
                kwargs["truth_density"] = float(truth["density"])
            if "values" in truth:
                kwargs["truth_values"] = tuple(int(v) for v in truth["values"])
        for key, cast in (
            ("alpha", float),
            ("effect", float),
            ("dependence", str),
            ("replications", int),
            ("seed", int),
            ("block_size", int),
        ):
            if key in doc:
                kwargs[key] = cast(doc[key])
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ValueError(f"malformed configuration: {exc}") from exc

    def to_doc(self) -> dict:
        doc: dict = {
            "alpha": self.alpha,
            "allocation": self.allocation,
            "truth": self.truth,
            "effect": self.effect,
            "dependence": self.dependence,
            "replications": self.replications,
            "seed": self.seed,
            "block_size": self.block_size,
        }
        if len(self.trees) == 1:
            doc["tree"] = {"branching": list(self.trees[0])}
        else:
            doc["forest"] = [{"branching": list(b)} for b in self.trees]
        if self.root_levels is not None:
            doc["root_levels"] = list(self.root_levels)
        if self.weights is not None:
            doc["allocation"] = {"kind": "weighted", "weights": list(self.weights)}
        if self.truth == "random":
            doc["truth"] = {"kind": "random", "density": self.truth_density}
        elif self.truth == "explicit":
            doc["truth"] = {"kind": "explicit", "values": list(self.truth_values or ())}
        return doc


@dataclass
class SimReport:
    """Estimated error rates of one procedure under one configuration.

    ``fwer_hat`` is the fraction of replications with at least one false
    rejection, with its binomial standard error; ``fdr_hat`` and
    ``pcer_hat`` are per-replication averages of the false-discovery
    proportion and of V/m, so both are bounded by ``fwer_hat`` by
    construction (``domination_violations`` counts per-replication
    breaches; it is always 0).
    """

    procedure: str
    replications: int
    alpha: float
    n_hypotheses: int
    fwer_hat: float
    fwer_se: float
    fdr_hat: float
    pcer_hat: float
    power_hat: float
    any_false: int
    rejection_counts: np.ndarray
    domination_violations: int
    elapsed: float
    config: dict

    def to_doc(self) -> dict:
        return {
            "procedure": self.procedure,
            "replications": self.replications,
            "alpha": self.alpha,
            "n_hypotheses": self.n_hypotheses,
            "fwer_hat": self.fwer_hat,
            "fwer_se": self.fwer_se,
            "fdr_hat": self.fdr_hat,
            "pcer_hat": self.pcer_hat,
            "power_hat": self.power_hat,
            "any_false": self.any_false,
            "domination_violations": self.domination_violations,
            "rejection_counts": [int(c) for c in self.rejection_counts],
            "elapsed_seconds": self.elapsed,
            "config": self.config,
        }

    def frequency_rows(self) -> list[tuple[int, int, float]]:
        """(vertex id, rejections, frequency) rows for CSV export."""
        n = self.replications
        return [(v, int(c), int(c) / n) for v, c in enumerate(self.rejection_counts)]


# ---------------------------------------------------------------------------
# Simulation engine
# ---------------------------------------------------------------------------


class _Instance:
    """Precomputed immutable state shared by all replication blocks."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.trees = [build_complete_tree(b) for b in config.trees]
        k = len(self.trees)
        if config.root_levels is not None:
            root_levels = list(config.root_levels)
        else:
            root_levels = [config.alpha / k] * k

        self.levels: list[np.ndarray] = []
        for t, rl in zip(self.trees, root_levels):
            if config.allocation == "weighted":
                alloc = weighted_levels(t, rl, np.asarray(config.weights, dtype=np.float64))
            else:
                alloc = uniform_levels(t, rl)
            self.levels.append(alloc.levels)

        self.offsets = np.cumsum([0] + [t.n_vertices for t in self.trees])
        self.n_vertices = int(self.offsets[-1])
        self.levels_flat = np.concatenate(self.levels)

        self.root_ids = self.offsets[:-1]
        self.leaf_ids = np.concatenate(
            [t.leaves + off for t, off in zip(self.trees, self.offsets)]
        )
        self.n_leaves = self.leaf_ids.size
        self.is_leaf = np.zeros(self.n_vertices, dtype=bool)
        self.is_leaf[self.leaf_ids] = True
        # column of each leaf vertex in the leaf-data matrix
        self.leaf_col = np.full(self.n_vertices, -1, dtype=np.int64)
        self.leaf_col[self.leaf_ids] = np.arange(self.n_leaves)
        self.leaf_counts = self._count_leaves()

        if config.truth == "explicit":
            self.fixed_truth = np.asarray(config.truth_values, dtype=np.int8)
            if self.fixed_truth.shape != (self.n_vertices,):
                raise ValueError(
                    f"truth_values lists {self.fixed_truth.size} vertices, "
                    f"trees have {self.n_vertices}"
                )
            if not np.all((self.fixed_truth == 0) | (self.fixed_truth == 1)):
                raise ValueError("truth values must be 0 or 1")
            if config.dependence == "nested_means":
                self.fixed_truth = self._derive_internal_truth(
                    self.fixed_truth[None, :].astype(bool)
                )[0].astype(np.int8)
        elif config.truth == "global_null":
            self.fixed_truth = np.ones(self.n_vertices, dtype=np.int8)
        else:
            self.fixed_truth = None

    def _count_leaves(self) -> np.ndarray:
        counts = np.zeros(self.n_vertices, dtype=np.int64)
        for tree, off in zip(self.trees, self.offsets):
            for v in range(tree.n_vertices - 1, -1, -1):
                kids = tree.children(v)
                g = off + v
                counts[g] = 1 if kids.size == 0 else counts[off + kids].sum()
        return counts

    def _derive_internal_truth(self, truth: np.ndarray) -> np.ndarray:
        """Internal vertex true iff every descendant leaf true (rows kept)."""
        out = truth.copy()
        for tree, off in zip(self.trees, self.offsets):
            for v in range(tree.n_vertices - 1, -1, -1):
                kids = tree.children(v)
                if kids.size:
                    out[:, off + v] = out[:, off + kids].all(axis=1)
        return out

    # -- per-block work ---------------------------------------------------

    def draw_block(self, block: int, rows: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw (pvalues, truth) matrices for one replication block.

        The stream for block ``b`` is ``default_rng([seed, b])`` and the
        draw order inside a block is fixed (truth first when random, then
        the Gaussian data), so results do not depend on scheduling.
        """
        cfg = self.config
        rng = np.random.default_rng([cfg.seed, block])

        if self.fixed_truth is not None:
            truth = np.broadcast_to(self.fixed_truth.astype(bool), (rows, self.n_vertices))
        elif cfg.dependence == "independent":
            truth = rng.random((rows, self.n_vertices)) < cfg.truth_density
        else:
            leaf_truth = rng.random((rows, self.n_leaves)) < cfg.truth_density
            truth = np.ones((rows, self.n_vertices), dtype=bool)
            truth[:, self.leaf_ids] = leaf_truth
            truth = self._derive_internal_truth(truth)

        if cfg.dependence == "independent":
            z = rng.standard_normal((rows, self.n_vertices))
            if cfg.effect:
                z += cfg.effect * (~truth)
        else:
            y = rng.standard_normal((rows, self.n_leaves))
            if cfg.effect:
                y += cfg.effect * (~truth[:, self.leaf_ids])
            z = np.empty((rows, self.n_vertices))
            for tree, off in zip(self.trees, self.offsets):
                for v in range(tree.n_vertices - 1, -1, -1):
                    kids = tree.children(v)
                    g = off + v
                    if kids.size == 0:
                        z[:, g] = y[:, self.leaf_col[g]]
                    else:
                        z[:, g] = z[:, off + kids].sum(axis=1)
            z /= np.sqrt(self.leaf_counts)

        pvals = 2.0 * special.ndtr(-np.abs(z))
        return pvals, truth

    def run_procedure(self, procedure: str, pvals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(rejected matrix, accounting universe mask) for one procedure."""
        rows = pvals.shape[0]
        if procedure == "descend":
            rejected = np.zeros((rows, self.n_vertices), dtype=bool)
            for tree, off in zip(self.trees, self.offsets):
                small = pvals[:, off : off + tree.n_vertices] <= self.levels_flat[off : off + tree.n_vertices]
                rejected[:, off] = small[:, 0]
                for v in range(1, tree.n_vertices):
                    rejected[:, off + v] = rejected[:, off + tree.parent[v]] & small[:, v]
            universe = np.ones(self.n_vertices, dtype=bool)
        elif procedure == "descend_local":
            rejected = np.zeros((rows, self.n_vertices), dtype=bool)
            for tree, off in zip(self.trees, self.offsets):
                active = np.zeros((rows, tree.n_vertices), dtype=bool)
                active[:, 0] = True
                for v in range(tree.n_vertices):
                    kids = tree.children(v)
                    if kids.size == 0:
                        continue
                    flags, all_rej = _holm_batch(
                        pvals[:, off + kids], float(self.levels_flat[off + v])
                    )
                    live = active[:, v]
                    rejected[:, off + kids] = flags & live[:, None]
                    active[:, kids] = (all_rej & live)[:, None]
            universe = np.ones(self.n_vertices, dtype=bool)
            universe[self.root_ids] = False
        elif procedure in ("holm_flat", "bonferroni_flat", "bh_flat"):
            leaf_p = pvals[:, self.leaf_ids]
            if procedure == "holm_flat":
                flags, _ = _holm_batch(leaf_p, self.config.alpha)
            elif procedure == "bonferroni_flat":
                flags = leaf_p <= self.config.alpha / self.n_leaves
            else:
                flags = _bh_batch(leaf_p, self.config.alpha)
            rejected = np.zeros((rows, self.n_vertices), dtype=bool)
            rejected[:, self.leaf_ids] = flags
            universe = self.is_leaf.copy()
        else:
            raise ValueError(f"unknown procedure {procedure!r}; choose from {PROCEDURES}")
        return rejected, universe

    def accumulate(self, rejected: np.ndarray, truth: np.ndarray, universe: np.ndarray) -> dict:
        m = max(int(universe.sum()), 1)
        rel_truth = truth & universe
        false_rej = (rejected & rel_truth).sum(axis=1)
        n_rej = rejected.sum(axis=1)
        any_false = false_rej >= 1
        fdp = false_rej / np.maximum(n_rej, 1)
        hits = (rejected & ~truth & universe).sum(axis=1)
        n_false = (~truth & universe).sum(axis=1)
        power = hits / np.maximum(n_false, 1)
        dominated = (fdp <= any_false + 1e-12) & (false_rej / m <= any_false + 1e-12)
        return {
            "n": rejected.shape[0],
            "any_false": int(any_false.sum()),
            "fdp_sum": float(fdp.sum()),
            "pcer_sum": float(false_rej.sum()) / m,
            "power_sum": float(power.sum()),
            "reject_counts": rejected.sum(axis=0).astype(np.int64),
            "domination_violations": int((~dominated).sum()),
            "m": m,
        }


def _holm_batch(pmat: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise Holm flags plus an all-rejected indicator per row."""
    rows, m = pmat.shape
    order = np.argsort(pmat, axis=1, kind="stable")
    sorted_p = np.take_along_axis(pmat, order, axis=1)
    passed = sorted_p <= level / np.arange(m, 0, -1)
    all_rej = passed.all(axis=1)
    k = np.where(all_rej, m, np.argmin(passed, axis=1))
    flags_sorted = np.arange(m) < k[:, None]
    flags = np.empty_like(flags_sorted)
    np.put_along_axis(flags, order, flags_sorted, axis=1)
    return flags, all_rej


def _bh_batch(pmat: np.ndarray, q: float) -> np.ndarray:
    """Row-wise step-up false-discovery-rate flags."""
    rows, m = pmat.shape
    order = np.argsort(pmat, axis=1, kind="stable")
    sorted_p = np.take_along_axis(pmat, order, axis=1)
    passed = sorted_p <= np.arange(1, m + 1) * q / m
    any_pass = passed.any(axis=1)
    last = m - 1 - np.argmax(passed[:, ::-1], axis=1)
    k = np.where(any_pass, last + 1, 0)
    flags_sorted = np.arange(m) < k[:, None]
    flags = np.empty_like(flags_sorted)
    np.put_along_axis(flags, order, flags_sorted, axis=1)
    return flags


def _blocks(n: int, size: int) -> list[tuple[int, int]]:
    return [(b, min(size, n - b * size)) for b in range((n + size - 1) // size)]


def compare_procedures(
    config: SimConfig,
    procedures: Sequence[str],
    *,
    threads: int = 1,
) -> list[SimReport]:
    """Run several procedures on identical simulated data.

    Every procedure sees the same per-replication draws, so differences are
    paired; reports come back in the order requested.
    """
    procedures = list(procedures)
    if not procedures:
        raise ValueError("at least one procedure is required")
    for p in procedures:
        if p not in PROCEDURES:
            raise ValueError(f"unknown procedure {p!r}; choose from {PROCEDURES}")
    inst = _Instance(config)
    started = time.perf_counter()

    def run_block(args: tuple[int, int]) -> list[dict]:
        block, rows = args
        pvals, truth = inst.draw_block(block, rows)
        out = []
        for proc in procedures:
            rejected, universe = inst.run_procedure(proc, pvals)
            out.append(inst.accumulate(rejected, truth, universe))
        return out

    blocks = _blocks(config.replications, config.block_size)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(run_block, blocks))
    else:
        partials = [run_block(b) for b in blocks]

    elapsed = time.perf_counter() - started
    reports = []
    for j, proc in enumerate(procedures):
        per_proc = [p[j] for p in partials]  # reduced in block order: deterministic
        n = sum(p["n"] for p in per_proc)
        any_false = sum(p["any_false"] for p in per_proc)
        counts = np.sum([p["reject_counts"] for p in per_proc], axis=0)
        fwer = any_false / n
        report = SimReport(
            procedure=proc,
            replications=n,
            alpha=config.alpha,
            n_hypotheses=per_proc[0]["m"],
            fwer_hat=fwer,
            fwer_se=float(np.sqrt(max(fwer * (1.0 - fwer), 0.0) / n)),
            fdr_hat=sum(p["fdp_sum"] for p in per_proc) / n,
            pcer_hat=sum(p["pcer_sum"] for p in per_proc) / n,
            power_hat=sum(p["power_sum"] for p in per_proc) / n,
            any_false=any_false,
            rejection_counts=counts,
            domination_violations=sum(p["domination_violations"] for p in per_proc),
            elapsed=elapsed,
            config=config.to_doc(),
        )
        if report.fdr_hat > report.fwer_hat + 1e-12 or report.pcer_hat > report.fwer_hat + 1e-12:
            raise RuntimeError("per-replication domination failed; this is a bug")
        reports.append(report)
    return reports


def simulate(config: SimConfig, procedure: str = "descend", *, threads: int = 1) -> SimReport:
    """Monte Carlo error-rate estimate for one procedure (see module docs)."""
    return compare_procedures(config, [procedure], threads=threads)[0]


def format_comparison(reports: Sequence[SimReport]) -> str:
    """Human-readable comparison table, one row per procedure."""
    header = f"{'procedure':<16} {'FWER':>8} {'(se)':>8} {'FDR':>8} {'PCER':>8} {'power':>8}"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(
            f"{r.procedure:<16} {r.fwer_hat:>8.4f} {r.fwer_se:>8.4f} "
            f"{r.fdr_hat:>8.4f} {r.pcer_hat:>8.4f} {r.power_hat:>8.4f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Exhaustive audits
# ---------------------------------------------------------------------------


@dataclass
class AlphaSumAudit:
    """Result of the exhaustive first-true level-sum audit."""

    max_depth: int
    branchings: tuple[int, ...]
    alpha: float
    trees_checked: int
    allocations_per_tree: int
    assignments_covered: int
    cases_checked: int
    literal_trees: int
    max_level_sum: float
    violations: int
    elapsed: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def summary(self) -> str:
        return (
            f"checked {self.cases_checked} cases "
            f"({self.assignments_covered} truth assignments x "
            f"{self.allocations_per_tree} allocations over {self.trees_checked} trees, "
            f"{self.literal_trees} trees re-checked literally); "
            f"max level sum {self.max_level_sum:.12f} vs alpha {self.alpha}; "
            f"violations {self.violations}"
        )


def _attainable_sums_check(
    tree: TestTree, levels: np.ndarray, alpha: float, combine_limit: int
) -> tuple[float, int]:
    """Exhaustively check the level sum over every first-true set.

    The sum attached to a truth assignment depends only on its first-true
    set, and within each subtree the attainable sums are the subtree root's
    own level plus the Minkowski sums of the children's attainable sets.
    Materializing those sets bottom-up (with the final root combination done
    by sorted search) therefore covers every truth assignment exactly.
    Returns (max attainable sum, number of attainable profiles in violation).
    """
    n = tree.n_vertices
    sums: dict[int, np.ndarray] = {}
    for v in range(n - 1, 0, -1):
        kids = tree.children(v)
        if kids.size == 0:
            sums[v] = np.unique(np.array([0.0, levels[v]]))
        else:
            acc = sums[int(kids[0])]
            for c in kids[1:]:
                nxt = sums[int(c)]
                if acc.size * nxt.size > combine_limit:
                    raise BudgetError("attainable-sum enumeration exceeds its budget")
                acc = np.unique(np.add.outer(acc, nxt).ravel())
            sums[v] = np.unique(np.concatenate(([levels[v]], acc)))
            for c in kids:
                del sums[int(c)]

    bound = alpha + LEVEL_SUM_TOL
    root_kids = tree.children(0)
    if root_kids.size == 0:
        values = np.array([0.0, levels[0]])
        return float(values.max()), int((values > bound).sum())

    acc = sums[int(root_kids[0])]
    for c in root_kids[1:-1]:
        nxt = sums[int(c)]
        if acc.size * nxt.size > combine_limit:
            raise BudgetError("attainable-sum enumeration exceeds its budget")
        acc = np.unique(np.add.outer(acc, nxt).ravel())
    if root_kids.size == 1:
        max_sum = float(acc.max())
        violations = int((acc > bound).sum())
    else:
        last = np.sort(sums[int(root_kids[-1])])
        # pair (i, j) violates iff last[j] > bound - acc[i]
        below = np.searchsorted(last, bound - acc, side="right")
        violations = int((last.size - below).sum())
        max_sum = float(acc.max() + last[-1])
    # the remaining profile is the root itself being first-true
    max_sum = max(max_sum, float(levels[0]))
    violations += int(levels[0] > bound)
    return max_sum, violations


def _literal_sums_check(
    tree: TestTree, levels: np.ndarray, alpha: float, chunk: int = 1 << 16
) -> tuple[float, int]:
    """Literal enumeration of all 2^|V| truth assignments (small trees)."""
    n = tree.n_vertices
    total = 1 << n
    shifts = np.arange(n, dtype=np.uint64)
    bound = alpha + LEVEL_SUM_TOL
    max_sum = 0.0
    violations = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        t = ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)
        anc_true = np.zeros_like(t)
        for v in range(1, n):
            p = tree.parent[v]
            anc_true[:, v] = anc_true[:, p] | t[:, p]
        s = (t & ~anc_true) @ levels
        max_sum = max(max_sum, float(s.max()))
        violations += int((s > bound).sum())
    return max_sum, violations


def audit_alpha_sums(
    max_depth: int = 3,
    branchings: Sequence[int] = (2, 3),
    *,
    alpha: float = 0.05,
    n_weighted: int = 10,
    seed: int = 0,
    literal_limit: int = 1 << 20,
    combine_limit: int = 4_000_000,
) -> AlphaSumAudit:
    """Exhaustive audit of the first-true level-sum bound.

    For every complete tree with per-layer branching factors drawn from
    ``branchings`` and depth up to ``max_depth``, and for the uniform plus
    ``n_weighted`` random-weighted budget-tight allocations, verifies that
    the total level over the first-true vertices of EVERY truth assignment
    stays at or below the root level.  Shapes whose assignment count is at
    most ``literal_limit`` are additionally enumerated assignment by
    assignment and the two routes are cross-checked.

    The enumeration budget is ``max_depth <= 3`` with branching factors at
    most 3; larger requests raise ``BudgetError``.
    """
    branchings = tuple(sorted(set(int(b) for b in branchings)))
    if any(b < 1 for b in branchings) or not branchings:
        raise ValueError("branching factors must be >= 1")
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if max_depth > 3 or max(branchings) > 3:
        raise BudgetError("enumeration budget is depth <= 3 with branching factors <= 3")

    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    shapes: list[tuple[int, ...]] = [()]
    for d in range(1, max_depth + 1):
        shapes.extend(itertools.product(branchings, repeat=d))

    trees_checked = 0
    assignments_covered = 0
    literal_trees = 0
    max_sum = 0.0
    violations = 0
    n_allocs = 1 + n_weighted
    for shape in shapes:
        tree = build_complete_tree(shape)
        n = tree.n_vertices
        allocs = [uniform_levels(tree, alpha)]
        for _ in range(n_weighted):
            weights = rng.uniform(0.1, 1.0, size=n)
            allocs.append(weighted_levels(tree, alpha, weights))
        do_literal = (1 << n) <= literal_limit
        for alloc in allocs:
            vmax, vbad = _attainable_sums_check(tree, alloc.levels, alpha, combine_limit)
            max_sum = max(max_sum, vmax)
            violations += vbad
            if do_literal:
                lmax, lbad = _literal_sums_check(tree, alloc.levels, alpha)
                if abs(lmax - vmax) > 1e-9 or (lbad == 0) != (vbad == 0):
                    raise RuntimeError(
                        f"audit cross-check failed on shape {shape}: "
                        f"literal max {lmax} vs profile max {vmax}"
                    )
        trees_checked += 1
        literal_trees += int(do_literal)
        assignments_covered += 1 << n

    return AlphaSumAudit(
        max_depth=max_depth,
        branchings=branchings,
        alpha=alpha,
        trees_checked=trees_checked,
        allocations_per_tree=n_allocs,
        assignments_covered=assignments_covered,
        cases_checked=assignments_covered * n_allocs,
        literal_trees=literal_trees,
        max_level_sum=max_sum,
        violations=violations,
        elapsed=time.perf_counter() - started,
    )


@dataclass
class SubtreeAudit:
    """Per-subtree level-sum check for one tree, allocation and truth."""

    checked: int
    max_sum: float
    violations: tuple[tuple[int, float, float], ...]  # (vertex, sum, level)

    @property
    def passed(self) -> bool:
        return not self.violations


def audit_subtree_sums(
    tree: TestTree,
    alloc: Union[AlphaAllocation, Sequence[float], np.ndarray],
    truth: Union[Sequence[int], np.ndarray, Mapping[int, int]],
) -> SubtreeAudit:
    """Check the first-true level sum against the root level of every subtree."""
    levels = as_levels(alloc, tree.n_vertices)
    t = as_truth(tree, truth)
    bad = []
    max_sum = 0.0
    for v in range(tree.n_vertices):
        s = subtree_alpha_sum(tree, levels, t, v)
        max_sum = max(max_sum, s)
        if s > levels[v] + LEVEL_SUM_TOL:
            bad.append((v, s, float(levels[v])))
    return SubtreeAudit(checked=tree.n_vertices, max_sum=max_sum, violations=tuple(bad))
