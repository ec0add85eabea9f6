"""Monte Carlo engine and the exhaustive audits."""

import numpy as np
import pytest

from treetest import (
    BudgetError,
    SimConfig,
    audit_alpha_sums,
    audit_subtree_sums,
    build_complete_tree,
    compare_procedures,
    monte_carlo_bound,
    simulate,
    uniform_levels,
    format_comparison,
)
from treetest.simulate import (
    _attainable_sums_check,
    _bh_batch,
    _holm_batch,
    _Instance,
    _literal_sums_check,
)

from helpers import random_general_parents


class TestSimConfig:
    def test_doc_round_trip(self):
        cfg = SimConfig(
            trees=((2, 2), (3,)),
            alpha=0.1,
            truth="random",
            truth_density=0.3,
            effect=2.0,
            dependence="nested_means",
            replications=500,
            seed=7,
        )
        assert SimConfig.from_doc(cfg.to_doc()) == cfg

    def test_doc_round_trip_explicit(self):
        cfg = SimConfig(
            trees=((2,),),
            allocation="weighted",
            weights=(1.0, 3.0, 1.0),
            truth="explicit",
            truth_values=(1, 0, 1),
        )
        assert SimConfig.from_doc(cfg.to_doc()) == cfg

    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(alpha=1.5)
        with pytest.raises(ValueError):
            SimConfig(replications=0)
        with pytest.raises(ValueError):
            SimConfig(truth="explicit")
        with pytest.raises(ValueError):
            SimConfig(dependence="equicorrelated")
        with pytest.raises(ValueError):
            SimConfig(allocation="weighted")
        with pytest.raises(ValueError):
            SimConfig(trees=((2,), (2,)), root_levels=(0.04, 0.04), alpha=0.05)

    def test_malformed_doc(self):
        with pytest.raises(ValueError):
            SimConfig.from_doc({"alpha": "x"})
        with pytest.raises(ValueError):
            SimConfig.from_doc({"frobnicate": 1})


class TestSimulate:
    def test_depth_zero_exact_level(self):
        cfg = SimConfig(trees=((),), alpha=0.05, replications=100_000, seed=1)
        rep = simulate(cfg)
        se = np.sqrt(0.05 * 0.95 / cfg.replications)
        assert abs(rep.fwer_hat - 0.05) <= 3 * se
        assert rep.n_hypotheses == 1

    def test_global_null_bound(self):
        cfg = SimConfig(trees=((2, 2, 2),), alpha=0.05, replications=30_000, seed=2)
        rep = simulate(cfg)
        assert rep.fwer_hat <= monte_carlo_bound(0.05, cfg.replications)

    def test_all_false_truth_never_errs(self):
        cfg = SimConfig(
            trees=((2, 2),),
            truth="explicit",
            truth_values=tuple([0] * 7),
            effect=0.0,
            replications=5_000,
            seed=3,
        )
        rep = simulate(cfg)
        assert rep.fwer_hat == 0.0 and rep.any_false == 0

    def test_domination_in_every_report(self):
        configs = [
            SimConfig(trees=((2, 2),), truth="random", truth_density=0.5, effect=2.0,
                      replications=4_000, seed=4),
            SimConfig(trees=((3, 2),), truth="random", truth_density=0.3, effect=1.0,
                      replications=4_000, seed=5, dependence="nested_means"),
        ]
        for cfg in configs:
            for proc in ("descend", "descend_local", "holm_flat", "bonferroni_flat", "bh_flat"):
                rep = simulate(cfg, proc)
                assert rep.domination_violations == 0
                assert rep.fdr_hat <= rep.fwer_hat + 1e-12
                assert rep.pcer_hat <= rep.fwer_hat + 1e-12
                assert 0.0 <= rep.power_hat <= 1.0

    def test_deterministic_given_seed(self):
        cfg = SimConfig(trees=((2, 2),), truth="random", effect=1.5, replications=9_000, seed=6)
        a, b = simulate(cfg), simulate(cfg)
        assert a.any_false == b.any_false
        assert np.array_equal(a.rejection_counts, b.rejection_counts)
        assert a.fdr_hat == b.fdr_hat

    def test_thread_count_does_not_change_results(self):
        cfg = SimConfig(trees=((2, 2, 2),), truth="random", effect=2.0,
                        replications=20_000, seed=7, block_size=2048)
        serial = simulate(cfg, threads=1)
        threaded = simulate(cfg, threads=4)
        assert serial.any_false == threaded.any_false
        assert np.array_equal(serial.rejection_counts, threaded.rejection_counts)
        assert serial.fdr_hat == threaded.fdr_hat
        assert serial.power_hat == threaded.power_hat

    def test_nested_means_global_null_bound(self):
        cfg = SimConfig(trees=((2, 2, 2),), replications=30_000, seed=8,
                        dependence="nested_means")
        rep = simulate(cfg)
        assert rep.fwer_hat <= monte_carlo_bound(0.05, cfg.replications)

    def test_forest_runs_and_respects_bound(self):
        cfg = SimConfig(trees=((2, 2), (3,)), replications=20_000, seed=9)
        rep = simulate(cfg)
        assert rep.fwer_hat <= monte_carlo_bound(0.05, cfg.replications)
        assert rep.rejection_counts.size == 7 + 4

    def test_effect_increases_power(self):
        base = dict(trees=((2, 2),), truth="explicit",
                    truth_values=(0, 0, 1, 0, 0, 1, 1), replications=5_000, seed=10)
        weak = simulate(SimConfig(effect=1.0, **base))
        strong = simulate(SimConfig(effect=4.0, **base))
        assert strong.power_hat > weak.power_hat

    def test_extended_bound_mixed_truth(self):
        # one all-false root-to-leaf path, everything else a true null
        truth = [1] * 15
        for v in (0, 1, 3, 7):
            truth[v] = 0
        cfg = SimConfig(trees=((2, 2, 2),), truth="explicit", truth_values=tuple(truth),
                        effect=3.0, replications=20_000, seed=11)
        rep = simulate(cfg, "descend_local")
        assert rep.fwer_hat <= monte_carlo_bound(0.05, cfg.replications)
        assert rep.n_hypotheses == 14  # root hosts no single hypothesis

    def test_unknown_procedure(self):
        with pytest.raises(ValueError, match="unknown procedure"):
            simulate(SimConfig(replications=10), "step_up")


class TestCompare:
    def test_paired_holm_dominates_bonferroni(self):
        cfg = SimConfig(trees=((2, 2, 2),), truth="random", truth_density=0.4,
                        effect=2.5, replications=8_000, seed=12)
        reports = compare_procedures(cfg, ["holm_flat", "bonferroni_flat"])
        h, b = reports
        assert h.power_hat >= b.power_hat
        assert np.all(h.rejection_counts >= b.rejection_counts)

    def test_single_row_table(self):
        cfg = SimConfig(trees=((2,),), replications=2_000, seed=13)
        reports = compare_procedures(cfg, ["descend"])
        table = format_comparison(reports)
        assert "descend" in table and len(table.splitlines()) == 3

    def test_empty_procedure_list(self):
        with pytest.raises(ValueError, match="at least one"):
            compare_procedures(SimConfig(replications=10), [])

    def test_global_null_all_bounded(self):
        cfg = SimConfig(trees=((2, 2),), replications=20_000, seed=14)
        for rep in compare_procedures(cfg, list(("descend", "holm_flat", "bh_flat"))):
            assert rep.fwer_hat <= monte_carlo_bound(0.05, cfg.replications)


class TestVectorizedKernels:
    """The row-wise kernels must agree exactly with the scalar procedures."""

    def test_holm_batch_matches_scalar(self):
        from treetest import holm

        rng = np.random.default_rng(30)
        for m in (1, 2, 5, 9):
            P = rng.random((200, m))
            P[rng.random(P.shape) < 0.05] = 0.05 / m  # boundary ties
            flags, all_rej = _holm_batch(P, 0.05)
            for i in range(P.shape[0]):
                want = holm(P[i], 0.05)
                assert np.array_equal(flags[i], want)
                assert all_rej[i] == want.all()

    def test_bh_batch_matches_scalar(self):
        from treetest import benjamini_hochberg

        rng = np.random.default_rng(31)
        for m in (1, 3, 8):
            P = rng.random((200, m))
            flags = _bh_batch(P, 0.1)
            for i in range(P.shape[0]):
                assert np.array_equal(flags[i], benjamini_hochberg(P[i], 0.1))

    def test_batched_local_descent_matches_scalar(self):
        from treetest import descend_local, uniform_levels as ul

        rng = np.random.default_rng(32)
        cfg = SimConfig(trees=((3, 2),), alpha=0.1, replications=10, seed=0)
        inst = _Instance(cfg)
        tree = inst.trees[0]
        alloc = ul(tree, 0.1)
        P = rng.random((100, tree.n_vertices))
        rejected, universe = inst.run_procedure("descend_local", P)
        assert not universe[0]  # the root hosts no single hypothesis
        for i in range(P.shape[0]):
            families = {
                v: P[i, tree.children(v)]
                for v in range(tree.n_vertices)
                if tree.children(v).size
            }
            want = descend_local(tree, alloc, families)
            assert set(np.nonzero(rejected[i])[0].tolist()) == set(want.rejected)

    def test_nested_statistics_aggregate_leaves(self):
        cfg = SimConfig(
            trees=((2, 2),), replications=8, seed=5, dependence="nested_means", effect=0.0
        )
        inst = _Instance(cfg)
        pvals, _ = inst.draw_block(0, 8)
        # rebuild the leaf draws from the same stream and aggregate by hand
        rng = np.random.default_rng([cfg.seed, 0])
        y = rng.standard_normal((8, 4))
        z_root = y.sum(axis=1) / 2.0
        z_internal = y[:, :2].sum(axis=1) / np.sqrt(2.0)
        from scipy import special

        assert np.allclose(pvals[:, 0], 2 * special.ndtr(-np.abs(z_root)), atol=1e-12)
        assert np.allclose(pvals[:, 1], 2 * special.ndtr(-np.abs(z_internal)), atol=1e-12)
        assert np.allclose(pvals[:, 3], 2 * special.ndtr(-np.abs(y[:, 0])), atol=1e-12)

    def test_nested_truth_derived_from_leaves(self):
        cfg = SimConfig(
            trees=((2, 2),),
            truth="random",
            truth_density=0.5,
            replications=64,
            seed=6,
            dependence="nested_means",
        )
        inst = _Instance(cfg)
        _, truth = inst.draw_block(0, 64)
        for row in truth:
            assert row[1] == (row[3] and row[4])
            assert row[2] == (row[5] and row[6])
            assert row[0] == (row[1] and row[2])


class TestAuditAlphaSums:
    def test_depth_one_binary(self):
        audit = audit_alpha_sums(1, (2,))
        # shapes () and (2,): 2 + 8 truth assignments
        assert audit.trees_checked == 2
        assert audit.assignments_covered == 2 + 8
        assert audit.max_level_sum == pytest.approx(0.05, abs=1e-12)
        assert audit.passed

    def test_depth_two_binary_counts(self):
        audit = audit_alpha_sums(2, (2,))
        assert audit.assignments_covered == 2 + 8 + 128
        assert audit.cases_checked == audit.assignments_covered * 11
        assert audit.passed

    def test_full_budget_passes(self):
        audit = audit_alpha_sums(3, (2, 3), n_weighted=2)
        assert audit.passed
        assert audit.max_level_sum <= 0.05 + 1e-12

    def test_budget_enforced(self):
        with pytest.raises(BudgetError):
            audit_alpha_sums(4, (2,))
        with pytest.raises(BudgetError):
            audit_alpha_sums(3, (2, 4))

    def test_routes_agree_on_violations(self):
        # an oversubscribed allocation must be flagged by both routes
        tree = build_complete_tree([2, 2])
        levels = np.array([0.05, 0.04, 0.04, 0.02, 0.02, 0.02, 0.02])
        vmax, vbad = _attainable_sums_check(tree, levels, 0.05, 4_000_000)
        lmax, lbad = _literal_sums_check(tree, levels, 0.05)
        assert vbad > 0 and lbad > 0
        assert vmax == pytest.approx(lmax, abs=1e-12) == pytest.approx(0.08, abs=1e-12)

    def test_summary_mentions_counts(self):
        audit = audit_alpha_sums(1, (3,), n_weighted=1)
        assert "cases" in audit.summary() and "violations 0" in audit.summary()


class TestAuditSubtreeSums:
    def test_all_true_root_sum_is_alpha(self):
        tree = build_complete_tree([2, 2])
        audit = audit_subtree_sums(tree, uniform_levels(tree, 0.05), np.ones(7))
        assert audit.passed
        assert audit.max_sum == pytest.approx(0.05, abs=1e-15)

    def test_all_false_sum_zero(self):
        tree = build_complete_tree([2, 2])
        audit = audit_subtree_sums(tree, uniform_levels(tree, 0.05), np.zeros(7))
        assert audit.passed and audit.max_sum == 0.0

    def test_leaf_subtree_two_cases(self):
        tree = build_complete_tree([2])
        alloc = uniform_levels(tree, 0.05)
        from treetest import subtree_alpha_sum

        assert subtree_alpha_sum(tree, alloc, [0, 0, 0], 1) == 0.0
        assert subtree_alpha_sum(tree, alloc, [0, 1, 0], 1) == pytest.approx(0.025)

    def test_hand_worked_case(self):
        tree = build_complete_tree([2, 2])
        audit = audit_subtree_sums(tree, uniform_levels(tree, 0.05), [0, 1, 0, 0, 0, 1, 1])
        assert audit.passed
        assert audit.max_sum == pytest.approx(0.05, abs=1e-15)

    def test_random_trees_always_pass(self):
        rng = np.random.default_rng(20)
        from treetest import TestTree, weighted_levels

        for _ in range(50):
            tree = TestTree(random_general_parents(rng))
            alloc = weighted_levels(tree, 0.1, rng.uniform(0.1, 1.0, tree.n_vertices))
            truth = rng.integers(0, 2, tree.n_vertices)
            assert audit_subtree_sums(tree, alloc, truth).passed
