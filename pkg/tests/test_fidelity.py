import itertools
import math

import pytest

from fidelis.classifiers import (BayesMotifClassifier, ClassDistribution,
                                 ConstantClassifier, IndicatorClassifier,
                                 MotifRule, classify, uniform)
from fidelis.errors import InvalidArgumentError, TooLargeError
from fidelis.fidelity import (ACCURACY, FidelityConfig, fid_accuracy_variants,
                              fid_alpha_delta, fid_alpha_exact, fid_alpha_minus,
                              fid_alpha_plus, fid_original)
from fidelis.graphs import Explanation, Graph, LabeledGraph
from fidelis.rng import substream


def rule6() -> MotifRule:
    return MotifRule(
        motifs={0: Graph.build(6, [(0, 1), (1, 2)], feature_dim=0),
                1: Graph.build(6, [(3, 4), (4, 5), (3, 5)], feature_dim=0)},
        priors=uniform(2), mode="fixed-ids")


def random_motif_pairs(count: int, seed: int):
    """Random graphs over the rule's id space with random bound explanations."""
    rule = rule6()
    rng = substream(seed, 0)
    pool = [(u, v) for u in range(6) for v in range(u + 1, 6)]
    pairs = []
    for _ in range(count):
        planted = int(rng.random() < 0.5)
        keep = rng.random(len(pool)) < 0.35
        edges = frozenset(e for e, k in zip(pool, keep) if k) \
            | rule.motifs[planted].edges
        g = Graph.build(6, edges, feature_dim=0)
        from fidelis.classifiers import motif_conditional
        label_dist = motif_conditional(rule, g)
        label = label_dist.argmax_class if max(label_dist.probs) > 0.5 \
            else int(rng.random() < 0.5)
        ordered = sorted(edges)
        k = int(rng.integers(1, len(ordered) + 1))
        idx = rng.choice(len(ordered), size=k, replace=False)
        expl = Explanation.build([ordered[i] for i in idx], 6)
        pairs.append((LabeledGraph(g, label), expl))
    return pairs


class TestFidOriginal:
    def test_constant_classifier_all_zero(self):
        f = ConstantClassifier(ClassDistribution((0.4, 0.6)))
        pairs = random_motif_pairs(10, seed=1)
        report = fid_original(f, pairs)
        assert report.fid_plus == 0.0
        assert report.fid_minus == 0.0
        assert report.fid_delta == 0.0

    def test_deterministic_task_with_gt_explanation(self):
        # With the indicator classifier and ground-truth explanations,
        # plus-fidelity equals the label-1 fraction and minus is zero.
        motif = Graph.build(5, [(0, 1), (1, 2), (0, 2)], feature_dim=0)
        f = IndicatorClassifier(motif, mode="fixed-ids")
        rng = substream(17, 0)
        pool = [(u, v) for u in range(5) for v in range(u + 1, 5)]
        pairs = []
        for _ in range(60):
            keep = rng.random(len(pool)) < 0.5
            g = Graph.build(5, [e for e, k in zip(pool, keep) if k], feature_dim=0)
            y = int(motif.edges <= g.edges)
            expl = Explanation(motif.edges if y else frozenset(), 5)
            pairs.append((LabeledGraph(g, y), expl))
        report = fid_original(f, pairs)
        frac_one = sum(lg.label for lg, _ in pairs) / len(pairs)
        assert report.fid_plus == pytest.approx(frac_one, abs=1e-12)
        assert report.fid_minus == pytest.approx(0.0, abs=1e-12)

    def test_two_graph_toy_hand_enumeration(self):
        # Hand-derived with the three-case rule and the documented tie-break:
        # graph A (path class) scores 0 on both sides; graph B (triangle
        # class, partial explanation) scores 1 on both sides.
        rule = rule6()
        f = BayesMotifClassifier(rule)
        a = LabeledGraph(Graph.build(6, [(0, 1), (1, 2), (0, 3)], feature_dim=0), 0)
        ea = Explanation.build([(0, 1), (1, 2)], 6)
        b = LabeledGraph(
            Graph.build(6, [(3, 4), (4, 5), (3, 5), (0, 1)], feature_dim=0), 1)
        eb = Explanation.build([(3, 4)], 6)
        report = fid_original(f, [(a, ea), (b, eb)])
        assert report.per_graph_plus == (0.0, 1.0)
        assert report.per_graph_minus == (0.0, 1.0)
        assert report.fid_plus == 0.5
        assert report.fid_minus == 0.5
        assert report.fid_delta == 0.0

    def test_unbound_explanation_rejected(self):
        f = ConstantClassifier(uniform(2))
        g = LabeledGraph(Graph.build(4, [(0, 1)], feature_dim=0), 0)
        with pytest.raises(InvalidArgumentError):
            fid_original(f, [(g, Explanation.build([(1, 2)], 4))])


class TestReductionIdentities:
    def test_alpha1_one_recovers_plus(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(50, seed=2)
        base = fid_original(f, pairs)
        est = fid_alpha_plus(f, pairs, FidelityConfig(alpha1=1.0, samples=7, seed=3))
        assert est.per_graph == base.per_graph_plus
        assert est.value == base.fid_plus

    def test_alpha2_zero_recovers_minus(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(50, seed=4)
        base = fid_original(f, pairs)
        est = fid_alpha_minus(f, pairs, FidelityConfig(alpha2=0.0, samples=7, seed=5))
        assert est.per_graph == base.per_graph_minus
        assert est.value == base.fid_minus

    def test_degenerate_pair_is_exactly_zero(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(30, seed=6)
        report = fid_alpha_delta(
            f, pairs, FidelityConfig(alpha1=0.0, alpha2=1.0, samples=5, seed=7))
        assert report.fid_plus == 0.0
        assert report.fid_minus == 0.0
        assert report.fid_delta == 0.0

    def test_alpha1_zero_is_zero_in_both_modes(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(20, seed=8)
        for mode in ("ratio", "bernoulli"):
            est = fid_alpha_plus(
                f, pairs, FidelityConfig(alpha1=0.0, samples=4, mode=mode, seed=9))
            assert est.value == 0.0

    def test_delta_identity_exact(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(25, seed=10)
        report = fid_alpha_delta(f, pairs, FidelityConfig(samples=9, seed=11))
        assert report.fid_delta == report.fid_plus - report.fid_minus

    def test_empty_explanation_contributes_zero_plus(self):
        f = BayesMotifClassifier(rule6())
        lg = LabeledGraph(Graph.build(6, [(0, 1), (1, 2)], feature_dim=0), 0)
        est = fid_alpha_plus(f, [(lg, Explanation.empty(6))],
                             FidelityConfig(alpha1=0.9, samples=8, mode="bernoulli"))
        assert est.value == 0.0


class TestExactOracle:
    def test_hand_brute_force_l4_alpha_half(self):
        # Independent enumeration of all C(4,2)=6 subsets.
        f = BayesMotifClassifier(rule6())
        g = Graph.build(6, [(0, 1), (1, 2), (3, 4), (0, 3)], feature_dim=0)
        lg = LabeledGraph(g, 0)
        expl = Explanation(g.edges, 6)
        orig = classify(f, g)
        expected = []
        for combo in itertools.combinations(sorted(g.edges), 2):
            mod = Graph.build(6, g.edges - frozenset(combo), feature_dim=0)
            expected.append(orig[0] - classify(f, mod)[0])
        want = sum(expected) / len(expected)
        got = fid_alpha_exact(f, lg, expl, 0.5, "plus", epsilon=0.0)
        assert got == pytest.approx(want, abs=1e-15)
        assert len(expected) == 6

    def test_alpha_zero_plus_is_zero(self):
        f = BayesMotifClassifier(rule6())
        (lg, expl), = random_motif_pairs(1, seed=12)
        assert fid_alpha_exact(f, lg, expl, 0.0, "plus") == 0.0

    def test_alpha_one_plus_equals_original_term(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(10, seed=13)
        base = fid_original(f, pairs)
        for (lg, expl), want in zip(pairs, base.per_graph_plus):
            assert fid_alpha_exact(f, lg, expl, 1.0, "plus") == want

    def test_epsilon_window_includes_neighbor_sizes(self):
        f = BayesMotifClassifier(rule6())
        g = Graph.build(6, [(0, 1), (1, 2), (3, 4), (0, 3)], feature_dim=0)
        lg = LabeledGraph(g, 0)
        expl = Explanation(g.edges, 6)
        orig = classify(f, g)
        # epsilon = 0.25 makes the window [1, 3], so sizes 1..3 are admissible
        scores = []
        for k in (1, 2, 3):
            for combo in itertools.combinations(sorted(g.edges), k):
                mod = Graph.build(6, g.edges - frozenset(combo), feature_dim=0)
                scores.append(orig[0] - classify(f, mod)[0])
        want = sum(scores) / len(scores)
        got = fid_alpha_exact(f, lg, expl, 0.5, "plus", epsilon=0.25)
        assert got == pytest.approx(want, abs=1e-15)

    def test_enumeration_cap(self):
        f = BayesMotifClassifier(rule6())
        g = Graph.build(6, [(u, v) for u in range(6) for v in range(u + 1, 6)],
                        feature_dim=0)
        lg = LabeledGraph(g, 1)
        with pytest.raises(TooLargeError):
            fid_alpha_exact(f, lg, Explanation(g.edges, 6), 0.5, "plus",
                            max_enumeration=10)

    def test_monte_carlo_converges_to_oracle(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(8, seed=14)
        cfg = FidelityConfig(alpha1=0.5, alpha2=0.5, samples=3000, seed=15)
        plus = fid_alpha_plus(f, pairs, cfg)
        minus = fid_alpha_minus(f, pairs, cfg)
        for i, (lg, expl) in enumerate(pairs):
            exact_p = fid_alpha_exact(f, lg, expl, 0.5, "plus")
            tol = max(3 * plus.per_graph_std[i] / math.sqrt(cfg.samples), 1e-12)
            assert abs(plus.per_graph[i] - exact_p) <= tol
            exact_m = fid_alpha_exact(f, lg, expl, 0.5, "minus")
            tol = max(3 * minus.per_graph_std[i] / math.sqrt(cfg.samples), 1e-12)
            assert abs(minus.per_graph[i] - exact_m) <= tol


class TestAccuracyVariants:
    def test_flip_everywhere_gives_one(self):
        rule = rule6()
        f = BayesMotifClassifier(rule)
        pairs = []
        for _ in range(5):
            g = Graph.build(6, rule.motifs[1].edges, feature_dim=0)
            pairs.append((LabeledGraph(g, 1), Explanation(g.edges, 6)))
        report = fid_original(f, pairs, metric=ACCURACY)
        assert report.fid_plus == 1.0
        assert report.fid_minus == 0.0

    def test_constant_classifier_zero(self):
        f = ConstantClassifier(ClassDistribution((0.9, 0.1)))
        pairs = random_motif_pairs(10, seed=16)
        report = fid_accuracy_variants(f, pairs, FidelityConfig(samples=5))
        assert report.fid_plus == 0.0
        assert report.fid_minus == 0.0

    def test_one_hot_outputs_make_accuracy_mirror_probability(self):
        f = BayesMotifClassifier(rule6())
        pairs = [(lg, e) for lg, e in random_motif_pairs(20, seed=17)
                 if classify(f, lg.graph).argmax_class == lg.label]
        prob = fid_original(f, pairs)
        acc = fid_original(f, pairs, metric=ACCURACY)
        # On correctly classified graphs with one-hot outputs the indicator
        # difference has the same magnitude as the probability drop.
        assert acc.fid_plus == pytest.approx(abs(prob.fid_plus), abs=1e-12)

    def test_accuracy_values_in_unit_interval(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(15, seed=18)
        report = fid_accuracy_variants(f, pairs, FidelityConfig(samples=6, seed=19))
        assert 0.0 <= report.fid_plus <= 1.0
        assert 0.0 <= report.fid_minus <= 1.0


class TestReproducibility:
    def test_same_seed_same_report(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(12, seed=20)
        cfg = FidelityConfig(samples=25, seed=21)
        r1 = fid_alpha_delta(f, pairs, cfg)
        r2 = fid_alpha_delta(f, pairs, cfg)
        assert r1 == r2

    def test_worker_count_independence(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(12, seed=22)
        cfg = FidelityConfig(samples=10, seed=23)
        serial = fid_alpha_delta(f, pairs, cfg, workers=1)
        parallel = fid_alpha_delta(f, pairs, cfg, workers=3)
        assert serial == parallel

    def test_probability_values_within_bounds(self):
        f = BayesMotifClassifier(rule6())
        pairs = random_motif_pairs(20, seed=24)
        report = fid_alpha_delta(f, pairs, FidelityConfig(samples=8, seed=25))
        for v in (*report.per_graph_plus, *report.per_graph_minus):
            assert -1.0 <= v <= 1.0


class TestPredictedLabelOption:
    def test_predicted_label_reads_classifier_argmax(self):
        # A wrong-label pair: with the true label the plus score is negative
        # when removal flips the prediction toward it; with the predicted
        # label the same drop counts positive.
        rule = rule6()
        f = BayesMotifClassifier(rule)
        g = Graph.build(6, [(3, 4), (4, 5), (3, 5), (0, 1)], feature_dim=0)
        wrong = LabeledGraph(g, 0)  # classifier predicts 1
        expl = Explanation.build([(3, 4)], 6)
        true_report = fid_original(f, [(wrong, expl)])
        pred_report = fid_original(f, [(wrong, expl)], label_source="predicted")
        assert true_report.fid_plus == -1.0
        assert pred_report.fid_plus == 1.0

    def test_sampled_estimators_respect_label_source(self):
        f = BayesMotifClassifier(rule6())
        g = Graph.build(6, [(3, 4), (4, 5), (3, 5), (0, 1)], feature_dim=0)
        wrong = LabeledGraph(g, 0)
        expl = Explanation.build([(3, 4), (4, 5), (3, 5)], 6)
        cfg = FidelityConfig(alpha1=1.0, samples=4, seed=1,
                             label_source="predicted")
        est = fid_alpha_plus(f, [(wrong, expl)], cfg)
        assert est.value == 1.0
