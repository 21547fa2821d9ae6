import numpy as np
import pytest

from conftest import planted_binary
from qaoa_sd.binarize import BinaryDataset
from qaoa_sd.hybrid import (RuleSet, classification_metrics, evaluate_hybrid, select_rules,
                            tier1_apply, train_reference_classifier)
from qaoa_sd.search import exhaustive_enumerate


def test_empty_rules_equal_baseline(rng):
    bd = planted_binary(rng, 800, 5)
    clf = train_reference_classifier(bd)
    rep = evaluate_hybrid(RuleSet(), clf, bd)
    base = classification_metrics(bd.y, clf.predict(bd.B))
    assert rep.tier1_flagged == 0 and rep.tier1_precision is None
    assert (rep.detection_rate, rep.f1, rep.precision) == (base.detection_rate, base.f1,
                                                          base.precision)


def test_pure_rule_precision_one():
    y = np.array([1, 1, 0, 0, 1, 0])
    B = np.column_stack([y, np.ones(6)])
    bd = BinaryDataset(B, y, ["pure", "all"])
    flagged, prec = tier1_apply(RuleSet([("pure",)], ["classical"]), bd)
    assert prec == 1.0 and flagged.tolist() == y.astype(bool).tolist()


def test_rules_catch_everything():
    y = np.array([1, 1, 0, 0, 1, 0, 0, 0])
    B = np.column_stack([y, 1 - y])

    class Never:
        def predict(self, X):
            return np.zeros(len(X), dtype=int)

    bd = BinaryDataset(B, y, ["hit", "miss"])
    rep = evaluate_hybrid(RuleSet([("hit",)], ["quantum"]), Never(), bd)
    assert rep.detection_rate == 1.0 and rep.f1 == 1.0


def test_ruleset_dedup_and_union():
    a = RuleSet([("x", "y"), ("z",)], ["classical", "classical"])
    b = RuleSet([("y", "x"), ("w",)], ["quantum", "quantum"])
    u = a.union(b)
    assert len(u) == 3
    assert dict(zip(u.rules, u.sources))[("x", "y")] == "both"
    with pytest.raises(ValueError):
        RuleSet([("x",)], ["oracle"])


def test_dr_monotone_random_pairs():
    rng = np.random.default_rng(31)
    for _ in range(20):
        train = planted_binary(rng, 600, 6, planted=(0, 1), base=rng.uniform(0.1, 0.4))
        test = planted_binary(rng, 400, 6, planted=(0, 1), base=rng.uniform(0.1, 0.4))
        clf = train_reference_classifier(train)
        names = test.feature_names
        rules = RuleSet([tuple(rng.choice(names, size=int(rng.integers(1, 4)), replace=False))
                         for _ in range(int(rng.integers(0, 6)))])
        hybrid = evaluate_hybrid(rules, clf, test)
        alone = classification_metrics(test.y, clf.predict(test.B))
        assert hybrid.detection_rate >= alone.detection_rate


def test_combined_rules_dominate(rng):
    bd = planted_binary(rng, 1000, 6)
    clf = train_reference_classifier(bd)
    a = RuleSet([("f0", "f1")], ["classical"])
    b = RuleSet([("f2", "f3")], ["quantum"])
    dr = [evaluate_hybrid(r, clf, bd).detection_rate for r in (a, b, a.union(b))]
    assert dr[2] >= max(dr[0], dr[1])


def test_nb_perfect_feature():
    y = np.array([0, 1] * 20)
    bd = BinaryDataset(np.column_stack([y, np.zeros(40)]), y, ["perfect", "flat"])
    clf = train_reference_classifier(bd)
    assert (clf.predict(bd.B) == y).all()


def test_nb_majority_when_uninformative():
    # two alternating row patterns, equally frequent within each class, so every
    # feature is independent of y; 20% positives -> predict the majority everywhere
    B = np.tile(np.array([[0, 1, 0, 1], [1, 0, 1, 0]]), (150, 1))
    y = np.repeat([0, 1, 0, 0, 0], 60)
    clf = train_reference_classifier(BinaryDataset(B, y, [f"f{i}" for i in range(4)]))
    assert (clf.predict(B) == 0).all()


def test_nb_smoothing_finite():
    # feature 0 never fires among normals; Laplace smoothing keeps likelihoods finite
    B = np.array([[1], [1], [0], [0], [0]])
    y = np.array([1, 1, 0, 0, 1])
    clf = train_reference_classifier(BinaryDataset(B, y, ["a"]))
    assert np.isfinite(clf.predict_log_proba(B)).all()


def test_single_class_rejected():
    with pytest.raises(ValueError, match="both classes"):
        train_reference_classifier(BinaryDataset(np.ones((4, 2)), np.ones(4), ["a", "b"]))


def test_select_rules_respects_rate_floor(rng):
    bd = planted_binary(rng, 1000, 6)
    exh = exhaustive_enumerate(bd, k_max=3)
    rules = select_rules(exh.subgroups, bd.feature_names, 5, "classical", 0.7)
    assert 0 < len(rules) <= 5
    by_names = {tuple(bd.feature_names[i] for i in range(6) if m >> i & 1): met
                for m, met in exh.subgroups}
    assert all(by_names[r].positive_rate > 0.7 for r in rules.rules)


def test_metrics_edge_cases():
    m = classification_metrics([0, 0], [0, 0])
    assert m.detection_rate is None and m.precision is None and m.f1 is None
    m = classification_metrics([1, 0, 1], [1, 1, 0])
    assert (m.detection_rate, m.precision, m.f1) == (0.5, 0.5, 0.5)
