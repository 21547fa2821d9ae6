"""Two-tier hybrid IDS: subgroup rules flag first, a classifier decides the rest.

Tier 2 is pluggable: anything with ``predict(X) -> 0/1 array`` works. The
reference classifier is a Bernoulli naive Bayes with Laplace smoothing.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from sklearn.naive_bayes import BernoulliNB

SOURCES = ("classical", "quantum", "both")


@dataclass
class RuleSet:
    """Rules as feature-name tuples, each tagged with where it came from."""
    rules: List[tuple] = field(default_factory=list)
    sources: List[str] = field(default_factory=list)

    def __post_init__(self):
        merged: Dict[tuple, str] = {}
        for r, s in zip(self.rules, self.sources or ["classical"] * len(self.rules)):
            if s not in SOURCES:
                raise ValueError(f"unknown rule source {s!r}")
            key = tuple(sorted(r))
            if key in merged and merged[key] != s:
                merged[key] = "both"
            else:
                merged.setdefault(key, s)
        self.rules = list(merged)
        self.sources = [merged[k] for k in self.rules]

    def __len__(self):
        return len(self.rules)

    def union(self, other):
        return RuleSet(self.rules + other.rules, self.sources + other.sources)


@dataclass(frozen=True)
class TierMetrics:
    detection_rate: Optional[float]
    precision: Optional[float]
    f1: Optional[float]
    n: int


@dataclass(frozen=True)
class TierReport:
    detection_rate: Optional[float]
    f1: Optional[float]
    precision: Optional[float]
    tier1_precision: Optional[float]
    tier1_flagged: int
    tier2_metrics: TierMetrics
    n_test: int


def classification_metrics(y_true, y_pred) -> TierMetrics:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    tp = int(np.count_nonzero(y_true & y_pred))
    fp = int(np.count_nonzero(~y_true & y_pred))
    fn = int(np.count_nonzero(y_true & ~y_pred))
    dr = tp / (tp + fn) if tp + fn else None
    prec = tp / (tp + fp) if tp + fp else None
    f1 = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else None
    return TierMetrics(dr, prec, f1, int(y_true.size))


def tier1_apply(rules: RuleSet, test):
    """Records matching at least one rule; returns ``(flagged, precision)``."""
    flagged = np.zeros(test.N, dtype=bool)
    for rule in rules.rules:
        idx = [test.feature_names.index(f) for f in rule]
        flagged |= test.B[:, idx].all(axis=1) if idx else np.ones(test.N, dtype=bool)
    n_flag = int(flagged.sum())
    prec = float(test.y[flagged].mean()) if n_flag else None
    return flagged, prec


def train_reference_classifier(train):
    y = np.asarray(train.y)
    if train.N == 0 or np.unique(y).size < 2:
        raise ValueError("reference classifier needs both classes in the training data")
    clf = BernoulliNB(alpha=1.0, binarize=None)
    clf.fit(train.B, y)
    clf.feature_names_ = list(train.feature_names)
    return clf


def evaluate_hybrid(rules: RuleSet, classifier, test, classifier_view=None) -> TierReport:
    """Final prediction = rule flag OR classifier positive.

    ``classifier_view`` is the BinaryDataset the classifier scores (defaults to
    ``test``); it must describe the same records.
    """
    view = test if classifier_view is None else classifier_view
    flagged, t1_prec = tier1_apply(rules, test)
    tier2 = np.asarray(classifier.predict(view.B)).astype(bool)
    final = flagged | tier2
    overall = classification_metrics(test.y, final)
    rest = ~flagged
    t2 = classification_metrics(test.y[rest], tier2[rest])
    return TierReport(overall.detection_rate, overall.f1, overall.precision, t1_prec,
                      int(flagged.sum()), t2, test.N)


def select_rules(subgroups, feature_names, limit, source, min_positive_rate=0.7):
    """Top rules by training WRAcc among those above a positive-rate floor."""
    from .subgroup import mask_names
    picked = []
    for mask, met in subgroups:
        if mask == 0 or met.positive_rate is None or met.positive_rate <= min_positive_rate:
            continue
        picked.append(tuple(mask_names(mask, feature_names)))
        if len(picked) >= limit:
            break
    return RuleSet(picked, [source] * len(picked))
