"""Standardise, threshold and polarity-align features; rank binary features by IG."""

import json
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .data import EncodedDataset
from .infotheory import binary_entropy, information_gain_matrix, split_information_gain

logger = logging.getLogger(__name__)

STRATEGIES = ("mean", "entropy")
MAX_CANDIDATES = 200


@dataclass
class BinarizationModel:
    feature_names: List[str]
    means: np.ndarray
    stds: np.ndarray
    thresholds: np.ndarray      # in scaled space
    polarity: np.ndarray        # True: value > threshold maps to 1
    constant: np.ndarray        # zero-variance columns, always binarize to 0
    strategy: str = "mean"
    align: bool = True

    def scale(self, X):
        safe = np.where(self.constant, 1.0, self.stds)
        return (X - self.means) / safe

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "align": self.align,
            "features": [
                {"name": n, "mean": float(m), "std": float(s), "threshold": float(t),
                 "polarity": "gt" if p else "le", "constant": bool(c)}
                for n, m, s, t, p, c in zip(self.feature_names, self.means, self.stds,
                                            self.thresholds, self.polarity, self.constant)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        feats = d["features"]
        return cls(
            feature_names=[f["name"] for f in feats],
            means=np.array([f["mean"] for f in feats], dtype=float),
            stds=np.array([f["std"] for f in feats], dtype=float),
            thresholds=np.array([f["threshold"] for f in feats], dtype=float),
            polarity=np.array([f["polarity"] == "gt" for f in feats], dtype=bool),
            constant=np.array([f["constant"] for f in feats], dtype=bool),
            strategy=d["strategy"], align=d["align"],
        )

    def save(self, path):
        # repr-exact floats keep test-time application bit-for-bit reproducible
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def describe(self, name):
        """Human-readable condition that a feature value of 1 stands for."""
        i = self.feature_names.index(name)
        op = ">" if self.polarity[i] else "<="
        raw_t = self.means[i] + self.thresholds[i] * (self.stds[i] if not self.constant[i] else 1.0)
        return f"{name} {op} {raw_t:.6g}"


@dataclass
class BinaryDataset:
    B: np.ndarray               # N x n uint8
    y: np.ndarray               # N uint8
    feature_names: List[str]

    def __post_init__(self):
        self.B = np.ascontiguousarray(self.B, dtype=np.uint8)
        self.y = np.ascontiguousarray(self.y, dtype=np.uint8)
        self._bits = None

    @property
    def N(self):
        return self.y.shape[0]

    @property
    def n(self):
        return self.B.shape[1]

    @property
    def p0(self):
        return float(self.y.mean()) if self.N else float("nan")

    def columns(self, names):
        idx = [self.feature_names.index(nm) for nm in names]
        return BinaryDataset(self.B[:, idx], self.y, list(names))

    @property
    def bits(self):
        """Packed bitset index over the columns (built lazily, cached)."""
        if self._bits is None:
            from .subgroup import BitIndex
            self._bits = BitIndex(self.B, self.y)
        return self._bits


@dataclass
class FeatureRanking:
    names: List[str]
    gains: np.ndarray
    target_entropy: float

    def as_rows(self):
        return [{"rank": r + 1, "feature": n, "ig_bits": float(g)}
                for r, (n, g) in enumerate(zip(self.names, self.gains))]


def _candidate_grid(col):
    lo, hi = float(col.min()), float(col.max())
    m = min(MAX_CANDIDATES, np.unique(col).size)
    return np.linspace(lo, hi, m + 2)[1:-1]


def entropy_threshold(col, y):
    """IG-maximising threshold for ``col > t`` over the evenly spaced grid.

    Ties go to the smaller threshold. Returns ``(threshold, ig)``.
    """
    grid = _candidate_grid(col)
    if grid.size == 0:
        return 0.0, 0.0
    order = np.argsort(col, kind="stable")
    xs, ys = col[order], y[order].astype(np.int64)
    n, n_pos = xs.size, int(ys.sum())
    # records with value <= t are the first `cut` entries of the sorted column
    cut = np.searchsorted(xs, grid, side="right")
    cum_pos = np.concatenate([[0], np.cumsum(ys)])
    n_1 = n - cut
    n_pos_1 = n_pos - cum_pos[cut]
    ig = split_information_gain(n_pos_1, n_1, n_pos, n)
    best = int(np.argmax(ig))
    return float(grid[best]), float(ig[best])


def fit_binarization(train: EncodedDataset, strategy="mean", align=True) -> BinarizationModel:
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown threshold strategy {strategy!r}")
    X = np.asarray(train.matrix, dtype=float)
    y = np.asarray(train.labels).astype(bool)
    if X.shape[0] == 0:
        raise ValueError("cannot fit binarization on an empty training set")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = ~(stds > 0)
    for name in np.asarray(train.column_names, dtype=object)[constant]:
        logger.warning("column %s is constant on training data; it binarizes to all zeros", name)
    Z = (X - means) / np.where(constant, 1.0, stds)
    thresholds = np.zeros(X.shape[1])
    if strategy == "entropy":
        for j in np.flatnonzero(~constant):
            thresholds[j], _ = entropy_threshold(Z[:, j], y)
    polarity = np.ones(X.shape[1], dtype=bool)
    if align:
        p0 = y.mean()
        above = Z > thresholds
        n_above = above.sum(axis=0)
        pos_above = (above & y[:, None]).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            rate_above = np.where(n_above > 0, pos_above / np.maximum(n_above, 1), 0.0)
        # ">" stays when its side is at least as attack-like as the baseline;
        # otherwise the "<=" side necessarily is
        polarity = (n_above > 0) & (rate_above >= p0)
    return BinarizationModel(list(train.column_names), means, stds, thresholds, polarity,
                             constant, strategy, align)


def apply_binarization(model: BinarizationModel, ds: EncodedDataset, side="1") -> BinaryDataset:
    """Binarize ``ds`` with a fitted model.

    ``side`` "1" keeps the (aligned) encoding, "0" complements every column,
    "both" defers to directional alignment and requires a model fitted with
    ``align=True``.
    """
    side = str(side)
    if side not in ("0", "1", "both"):
        raise ValueError(f"side must be 0, 1 or both, got {side!r}")
    if side == "both" and not model.align:
        raise ValueError("side=both requires directional alignment (align=True)")
    if list(ds.column_names) != list(model.feature_names):
        missing = sorted(set(model.feature_names) - set(ds.column_names))
        extra = sorted(set(ds.column_names) - set(model.feature_names))
        raise ValueError(f"column mismatch between model and data (missing={missing}, extra={extra})")
    Z = model.scale(np.asarray(ds.matrix, dtype=float))
    above = Z > model.thresholds
    B = np.where(model.polarity, above, ~above)
    if side == "0":
        B = ~B
    # constant columns carry no information either way
    B[:, model.constant] = False
    return BinaryDataset(B.astype(np.uint8), ds.labels, list(model.feature_names))


def rank_features(bd: BinaryDataset, exclude=()) -> FeatureRanking:
    gains = information_gain_matrix(bd.B, bd.y)
    keep = [j for j, nm in enumerate(bd.feature_names) if nm not in set(exclude)]
    order = sorted(keep, key=lambda j: (-gains[j], bd.feature_names[j]))
    return FeatureRanking([bd.feature_names[j] for j in order], gains[order],
                          float(binary_entropy(bd.p0)))


def rank_and_select(bd: BinaryDataset, K_feat, model: Optional[BinarizationModel] = None):
    """Top-``K_feat`` columns by IG (descending, ties by name).

    Zero-variance columns flagged in ``model`` are left out of the ranking.
    """
    exclude = ()
    if model is not None:
        exclude = [n for n, c in zip(model.feature_names, model.constant) if c]
    ranking = rank_features(bd, exclude)
    if not 1 <= K_feat <= len(ranking.names):
        raise ValueError(f"K_feat={K_feat} outside [1, {len(ranking.names)}]")
    return bd.columns(ranking.names[:K_feat]), ranking
