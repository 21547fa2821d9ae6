"""Least-squares QUBO surrogate of the negated WRAcc landscape, cardinality
penalty, normalisation and the QUBO -> Ising map.

Conventions: a QUBO is a symmetric matrix ``Q`` plus a constant ``offset`` with
energy ``x^T Q x + offset``; the pair (i, j) therefore contributes
``2 Q_ij x_i x_j``. Bitstrings are integer masks with bit ``i`` = ``x_i``.
"""

import json
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Optional

import numpy as np
from scipy.stats import spearmanr

from .subgroup import wracc_from_counts

logger = logging.getLogger(__name__)

EXACT_MAX_N = 15
RIDGE = 1e-10
LAMBDA_FLOOR = 0.1
LAMBDA_SAFETY = 1.5
FIT_SAMPLES = ("all", "weighted", "k-only")


@dataclass
class QuboModel:
    Q: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        if self.Q.ndim != 2 or self.Q.shape[0] != self.Q.shape[1]:
            raise ValueError("Q must be square")

    @property
    def n(self):
        return self.Q.shape[0]

    def energy(self, masks):
        return qubo_energies(self.Q, masks) + self.offset

    def normalized(self):
        """Divide Q and offset by max|Q| (no-op for Q == 0)."""
        scale = float(np.max(np.abs(self.Q))) if self.Q.size else 0.0
        if scale == 0.0:
            return QuboModel(self.Q.copy(), self.offset)
        return QuboModel(self.Q / scale, self.offset / scale)

    def to_dict(self):
        return {"n": self.n, "offset": self.offset,
                "Q_upper": [self.Q[i, i:].tolist() for i in range(self.n)]}

    @classmethod
    def from_dict(cls, d):
        n = d["n"]
        Q = np.zeros((n, n))
        for i, row in enumerate(d["Q_upper"]):
            Q[i, i:] = row
            Q[i:, i] = row
        return cls(Q, d["offset"])


@dataclass
class IsingModel:
    h: np.ndarray
    J: np.ndarray       # n x n, only i < j entries used
    c: float

    @property
    def n(self):
        return self.h.shape[0]

    def energy(self, masks):
        return ising_energies(self, masks)

    def to_dict(self):
        iu = np.triu_indices(self.n, 1)
        return {"n": self.n, "h": self.h.tolist(), "c": self.c,
                "J": [[int(i), int(j), float(self.J[i, j])] for i, j in zip(*iu)
                      if self.J[i, j] != 0.0]}

    @classmethod
    def from_dict(cls, d):
        n = d["n"]
        J = np.zeros((n, n))
        for i, j, v in d["J"]:
            J[i, j] = v
        return cls(np.asarray(d["h"], dtype=float), J, d["c"])


@dataclass(frozen=True)
class FitQuality:
    r_squared: float
    spearman_rho: float
    n_samples: int


@dataclass
class QuboFit:
    qubo: QuboModel
    quality: FitQuality
    masks: np.ndarray           # bitstrings the regression saw
    target: np.ndarray          # -WRAcc at those bitstrings
    predicted: np.ndarray
    mode: str = "exact"


@dataclass
class PenaltyCalibration:
    lam: float
    K: int
    best_energy: Dict[int, float] = field(default_factory=dict)
    needed: Dict[int, float] = field(default_factory=dict)


def bits_matrix(masks, n):
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def qubo_energies(Q, masks):
    X = bits_matrix(masks, Q.shape[0])
    return np.einsum("bi,ij,bj->b", X, Q, X)


def ising_energies(ising: IsingModel, masks):
    Z = 1.0 - 2.0 * bits_matrix(masks, ising.n)
    Ju = np.triu(ising.J, 1)
    return Z @ ising.h + np.einsum("bi,ij,bj->b", Z, Ju, Z) + ising.c


def design_matrix(masks, n):
    """Rows ``[x_1..x_n, 2 x_i x_j (i<j)]``; the pair coefficient is Q_ij."""
    X = bits_matrix(masks, n)
    pairs = list(combinations(range(n), 2))
    if pairs:
        i, j = np.array(pairs).T
        return np.hstack([X, 2.0 * X[:, i] * X[:, j]])
    return X


def assemble_q(theta, n):
    Q = np.diag(theta[:n]).astype(float)
    for t, (i, j) in enumerate(combinations(range(n), 2)):
        Q[i, j] = Q[j, i] = theta[n + t]
    return Q


def _r_squared(target, pred):
    ss_res = float(np.sum((target - pred) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 else 0.0
    return 1.0 - ss_res / ss_tot


def _spearman(target, pred):
    if np.ptp(target) == 0 or np.ptp(pred) == 0:
        return 1.0 if np.allclose(target, pred) else 0.0
    return float(spearmanr(pred, target).statistic)


def regress(masks, target, n, weights=None):
    """Weighted ridge-damped normal equations; returns (theta, predictions)."""
    A = design_matrix(masks, n)
    w = np.ones(len(masks)) if weights is None else np.asarray(weights, dtype=float)
    Aw = A * w[:, None]
    lhs = A.T @ Aw + RIDGE * np.eye(A.shape[1])
    theta = np.linalg.solve(lhs, Aw.T @ target)
    return theta, A @ theta


def _fit(masks, target, n, weights, mode):
    theta, pred = regress(masks, target, n, weights)
    quality = FitQuality(_r_squared(target, pred), _spearman(target, pred), len(masks))
    return QuboFit(QuboModel(assemble_q(theta, n)), quality, np.asarray(masks), target, pred, mode)


def wracc_landscape(bd):
    """WRAcc of every bitstring ``m`` in ``[0, 2^n)`` (empty mask -> 0)."""
    size, pos = bd.bits.all_subset_counts()
    return wracc_from_counts(size, pos, bd.N, bd.p0)


def fit_qubo_exact(bd, K=None, fit_sample="weighted", k_weight=2.0) -> QuboFit:
    """Regress -WRAcc over all 2^n bitstrings onto a quadratic form.

    ``fit_sample`` picks which rows enter the regression: ``all`` (uniform),
    ``weighted`` (all rows, Hamming-weight-K rows weighted ``k_weight``) or
    ``k-only`` (just the weight-K rows).
    """
    n = bd.n
    if n > EXACT_MAX_N:
        raise ValueError(f"exact QUBO fit needs n <= {EXACT_MAX_N} (got {n}); use surrogate mode")
    if fit_sample not in FIT_SAMPLES:
        raise ValueError(f"fit_sample must be one of {FIT_SAMPLES}")
    masks = np.arange(1 << n, dtype=np.int64)
    target = -wracc_landscape(bd)
    weight = np.array([bin(m).count("1") for m in masks])
    weights = None
    if fit_sample != "all" and K is None:
        raise ValueError(f"fit_sample={fit_sample!r} needs the target cardinality K")
    if fit_sample == "weighted":
        weights = np.where(weight == K, k_weight, 1.0)
    elif fit_sample == "k-only":
        keep = weight == K
        masks, target = masks[keep], target[keep]
    return _fit(masks, target, n, weights, "exact")


def sample_balanced_bitstrings(n, M, rng, max_tries_factor=50):
    """Up to ``M`` distinct non-empty bitstrings: weight uniform on 1..n, positions uniform."""
    total = (1 << n) - 1
    M = min(M, total)
    seen = set()
    tries = 0
    while len(seen) < M and tries < max_tries_factor * M:
        k = int(rng.integers(1, n + 1))
        idx = rng.choice(n, size=k, replace=False)
        seen.add(int(np.sum(1 << idx.astype(np.int64))))
        tries += 1
    return np.array(sorted(seen), dtype=np.int64)


def fit_qubo_surrogate(bd, oversample=10, seed=0) -> QuboFit:
    n = bd.n
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    V = n + n * (n - 1) // 2
    rng = np.random.default_rng(seed)
    masks = sample_balanced_bitstrings(n, oversample * V, rng)
    if len(masks) < V:
        raise ValueError(f"surrogate sample has {len(masks)} distinct bitstrings < {V} unknowns")
    bits = bd.bits
    target = np.empty(len(masks))
    for r, m in enumerate(masks):
        size, pos = bits.counts(int(m))
        target[r] = -wracc_from_counts(size, pos, bd.N, bd.p0)
    return _fit(masks, target, n, None, "surrogate")


def _weights_of(masks):
    return np.array([bin(int(m)).count("1") for m in masks])


def calibrate_penalty(q: QuboModel, K, candidates=None) -> PenaltyCalibration:
    """Smallest-sufficient cardinality penalty, times 1.5, floored at 0.1.

    ``q`` is the pre-normalised objective. For n <= 15 all bitstrings are
    enumerated; otherwise ``candidates`` (e.g. the surrogate sample) supplies
    the per-cardinality best energies.
    """
    n = q.n
    if n <= EXACT_MAX_N and candidates is None:
        masks = np.arange(1 << n, dtype=np.int64)
    else:
        if candidates is None:
            raise ValueError("calibration for n > 15 needs candidate bitstrings")
        masks = np.unique(np.concatenate([[0], np.asarray(candidates, dtype=np.int64)]))
    E = qubo_energies(q.Q, masks)
    w = _weights_of(masks)
    best = {}
    for k in range(n + 1):
        sel = w == k
        if sel.any():
            best[k] = float(E[sel].min())
        elif k != K:
            logger.warning("no candidate bitstrings at cardinality %d; excluded from calibration", k)
    if K not in best:
        raise ValueError(f"no candidate bitstrings at target cardinality {K}")
    needed = {k: max(0.0, (best[K] - e) / (k - K) ** 2) for k, e in best.items() if k != K}
    lam = max(LAMBDA_FLOOR, LAMBDA_SAFETY * max(needed.values(), default=0.0))
    return PenaltyCalibration(lam, K, best, needed)


def penalty_terms(n, K, lam):
    """Cardinality penalty lam * (sum x - K)^2 as (Q, offset) in symmetric storage."""
    P = np.full((n, n), lam)        # each symmetric entry lam -> 2*lam per pair
    np.fill_diagonal(P, lam * (1 - 2 * K))
    return P, lam * K * K


def add_penalty(q: QuboModel, cal: Optional[PenaltyCalibration], free_cardinality=False):
    """Add the calibrated penalty (unless free-cardinality) and normalise by max|Q|."""
    if free_cardinality:
        return q.normalized()
    P, off = penalty_terms(q.n, cal.K, cal.lam)
    return QuboModel(q.Q + P, q.offset + off).normalized()


def qubo_to_ising(q: QuboModel, check=True, n_checks=100, seed=0) -> IsingModel:
    """Substitute x_i = (1 - z_i)/2 and verify energies on random bitstrings."""
    Q = 0.5 * (q.Q + q.Q.T)
    n = q.n
    d = np.diag(Q)
    off = Q - np.diag(d)
    h = -0.5 * d - 0.5 * off.sum(axis=1)
    J = np.triu(off, 1) * 0.5
    c = q.offset + 0.5 * d.sum() + 0.5 * np.triu(off, 1).sum()
    ising = IsingModel(h, J, float(c))
    if check:
        rng = np.random.default_rng(seed)
        hi = 1 << n
        masks = [0, hi - 1] + [int(m) for m in rng.integers(0, hi, size=n_checks)] if n else [0]
        a = q.energy(masks)
        b = ising.energy(masks)
        tol = 1e-9 * np.maximum(1.0, np.abs(a))
        if np.any(np.abs(a - b) > tol):
            raise RuntimeError("QUBO/Ising consistency check failed (conversion bug)")
    return ising


def save_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj.to_dict(), fh, indent=1)
