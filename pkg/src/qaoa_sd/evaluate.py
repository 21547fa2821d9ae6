"""Decoding QAOA samples, approximation ratios and statistical validation."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .binarize import BinarizationModel, apply_binarization
from .subgroup import evaluate_subgroup, popcount, wracc_from_counts

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ApproximationRatios:
    r_E: Optional[float]
    r_W: Optional[float]
    E_qaoa_best: float
    E_ground: float
    wracc_best_at_K: float
    wracc_star: float
    free_cardinality: bool
    wracc_best_any_k: float = 0.0
    best_mask_at_K: Optional[int] = None
    best_mask_any_k: Optional[int] = None


@dataclass(frozen=True)
class StatTestResult:
    fisher_odds_ratio: Optional[float]
    fisher_p: float
    perm_p: float
    perm_z: Optional[float]
    permutations: int


def decode_top_n(distribution, n_top=50) -> List[Tuple[int, float]]:
    """Most probable bitstrings as ``(mask, probability)``; ties by bitstring value."""
    dist = np.asarray(distribution, dtype=float)
    idx = np.flatnonzero(dist > 0)
    order = np.lexsort((idx, -dist[idx]))
    return [(int(idx[o]), float(dist[idx[o]])) for o in order[:n_top]]


def energy_ratio(sampled_masks, energies) -> Tuple[Optional[float], float, float]:
    """r_E = (lowest sampled energy) / (ground energy); None when the ground energy is 0."""
    energies = np.asarray(energies)
    e_best = float(energies[np.asarray(sampled_masks, dtype=np.int64)].min())
    e_ground = float(energies.min())
    r = None if e_ground == 0.0 else e_best / e_ground
    return r, e_best, e_ground


def wracc_ratio(masks: Sequence[int], bd, K, exh, free_cardinality=False):
    """r_W: best sampled WRAcc at |mask| = K (any k if free) over the exhaustive optimum.

    Returns ``(r_W, best_wracc, best_mask, denominator)``; r_W is None when the
    denominator is 0.
    """
    if free_cardinality:
        cands = [m for m in masks if m]
        denom = exh.best[1].wracc if exh.best else 0.0
    else:
        cands = [m for m in masks if popcount(m) == K]
        at_k = exh.best_per_cardinality().get(K)
        if at_k is None:
            raise ValueError(f"no exhaustive optimum at cardinality {K}")
        denom = at_k[1].wracc
    best, best_mask = 0.0, None
    for m in sorted(set(cands)):
        w = evaluate_subgroup(bd, m).wracc
        if best_mask is None or w > best:
            best, best_mask = w, m
    if best_mask is None:
        logger.warning("no sampled bitstring at the target cardinality %s; r_W = 0", K)
    r = None if denom == 0.0 else best / denom
    return r, best, best_mask, denom


def contingency(bd, mask):
    members = bd.bits.member_vector(mask)
    y = bd.y.astype(bool)
    a = int(np.count_nonzero(members & y))
    b = int(np.count_nonzero(members & ~y))
    c = int(np.count_nonzero(~members & y))
    d = int(np.count_nonzero(~members & ~y))
    return a, b, c, d


def _log_comb(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def fisher_exact_table(a, b, c, d):
    """Two-sided Fisher exact test on [[a, b], [c, d]] by hypergeometric summation.

    Returns ``(odds_ratio, p)``; the odds ratio is None when b*c == 0 or the
    table has an empty row or column.
    """
    r1, r2, c1 = a + b, c + d, a + c
    N = r1 + r2
    if min(r1, r2, c1, N - c1) == 0:
        return None, 1.0
    odds = None if b * c == 0 else (a * d) / (b * c)
    lo, hi = max(0, c1 - r2), min(r1, c1)
    xs = np.arange(lo, hi + 1)
    logp = _log_comb(r1, xs) + _log_comb(r2, c1 - xs) - _log_comb(N, c1)
    p_obs = logp[a - lo]
    # relative slack, as in standard implementations, absorbs rounding between equal terms
    keep = logp <= p_obs + np.log1p(1e-7)
    p = float(np.exp(logp[keep] - p_obs).sum() * np.exp(p_obs))
    return odds, min(1.0, p)


def fisher_exact(bd, mask):
    return fisher_exact_table(*contingency(bd, mask))


def permutation_tests(bd, masks, permutations=1000, seed=0):
    """Label-shuffling null for the WRAcc of fixed subgroups.

    Replicate ``r`` shuffles the labels with its own seeded stream, shared by
    every mask, so results do not depend on which masks are tested together.
    ``perm_p = (#{null >= observed} + 1) / (permutations + 1)``; ``perm_z`` is
    None if the null has zero spread. Returns a list of ``(perm_p, perm_z)``.
    """
    if permutations < 1:
        raise ValueError("permutations must be >= 1")
    y = bd.y.astype(np.int64)
    N, p0 = bd.N, bd.p0
    members = [np.flatnonzero(bd.bits.member_vector(m)) for m in masks]
    sizes = np.array([m.size for m in members])
    observed = wracc_from_counts(sizes, [int(y[m].sum()) for m in members], N, p0)
    null = np.empty((permutations, len(masks)))
    for r, s in enumerate(np.random.SeedSequence(seed).spawn(permutations)):
        perm = np.random.default_rng(s).permutation(y)
        null[r] = wracc_from_counts(sizes, [int(perm[m].sum()) for m in members], N, p0)
    out = []
    for j in range(len(masks)):
        # tiny slack so exact ties count as "at least as extreme"
        exceed = int(np.count_nonzero(null[:, j] >= observed[j] - 1e-15))
        sd = float(null[:, j].std())
        z = None if sd == 0.0 else float((observed[j] - null[:, j].mean()) / sd)
        out.append(((exceed + 1) / (permutations + 1), z))
    return out


def permutation_test(bd, mask, permutations=1000, seed=0):
    return permutation_tests(bd, [mask], permutations, seed)[0]


def stat_tests(bd, masks, permutations=1000, seed=0) -> List[StatTestResult]:
    perms = permutation_tests(bd, masks, permutations, seed)
    out = []
    for m, (perm_p, z) in zip(masks, perms):
        odds, p = fisher_exact(bd, m)
        out.append(StatTestResult(odds, p, perm_p, z, permutations))
    return out


def qaoa_unique(masks: Sequence[int], beam) -> List[int]:
    beam_masks = beam.masks
    out, seen = [], set()
    for m in masks:
        if m not in beam_masks and m not in seen:
            out.append(m)
            seen.add(m)
    return out


def test_generalization(masks: Sequence[int], feature_names, model: BinarizationModel, test,
                        side="1"):
    """Per-subgroup metrics on a held-out EncodedDataset using the training model."""
    missing = [f for f in feature_names if f not in test.column_names]
    if missing:
        raise ValueError(f"features missing from test encoding: {missing}")
    bd = apply_binarization(model, test, side).columns(feature_names)
    return [evaluate_subgroup(bd, m) for m in masks], bd


test_generalization.__test__ = False  # not a pytest test despite the name
