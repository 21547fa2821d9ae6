"""Exhaustive enumeration (ground truth) and beam search over conjunction rules."""

import csv
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Dict, List, Tuple

from .subgroup import (SubgroupMetrics, mask_names, mask_sort_key, metrics_from_counts,
                       popcount)

logger = logging.getLogger(__name__)

EXHAUSTIVE_CAP = 50_000
EXHAUSTIVE_MAX_K = 8


@dataclass
class BeamConfig:
    width: int = 10
    max_depth: int = 10

    def __post_init__(self):
        if self.width < 1 or self.max_depth < 1:
            raise ValueError("beam width and max_depth must be >= 1")


@dataclass
class SearchResult:
    subgroups: List[Tuple[int, SubgroupMetrics]]
    skipped_cardinalities: List[int] = field(default_factory=list)
    evaluated_cardinalities: List[int] = field(default_factory=list)

    def __post_init__(self):
        seen = {}
        for mask, met in self.subgroups:
            seen.setdefault(mask, met)
        self.subgroups = sorted(seen.items(), key=lambda t: (-t[1].wracc, mask_sort_key(t[0])))

    @property
    def masks(self):
        return {m for m, _ in self.subgroups}

    def at_cardinality(self, k):
        return [(m, met) for m, met in self.subgroups if popcount(m) == k]

    def best_per_cardinality(self) -> Dict[int, Tuple[int, SubgroupMetrics]]:
        best = {}
        for m, met in self.subgroups:  # already sorted, first hit wins
            best.setdefault(popcount(m), (m, met))
        return dict(sorted(best.items()))

    @property
    def best(self):
        return self.subgroups[0] if self.subgroups else None

    def top(self, n):
        return self.subgroups[:n]

    def to_csv(self, path, feature_names, source=""):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["source", "features", "k", "wracc", "coverage", "contrast",
                        "positive_rate", "size"])
            for m, met in self.subgroups:
                w.writerow([source, " & ".join(mask_names(m, feature_names)), popcount(m),
                            repr(met.wracc), repr(met.coverage), repr(met.contrast),
                            "" if met.positive_rate is None else repr(met.positive_rate),
                            met.size])


def exhaustive_enumerate(bd, k_max=EXHAUSTIVE_MAX_K, cap=EXHAUSTIVE_CAP) -> SearchResult:
    """Score every k-subset for k = 1..min(8, n, k_max).

    Cardinalities with more than ``cap`` combinations are skipped with a warning.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    bits = bd.bits
    out, skipped, done = [], [], []
    for k in range(1, min(EXHAUSTIVE_MAX_K, bd.n, k_max) + 1):
        total = comb(bd.n, k)
        if total > cap:
            logger.warning("skipping exhaustive k=%d: C(%d,%d)=%d exceeds cap %d",
                           k, bd.n, k, total, cap)
            skipped.append(k)
            continue
        for mask, size, pos in bits.iter_combinations(k):
            out.append((mask, metrics_from_counts(size, pos, bd.N, bits.n_pos)))
        done.append(k)
    return SearchResult(out, skipped, done)


def _rank_key(item):
    mask, met = item
    return (-met.wracc, mask_sort_key(mask))


def beam_search(bd, cfg: BeamConfig = None) -> SearchResult:
    """Level-wise beam search; every evaluated candidate of every depth is kept."""
    cfg = cfg or BeamConfig()
    if bd.n < 1:
        raise ValueError("beam search needs at least one feature")
    bits = bd.bits

    def score(mask):
        size, pos = bits.counts(mask)
        return metrics_from_counts(size, pos, bd.N, bits.n_pos)

    discovered = {}
    candidates = [1 << i for i in range(bd.n)]
    depth = 1
    while candidates:
        level = []
        for m in candidates:
            if m not in discovered:
                discovered[m] = score(m)
            level.append((m, discovered[m]))
        level.sort(key=_rank_key)
        seeds = [m for m, _ in level[: cfg.width]]
        if depth >= cfg.max_depth:
            break
        # collect all extensions before the next level is ranked
        nxt = set()
        for s in seeds:
            for i in range(bd.n):
                if not s >> i & 1:
                    nxt.add(s | (1 << i))
        candidates = sorted(nxt, key=mask_sort_key)
        depth += 1
    return SearchResult(list(discovered.items()))


def beam_recall(exh: SearchResult, beam: SearchResult, K, top=20) -> int:
    """How many of the exhaustive top-``top`` masks at cardinality K beam search also found."""
    if K in exh.skipped_cardinalities or K not in exh.evaluated_cardinalities:
        raise ValueError(f"exhaustive enumeration did not run at cardinality {K}")
    best = [m for m, _ in exh.at_cardinality(K)[:top]]
    return len(set(best) & beam.masks)
