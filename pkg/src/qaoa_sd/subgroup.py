"""Conjunction-rule subgroups: membership, WRAcc and friends.

A subgroup is identified by an integer bitmask over the feature columns of a
:class:`~qaoa_sd.binarize.BinaryDataset`; bit ``i`` selects
``feature_names[i]``. A record is a member iff every selected feature is 1.
Membership is computed on packed column bitsets, which is what keeps
exhaustive enumeration over ~10^5 records tractable.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np


def mask_from_indices(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def mask_indices(mask: int) -> Tuple[int, ...]:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def mask_sort_key(mask: int):
    """Lexicographic order of the sorted feature-index tuple (deterministic tie-break)."""
    return mask_indices(mask)


def mask_from_names(names: Sequence[str], feature_names: Sequence[str]) -> int:
    return mask_from_indices(feature_names.index(n) for n in names)


def mask_names(mask: int, feature_names: Sequence[str]):
    return [feature_names[i] for i in mask_indices(mask)]


def render_rule(mask: int, feature_names: Sequence[str]) -> str:
    """``"a = 1 AND b = 1"``; 1 means the attack-like side after alignment."""
    if mask == 0:
        return "TRUE"
    return " AND ".join(f"{n} = 1" for n in mask_names(mask, feature_names))


class BitIndex:
    """Columns of a 0/1 matrix packed into uint64 words."""

    def __init__(self, B, y):
        B = np.asarray(B, dtype=bool)
        y = np.asarray(y, dtype=bool)
        self.N = y.shape[0]
        self.n = B.shape[1]
        self.n_pos = int(np.count_nonzero(y))
        self.cols = np.stack([self._pack(B[:, j]) for j in range(self.n)]) if self.n else None
        self.ybits = self._pack(y)
        self.full = self._pack(np.ones(self.N, dtype=bool))

    @staticmethod
    def _pack(v):
        packed = np.packbits(v.astype(bool))
        pad = (-packed.size) % 8
        if pad:
            packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
        return packed.view(np.uint64)

    def members(self, mask: int):
        words = self.full
        for i in mask_indices(mask):
            words = words & self.cols[i]
        return words

    def counts_of(self, words):
        size = int(np.bitwise_count(words).sum())
        pos = int(np.bitwise_count(words & self.ybits).sum())
        return size, pos

    def counts(self, mask: int):
        return self.counts_of(self.members(mask))

    def member_vector(self, mask: int):
        bits = np.unpackbits(self.members(mask).view(np.uint8))[: self.N]
        return bits.astype(bool)

    def iter_combinations(self, k: int):
        """Yield ``(mask, size, n_pos)`` for every k-subset, reusing prefix intersections."""
        n = self.n
        if k < 1 or k > n:
            return
        stack = [self.full]
        idx = []

        def rec(start):
            depth = len(idx)
            if depth == k:
                size, pos = self.counts_of(stack[-1])
                yield mask_from_indices(idx), size, pos
                return
            for i in range(start, n - (k - depth) + 1):
                idx.append(i)
                stack.append(stack[-1] & self.cols[i])
                yield from rec(i + 1)
                stack.pop()
                idx.pop()

        yield from rec(0)

    def all_subset_counts(self):
        """Arrays ``size[m]``, ``n_pos[m]`` for every mask ``m`` in ``[0, 2^n)``."""
        n = self.n
        size = np.zeros(1 << n, dtype=np.int64)
        pos = np.zeros(1 << n, dtype=np.int64)

        def rec(i, mask, words):
            if i == n:
                size[mask], pos[mask] = self.counts_of(words)
                return
            rec(i + 1, mask, words)
            rec(i + 1, mask | (1 << i), words & self.cols[i])

        rec(0, 0, self.full)
        return size, pos


def wracc_from_counts(size, n_pos, N, p0):
    """Vectorised WRAcc: (|sg|/N) * |p(sg) - p0|; zero for empty subgroups."""
    size = np.asarray(size, dtype=float)
    n_pos = np.asarray(n_pos, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        rate = np.where(size > 0, n_pos / np.maximum(size, 1), p0)
    return (size / N) * np.abs(rate - p0)


@dataclass(frozen=True)
class SubgroupMetrics:
    size: int
    coverage: float
    positive_rate: Optional[float]      # None when the subgroup is empty
    contrast: float
    wracc: float
    n_pos: int = 0

    def as_dict(self, prefix=""):
        return {f"{prefix}size": self.size, f"{prefix}coverage": self.coverage,
                f"{prefix}positive_rate": self.positive_rate, f"{prefix}contrast": self.contrast,
                f"{prefix}wracc": self.wracc}


def metrics_from_counts(size, n_pos, N, n_pos_total) -> SubgroupMetrics:
    if N == 0:
        return SubgroupMetrics(0, 0.0, None, 0.0, 0.0, 0)
    p0 = n_pos_total / N
    if size == 0:
        return SubgroupMetrics(0, 0.0, None, 0.0, 0.0, 0)
    rate = n_pos / size
    coverage = size / N
    contrast = abs(rate - p0)
    return SubgroupMetrics(int(size), coverage, rate, contrast, coverage * contrast, int(n_pos))


def evaluate_subgroup(bd, mask: int) -> SubgroupMetrics:
    """Metrics of the conjunction rule ``mask`` on a BinaryDataset.

    The empty mask selects every record (zero contrast by construction).
    """
    if mask < 0 or mask >> bd.n:
        raise ValueError(f"mask {mask:#x} has bits outside [0, {bd.n})")
    size, pos = bd.bits.counts(mask)
    return metrics_from_counts(size, pos, bd.N, bd.bits.n_pos)


def membership(bd, mask: int):
    return bd.bits.member_vector(mask)
