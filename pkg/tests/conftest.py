import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from qaoa_sd.binarize import BinaryDataset  # noqa: E402
from qaoa_sd.synthetic import write_synthetic_dir  # noqa: E402


def random_binary(rng, N, n, p_feat=0.5, p_y=0.4):
    B = (rng.random((N, n)) < p_feat).astype(np.uint8)
    y = (rng.random(N) < p_y).astype(np.uint8)
    return BinaryDataset(B, y, [f"f{i}" for i in range(n)])


def planted_binary(rng, N, n, planted=(0, 1, 2), base=0.2, lift=0.6, p_feat=0.5):
    """Random features with a positive rate raised inside the conjunction of ``planted``."""
    B = (rng.random((N, n)) < p_feat).astype(np.uint8)
    inside = B[:, list(planted)].all(axis=1)
    y = (rng.random(N) < np.where(inside, base + lift, base)).astype(np.uint8)
    return BinaryDataset(B, y, [f"f{i}" for i in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    return write_synthetic_dir(str(d), n_train=3000, n_test=1200, seed=7)


def weak_singles_dataset(reps=100):
    """y = 1[f0 == f1]: the pair {f0, f1} is pure, but each alone has zero contrast.

    f2 is a mildly informative decoy (60% of positives vs 40% of negatives),
    f3 is balanced noise; a width-1 beam commits to f2 and never reaches the pair.
    """
    rows, y = [], []
    for a in (0, 1):
        for b in (0, 1):
            lab = int(a == b)
            for r in range(reps):
                decoy = int(r < (60 if lab else 40) * reps // 100)
                rows.append([a, b, decoy, r % 2])
                y.append(lab)
    return BinaryDataset(np.array(rows), np.array(y), ["f0", "f1", "f2", "f3"])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
