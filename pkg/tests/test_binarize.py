import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import entropy_bits, info_gain
from qaoa_sd.binarize import (BinarizationModel, BinaryDataset, apply_binarization,
                              entropy_threshold, fit_binarization, rank_and_select,
                              rank_features)
from qaoa_sd.data import EncodedDataset
from qaoa_sd.infotheory import binary_entropy, information_gain


def _encoded(X, y, names=None):
    X = np.asarray(X, dtype=float)
    names = names or [f"c{i}" for i in range(X.shape[1])]
    y = np.asarray(y, dtype=np.int8)
    return EncodedDataset(X, names, y, np.where(y == 1, "R2L", "normal").astype(object))


def test_ig_hand_values():
    # H(Y) for p0 = 1/4 is 0.811278...; f = y removes it all, f = [0,0,1,1]
    # leaves H(1/2) on half the rows
    y = [0, 0, 0, 1]
    assert info_gain([0, 0, 0, 1], y) == pytest.approx(0.8112781244591328, abs=1e-12)
    assert info_gain([0, 0, 1, 1], y) == pytest.approx(0.8112781244591328 - 0.5, abs=1e-12)
    assert information_gain([0, 0, 0, 1], y) == pytest.approx(0.8113, abs=5e-5)
    assert information_gain([0, 0, 1, 1], y) == pytest.approx(0.3113, abs=5e-5)


def test_ig_independent_feature_is_zero():
    assert information_gain([0, 1, 0, 1], [0, 0, 1, 1]) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_ig_matches_oracle_and_complement(pairs):
    f = [a for a, _ in pairs]
    y = [b for _, b in pairs]
    ig = information_gain(f, y)
    assert ig == pytest.approx(info_gain(f, y), abs=1e-12)
    assert ig == pytest.approx(information_gain([1 - v for v in f], y), abs=1e-12)
    assert 0.0 <= ig <= entropy_bits(sum(y) / len(y)) + 1e-12


def test_binary_entropy_edges():
    np.testing.assert_allclose(binary_entropy([0.0, 0.5, 1.0]), [0.0, 1.0, 0.0])


def test_perfect_predictor_mean_strategy():
    y = np.array([0, 1, 1, 0, 1, 0, 0, 1])
    bd = apply_binarization(fit_binarization(_encoded(y[:, None], y), "mean", align=False),
                            _encoded(y[:, None], y))
    np.testing.assert_array_equal(bd.B[:, 0], y)


def test_entropy_threshold_finds_gap():
    x = np.concatenate([np.arange(0, 7.0), np.arange(8, 15.0)])
    y = (x > 7).astype(int)
    t, ig = entropy_threshold(x, y)
    assert 6.0 <= t < 8.0
    assert ig == pytest.approx(entropy_bits(y.mean()), abs=1e-12)
    # the oracle scan: same grid, hand IG per split, first maximum
    grid = np.linspace(x.min(), x.max(), min(200, np.unique(x).size) + 2)[1:-1]
    gains = [info_gain(list((x > g).astype(int)), list(y)) for g in grid]
    assert t == grid[int(np.argmax(gains))]


def test_entropy_threshold_tie_takes_smaller():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0, 0, 0, 0])
    t, ig = entropy_threshold(x, y)
    assert ig == 0.0
    assert t == np.linspace(0, 3, 6)[1]


def test_entropy_ig_not_worse_than_mean(rng):
    X = rng.normal(size=(500, 6)) + rng.integers(0, 2, size=(500, 1)) * np.arange(6) * 0.3
    y = (X[:, 3] + rng.normal(size=500) > 0.5).astype(int)
    enc = _encoded(X, y)
    ig_mean = information_gain_cols(apply_binarization(fit_binarization(enc, "mean"), enc))
    ig_ent = information_gain_cols(apply_binarization(fit_binarization(enc, "entropy"), enc))
    assert np.all(ig_ent >= ig_mean - 0.01)


def information_gain_cols(bd):
    return np.array([information_gain(bd.B[:, j], bd.y) for j in range(bd.n)])


def test_alignment_guarantee(rng):
    X = rng.normal(size=(400, 8))
    y = (X[:, 0] - X[:, 1] + 0.5 * rng.normal(size=400) > 0).astype(int)
    enc = _encoded(X, y)
    for strategy in ("mean", "entropy"):
        bd = apply_binarization(fit_binarization(enc, strategy, align=True), enc)
        p0 = y.mean()
        for j in range(bd.n):
            on = bd.B[:, j] == 1
            if on.any():
                assert y[on].mean() >= p0 - 1e-12


def test_single_feature_wracc_same_under_both_polarities(rng):
    from qaoa_sd.subgroup import evaluate_subgroup
    X = rng.normal(size=(300, 5))
    y = (X[:, 2] > 0.3).astype(int)
    enc = _encoded(X, y)
    model = fit_binarization(enc, "mean", align=True)
    one = apply_binarization(model, enc, "1")
    zero = apply_binarization(model, enc, "0")
    for j in range(5):
        a = evaluate_subgroup(one, 1 << j)
        b = evaluate_subgroup(zero, 1 << j)
        # complement subgroup: |p(sg) - p0| * coverage is equal on both sides
        assert a.wracc == pytest.approx(b.wracc, abs=1e-12)


def test_complement_and_idempotence(rng):
    X = rng.normal(size=(200, 4))
    y = (rng.random(200) < 0.3).astype(int)
    enc = _encoded(X, y)
    model = fit_binarization(enc, "entropy", align=True)
    b1 = apply_binarization(model, enc, "1")
    b0 = apply_binarization(model, enc, "0")
    np.testing.assert_array_equal(b0.B, 1 - b1.B)
    np.testing.assert_array_equal(apply_binarization(model, enc, "both").B, b1.B)
    np.testing.assert_array_equal(apply_binarization(model, enc, "1").B, b1.B)


def test_test_set_uses_train_thresholds(rng):
    Xtr = rng.normal(2.0, 3.0, size=(300, 3))
    ytr = (Xtr[:, 0] > 2.5).astype(int)
    model = fit_binarization(_encoded(Xtr, ytr), "mean", align=True)
    Xte = rng.normal(0.0, 1.0, size=(50, 3))
    bd = apply_binarization(model, _encoded(Xte, np.zeros(50)))
    mu, sd = Xtr[:, 0].mean(), Xtr[:, 0].std()
    hand = ((Xte[:, 0] - mu) / sd > 0).astype(int)
    if not model.polarity[0]:
        hand = 1 - hand
    np.testing.assert_array_equal(bd.B[:, 0], hand)


def test_side_both_requires_align(rng):
    enc = _encoded(rng.normal(size=(20, 2)), rng.integers(0, 2, 20))
    with pytest.raises(ValueError, match="align"):
        apply_binarization(fit_binarization(enc, align=False), enc, "both")


def test_column_mismatch(rng):
    enc = _encoded(rng.normal(size=(20, 2)), rng.integers(0, 2, 20))
    model = fit_binarization(enc)
    other = _encoded(rng.normal(size=(20, 2)), rng.integers(0, 2, 20), ["c0", "zz"])
    with pytest.raises(ValueError, match="mismatch"):
        apply_binarization(model, other)


def test_constant_column_binarizes_to_zero(caplog):
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    y = np.array([0, 1] * 5)
    model = fit_binarization(_encoded(X, y))
    assert model.constant.tolist() == [True, False]
    assert "constant" in caplog.text
    bd = apply_binarization(model, _encoded(X, y))
    assert bd.B[:, 0].sum() == 0
    _, ranking = rank_and_select(bd, 1, model)
    assert ranking.names == ["c1"]


def test_model_roundtrip_exact(tmp_path, rng):
    X = rng.normal(size=(100, 3)) * 1e3
    y = (rng.random(100) < 0.4).astype(int)
    enc = _encoded(X, y)
    model = fit_binarization(enc, "entropy")
    model.save(tmp_path / "m.json")
    back = BinarizationModel.load(tmp_path / "m.json")
    for a in ("means", "stds", "thresholds", "polarity", "constant"):
        np.testing.assert_array_equal(getattr(back, a), getattr(model, a))
    np.testing.assert_array_equal(apply_binarization(back, enc).B, apply_binarization(model, enc).B)


def test_ranking_order_and_selection():
    y = np.array([0, 0, 1, 1, 0, 1, 0, 1])
    B = np.column_stack([y, 1 - y, [0, 1, 0, 1, 0, 1, 0, 1], [0, 0, 0, 0, 1, 1, 1, 1]])
    bd = BinaryDataset(B, y, ["same", "anti", "noise", "half"])
    ranking = rank_features(bd)
    # exact ties on IG are broken by name
    assert ranking.names[:2] == ["anti", "same"]
    assert ranking.gains[0] == pytest.approx(1.0)
    top, _ = rank_and_select(bd, 2)
    assert top.feature_names == ["anti", "same"]
    np.testing.assert_array_equal(top.B[:, 1], y)
    with pytest.raises(ValueError):
        rank_and_select(bd, 5)
    with pytest.raises(ValueError):
        rank_and_select(bd, 0)
