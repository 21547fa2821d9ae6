"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Criteria 1-6 and 8 run on the NSL-KDD benchmark files, read from the
directory in ``$NSL_KDD_DIR`` (``KDDTrain+.txt`` and ``KDDTest+.txt``). When
the files are absent these criteria fail rather than skip: they cannot be
demonstrated without the data. Criterion 7 and the synthetic half of
criterion 5 are self-contained.
"""

import os
import time

import numpy as np
import pytest

import test_evaluate
import test_hybrid
import test_qaoa
import test_qubo
import test_search
from conftest import ACCEPTANCE_LINES, weak_singles_dataset
from qaoa_sd import binarize, data, search
from qaoa_sd.pipeline import PipelineConfig, run_pipeline
from qaoa_sd.search import BeamConfig, beam_recall, beam_search, exhaustive_enumerate

DATA_DIR = os.environ.get("NSL_KDD_DIR", os.path.expanduser("~/data/nsl-kdd"))
REQUIRED = ("KDDTrain+.txt", "KDDTest+.txt")

PROBE_K3_WRACC = 0.103515


def record(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def require_data(criterion):
    missing = [f for f in REQUIRED if not os.path.isfile(os.path.join(DATA_DIR, f))]
    if missing:
        record(criterion, False, f"NSL-KDD files {missing} not found in {DATA_DIR} "
                                 "(set NSL_KDD_DIR)")


@pytest.fixture(scope="module")
def r2l_run(tmp_path_factory):
    if any(not os.path.isfile(os.path.join(DATA_DIR, f)) for f in REQUIRED):
        return None
    cfg = PipelineConfig(data_dir=DATA_DIR, eval_mode="full", attack_filter="R2L", k_feat=10,
                         target_k=6, qubo_mode="exact", depths=[1, 2], restarts=5,
                         shots=100_000, seed=0, figures=False)
    t0 = time.time()
    res = run_pipeline(cfg, str(tmp_path_factory.mktemp("r2l")))
    return res, time.time() - t0


def _r2l(r2l_run, criterion):
    require_data(criterion)
    return r2l_run


def test_c1_simulator_optimum_recovery(r2l_run):
    res, elapsed = _r2l(r2l_run, "C1 optimum recovery")
    d1 = res.report["qaoa"][0]
    r_W = d1["ratios"]["r_W"]
    record("C1 optimum recovery", r_W == 1.0,
           f"p=1 r_W={r_W} (best {d1['ratios']['wracc_best_at_K']:.6f} vs exhaustive "
           f"{d1['ratios']['wracc_star']:.6f}); pipeline wall time {elapsed:.1f}s (target < 300s)")


def test_c2_depth_two_concentration(r2l_run):
    res, _ = _r2l(r2l_run, "C2 depth-2 concentration")
    m1, m2 = (d["mass_at_K"] for d in res.report["qaoa"][:2])
    e1, e2 = (d["exact_mass_at_K"] for d in res.report["qaoa"][:2])
    record("C2 depth-2 concentration", m2 > m1,
           f"sampled mass at |x|=6: p=1 {100 * m1:.1f}%, p=2 {100 * m2:.1f}% "
           f"(exact {100 * e1:.1f}% -> {100 * e2:.1f}%; reference 11.8% -> 13.7%)")


def test_c3_qubo_fit_quality(r2l_run):
    res, _ = _r2l(r2l_run, "C3 QUBO fit quality")
    q = res.report["qubo"]["fit_quality"]
    ok = q["r_squared"] >= 0.97 and abs(q["spearman_rho"]) >= 0.85
    record("C3 QUBO fit quality", ok,
           f"R^2={q['r_squared']:.4f} (>= 0.97), |rho|={abs(q['spearman_rho']):.4f} (>= 0.85)")


def test_c4_ground_state_cardinality(r2l_run):
    res, _ = _r2l(r2l_run, "C4 ground-state guarantee")
    E = res.q.energy(np.arange(1 << res.selected.n))
    ground = int(np.argmin(E))
    w = bin(ground).count("1")
    opt_mask = res.exhaustive.best_per_cardinality()[6][0]
    record("C4 ground-state guarantee", w == 6 and ground == opt_mask,
           f"penalised argmin over 2^10 has weight {w}, mask {ground}; exhaustive optimum mask "
           f"{opt_mask}; lambda={res.report['qubo']['lambda']:.4f}")


def test_c5_beam_recall(r2l_run):
    bd = weak_singles_dataset()
    exh = exhaustive_enumerate(bd)
    narrow = beam_search(bd, BeamConfig(width=1, max_depth=4))
    planted_ok = (exh.best_per_cardinality()[2][0] == 0b0011
                  and beam_recall(exh, narrow, 2, top=1) == 0)
    record("C5b weak-singles property", planted_ok,
           "exhaustive finds the planted pair, width-1 beam recall 0")
    res, _ = _r2l(r2l_run, "C5a beam recall")
    recall = res.report["beam"]["recall_at_K"]
    record("C5a beam recall", recall is not None and 14 <= recall <= 18,
           f"R2L 10-feature k=6 recall {recall}/20 (accepted [14, 18], reference 16)")


def test_c6_probe_classical_column():
    require_data("C6 Probe k=3 classical optimum")
    raw_train = data.load_nslkdd(os.path.join(DATA_DIR, "KDDTrain+.txt"))
    enc, _ = data.encode_categoricals(raw_train, 0.9)
    train = data.filter_attacks(enc, "Probe")
    model = binarize.fit_binarization(train, "mean", True)
    bd, _ = binarize.rank_and_select(binarize.apply_binarization(model, train, "1"), 10, model)
    exh = search.exhaustive_enumerate(bd, k_max=3)
    mask, met = exh.best_per_cardinality()[3]
    rel = abs(met.wracc - PROBE_K3_WRACC) / PROBE_K3_WRACC
    record("C6 Probe k=3 classical optimum", rel <= 0.05,
           f"WRAcc*={met.wracc:.6f} vs 0.103515 (rel. diff {100 * rel:.2f}%, tolerance 5%; "
           "preprocessing variance applies)")


PROPERTY_SUITES = {
    "QUBO<->Ising equality, 20 instances n<=12, 1e-9": test_qubo.test_ising_equality_random_instances,
    "penalty expansion == lambda(sum x - K)^2, 1000 triples, 1e-12":
        test_qubo.test_penalty_expansion_identity,
    "statevector norm after every layer": lambda: test_qaoa.test_norm_after_every_layer(
        np.random.default_rng(0)),
    "gamma=0 uniformity": lambda: test_qaoa.test_zero_angles_uniform(
        np.random.default_rng(1), "gamma"),
    "beta=0 uniformity": lambda: test_qaoa.test_zero_angles_uniform(
        np.random.default_rng(2), "beta"),
    "single-qubit <Z> = sin2b sin2g on 100 points, 1e-9": test_qaoa.test_single_qubit_closed_form,
    "Fisher p == hypergeometric oracle, margins <= 30":
        test_evaluate.test_fisher_against_oracle_all_small_tables,
    "permutation calibration KS < 0.1, 200 nulls": test_evaluate.test_permutation_calibration,
    "exhaustive >= beam, 50 random datasets": test_search.test_exhaustive_dominates_beam_random,
    "hybrid DR >= tier-2 DR, 20 random pairs": test_hybrid.test_dr_monotone_random_pairs,
}


@pytest.mark.parametrize("name", list(PROPERTY_SUITES))
def test_c7_property_suites(name):
    try:
        PROPERTY_SUITES[name]()
        ok, detail = True, "holds"
    except AssertionError as exc:
        ok, detail = False, f"violated: {exc}"
    record(f"C7 {name}", ok, detail)


def test_c8_hybrid_ordering(r2l_run):
    res, _ = _r2l(r2l_run, "C8 hybrid ordering")
    h = res.report["hybrid"]
    q, c, b = (h[k]["detection_rate"] for k in ("quantum", "classical", "baseline"))
    record("C8 hybrid ordering", q >= c >= b,
           f"DR quantum {q:.4f} >= classical {c:.4f} >= baseline {b:.4f} "
           f"(F1 {h['quantum']['f1']:.3f} / {h['classical']['f1']:.3f} / {h['baseline']['f1']:.3f})")
