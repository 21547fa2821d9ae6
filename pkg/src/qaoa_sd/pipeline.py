"""End-to-end run: preprocessing, baselines, QUBO, QAOA, evaluation, artifacts."""

import hashlib
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from . import binarize, data, evaluate, hybrid, qaoa, qubo, search
from .subgroup import evaluate_subgroup, mask_names, popcount, render_rule

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
PHASES = {1: "preprocessing", 2: "baselines", 3: "qubo", 4: "qaoa", 5: "evaluation",
          6: "artifacts"}
SEED_STREAMS = ("split", "surrogate", "qaoa", "permutation")


@dataclass
class PipelineConfig:
    data_dir: Optional[str] = None
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    eval_mode: str = "full"
    holdout: float = 0.2
    attack_filter: str = "all"
    ig_coverage: float = 0.9
    side: str = "1"
    threshold_strategy: str = "mean"
    align: bool = True
    k_feat: int = 10
    target_k: int = 6
    free_cardinality: bool = False
    beam_width: int = 10
    beam_depth: int = 10
    exhaustive_cap: int = 50_000
    exhaustive_k_max: int = 8
    recall_top: int = 20
    qubo_mode: str = "auto"
    oversample: int = 10
    fit_sample: str = "weighted"
    k_weight: float = 2.0
    depths: List[int] = field(default_factory=lambda: [1, 2])
    restarts: int = 5
    max_iters: int = 100
    shots: int = 100_000
    max_qubits: int = 24
    n_top: int = 50
    permutations: int = 1000
    min_support: int = 10
    classical_rules: int = 30
    quantum_rules: int = 15
    rule_min_positive_rate: float = 0.7
    seed: int = 0
    output_dir: str = "runs"
    figures: bool = True

    def validate(self):
        if self.eval_mode not in data.EVAL_MODES:
            raise ValueError(f"eval_mode must be one of {data.EVAL_MODES}")
        if self.attack_filter not in data.FILTER_MODES:
            raise ValueError(f"attack_filter must be one of {data.FILTER_MODES}")
        if str(self.side) not in ("0", "1", "both"):
            raise ValueError("side must be 0, 1 or both")
        if self.qubo_mode not in ("auto", "exact", "surrogate"):
            raise ValueError("qubo_mode must be auto, exact or surrogate")
        if not self.depths or sorted(self.depths) != list(self.depths) or min(self.depths) < 1:
            raise ValueError("depths must be a non-empty ascending list of positive ints")
        if not 1 <= self.target_k <= self.k_feat:
            raise ValueError("target_k must lie in [1, k_feat]")
        if self.train_path is None and self.data_dir is None:
            raise ValueError("give either data_dir or train_path")
        if self.restarts < 1 or self.shots < 1 or self.permutations < 1:
            raise ValueError("restarts, shots and permutations must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["side"] = str(d["side"])
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def seed_streams(self):
        return {name: int(np.random.SeedSequence([self.seed, i]).generate_state(1)[0])
                for i, name in enumerate(SEED_STREAMS)}


class PipelineError(RuntimeError):
    def __init__(self, phase, message):
        self.phase = phase
        super().__init__(f"phase {phase} ({PHASES[phase]}): {message}")


@dataclass
class PipelineResult:
    config: PipelineConfig
    report: dict
    out_dir: str
    selected: Optional[binarize.BinaryDataset] = None
    test_selected: Optional[binarize.BinaryDataset] = None
    exhaustive: Optional[search.SearchResult] = None
    beam: Optional[search.SearchResult] = None
    fit: Optional[qubo.QuboFit] = None
    ising: Optional[qubo.IsingModel] = None
    energies: Optional[np.ndarray] = None
    runs: List[qaoa.QaoaRun] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)
    model: Optional[binarize.BinarizationModel] = None
    ranking: Optional[binarize.FeatureRanking] = None
    train_full: Optional[binarize.BinaryDataset] = None
    test_full: Optional[binarize.BinaryDataset] = None
    test_encoded: Optional[data.EncodedDataset] = None
    q_obj: Optional[qubo.QuboModel] = None
    q: Optional[qubo.QuboModel] = None
    decoded: List[int] = field(default_factory=list)
    unique: List[int] = field(default_factory=list)


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(clean(obj), fh, indent=1, sort_keys=False, allow_nan=False)
        fh.write("\n")


def subgroup_row(mask, met, names):
    return {"features": mask_names(mask, names), "k": popcount(mask), "rule": render_rule(mask, names),
            **met.as_dict()}


def _resolve_paths(cfg):
    if cfg.train_path:
        return cfg.train_path, cfg.test_path
    return data.resolve_files(cfg.data_dir, cfg.eval_mode)


def _phase(n):
    logger.info("phase %d: %s", n, PHASES[n])


def run_pipeline(cfg: PipelineConfig, out_dir=None) -> PipelineResult:
    """Run every phase and write the run directory.

    Errors are re-raised as :class:`PipelineError` tagged with the phase, after
    whatever was computed so far has been flushed next to a ``FAILED`` marker.
    """
    cfg.validate()
    out_dir = out_dir or os.path.join(cfg.output_dir, cfg.digest())
    os.makedirs(out_dir, exist_ok=True)
    failed = os.path.join(out_dir, "FAILED")
    if os.path.exists(failed):
        os.remove(failed)
    seeds = cfg.seed_streams()
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), "seeds": seeds,
              "bit_order": "little-endian: bit i of a bitstring index selects feature i of "
                           "features.selected; CSV bitstrings list x_0 first",
              "conventions": {"fisher_test": "two-sided",
                              "permutation_p": "(exceed + 1) / (permutations + 1)",
                              "undefined": "null"}}
    res = PipelineResult(cfg, report, out_dir)
    started = time.time()
    phase = 1
    try:
        _phase(1)
        _preprocess(cfg, res, seeds)
        phase = 2
        _phase(2)
        _baselines(cfg, res)
        phase = 3
        _phase(3)
        _build_qubo(cfg, res, seeds)
        phase = 4
        _phase(4)
        _run_qaoa(cfg, res, seeds)
        phase = 5
        _phase(5)
        _evaluate(cfg, res, seeds)
        phase = 6
        report["run_info"] = {"started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(started)),
                              "elapsed_seconds": round(time.time() - started, 3)}
        _write_artifacts(cfg, res)
    except Exception as exc:
        err = exc if isinstance(exc, PipelineError) else PipelineError(phase, str(exc))
        report["failure"] = {"phase": phase, "phase_name": PHASES[phase], "message": str(exc)}
        try:
            dump_json(report, os.path.join(out_dir, "report.partial.json"))
        finally:
            with open(failed, "w") as fh:
                fh.write(f"{err}\n")
        raise err from exc
    return res


def _preprocess(cfg, res, seeds):
    train_path, test_path = _resolve_paths(cfg)
    raw_train, raw_test = data.load_split(train_path, test_path, cfg.eval_mode, seeds["split"],
                                          cfg.holdout)
    enc_train, encoder = data.encode_categoricals(raw_train, cfg.ig_coverage)
    enc_test = encoder.transform(raw_test)
    train = data.filter_attacks(enc_train, cfg.attack_filter)
    test = data.filter_attacks(enc_test, cfg.attack_filter)
    model = binarize.fit_binarization(train, cfg.threshold_strategy, cfg.align)
    bd_train = binarize.apply_binarization(model, train, cfg.side)
    bd_test = binarize.apply_binarization(model, test, cfg.side)
    selected, ranking = binarize.rank_and_select(bd_train, cfg.k_feat, model)
    if cfg.max_qubits < selected.n:
        raise ValueError(f"k_feat={selected.n} exceeds the simulator cap {cfg.max_qubits}")
    res.selected = selected
    res.test_selected = bd_test.columns(selected.feature_names)
    res.model = model
    res.train_full = bd_train
    res.test_full = bd_test
    res.test_encoded = test
    res.ranking = ranking
    res.report["data"] = {
        "train_file": train_path, "test_file": test_path,
        "raw_train_records": len(raw_train), "raw_test_records": len(raw_test),
        "raw_train_attack_rate": data.attack_rate(raw_train),
        "raw_test_attack_rate": data.attack_rate(raw_test),
        "train_records": len(train), "test_records": len(test),
        "train_p0": selected.p0, "test_p0": res.test_selected.p0,
        "encoded_columns": len(train.column_names),
        "categorical_kept": encoder.kept,
        "constant_columns": [n for n, c in zip(model.feature_names, model.constant) if c],
    }
    res.report["features"] = {
        "selected": selected.feature_names,
        "meaning": {n: model.describe(n) for n in selected.feature_names},
        "target_entropy_bits": ranking.target_entropy,
        "ranking": ranking.as_rows(),
    }


def _baselines(cfg, res):
    bd = res.selected
    exh = search.exhaustive_enumerate(bd, cfg.exhaustive_k_max, cfg.exhaustive_cap)
    beam = search.beam_search(bd, search.BeamConfig(cfg.beam_width, cfg.beam_depth))
    res.exhaustive, res.beam = exh, beam
    names = bd.feature_names
    K = cfg.target_k
    recall = None
    if K in exh.evaluated_cardinalities:
        recall = search.beam_recall(exh, beam, K, cfg.recall_top)
    exh_best = exh.best_per_cardinality()
    beam_best = beam.best_per_cardinality()
    res.report["exhaustive"] = {
        "evaluated_cardinalities": exh.evaluated_cardinalities,
        "skipped_cardinalities": exh.skipped_cardinalities,
        "n_subgroups": len(exh.subgroups),
        "best_per_k": [subgroup_row(m, met, names) for m, met in exh_best.values()],
        "wracc_star_at_K": exh_best[K][1].wracc if K in exh_best else None,
        "wracc_star_global": exh.best[1].wracc if exh.best else None,
        "top_at_K": [subgroup_row(m, met, names) for m, met in exh.at_cardinality(K)[:cfg.recall_top]],
    }
    res.report["beam"] = {
        "width": cfg.beam_width, "max_depth": cfg.beam_depth,
        "n_subgroups": len(beam.subgroups),
        "best_per_k": [subgroup_row(m, met, names) for m, met in beam_best.values()],
        "recall_at_K": recall, "recall_top": cfg.recall_top,
        "dominated_by_exhaustive": all(
            exh_best[k][1].wracc >= met.wracc - 1e-15
            for k, (_, met) in beam_best.items() if k in exh_best),
    }


def _build_qubo(cfg, res, seeds):
    bd = res.selected
    K = cfg.target_k
    mode = cfg.qubo_mode
    if mode == "auto":
        mode = "exact" if bd.n <= qubo.EXACT_MAX_N else "surrogate"
    if mode == "exact":
        fit = qubo.fit_qubo_exact(bd, K, cfg.fit_sample, cfg.k_weight)
        candidates = None
    else:
        fit = qubo.fit_qubo_surrogate(bd, cfg.oversample, seeds["surrogate"])
        candidates = fit.masks
    q_obj = fit.qubo.normalized()
    cal = None
    if not cfg.free_cardinality:
        cal = qubo.calibrate_penalty(q_obj, K, candidates)
    q = qubo.add_penalty(q_obj, cal, cfg.free_cardinality)
    ising = qubo.qubo_to_ising(q)
    energies = qaoa.energy_table(ising, cfg.max_qubits)
    ground = int(np.argmin(energies))
    res.fit, res.ising, res.energies = fit, ising, energies
    res.q_obj, res.q = q_obj, q
    exh_best = res.exhaustive.best_per_cardinality()
    target_best = exh_best.get(K) if not cfg.free_cardinality else res.exhaustive.best
    res.report["qubo"] = {
        "mode": mode, "fit_sample": cfg.fit_sample if mode == "exact" else "balanced-random",
        "variables": bd.n + bd.n * (bd.n - 1) // 2,
        "fit_quality": asdict(fit.quality),
        "lambda": cal.lam if cal else None,
        "calibration": {"best_energy": cal.best_energy, "needed": cal.needed} if cal else None,
        "offdiag_std": float(np.std(q.Q[np.triu_indices(bd.n, 1)])) if bd.n > 1 else 0.0,
        "ground_state": {
            "mask": ground, "features": mask_names(ground, bd.feature_names),
            "hamming_weight": popcount(ground), "energy": float(energies[ground]),
            "matches_exhaustive_optimum": bool(target_best is not None and target_best[0] == ground),
        },
    }


def _run_qaoa(cfg, res, seeds):
    res.runs = qaoa.run_depth_schedule(res.ising, cfg.depths, cfg.restarts, cfg.shots,
                                       seeds["qaoa"], cfg.max_iters, res.energies)


def _evaluate(cfg, res, seeds):
    bd, bd_test = res.selected, res.test_selected
    names = bd.feature_names
    K = cfg.target_k
    exh, beam = res.exhaustive, res.beam
    depth_reports, decoded_all = [], []
    for run in res.runs:
        sampled = [int(m) for m in run.sampled_masks()]
        r_E, e_best, e_ground = evaluate.energy_ratio(sampled, res.energies)
        r_W, w_best, m_best, denom = evaluate.wracc_ratio(sampled, bd, K, exh, cfg.free_cardinality)
        _, w_any, m_any, _ = evaluate.wracc_ratio(sampled, bd, K, exh, True)
        ratios = evaluate.ApproximationRatios(r_E, r_W, e_best, e_ground, w_best, denom,
                                              cfg.free_cardinality, w_any, m_best, m_any)
        top = evaluate.decode_top_n(run.frequencies, cfg.n_top)
        decoded_all += [m for m, _ in top]
        mass = run.mass_by_weight()
        exact_mass = run.mass_by_weight(exact=True)
        rows = []
        for rank, (m, prob) in enumerate(top, start=1):
            met = evaluate_subgroup(bd, m)
            rows.append({"rank": rank, "mask": m, "probability": prob,
                         "energy": float(res.energies[m]),
                         **subgroup_row(m, met, names),
                         "in_beam": m in beam.masks})
        depth_reports.append({
            "depth": run.p, "gammas": run.params.gammas, "betas": run.params.betas,
            "expectation": run.expectation, "restarts": run.restarts,
            "restart_values": run.restart_values, "evaluations": run.n_evals,
            "shots": run.shots, "distinct_sampled": len(sampled),
            "mass_at_K": float(mass[K]),
            "mass_within_1_of_K": float(mass[max(0, K - 1):K + 2].sum()),
            "exact_mass_at_K": float(exact_mass[K]),
            "mass_by_hamming_weight": mass,
            "ratios": asdict(ratios),
            "best_features_at_K": mask_names(m_best, names) if m_best is not None else None,
            "top_n": rows,
        })
    unique = evaluate.qaoa_unique(decoded_all, beam)

    # statistics and test-set metrics for every reported subgroup
    exh_best_K = exh.best_per_cardinality().get(K)
    pool = list(dict.fromkeys(decoded_all + ([exh_best_K[0]] if exh_best_K else [])
                               + ([beam.best[0]] if beam.best else [])))
    pool = [m for m in pool if m and evaluate_subgroup(bd, m).size >= cfg.min_support]
    stats = evaluate.stat_tests(bd, pool, cfg.permutations, seeds["permutation"])
    test_mets, _ = evaluate.test_generalization(pool, names, res.model, res.test_encoded, cfg.side)
    subgroups = {}
    for m, st, tm in zip(pool, stats, test_mets):
        subgroups[str(m)] = {
            "features": mask_names(m, names), "k": popcount(m),
            "train": evaluate_subgroup(bd, m).as_dict(), "test": tm.as_dict(),
            "stats": asdict(st), "qaoa_unique": m in unique, "in_beam": m in beam.masks,
        }
    for rep in depth_reports:
        for row in rep["top_n"]:
            row["test"] = evaluate_subgroup(bd_test, row["mask"]).as_dict()
    res.report["qaoa"] = depth_reports
    res.report["qaoa_unique"] = [{"mask": m, "features": mask_names(m, names),
                                  **evaluate_subgroup(bd, m).as_dict()} for m in unique]
    res.report["subgroups"] = subgroups
    res.report["test_generalization"] = {
        "exhaustive_best_at_K": (evaluate_subgroup(bd_test, exh_best_K[0]).as_dict()
                                 if exh_best_K else None),
        "beam_best": evaluate_subgroup(bd_test, beam.best[0]).as_dict() if beam.best else None,
    }
    res.unique = unique
    res.decoded = decoded_all
    res.report["hybrid"] = _hybrid(cfg, res)


def _hybrid(cfg, res):
    bd, names = res.selected, res.selected.feature_names
    model = res.model
    keep = [n for n, c in zip(model.feature_names, model.constant) if not c]
    train_full = res.train_full.columns(keep)
    test_full = res.test_full.columns(keep)
    if len(np.unique(train_full.y)) < 2:
        return None
    clf = hybrid.train_reference_classifier(train_full)
    classical = hybrid.select_rules(res.beam.subgroups, names, cfg.classical_rules, "classical",
                                    cfg.rule_min_positive_rate)
    qmasks = sorted(set(res.decoded), key=lambda m: (-evaluate_subgroup(bd, m).wracc, m))
    qsubs = [(m, evaluate_subgroup(bd, m)) for m in qmasks]
    quantum = hybrid.select_rules(qsubs, names, cfg.quantum_rules, "quantum",
                                  cfg.rule_min_positive_rate)
    out = {"tier2": "BernoulliNB(alpha=1) on all binarized features"}
    for label, rules in (("baseline", hybrid.RuleSet()), ("classical", classical),
                         ("quantum", quantum), ("combined", classical.union(quantum))):
        rep = hybrid.evaluate_hybrid(rules, clf, res.test_selected, test_full)
        out[label] = {**asdict(rep), "n_rules": len(rules),
                      "rules": [" AND ".join(f"{f} = 1" for f in r) for r in rules.rules]}
    return out


def _write_artifacts(cfg, res):
    from . import plots
    d = res.out_dir
    names = res.selected.feature_names
    res.model.save(os.path.join(d, "binarization_model.json"))
    qubo.save_json(res.q_obj, os.path.join(d, "qubo_objective.json"))
    qubo.save_json(res.q, os.path.join(d, "qubo.json"))
    qubo.save_json(res.ising, os.path.join(d, "ising.json"))
    res.exhaustive.to_csv(os.path.join(d, "exhaustive.csv"), names, "exhaustive")
    res.beam.to_csv(os.path.join(d, "beam.csv"), names, "beam")
    for run in res.runs:
        qaoa.write_distribution_csv(os.path.join(d, f"distribution_p{run.p}.csv"), run,
                                    res.energies)
    res.artifacts = plots.emit_plot_data(res, d)
    if cfg.figures:
        res.artifacts += plots.render_figures(d)
    dump_json(res.report, os.path.join(d, "report.json"))


def load_config(path):
    with open(path) as fh:
        return json.load(fh)
