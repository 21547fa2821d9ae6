"""Command line: ``qaoa-sd run`` executes the pipeline, ``qaoa-sd synth`` writes
synthetic NSL-KDD-format files for smoke runs."""

import argparse
import json
import logging
import sys
from dataclasses import MISSING, fields

from .pipeline import PipelineConfig, PipelineError, load_config, run_pipeline

HELP = {
    "data_dir": "directory holding the NSL-KDD files (names resolved per eval mode)",
    "train_path": "explicit training file (overrides data_dir)",
    "test_path": "explicit evaluation file",
    "eval_mode": "full | 20pct | train_only | hard",
    "holdout": "held-out fraction in train_only mode",
    "attack_filter": "all | DoS | Probe | R2L | U2R",
    "ig_coverage": "cumulative-IG fraction kept for high-cardinality categoricals",
    "side": "binary side: 1, 0 or both (both requires --align)",
    "threshold_strategy": "mean | entropy",
    "align": "per-feature polarity so that 1 means attack-like",
    "k_feat": "number of top-IG features (qubits)",
    "target_k": "target rule cardinality K",
    "free_cardinality": "no cardinality penalty; compare against the global optimum",
    "qubo_mode": "auto | exact | surrogate",
    "fit_sample": "exact-mode regression rows: all | weighted | k-only",
    "depths": "comma-separated ascending QAOA depths",
    "max_iters": "COBYLA evaluations per restart",
    "max_qubits": "statevector simulator qubit cap",
    "n_top": "most probable bitstrings decoded per depth",
    "min_support": "minimum subgroup size for statistical tests",
    "figures": "render PNG figures",
}


def _parse_bool(s):
    v = str(s).lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _parse_depths(s):
    return [int(p) for p in str(s).split(",") if p.strip()]


def _add_config_flags(parser):
    for f in fields(PipelineConfig):
        default = f.default if f.default is not MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        shown = ",".join(map(str, default)) if isinstance(default, list) else default
        kw = {"dest": f.name, "default": argparse.SUPPRESS,
              "help": f"{HELP.get(f.name, f.name.replace('_', ' '))} (default: {shown})"}
        if isinstance(default, bool):
            kw.update(type=_parse_bool, nargs="?", const=True, metavar="BOOL")
        elif isinstance(default, list):
            kw["type"] = _parse_depths
        elif isinstance(default, int):
            kw["type"] = int
        elif isinstance(default, float):
            kw["type"] = float
        parser.add_argument(flag, **kw)


def build_parser():
    parser = argparse.ArgumentParser(prog="qaoa-sd", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the full pipeline")
    run.add_argument("--config", help="JSON file with config values; flags override it")
    run.add_argument("--out", help="explicit run directory (default: <output-dir>/<config hash>)")
    _add_config_flags(run)
    syn = sub.add_parser("synth", help="write synthetic NSL-KDD-format files")
    syn.add_argument("out_dir")
    syn.add_argument("--n-train", type=int, default=4000)
    syn.add_argument("--n-test", type=int, default=1500)
    syn.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args):
    values = load_config(args.config) if args.config else {}
    for f in fields(PipelineConfig):
        if hasattr(args, f.name):
            values[f.name] = getattr(args, f.name)
    return PipelineConfig.from_dict(values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth":
        from .synthetic import write_synthetic_dir
        print(write_synthetic_dir(args.out_dir, args.n_train, args.n_test, args.seed))
        return 0
    try:
        cfg = config_from_args(args)
        cfg.validate()
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        res = run_pipeline(cfg, args.out)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = {"out_dir": res.out_dir,
               "r_W": [d["ratios"]["r_W"] for d in res.report["qaoa"]],
               "r_E": [d["ratios"]["r_E"] for d in res.report["qaoa"]]}
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
