"""Plot-data CSVs for a run directory and matplotlib figures rendered from them."""

import csv
import os

import numpy as np

from .subgroup import mask_names, popcount

SCATTER = "plot_wracc_vs_size.csv"
PARETO = "plot_pareto.csv"
DEPTH = "plot_depth_comparison.csv"
SCALING = "scaling_table.csv"
QUBO_FIT = "plot_qubo_fit.csv"

SCATTER_HEADER = ["source", "features", "k", "size", "coverage", "wracc", "positive_rate"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _subgroup_rows(source, items, names):
    for m, met in items:
        yield [source, " & ".join(mask_names(m, names)), popcount(m), met.size, met.coverage,
               met.wracc, met.positive_rate]


def emit_plot_data(res, out_dir):
    """Write the CSVs behind the figures; returns their paths.

    Works with partial results: sources that did not run contribute no rows.
    """
    from .subgroup import evaluate_subgroup
    names = res.selected.feature_names if res.selected is not None else []
    cfg = res.config
    K = cfg.target_k
    scatter = []
    if res.exhaustive is not None:
        scatter += _subgroup_rows("exhaustive", res.exhaustive.subgroups, names)
    if res.beam is not None:
        scatter += _subgroup_rows("beam", res.beam.subgroups, names)
    for rep in res.report.get("qaoa", []):
        items = [(row["mask"], evaluate_subgroup(res.selected, row["mask"])) for row in rep["top_n"]]
        scatter += _subgroup_rows(f"qaoa_p{rep['depth']}", items, names)
    paths = [_write(os.path.join(out_dir, SCATTER), SCATTER_HEADER, scatter)]

    pareto = [r for r in scatter if r[2] == K]
    paths.append(_write(os.path.join(out_dir, PARETO), SCATTER_HEADER, pareto))

    depth_rows = []
    for run in res.runs:
        sampled = run.mass_by_weight()
        exact = run.mass_by_weight(exact=True)
        for w in range(run.n + 1):
            depth_rows.append([run.p, w, float(sampled[w]), float(exact[w])])
    paths.append(_write(os.path.join(out_dir, DEPTH),
                        ["depth", "hamming_weight", "sampled_probability", "exact_probability"],
                        depth_rows))

    scaling = []
    for rep in res.report.get("qaoa", []):
        rt = rep["ratios"]
        scaling.append([cfg.attack_filter, len(names), K, rt["wracc_star"], rt["wracc_best_at_K"],
                        rt["r_W"], rep["depth"]])
    paths.append(_write(os.path.join(out_dir, SCALING),
                        ["attack", "qubits", "k", "classical", "quantum", "ratio", "depth"],
                        scaling))

    fit_rows = []
    if res.fit is not None:
        for m, t, p in zip(res.fit.masks, res.fit.target, res.fit.predicted):
            fit_rows.append([int(m), popcount(int(m)), float(t), float(p)])
    paths.append(_write(os.path.join(out_dir, QUBO_FIT),
                        ["mask", "k", "neg_wracc", "predicted"], fit_rows))
    return paths


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(rows, key):
    return np.array([float(r[key]) if r[key] != "" else np.nan for r in rows])


def render_figures(out_dir):
    """PNG figures next to the CSVs (headless backend)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = []
    styles = {"exhaustive": ("tab:green", "*", 60), "beam": ("tab:red", "^", 30)}

    rows = _read(os.path.join(out_dir, SCATTER))
    fig, ax = plt.subplots(figsize=(6, 4))
    for src in sorted({r["source"] for r in rows}):
        sel = [r for r in rows if r["source"] == src]
        color, marker, size = styles.get(src, ("tab:orange", "D", 25))
        ax.scatter(_num(sel, "size"), _num(sel, "wracc"), c=color, marker=marker, s=size,
                   alpha=0.6, label=src, edgecolors="none")
    ax.set_xlabel("subgroup size")
    ax.set_ylabel("WRAcc (train)")
    if rows:
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    out.append(os.path.join(out_dir, "fig_wracc_vs_size.png"))
    fig.savefig(out[-1], dpi=120)
    plt.close(fig)

    rows = _read(os.path.join(out_dir, PARETO))
    fig, ax = plt.subplots(figsize=(6, 4))
    for src in sorted({r["source"] for r in rows}):
        sel = [r for r in rows if r["source"] == src]
        w = _num(sel, "wracc")
        scale = 400.0 / max(np.nanmax(w), 1e-12) if w.size else 1.0
        color, marker, _ = styles.get(src, ("tab:orange", "D", 25))
        ax.scatter(_num(sel, "coverage"), _num(sel, "positive_rate"), s=np.nan_to_num(w) * scale + 5,
                   c=color, marker="o", alpha=0.4, label=src)
    ax.set_xlabel("coverage")
    ax.set_ylabel("positive rate")
    if rows:
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    out.append(os.path.join(out_dir, "fig_pareto.png"))
    fig.savefig(out[-1], dpi=120)
    plt.close(fig)

    rows = _read(os.path.join(out_dir, DEPTH))
    fig, ax = plt.subplots(figsize=(6, 4))
    depths = sorted({int(r["depth"]) for r in rows})
    width = 0.8 / max(len(depths), 1)
    for j, p in enumerate(depths):
        sel = [r for r in rows if int(r["depth"]) == p]
        ax.bar(_num(sel, "hamming_weight") + j * width, _num(sel, "sampled_probability"),
               width=width, label=f"p={p}")
    ax.set_xlabel("Hamming weight")
    ax.set_ylabel("sampled probability")
    if rows:
        ax.legend(frameon=False)
    fig.tight_layout()
    out.append(os.path.join(out_dir, "fig_depth_comparison.png"))
    fig.savefig(out[-1], dpi=120)
    plt.close(fig)

    rows = _read(os.path.join(out_dir, QUBO_FIT))
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if rows:
        t, p = _num(rows, "neg_wracc"), _num(rows, "predicted")
        ax.scatter(t, p, s=4, alpha=0.4)
        lo, hi = np.nanmin([t.min(), p.min()]), np.nanmax([t.max(), p.max()])
        ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
    ax.set_xlabel("-WRAcc")
    ax.set_ylabel("quadratic surrogate")
    fig.tight_layout()
    out.append(os.path.join(out_dir, "fig_qubo_fit.png"))
    fig.savefig(out[-1], dpi=120)
    plt.close(fig)
    return out
