"""Render figures from a results CSV next to the delimited output.

Reads the summary rows of an experiment CSV and writes one PNG per
figure into the output directory. Returns the list of files written.
Figures depend only on the CSV, so they can be regenerated at any time
with the ``plot`` subcommand.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness.runners import CSV_SCHEMA_TAG  # noqa: E402

__all__ = ["render_figures"]

_METHOD_STYLE = {
    "pb": dict(color="tab:blue", marker="o", label="parametric bootstrap"),
    "fisher-private": dict(color="tab:red", marker="s", label="plug-in (private)"),
    "fisher-nonprivate": dict(color="tab:green", marker="^", label="plug-in (non-private)"),
    "sa": dict(color="tab:purple", marker="d", label="subsample & aggregate"),
}


def _read_summaries(csv_path):
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or reader.fieldnames[0] != CSV_SCHEMA_TAG:
            raise ValueError(f"{csv_path} does not carry the {CSV_SCHEMA_TAG} schema")
        return [row for row in reader if row[CSV_SCHEMA_TAG] == "summary"]


def _float(value):
    return float(value) if value not in ("", None) else None


def _slug(value) -> str:
    return str(value).replace(".", "p").replace("-", "m").replace("inf", "inf")


def _methods_in(rows):
    seen = []
    for row in rows:
        if row["method"] not in seen:
            seen.append(row["method"])
    return seen


def _save(fig, outdir: Path, name: str, written: list):
    path = outdir / name
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    written.append(path)


def _coverage_figures(rows, outdir, written):
    settings = sorted({(r["param"], r["n"], r["epsilon"]) for r in rows})
    for param, n, epsilon in settings:
        group = [r for r in rows if (r["param"], r["n"], r["epsilon"]) == (param, n, epsilon)]
        fig, ax = plt.subplots(figsize=(5, 4))
        for method in _methods_in(group):
            pts = [(1.0 - float(r["alpha"]), _float(r["covered"]))
                   for r in group if r["method"] == method]
            pts = [(x, y) for x, y in pts if y is not None]
            if not pts:
                continue
            pts.sort()
            ax.plot(*zip(*pts), **_METHOD_STYLE.get(method, {"label": method}))
        ax.plot([0, 1], [0, 1], color="gray", linestyle=":", linewidth=1)
        ax.set_xlabel("nominal coverage")
        ax.set_ylabel("observed coverage")
        ax.set_title(f"{group[0]['model']} {param}, n={n}, eps={epsilon}")
        ax.legend(fontsize=8)
        _save(fig, outdir, f"coverage_{param}_n{_slug(n)}_eps{_slug(epsilon)}.png", written)


def _width_figures(rows, outdir, written, x_field):
    settings = sorted({(r["param"], r["alpha"]) for r in rows})
    for param, alpha in settings:
        group = [r for r in rows if (r["param"], r["alpha"]) == (param, alpha)]
        fig, ax = plt.subplots(figsize=(5, 4))
        for method in _methods_in(group):
            pts = [(float(r[x_field]), _float(r["width"]))
                   for r in group if r["method"] == method]
            pts = [(x, y) for x, y in pts if y is not None]
            if not pts:
                continue
            pts.sort()
            ax.plot(*zip(*pts), **_METHOD_STYLE.get(method, {"label": method}))
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(x_field)
        ax.set_ylabel("mean interval width")
        ax.set_title(f"{group[0]['model']} {param}, level {1.0 - float(alpha):g}")
        ax.legend(fontsize=8)
        _save(fig, outdir, f"width_{param}_alpha{_slug(alpha)}.png", written)


def _bias_figures(rows, outdir, written):
    settings = sorted({(r["param"], r["n"], r["epsilon"]) for r in rows})
    for param, n, epsilon in settings:
        group = [r for r in rows if (r["param"], r["n"], r["epsilon"]) == (param, n, epsilon)]
        group.sort(key=lambda r: float(r["clamp_threshold"]))
        thresholds = [float(r["clamp_threshold"]) for r in group]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(thresholds, [_float(r["estimate"]) for r in group],
                color="tab:red", marker="o", label="private estimate")
        ax.plot(thresholds, [_float(r["estimate_bc"]) for r in group],
                color="tab:blue", marker="s", label="bias-corrected")
        ax.axhline(float(group[0]["true_value"]), color="gray", linestyle=":",
                   label="true value")
        ax.set_xlabel("clamp threshold")
        ax.set_ylabel(f"mean estimate of {param}")
        ax.set_title(f"{group[0]['model']} {param}, n={n}, eps={epsilon}")
        ax.legend(fontsize=8)
        _save(fig, outdir, f"bias_{param}_n{_slug(n)}_eps{_slug(epsilon)}.png", written)


def _sa_figures(rows, outdir, written):
    param = rows[0]["param"]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for method in _methods_in(rows):
        group = sorted((r for r in rows if r["method"] == method),
                       key=lambda r: float(r["n"]))
        ns = [float(r["n"]) for r in group]
        axes[0].plot(ns, [_float(r["covered"]) for r in group],
                     **_METHOD_STYLE.get(method, {"label": method}))
        axes[1].plot(ns, [_float(r["width"]) for r in group],
                     **_METHOD_STYLE.get(method, {"label": method}))
    nominal = 1.0 - float(rows[0]["alpha"])
    axes[0].axhline(nominal, color="gray", linestyle=":", linewidth=1)
    axes[0].set_xlabel("n"); axes[0].set_ylabel("coverage")
    axes[1].set_xlabel("n"); axes[1].set_ylabel("mean interval width")
    axes[1].set_yscale("log")
    for ax in axes:
        ax.set_xscale("log")
        ax.legend(fontsize=8)
    fig.suptitle(f"bootstrap vs subsample & aggregate, {param}")
    _save(fig, outdir, f"sa_compare_{param}.png", written)


def render_figures(csv_path, outdir) -> list:
    """Render every figure the CSV supports; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summaries = _read_summaries(csv_path)
    if not summaries:
        return []
    experiment = summaries[0]["experiment"]
    written: list = []
    if experiment in ("coverage", "width", "ols-coverage"):
        _coverage_figures(summaries, outdir, written)
        if len({r["n"] for r in summaries}) > 1:
            _width_figures(summaries, outdir, written, "n")
        elif len({r["epsilon"] for r in summaries}) > 1:
            _width_figures(summaries, outdir, written, "epsilon")
    elif experiment == "bias":
        _bias_figures(summaries, outdir, written)
    elif experiment == "sa-compare":
        _sa_figures(summaries, outdir, written)
    return written
