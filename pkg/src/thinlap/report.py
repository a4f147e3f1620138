"""Aggregation of experiment verdicts plus figure rendering.

``thinlap report`` scans an output directory for ``*_verdict.json``
files, writes a deterministic ``report.json`` / ``report.txt`` pair
(failures first, then alphabetical), and renders a PNG figure next to
every delimited artifact it knows how to plot.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ThinlapError
from .experiments import SCHEMA_VERSION, atomic_write_text, write_json


class ReportError(ThinlapError):
    """Raised when verdict files are missing or unreadable."""


def _load_verdicts(out_dir: Path) -> list[dict]:
    verdicts = []
    bad = []
    for path in sorted(out_dir.glob("*_verdict.json")):
        try:
            data = json.loads(path.read_text())
            if not isinstance(data, dict) or "checks" not in data:
                raise ValueError("missing checks")
            verdicts.append(data)
        except (OSError, ValueError) as exc:
            bad.append(f"{path.name}: {exc}")
    if bad:
        raise ReportError("unreadable verdict artifacts: " + "; ".join(bad))
    return verdicts


def _read_csv_columns(path: Path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=float)
    if data.ndim == 1:
        data = data.reshape(1, -1)
    return header, data


def _render_figures(out_dir: Path) -> list[str]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rendered = []

    def save(fig, stem):
        target = out_dir / f"{stem}.png"
        fig.savefig(target, dpi=120, bbox_inches="tight")
        plt.close(fig)
        rendered.append(target.name)

    for path in sorted(out_dir.glob("*.csv")):
        stem = path.stem
        try:
            header, data = _read_csv_columns(path)
        except Exception:
            continue
        if stem.endswith("_errors.csv".removesuffix(".csv")) or stem.endswith("_errors"):
            cols = {name: data[:, i] for i, name in enumerate(header)}
            ycol = "rel_error" if "rel_error" in cols else header[-1]
            y = cols[ycol]
            mask = np.isfinite(y) & (y > 0)
            if not np.any(mask):
                continue
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            ax.semilogy(cols["level"][mask], y[mask], "o-")
            ax.set_xlabel("refinement level")
            ax.set_ylabel("relative error")
            ax.set_title(stem)
            ax.grid(True, which="both", alpha=0.4)
            save(fig, stem)
        elif stem.endswith("_residuals"):
            cols = {name: data[:, i] for i, name in enumerate(header)}
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            ax.semilogy(cols["level"], cols["quotient_residual"], "o-", label="residual")
            ax.set_xlabel("refinement level")
            ax.set_ylabel("interior residual")
            ax.set_title(stem)
            ax.grid(True, which="both", alpha=0.4)
            ax.legend()
            save(fig, stem)
        elif stem.endswith("_holder"):
            radius, osc = data[:, 1], data[:, 2]
            mask = osc > 0
            if not np.any(mask):
                continue
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            ax.loglog(radius[mask], osc[mask], "o-")
            ax.set_xlabel("box radius")
            ax.set_ylabel("oscillation")
            ax.set_title(stem)
            ax.grid(True, which="both", alpha=0.4)
            save(fig, stem)
        elif stem.endswith("_capacity"):
            eps, cap, ref = data[:, 0], data[:, 1], data[:, 2]
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            ax.loglog(eps, cap, "o", label="minimized")
            ax.loglog(eps, ref, "-", label="closed form")
            ax.set_xlabel("inner radius")
            ax.set_ylabel("capacity")
            ax.set_title(stem)
            ax.grid(True, which="both", alpha=0.4)
            ax.legend()
            save(fig, stem)
        elif stem.endswith("_dtn"):
            cols = {name: data[:, i] for i, name in enumerate(header)}
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            ax.semilogy(cols["level"], cols["dtn_rel_error"], "o-", label="flux map")
            ax.semilogy(cols["level"], cols["energy_rel_error"], "s-", label="energy ratio")
            ax.set_xlabel("refinement level")
            ax.set_ylabel("relative error")
            ax.set_title(stem)
            ax.grid(True, which="both", alpha=0.4)
            ax.legend()
            save(fig, stem)
        elif stem.endswith("_table"):
            cols = {name: i for i, name in enumerate(header)}
            if "alpha_star" not in cols:
                continue
            a_col = data[:, cols["a"]]
            n_col = data[:, cols["n"]]
            alpha = data[:, cols["alpha_star"]]
            fig, ax = plt.subplots(figsize=(4.5, 3.4))
            for n in np.unique(n_col[np.isfinite(n_col)]):
                sel = n_col == n
                order = np.argsort(a_col[sel])
                ax.plot(a_col[sel][order], alpha[sel][order], "-", label=f"n = {int(n)}")
            ax.set_xlabel("weight exponent a")
            ax.set_ylabel("regularity cap")
            ax.set_title(stem)
            ax.grid(True, alpha=0.4)
            ax.legend()
            save(fig, stem)
    return rendered


def build_report(out_dir, render_figures: bool = True) -> dict:
    """Aggregate verdicts (and figures) in ``out_dir``; returns the report."""
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise ReportError(f"output directory {out_dir} does not exist")
    verdicts = _load_verdicts(out_dir)
    # failures first, then alphabetical: deterministic ordering
    verdicts.sort(key=lambda v: (bool(v.get("passed", False)), str(v.get("name", ""))))
    figures = _render_figures(out_dir) if render_figures else []
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiments": len(verdicts),
        "failed": sum(1 for v in verdicts if not v.get("passed", False)),
        "verdicts": verdicts,
        "figures": sorted(figures),
    }
    write_json(out_dir / "report.json", report)

    lines = [f"experiments: {report['experiments']}  failed: {report['failed']}", ""]
    for v in verdicts:
        status = "PASS" if v.get("passed") else "FAIL"
        lines.append(f"[{status}] {v.get('name')} ({v.get('kind')})")
        for check in v.get("checks", []):
            mark = "ok " if check.get("passed") else "BAD"
            lines.append(
                f"    {mark} {check.get('name')}: value={check.get('value'):.6g} "
                f"threshold={check.get('threshold'):.6g}"
            )
    lines.append("")
    lines.append(f"figures: {', '.join(report['figures']) if report['figures'] else 'none'}")
    atomic_write_text(out_dir / "report.txt", "\n".join(lines) + "\n")
    return report
