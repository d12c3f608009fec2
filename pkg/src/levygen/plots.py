"""Figure rendering for report files.

Everything draws through the Agg backend into a PNG next to the delimited
output.  Figures are a reading aid only: no result is derived from them and
the CSV/JSON files stay authoritative.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["convergence_figure", "margins_figure"]


def convergence_figure(report, path, title: str = "small-time limit") -> None:
    """Per-t estimates with error bars against the reference band."""
    t = np.asarray(report.t_grid, dtype=float)
    means = np.array([row.mean for row in report.table])
    ses = np.array([row.stderr for row in report.table])

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.errorbar(t, means, yerr=3.0 * ses, fmt="o-", capsize=3,
                label="estimate (3 stderr)")
    ref = report.reference
    band = report.allowance_term
    ax.axhline(ref, color="k", lw=1.0, label="reference")
    if band > 0:
        ax.axhspan(ref - band, ref + band, color="k", alpha=0.12, lw=0)
    ax.plot([t[-1]], [report.extrapolated], marker="*", ms=12, color="C3",
            ls="none", label=f"extrapolated ({report.estimator})")
    ax.set_xscale("log")
    ax.invert_xaxis()  # reads left to right as t -> 0
    ax.set_xlabel("t")
    ax.set_ylabel("difference quotient")
    verdict = "pass" if report.passed else "fail"
    ax.set_title(f"{title}  [discrepancy {report.discrepancy:.3g}, {verdict}]")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def margins_figure(checks, path, title: str = "verification margins") -> None:
    """Horizontal bars, one per check; negative margin means failed."""
    names = [c["name"] for c in checks]
    margins = np.array([float(c["margin"]) for c in checks])
    colors = ["C2" if c["passed"] else "C3" for c in checks]

    fig, ax = plt.subplots(figsize=(6.4, 0.5 * max(len(names), 4) + 1.2))
    ypos = np.arange(len(names))
    ax.barh(ypos, margins, color=colors)
    ax.axvline(0.0, color="k", lw=1.0)
    ax.set_yticks(ypos)
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("margin (pass > 0)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
