"""Figures rendered from a finished convergence CSV.

Strictly downstream of the CSV contract: everything here reads only the rows
written by :func:`polylink.experiment.run_convergence_experiment`.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .experiment import read_rows  # noqa: E402

__all__ = ["render_report"]

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def _column(rows, name):
    return np.array([r[name] for r in rows if r[name] is not None], dtype=float)


def _grouped(rows, name):
    """(sorted n values, list of value arrays per n) for a CSV column."""
    ns = sorted({r["n"] for r in rows})
    per_n = []
    for n in ns:
        per_n.append(_column([r for r in rows if r["n"] == n], name))
    keep = [i for i, v in enumerate(per_n) if len(v)]
    return [ns[i] for i in keep], [per_n[i] for i in keep]


def render_report(csv_path, outdir=None, normalization: str = "log") -> list[str]:
    """Render convergence figures next to (or into outdir from) a CSV.

    normalization 'log' plots n*T^d/log n, 'k' plots n*T^d/k(n).  Writes up to
    three PNGs (<stem>_convergence, <stem>_distribution, <stem>_ratio) and
    returns their paths.
    """
    if normalization not in ("log", "k"):
        raise ValueError(f"normalization must be 'log' or 'k', got {normalization!r}")
    rows = read_rows(csv_path)
    if not rows:
        raise ValueError(f"no rows in {csv_path}")
    stem = Path(csv_path).stem
    out = Path(outdir) if outdir is not None else Path(csv_path).parent
    os.makedirs(out, exist_ok=True)

    l_col = f"nLd_{normalization}"
    m_col = f"nMd_{normalization}"
    limit_vals = _column(rows, "limit_const")
    limit = float(limit_vals[0]) if len(limit_vals) else None
    written = []

    with plt.rc_context(_STYLE):
        # median and interquartile band of the normalized statistic per n
        fig, ax = plt.subplots()
        for col, label, color in ((l_col, "largest k-NN link", "tab:blue"),
                                  (m_col, "k-connectivity", "tab:orange")):
            ns, groups = _grouped(rows, col)
            if not ns:
                continue
            med = [float(np.median(g)) for g in groups]
            q1 = [float(np.percentile(g, 25)) for g in groups]
            q3 = [float(np.percentile(g, 75)) for g in groups]
            ax.plot(ns, med, "o-", color=color, label=label)
            ax.fill_between(ns, q1, q3, color=color, alpha=0.2)
        if limit is not None:
            ax.axhline(limit, color="k", ls="--", lw=1, label="limit constant")
        ax.set_xscale("log")
        ax.set_xlabel("n")
        norm_label = "log n" if normalization == "log" else "k(n)"
        ax.set_ylabel(f"n T^d / {norm_label}")
        ax.set_title("normalized thresholds vs sample size")
        ax.legend()
        p = out / f"{stem}_convergence.png"
        fig.savefig(p, bbox_inches="tight")
        plt.close(fig)
        written.append(str(p))

        # distribution at the largest n
        n_max = max(r["n"] for r in rows)
        at_max = [r for r in rows if r["n"] == n_max]
        fig, ax = plt.subplots()
        plotted = False
        for col, label, color in ((l_col, "largest k-NN link", "tab:blue"),
                                  (m_col, "k-connectivity", "tab:orange")):
            vals = _column(at_max, col)
            if len(vals):
                ax.hist(vals, bins=max(5, len(vals) // 4), alpha=0.6,
                        color=color, label=label)
                plotted = True
        if plotted:
            if limit is not None:
                ax.axvline(limit, color="k", ls="--", lw=1, label="limit constant")
            ax.set_xlabel(f"n T^d / {norm_label} at n = {n_max}")
            ax.set_ylabel("trials")
            ax.set_title("normalized threshold distribution")
            ax.legend()
            p = out / f"{stem}_distribution.png"
            fig.savefig(p, bbox_inches="tight")
            written.append(str(p))
        plt.close(fig)

        # ratio of the two thresholds (tends to 1)
        ns_l, gl = _grouped(rows, "L")
        ns_m, gm = _grouped(rows, "M")
        common = [n for n in ns_l if n in ns_m]
        if common:
            ratio = []
            for n in common:
                ml = float(np.median(gl[ns_l.index(n)]))
                mm = float(np.median(gm[ns_m.index(n)]))
                ratio.append(mm / ml if ml > 0 else np.nan)
            fig, ax = plt.subplots()
            ax.plot(common, ratio, "o-", color="tab:green")
            ax.axhline(1.0, color="k", ls="--", lw=1)
            ax.set_xscale("log")
            ax.set_xlabel("n")
            ax.set_ylabel("median M / median L")
            ax.set_title("threshold ratio")
            p = out / f"{stem}_ratio.png"
            fig.savefig(p, bbox_inches="tight")
            plt.close(fig)
            written.append(str(p))
    return written
