"""Figures for the experiment tables: matplotlib PNGs and gnuplot scripts.

Plotting only reads rows the experiments already computed; nothing here
feeds back into the CSV outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.frameon": False,
}
# no software tag, so identical inputs give identical bytes
PNG_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata=PNG_META)
    plt.close(fig)
    return path


def _qq(ax, p, label):
    p = np.sort(np.asarray([v for v in p if np.isfinite(v)], dtype=float))
    if p.size == 0:
        return
    u = (np.arange(1, p.size + 1) - 0.5) / p.size
    ax.plot(u, p, label=label)


def plot_phase_diagram(rows, curve, path) -> Path:
    """Existence fraction over (kappa, delta) with the QP boundary.

    A single-kappa grid is drawn as fraction against delta with the
    boundary estimate as a vertical band.
    """
    d = np.array([r[0] for r in rows])
    k = np.array([r[1] for r in rows])
    f = np.array([r[2] for r in rows])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        if np.unique(k).size == 1:
            order = np.argsort(d)
            ax.plot(d[order], f[order], "k-o", ms=3, label="LP existence")
            pt = curve[0]
            ax.axvspan(pt.delta_hat - 2 * pt.stderr, pt.delta_hat + 2 * pt.stderr,
                       color="r", alpha=0.15)
            ax.axvline(pt.delta_hat, color="r", label="QP boundary")
            ax.axhline(0.5, color="0.5", ls=":", lw=0.8)
            ax.set_xlabel("delta")
            ax.set_ylabel("fraction existing")
            ax.legend(loc="upper right")
            return _save(fig, path)
        sc = ax.scatter(k, d, c=f, cmap="gray", vmin=0, vmax=1, marker="s", s=40,
                        edgecolors="0.6", linewidths=0.4)
        fig.colorbar(sc, ax=ax, label="fraction existing")
        ax.plot([pt.kappa for pt in curve], [pt.delta_hat for pt in curve], "r-o", ms=3,
                label="QP boundary")
        ax.set_xlabel("kappa")
        ax.set_ylabel("delta")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_consistency(rows, path) -> Path:
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(7, 3))
        for ax, (mi, si, ti, name) in zip(axes, [(2, 3, 6, "a"), (4, 5, 7, "b")]):
            for kappa in sorted({r[0] for r in rows}):
                sel = sorted((r for r in rows if r[0] == kappa), key=lambda r: r[1])
                x = [r[1] for r in sel]
                ax.errorbar(x, [r[mi] for r in sel], yerr=[2 * r[si] for r in sel],
                            fmt="o", ms=3, capsize=2, label=f"kappa={kappa:g} empirical")
                ax.plot(x, [r[ti] for r in sel], "-", label=f"kappa={kappa:g} theory")
            ax.set_xlabel("delta")
            ax.set_ylabel(name)
        axes[0].legend(fontsize=7)
        return _save(fig, path)


def plot_null_distribution(p_rows, chi_rows, path) -> Path:
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(7, 3.2))
        _qq(axes[0], [r[4] for r in p_rows], "corrected z")
        _qq(axes[0], [r[5] for r in p_rows], "classical z")
        for l in sorted({r[3] for r in chi_rows}):
            _qq(axes[1], [r[5] for r in chi_rows if r[3] == l], f"chi2, l={l}")
        for ax in axes:
            ax.plot([0, 1], [0, 1], "k:", lw=0.8)
            ax.set_xlabel("uniform quantile")
            ax.set_ylabel("p-value quantile")
            ax.legend(fontsize=7)
        return _save(fig, path)


def plot_classical_failure(std_rows, lrt_rows, path) -> Path:
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=(7, 3.2))
        emp = [r[3] for r in std_rows]
        fis = [r[4] for r in std_rows]
        axes[0].scatter(fis, emp, s=8)
        if fis:
            lim = [0, max(max(fis), max(emp)) * 1.1]
            axes[0].plot(lim, lim, "k:", lw=0.8)
        axes[0].set_xlabel("mean Fisher std")
        axes[0].set_ylabel("empirical std")
        _qq(axes[1], [r[5] for r in lrt_rows], "LRT")
        axes[1].plot([0, 1], [0, 1], "k:", lw=0.8)
        axes[1].set_xlabel("uniform quantile")
        axes[1].set_ylabel("p-value quantile")
        return _save(fig, path)


# ---------------------------------------------------------------------------
# gnuplot scripts
# ---------------------------------------------------------------------------

_HEAD = """set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 800,600
"""


def _write_gp(out: Path, name: str, body: str) -> Path:
    path = Path(out) / f"{name}.gp"
    path.write_text(_HEAD + f"set output '{name}_gp.png'\n" + body)
    return path


def gnuplot_phase_diagram(out) -> Path:
    return _write_gp(out, "phase_diagram", """set xlabel 'kappa'
set ylabel 'delta'
set palette gray
plot 'phase_diagram.csv' using 2:1:3 with points pt 5 ps 2 palette title 'fraction existing', \\
     'boundary.csv' using 1:2 with linespoints lc rgb 'red' title 'QP boundary'
""")


def gnuplot_consistency(out) -> Path:
    return _write_gp(out, "consistency", """set xlabel 'delta'
set multiplot layout 1,2
set ylabel 'a'
plot 'consistency.csv' using 2:3:(2*$4) with yerrorbars title 'empirical', \\
     '' using 2:7 with lines title 'theory'
set ylabel 'b'
plot 'consistency.csv' using 2:5:(2*$6) with yerrorbars title 'empirical', \\
     '' using 2:8 with lines title 'theory'
unset multiplot
""")


def gnuplot_null_distribution(out) -> Path:
    return _write_gp(out, "null_dist", """set xlabel 'p-value'
set ylabel 'empirical CDF'
plot 'null_pvalues.csv' using 5:(1.0) smooth cnormal title 'corrected z', \\
     '' using 6:(1.0) smooth cnormal title 'classical z', \\
     'null_chi2.csv' using 6:(1.0) smooth cnormal title 'chi2', \\
     x with lines dt 2 title 'uniform'
""")


def gnuplot_classical_failure(out) -> Path:
    return _write_gp(out, "classical_failure", """set multiplot layout 1,2
set xlabel 'mean Fisher std'
set ylabel 'empirical std'
plot 'classical_failure.csv' using 5:4 with points title 'null coordinates', x with lines dt 2 title 'y = x'
set xlabel 'p-value'
set ylabel 'empirical CDF'
plot 'lrt_pvalues.csv' using 6:(1.0) smooth cnormal title 'LRT', x with lines dt 2 title 'uniform'
unset multiplot
""")


def plot_boundary(curve_rows, path) -> Path:
    """``curve_rows`` of ``(kappa, delta_hat, stderr)``."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4, 3))
        k = [r[0] for r in curve_rows]
        ax.errorbar(k, [r[1] for r in curve_rows], yerr=[2 * r[2] for r in curve_rows],
                    fmt="-o", ms=3, capsize=2)
        ax.set_xlabel("kappa")
        ax.set_ylabel("delta boundary")
        return _save(fig, path)
