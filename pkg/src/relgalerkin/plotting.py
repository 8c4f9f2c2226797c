"""Figures rendered from report tables (Agg backend, files only)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import Report, Table  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_rate(tab: Table, path: Path, slope: float | None = None) -> Path:
    m = np.array(tab.column("m"), float)
    e = np.array(tab.column("error"), float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(m, e, "o-", label="error")
    if slope is not None and np.isfinite(slope) and m.size:
        ax.loglog(m, e[0] * (m / m[0]) ** slope, "k--", lw=0.8, label=f"slope {slope:.3f}")
    ax.set_xlabel("m")
    ax.set_ylabel("W^{1,n} error")
    ax.legend()
    return _save(fig, path)


def plot_level(tab: Table, path: Path) -> Path:
    lam = np.array(tab.column("lambda_scale"), float)
    lev = np.array(tab.column("level"), float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogx(lam, lev, "o-", label="max_t I_m(t psi)")
    if tab.rows:
        ax.axhline(float(tab.rows[0][2]), color="k", ls="--", lw=0.8, label="threshold")
    ax.set_xlabel("bubble scale")
    ax.set_ylabel("level")
    ax.legend()
    return _save(fig, path)


def plot_trace(tab: Table, path: Path) -> Path:
    it = np.array(tab.column("iteration"), float)
    en = np.array(tab.column("energy"), float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(it, en, "-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy on Nehari set")
    return _save(fig, path)


def plot_nonexistence(tab: Table, path: Path) -> Path:
    N = np.array(tab.column("N"), float)
    r = np.array(tab.column("pohozaev"), float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(N, r, "o-")
    ax.set_xlabel("N")
    ax.set_ylabel("Pohozaev residual")
    return _save(fig, path)


def plot_symbols(tab: Table, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    q, k, m, c = (tab.column(n) for n in ("quantity", "k", "m", "constant"))
    for key in sorted(set(zip(q, k))):
        sel = [i for i in range(len(q)) if (q[i], k[i]) == key]
        ax.loglog([m[i] for i in sel], [c[i] for i in sel], "o-", label=f"{key[0]} k={key[1]}")
    ax.set_xlabel("m")
    ax.set_ylabel("empirical constant")
    ax.legend(fontsize=7)
    return _save(fig, path)


_PLOTTERS = {
    "rate_study": lambda t, p, r: plot_rate(t, p, r.summary.get("slope")),
    "mp_level": lambda t, p, r: plot_level(t, p),
    "solve_trace": lambda t, p, r: plot_trace(t, p),
    "nonexistence": lambda t, p, r: plot_nonexistence(t, p),
    "symbol_bounds": lambda t, p, r: plot_symbols(t, p),
}


def render_figures(report: Report, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for tab in report.tables:
        fn = _PLOTTERS.get(tab.name)
        if fn is not None and tab.rows:
            paths.append(fn(tab, out_dir / f"{tab.name}.png", report))
    return paths
