"""Figure rendering for experiment reports.

All figures are written to files next to the CSV report data; nothing opens
an interactive window.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _style(ax):
    ax.grid(True, alpha=0.3)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)


def _as_float(v) -> float:
    # table cells may be None or "" where a metric was undefined
    if v is None or v == "":
        return float("nan")
    return float(v)


def render_experiment(result, corr_att, corr_gt, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = []

    adv = result.column("toa_advance_m")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(adv, bins=25, color="#31688e", edgecolor="white")
    ax.set_xlabel("ToA advance (m)")
    ax.set_ylabel("packets")
    ax.set_title(f"{result.config.id}: distance change distribution")
    _style(ax)
    fig.tight_layout()
    p = out / "advance_hist.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, axes = plt.subplots(3, 1, figsize=(6, 7), sharex=True)
    ids = result.column("packet_id")
    for ax, key in zip(axes, ("ncc", "pmse", "dft")):
        vals = np.array([_as_float(r[key]) for r in result.records])
        ax.plot(ids, vals, ".", ms=4, color="#35b779")
        ax.set_ylabel(key)
        _style(ax)
    axes[-1].set_xlabel("packet")
    axes[0].set_title(f"{result.config.id}: NADM metrics")
    fig.tight_layout()
    p = out / "metrics.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    lags_us = corr_att.lags() * 1e6
    ax.plot(lags_us, np.abs(corr_gt.values), label="ground truth", lw=1.0)
    ax.plot(lags_us, np.abs(corr_att.values), label="attacked", lw=1.0, ls="--")
    peak = lags_us[int(np.argmax(np.abs(corr_gt.values)))]
    ax.set_xlim(peak - 3, peak + 3)
    ax.set_xlabel("lag (us)")
    ax.set_ylabel("|correlation|")
    ax.set_title(f"{result.config.id}: exemplar correlation")
    ax.legend()
    _style(ax)
    fig.tight_layout()
    p = out / "correlation_trace.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths


def render_study(table: list[dict], out_dir) -> Path:
    """Min/max envelope bars per metric and configuration."""
    out = Path(out_dir)
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.5))
    names = [row["experiment"] for row in table]
    ypos = np.arange(len(names))
    for ax, key in zip(axes, ("ncc", "pmse", "dft")):
        lo = np.array([_as_float(row[f"{key}_min"]) for row in table])
        hi = np.array([_as_float(row[f"{key}_max"]) for row in table])
        mid = np.array([_as_float(row[f"{key}_mean"]) for row in table])
        ok = np.isfinite(lo) & np.isfinite(hi)
        ax.barh(ypos[ok], (hi - lo)[ok], left=lo[ok], height=0.5,
                color="#31688e", alpha=0.5)
        ax.plot(mid[np.isfinite(mid)], ypos[np.isfinite(mid)], "k|", ms=10)
        ax.set_yticks(ypos)
        ax.set_yticklabels(names if ax is axes[0] else [])
        ax.set_xlabel(key)
        if key in ("pmse", "dft"):
            span = hi[hi > 0]
            if span.size and span.max() / max(span.min(), 1e-300) > 50:
                ax.set_xscale("log")
        _style(ax)
    fig.tight_layout()
    p = out / "metric_study.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    return p
