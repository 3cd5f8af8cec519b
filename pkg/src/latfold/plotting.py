"""PNG figures rendered next to the CSV/JSON report files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import EnergyHistogram  # noqa: E402


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp.png")
    fig.savefig(tmp, dpi=120, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    tmp.replace(path)
    return path


def energy_distribution(path: str | Path, circuit: EnergyHistogram | None,
                        baseline: EnergyHistogram | None = None, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for hist, label, color in ((baseline, "random", "0.6"), (circuit, "circuit", "C0")):
        if hist is None:
            continue
        ax.bar(hist.bin_left, hist.probability, width=hist.bin_width, align="edge",
               alpha=0.6, color=color, label=label)
    ax.axvline(-1.0, color="k", lw=0.8, ls="--")
    ax.set_xlabel("E / |E_gs|")
    ax.set_ylabel("probability")
    ax.set_yscale("log")
    ax.legend()
    if title:
        ax.set_title(title)
    return _save(fig, Path(path))


def cvar_traces(path: str | Path, traces: Sequence[Sequence[float]], e_gs: float | None = None,
                title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for i, tr in enumerate(traces):
        ax.plot(range(len(tr)), tr, lw=0.8, label=f"restart {i}" if len(traces) <= 10 else None)
    if e_gs is not None:
        ax.axhline(e_gs, color="k", lw=0.8, ls="--", label="E_gs")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("CVaR")
    if len(traces) <= 10:
        ax.legend(fontsize=6, ncol=2)
    if title:
        ax.set_title(title)
    return _save(fig, Path(path))


def relative_errors(path: str | Path, are: Sequence[float], bcre: Sequence[float], title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(4, 3.5))
    for x, vals, name in ((0, are, "ARE"), (1, bcre, "BCRE")):
        ax.scatter([x] * len(vals), vals, s=12, color="C0", alpha=0.6)
        ax.scatter([x], [min(vals)], s=30, color="C2", zorder=3)
        ax.scatter([x], [sum(vals) / len(vals)], marker="x", s=40, color="k", zorder=3)
    ax.set_xticks([0, 1], ["ARE", "BCRE"])
    ax.set_ylabel("relative error")
    if title:
        ax.set_title(title)
    return _save(fig, Path(path))
