"""Report figures, rendered straight to SVG next to the delimited output."""

from __future__ import annotations

from typing import Dict, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# deterministic SVG ids so identical runs produce identical files
matplotlib.rcParams["svg.hashsalt"] = "topocorr"

_META = {"Date": None}


def sweep_plot(path: str, xs: Sequence[float],
               series: Mapping[str, Sequence[float]],
               xlabel: str, ylabel: str, logx: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for name, ys in series.items():
        ax.plot(xs, ys, marker="o", lw=1.2, ms=4, label=name)
    if logx:
        ax.set_xscale("symlog", linthresh=min((x for x in xs if x > 0),
                                              default=1e-6))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False, fontsize=8)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def entropy_bars(path: str, s_values: Dict[str, float],
                 ylabel: str = "entropy [nats]") -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    names = list(s_values)
    ax.bar(range(len(names)), [s_values[n] for n in names], color="#4878d0")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names)
    ax.set_ylabel(ylabel)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
