"""Metric tables (aligned text and CSV) and matplotlib figures."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import MetricsReport  # noqa: E402

METRICS = ("SR", "PWSR", "GC", "PWGC")
COLORS = ("#1b4f72", "#2e86c1", "#d68910", "#a04000")


def format_table(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    width = max(len(name) for name, _ in rows) + 2
    lines = [" " * width + "".join(f"{m:>7}" for m in METRICS)]
    for name, rep in rows:
        vals = rep.as_row()
        lines.append(f"{name:<{width}}" + "".join(f"{vals[m]:7.1f}" for m in METRICS))
    return "\n".join(lines) + "\n"


def format_csv(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("row",) + METRICS + ("episodes",))
    for name, rep in rows:
        vals = rep.as_row()
        w.writerow((name,) + tuple(f"{vals[m]:.2f}" for m in METRICS) + (rep.count,))
    return buf.getvalue()


def format_pool_table(pools: dict[str, MetricsReport], label: str = "run") -> str:
    """Side-by-side seen/unseen columns, one row per configuration."""
    names = list(pools)
    head1 = " " * 10 + "".join(f"{n.capitalize():^28}" for n in names)
    head2 = " " * 10 + "".join(f"{m:>7}" for m in METRICS) * len(names)
    row = f"{label:<10}"
    for n in names:
        vals = pools[n].as_row()
        row += "".join(f"{vals[m]:7.1f}" for m in METRICS)
    return "\n".join([head1, head2, row]) + "\n"


def format_failures(report: MetricsReport) -> str:
    if not report.failures:
        return "no failures\n"
    width = max(len(k) for k in report.failures)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in report.failures.items())


def plot_metric_rows(rows: Sequence[tuple[str, MetricsReport]], path: Path,
                     title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    n = len(rows)
    bar = 0.8 / len(METRICS)
    for j, m in enumerate(METRICS):
        xs = [i + (j - (len(METRICS) - 1) / 2) * bar for i in range(n)]
        ax.bar(xs, [rep.as_row()[m] for _, rep in rows], bar, label=m, color=COLORS[j])
    ax.set_xticks(range(n))
    ax.set_xticklabels([name for name, _ in rows])
    ax.set_ylabel("percent")
    ax.set_ylim(0, 100)
    if title:
        ax.set_title(title)
    ax.legend(ncol=4, fontsize=8, frameon=False, loc="upper right")
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_failures(report: MetricsReport, path: Path, title: str = "failure reasons") -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.0))
    items = sorted(report.failures.items(), key=lambda kv: -kv[1])
    if items:
        ax.barh([k for k, _ in items][::-1], [v for _, v in items][::-1], color=COLORS[1])
    else:
        ax.text(0.5, 0.5, "no failures", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("episodes")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
