"""Result emission: stable-ordered CSV tables plus rendered figures.

CSV rows are sorted by offered load then flow id and floats are formatted
with a fixed rule, so equal-seed runs diff byte-identically. Figures are
rendered next to the delimited output with matplotlib's Agg backend.
"""

from __future__ import annotations

import csv
import math
import os
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .scenario import FlowResult, Scenario, ScenarioOutcome


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.6g}"
    return str(value)


FLOW_COLUMNS = [
    "scenario",
    "mode",
    "offered_load",
    "flow",
    "seed",
    "avg_latency_cycles",
    "max_latency_cycles",
    "max_header_latency_cycles",
    "wcl_cycles",
    "throughput_flits_per_cycle",
    "max_latency_ns",
    "max_header_latency_ns",
    "bound_ok",
]


def write_flow_csv(rows: List[FlowResult], path: str) -> None:
    ordered = sorted(rows, key=lambda r: (r.offered_load or 0.0, r.flow, r.seed))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FLOW_COLUMNS)
        for r in ordered:
            writer.writerow(
                [
                    _fmt(r.scenario),
                    _fmt(r.mode),
                    _fmt(r.offered_load),
                    _fmt(r.flow),
                    _fmt(r.seed),
                    _fmt(r.avg_latency_cycles),
                    _fmt(r.max_latency_cycles),
                    _fmt(r.max_header_latency_cycles),
                    _fmt(r.wcl_cycles),
                    _fmt(r.throughput_flits_per_cycle),
                    _fmt(r.max_latency_ns),
                    _fmt(r.max_header_latency_ns),
                    _fmt(r.bound_ok),
                ]
            )


def write_dict_csv(rows: List[dict], path: str) -> None:
    if not rows:
        return
    columns = list(rows[0].keys())
    ordered = sorted(rows, key=lambda r: (r.get("offered_load") or 0.0, str(r.get("flow", ""))))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for r in ordered:
            writer.writerow([_fmt(r.get(c)) for c in columns])


def _plot_analytic(sc: Scenario, rows: List[dict], path: str) -> None:
    loads = [r["offered_load"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    series = [c for c in rows[0] if c.endswith("_cycles")]
    for col in series:
        ys = [r[col] if not math.isinf(r[col]) else None for r in rows]
        label = col[: -len("_cycles")].replace("_", " ")
        ax.plot(loads, ys, label=label)
    ax.set_xlabel("offered load (fraction of available bandwidth)")
    ax.set_ylabel("latency (cycles)")
    ax.set_title(sc.name)
    finite = [r[c] for r in rows for c in series if not math.isinf(r[c])]
    if finite:
        ax.set_ylim(0, min(max(finite), 4 * sorted(finite)[len(finite) // 2]))
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_simulate(outcome: ScenarioOutcome, path: str) -> None:
    rows = [r for r in outcome.flow_rows if r.max_latency_cycles is not None]
    if not rows:
        return
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    bounded = [r for r in rows if r.wcl_cycles is not None]
    if bounded:
        ax.scatter(
            [r.wcl_cycles for r in bounded],
            [r.max_latency_cycles for r in bounded],
            s=18,
            label="flow max latency",
        )
        top = max(max(r.wcl_cycles for r in bounded), max(r.max_latency_cycles for r in bounded))
        ax.plot([0, top], [0, top], "k--", linewidth=0.8, label="bound")
        ax.set_xlabel("worst-case bound (cycles)")
        ax.set_ylabel("observed max latency (cycles)")
    else:
        names = [r.flow for r in rows]
        ax.bar(names, [r.max_latency_cycles for r in rows])
        ax.set_ylabel("observed max latency (cycles)")
    ax.set_title(outcome.scenario.name)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit(outcome: ScenarioOutcome, output_dir: str, plot: bool = True) -> List[str]:
    """Write one CSV per result kind plus figures; returns written paths."""
    os.makedirs(output_dir, exist_ok=True)
    name = outcome.scenario.name
    written = []
    if outcome.analytic_rows:
        path = os.path.join(output_dir, f"{name}_analytic.csv")
        write_dict_csv(outcome.analytic_rows, path)
        written.append(path)
        if plot:
            fig_path = os.path.join(output_dir, f"{name}_analytic.png")
            _plot_analytic(outcome.scenario, outcome.analytic_rows, fig_path)
            written.append(fig_path)
    if outcome.flow_rows:
        path = os.path.join(output_dir, f"{name}_simulate.csv")
        write_flow_csv(outcome.flow_rows, path)
        written.append(path)
        if plot:
            fig_path = os.path.join(output_dir, f"{name}_simulate.png")
            _plot_simulate(outcome, fig_path)
            if os.path.exists(fig_path):
                written.append(fig_path)
    if outcome.sweep_rows:
        path = os.path.join(output_dir, f"{name}_sweep.csv")
        write_dict_csv(outcome.sweep_rows, path)
        written.append(path)
    return written
