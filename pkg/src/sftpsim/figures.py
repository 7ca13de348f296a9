"""Matplotlib rendering of a run report: coverage graph, flooding rounds,
routes, plus a metrics.csv next to the images."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .simulator import Report
from .topology import label_sort_key

NODE_SIZE = 900


def _layout(labels) -> dict[str, tuple[float, float]]:
    # fixed circular layout in canonical label order keeps renders reproducible
    ordered = sorted(labels, key=label_sort_key)
    step = 2.0 * math.pi / max(len(ordered), 1)
    return {
        lab: (math.cos(i * step - math.pi / 2.0), math.sin(i * step - math.pi / 2.0))
        for i, lab in enumerate(ordered)
    }


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.set_xlim(-1.35, 1.35)
    ax.set_ylim(-1.35, 1.35)
    ax.set_aspect("equal")
    ax.axis("off")
    return fig, ax


def _draw_nodes(ax, pos, report: Report):
    s = report.scenario
    for lab, (x, y) in pos.items():
        if lab == s.source:
            color = "#7fc97f"
        elif lab == s.dest:
            color = "#80b1d3"
        elif lab in s.malicious:
            color = "#fb8072"
        elif lab in s.failed:
            color = "#d9d9d9"
        else:
            color = "white"
        ax.scatter([x], [y], s=NODE_SIZE, c=color, edgecolors="black", zorder=3)
        ax.annotate(lab, (x, y), ha="center", va="center", zorder=4)


def _draw_edge(ax, pos, u, v, **kwargs):
    (x1, y1), (x2, y2) = pos[u], pos[v]
    ax.plot([x1, x2], [y1, y2], **kwargs)


def save_coverage_figure(report: Report, path: Path) -> None:
    """Post-threshold topology with any repair edges dashed on top."""
    cov = report.network.coverage
    pos = _layout(cov.labels)
    fig, ax = _new_axes()
    for u, v, w in cov.edges():
        _draw_edge(ax, pos, u, v, color="gray", linewidth=1.0, zorder=1)
        mx = (pos[u][0] + pos[v][0]) / 2.0
        my = (pos[u][1] + pos[v][1]) / 2.0
        ax.annotate(str(w), (mx, my), fontsize=8, color="dimgray")
    for u, v, w in report.network.repaired_edges:
        _draw_edge(ax, pos, u, v, color="#33a02c", linewidth=1.6, linestyle="--", zorder=2)
    _draw_nodes(ax, pos, report)
    ax.set_title(f"coverage graph (threshold {cov.threshold})")
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_flood_figures(report: Report, outdir: Path) -> list[Path]:
    """One image per tick of the discovery flood, arrows showing arrivals."""
    trace = report.trace
    if trace is None:
        return []
    cov = report.network.repaired
    pos = _layout(cov.labels)
    by_tick: dict[int, list] = {}
    for ev in trace.events:
        by_tick.setdefault(ev.tick, []).append(ev)

    written = []
    forwarded: set[str] = set()
    for tick in sorted(by_tick):
        evs = by_tick[tick]
        fig, ax = _new_axes()
        for u, v, w in cov.edges():
            _draw_edge(ax, pos, u, v, color="#dddddd", linewidth=0.8, zorder=1)
        _draw_nodes(ax, pos, report)
        casting = {e.node for e in evs if e.kind == "broadcast"}
        for lab in forwarded:
            x, y = pos[lab]
            ax.scatter([x], [y], s=NODE_SIZE, c="#fdbf6f", edgecolors="black", zorder=3)
            ax.annotate(lab, (x, y), ha="center", va="center", zorder=4)
        for lab in casting:
            x, y = pos[lab]
            ax.scatter([x], [y], s=NODE_SIZE, c="#ff7f00", edgecolors="black", zorder=3)
            ax.annotate(lab, (x, y), ha="center", va="center", zorder=4)
        arrows = sorted({(e.origin, e.node, e.kind == "rrep") for e in evs if e.origin})
        for origin, node, is_reply in arrows:
            (x1, y1), (x2, y2) = pos[origin], pos[node]
            ax.annotate(
                "",
                xy=(x2, y2),
                xytext=(x1, y1),
                arrowprops={
                    "arrowstyle": "-|>",
                    "color": "#1f78b4" if not is_reply else "#33a02c",
                    "linestyle": "-" if not is_reply else "--",
                    "shrinkA": 16,
                    "shrinkB": 16,
                },
                zorder=5,
            )
        ax.set_title(f"flooding, tick {tick}")
        path = outdir / f"flood_tick_{tick:03d}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
        forwarded |= casting
    return written


def save_route_figure(report: Report, path: Path) -> None:
    """Primary route, and the delivering route when a fallback was used."""
    cov = report.network.repaired
    pos = _layout(cov.labels)
    fig, ax = _new_axes()
    for u, v, w in cov.edges():
        _draw_edge(ax, pos, u, v, color="#dddddd", linewidth=0.8, zorder=1)
    if report.primary is not None:
        hops = report.primary.hops
        for u, v in zip(hops, hops[1:]):
            _draw_edge(ax, pos, u, v, color="#1f78b4", linewidth=2.2, zorder=2)
    used = None
    for packet in report.packets:
        if packet.delivered:
            used = packet.attempts[-1].route
            break
    if used is not None and report.primary is not None and used.hops != report.primary.hops:
        for u, v in zip(used.hops, used.hops[1:]):
            _draw_edge(ax, pos, u, v, color="#33a02c", linewidth=2.2, linestyle="--", zorder=2)
    _draw_nodes(ax, pos, report)
    ax.set_title("primary route (solid) and delivering route (dashed)")
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_metrics_csv(report: Report, path: Path) -> None:
    m = report.metrics
    delivered = sum(1 for p in report.packets if p.delivered)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "payloads_sent", "payloads_delivered", "transmissions",
            "packet_delivery_rate", "end_to_end_delay", "throughput", "outcome",
        ])
        writer.writerow([
            len(report.packets), delivered, report.transmissions,
            "" if m.packet_delivery_rate is None else m.packet_delivery_rate,
            "" if m.end_to_end_delay is None else m.end_to_end_delay,
            m.throughput, report.outcome,
        ])


def render_figures(report: Report, outdir) -> list[Path]:
    """Write every figure plus metrics.csv into `outdir`; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [outdir / "coverage.png", outdir / "routes.png", outdir / "metrics.csv"]
    save_coverage_figure(report, written[0])
    save_route_figure(report, written[1])
    write_metrics_csv(report, written[2])
    written.extend(save_flood_figures(report, outdir))
    return written
