"""Command-line front end.

Subcommands run the pipeline phases individually or end to end:

  threshold   print the post-threshold range matrix
  table       print the node connection table
  route       run discovery and print primary + recorded routes
  run         full run; writes the JSON report, optional DOT trace/figures

Exit codes: 0 success, 1 bad scenario, 2 run completed but delivery was
impossible (no route / no safe route), 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from .errors import NoRouteError, NoSafeRouteError, ScenarioError, SimulationError
from .simulator import (
    OUTCOME_OK,
    Report,
    Scenario,
    load_scenario,
    prepare_network,
    report_to_dict,
    report_to_json,
    run_scenario,
    scenario_to_dict,
)
from .routing import discover_route
from .topology import CoverageGraph

EXIT_OK = 0
EXIT_BAD_SCENARIO = 1
EXIT_UNDELIVERABLE = 2
EXIT_IO = 3


def style(text: str, code: str) -> str:
    """ANSI-wrap `text` unless styling is disabled or stdout is not a tty."""
    if os.environ.get("SFTP_SIM_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def format_matrix(g: CoverageGraph) -> str:
    """Aligned matrix in declaration order; `parse_matrix` reads it back."""
    labels = g.labels
    widths = [max(len(lab), *(len(str(row[j])) for row in g.base.weights))
              for j, lab in enumerate(labels)]
    head = max(len(lab) for lab in labels)
    lines = [" ".join([" " * head] + [lab.rjust(widths[j]) for j, lab in enumerate(labels)])]
    for i, lab in enumerate(labels):
        cells = [str(w).rjust(widths[j]) for j, w in enumerate(g.base.weights[i])]
        lines.append(" ".join([lab.ljust(head)] + cells))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> tuple[tuple[str, ...], tuple[tuple[int, ...], ...]]:
    """Inverse of `format_matrix`: returns (labels, weights)."""
    lines = [line for line in text.splitlines() if line.strip()]
    labels = tuple(lines[0].split())
    rows = []
    for line in lines[1:]:
        cells = line.split()
        rows.append(tuple(int(c) for c in cells[1:]))
    return labels, tuple(rows)


def format_table(state, scenario: Scenario) -> str:
    """Connection table as aligned Node/Links/Priority columns.

    Rows follow the scenario's node declaration order so the printout
    diffs positionally against reference tables.
    """
    by_node = {e.node: e for e in state.connection_table}
    lines = ["Node  Communication Links  Priority"]
    for lab in scenario.nodes:
        entry = by_node.get(lab)
        if entry is None:
            continue
        lines.append(f"{lab:<4}  {entry.links:<19}  {entry.priority}")
    return "\n".join(lines) + "\n"


def format_routes(discovery) -> str:
    lines = [f"primary: {' -> '.join(discovery.primary.hops)}  (delay {discovery.primary.total_delay})"]
    lines.append("recorded:")
    for i, route in enumerate(discovery.recorded, start=1):
        lines.append(f"  {i}. {' -> '.join(route.hops)}  (delay {route.total_delay})")
    return "\n".join(lines) + "\n"


def format_run_summary(report: Report) -> str:
    m = report.metrics
    lines = [f"outcome: {report.outcome}"]
    if report.primary is not None:
        lines.append(f"primary route: {' -> '.join(report.primary.hops)}  (delay {report.primary.total_delay})")
    for ev in report.detections:
        lines.append(f"detected {ev.kind}: {ev.node} (hop {ev.hop_index})")
    for p in report.packets:
        if p.delivered:
            route = " -> ".join(p.attempts[-1].route.hops)
            lines.append(f"packet {p.sequence}: delivered in {p.delay} ticks via {route} "
                         f"({len(p.attempts)} transmission(s))")
        else:
            lines.append(f"packet {p.sequence}: not delivered ({p.failure})")
    pdr = "n/a" if m.packet_delivery_rate is None else f"{m.packet_delivery_rate:.3f}"
    delay = "n/a" if m.end_to_end_delay is None else f"{m.end_to_end_delay:.3f}"
    lines.append(f"metrics: pdr={pdr} delay={delay} throughput={m.throughput:.3f}")
    return "\n".join(lines) + "\n"


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sftpsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("threshold", "print the post-threshold range matrix"),
        ("table", "print the node connection table"),
        ("route", "run discovery and print the routes"),
        ("run", "run the scenario end to end"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default=None, help="write output here instead of stdout")
        p.add_argument("--format", choices=["json", "text"], default=None,
                       help="output format (default: text for tables, json for run)")
        if name == "run":
            p.add_argument("--trace", default=None, help="write the DOT flooding trace here")
            p.add_argument("--figures", default=None, help="render figures + metrics.csv into this directory")
    return parser


def _cmd_threshold(scenario: Scenario, args) -> int:
    state = prepare_network(scenario)
    if args.format == "json":
        payload = {
            "nodes": list(state.coverage.labels),
            "threshold": state.coverage.threshold,
            "weights": [list(row) for row in state.coverage.base.weights],
        }
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _emit(format_matrix(state.coverage), args.out)
    return EXIT_OK


def _cmd_table(scenario: Scenario, args) -> int:
    state = prepare_network(scenario)
    if args.format == "json":
        payload = [
            {"node": e.node, "links": e.links, "priority": e.priority}
            for e in state.connection_table
        ]
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _emit(format_table(state, scenario), args.out)
    return EXIT_OK


def _cmd_route(scenario: Scenario, args) -> int:
    state = prepare_network(scenario)
    import random

    discovery = discover_route(
        state.repaired, scenario.source, scenario.dest,
        collision_p=scenario.collision_p, rng=random.Random(scenario.seed),
    )
    if args.format == "json":
        payload = {
            "primary": {"hops": list(discovery.primary.hops), "total_delay": discovery.primary.total_delay},
            "recorded": [
                {"hops": list(r.hops), "total_delay": r.total_delay} for r in discovery.recorded
            ],
        }
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        _emit(format_routes(discovery), args.out)
    return EXIT_OK


def _cmd_run(scenario: Scenario, args) -> int:
    report = run_scenario(scenario)
    if args.format == "text":
        _emit(format_run_summary(report), args.out)
    else:
        _emit(report_to_json(report), args.out)
        if args.out:
            status = "delivery impossible" if report.outcome != OUTCOME_OK else "completed"
            color = "31" if report.outcome != OUTCOME_OK else "32"
            print(style(f"{status}: report written to {args.out}", color))
    if args.trace:
        if report.trace is not None:
            with open(args.trace, "w", encoding="utf-8") as fh:
                fh.write(report.trace.to_dot())
        else:
            print(style("no discovery trace to write (no route)", "33"), file=sys.stderr)
    if args.figures:
        from .figures import render_figures

        render_figures(report, args.figures)
    return EXIT_OK if report.outcome == OUTCOME_OK else EXIT_UNDELIVERABLE


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
        if args.command == "threshold":
            return _cmd_threshold(scenario, args)
        if args.command == "table":
            return _cmd_table(scenario, args)
        if args.command == "route":
            return _cmd_route(scenario, args)
        return _cmd_run(scenario, args)
    except (NoRouteError, NoSafeRouteError) as exc:
        print(style(f"undeliverable: {exc}", "31"), file=sys.stderr)
        return EXIT_UNDELIVERABLE
    except ScenarioError as exc:
        print(style(f"invalid scenario: {exc}", "31"), file=sys.stderr)
        return EXIT_BAD_SCENARIO
    except SimulationError as exc:
        print(style(f"invalid scenario: {exc}", "31"), file=sys.stderr)
        return EXIT_BAD_SCENARIO
    except OSError as exc:
        print(style(f"i/o error: {exc}", "31"), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
