from __future__ import annotations

import argparse
from typing import Any, Optional

from fusionproc.cli import EXIT_INPUT, EXIT_OK, CommandError, emit, input_errors
from fusionproc.core.config import get_settings
from fusionproc.services.greedy_cut import (
    brute_force_multiway_cut,
    build_example_graph,
    complete_graph,
    edge_first_greedy,
    parse_graph_file,
    parse_terminals,
    terminals_separated,
)
from fusionproc.services.records import build_meta


def register(subparsers: Any) -> None:
    parser = subparsers.add_parser(
        "greedy",
        help="Run the edge-first greedy multiway cut",
        description="Read a graph file ('n m' then 'u v w' lines) or generate an instance.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--graph", help="Graph file path")
    source.add_argument("--example", type=int, metavar="N", help="Generate the N x N column-clique instance")
    source.add_argument("--unit-kn", type=int, metavar="N", help="Generate unit-weight K_N")
    parser.add_argument("--epsilon", type=float, default=0.5, help="Extra weight of same-column edges")
    parser.add_argument("--terminals", help="Comma-separated terminal vertices")
    parser.add_argument("--seed", type=int, help="Tie-shuffle seed")
    parser.add_argument("--oracle", action="store_true", help="Also compute the exact optimum")
    parser.set_defaults(handler=handle)


def _ratio(greedy_weight: float, optimum: float) -> Optional[float]:
    if optimum == 0:
        return 1.0 if greedy_weight == 0 else None
    return greedy_weight / optimum


def handle(args: argparse.Namespace) -> int:
    seed = get_settings().default_seed if args.seed is None else args.seed
    with input_errors():
        if args.example is not None:
            graph, terminals = build_example_graph(args.example, args.epsilon)
            if args.terminals:
                terminals = parse_terminals(args.terminals)
            source = {"example": args.example, "epsilon": args.epsilon}
        else:
            if not args.terminals:
                raise CommandError(EXIT_INPUT, "--terminals is required with --graph and --unit-kn")
            if args.graph:
                graph = parse_graph_file(args.graph)
                source = {"graph": args.graph}
            else:
                graph = complete_graph(args.unit_kn)
                source = {"unit_kn": args.unit_kn}
            terminals = parse_terminals(args.terminals)
        result = edge_first_greedy(graph, terminals, seed)
        record: dict[str, Any] = {
            "command": "greedy",
            "meta": build_meta(seed=seed, terminals=sorted(terminals), n=graph.n, **source),
            "total_weight": graph.total_weight,
            "greedy": {**result.as_dict(), "terminals_separated": terminals_separated(result, terminals)},
        }
        if args.oracle:
            optimum = brute_force_multiway_cut(graph, terminals)
            record["oracle"] = {
                "removed_weight": optimum.removed_weight,
                "removed_edges": [list(edge) for edge in optimum.removed_edges],
                "ratio": _ratio(result.removed_weight, optimum.removed_weight),
            }
    emit(record)
    return EXIT_OK

