#!/usr/bin/env python3
"""Print indices, link weights and the sigma map of one cluster-graph.

Usage:
    python scripts/inspect_graph.py GRAPH_FILE [--index N] [--h 0.9,0.5,...]

GRAPH_FILE is a graph JSON document or the NDJSON output of
``monocluster enumerate``.
"""
import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO))

from monocluster_core.cli import load_graph  # noqa: E402
from monocluster_core.core.cluster_graph import sigma_map  # noqa: E402
from monocluster_core.core.errors import MonoclusterError, NonContributingGraph  # noqa: E402
from monocluster_core.core.interpolation import HVector, omega  # noqa: E402


def describe(g, h=None):
    lines = [repr(g), f"stage sizes: {g.stage_sizes()}"]
    for q, (link, kind) in enumerate(zip(g.links, g.kinds), start=1):
        _, smu, inu = g.link_indices(q)
        line = f"  q={q} {link} {kind.value} mu={smu} nu={inu}"
        if h is not None:
            line += f" omega={omega(g, h, q):.6g}"
        lines.append(line)
    try:
        lines.append(f"sigma: {sigma_map(g)}")
    except NonContributingGraph as e:
        lines.append(f"sigma: undefined ({e})")
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(description="Inspect one cluster-graph")
    parser.add_argument("graph_file")
    parser.add_argument("--index", type=int, default=0)
    parser.add_argument("--h", help="h_1,...,h_p (strictly decreasing in (0, 1])")
    args = parser.parse_args(argv)

    try:
        g = load_graph(args.graph_file, args.index)
        h = HVector(tuple(float(v) for v in args.h.split(",")) + (0.0,)) if args.h else None
        print(describe(g, h))
    except (MonoclusterError, ValueError) as e:
        print(f"❌ {e}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
