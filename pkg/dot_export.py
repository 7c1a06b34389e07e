"""
Graphviz DOT export for the pipeline's labeled digraphs.

Output is deterministic: vertices and edges are emitted in the pipeline's
total order, and labels print their elements sorted. To plot a trace:

    dot -Tpng -O trace/003-branching-a.dot
"""

import logging
import re
from pathlib import Path
from typing import Iterator, List, Optional

import networkx as nx

from cylinder import LABEL, ClosedDigraph, show_vertex, sorted_edges, sorted_vertices
from linearize import LinearizedDigraph, show_label

logger = logging.getLogger(__name__)


def _quote(text: str) -> str:
    return '"{}"'.format(text.replace("\\", "\\\\").replace('"', r"\""))


def _lines(g: nx.DiGraph, name: str, highlight=()) -> Iterator[str]:
    yield f"digraph {_quote(name)} {{"
    yield "  rankdir=TB;"
    for v in sorted_vertices(g.nodes):
        shape = "doublecircle" if v in highlight else "ellipse"
        yield f"  {_quote(show_vertex(v))} [shape={shape}];"
    for u, v in sorted_edges(g.edges):
        label = show_label(g.edges[u, v].get(LABEL, frozenset()))
        yield f"  {_quote(show_vertex(u))} -> {_quote(show_vertex(v))} [label={_quote(label)}];"
    yield "}"


def to_dot(g: nx.DiGraph, name: str = "G") -> str:
    return "\n".join(_lines(g, name)) + "\n"


def closed_to_dot(cd: ClosedDigraph, name: Optional[str] = None) -> str:
    """Closed digraph with the glued vertex drawn as a double circle."""
    name = name or f"closed-{cd.nec_atom}"
    glue = () if cd.glue is None else (cd.glue,)
    return "\n".join(_lines(cd.graph, name, glue)) + "\n"


def linearized_to_dot(lin: LinearizedDigraph, name: str = "linearized") -> str:
    """One cluster per column, columns in their sorted order."""
    lines: List[str] = [f"digraph {_quote(name)} {{", "  rankdir=TB;"]
    for index, column in enumerate(lin.columns, start=1):
        lines.append(f"  subgraph cluster_{index} {{")
        lines.append(f"    label={_quote(f'column {index}')};")
        for u, v in column:
            label = show_label(lin.graph.edges[u, v].get(LABEL, frozenset()))
            lines.append(
                f"    {_quote(show_vertex(u))} -> {_quote(show_vertex(v))} [label={_quote(label)}];"
            )
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


class TraceWriter:
    """
    Trace hook writing one numbered DOT file per pipeline step into a
    directory. Step names become part of the file name.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def __call__(self, step: str, g: nx.DiGraph) -> None:
        safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", step)
        path = self.directory / f"{len(self.written):03d}-{safe}.dot"
        path.write_text(to_dot(g, step), encoding="utf-8")
        self.written.append(path)
        logger.debug(f"Trace step written to {path}")
