"""Directed graphs and their discrete vector calculus.

A graph is a fixed list of directed edges over ``num_vertices`` vertices.
Functions on vertices ("vertex fields") and on edges ("edge flows") are plain
1-D float64 arrays of length N and M respectively.  The gradient of a vertex
field is the per-edge difference head-minus-tail; the divergence of a flow is
the per-vertex incoming-minus-outgoing sum.  The two operators are adjoint:
``<div g, f> == <g, grad f>`` for all f, g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "EdgeColoring",
    "gradient",
    "divergence",
    "divergence_excluding_edge",
    "inner_product_vertices",
    "inner_product_edges",
    "greedy_edge_coloring",
    "validate_coloring",
    "read_graph_text",
    "write_graph_text",
]


class Graph:
    """Immutable directed graph given by an ordered edge list.

    Parameters
    ----------
    num_vertices : int
        Number of vertices N (> 0).  Vertices are the integers 0..N-1.
    edges : array_like of shape (M, 2)
        Edge k runs from ``edges[k, 0]`` to ``edges[k, 1]``.  Self-loops are
        rejected; parallel edges and disconnected graphs are allowed.
    """

    __slots__ = ("num_vertices", "edges", "_in_edges", "_out_edges")

    def __init__(self, num_vertices, edges):
        n = int(num_vertices)
        if n <= 0:
            raise ValueError(f"num_vertices must be positive, got {num_vertices}")
        e = np.asarray(edges, dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError(f"edges must have shape (M, 2), got {e.shape}")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint index out of range")
        if np.any(e[:, 0] == e[:, 1]):
            k = int(np.nonzero(e[:, 0] == e[:, 1])[0][0])
            raise ValueError(f"self-loop at edge {k}")
        e = e.copy()
        e.setflags(write=False)
        self.num_vertices = n
        self.edges = e
        self._in_edges = None
        self._out_edges = None

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def _adjacency(self, column):
        """Edge ids grouped by the vertex in the given endpoint column."""
        order = np.argsort(self.edges[:, column], kind="stable")
        bounds = np.searchsorted(self.edges[order, column], np.arange(self.num_vertices + 1))
        return tuple(order[bounds[v]:bounds[v + 1]] for v in range(self.num_vertices))

    @property
    def out_edges(self):
        """Tuple over vertices of outgoing edge ids, each in ascending order."""
        if self._out_edges is None:
            self._out_edges = self._adjacency(0)
        return self._out_edges

    @property
    def in_edges(self):
        """Tuple over vertices of incoming edge ids, each in ascending order."""
        if self._in_edges is None:
            self._in_edges = self._adjacency(1)
        return self._in_edges

    def __repr__(self):
        return f"Graph(num_vertices={self.num_vertices}, num_edges={self.num_edges})"


def _as_vertex_field(graph, f, name="f"):
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (graph.num_vertices,):
        raise ValueError(
            f"{name} has shape {f.shape}, expected ({graph.num_vertices},)"
        )
    return f


def _as_edge_flow(graph, g, name="g"):
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (graph.num_edges,):
        raise ValueError(
            f"{name} has shape {g.shape}, expected ({graph.num_edges},)"
        )
    return g


def gradient(graph, f):
    """Per-edge difference ``f[head] - f[tail]`` as a length-M array."""
    f = _as_vertex_field(graph, f)
    return f[graph.edges[:, 1]] - f[graph.edges[:, 0]]


def divergence(graph, g):
    """Per-vertex incoming-minus-outgoing flow sum as a length-N array.

    The entries of the result always sum to zero in exact arithmetic since
    every edge contributes +g(e) at its head and -g(e) at its tail.
    """
    g = _as_edge_flow(graph, g)
    n = graph.num_vertices
    inflow = np.bincount(graph.edges[:, 1], weights=g, minlength=n)
    outflow = np.bincount(graph.edges[:, 0], weights=g, minlength=n)
    return inflow - outflow


def divergence_excluding_edge(graph, g, k):
    """Divergence at both endpoints of edge k with the flow on k removed.

    Returns ``(div g(tail) + g[k], div g(head) - g[k])``: adding back the
    outgoing contribution at the tail and removing the incoming one at the
    head leaves the divergence the remaining edges would produce.
    """
    g = _as_edge_flow(graph, g)
    if not 0 <= k < graph.num_edges:
        raise ValueError(f"edge id {k} out of range [0, {graph.num_edges})")
    div = divergence(graph, g)
    i, j = graph.edges[k]
    return float(div[i] + g[k]), float(div[j] - g[k])


def inner_product_vertices(f1, f2):
    """Euclidean inner product of two vertex fields."""
    f1 = np.asarray(f1, dtype=np.float64)
    f2 = np.asarray(f2, dtype=np.float64)
    if f1.shape != f2.shape:
        raise ValueError(f"shape mismatch: {f1.shape} vs {f2.shape}")
    return float(np.dot(f1, f2))


def inner_product_edges(g1, g2):
    """Euclidean inner product of two edge flows."""
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    if g1.shape != g2.shape:
        raise ValueError(f"shape mismatch: {g1.shape} vs {g2.shape}")
    return float(np.dot(g1, g2))


@dataclass(frozen=True)
class EdgeColoring:
    """Partition of the edge ids into classes of pairwise non-incident edges.

    Within a class no two edges share a vertex, so the edge updates of the
    solver can run concurrently inside a class without write conflicts.
    """

    classes: tuple

    @property
    def num_colors(self):
        return len(self.classes)


def greedy_edge_coloring(graph):
    """Proper edge coloring: visit edges in id order, take the smallest color
    unused by edges already colored at either endpoint.

    Deterministic for a fixed graph.  For bounded-degree graphs the number of
    colors is small (a 4-neighbor grid gets at most 4).
    """
    used = [0] * graph.num_vertices  # bitmask of colors present at each vertex
    classes = []
    for k, (i, j) in enumerate(graph.edges.tolist()):
        free = ~(used[i] | used[j])
        color = (free & -free).bit_length() - 1
        bit = 1 << color
        used[i] |= bit
        used[j] |= bit
        if color == len(classes):
            classes.append([])
        classes[color].append(k)
    return EdgeColoring(tuple(np.asarray(c, dtype=np.int64) for c in classes))


def validate_coloring(graph, coloring):
    """Raise ValueError unless the coloring is a proper partition of all edges."""
    if not isinstance(coloring, EdgeColoring):
        raise ValueError("coloring must be an EdgeColoring")
    m = graph.num_edges
    seen = np.zeros(m, dtype=bool)
    for c, cls in enumerate(coloring.classes):
        cls = np.asarray(cls, dtype=np.int64)
        if cls.size and (cls.min() < 0 or cls.max() >= m):
            raise ValueError(f"color class {c} contains an edge id out of range")
        if np.any(seen[cls]):
            raise ValueError(f"color class {c} repeats an edge id")
        seen[cls] = True
        endpoints = graph.edges[cls].ravel()
        if np.unique(endpoints).size != endpoints.size:
            raise ValueError(f"color class {c} has two edges sharing a vertex")
    if not seen.all():
        raise ValueError("coloring does not cover every edge")


def read_graph_text(source):
    """Read a graph from the fixture text format.

    First line ``N M``, then M lines ``i j`` with 0-based endpoint indices.
    ``source`` is a path or an open text file.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty graph file")
    try:
        n, m = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"bad header line {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise ValueError(f"expected {m} edge lines, found {len(lines) - 1}")
    edges = []
    for ln in lines[1:]:
        i, j = (int(tok) for tok in ln.split())
        edges.append((i, j))
    return Graph(n, edges)


def write_graph_text(graph, destination):
    """Write a graph in the fixture text format (see ``read_graph_text``)."""
    lines = [f"{graph.num_vertices} {graph.num_edges}"]
    lines.extend(f"{i} {j}" for i, j in graph.edges.tolist())
    payload = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(payload)
    else:
        with open(destination, "w", encoding="ascii") as fh:
            fh.write(payload)
