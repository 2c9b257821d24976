"""Text serialization of graphs and assignments.

Graph format:
    first line:  "n m"            (node count, edge count)
    next m lines: "i j"           (0-based endpoints, i < j)
The edge lines are sorted by (i, j).  Only the upper triangle
is stored, so symmetry is implicit; self-loops are rejected on read.

Assignment format:
    first line:  "n K"
    next n lines: one 0-based label per line (in-memory labels are
    1-based; serialization subtracts 1).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import Assignment, Graph

__all__ = ["write_graph", "read_graph", "write_assignment", "read_assignment"]


def write_graph(graph: Graph, path: str | Path) -> None:
    edges = graph.edges()
    lines = [f"{graph.n} {len(edges)}"]
    lines.extend(f"{i} {j}" for i, j in edges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path: str | Path) -> Graph:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty graph file")
    try:
        n, m = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    if len(lines) - 1 != m:
        raise ValueError(f"{path}: header promises {m} edges, found {len(lines) - 1}")
    adj = np.zeros((n, n), dtype=np.uint8)
    for ln in lines[1:]:
        try:
            i, j = (int(x) for x in ln.split())
        except ValueError as exc:
            raise ValueError(f"{path}: malformed edge line {ln!r}") from exc
        if i == j:
            raise ValueError(f"{path}: self-loop {i} rejected")
        if not (0 <= i < j < n):
            raise ValueError(f"{path}: edge ({i}, {j}) must satisfy 0 <= i < j < n")
        if adj[i, j]:
            raise ValueError(f"{path}: duplicate edge ({i}, {j})")
        adj[i, j] = adj[j, i] = 1
    return Graph(adj)


def write_assignment(sigma: Assignment, path: str | Path) -> None:
    lines = [f"{sigma.n} {sigma.k}"]
    lines.extend(str(x - 1) for x in sigma.labels)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_assignment(path: str | Path) -> Assignment:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty assignment file")
    try:
        n, k = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise ValueError(f"{path}: header promises {n} labels, found {len(lines) - 1}")
    labels = []
    for ln in lines[1:]:
        val = int(ln)
        if not (0 <= val < k):
            raise ValueError(f"{path}: 0-based label {val} out of range for K={k}")
        labels.append(val + 1)
    return Assignment(tuple(labels), k)
