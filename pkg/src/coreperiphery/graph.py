"""Sparse undirected simple-graph representation.

Vertices are dense integers 0..n-1 internally; external labels from edge-list
files are preserved in a :class:`LabelMap`.  The adjacency is stored in CSR
form (``indptr``/``indices``) together with a ``reverse`` array mapping each
directed half-edge to its opposite orientation, which is what the
message-passing code indexes by.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed edge-list input (carries the offending line number)."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DuplicateEdgeError(GraphFormatError):
    pass


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph.

    Attributes:
        n: vertex count.
        edges: (m, 2) int64 array of unordered endpoint pairs.
        indptr: CSR row pointer, length n+1.
        indices: CSR neighbor ids, length 2m.  Slot ``e`` in vertex ``i``'s
            range represents the directed half-edge i -> indices[e].
        reverse: for each half-edge slot, the slot of the opposite
            orientation (j -> i).
        edge_slots: (m, 2) array; row t holds the half-edge slots (i->j, j->i)
            of edge t, aligned with ``edges``.
    """

    n: int
    edges: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    reverse: np.ndarray
    edge_slots: np.ndarray

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"vertex {i} out of range [0, {self.n})")
        return int(self.indptr[i + 1] - self.indptr[i])

    def mean_degree(self) -> float:
        if self.n == 0:
            raise ValueError("mean degree undefined for empty graph")
        return 2.0 * self.m / self.n

    def neighbors(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n:
            raise IndexError(f"vertex {i} out of range [0, {self.n})")
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def validate(self) -> None:
        """Exhaustive consistency scan (adjacency symmetry, handshake)."""
        assert int(self.degrees.sum()) == 2 * self.m
        for e in range(2 * self.m):
            assert self.reverse[self.reverse[e]] == e
        # each half-edge's reverse must start at the neighbor it points to
        owner = np.repeat(np.arange(self.n), self.degrees)
        assert np.array_equal(owner[self.reverse], self.indices)


def from_edges(n: int, edges: Iterable[tuple[int, int]] | np.ndarray) -> Graph:
    """Build a Graph from an iterable of distinct undirected pairs.

    Raises ValueError on self-loops, duplicates, or out-of-range endpoints.
    """
    edges = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                       dtype=np.int64).reshape(-1, 2)
    m = len(edges)
    if m > 0:
        if edges.min() < 0 or edges.max() >= n:
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loop in edge array")
        key = np.minimum(edges[:, 0], edges[:, 1]) * np.int64(n) + np.maximum(edges[:, 0], edges[:, 1])
        if len(np.unique(key)) != m:
            raise ValueError("duplicate edge in edge array")

    # Vectorized CSR build: sort the 2m directed half-edges by source vertex;
    # the permutation gives each half-edge's slot, from which the reverse map
    # follows since half-edge t and t+m are opposite orientations.
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.argsort(src, kind="stable")
    indices = dst[order]
    slot_of = np.empty(2 * m, dtype=np.int64)
    slot_of[order] = np.arange(2 * m, dtype=np.int64)

    reverse = np.empty(2 * m, dtype=np.int64)
    reverse[slot_of[:m]] = slot_of[m:]
    reverse[slot_of[m:]] = slot_of[:m]
    edge_slots = np.column_stack([slot_of[:m], slot_of[m:]])

    degrees = np.bincount(src, minlength=n).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])

    return Graph(n=n, edges=edges, indptr=indptr, indices=indices,
                 reverse=reverse, edge_slots=edge_slots)


@dataclass
class LabelMap:
    """Bijection between external vertex labels and internal dense indices."""

    labels: list[str] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)

    def intern(self, label: str) -> int:
        idx = self.index.get(label)
        if idx is None:
            idx = len(self.labels)
            self.labels.append(label)
            self.index[label] = idx
        return idx

    def to_external(self, i: int) -> str:
        return self.labels[i]

    def to_internal(self, label: str) -> int:
        return self.index[label]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class LoadResult:
    graph: Graph
    labels: LabelMap
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0


def load_edge_list(source: TextIO | Iterable[str], *,
                   delimiter: str | None = None,
                   duplicate_policy: str = "reject",
                   empty_policy: str = "allow") -> LoadResult:
    """Parse a text edge list into a Graph plus label map.

    Format: one edge per line as two whitespace- (or ``delimiter``-)
    separated tokens; ``#`` starts a comment; an optional ``%nodes <k>``
    header pre-declares ``k`` isolated vertices labeled 0..k-1.

    Self-loops are dropped (counted); duplicate edges are an error under
    ``duplicate_policy="reject"`` or silently dropped under ``"ignore"``.
    """
    if duplicate_policy not in ("reject", "ignore"):
        raise ValueError(f"unknown duplicate policy {duplicate_policy!r}")
    labels = LabelMap()
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    self_loops = 0
    dups = 0
    n_declared = 0
    any_line = False

    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        any_line = True
        if line.startswith("%nodes"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise GraphFormatError("malformed %nodes header", lineno)
            n_declared = int(parts[1])
            for v in range(n_declared):
                labels.intern(str(v))
            continue
        tokens = line.split(delimiter)
        if len(tokens) != 2:
            raise GraphFormatError(
                f"expected two endpoint tokens, got {len(tokens)}", lineno)
        i = labels.intern(tokens[0])
        j = labels.intern(tokens[1])
        if i == j:
            self_loops += 1
            continue
        key = (min(i, j), max(i, j))
        if key in seen:
            if duplicate_policy == "reject":
                raise DuplicateEdgeError(
                    f"duplicate edge {tokens[0]} -- {tokens[1]}", lineno)
            dups += 1
            continue
        seen.add(key)
        edges.append(key)

    if not any_line and empty_policy == "strict":
        raise GraphFormatError("empty input")
    if self_loops:
        logger.warning("dropped %d self-loop(s)", self_loops)

    graph = from_edges(len(labels), edges)
    return LoadResult(graph=graph, labels=labels,
                      self_loops_dropped=self_loops, duplicates_dropped=dups)


def write_edge_list(graph: Graph, stream: TextIO,
                    labels: LabelMap | None = None) -> None:
    """Serialize in the same text format accepted by :func:`load_edge_list`."""
    stream.write(f"%nodes {graph.n}\n")
    for i, j in graph.edges:
        if labels is not None:
            stream.write(f"{labels.to_external(i)}\t{labels.to_external(j)}\n")
        else:
            stream.write(f"{i}\t{j}\n")
