"""Undirected network topologies.

Nodes are dense integer ids ``0 .. node_count-1``.  The module provides the
two lattice generators used throughout (square grid and torus with wraparound
links), a line-oriented edge-list file format, and bounded enumeration of
simple paths, which is the workhorse of the delivery rule and the analyzer.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Iterator

NodeId = int

Path = tuple[NodeId, ...]


class TopologyParseError(ValueError):
    """A topology file could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class Topology:
    """Immutable simple undirected graph.

    Adjacency is symmetric and irreflexive by construction; duplicate edges
    passed to the constructor collapse silently (file loading checks them
    separately so it can report line numbers).
    """

    __slots__ = ("node_count", "_neighbors")

    def __init__(self, node_count: int, edges: Iterable[tuple[NodeId, NodeId]] = ()):
        if node_count < 0:
            raise ValueError("node_count must be >= 0")
        adj: list[set[int]] = [set() for _ in range(node_count)]
        for a, b in edges:
            if not (0 <= a < node_count and 0 <= b < node_count):
                raise ValueError(f"edge ({a}, {b}) out of range for {node_count} nodes")
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            adj[a].add(b)
            adj[b].add(a)
        self.node_count = node_count
        # sorted tuples give every traversal a fixed neighbor order
        self._neighbors: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(s)) for s in adj
        )

    def nodes(self) -> range:
        return range(self.node_count)

    def neighbors(self, v: NodeId) -> tuple[int, ...]:
        return self._neighbors[v]

    def degree(self, v: NodeId) -> int:
        return len(self._neighbors[v])

    def max_degree(self) -> int:
        if self.node_count == 0:
            return 0
        return max(len(ns) for ns in self._neighbors)

    def has_edge(self, a: NodeId, b: NodeId) -> bool:
        return b in self._neighbors[a]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each edge once as ``(a, b)`` with ``a < b``, ascending."""
        for a in range(self.node_count):
            for b in self._neighbors[a]:
                if a < b:
                    yield (a, b)

    def edge_count(self) -> int:
        return sum(len(ns) for ns in self._neighbors) // 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and self._neighbors == other._neighbors
        )

    def __hash__(self) -> int:
        return hash((self.node_count, self._neighbors))

    def __repr__(self) -> str:
        return f"Topology(node_count={self.node_count}, edges={self.edge_count()})"


def make_grid(n: int) -> Topology:
    """N x N square grid; row-major ids, no wraparound.

    Node (i, j) gets id ``i*n + j``.  Corners have degree 2, border nodes 3,
    interior nodes 4.
    """
    if n < 1:
        raise ValueError("grid size must be >= 1")
    edges = []
    for i in range(n):
        for j in range(n):
            v = i * n + j
            if j + 1 < n:
                edges.append((v, v + 1))
            if i + 1 < n:
                edges.append((v, v + n))
    return Topology(n * n, edges)


def make_torus(n: int) -> Topology:
    """N x N torus: grid with wraparound links in both directions (mod N).

    Every node has degree exactly 4.  Sizes below 3 would degenerate into
    multi-edges or self-loops and are rejected.
    """
    if n < 3:
        raise ValueError(f"torus size must be >= 3, got {n} (wraparound degenerates)")
    edges = []
    for i in range(n):
        for j in range(n):
            v = i * n + j
            edges.append((v, i * n + (j + 1) % n))
            edges.append((v, ((i + 1) % n) * n + j))
    return Topology(n * n, edges)


def save_topology(topo: Topology) -> str:
    """Render a topology in the edge-list text format.

    First line is the node count; each following line is one edge ``a b``
    with ``a < b``, sorted ascending.  Output ends with a newline.
    """
    lines = [str(topo.node_count)]
    lines.extend(f"{a} {b}" for a, b in topo.edges())
    return "\n".join(lines) + "\n"


def load_topology(text: str) -> Topology:
    """Parse the edge-list format produced by :func:`save_topology`.

    Blank lines and lines starting with ``#`` are ignored.  Malformed lines,
    out-of-range ids, self-loops, reversed edges and duplicates are rejected
    with the offending 1-based line number.
    """
    node_count: int | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if node_count is None:
            try:
                node_count = int(line)
            except ValueError:
                raise TopologyParseError(line_no, f"expected node count, got {line!r}")
            if node_count < 0:
                raise TopologyParseError(line_no, "node count must be >= 0")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyParseError(line_no, f"expected 'a b', got {line!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyParseError(line_no, f"expected integer ids, got {line!r}")
        if not (0 <= a < node_count and 0 <= b < node_count):
            raise TopologyParseError(
                line_no, f"edge ({a}, {b}) out of range for {node_count} nodes"
            )
        if a == b:
            raise TopologyParseError(line_no, f"self-loop at node {a}")
        if a > b:
            raise TopologyParseError(line_no, f"edge must be written smaller id first: {line!r}")
        if (a, b) in seen:
            raise TopologyParseError(line_no, f"duplicate edge ({a}, {b})")
        seen.add((a, b))
        edges.append((a, b))
    if node_count is None:
        raise TopologyParseError(1, "empty input, expected node count")
    return Topology(node_count, edges)


def enumerate_paths(
    topo: Topology,
    origin: NodeId,
    max_hops: int,
    allowed: Callable[[NodeId], bool] | None = None,
    banned: Iterable[NodeId] = (),
) -> Iterator[Path]:
    """Yield every simple path from ``origin`` with 1..max_hops hops.

    Depth-first, visiting neighbors in ascending id order, so the stream is
    fully deterministic; a path is yielded before any of its extensions.
    ``allowed`` and ``banned`` constrain the vertices a path may visit but
    never apply to ``origin`` itself.
    """
    if max_hops < 1:
        return
    blocked = frozenset(banned)
    path = [origin]
    on_path = {origin}

    def walk(v: NodeId, hops_left: int) -> Iterator[Path]:
        for w in topo.neighbors(v):
            if w in on_path or w in blocked:
                continue
            if allowed is not None and not allowed(w):
                continue
            path.append(w)
            on_path.add(w)
            yield tuple(path)
            if hops_left > 1:
                yield from walk(w, hops_left - 1)
            path.pop()
            on_path.discard(w)

    yield from walk(origin, max_hops)


def is_simple_path(topo: Topology, path: Iterable[NodeId]) -> bool:
    """True when vertices are distinct and consecutive ones are neighbors."""
    seq = tuple(path)
    if len(seq) < 1 or len(set(seq)) != len(seq):
        return False
    if any(not (0 <= v < topo.node_count) for v in seq):
        return False
    return all(topo.has_edge(a, b) for a, b in zip(seq, seq[1:]))
