"""Time-varying directed graphs and bounded-length path enumeration.

Node ids are 1-based integers. An edge (j, i) means node i receives from
node j. All graph values are immutable after construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Invalid graph construction or query."""


@dataclass(frozen=True)
class DiGraph:
    """Directed graph on nodes 1..n with edge (j, i): i receives from j."""

    n: int
    edges: frozenset[tuple[int, int]]
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"node count must be positive, got {self.n}")
        for (j, i) in self.edges:
            if j == i:
                raise GraphError(f"self-loop ({j},{i}) not allowed")
            if not (1 <= j <= self.n and 1 <= i <= self.n):
                raise GraphError(f"edge ({j},{i}) outside node range 1..{self.n}")

    @staticmethod
    def from_edges(n: int, edges: Iterable[Sequence[int]], name: str = "") -> "DiGraph":
        return DiGraph(n, frozenset((int(j), int(i)) for j, i in edges), name)

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    def check_node(self, i: int) -> None:
        if not (1 <= i <= self.n):
            raise GraphError(f"invalid node id {i} (nodes are 1..{self.n})")

    def in_neighbors(self, i: int) -> frozenset[int]:
        """Direct in-neighbors of i, excluding i itself."""
        self.check_node(i)
        return frozenset(j for (j, t) in self.edges if t == i)

    def out_neighbors(self, i: int) -> frozenset[int]:
        self.check_node(i)
        return frozenset(t for (j, t) in self.edges if j == i)

    def reversed(self) -> "DiGraph":
        return DiGraph(self.n, frozenset((i, j) for (j, i) in self.edges), self.name)

    def induced(self, keep: Iterable[int]) -> "DiGraph":
        """Subgraph induced by a node set (node ids unchanged)."""
        keep = set(keep)
        return DiGraph(
            self.n,
            frozenset((j, i) for (j, i) in self.edges if j in keep and i in keep),
            self.name,
        )


def in_neighbors_l(g: DiGraph, i: int, l: int) -> frozenset[int]:
    """Nodes that can reach i via paths of at most l hops; includes i."""
    if l < 1:
        raise GraphError(f"hop count must be >= 1, got {l}")
    g.check_node(i)
    seen = {i}
    frontier = {i}
    for _ in range(l):
        frontier = {j for t in frontier for j in g.in_neighbors(t)} - seen
        if not frontier:
            break
        seen |= frontier
    return frozenset(seen)


def out_neighbors_l(g: DiGraph, i: int, l: int) -> frozenset[int]:
    """Nodes reachable from i via paths of at most l hops; includes i."""
    return in_neighbors_l(g.reversed(), i, l)


@dataclass(frozen=True)
class Path:
    """A simple directed path (i_1, ..., i_{m}); all nodes distinct."""

    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise GraphError(f"path nodes must be distinct: {self.nodes}")
        if not self.nodes:
            raise GraphError("empty path")

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1


def paths_to(g: DiGraph, src: int, dst: int, l: int) -> list[Path]:
    """All simple directed paths of length <= l from src to dst.

    Deterministic: sorted lexicographically by node sequence.
    """
    g.check_node(src)
    g.check_node(dst)
    if src == dst:
        raise GraphError("paths_to requires src != dst")
    out = {}
    for j in g.nodes:
        out[j] = sorted(g.out_neighbors(j))
    found: list[tuple[int, ...]] = []

    def extend(prefix: list[int]):
        last = prefix[-1]
        if last == dst:
            found.append(tuple(prefix))
            return
        if len(prefix) - 1 >= l:
            return
        for nxt in out[last]:
            if nxt not in prefix:
                extend(prefix + [nxt])

    extend([src])
    return [Path(p) for p in sorted(found)]


def all_paths_into(g: DiGraph, dst: int, l: int) -> list[Path]:
    """All simple paths of length 1..l ending at dst, from every source.

    Sorted lexicographically by node sequence.
    """
    g.check_node(dst)
    inn = {t: sorted(g.in_neighbors(t)) for t in g.nodes}
    found: list[tuple[int, ...]] = []

    def back(suffix: list[int]):
        head = suffix[0]
        if len(suffix) > 1:
            found.append(tuple(suffix))
        if len(suffix) - 1 >= l:
            return
        for prev in inn[head]:
            if prev not in suffix:
                back([prev] + suffix)

    back([dst])
    return [Path(p) for p in sorted(found)]


def graph_power(g: DiGraph, l: int) -> DiGraph:
    """Edge (j, i) present iff a path of length <= l exists from j to i."""
    if l < 1:
        raise GraphError(f"hop count must be >= 1, got {l}")
    edges = set()
    for i in g.nodes:
        for j in in_neighbors_l(g, i, l):
            if j != i:
                edges.add((j, i))
    return DiGraph(g.n, frozenset(edges), g.name)


@dataclass(frozen=True)
class TopologySchedule:
    """A finite list of graphs on a shared node set, partitioned into intervals.

    ``interval_lengths`` are the lengths of the half-open index ranges
    [k_t, k_{t+1}) covering the list, starting at k_0 = 0. The schedule is
    replayed cyclically when a simulation outlives the list; the interval
    structure repeats with it.
    """

    graphs: tuple[DiGraph, ...]
    interval_lengths: tuple[int, ...]

    def __post_init__(self):
        if not self.graphs:
            raise GraphError("schedule must contain at least one graph")
        n = self.graphs[0].n
        if any(g.n != n for g in self.graphs):
            raise GraphError("all graphs in a schedule must share the node set")
        if not self.interval_lengths or any(x < 1 for x in self.interval_lengths):
            raise GraphError("interval lengths must be positive")
        if sum(self.interval_lengths) != len(self.graphs):
            raise GraphError(
                "intervals must exactly cover the schedule: "
                f"sum {sum(self.interval_lengths)} != {len(self.graphs)} graphs"
            )

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def period(self) -> int:
        return len(self.graphs)

    @property
    def max_interval_length(self) -> int:
        """K: the uniform bound on interval lengths."""
        return max(self.interval_lengths)

    def graph_at(self, k: int) -> DiGraph:
        return self.graphs[k % self.period]

    def intervals(self) -> list[range]:
        """The interval index ranges of one period."""
        out, start = [], 0
        for length in self.interval_lengths:
            out.append(range(start, start + length))
            start += length
        return out

    def induced(self, keep: Iterable[int]) -> "TopologySchedule":
        keep = frozenset(keep)
        return TopologySchedule(
            tuple(g.induced(keep) for g in self.graphs), self.interval_lengths
        )

    @staticmethod
    def static(g: DiGraph) -> "TopologySchedule":
        """Single-graph schedule with a unit interval."""
        return TopologySchedule((g,), (1,))


def union_graph(s: TopologySchedule, index_range: range | None = None) -> DiGraph:
    """Union of edge sets over an index range of the schedule (default: all)."""
    if index_range is None:
        index_range = range(s.period)
    ks = list(index_range)
    if not ks:
        raise GraphError("union over an empty range")
    if any(k < 0 or k >= s.period for k in ks):
        raise GraphError(f"range {index_range} outside schedule of length {s.period}")
    edges: set[tuple[int, int]] = set()
    for k in ks:
        edges |= s.graphs[k].edges
    return DiGraph(s.n, frozenset(edges))


def compact(g: DiGraph, keep: Iterable[int]) -> tuple[DiGraph, dict[int, int]]:
    """Induced subgraph on ``keep``, relabeled to 1..m preserving id order.

    Returns the relabeled graph and the old->new id mapping.
    """
    kept = sorted(set(keep))
    for i in kept:
        g.check_node(i)
    mapping = {old: new for new, old in enumerate(kept, start=1)}
    edges = frozenset(
        (mapping[j], mapping[i])
        for (j, i) in g.edges
        if j in mapping and i in mapping
    )
    return DiGraph(len(kept), edges, g.name), mapping


def compact_schedule(
    s: TopologySchedule, keep: Iterable[int]
) -> tuple[TopologySchedule, dict[int, int]]:
    """Schedule-wide compacting relabel; all graphs share the mapping."""
    kept = sorted(set(keep))
    graphs = []
    mapping: dict[int, int] = {}
    for g in s.graphs:
        cg, mapping = compact(g, kept)
        graphs.append(cg)
    return TopologySchedule(tuple(graphs), s.interval_lengths), mapping


# Bitmask helpers shared by the robustness checker and message-cover solver.

def nodes_bit(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << v
    return m


def bit_nodes(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out
