"""Shared domain types: addresses, node keys and the observed graph.

Addresses reuse :mod:`ipaddress` (``IPv4Address`` is totally ordered by
numeric value and round-trips through its dotted-quad form; a strict
``IPv4Network`` guarantees the host bits of its base are zero).
"""

from __future__ import annotations

import io
import ipaddress
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, TextIO, Union

Ip = ipaddress.IPv4Address
Prefix = ipaddress.IPv4Network
AsId = int

GRAPH_LEVELS = ("ip", "router", "as")


def ip(value: str | int) -> Ip:
    return ipaddress.IPv4Address(value)


def prefix(value: str) -> Prefix:
    """Parse ``a.b.c.d/len``; rejects bases with host bits set."""
    return ipaddress.IPv4Network(value, strict=True)


def prefix_contains(p: Prefix, addr: Ip) -> bool:
    if p.prefixlen == 0:
        return True
    shift = 32 - p.prefixlen
    return (int(addr) >> shift) == (int(p.network_address) >> shift)


# -- node keys -----------------------------------------------------------------


@dataclass(frozen=True)
class Known:
    ip: Ip
    kind = "ip"

    @property
    def token(self) -> str:
        return str(self.ip)


@dataclass(frozen=True)
class Anonymous:
    """A non-responding hop, named by its responding neighbours and its
    distance (1-based) from ``prev``."""

    prev: Ip
    next: Ip
    index: int
    kind = "anon"

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError(f"anonymous hop index must be >= 1, got {self.index}")

    @property
    def token(self) -> str:
        return f"anon:{self.prev}:{self.next}:{self.index}"


@dataclass(frozen=True)
class Router:
    router_id: str
    kind = "router"

    @property
    def token(self) -> str:
        return f"router:{self.router_id}"


@dataclass(frozen=True)
class As:
    number: AsId
    kind = "as"

    def __post_init__(self) -> None:
        if self.number < 1:
            raise ValueError(f"AS numbers are positive, got {self.number}")

    @property
    def token(self) -> str:
        return f"AS{self.number}"


NodeKey = Union[Known, Anonymous, Router, As]


def parse_node(token: str) -> NodeKey:
    if token.startswith("anon:"):
        _, prev, nxt, index = token.split(":")
        return Anonymous(ip(prev), ip(nxt), int(index))
    if token.startswith("router:"):
        return Router(token[len("router:"):])
    if token.startswith("AS"):
        return As(int(token[2:]))
    return Known(ip(token))


# -- observed graph -----------------------------------------------------------------


class SelfLoopError(ValueError):
    pass


@dataclass
class ObservationStats:
    measurement_count: int
    source_ases: set[AsId]
    first_seen: int
    first_agent_rank: int

    def merge(self, other: ObservationStats) -> None:
        self.measurement_count += other.measurement_count
        self.source_ases |= other.source_ases
        if (other.first_seen, other.first_agent_rank) < (self.first_seen, self.first_agent_rank):
            self.first_seen = other.first_seen
            self.first_agent_rank = other.first_agent_rank

    def copy(self) -> ObservationStats:
        return ObservationStats(
            self.measurement_count, set(self.source_ases), self.first_seen, self.first_agent_rank
        )


EdgeKey = tuple[NodeKey, NodeKey]


def edge_key(a: NodeKey, b: NodeKey) -> EdgeKey:
    return (a, b) if a.token <= b.token else (b, a)


@dataclass
class ObservedGraph:
    """Undirected graph whose edges carry observation statistics.

    The earliest observation of an edge is kept as the minimum of
    ``(timestamp, agent_rank)``, which makes the final graph independent of
    the order observations arrive in.
    """

    level: str = "ip"
    nodes: set[NodeKey] = field(default_factory=set)
    edges: dict[EdgeKey, ObservationStats] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.level not in GRAPH_LEVELS:
            raise ValueError(f"unknown graph level {self.level!r}")

    def add_observation(
        self,
        a: NodeKey,
        b: NodeKey,
        source_as: AsId,
        timestamp: int,
        agent_rank: int,
        count: int = 1,
    ) -> ObservedGraph:
        if a == b:
            raise SelfLoopError(f"self-loop on {a.token}")
        key = edge_key(a, b)
        stats = self.edges.get(key)
        incoming = ObservationStats(count, {source_as}, timestamp, agent_rank)
        if stats is None:
            self.edges[key] = incoming
            self.nodes.add(a)
            self.nodes.add(b)
        else:
            stats.merge(incoming)
        return self

    def merge_edge(self, a: NodeKey, b: NodeKey, stats: ObservationStats) -> None:
        if a == b:
            raise SelfLoopError(f"self-loop on {a.token}")
        key = edge_key(a, b)
        existing = self.edges.get(key)
        if existing is None:
            self.edges[key] = stats.copy()
            self.nodes.add(a)
            self.nodes.add(b)
        else:
            existing.merge(stats)

    def has_edge(self, a: NodeKey, b: NodeKey) -> bool:
        return edge_key(a, b) in self.edges

    def stats(self, a: NodeKey, b: NodeKey) -> ObservationStats:
        return self.edges[edge_key(a, b)]

    def __len__(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[NodeKey, set[NodeKey]]:
        adj: dict[NodeKey, set[NodeKey]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def sorted_edges(self) -> list[tuple[EdgeKey, ObservationStats]]:
        return sorted(self.edges.items(), key=lambda kv: (kv[0][0].token, kv[0][1].token))

    def copy(self) -> ObservedGraph:
        return ObservedGraph(
            self.level, set(self.nodes), {k: v.copy() for k, v in self.edges.items()}
        )

    def restrict(self, keep: Iterable[NodeKey]) -> ObservedGraph:
        """Induced subgraph on ``keep`` (isolated nodes dropped)."""
        keep = set(keep)
        out = ObservedGraph(self.level)
        for (a, b), st in self.edges.items():
            if a in keep and b in keep:
                out.merge_edge(a, b, st)
        return out

    # serialization -------------------------------------------------------

    def dump(self, fh: TextIO) -> None:
        fh.write(f"level\t{self.level}\n")
        for (a, b), st in self.sorted_edges():
            sources = ",".join(str(s) for s in sorted(st.source_ases))
            fh.write(
                f"{a.kind}-{b.kind}\t{a.token}\t{b.token}\t{st.measurement_count}\t"
                f"{sources}\t{st.first_seen}\t{st.first_agent_rank}\n"
            )

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    @classmethod
    def load(cls, fh: TextIO) -> ObservedGraph:
        header = fh.readline().rstrip("\n").split("\t")
        if len(header) != 2 or header[0] != "level":
            raise ValueError(f"bad graph header: {header!r}")
        graph = cls(header[1])
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 7:
                raise ValueError(f"line {lineno}: expected 7 fields, got {len(parts)}")
            _, ta, tb, count, sources, first_seen, rank = parts
            stats = ObservationStats(
                int(count),
                {int(s) for s in sources.split(",") if s},
                int(first_seen),
                int(rank),
            )
            graph.merge_edge(parse_node(ta), parse_node(tb), stats)
        return graph

    @classmethod
    def loads(cls, text: str) -> ObservedGraph:
        return cls.load(io.StringIO(text))


def add_observation(
    graph: ObservedGraph,
    a: NodeKey,
    b: NodeKey,
    source_as: AsId,
    timestamp: int,
    agent_rank: int,
) -> ObservedGraph:
    return graph.add_observation(a, b, source_as, timestamp, agent_rank)


def filter_edges(graph: ObservedGraph, min_measurements: int) -> ObservedGraph:
    """Keep edges seen in at least ``min_measurements`` measurements."""
    if min_measurements < 1:
        raise ValueError("min_measurements must be >= 1")
    out = ObservedGraph(graph.level)
    for (a, b), st in graph.edges.items():
        if st.measurement_count >= min_measurements:
            out.merge_edge(a, b, st)
    return out


Adjacency = Mapping[object, Iterable[object]]


def to_adjacency(graph: ObservedGraph | Adjacency) -> dict:
    """Normalise an :class:`ObservedGraph` or adjacency mapping to
    ``{node: set(neighbours)}``, symmetrised and without self-loops."""
    if isinstance(graph, ObservedGraph):
        return graph.adjacency()
    adj: dict = {n: set() for n in graph}
    for n, nbrs in graph.items():
        for m in nbrs:
            if m == n:
                continue
            adj[n].add(m)
            adj.setdefault(m, set()).add(n)
    return adj


def graph_from_edges(edges: Iterable[tuple[object, object]]) -> dict:
    adj: dict = {}
    for a, b in edges:
        if a == b:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def iter_prefix(p: Prefix) -> Iterator[Ip]:
    base = int(p.network_address)
    for offset in range(p.num_addresses):
        yield Ip(base + offset)
