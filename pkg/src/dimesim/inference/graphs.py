"""IP, router and AS topologies from a measurement store snapshot."""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..model import Anonymous, As, AsId, Ip, Known, NodeKey, ObservedGraph, Router, edge_key, filter_edges
from ..netsim.probes import TraceResult
from ..records import MeasurementRecord
from .alias import AliasSets

Resolver = Callable[[Ip], "AsId | None"]
DAY = 86400


def _traces(records: Iterable[MeasurementRecord]) -> Iterable[MeasurementRecord]:
    for rec in records:
        if isinstance(rec.payload, TraceResult):
            yield rec


def _source_as(rec: MeasurementRecord, resolver: Resolver | None) -> AsId | None:
    if rec.source_as is not None:
        return rec.source_as
    if resolver is not None:
        return resolver(rec.source_ip)
    return None


def hop_nodes(hops: Sequence[Ip | None]) -> list[NodeKey]:
    """Known hops plus anonymous placeholders for interior non-replying runs;
    leading and trailing runs are dropped."""
    lo, hi = 0, len(hops)
    while lo < hi and hops[lo] is None:
        lo += 1
    while hi > lo and hops[hi - 1] is None:
        hi -= 1
    nodes: list[NodeKey] = []
    i = lo
    while i < hi:
        h = hops[i]
        if h is not None:
            nodes.append(Known(h))
            i += 1
            continue
        j = i
        while hops[j] is None:
            j += 1
        prev, nxt = hops[i - 1], hops[j]
        for k in range(1, j - i + 1):
            nodes.append(Anonymous(prev, nxt, k))
        i = j
    return nodes


def build_ip_graph(records: Iterable[MeasurementRecord], resolver: Resolver | None = None) -> ObservedGraph:
    graph = ObservedGraph("ip")
    for rec in _traces(records):
        src_as = _source_as(rec, resolver)
        if src_as is None:
            continue
        nodes = hop_nodes(rec.payload.hops)
        pairs = {edge_key(a, b) for a, b in zip(nodes, nodes[1:]) if a != b}
        for a, b in pairs:
            graph.add_observation(a, b, src_as, rec.timestamp, rec.agent_rank)
    return graph


def known_subgraph(ip_graph: ObservedGraph) -> ObservedGraph:
    """Edges whose two endpoints both have a known address."""
    out = ObservedGraph(ip_graph.level)
    for (a, b), st in ip_graph.edges.items():
        if isinstance(a, Known) and isinstance(b, Known):
            out.merge_edge(a, b, st)
    return out


def router_key(addr: Ip, canonical: dict[Ip, Ip]) -> Router:
    return Router(str(canonical.get(addr, addr)))


def build_router_graph(ip_graph: ObservedGraph, alias_sets: AliasSets) -> ObservedGraph:
    canonical = alias_sets.canonical()
    graph = ObservedGraph("router")
    for (a, b), st in ip_graph.edges.items():
        if not (isinstance(a, Known) and isinstance(b, Known)):
            continue
        ra, rb = router_key(a.ip, canonical), router_key(b.ip, canonical)
        if ra == rb:
            continue
        graph.merge_edge(ra, rb, st)
    return graph


def as_sequence(rec: MeasurementRecord, resolver: Resolver, unresolved: str = "break") -> list[AsId | None]:
    """AS projection of source plus hops, consecutive repeats collapsed.
    ``None`` entries (silent or unresolved hops) separate segments unless
    ``unresolved="skip"``."""
    seq: list[AsId | None] = [resolver(rec.source_ip)] if rec.source_as is None else [rec.source_as]
    for h in rec.payload.hops:
        seq.append(None if h is None else resolver(h))
    if unresolved == "skip":
        seq = [a for a in seq if a is not None]
    elif unresolved != "break":
        raise ValueError("unresolved must be 'break' or 'skip'")
    out: list[AsId | None] = []
    for a in seq:
        if out and a is not None and out[-1] == a:
            continue
        out.append(a)
    return out


def as_pairs(rec: MeasurementRecord, resolver: Resolver, unresolved: str = "break") -> set[tuple[AsId, AsId]]:
    seq = as_sequence(rec, resolver, unresolved)
    pairs = set()
    for a, b in zip(seq, seq[1:]):
        if a is None or b is None or a == b:
            continue
        pairs.add((a, b) if a < b else (b, a))
    return pairs


def as_observations(records: Iterable[MeasurementRecord], resolver: Resolver, unresolved: str = "break") -> ObservedGraph:
    graph = ObservedGraph("as")
    for rec in _traces(records):
        src_as = _source_as(rec, resolver)
        if src_as is None:
            continue
        for a, b in as_pairs(rec, resolver, unresolved):
            graph.add_observation(As(a), As(b), src_as, rec.timestamp, rec.agent_rank)
    return graph


def build_as_graph(
    records: Iterable[MeasurementRecord],
    resolver: Resolver,
    min_measurements: int = 2,
    unresolved: str = "break",
) -> ObservedGraph:
    return filter_edges(as_observations(records, resolver, unresolved), min_measurements)


@dataclass(frozen=True)
class DiscoveryEntry:
    first_day: int
    agent_rank: int
    measurement_count: int
    source_ases: frozenset[AsId]


def discovery_log(
    records: Sequence[MeasurementRecord],
    resolver: Resolver,
    epoch_start: int | None = None,
    min_measurements: int = 1,
) -> dict[tuple[AsId, AsId], DiscoveryEntry]:
    """Per AS edge: day of first observation and the rank of the agent that
    made it, plus how often and from how many source ASes it was seen."""
    if epoch_start is None:
        epoch_start = min((r.timestamp for r in records), default=0)
    graph = as_observations(records, resolver)
    out = {}
    for (a, b), st in graph.sorted_edges():
        if st.measurement_count < min_measurements:
            continue
        out[(a.number, b.number)] = DiscoveryEntry(
            (st.first_seen - epoch_start) // DAY,
            st.first_agent_rank,
            st.measurement_count,
            frozenset(st.source_ases),
        )
    return out


def dump_discovery_log(log: dict[tuple[AsId, AsId], DiscoveryEntry], fh) -> None:
    fh.write("as_a\tas_b\tfirst_day\tagent_rank\tmeasurements\tsource_ases\n")
    for (a, b), e in sorted(log.items()):
        fh.write(f"{a}\t{b}\t{e.first_day}\t{e.agent_rank}\t{e.measurement_count}\t{len(e.source_ases)}\n")


@dataclass
class AblationResult:
    k: int
    mean: float
    stdev: float
    counts: list[int] = field(default_factory=list)


class VantageAblation:
    """Edge counts of the filtered AS graph rebuilt from the records of a
    subset of source ASes. Each trial draws one random order of sources and
    uses its first ``k`` entries, so subsets are nested across ``k``."""

    def __init__(
        self,
        records: Iterable[MeasurementRecord],
        resolver: Resolver,
        min_measurements: int = 2,
        unresolved: str = "break",
    ) -> None:
        self.min_measurements = min_measurements
        self.per_source: dict[AsId, dict[tuple[AsId, AsId], int]] = {}
        for rec in _traces(records):
            src_as = _source_as(rec, resolver)
            if src_as is None:
                continue
            tally = self.per_source.setdefault(src_as, {})
            for pair in as_pairs(rec, resolver, unresolved):
                tally[pair] = tally.get(pair, 0) + 1
        self.sources = sorted(self.per_source)

    def edges_for(self, sources: Iterable[AsId]) -> int:
        total: dict[tuple[AsId, AsId], int] = {}
        for s in sources:
            for pair, n in self.per_source[s].items():
                total[pair] = total.get(pair, 0) + n
        return sum(1 for n in total.values() if n >= self.min_measurements)

    def orders(self, trials: int, seed: int) -> list[list[AsId]]:
        rng = random.Random(seed)
        return [rng.sample(self.sources, len(self.sources)) for _ in range(trials)]

    def run(self, ks: Sequence[int], trials: int, seed: int) -> list[AblationResult]:
        for k in ks:
            if k < 1:
                raise ValueError("k must be >= 1")
            if k > len(self.sources):
                raise ValueError(f"k={k} exceeds the {len(self.sources)} source ASes present")
        if trials < 1:
            raise ValueError("trials must be >= 1")
        orders = self.orders(trials, seed)
        results = []
        for k in ks:
            counts = [self.edges_for(order[:k]) for order in orders]
            stdev = statistics.pstdev(counts) if len(counts) > 1 else 0.0
            results.append(AblationResult(k, statistics.fmean(counts), stdev, counts))
        return results


def vantage_ablation(
    records: Iterable[MeasurementRecord],
    resolver: Resolver,
    k: int,
    trials: int,
    seed: int,
    min_measurements: int = 2,
) -> AblationResult:
    return VantageAblation(records, resolver, min_measurements).run([k], trials, seed)[0]
