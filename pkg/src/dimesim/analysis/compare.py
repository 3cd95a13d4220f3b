"""Side-by-side topology summaries and the data series behind each plot."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..model import As, AsId, Known, ObservedGraph, Router, graph_from_edges, to_adjacency
from .metrics import clustering, degree_stats


@dataclass(frozen=True)
class SummaryRow:
    name: str
    n_nodes: int
    n_edges: int
    mean_degree: float
    gamma: float | None
    cc: float

    def format(self) -> str:
        gamma = "undefined" if self.gamma is None else f"{self.gamma:.4f}"
        return f"{self.name}\t{self.n_nodes}\t{self.n_edges}\t{self.mean_degree:.3f}\t{gamma}\t{self.cc:.4f}"


def summary_row(name: str, graph) -> SummaryRow:
    adj = to_adjacency(graph)
    if not adj:
        return SummaryRow(name, 0, 0, 0.0, None, 0.0)
    ds = degree_stats(adj)
    return SummaryRow(name, ds.n_nodes, ds.n_edges, float(ds.mean_degree), ds.gamma, clustering(adj).global_cc)


def _node_kind(adj: Mapping) -> str | None:
    for v in adj:
        return getattr(v, "kind", type(v).__name__)
    return None


def degree_pairs(a, b) -> list[tuple[object, int, int]]:
    """(node, degree in a, degree in b) for nodes present in both."""
    adj_a, adj_b = to_adjacency(a), to_adjacency(b)
    common = sorted(set(adj_a) & set(adj_b), key=str)
    return [(v, len(adj_a[v]), len(adj_b[v])) for v in common]


def augmented_fraction(a, b) -> float:
    """Share of common nodes whose degree in ``a`` exceeds that in ``b``."""
    pairs = degree_pairs(a, b)
    if not pairs:
        return 0.0
    return sum(1 for _, da, db in pairs if da > db) / len(pairs)


def restrict_to(graph: ObservedGraph | Mapping, nodes_of) -> dict:
    """Subgraph of ``graph`` spanning only nodes that appear in ``nodes_of``."""
    keep = set(to_adjacency(nodes_of))
    adj = to_adjacency(graph)
    return {v: {u for u in nbrs if u in keep} for v, nbrs in adj.items() if v in keep and nbrs & keep}


def union(*graphs) -> dict:
    out: dict = {}
    for g in graphs:
        for v, nbrs in to_adjacency(g).items():
            out.setdefault(v, set()).update(nbrs)
    return out


def as_graph_from_pairs(pairs: Iterable[tuple[AsId, AsId]]) -> dict:
    return graph_from_edges((As(a), As(b)) for a, b in pairs)


@dataclass
class ComparisonReport:
    rows: list[SummaryRow]
    scatter: dict[tuple[str, str], list[tuple[object, int, int]]] = field(default_factory=dict)
    augmented: dict[tuple[str, str], float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def format(self) -> str:
        lines = ["topology\tN\tE\t<k>\tgamma\tCC"]
        lines += [r.format() for r in self.rows]
        for (a, b), frac in sorted(self.augmented.items()):
            lines.append(f"degree({a}) > degree({b}) for {frac:.4f} of {len(self.scatter[(a, b)])} common nodes")
        lines += self.notes
        return "\n".join(lines) + "\n"


def compare(topologies: Mapping[str, object]) -> ComparisonReport:
    if len(topologies) < 2:
        raise ValueError("compare needs at least two graphs")
    adjs = {name: to_adjacency(g) for name, g in topologies.items()}
    kinds = {_node_kind(a) for a in adjs.values() if a}
    if len(kinds) > 1:
        raise ValueError(f"graphs mix node kinds: {sorted(kinds)}")
    report = ComparisonReport([summary_row(n, a) for n, a in adjs.items()])
    names = list(adjs)
    for a in names:
        for b in names:
            if a == b:
                continue
            pairs = degree_pairs(adjs[a], adjs[b])
            report.scatter[(a, b)] = pairs
            report.augmented[(a, b)] = augmented_fraction(adjs[a], adjs[b])
            if not pairs:
                report.notes.append(f"{a} and {b} share no nodes; scatter empty")
    return report


def edge_observation_histograms(graph: ObservedGraph) -> tuple[dict[int, int], dict[int, int]]:
    """Edge counts by number of source ASes and by number of measurements."""
    by_sources = Counter(len(st.source_ases) for st in graph.edges.values())
    by_measurements = Counter(st.measurement_count for st in graph.edges.values())
    return dict(sorted(by_sources.items())), dict(sorted(by_measurements.items()))


def alias_rank_curve(router_graph, alias_sets) -> dict[int, float]:
    """Router degree -> mean number of addresses resolved to routers of that
    degree. Router keys name the smallest address of their alias set."""
    sizes: dict[str, int] = {}
    for group in alias_sets.groups():
        sizes[str(min(group))] = len(group)
    adj = to_adjacency(router_graph)
    per_k: dict[int, list[int]] = {}
    for v, nbrs in adj.items():
        rid = v.router_id if isinstance(v, Router) else str(v.ip if isinstance(v, Known) else v)
        per_k.setdefault(len(nbrs), []).append(sizes.get(rid, 1))
    return {k: sum(vs) / len(vs) for k, vs in sorted(per_k.items())}


def write_series(path, series: Mapping, header: tuple[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{header[0]},{header[1]}\n")
        for k, v in series.items() if isinstance(series, Mapping) else series:
            fh.write(f"{k},{v}\n")
