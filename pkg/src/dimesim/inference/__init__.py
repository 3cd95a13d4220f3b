"""Topology inference from a measurement store."""

from .alias import AliasSets, alias_resolve
from .graphs import (
    AblationResult,
    DiscoveryEntry,
    VantageAblation,
    as_observations,
    as_sequence,
    build_as_graph,
    build_ip_graph,
    build_router_graph,
    discovery_log,
    dump_discovery_log,
    hop_nodes,
    known_subgraph,
    vantage_ablation,
)
from .prefixdb import AsResolver, PrefixDb, ResolutionStats, resolve_as

__all__ = [
    "AblationResult", "AliasSets", "AsResolver", "DiscoveryEntry", "PrefixDb", "ResolutionStats",
    "VantageAblation", "alias_resolve", "as_observations", "as_sequence", "build_as_graph",
    "build_ip_graph", "build_router_graph", "discovery_log", "dump_discovery_log", "hop_nodes",
    "known_subgraph", "resolve_as", "vantage_ablation",
]
