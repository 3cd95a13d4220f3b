"""Deterministic simulated Internet."""

from .probes import PingResult, PrefixTable, TraceResult, UnknownInterfaceError, ping, prefix_table, traceroute, whois_directory
from .routing import RouteClass, bgp_collect, is_valley_free, route, router_path, routing_tree
from .topology import (
    AsEdge,
    AsRecord,
    GenerationError,
    GroundTruthTopology,
    Relation,
    RouterRecord,
    Tier,
    TopologyParams,
    generate_topology,
    parse_as_counts,
)

__all__ = [
    "AsEdge", "AsRecord", "GenerationError", "GroundTruthTopology", "PingResult", "PrefixTable",
    "Relation", "RouteClass", "RouterRecord", "Tier", "TopologyParams", "TraceResult",
    "UnknownInterfaceError", "bgp_collect", "generate_topology", "is_valley_free", "parse_as_counts",
    "ping", "prefix_table", "route", "router_path", "routing_tree", "traceroute", "whois_directory",
]
