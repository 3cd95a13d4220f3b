"""Steady-state valley-free policy routing over the AS relationship graph.

Route selection per AS prefers customer-learned over peer-learned over
provider-learned routes, then shorter AS paths, then the lower next-hop AS
number. Export follows the usual rule: customer-learned (and own) routes go
to everyone, peer- and provider-learned routes only to customers.
"""

from __future__ import annotations

import heapq
from collections import deque
from enum import IntEnum
from typing import NamedTuple

from ..model import AsId
from .topology import GroundTruthTopology


class RouteClass(IntEnum):
    ORIGIN = 0
    CUSTOMER = 1
    PEER = 2
    PROVIDER = 3


class RouteEntry(NamedTuple):
    route_class: RouteClass
    length: int
    next_hop: AsId | None


def routing_tree(topo: GroundTruthTopology, dst: AsId) -> dict[AsId, RouteEntry]:
    """Best route of every AS towards ``dst`` (ASes without one are absent)."""
    key = ("tree", dst)
    cached = topo._cache.get(key)
    if cached is not None:
        return cached
    if dst not in topo.ases:
        raise KeyError(f"unknown AS {dst}")
    best: dict[AsId, RouteEntry] = {dst: RouteEntry(RouteClass.ORIGIN, 0, None)}

    # customer routes: breadth-first up the provider hierarchy
    frontier = [dst]
    length = 0
    while frontier:
        length += 1
        found: dict[AsId, AsId] = {}
        for u in frontier:
            for p in topo.providers[u]:
                if p in best:
                    continue
                if p not in found or u < found[p]:
                    found[p] = u
        for p, nh in found.items():
            best[p] = RouteEntry(RouteClass.CUSTOMER, length, nh)
        frontier = sorted(found)

    # peer routes: one lateral step onto a customer route (or the origin)
    peer_routes: dict[AsId, RouteEntry] = {}
    for x in topo.ases:
        if x in best:
            continue
        choice = None
        for p in topo.peers[x]:
            entry = best.get(p)
            if entry is None or entry.route_class > RouteClass.CUSTOMER:
                continue
            cand = (entry.length + 1, p)
            if choice is None or cand < choice:
                choice = cand
        if choice is not None:
            peer_routes[x] = RouteEntry(RouteClass.PEER, choice[0], choice[1])
    best.update(peer_routes)

    # provider routes: shortest-first expansion down to customers
    heap: list[tuple[int, int, AsId]] = [(e.length, -1, a) for a, e in best.items()]
    heapq.heapify(heap)
    done: set[AsId] = set()
    while heap:
        length, nh, node = heapq.heappop(heap)
        if node in done:
            continue
        if node not in best:
            best[node] = RouteEntry(RouteClass.PROVIDER, length, nh)
        done.add(node)
        for c in topo.customers[node]:
            if c not in best:
                heapq.heappush(heap, (best[node].length + 1, node, c))

    topo._cache[key] = best
    return best


def route(topo: GroundTruthTopology, src_as: AsId, dst_as: AsId) -> list[AsId] | None:
    """AS path from ``src_as`` to ``dst_as``; None when no policy-compliant
    path exists."""
    if src_as not in topo.ases or dst_as not in topo.ases:
        raise KeyError(f"unknown AS in route({src_as}, {dst_as})")
    tree = routing_tree(topo, dst_as)
    if src_as not in tree:
        return None
    path = [src_as]
    node = src_as
    while node != dst_as:
        node = tree[node].next_hop
        path.append(node)
    return path


def is_valley_free(topo: GroundTruthTopology, path: list[AsId]) -> bool:
    """Uphill (customer->provider) steps, at most one peer step, then downhill."""
    phase = 0  # 0 climbing, 1 after peer or first descent
    for a, b in zip(path, path[1:]):
        rel = topo.relation(a, b)
        if rel is None:
            return False
        if rel == "provider":
            if phase != 0:
                return False
        elif rel == "peer":
            if phase != 0:
                return False
            phase = 1
        else:
            phase = 1
    return len(set(path)) == len(path)


def bgp_collect(topo: GroundTruthTopology, vantage_as: AsId) -> set[tuple[AsId, AsId]]:
    """AS edges visible in the routing table of a collector at ``vantage_as``."""
    if vantage_as not in topo.ases:
        raise KeyError(f"unknown AS {vantage_as}")
    edges: set[tuple[AsId, AsId]] = set()
    for dst in topo.ases:
        path = route(topo, vantage_as, dst)
        if not path:
            continue
        for a, b in zip(path, path[1:]):
            edges.add((a, b) if a < b else (b, a))
    return edges


def intra_path(topo: GroundTruthTopology, src_router: int, dst_router: int) -> list[int]:
    """Shortest router path inside one AS; ties broken by lower router id."""
    key = ("bfs", src_router)
    parent = topo._cache.get(key)
    if parent is None:
        parent = {src_router: None}
        todo = deque([src_router])
        while todo:
            rid = todo.popleft()
            for nb in topo.routers[rid].intra_links:  # sorted
                if nb not in parent:
                    parent[nb] = rid
                    todo.append(nb)
        topo._cache[key] = parent
    if dst_router not in parent:
        raise ValueError(f"router {dst_router} unreachable from {src_router}")
    path = [dst_router]
    while path[-1] != src_router:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def router_path(topo: GroundTruthTopology, src_router: int, dst_router: int | None, dst_as: AsId) -> list[int] | None:
    """Router-level expansion of the AS route; ``dst_router=None`` stops at the
    entry router of ``dst_as``."""
    src_as = topo.routers[src_router].asn
    as_path = route(topo, src_as, dst_as)
    if as_path is None:
        return None
    path = [src_router]
    current = src_router
    for a, b in zip(as_path, as_path[1:]):
        exit_router, entry_router = topo.border[(a, b)]
        path.extend(intra_path(topo, current, exit_router)[1:])
        path.append(entry_router)
        current = entry_router
    if dst_router is not None:
        path.extend(intra_path(topo, current, dst_router)[1:])
    return path
