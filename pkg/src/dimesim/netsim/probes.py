"""Traceroute/ping responders and the announced prefix table."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..model import AsId, Ip, Prefix
from .routing import router_path
from .topology import GroundTruthTopology

PROBE_KINDS = ("icmp", "udp")
RTT_PER_HOP_MS = 5.0


class UnknownInterfaceError(KeyError):
    pass


@dataclass(frozen=True)
class TraceResult:
    src: Ip
    dst: Ip
    # None marks a hop that did not reply
    hops: tuple[Ip | None, ...]
    probe_kind: str
    reached: bool


@dataclass(frozen=True)
class PingResult:
    src: Ip
    target: Ip
    responder: Ip | None
    probe_kind: str
    rtt_ms: float | None = None


def _check_kind(probe_kind: str) -> None:
    if probe_kind not in PROBE_KINDS:
        raise ValueError(f"probe kind must be one of {PROBE_KINDS}, got {probe_kind!r}")


def _source_router(topo: GroundTruthTopology, src_interface: Ip):
    r = topo.router_of(src_interface)
    if r is None:
        raise UnknownInterfaceError(f"{src_interface} is not an interface of this topology")
    return r


def traceroute(topo: GroundTruthTopology, src_interface: Ip, dst: Ip, probe_kind: str = "icmp") -> TraceResult:
    """Hop list excludes the source router; each hop is reported by the
    interface facing the previous hop."""
    _check_kind(probe_kind)
    src_router = _source_router(topo, src_interface)
    dst_router = topo.router_of(dst)
    dst_as = dst_router.asn if dst_router else topo.as_of_ip(dst)
    if dst_as is None or dst_as not in topo.ases:
        return TraceResult(src_interface, dst, (), probe_kind, False)
    if dst_router is not None and dst_router.router_id == src_router.router_id:
        return TraceResult(src_interface, dst, (dst,), probe_kind, True)
    path = router_path(topo, src_router.router_id, dst_router.router_id if dst_router else None, dst_as)
    if path is None:
        return TraceResult(src_interface, dst, (), probe_kind, False)
    src_as = src_router.asn
    hops: list[Ip | None] = []
    reached = dst_router is not None
    for prev, rid in zip(path, path[1:]):
        r = topo.routers[rid]
        rec = topo.ases[r.asn]
        blocked = r.asn != src_as and rec.blocks(probe_kind)
        if blocked and r.asn == dst_as:
            reached = False
            break
        if blocked or not r.responds_to_traceroute:
            hops.append(None)
        else:
            hops.append(r.link_interface[prev])
    return TraceResult(src_interface, dst, tuple(hops), probe_kind, reached)


def ping(
    topo: GroundTruthTopology,
    src_interface: Ip,
    target: Ip,
    probe_kind: str = "icmp",
    nonce: int = 0,
) -> PingResult:
    """Reply source is the ingress interface on the target's router, or its
    default interface for routers configured to answer from it."""
    _check_kind(probe_kind)
    src_router = _source_router(topo, src_interface)
    r = topo.router_of(target)
    if r is None:
        return PingResult(src_interface, target, None, probe_kind)
    if r.asn != src_router.asn and topo.ases[r.asn].blocks(probe_kind):
        return PingResult(src_interface, target, None, probe_kind)
    path = router_path(topo, src_router.router_id, r.router_id, r.asn)
    if path is None:
        return PingResult(src_interface, target, None, probe_kind)
    if len(path) == 1 or r.answers_from_default:
        responder = r.default_interface
    else:
        responder = r.link_interface[path[-2]]
    jitter = random.Random(f"{topo.seed}:{src_interface}:{target}:{probe_kind}:{nonce}").random()
    rtt = round((len(path) - 1) * RTT_PER_HOP_MS + jitter, 3)
    return PingResult(src_interface, target, responder, probe_kind, rtt)


@dataclass
class PrefixTable:
    entries: list[tuple[Prefix, AsId]]
    # interfaces deliberately left out of every announcement
    omitted: set[Ip] = field(default_factory=set)


def _exclude(blocks: list[Prefix], holes: list[Ip]) -> list[Prefix]:
    pieces = list(blocks)
    for hole in holes:
        host = Prefix((hole, 32))
        nxt = []
        for p in pieces:
            if hole in p:
                nxt.extend(p.address_exclude(host))
            else:
                nxt.append(p)
        pieces = nxt
    return pieces


def prefix_table(
    topo: GroundTruthTopology,
    more_specific_fraction: float = 0.0,
    omission_fraction: float = 0.0,
    seed: int = 0,
) -> PrefixTable:
    """Announcements: one /16 per AS, /24 sub-announcements for a fraction of
    ASes, and holes punched around a random fraction of interfaces."""
    for name, v in (("more_specific_fraction", more_specific_fraction), ("omission_fraction", omission_fraction)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    rng = random.Random(f"prefix-table:{topo.seed}:{seed}")
    omitted = {i for i in topo.all_interfaces() if rng.random() < omission_fraction}
    entries: list[tuple[Prefix, AsId]] = []
    for rec in topo.ases.values():
        blocks = [rec.prefix]
        if rng.random() < more_specific_fraction:
            blocks.extend(sorted({Prefix((int(i) & 0xFFFFFF00, 24)) for r in rec.routers for i in r.interfaces}))
        holes = sorted(i for r in rec.routers for i in r.interfaces if i in omitted)
        for p in _exclude(blocks, holes):
            entries.append((p, rec.id))
    entries.sort(key=lambda e: (int(e[0].network_address), e[0].prefixlen))
    return PrefixTable(entries, omitted)


def whois_directory(topo: GroundTruthTopology, omitted: set[Ip], coverage: float = 0.5, seed: int = 0) -> dict[Ip, AsId]:
    """Registry entries for a ``coverage`` share of the unannounced interfaces."""
    if not 0.0 <= coverage <= 1.0:
        raise ValueError("coverage must lie in [0, 1]")
    rng = random.Random(f"whois:{topo.seed}:{seed}")
    out = {}
    for addr in sorted(omitted):
        if rng.random() < coverage:
            out[addr] = topo.router_of(addr).asn
    return out
