"""Ground-truth Internet generator and its on-disk form.

Each AS owns one /16. Inside it every router gets its own run of /24 blocks
and one interface per link endpoint, so interface addresses are unique
topology-wide and always fall inside the owning AS's prefix.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable

from ..model import AsId, Ip, Prefix

# 16.0.0.0 upwards; AS n owns (16 << 24) + (n << 16) / 16
_ADDRESS_BASE = 16 << 24
MAX_AS_ID = (224 << 8) - (16 << 8) - 1


class GenerationError(ValueError):
    pass


class Tier(str, Enum):
    CORE = "core"
    MIDDLE = "middle"
    STUB = "stub"


class Relation(str, Enum):
    CUSTOMER_PROVIDER = "c2p"
    PEER_PEER = "p2p"


DEFAULT_ROUTERS = {Tier.CORE: (5, 15), Tier.MIDDLE: (2, 6), Tier.STUB: (1, 3)}


@dataclass(frozen=True)
class TopologyParams:
    n_core: int = 3
    n_middle: int = 0
    n_stub: int = 0
    peer_link_fraction: float = 0.0
    routers_per_as_range: dict[Tier, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_ROUTERS)
    )
    anonymous_router_fraction: float = 0.0
    icmp_block_fraction: float = 0.0
    udp_block_fraction: float = 0.0
    # stubs (and middles) are spread over this many regions; None -> n_stub // 6
    n_regions: int | None = None
    multihome_fraction: float = 0.5
    regional_provider_fraction: float = 0.7
    default_responder_fraction: float = 0.3
    intra_extra_link_fraction: float = 0.3
    intra_degree_cap: int = 4
    # head start of core ASes in provider selection, in customer units
    core_attraction: float = 8.0

    def validate(self) -> None:
        if self.n_core < 3:
            raise GenerationError(f"need at least 3 core ASes, got {self.n_core}")
        if self.n_middle < 0 or self.n_stub < 0:
            raise GenerationError("AS counts must be non-negative")
        if self.n_stub > 0 and self.n_core + self.n_middle == 0:
            raise GenerationError("stubs need at least one possible provider")
        if self.n_core + self.n_middle + self.n_stub > MAX_AS_ID:
            raise GenerationError("too many ASes for the address plan")
        for name in (
            "peer_link_fraction",
            "anonymous_router_fraction",
            "icmp_block_fraction",
            "udp_block_fraction",
            "multihome_fraction",
            "regional_provider_fraction",
            "default_responder_fraction",
            "intra_extra_link_fraction",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise GenerationError(f"{name} must lie in [0, 1], got {value}")
        for tier, (lo, hi) in self.routers_per_as_range.items():
            if lo < 1 or hi < lo or hi > 255:
                raise GenerationError(f"bad router range for {tier}: {(lo, hi)}")
        if self.n_regions is not None and self.n_regions < 1:
            raise GenerationError("n_regions must be >= 1")
        if self.core_attraction <= 0:
            raise GenerationError("core_attraction must be positive")
        if self.intra_degree_cap < 2:
            raise GenerationError("intra_degree_cap must be >= 2")

    def regions(self) -> int:
        if self.n_regions is not None:
            return self.n_regions
        return max(1, self.n_stub // 6)

    def to_json(self) -> dict[str, Any]:
        out = {
            k: getattr(self, k)
            for k in self.__dataclass_fields__
            if k != "routers_per_as_range"
        }
        out["routers_per_as_range"] = {
            t.value: list(r) for t, r in sorted(self.routers_per_as_range.items())
        }
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> TopologyParams:
        data = dict(data)
        ranges = dict(DEFAULT_ROUTERS)
        for k, v in data.pop("routers_per_as_range", {}).items():
            ranges[Tier(k)] = (int(v[0]), int(v[1]))
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise GenerationError(f"unknown topology parameters: {sorted(unknown)}")
        return cls(routers_per_as_range=ranges, **data)


@dataclass
class RouterRecord:
    router_id: int
    asn: AsId
    interfaces: list[Ip]
    intra_links: list[int]
    border_links: list[tuple[AsId, int]]
    responds_to_traceroute: bool
    default_interface: Ip
    # ping replies come from default_interface instead of the ingress one
    answers_from_default: bool
    # neighbour router id -> local interface on that link
    link_interface: dict[int, Ip]


@dataclass
class AsRecord:
    id: AsId
    tier: Tier
    prefix: Prefix
    routers: list[RouterRecord]
    blocks_icmp: bool
    blocks_udp: bool
    region: int | None = None

    def blocks(self, probe_kind: str) -> bool:
        return self.blocks_icmp if probe_kind == "icmp" else self.blocks_udp


@dataclass(frozen=True)
class AsEdge:
    """For customer-provider edges ``a`` is the customer, ``b`` the provider."""

    a: AsId
    b: AsId
    relation: Relation

    def pair(self) -> tuple[AsId, AsId]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


class GroundTruthTopology:
    """Immutable simulated Internet plus lookup indexes and routing caches."""

    def __init__(
        self,
        ases: dict[AsId, AsRecord],
        as_edges: Iterable[AsEdge],
        seed: int,
        params: TopologyParams | None = None,
    ) -> None:
        self.ases = dict(sorted(ases.items()))
        self.as_edges = sorted(as_edges, key=lambda e: (e.pair(), e.relation.value))
        self.seed = seed
        self.params = params
        self.providers: dict[AsId, list[AsId]] = {a: [] for a in self.ases}
        self.customers: dict[AsId, list[AsId]] = {a: [] for a in self.ases}
        self.peers: dict[AsId, list[AsId]] = {a: [] for a in self.ases}
        for e in self.as_edges:
            if e.relation is Relation.CUSTOMER_PROVIDER:
                self.providers[e.a].append(e.b)
                self.customers[e.b].append(e.a)
            else:
                self.peers[e.a].append(e.b)
                self.peers[e.b].append(e.a)
        for table in (self.providers, self.customers, self.peers):
            for lst in table.values():
                lst.sort()
        self.routers: dict[int, RouterRecord] = {}
        self.interface_owner: dict[Ip, RouterRecord] = {}
        # (as a, as b) -> (router in a, router in b)
        self.border: dict[tuple[AsId, AsId], tuple[int, int]] = {}
        for rec in self.ases.values():
            for r in rec.routers:
                self.routers[r.router_id] = r
                for iface in r.interfaces:
                    self.interface_owner[iface] = r
                for remote_as, remote_router in r.border_links:
                    self.border[(rec.id, remote_as)] = (r.router_id, remote_router)
        self._prefix16 = {int(rec.prefix.network_address) >> 16: rec.id for rec in self.ases.values()}
        self._cache: dict[Any, Any] = {}

    # lookups -------------------------------------------------------------------

    def relation(self, a: AsId, b: AsId) -> str | None:
        """Relation of ``b`` as seen from ``a``: customer, peer, provider."""
        if b in self.customers[a]:
            return "customer"
        if b in self.peers[a]:
            return "peer"
        if b in self.providers[a]:
            return "provider"
        return None

    def neighbors(self, a: AsId) -> list[AsId]:
        return sorted(set(self.customers[a]) | set(self.peers[a]) | set(self.providers[a]))

    def as_of_ip(self, addr: Ip) -> AsId | None:
        """Ground-truth owner of an address by address plan (not via BGP)."""
        return self._prefix16.get(int(addr) >> 16)

    def router_of(self, addr: Ip) -> RouterRecord | None:
        return self.interface_owner.get(addr)

    def all_interfaces(self) -> list[Ip]:
        return sorted(self.interface_owner)

    def edge_pairs(self) -> set[tuple[AsId, AsId]]:
        return {e.pair() for e in self.as_edges}

    def router_edges(self) -> set[tuple[int, int]]:
        """Physical router adjacencies, intra- and inter-AS, as sorted id pairs."""
        out = set()
        for r in self.routers.values():
            for o in r.intra_links:
                out.add((min(r.router_id, o), max(r.router_id, o)))
            for _, o in r.border_links:
                out.add((min(r.router_id, o), max(r.router_id, o)))
        return out

    def tier_members(self, tier: Tier) -> list[AsId]:
        return [a for a, rec in self.ases.items() if rec.tier is tier]

    # invariants ---------------------------------------------------------------

    def validate(self) -> None:
        ids = list(self.ases)
        if not ids:
            raise GenerationError("empty topology")
        reached = {ids[0]}
        todo = deque([ids[0]])
        while todo:
            a = todo.popleft()
            for b in self.neighbors(a):
                if b not in reached:
                    reached.add(b)
                    todo.append(b)
        if len(reached) != len(ids):
            raise GenerationError("AS relationship graph is disconnected")
        state: dict[AsId, int] = {}

        def visit(a: AsId) -> None:
            state[a] = 1
            for p in self.providers[a]:
                if state.get(p) == 1:
                    raise GenerationError(f"provider cycle through AS{p}")
                if p not in state:
                    visit(p)
            state[a] = 2

        for a in ids:
            if a not in state:
                visit(a)
        seen: set[Ip] = set()
        for rec in self.ases.values():
            if rec.tier is Tier.STUB and not self.providers[rec.id]:
                raise GenerationError(f"stub AS{rec.id} has no provider")
            for r in rec.routers:
                if r.default_interface not in r.interfaces:
                    raise GenerationError(f"router {r.router_id}: default interface missing")
                for iface in r.interfaces:
                    if iface not in rec.prefix:
                        raise GenerationError(f"{iface} outside AS{rec.id} prefix")
                    if iface in seen:
                        raise GenerationError(f"duplicate interface {iface}")
                    seen.add(iface)
            if rec.routers:
                inside = {rec.routers[0].router_id}
                todo = deque(inside)
                while todo:
                    rid = todo.popleft()
                    for nb in self.routers[rid].intra_links:
                        if nb not in inside:
                            inside.add(nb)
                            todo.append(nb)
                if len(inside) != len(rec.routers):
                    raise GenerationError(f"AS{rec.id} router graph disconnected")

    # serialization ------------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        return {
            "format": "dimesim-topology/1",
            "seed": self.seed,
            "params": self.params.to_json() if self.params else None,
            "as_edges": [[e.a, e.b, e.relation.value] for e in self.as_edges],
            "ases": [
                {
                    "id": rec.id,
                    "tier": rec.tier.value,
                    "prefix": str(rec.prefix),
                    "region": rec.region,
                    "blocks_icmp": rec.blocks_icmp,
                    "blocks_udp": rec.blocks_udp,
                    "routers": [
                        {
                            "id": r.router_id,
                            "interfaces": [str(i) for i in r.interfaces],
                            "intra_links": r.intra_links,
                            "border_links": [list(b) for b in r.border_links],
                            "responds_to_traceroute": r.responds_to_traceroute,
                            "default_interface": str(r.default_interface),
                            "answers_from_default": r.answers_from_default,
                            "link_interface": {
                                str(k): str(v) for k, v in sorted(r.link_interface.items())
                            },
                        }
                        for r in rec.routers
                    ],
                }
                for rec in self.ases.values()
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=1) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> GroundTruthTopology:
        if data.get("format") != "dimesim-topology/1":
            raise ValueError("not a dimesim topology file")
        ases = {}
        for a in data["ases"]:
            routers = [
                RouterRecord(
                    router_id=r["id"],
                    asn=a["id"],
                    interfaces=[Ip(i) for i in r["interfaces"]],
                    intra_links=list(r["intra_links"]),
                    border_links=[(int(x), int(y)) for x, y in r["border_links"]],
                    responds_to_traceroute=r["responds_to_traceroute"],
                    default_interface=Ip(r["default_interface"]),
                    answers_from_default=r["answers_from_default"],
                    link_interface={int(k): Ip(v) for k, v in r["link_interface"].items()},
                )
                for r in a["routers"]
            ]
            ases[a["id"]] = AsRecord(
                id=a["id"],
                tier=Tier(a["tier"]),
                prefix=Prefix(a["prefix"]),
                routers=routers,
                blocks_icmp=a["blocks_icmp"],
                blocks_udp=a["blocks_udp"],
                region=a["region"],
            )
        edges = [AsEdge(x, y, Relation(rel)) for x, y, rel in data["as_edges"]]
        params = TopologyParams.from_json(data["params"]) if data.get("params") else None
        return cls(ases, edges, data["seed"], params)

    @classmethod
    def loads(cls, text: str) -> GroundTruthTopology:
        return cls.from_json(json.loads(text))

    @classmethod
    def load(cls, path) -> GroundTruthTopology:
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def as_prefix(asn: AsId) -> Prefix:
    return Prefix((_ADDRESS_BASE + (asn << 16), 16))


def _intra_links(n: int, rng: random.Random, params: TopologyParams) -> list[tuple[int, int]]:
    """Random connected graph on ``n`` local routers with a soft degree cap."""
    cap = params.intra_degree_cap
    degree = [0] * n
    links: set[tuple[int, int]] = set()
    for i in range(1, n):
        open_ = [j for j in range(i) if degree[j] < cap] or list(range(i))
        j = rng.choice(open_)
        links.add((j, i))
        degree[i] += 1
        degree[j] += 1
    extra = int(round(params.intra_extra_link_fraction * n)) if n > 2 else 0
    for _ in range(extra):
        i, j = sorted(rng.sample(range(n), 2))
        if (i, j) in links or degree[i] >= cap or degree[j] >= cap:
            continue
        links.add((i, j))
        degree[i] += 1
        degree[j] += 1
    return sorted(links)


def generate_topology(params: TopologyParams, seed: int) -> GroundTruthTopology:
    params.validate()
    rng = random.Random(seed)
    n_regions = params.regions()

    tiers: dict[AsId, Tier] = {}
    next_id = 1
    for tier, count in ((Tier.CORE, params.n_core), (Tier.MIDDLE, params.n_middle), (Tier.STUB, params.n_stub)):
        for _ in range(count):
            tiers[next_id] = tier
            next_id += 1
    core = [a for a, t in tiers.items() if t is Tier.CORE]
    middle = [a for a, t in tiers.items() if t is Tier.MIDDLE]
    stubs = [a for a, t in tiers.items() if t is Tier.STUB]

    regions: dict[AsId, int | None] = {a: None for a in core}
    for i, a in enumerate(middle):
        regions[a] = i % n_regions
    for a in stubs:
        regions[a] = rng.randrange(n_regions)

    edges: list[AsEdge] = []
    for i, a in enumerate(core):
        for b in core[i + 1:]:
            edges.append(AsEdge(a, b, Relation.PEER_PEER))

    # preferential attachment: weight = customers so far + a tier head start
    n_customers = {a: 0 for a in tiers}
    head_start = {Tier.CORE: params.core_attraction, Tier.MIDDLE: 1.0, Tier.STUB: 0.0}

    def weighted(pool: list[AsId]) -> AsId:
        return rng.choices(pool, weights=[n_customers[p] + head_start[tiers[p]] for p in pool])[0]

    def pick_providers(asn: AsId, pool: list[AsId], regional: list[AsId]) -> list[AsId]:
        if regional and rng.random() < params.regional_provider_fraction:
            first = weighted(regional)
        else:
            first = weighted(pool)
        chosen = [first]
        rest = [p for p in pool if p != first]
        if rest and rng.random() < params.multihome_fraction:
            chosen.append(weighted(rest))
        for p in chosen:
            n_customers[p] += 1
        return chosen

    for i, a in enumerate(middle):
        pool = core + middle[:i]
        regional = [m for m in middle[:i] if regions[m] == regions[a]]
        for p in pick_providers(a, pool, regional):
            edges.append(AsEdge(a, p, Relation.CUSTOMER_PROVIDER))
    for a in stubs:
        pool = core + middle
        regional = [m for m in middle if regions[m] == regions[a]]
        for p in pick_providers(a, pool, regional):
            edges.append(AsEdge(a, p, Relation.CUSTOMER_PROVIDER))

    by_region: dict[int, list[AsId]] = {}
    for a in stubs:
        by_region.setdefault(regions[a], []).append(a)
    for region in sorted(by_region):
        members = by_region[region]
        pairs = [(x, y) for i, x in enumerate(members) for y in members[i + 1:]]
        count = int(round(params.peer_link_fraction * len(pairs)))
        for x, y in sorted(rng.sample(pairs, count)):
            edges.append(AsEdge(x, y, Relation.PEER_PEER))

    # routers, intra links and border links
    local_counts: dict[AsId, int] = {}
    router_ids: dict[AsId, list[int]] = {}
    intra: dict[int, list[int]] = {}
    border: dict[int, list[tuple[AsId, int]]] = {}
    link_order: dict[int, list[int]] = {}
    next_router = 1
    for a, tier in tiers.items():
        lo, hi = params.routers_per_as_range.get(tier, DEFAULT_ROUTERS[tier])
        n = rng.randint(lo, hi)
        local_counts[a] = n
        ids = list(range(next_router, next_router + n))
        next_router += n
        router_ids[a] = ids
        for rid in ids:
            intra[rid] = []
            border[rid] = []
            link_order[rid] = []
        for i, j in _intra_links(n, rng, params):
            ri, rj = ids[i], ids[j]
            intra[ri].append(rj)
            intra[rj].append(ri)
            link_order[ri].append(rj)
            link_order[rj].append(ri)
    for e in sorted(edges, key=lambda e: e.pair()):
        x, y = e.pair()
        rx = rng.choice(router_ids[x])
        ry = rng.choice(router_ids[y])
        border[rx].append((y, ry))
        border[ry].append((x, rx))
        link_order[rx].append(ry)
        link_order[ry].append(rx)

    ases: dict[AsId, AsRecord] = {}
    for a, tier in tiers.items():
        pfx = as_prefix(a)
        base = int(pfx.network_address)
        block = 0
        routers = []
        for rid in router_ids[a]:
            neighbours = link_order[rid]
            link_interface = {}
            interfaces = []
            for k, nb in enumerate(neighbours):
                offset = (block + k // 254) * 256 + (k % 254) + 1
                addr = Ip(base + offset)
                link_interface[nb] = addr
                interfaces.append(addr)
            block += max(1, -(-len(neighbours) // 254))
            if block > 256:
                raise GenerationError(f"AS{a} exhausted its /16")
            routers.append(
                RouterRecord(
                    router_id=rid,
                    asn=a,
                    interfaces=interfaces,
                    intra_links=sorted(intra[rid]),
                    border_links=sorted(border[rid]),
                    responds_to_traceroute=rng.random() >= params.anonymous_router_fraction,
                    default_interface=interfaces[0],
                    answers_from_default=rng.random() < params.default_responder_fraction,
                    link_interface=link_interface,
                )
            )
        blocks_icmp = tier is not Tier.CORE and rng.random() < params.icmp_block_fraction
        blocks_udp = tier is not Tier.CORE and rng.random() < params.udp_block_fraction
        ases[a] = AsRecord(a, tier, pfx, routers, blocks_icmp, blocks_udp, regions[a])

    topo = GroundTruthTopology(ases, edges, seed, params)
    topo.validate()
    return topo


def parse_as_counts(text: str) -> dict[str, int]:
    """Parse ``core=3,middle=10,stub=80``."""
    out = {"core": 0, "middle": 0, "stub": 0}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in out:
            raise GenerationError(f"unknown tier {key!r}")
        out[key] = int(value)
    return out
