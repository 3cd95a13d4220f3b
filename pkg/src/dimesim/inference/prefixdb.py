"""Longest-prefix matching of addresses to ASes, with a whois-style fallback."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..model import AsId, Ip, Prefix


class _Node:
    __slots__ = ("children", "value")

    def __init__(self) -> None:
        self.children: list[_Node | None] = [None, None]
        self.value: AsId | None = None


class PrefixDb:
    """Binary trie over prefix bits. A later insert of an identical prefix
    replaces the earlier value."""

    def __init__(self, entries: Iterable[tuple[Prefix, AsId]] = ()) -> None:
        self._root = _Node()
        self._size = 0
        for pfx, asn in entries:
            self.insert(pfx, asn)

    def __len__(self) -> int:
        return self._size

    def insert(self, pfx: Prefix, asn: AsId) -> None:
        bits = int(pfx.network_address)
        node = self._root
        for depth in range(pfx.prefixlen):
            b = (bits >> (31 - depth)) & 1
            child = node.children[b]
            if child is None:
                child = node.children[b] = _Node()
            node = child
        if node.value is None:
            self._size += 1
        node.value = asn

    def lookup(self, addr: Ip) -> AsId | None:
        return self.lookup_with_length(addr)[0]

    def lookup_with_length(self, addr: Ip) -> tuple[AsId | None, int | None]:
        bits = int(addr)
        node = self._root
        best: AsId | None = node.value
        best_len: int | None = 0 if node.value is not None else None
        for depth in range(32):
            node = node.children[(bits >> (31 - depth)) & 1]
            if node is None:
                break
            if node.value is not None:
                best, best_len = node.value, depth + 1
        return best, best_len


@dataclass
class ResolutionStats:
    prefix_hits: int = 0
    whois_hits: int = 0
    unresolved: int = 0
    unresolved_ips: set[Ip] = field(default_factory=set)

    @property
    def total(self) -> int:
        return self.prefix_hits + self.whois_hits + self.unresolved

    def to_json(self) -> dict:
        total = self.total or 1
        return {
            "distinct_ips": self.total,
            "prefix_hits": self.prefix_hits,
            "whois_hits": self.whois_hits,
            "unresolved": self.unresolved,
            "lpm_miss_rate": (self.whois_hits + self.unresolved) / total,
            "total_miss_rate": self.unresolved / total,
        }


def resolve_as(addr: Ip, prefix_db: PrefixDb, whois: Mapping[Ip, AsId] | None = None) -> AsId | None:
    """Longest match first, exact whois entry on a miss, None when both fail."""
    asn = prefix_db.lookup(addr)
    if asn is not None:
        return asn
    if whois:
        return whois.get(addr)
    return None


class AsResolver:
    """Caching two-tier resolver that tallies which tier answered, once per
    distinct address."""

    def __init__(self, prefix_db: PrefixDb, whois: Mapping[Ip, AsId] | None = None) -> None:
        self.prefix_db = prefix_db
        self.whois = dict(whois or {})
        self.stats = ResolutionStats()
        self._cache: dict[Ip, AsId | None] = {}

    def __call__(self, addr: Ip) -> AsId | None:
        try:
            return self._cache[addr]
        except KeyError:
            pass
        asn = self.prefix_db.lookup(addr)
        if asn is not None:
            self.stats.prefix_hits += 1
        else:
            asn = self.whois.get(addr)
            if asn is not None:
                self.stats.whois_hits += 1
            else:
                self.stats.unresolved += 1
                self.stats.unresolved_ips.add(addr)
        self._cache[addr] = asn
        return asn
