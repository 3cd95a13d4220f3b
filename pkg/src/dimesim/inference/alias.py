"""Alias resolution: interfaces coupled by a probe/response pair share a router."""

from __future__ import annotations

from typing import Iterable

from ..model import Ip
from ..netsim.probes import PingResult
from ..records import MeasurementRecord


class AliasSets:
    """Disjoint sets over addresses (union by size, path halving)."""

    def __init__(self, items: Iterable[Ip] = ()) -> None:
        self._parent: dict[Ip, Ip] = {}
        self._size: dict[Ip, int] = {}
        for it in items:
            self.add(it)

    def add(self, x: Ip) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._size[x] = 1

    def __contains__(self, x: Ip) -> bool:
        return x in self._parent

    def __len__(self) -> int:
        return len(self._parent)

    def find(self, x: Ip) -> Ip:
        self.add(x)
        parent = self._parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: Ip, b: Ip) -> Ip:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]
        return ra

    def same(self, a: Ip, b: Ip) -> bool:
        return self.find(a) == self.find(b)

    def groups(self) -> list[frozenset[Ip]]:
        out: dict[Ip, set[Ip]] = {}
        for x in self._parent:
            out.setdefault(self.find(x), set()).add(x)
        return sorted((frozenset(g) for g in out.values()), key=min)

    def canonical(self) -> dict[Ip, Ip]:
        """Map every member to the smallest address of its set, which does not
        depend on the order unions were applied in."""
        mapping: dict[Ip, Ip] = {}
        for g in self.groups():
            rep = min(g)
            for x in g:
                mapping[x] = rep
        return mapping


def alias_resolve(records: Iterable[MeasurementRecord | PingResult], seed_items: Iterable[Ip] = ()) -> AliasSets:
    sets = AliasSets(seed_items)
    for rec in records:
        p = rec.payload if isinstance(rec, MeasurementRecord) else rec
        if not isinstance(p, PingResult):
            continue
        sets.add(p.target)
        if p.responder is not None:
            sets.union(p.target, p.responder)
    return sets
