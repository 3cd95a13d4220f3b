"""Agent reliability, mobility and capability profiles."""

from __future__ import annotations

import ipaddress
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from ..model import Ip, Prefix

DAY = 86400
WEEK = 7 * DAY

CAPABILITIES = ("IcmpTraceroute", "UdpTraceroute", "IcmpPing", "UdpPing", "TcpSyn")
# probe command name -> capability it requires
COMMAND_CAPABILITY = {
    "Traceroute": "IcmpTraceroute",
    "UdpTraceroute": "UdpTraceroute",
    "Ping": "IcmpPing",
    "UdpPing": "UdpPing",
}
DAILY_WINDOW, DAILY_MIN = 7, 4
WEEKLY_WINDOW, WEEKLY_MIN = 4, 3
MOBILITY_PREFIX_LEN = 24


class Mobility(str, Enum):
    STATIONARY = "stationary"
    BIHOMED = "bihomed"
    MOBILE = "mobile"


def check_capabilities(caps: Iterable[str]) -> frozenset[str]:
    caps = frozenset(caps)
    unknown = caps - set(CAPABILITIES)
    if unknown:
        raise ValueError(f"unknown capabilities {sorted(unknown)}; known: {list(CAPABILITIES)}")
    return caps


def classify_reliability(active_days: Iterable[int], today: int) -> tuple[bool, bool]:
    """``active_days`` are day indices; the trailing windows end at ``today``
    inclusive. Weeks are the four 7-day blocks ending at ``today``."""
    days = set(active_days)
    recent = sum(1 for d in range(today - DAILY_WINDOW + 1, today + 1) if d in days)
    weeks = 0
    for w in range(WEEKLY_WINDOW):
        hi = today - 7 * w
        if any(d in days for d in range(hi - 6, hi + 1)):
            weeks += 1
    return recent >= DAILY_MIN, weeks >= WEEKLY_MIN


def mobility_prefix(addr: Ip) -> Prefix:
    return ipaddress.IPv4Network((int(addr) >> (32 - MOBILITY_PREFIX_LEN) << (32 - MOBILITY_PREFIX_LEN), MOBILITY_PREFIX_LEN))


def classify_mobility(source_ips: Iterable[Ip]) -> tuple[Mobility, tuple[tuple[Prefix, int], ...]]:
    counts = Counter(mobility_prefix(a) for a in source_ips)
    if not counts:
        raise ValueError("mobility needs at least one record")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    n = len(ranked)
    cls = Mobility.STATIONARY if n == 1 else Mobility.BIHOMED if n == 2 else Mobility.MOBILE
    return cls, tuple(ranked[:2])


@dataclass(frozen=True)
class AgentProfile:
    agent_id: str
    rank: int
    daily_reliable: bool
    weekly_reliable: bool
    mobility: Mobility | None  # None until the agent has reported anything
    top_prefixes: tuple[tuple[Prefix, int], ...]
    capabilities: frozenset[str]

    def to_json(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "rank": self.rank,
            "daily_reliable": self.daily_reliable,
            "weekly_reliable": self.weekly_reliable,
            "mobility": None if self.mobility is None else self.mobility.value,
            "top_prefixes": [[str(p), n] for p, n in self.top_prefixes],
            "capabilities": sorted(self.capabilities),
        }


@dataclass
class ActivityTally:
    """Per-agent counters fed by the parse stage."""

    active_days: set[int] = field(default_factory=set)
    prefix_counts: Counter = field(default_factory=Counter)
    records: int = 0

    def add(self, timestamp: int, source_ip: Ip) -> None:
        self.active_days.add(timestamp // DAY)
        self.prefix_counts[mobility_prefix(source_ip)] += 1
        self.records += 1

    def profile(self, agent_id: str, rank: int, capabilities: frozenset[str], today: int) -> AgentProfile:
        daily, weekly = classify_reliability(self.active_days, today)
        if self.prefix_counts:
            ranked = sorted(self.prefix_counts.items(), key=lambda kv: (-kv[1], kv[0]))
            n = len(ranked)
            mobility = Mobility.STATIONARY if n == 1 else Mobility.BIHOMED if n == 2 else Mobility.MOBILE
            top = tuple(ranked[:2])
        else:
            mobility, top = None, ()
        return AgentProfile(agent_id, rank, daily, weekly, mobility, top, capabilities)
