"""Seeded agent placement."""

from __future__ import annotations

import random
from typing import Iterable

from ..model import AsId
from ..netsim.topology import GroundTruthTopology, Tier
from .config import ALL_CAPABILITIES, AgentConfig


def parse_placement(text: str) -> list[tuple[str, float] | AsId]:
    """``"stub:0.5,middle:0.2"`` (fraction of a tier) and/or ``"AS12,AS40"``
    (explicit ASes)."""
    items: list[tuple[str, float] | AsId] = []
    tiers = {t.value for t in Tier}
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if part.upper().startswith("AS") and part[2:].isdigit():
            items.append(int(part[2:]))
            continue
        tier, sep, frac = part.partition(":")
        if not sep or tier not in tiers:
            raise ValueError(f"bad placement item {part!r}; expected tier:fraction or AS<n>")
        f = float(frac)
        if not 0 < f <= 1:
            raise ValueError(f"placement fraction must be in (0, 1], got {f}")
        items.append((tier, f))
    if not items:
        raise ValueError("empty placement")
    return items


def choose_ases(topo: GroundTruthTopology, placement: str | Iterable, seed: int) -> list[AsId]:
    items = parse_placement(placement) if isinstance(placement, str) else list(placement)
    rng = random.Random(f"placement:{seed}")
    chosen: list[AsId] = []
    for item in items:
        if isinstance(item, tuple):
            tier, frac = item
            members = topo.tier_members(Tier(tier))
            k = max(1, round(frac * len(members))) if members else 0
            chosen.extend(sorted(rng.sample(members, k)))
        else:
            if item not in topo.ases:
                raise ValueError(f"AS{item} is not in the topology")
            chosen.append(item)
    seen: set[AsId] = set()
    return [a for a in chosen if not (a in seen or seen.add(a))]


def place_agents(
    topo: GroundTruthTopology,
    ases: Iterable[AsId],
    seed: int,
    agents_per_as: int = 1,
    rate_limit: int = 10,
    batch_size: int = 50,
    poll_budget: int = 8,
    capabilities: frozenset[str] = ALL_CAPABILITIES,
    mobile_fraction: float = 0.0,
    mobility_start: int = 0,
    mobility_period: int = 86400,
    avoid: Iterable = (),
) -> list[AgentConfig]:
    """One config per agent, home interface drawn from the AS's routers.
    A ``mobile_fraction`` of agents alternate daily between home and an
    interface in another AS. Interfaces in ``avoid`` (say, unannounced
    ones) are not used as agent homes while an alternative exists."""
    rng = random.Random(f"agents:{seed}")
    avoid = set(avoid)

    def host(asn: AsId):
        routers = topo.ases[asn].routers
        if not avoid:
            return rng.choice(routers).default_interface
        usable = [i for r in routers for i in r.interfaces if i not in avoid]
        return rng.choice(usable) if usable else rng.choice(routers).default_interface

    configs = []
    all_ases = sorted(topo.ases)
    n = 0
    for asn in ases:
        for _ in range(agents_per_as):
            n += 1
            home = host(asn)
            mobility: tuple = ()
            if mobile_fraction and rng.random() < mobile_fraction and len(all_ases) > 1:
                other = rng.choice([a for a in all_ases if a != asn])
                away = host(other)
                mobility = tuple(
                    (mobility_start + d * mobility_period, away if d % 2 else home) for d in range(1, 60)
                )
            configs.append(
                AgentConfig(
                    agent_id=f"agent{n:04d}",
                    home_interface=home,
                    capabilities=capabilities,
                    rate_limit=rate_limit,
                    batch_size=batch_size,
                    poll_budget=poll_budget,
                    mobility=mobility,
                    seed=seed,
                )
            )
    return configs
