"""End-to-end runs: simulate, deploy a fleet, measure, infer, analyze.

Everything a run does is fixed by its :class:`RunConfig`; no stage reads
the wall clock or touches a real network. Agents and the coordinator share
one process and the agents are driven one after another on their own
virtual clocks, so two runs of the same config write identical files.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .agent import Agent, AgentConfig, choose_ases, place_agents
from .analysis import (
    alias_rank_curve,
    as_graph_from_pairs,
    avg_neighbor_degree,
    clustering,
    compare,
    core_signature,
    degree_stats,
    edge_observation_histograms,
    k_core,
    restrict_to,
    shell_stats,
    union,
    write_series,
)
from .coordinator import Coordinator, ExperimentSpec, LocalTransport, PerAgent, replay_store
from .inference import (
    AsResolver,
    PrefixDb,
    alias_resolve,
    build_as_graph,
    build_ip_graph,
    build_router_graph,
    discovery_log,
    dump_discovery_log,
    known_subgraph,
)
from .model import As, ObservationStats, ObservedGraph, Prefix, edge_key, ip
from .netsim import (
    GroundTruthTopology,
    Tier,
    TopologyParams,
    bgp_collect,
    generate_topology,
    prefix_table,
    whois_directory,
)
from .penny import parse_clock_start
from .records import MeasurementRecord

DAY = 86400
DEFAULT_START = "GMT 03/01/05 00:00"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    seed: int
    topology: TopologyParams = field(default_factory=lambda: TopologyParams(n_core=5, n_middle=15, n_stub=80, peer_link_fraction=0.3))
    placement: str = "stub:0.5"
    agents_per_as: int = 1
    days: int = 2
    start: str = DEFAULT_START
    traces_per_agent_per_day: int = 80
    trace_command: str = "Traceroute"
    alias_survey: bool = True
    survey_command: str = "UdpPing"
    # "split": every interface pinged once, dealt over the agents;
    # "all": every agent pings every interface
    survey_mode: str = "split"
    rate_limit: int = 10
    batch_size: int = 50
    online_fraction: float = 1.0
    mobile_fraction: float = 0.0
    min_measurements: int = 2
    more_specific_fraction: float = 0.3
    omission_fraction: float = 0.02
    whois_coverage: float = 0.5
    bgp_vantages: str = "core:1.0"
    experiments: list[dict] = field(default_factory=list)

    def validate(self) -> None:
        try:
            self.topology.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.days < 1 or self.agents_per_as < 1 or self.traces_per_agent_per_day < 0:
            raise ConfigError("days and agents_per_as must be >= 1, traces_per_agent_per_day >= 0")
        if self.min_measurements < 1:
            raise ConfigError("min_measurements must be >= 1")
        for name in ("online_fraction", "mobile_fraction", "more_specific_fraction", "omission_fraction", "whois_coverage"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.trace_command not in ("Traceroute", "UdpTraceroute"):
            raise ConfigError(f"trace_command must be Traceroute or UdpTraceroute, got {self.trace_command!r}")
        if self.survey_mode not in ("split", "all"):
            raise ConfigError(f"survey_mode must be split or all, got {self.survey_mode!r}")
        if self.survey_command not in ("Ping", "UdpPing"):
            raise ConfigError(f"survey_command must be Ping or UdpPing, got {self.survey_command!r}")
        try:
            parse_clock_start(self.start)
        except ValueError as exc:
            raise ConfigError(f"bad start time: {exc}") from exc

    def start_time(self) -> int:
        return parse_clock_start(self.start)

    def to_json(self) -> dict[str, Any]:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["topology"] = self.topology.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if "seed" not in data:
            raise ConfigError("config needs a seed")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        kw = dict(data)
        try:
            if "topology" in data:
                kw["topology"] = TopologyParams.from_json(data["topology"])
            cfg = cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not isinstance(cfg.seed, int):
            raise ConfigError("seed must be an integer")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(data)


@dataclass
class World:
    topo: GroundTruthTopology
    prefixes: list[tuple[Prefix, int]]
    whois: dict
    omitted: set

    def resolver(self) -> AsResolver:
        return AsResolver(PrefixDb(self.prefixes), self.whois)


def build_world(cfg: RunConfig) -> World:
    topo = generate_topology(cfg.topology, cfg.seed)
    return world_for(topo, cfg)


def world_for(topo: GroundTruthTopology, cfg: RunConfig) -> World:
    table = prefix_table(topo, cfg.more_specific_fraction, cfg.omission_fraction, seed=cfg.seed)
    whois = whois_directory(topo, table.omitted, cfg.whois_coverage, seed=cfg.seed)
    return World(topo, table.entries, whois, table.omitted)


# -- prefix/whois files next to topo.file


def write_prefixes(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p, asn in entries:
            fh.write(f"{p}\t{asn}\n")


def read_prefixes(path) -> list[tuple[Prefix, int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                p, asn = line.split("\t")
                out.append((Prefix(p), int(asn)))
            except ValueError as exc:
                raise ConfigError(f"{path}:{n}: bad prefix line") from exc
    return out


def write_whois(path, whois: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for addr, asn in sorted(whois.items()):
            fh.write(f"{addr}\t{asn}\n")


def read_whois(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                a, asn = line.split("\t")
                out[ip(a)] = int(asn)
    return out


# -- measurement planning


def trace_script(command: str, targets) -> str:
    return "\n".join(f"{command}({t})" for t in targets) + "\n"


def plan_traces(topo: GroundTruthTopology, agent: AgentConfig, n: int, rng: random.Random) -> list:
    """``n`` destinations: a random foreign AS, then one of its interfaces."""
    home = topo.router_of(agent.home_interface).asn
    others = [a for a in sorted(topo.ases) if a != home] or [home]
    out = []
    for _ in range(n):
        rec = topo.ases[rng.choice(others)]
        router = rng.choice(rec.routers)
        out.append(rng.choice(sorted(router.interfaces)))
    return out


def survey_split(topo: GroundTruthTopology, n_agents: int, rng: random.Random) -> list[list]:
    """Every interface once, dealt round-robin over the agents."""
    ifs = sorted(topo.all_interfaces())
    rng.shuffle(ifs)
    return [ifs[i::n_agents] for i in range(n_agents)]


@dataclass
class Measurement:
    records: list[MeasurementRecord]
    agents: list[Agent]
    coordinator: Coordinator
    counters: dict


def measure(cfg: RunConfig, world: World, store_path, ases: list[int] | None = None) -> Measurement:
    topo = world.topo
    start = cfg.start_time()
    if ases is None:
        ases = choose_ases(topo, cfg.placement, cfg.seed)
    configs = place_agents(
        topo,
        ases,
        cfg.seed,
        agents_per_as=cfg.agents_per_as,
        rate_limit=cfg.rate_limit,
        batch_size=cfg.batch_size,
        mobile_fraction=cfg.mobile_fraction,
        mobility_start=start,
        avoid=world.omitted,
    )
    if not configs:
        raise ConfigError("placement selected no agents")
    coord = Coordinator(
        store_path, resolver=world.resolver(), epoch=(start, start + (cfg.days + 1) * DAY), background=False, token_seed=cfg.seed
    )
    transport = LocalTransport(coord)
    agents = []
    for c in configs:
        a = Agent(c, topo, transport)
        a.clock.advance_to(start)
        a.next_poll_at = start
        agents.append(a)
    rng = random.Random(f"plan:{cfg.seed}")
    for a in agents:
        a.register()
    for extra in cfg.experiments:
        coord.enqueue(ExperimentSpec.from_json(extra))
    if not cfg.alias_survey:
        survey = [[] for _ in agents]
    elif cfg.survey_mode == "all":
        survey = [sorted(topo.all_interfaces()) for _ in agents]
    else:
        survey = survey_split(topo, len(agents), rng)
    for day in range(cfg.days):
        day_start = start + day * DAY
        for i, a in enumerate(agents):
            if day and rng.random() >= cfg.online_fraction:
                continue
            if day == 0 and survey[i]:
                coord.enqueue(
                    ExperimentSpec(f"survey-{a.agent_id}", PerAgent(a.agent_id), trace_script(cfg.survey_command, survey[i]))
                )
            targets = plan_traces(topo, a.config, cfg.traces_per_agent_per_day, rng)
            if targets:
                coord.enqueue(
                    ExperimentSpec(f"trace-d{day}-{a.agent_id}", PerAgent(a.agent_id), trace_script(cfg.trace_command, targets))
                )
            a.clock.advance_to(max(a.clock.now, day_start + i * 60))
            a.next_poll_at = min(a.next_poll_at, a.clock.now)
            while a.run_cycle():
                a.clock.advance_to(max(a.clock.now, a.next_poll_at))
    coord.drain()
    coord.close()
    return Measurement(coord.ingest.snapshot(), agents, coord, coord.ingest.counters.to_json())


# -- inference and analysis


@dataclass
class Inference:
    ip_graph: ObservedGraph
    router_graph: ObservedGraph
    as_graph: ObservedGraph
    alias_sets: Any
    discovery: dict
    resolution: dict


def infer(records: list[MeasurementRecord], resolver: AsResolver, min_measurements: int = 2) -> Inference:
    records = [r if r.source_as is not None else r.with_source_as(resolver(r.source_ip)) for r in records]
    ip_graph = build_ip_graph(records)
    aliases = alias_resolve(records)
    router_graph = build_router_graph(ip_graph, aliases)
    as_graph = build_as_graph(records, resolver, min_measurements)
    for rec in records:
        if rec.is_trace:
            for h in rec.payload.hops:
                if h is not None:
                    resolver(h)
    disc = discovery_log(records, resolver, min_measurements=min_measurements)
    return Inference(ip_graph, router_graph, as_graph, aliases, disc, resolver.stats.to_json())


def bgp_graph(topo: GroundTruthTopology, vantages: list[int]) -> ObservedGraph:
    g = ObservedGraph("as")
    for v in vantages:
        for a, b in sorted(bgp_collect(topo, v)):
            g.merge_edge(As(a), As(b), ObservationStats(1, {v}, 0, 0))
    return g


def analysis_report(name: str, graph, alias_sets=None) -> tuple[str, dict[str, dict]]:
    """Text summary plus the two-column series behind it."""
    ds = degree_stats(graph)
    cl = clustering(graph)
    kc = k_core(graph)
    rows = shell_stats(kc, graph)
    sig = core_signature(kc, graph)
    gamma = "undefined" if ds.gamma is None else f"{ds.gamma:.4f}"
    lines = [
        f"graph {name}",
        f"nodes {ds.n_nodes} edges {ds.n_edges} mean_degree {float(ds.mean_degree):.4f} gamma {gamma}",
        f"clustering {cl.global_cc:.4f}",
        f"top_shell {sig.top_shell} max_degree_node {sig.max_degree_node.token} degree {sig.max_degree}"
        f" shell {sig.max_degree_shell} in_top_shell {str(sig.max_degree_in_top_shell).lower()}",
        "shell\tsize\tmax_degree\tmean_degree",
    ]
    lines += [f"{r.shell}\t{r.size}\t{r.max_degree}\t{r.mean_degree:.4f}" for r in rows]
    series = {
        "degree_hist": dict(ds.histogram),
        "clustering_by_degree": dict(cl.by_degree),
        "knn": avg_neighbor_degree(graph),
        "shell_size": {r.shell: r.size for r in rows},
        "shell_max_degree": {r.shell: r.max_degree for r in rows},
        "clustering_cdf": dict(cl.cdf()),
    }
    if isinstance(graph, ObservedGraph) and graph.edges:
        by_sources, by_count = edge_observation_histograms(graph)
        series["edge_sources_hist"] = by_sources
        series["edge_measurements_hist"] = by_count
    if alias_sets is not None:
        series["alias_rank"] = alias_rank_curve(graph, alias_sets)
    return "\n".join(lines) + "\n", series


SERIES_HEADERS = {
    "degree_hist": ("degree", "count"),
    "clustering_by_degree": ("degree", "clustering"),
    "knn": ("degree", "mean_neighbor_degree"),
    "shell_size": ("shell", "size"),
    "shell_max_degree": ("shell", "max_degree"),
    "clustering_cdf": ("coefficient", "cumulative_fraction"),
    "edge_sources_hist": ("source_ases", "edges"),
    "edge_measurements_hist": ("measurements", "edges"),
    "alias_rank": ("degree", "mean_aliases"),
}


def write_analysis(name: str, graph, out_dir, alias_sets=None) -> str:
    text, series = analysis_report(name, graph, alias_sets)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for key, data in series.items():
        write_series(out / f"{name}_{key}.csv", data, SERIES_HEADERS[key])
    return text


def comparison_text(dimes: ObservedGraph, bgp: ObservedGraph, complete: dict | None = None) -> str:
    graphs: dict[str, Any] = {"DIMES": dimes, "BGP": bgp}
    if complete is not None:
        graphs["Complete"] = complete
    graphs["BGPinDIMES"] = restrict_to(bgp, dimes)
    return compare(graphs).format()


# -- the whole run


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def vantage_ases(topo: GroundTruthTopology, spec: str, seed: int) -> list[int]:
    return sorted(choose_ases(topo, spec, seed))


def _save_graph(graph: ObservedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        graph.dump(fh)


def run_pipeline(cfg: RunConfig, out_dir) -> dict:
    """Run every stage into ``out_dir``; returns the manifest. Partial outputs
    of a failing stage stay on disk."""
    cfg.validate()
    out = Path(out_dir)
    graphs = out / "graphs"
    report = out / "report"
    for d in (out, graphs, report):
        d.mkdir(parents=True, exist_ok=True)
    stages: list[str] = []

    def stage(name):
        stages.append(name)
        return name

    try:
        current = stage("simulate")
        world = build_world(cfg)
        world.topo.save(out / "topo.file")
        write_prefixes(out / "prefixes.txt", world.prefixes)
        write_whois(out / "whois.txt", world.whois)

        current = stage("measure")
        store = out / "store.log"
        if store.exists():
            store.unlink()
        quarantine = Path(str(store) + ".quarantine")
        if quarantine.exists():
            quarantine.unlink()
        m = measure(cfg, world, store)
        with open(out / "profiles.json", "w", encoding="utf-8") as fh:
            json.dump([p.to_json() for p in m.coordinator.profiles()], fh, indent=1, sort_keys=True)
            fh.write("\n")

        current = stage("infer")
        records, _ = replay_store(store)
        inf = infer(records, world.resolver(), cfg.min_measurements)
        _save_graph(inf.ip_graph, graphs / "ip.graph")
        _save_graph(inf.router_graph, graphs / "router.graph")
        _save_graph(inf.as_graph, graphs / "as.graph")
        bgp = bgp_graph(world.topo, vantage_ases(world.topo, cfg.bgp_vantages, cfg.seed))
        _save_graph(bgp, graphs / "bgp.graph")
        with open(graphs / "discovery.log", "w", encoding="utf-8") as fh:
            dump_discovery_log(inf.discovery, fh)
        with open(graphs / "resolution.json", "w", encoding="utf-8") as fh:
            json.dump(inf.resolution, fh, indent=1, sort_keys=True)
            fh.write("\n")

        current = stage("analyze")
        parts = []
        if inf.as_graph.edges:
            parts.append(write_analysis("as", inf.as_graph, report / "csv"))
        if inf.router_graph.edges:
            parts.append(write_analysis("router", inf.router_graph, report / "csv", inf.alias_sets))
        known_ip = known_subgraph(inf.ip_graph)
        parts.append(
            f"ip_known nodes {len(known_ip.nodes)} edges {len(known_ip.edges)}; "
            f"router nodes {len(inf.router_graph.nodes)} edges {len(inf.router_graph.edges)}\n"
        )
        (report / "report.txt").write_text("\n".join(parts), encoding="utf-8")

        current = stage("compare")
        complete = union(as_graph_from_pairs(world.topo.edge_pairs()))
        if inf.as_graph.edges and bgp.edges:
            (report / "compare.txt").write_text(comparison_text(inf.as_graph, bgp, complete), encoding="utf-8")
        else:
            (report / "compare.txt").write_text("not enough edges to compare\n", encoding="utf-8")
    except ConfigError:
        raise
    except Exception as exc:
        raise StageError(current, exc) from exc

    artifacts = sorted(
        str(p.relative_to(out)) for p in out.rglob("*") if p.is_file() and p.name != "MANIFEST"
    )
    manifest = {
        "version": __version__,
        "seed": cfg.seed,
        "config_sha256": hashlib.sha256(json.dumps(cfg.to_json(), sort_keys=True).encode()).hexdigest(),
        "stages": stages,
        "ingest": m.counters,
        "artifacts": {a: sha256_file(out / a) for a in artifacts},
    }
    with open(out / "MANIFEST", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


# -- the two-local-ISPs scenario


def peer_hiding_fixture(seed: int) -> GroundTruthTopology:
    """Three core ASes, two stubs in one region joined by a peer link, nothing
    blocked and every router answering."""
    params = TopologyParams(
        n_core=3,
        n_middle=0,
        n_stub=2,
        peer_link_fraction=1.0,
        n_regions=1,
        anonymous_router_fraction=0.0,
        icmp_block_fraction=0.0,
        udp_block_fraction=0.0,
    )
    return generate_topology(params, seed)


@dataclass
class ScenarioReport:
    seed: int
    peer_edge: tuple[int, int]
    bgp_visible: dict[int, bool]  # per core vantage
    dimes_core_only: bool
    dimes_stub_a: bool
    dimes_both_stubs_sources: int

    @property
    def ok(self) -> bool:
        return (
            not any(self.bgp_visible.values())
            and not self.dimes_core_only
            and self.dimes_stub_a
            and self.dimes_both_stubs_sources == 2
        )

    def format(self) -> str:
        a, b = self.peer_edge
        lines = [f"seed {self.seed}: peer edge AS{a}-AS{b}"]
        for v, seen in sorted(self.bgp_visible.items()):
            lines.append(f"  BGP from core AS{v}: {'visible' if seen else 'hidden'}")
        lines.append(f"  DIMES, agents in core only: {'visible' if self.dimes_core_only else 'hidden'}")
        lines.append(f"  DIMES, agent in stub AS{a}: {'visible' if self.dimes_stub_a else 'hidden'}")
        lines.append(f"  DIMES, agents in both stubs: seen from {self.dimes_both_stubs_sources} source ASes")
        lines.append(f"  verdict: {'as expected' if self.ok else 'UNEXPECTED'}")
        return "\n".join(lines) + "\n"


def _scenario_records(topo: GroundTruthTopology, agent_ases: list[int], seed: int) -> list[MeasurementRecord]:
    """Each agent traces every interface of every other AS twice."""
    from .netsim import traceroute

    records = []
    n = 0
    for asn in agent_ases:
        src = topo.ases[asn].routers[0].default_interface
        for other in sorted(topo.ases):
            if other == asn:
                continue
            for r in topo.ases[other].routers:
                for dst in sorted(r.interfaces):
                    for _ in range(2):
                        n += 1
                        records.append(
                            MeasurementRecord(f"s{seed}-{n:06d}", f"AS{asn}", 1, src, n, traceroute(topo, src, dst), "", asn)
                        )
    return records


def scenario_peer_hiding(seed: int) -> ScenarioReport:
    topo = peer_hiding_fixture(seed)
    stubs = set(topo.tier_members(Tier.STUB))
    peers = sorted(e for e in topo.edge_pairs() if topo.relation(*e) == "peer" and set(e) <= stubs)
    if len(peers) != 1:
        raise RuntimeError(f"fixture has {len(peers)} stub peer links, expected 1")
    a, b = peers[0]
    table = prefix_table(topo)
    resolver = AsResolver(PrefixDb(table.entries))
    cores = topo.tier_members(Tier.CORE)
    bgp = {v: (a, b) in bgp_collect(topo, v) or (b, a) in bgp_collect(topo, v) for v in cores}

    def seen(agent_ases):
        g = build_as_graph(_scenario_records(topo, agent_ases, seed), resolver, 2)
        return g.edges.get(edge_key(As(a), As(b)))

    core_only = seen(cores)
    stub_a = seen([a])
    both = seen([a, b])
    return ScenarioReport(
        seed,
        (a, b),
        bgp,
        core_only is not None,
        stub_a is not None,
        0 if both is None else len(both.source_ases),
    )


# -- k-core signatures


def as_style_fixture(seed: int) -> GroundTruthTopology:
    """A core clique with stubs hanging off it and a little stub peering."""
    return generate_topology(TopologyParams(n_core=6, n_middle=0, n_stub=120, peer_link_fraction=0.05), seed)


def router_style_fixture(seed: int) -> GroundTruthTopology:
    return generate_topology(TopologyParams(n_core=5, n_middle=15, n_stub=80, peer_link_fraction=0.3), seed)


@dataclass(frozen=True)
class SignatureRow:
    seed: int
    style: str
    top_shell: int
    max_degree_node: str
    max_degree: int
    max_degree_shell: int
    in_top_shell: bool
    dominance: float | None

    def format(self) -> str:
        flag = "in top shell" if self.in_top_shell else "OUTSIDE top shell"
        dom = "n/a" if self.dominance is None else f"{self.dominance:.2f}"
        return (
            f"{self.style} seed {self.seed}: max-degree node {self.max_degree_node} (degree {self.max_degree})"
            f" in shell {self.max_degree_shell} of {self.top_shell}, {flag}; dominance {dom}"
        )


def signature_survey(seeds, style: str) -> list[SignatureRow]:
    """Where the highest-degree node sits on AS-style or router-style
    ground-truth graphs."""
    from .model import graph_from_edges

    rows = []
    for seed in seeds:
        if style == "as":
            g = as_graph_from_pairs(as_style_fixture(seed).edge_pairs())
        elif style == "router":
            g = graph_from_edges(router_style_fixture(seed).router_edges())
        else:
            raise ValueError(f"style must be as or router, got {style!r}")
        kc = k_core(g)
        sig = core_signature(kc, g)
        node = sig.max_degree_node
        rows.append(
            SignatureRow(
                seed, style, sig.top_shell, getattr(node, "token", str(node)), sig.max_degree,
                sig.max_degree_shell, sig.max_degree_in_top_shell, sig.dominance,
            )
        )
    return rows
