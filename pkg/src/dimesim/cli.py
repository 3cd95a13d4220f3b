"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG) -> None:
        super().__init__(message)
        self.code = code


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _siblings(topo_path: Path, prefixes, whois):
    from .pipeline import read_prefixes, read_whois

    p = Path(prefixes) if prefixes else topo_path.with_name("prefixes.txt")
    w = Path(whois) if whois else topo_path.with_name("whois.txt")
    if not p.exists():
        raise CliError(f"prefix table {p} not found (write it with simulate, or pass --prefixes)")
    return read_prefixes(p), (read_whois(w) if w.exists() else {})


def _load_topo(path):
    from .netsim import GroundTruthTopology

    try:
        return GroundTruthTopology.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot load topology {path}: {exc}") from exc


# -- subcommands


def cmd_simulate(args) -> int:
    from .netsim import TopologyParams, generate_topology, parse_as_counts, prefix_table, whois_directory
    from .pipeline import write_prefixes, write_whois

    params = _load_json(args.params) if args.params else {}
    if args.as_counts:
        counts = parse_as_counts(args.as_counts)
        params.update({f"n_{k}": v for k, v in counts.items()})
    if args.peer_fraction is not None:
        params["peer_link_fraction"] = args.peer_fraction
    topo = generate_topology(TopologyParams.from_json(params), args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    topo.save(out)
    table = prefix_table(topo, args.more_specific, args.omission, seed=args.seed)
    write_prefixes(out.with_name("prefixes.txt"), table.entries)
    write_whois(out.with_name("whois.txt"), whois_directory(topo, table.omitted, args.whois_coverage, seed=args.seed))
    print(f"wrote {out}: {len(topo.ases)} ASes, {len(topo.routers)} routers, {len(topo.all_interfaces())} interfaces")
    return EXIT_OK


def cmd_run(args) -> int:
    from .inference import PrefixDb
    from .pipeline import RunConfig, World, measure

    cfg = RunConfig.load(args.config)
    topo_path = Path(args.topo)
    topo = _load_topo(topo_path)
    prefixes, whois = _siblings(topo_path, args.prefixes, args.whois)
    db = PrefixDb(prefixes)
    omitted = {i for i in topo.all_interfaces() if db.lookup(i) is None}
    store = Path(args.store)
    store.parent.mkdir(parents=True, exist_ok=True)
    if store.exists():
        store.unlink()
    try:
        m = measure(cfg, World(topo, prefixes, whois, omitted), store)
    except Exception as exc:
        raise CliError(f"stage measure failed: {exc}", EXIT_STAGE) from exc
    print(json.dumps({"agents": len(m.agents), "ingest": m.counters}, sort_keys=True))
    return EXIT_OK


def cmd_infer(args) -> int:
    from .coordinator import replay_store
    from .inference import AsResolver, PrefixDb, dump_discovery_log
    from .pipeline import infer

    topo_path = Path(args.topo)
    _load_topo(topo_path)
    prefixes, whois = _siblings(topo_path, args.prefixes, args.whois)
    try:
        records, rejected = replay_store(args.store)
    except OSError as exc:
        raise CliError(f"cannot read store {args.store}: {exc}") from exc
    inf = infer(records, AsResolver(PrefixDb(prefixes), whois), args.min_obs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, g in (("ip", inf.ip_graph), ("router", inf.router_graph), ("as", inf.as_graph)):
        with open(out / f"{name}.graph", "w", encoding="utf-8") as fh:
            g.dump(fh)
    with open(out / "discovery.log", "w", encoding="utf-8") as fh:
        dump_discovery_log(inf.discovery, fh)
    stats = dict(inf.resolution, records=len(records), rejected_lines=len(rejected))
    with open(out / "resolution.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(
        f"ip {len(inf.ip_graph.nodes)}/{len(inf.ip_graph.edges)} router {len(inf.router_graph.nodes)}/"
        f"{len(inf.router_graph.edges)} as {len(inf.as_graph.nodes)}/{len(inf.as_graph.edges)}"
    )
    return EXIT_OK


def _load_graph(path):
    from .model import ObservedGraph

    try:
        with open(path, encoding="utf-8") as fh:
            return ObservedGraph.load(fh)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load graph {path}: {exc}") from exc


def cmd_analyze(args) -> int:
    from .pipeline import write_analysis

    g = _load_graph(args.graph)
    if not g.edges:
        raise CliError(f"{args.graph} has no edges", EXIT_STAGE)
    name = Path(args.graph).stem
    text = write_analysis(name, g, args.csv_dir or Path(args.report).parent / "csv")
    Path(args.report).parent.mkdir(parents=True, exist_ok=True)
    Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    from .analysis import compare, restrict_to

    a = _load_graph(args.a)
    b = _load_graph(args.b)
    na, nb = args.name_a or Path(args.a).stem, args.name_b or Path(args.b).stem
    graphs = {na: a, nb: b}
    if args.restrict_b_to_a:
        graphs[f"{nb}in{na}"] = restrict_to(b, a)
    sys.stdout.write(compare(graphs).format())
    return EXIT_OK


def cmd_scenario(args) -> int:
    from .pipeline import scenario_peer_hiding, signature_survey

    seeds = range(args.seed, args.seed + args.seeds)
    ok = True
    if args.kind == "peer-hiding":
        for s in seeds:
            rep = scenario_peer_hiding(s)
            ok &= rep.ok
            sys.stdout.write(rep.format())
    else:
        style = "as" if args.kind == "as-signature" else "router"
        for row in signature_survey(seeds, style):
            print(row.format())
    return EXIT_OK if ok else EXIT_STAGE


def cmd_pipeline(args) -> int:
    from .pipeline import RunConfig, StageError, run_pipeline

    cfg = RunConfig.load(args.config)
    t0 = time.perf_counter()
    try:
        manifest = run_pipeline(cfg, args.out)
    except StageError as exc:
        raise CliError(str(exc), EXIT_STAGE) from exc
    print(f"pipeline finished in {time.perf_counter() - t0:.1f}s; {len(manifest['artifacts'])} artifacts in {args.out}")
    return EXIT_OK


def _stub_handler(spec: str):
    """``VALUE`` or ``DAY/NIGHT`` (day = local 06:00 to 18:00)."""
    from fractions import Fraction

    def value(text):
        return None if text == "null" else Fraction(text)

    day_text, sep, night_text = spec.partition("/")
    day, night = value(day_text), value(night_text) if sep else None

    def handler(ctx, *args):
        if not sep:
            return day
        hour = (ctx.clock.local() // 3600) % 24
        return day if 6 <= hour < 18 else night

    return handler


def cmd_penny(args) -> int:
    from .penny import (
        CommandRegistry, PennyError, PennySyntaxError, VirtualClock, execute, parse,
    )
    from .penny.clock import format_gmt, parse_clock_start, parse_offset

    try:
        text = Path(args.script).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {args.script}: {exc}") from exc
    try:
        offset = parse_offset(args.local_offset)
        start = parse_clock_start(args.clock_start, offset)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    reg = CommandRegistry()
    for item in args.stub or []:
        name, sep, spec = item.partition("=")
        if not sep or not name:
            raise CliError(f"bad --stub {item!r}; expected NAME=VALUE or NAME=DAY/NIGHT")
        try:
            reg.register(name, None, None, _stub_handler(spec), cost=args.cost)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    try:
        script = parse(text)
    except PennySyntaxError as exc:
        raise CliError(f"{args.script}: {exc}") from exc
    try:
        res = execute(script, reg, VirtualClock(start, offset), seed=args.seed, trace=args.trace)
    except PennyError as exc:
        raise CliError(f"{args.script}: {exc}", EXIT_STAGE) from exc
    if args.trace:
        for line in res.log:
            print(line)
    print(f"value {res.value}")
    print(f"finished {format_gmt(res.finished)} GMT after {res.steps} steps")
    return EXIT_OK


def cmd_fleet(args) -> int:
    from .agent import choose_ases, place_agents

    topo = _load_topo(args.topo)
    try:
        ases = choose_ases(topo, args.agents_in, args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    configs = place_agents(topo, ases, args.seed, agents_per_as=args.per_as)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for c in configs:
        c.save(out / f"{c.agent_id}.json")
    print(f"wrote {len(configs)} agent configs to {out}")
    return EXIT_OK


def cmd_coordinator(args) -> int:
    from .coordinator import Coordinator, load_experiments, make_server
    from .inference import AsResolver, PrefixDb

    topo_path = Path(args.topo)
    _load_topo(topo_path)
    prefixes, whois = _siblings(topo_path, args.prefixes, args.whois)
    coord = Coordinator(args.store, resolver=AsResolver(PrefixDb(prefixes), whois), token_seed=args.seed)
    if args.experiments:
        for spec in load_experiments(_load_json(args.experiments)):
            coord.enqueue(spec)
    server = make_server(coord, args.listen)
    print(f"coordinator listening on {args.listen}", flush=True)
    try:
        if args.serve_seconds is None:
            server.serve_forever()
        else:
            import threading

            t = threading.Thread(target=server.serve_forever, daemon=True)
            t.start()
            t.join(args.serve_seconds)
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown() if args.serve_seconds is not None else None
        server.server_close()
        coord.drain()
        coord.close()
        print(json.dumps(coord.ingest.counters.to_json(), sort_keys=True))
    return EXIT_OK


def cmd_agent(args) -> int:
    from .agent import Agent, AgentConfig
    from .coordinator import SocketTransport

    try:
        cfg = AgentConfig.load(args.config)
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"bad agent config {args.config}: {exc}") from exc
    topo = _load_topo(args.topo)
    agent = Agent(cfg, topo, SocketTransport(args.coordinator))
    done = 0
    for _ in range(args.cycles):
        out = agent.run_cycle()
        done += len(out)
        agent.clock.advance_to(max(agent.clock.now, agent.next_poll_at))
    agent.flush()
    print(f"{cfg.agent_id}: ran {done} scripts, {len(agent.probe_log)} probes, {len(agent.outbox)} records unsent")
    return EXIT_OK if not agent.outbox else EXIT_STAGE


# -- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dimesim", description="Simulated distributed topology measurement.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a ground-truth topology")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--as-counts", help="e.g. core=5,middle=15,stub=80")
    s.add_argument("--peer-fraction", type=float)
    s.add_argument("--params", help="JSON file of topology parameters")
    s.add_argument("--more-specific", type=float, default=0.3)
    s.add_argument("--omission", type=float, default=0.02)
    s.add_argument("--whois-coverage", type=float, default=0.5)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("run", help="deploy a fleet on a topology and measure")
    s.add_argument("--config", required=True)
    s.add_argument("--topo", required=True)
    s.add_argument("--store", required=True)
    s.add_argument("--prefixes")
    s.add_argument("--whois")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("infer", help="build ip/router/as graphs from a store")
    s.add_argument("--store", required=True)
    s.add_argument("--topo", required=True)
    s.add_argument("--min-obs", type=int, default=2)
    s.add_argument("--out", required=True)
    s.add_argument("--prefixes")
    s.add_argument("--whois")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("analyze", help="degree, clustering and k-core report for a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--report", required=True)
    s.add_argument("--csv-dir")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("compare", help="summary rows for two graphs")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--name-a")
    s.add_argument("--name-b")
    s.add_argument("--restrict-b-to-a", action="store_true")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("scenario", help="canned scenarios")
    s.add_argument("kind", choices=["peer-hiding", "as-signature", "router-signature"])
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("pipeline", help="run every stage from one config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("penny", help="run a PENny script against stub commands")
    s.add_argument("script")
    s.add_argument("--clock-start", default="GMT 01/01/05 00:00")
    s.add_argument("--local-offset", default="+00:00")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--stub", action="append", help="NAME=VALUE or NAME=DAY/NIGHT; repeatable")
    s.add_argument("--cost", type=int, default=0, help="virtual seconds each stub call takes")
    s.add_argument("--trace", action="store_true")
    s.set_defaults(func=cmd_penny)

    s = sub.add_parser("fleet", help="write agent configs for a placement")
    s.add_argument("--topo", required=True)
    s.add_argument("--agents-in", required=True, help="e.g. stub:0.5,AS12")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--per-as", type=int, default=1)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_fleet)

    s = sub.add_parser("coordinator", help="serve the coordinator over a socket")
    s.add_argument("--topo", required=True)
    s.add_argument("--store", required=True)
    s.add_argument("--listen", required=True, help="host:port or unix:/path")
    s.add_argument("--experiments", help="JSON list of experiment specs")
    s.add_argument("--seed", type=int, default=0, help="token seed")
    s.add_argument("--prefixes")
    s.add_argument("--whois")
    s.add_argument("--serve-seconds", type=float)
    s.set_defaults(func=cmd_coordinator)

    s = sub.add_parser("agent", help="run an agent against a socket coordinator")
    s.add_argument("--config", required=True)
    s.add_argument("--coordinator", required=True)
    s.add_argument("--topo", required=True)
    s.add_argument("--cycles", type=int, default=1)
    s.set_defaults(func=cmd_agent)
    return p


def main(argv: list[str] | None = None) -> int:
    from .netsim import GenerationError
    from .pipeline import ConfigError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"dimesim: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, GenerationError) as exc:
        print(f"dimesim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
