from __future__ import annotations

import ipaddress
import random

import pytest
from hypothesis import given, strategies as st

from dimesim.inference import (
    AliasSets, AsResolver, PrefixDb, VantageAblation, alias_resolve, as_sequence, build_as_graph,
    build_ip_graph, build_router_graph, discovery_log, hop_nodes, known_subgraph, resolve_as,
)
from dimesim.model import Anonymous, As, Known, Router, edge_key, filter_edges
from dimesim.netsim import TopologyParams
from dimesim.netsim.probes import PingResult, TraceResult
from dimesim.pipeline import RunConfig, build_world, infer, measure
from dimesim.records import MeasurementRecord

IP = ipaddress.IPv4Address
NET = ipaddress.IPv4Network
A, B, C, D = (IP(f"10.0.0.{i}") for i in (1, 2, 3, 4))


def trace(hops, i=0, src="10.0.0.1", ts=0, rank=1, src_as=1, agent="a"):
    s = IP(src)
    hops = tuple(None if h is None else IP(h) if isinstance(h, str) else h for h in hops)
    return MeasurementRecord(f"m{i}", agent, rank, s, ts, TraceResult(s, IP("10.9.9.9"), hops, "icmp", True), "", src_as)


def pingrec(target, responder, i=0):
    return MeasurementRecord(f"p{i}", "a", 1, A, 0, PingResult(A, target, responder, "icmp", 1.0))


def linear_lpm(entries, addr):
    best = None
    for p, asn in entries:
        if addr in p and (best is None or p.prefixlen >= best[0].prefixlen):
            best = (p, asn)
    return None if best is None else best[1]


# -- longest prefix match

def test_lpm_examples():
    db = PrefixDb([(NET("10.0.0.0/8"), 1), (NET("10.1.0.0/16"), 2)])
    assert db.lookup(IP("10.1.2.3")) == 2
    assert db.lookup(IP("10.2.0.1")) == 1
    assert db.lookup(IP("11.0.0.1")) is None
    assert resolve_as(IP("11.0.0.1"), db, {IP("11.0.0.1"): 9}) == 9
    # whois only answers on a miss
    assert resolve_as(IP("10.1.2.3"), db, {IP("10.1.2.3"): 9}) == 2
    assert db.lookup_with_length(IP("10.1.2.3")) == (2, 16)


def test_default_route_and_replacement():
    db = PrefixDb([(NET("0.0.0.0/0"), 7), (NET("10.0.0.0/8"), 1), (NET("10.0.0.0/8"), 3)])
    assert len(db) == 2
    assert db.lookup(IP("200.0.0.1")) == 7
    assert db.lookup(IP("10.0.0.1")) == 3


def test_trie_matches_linear_scan():
    rng = random.Random(1)
    entries = []
    for i in range(300):
        length = rng.choice([8, 12, 16, 20, 24, 28, 32])
        base = rng.randrange(2**32) >> (32 - length) << (32 - length)
        entries.append((NET((base, length)), i))
    # deliberate /8-vs-/24 overlaps
    for i in range(50):
        a = rng.randrange(1, 224)
        entries.append((NET((a << 24, 8)), 1000 + i))
        entries.append((NET(((a << 24) | (rng.randrange(2**16) << 8), 24)), 2000 + i))
    # identical prefixes: last one wins in both implementations
    dedup = {}
    for p, asn in entries:
        dedup[p] = asn
    db = PrefixDb(entries)
    table = list(dedup.items())
    for _ in range(10_000):
        if rng.random() < 0.5:
            p = rng.choice(table)[0]
            addr = IP(int(p.network_address) + rng.randrange(p.num_addresses))
        else:
            addr = IP(rng.randrange(2**32))
        assert db.lookup(addr) == linear_lpm(table, addr)


def test_resolver_counts_distinct_addresses():
    db = PrefixDb([(NET("10.0.0.0/8"), 1)])
    r = AsResolver(db, {IP("11.0.0.1"): 2})
    for addr in ("10.0.0.1", "10.0.0.1", "11.0.0.1", "12.0.0.1"):
        r(IP(addr))
    assert (r.stats.prefix_hits, r.stats.whois_hits, r.stats.unresolved) == (1, 1, 1)
    assert r.stats.to_json()["lpm_miss_rate"] == pytest.approx(2 / 3)


# -- IP graph

def test_hop_nodes_anonymous_triplets():
    assert hop_nodes([A, B, C]) == [Known(A), Known(B), Known(C)]
    assert hop_nodes([None, A, None, None, C, None]) == [Known(A), Anonymous(A, C, 1), Anonymous(A, C, 2), Known(C)]
    assert hop_nodes([None, None]) == []


def test_ip_graph_edges_and_anonymous_reuse():
    g = build_ip_graph([trace([A, B, C])])
    assert len(g) == 2
    assert g.has_edge(Known(A), Known(B)) and g.has_edge(Known(B), Known(C))
    g = build_ip_graph([trace([A, None, C], i=1), trace([A, None, C], i=2, agent="b", rank=2, src_as=5)])
    anon = Anonymous(A, C, 1)
    assert g.nodes == {Known(A), anon, Known(C)}
    st_ = g.stats(Known(A), anon)
    assert st_.measurement_count == 2 and st_.source_ases == {1, 5}


def test_one_count_per_measurement_and_pair():
    g = build_ip_graph([trace([A, B, A, B])])
    assert g.stats(Known(A), Known(B)).measurement_count == 1


def test_known_edges_match_rescan():
    rng = random.Random(3)
    pool = [IP(f"10.0.{i // 250}.{i % 250 + 1}") for i in range(60)]
    records = []
    for i in range(500):
        hops = [rng.choice(pool) if rng.random() > 0.15 else None for _ in range(rng.randint(2, 9))]
        records.append(trace(hops, i=i))
    g = known_subgraph(build_ip_graph(records))
    brute = set()
    for r in records:
        nodes = hop_nodes(r.payload.hops)
        for x, y in zip(nodes, nodes[1:]):
            if isinstance(x, Known) and isinstance(y, Known) and x != y:
                brute.add(frozenset((x, y)))
    assert {frozenset(e) for e in g.edges} == brute


# -- alias resolution and router graph

def test_alias_examples():
    a2 = IP("10.0.1.1")
    s = alias_resolve([pingrec(A, a2)])
    assert s.same(A, a2)
    s = alias_resolve([pingrec(A, a2, 0), pingrec(B, a2, 1), pingrec(C, None, 2)])
    assert s.same(A, B) and not s.same(A, C)
    assert s.canonical()[a2] == A


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), max_size=40), st.randoms())
def test_union_order_does_not_matter(pairs, rnd):
    a = AliasSets()
    b = AliasSets()
    for x, y in pairs:
        a.union(IP(x), IP(y))
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    for x, y in shuffled:
        b.union(IP(y), IP(x))
    assert a.groups() == b.groups() and a.canonical() == b.canonical()


def test_router_graph_merges_aliases():
    a2 = IP("10.0.1.1")
    ipg = build_ip_graph([trace([A, B], i=1), trace([a2, B], i=2), trace([A, a2], i=3)])
    rg = build_router_graph(ipg, alias_resolve([pingrec(A, a2)]))
    assert len(rg) == 1
    assert rg.stats(Router(str(A)), Router(str(B))).measurement_count == 2
    plain = build_router_graph(ipg, AliasSets())
    assert len(plain) == len(known_subgraph(ipg))


# -- AS graph

def resolver_by_third_octet(addr):
    return None if addr.packed[2] == 0 else addr.packed[2]


def test_as_sequence_collapse_and_break():
    res = resolver_by_third_octet
    r = trace(["10.0.1.1", "10.0.1.2", "10.0.2.1", "10.0.2.2", "10.0.3.1"], src="10.0.1.9", src_as=None)
    assert as_sequence(r, res) == [1, 2, 3]
    # a silent hop and an unresolved hop both break adjacency
    r = trace(["10.0.1.1", None, "10.0.2.1", "10.0.0.7", "10.0.3.1"], src="10.0.1.9", src_as=None)
    assert as_sequence(r, res) == [1, None, 2, None, 3]
    g = build_as_graph([r, trace(r.payload.hops, i=1, src_as=1)], res, min_measurements=1)
    assert len(g) == 0
    assert as_sequence(r, res, unresolved="skip") == [1, 2, 3]
    with pytest.raises(ValueError):
        as_sequence(r, res, unresolved="nope")


def test_min_two_filter():
    res = resolver_by_third_octet
    hops = ["10.0.1.1", "10.0.2.1"]
    once = [trace(hops, i=0)]
    assert len(build_as_graph(once, res)) == 0
    twice = once + [trace(hops, i=1)]
    assert build_as_graph(twice, res).has_edge(As(1), As(2))


@given(st.lists(st.lists(st.integers(1, 6), min_size=2, max_size=6), max_size=30))
def test_filter_monotonicity(paths):
    res = resolver_by_third_octet
    records = [trace([f"10.0.{a}.1" for a in p], i=i, src=f"10.0.{p[0]}.9") for i, p in enumerate(paths)]
    g = [set(build_as_graph(records, res, m).edges) for m in (1, 2, 3)]
    assert g[2] <= g[1] <= g[0]
    full = build_as_graph(records, res, 1)
    assert set(filter_edges(full, 2).edges) == g[1]


def test_discovery_first_wins():
    res = resolver_by_third_octet
    hops = ["10.0.1.1", "10.0.2.1"]
    day = 86400
    records = [trace(hops, i=1, ts=5 * day, rank=2), trace(hops, i=0, ts=3 * day, rank=38), trace(["10.0.4.1"], i=9)]
    log = discovery_log(records, res, epoch_start=0)
    e = log[(1, 2)]
    assert (e.first_day, e.agent_rank, e.measurement_count) == (3, 38, 2)


def test_vantage_ablation_rules():
    res = resolver_by_third_octet
    records = []
    for s in range(1, 6):
        for j in range(3):
            records.append(trace([f"10.0.{s}.1", f"10.0.{s + 1 + j}.1"], i=s * 10 + j, src_as=s))
            records.append(trace([f"10.0.{s}.1", f"10.0.{s + 1 + j}.1"], i=100 + s * 10 + j, src_as=s))
    va = VantageAblation(records, res, 2)
    with pytest.raises(ValueError):
        va.run([0], 3, 0)
    with pytest.raises(ValueError):
        va.run([6], 3, 0)
    out = va.run([1, 2, 3, 4, 5], 10, 0)
    for t in range(10):
        counts = [r.counts[t] for r in out]
        assert counts == sorted(counts)
    assert out[-1].mean == len(build_as_graph(records, res, 2))


# -- seeded measurement runs against ground truth

@pytest.fixture(scope="module")
def survey_run(tmp_path_factory):
    params = TopologyParams(
        n_core=3, n_middle=5, n_stub=20, peer_link_fraction=0.3,
        anonymous_router_fraction=0.0, icmp_block_fraction=0.0, udp_block_fraction=0.0,
    )
    cfg = RunConfig(seed=2, topology=params, placement="stub:0.2", days=1, traces_per_agent_per_day=60,
                    survey_mode="all", omission_fraction=0.0)
    world = build_world(cfg)
    m = measure(cfg, world, tmp_path_factory.mktemp("run") / "store.log")
    return world, m, infer(m.records, world.resolver(), 2)


def test_alias_partition_equals_ground_truth(survey_run):
    world, _, inf = survey_run
    truth = sorted((frozenset(r.interfaces) for r in world.topo.routers.values()), key=min)
    assert inf.alias_sets.groups() == truth


def test_router_graph_against_ground_truth(survey_run):
    world, _, inf = survey_run
    known = known_subgraph(inf.ip_graph)
    assert len(inf.router_graph.nodes) <= len(known.nodes)
    assert len(inf.router_graph) <= len(known)
    # every inferred router edge is a real link, and every traversed link is found
    topo = world.topo
    owner = {str(min(r.interfaces)): r.router_id for r in topo.routers.values()}
    inferred = {tuple(sorted((owner[a.router_id], owner[b.router_id]))) for a, b in inf.router_graph.edges}
    traversed = {
        tuple(sorted((topo.router_of(a.ip).router_id, topo.router_of(b.ip).router_id))) for a, b in known.edges
    }
    traversed = {e for e in traversed if e[0] != e[1]}
    assert inferred == traversed
    assert inferred <= topo.router_edges()


def test_traces_start_in_source_as(survey_run):
    world, m, _ = survey_run
    for rec in m.records:
        if rec.is_trace:
            seq = as_sequence(rec, world.topo.as_of_ip)
            assert seq[0] == rec.source_as


def test_min_measurements_applied_in_run(survey_run):
    world, m, inf = survey_run
    loose = build_as_graph(m.records, world.resolver(), 1)
    assert set(inf.as_graph.edges) <= set(loose.edges)
    assert all(st_.measurement_count >= 2 for st_ in inf.as_graph.edges.values())
    assert set(inf.as_graph.edges) <= {edge_key(As(a), As(b)) for a, b in world.topo.edge_pairs()}
