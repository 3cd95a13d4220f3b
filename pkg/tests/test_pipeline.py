from __future__ import annotations

import json

import pytest

from dimesim.model import As, edge_key
from dimesim.netsim import Tier, TopologyParams
from dimesim.pipeline import (
    ConfigError, RunConfig, StageError, build_world, infer, measure, read_prefixes, read_whois,
    run_pipeline, scenario_peer_hiding, write_prefixes, write_whois,
)

SMALL = TopologyParams(n_core=3, n_middle=4, n_stub=12, peer_link_fraction=0.3)


def small_config(seed=3, **kw):
    kw = {"days": 1, "traces_per_agent_per_day": 30, **kw}
    return RunConfig(seed=seed, topology=SMALL, **kw)


def test_config_round_trip(tmp_path):
    cfg = small_config(placement="stub:0.5,AS2", min_measurements=3)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg.to_json()), encoding="utf-8")
    assert RunConfig.load(path) == cfg


@pytest.mark.parametrize(
    "patch",
    [{"colour": 1}, {"days": 0}, {"omission_fraction": 1.5}, {"trace_command": "Ping"}, {"start": "soon"}, {"seed": "x"}],
)
def test_bad_configs_rejected(patch):
    data = {**small_config().to_json(), **patch}
    with pytest.raises(ConfigError):
        RunConfig.from_json(data)


def test_seed_is_required():
    data = small_config().to_json()
    del data["seed"]
    with pytest.raises(ConfigError):
        RunConfig.from_json(data)


def test_prefix_and_whois_files_round_trip(tmp_path):
    world = build_world(small_config())
    write_prefixes(tmp_path / "p.txt", world.prefixes)
    write_whois(tmp_path / "w.txt", world.whois)
    assert read_prefixes(tmp_path / "p.txt") == world.prefixes
    assert read_whois(tmp_path / "w.txt") == world.whois


def test_pipeline_writes_manifest(tmp_path):
    m = run_pipeline(small_config(), tmp_path)
    assert m["stages"] == ["simulate", "measure", "infer", "analyze", "compare"]
    for name in ("graphs/as.graph", "graphs/router.graph", "graphs/ip.graph", "graphs/bgp.graph",
                 "report/report.txt", "report/compare.txt", "profiles.json", "store.log"):
        assert name in m["artifacts"]
    on_disk = json.loads((tmp_path / "MANIFEST").read_text())
    assert on_disk == m
    c = m["ingest"]
    assert c["acked"] == c["stored"] == c["parsed"] + c["quarantined"]
    assert "DIMES" in (tmp_path / "report" / "compare.txt").read_text()


def test_pipeline_is_deterministic(tmp_path):
    a = run_pipeline(small_config(seed=5), tmp_path / "a")
    b = run_pipeline(small_config(seed=5), tmp_path / "b")
    assert a == b
    c = run_pipeline(small_config(seed=6), tmp_path / "c")
    assert c["artifacts"]["graphs/as.graph"] != a["artifacts"]["graphs/as.graph"]


def test_stage_failure_names_the_stage(tmp_path):
    cfg = small_config(placement="AS999")
    with pytest.raises(StageError) as info:
        run_pipeline(cfg, tmp_path)
    assert info.value.stage == "measure"
    assert (tmp_path / "topo.file").exists()


def test_core_agents_miss_stub_peerings(tmp_path):
    cfg = small_config(seed=2, alias_survey=False, traces_per_agent_per_day=80)
    world = build_world(cfg)
    topo = world.topo
    stubs = set(topo.tier_members(Tier.STUB))
    stub_peers = {edge_key(As(a), As(b)) for a, b in topo.edge_pairs() if topo.relation(a, b) == "peer" and {a, b} <= stubs}
    assert stub_peers
    m = measure(cfg, world, tmp_path / "s.log", ases=topo.tier_members(Tier.CORE))
    g = infer(m.records, world.resolver(), 1).as_graph
    assert not (set(g.edges) & stub_peers)


def test_peer_hiding_report():
    rep = scenario_peer_hiding(0)
    assert rep.ok
    assert not any(rep.bgp_visible.values())
    assert rep.dimes_stub_a and not rep.dimes_core_only
    assert "seed 0" in rep.format()
