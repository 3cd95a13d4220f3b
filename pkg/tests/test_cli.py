from __future__ import annotations

import json

import pytest

from dimesim.cli import main
from dimesim.pipeline import RunConfig

from test_penny_runtime import DAY_NIGHT_FIXED
from test_penny_syntax import DAY_NIGHT

SMALL = {"n_core": 3, "n_middle": 4, "n_stub": 12, "peer_link_fraction": 0.3}


def write_config(path, **kw):
    data = {"seed": 4, "topology": SMALL, "days": 1, "traces_per_agent_per_day": 30, **kw}
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


@pytest.fixture
def topo_file(tmp_path):
    out = tmp_path / "world" / "topo.file"
    assert main(["simulate", "--seed", "4", "--as-counts", "core=3,middle=4,stub=12", "--peer-fraction", "0.3",
                 "--out", str(out)]) == 0
    return out


def test_simulate_writes_siblings(tmp_path, capsys):
    out = tmp_path / "topo.file"
    assert main(["simulate", "--seed", "4", "--as-counts", "core=3,middle=4,stub=12", "--out", str(out)]) == 0
    assert (tmp_path / "prefixes.txt").exists() and (tmp_path / "whois.txt").exists()
    assert "19 ASes" in capsys.readouterr().out


def test_usage_errors_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--out", str(tmp_path / "t")])  # --seed missing
    assert info.value.code == 2
    assert main(["simulate", "--seed", "1", "--as-counts", "core=1", "--out", str(tmp_path / "t")]) == 2
    assert main(["pipeline", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": 1, "colour": "blue"}))
    assert main(["pipeline", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "unknown config keys" in capsys.readouterr().err


def test_stage_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path / "run.json", placement="AS999")
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "stage measure failed" in capsys.readouterr().err


def test_stage_chain(topo_file, tmp_path, capsys):
    cfg = write_config(tmp_path / "run.json")
    store = tmp_path / "store.log"
    assert main(["run", "--config", str(cfg), "--topo", str(topo_file), "--store", str(store)]) == 0
    counters = json.loads(capsys.readouterr().out)["ingest"]
    assert counters["acked"] == counters["stored"] == counters["parsed"] > 0

    graphs = tmp_path / "graphs"
    assert main(["infer", "--store", str(store), "--topo", str(topo_file), "--out", str(graphs)]) == 0
    assert capsys.readouterr().out.startswith("ip ")
    for name in ("ip.graph", "router.graph", "as.graph", "discovery.log", "resolution.json"):
        assert (graphs / name).exists()

    report = tmp_path / "report" / "as.txt"
    assert main(["analyze", "--graph", str(graphs / "as.graph"), "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert out == report.read_text() and "top_shell" in out
    assert (tmp_path / "report" / "csv" / "as_degree_hist.csv").exists()

    assert main(["compare", "--a", str(graphs / "as.graph"), "--b", str(graphs / "as.graph"), "--name-b", "again"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0].startswith("topology") and rows[1].split("\t")[1:] == rows[2].split("\t")[1:]


def test_analyze_rejects_bad_and_empty_graphs(tmp_path):
    from dimesim.model import ObservedGraph

    g = tmp_path / "bad.graph"
    g.write_text("")
    assert main(["analyze", "--graph", str(g), "--report", str(tmp_path / "r.txt")]) == 2
    g.write_text(ObservedGraph("as").dumps())
    assert main(["analyze", "--graph", str(g), "--report", str(tmp_path / "r.txt")]) == 3


def test_pipeline_command(tmp_path, capsys):
    cfg = write_config(tmp_path / "run.json")
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "pipeline finished" in capsys.readouterr().out
    assert RunConfig.load(cfg).seed == json.loads((tmp_path / "o" / "MANIFEST").read_text())["seed"]


def penny(tmp_path, text, *extra):
    script = tmp_path / "day_night.penny"
    script.write_text(text)
    return main(["penny", str(script), "--clock-start", "GMT 06/04/04 00:00", "--local-offset", "+02:00",
                 "--seed", "1", "--stub", "Ping=20/10", "--cost", "60", *extra])


def test_penny_day_night(tmp_path, capsys):
    assert penny(tmp_path, DAY_NIGHT_FIXED) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "value 10"
    assert out[1].startswith("finished 06/05/04 11:30")


def test_penny_runtime_error_exits_3(tmp_path, capsys):
    assert penny(tmp_path, DAY_NIGHT) == 3
    assert "division by zero" in capsys.readouterr().err


def test_penny_syntax_error_exits_2(tmp_path):
    assert penny(tmp_path, "while (") == 2


def test_penny_bad_stub(tmp_path):
    script = tmp_path / "s.penny"
    script.write_text("return 1")
    assert main(["penny", str(script), "--seed", "1", "--stub", "Ping"]) == 2


def test_scenarios(capsys):
    assert main(["scenario", "peer-hiding", "--seed", "0", "--seeds", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("verdict: as expected") == 2
    assert main(["scenario", "router-signature", "--seed", "0", "--seeds", "20"]) == 0
    assert "OUTSIDE top shell" in capsys.readouterr().out


def test_fleet(topo_file, tmp_path, capsys):
    out = tmp_path / "fleet"
    assert main(["fleet", "--topo", str(topo_file), "--agents-in", "stub:0.5", "--seed", "2", "--per-as", "2",
                 "--out-dir", str(out)]) == 0
    assert len(list(out.glob("*.json"))) == 12
    assert main(["fleet", "--topo", str(topo_file), "--agents-in", "edge:1", "--seed", "2", "--out-dir", str(out)]) == 2


def test_socket_coordinator_and_agent(topo_file, tmp_path, capsys):
    import threading
    import time

    exps = tmp_path / "exps.json"
    exps.write_text(json.dumps([{"id": "p1", "scope": "global", "script": "Ping(10.0.0.1)\nreturn 1"}]))
    sock = tmp_path / "c.sock"
    codes = []
    server = threading.Thread(target=lambda: codes.append(main([
        "coordinator", "--topo", str(topo_file), "--store", str(tmp_path / "c.log"), "--listen", f"unix:{sock}",
        "--experiments", str(exps), "--serve-seconds", "3"])))
    server.start()
    for _ in range(100):
        if sock.exists():
            break
        time.sleep(0.02)
    fleet = tmp_path / "fleet"
    assert main(["fleet", "--topo", str(topo_file), "--agents-in", "stub:0.1", "--seed", "1", "--out-dir", str(fleet)]) == 0
    cfg = sorted(fleet.glob("*.json"))[0]
    assert main(["agent", "--config", str(cfg), "--coordinator", f"unix:{sock}", "--topo", str(topo_file)]) == 0
    server.join()
    assert codes == [0]
    out = capsys.readouterr().out
    assert "ran 1 scripts, 1 probes, 0 records unsent" in out
    assert json.loads(out.strip().splitlines()[-1])["stored"] == 1
