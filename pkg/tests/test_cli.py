import json

from cleb.cli import main
from cleb.graph import dump_graph_json
from cleb.instances import random_symmetric_instance


def run(argv):
    return main(argv)


def test_msa_prints_edges(capsys, tmp_path):
    out = tmp_path / "msa.csv"
    code = run(["msa", "--graph", "fixture:sandwich_triangle", "--out", str(out)])
    assert code == 0
    body = out.read_text().splitlines()
    assert body[0] == "edge"
    assert len(body) == 4  # header plus one edge per non-boundary vertex


def test_msa_json_format(capsys):
    code = run(["msa", "--graph", "fixture:sandwich_bounce", "--format", "json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"edges", "total_weight"}


def test_msa_with_sampled_weights(capsys):
    code = run(["msa", "--graph", "fixture:distribution_gap",
                "--weights", "exp1", "--seed", "5"])
    assert code == 0


def test_cleb_walk_writes_jsonl(tmp_path, capsys):
    out = tmp_path / "walk.jsonl"
    code = run(["cleb-walk", "--graph", "fixture:sandwich_nested",
                "--start", "1", "--out", str(out)])
    assert code == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert rows[0]["event"] == "expose"
    assert any(r["event"] == "contract" for r in rows)


def test_lcrw_trace(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code = run(["lcrw", "--graph", "fixture:symmetric_demo", "--start", "1",
                "--seed", "4", "--out", str(out)])
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "step,event,path_len,cycle_len"


def test_lcrw_grid_trace(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code = run(["lcrw-grid", "--d", "2", "--side", "15", "--seed", "2",
                "--step-cap", "500", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "step,event,path_len,cycle_len,x,y"
    assert len(lines) > 1


def test_lcrw_grid_requires_out(capsys):
    assert run(["lcrw-grid", "--side", "9", "--seed", "1"]) == 2


def test_wilson_sandwich_report(tmp_path, capsys):
    out = tmp_path / "sw.csv"
    code = run(["wilson-sandwich", "--graph", "fixture:sandwich_bounce",
                "--start", "1", "--betas", "2,20", "--trials", "50",
                "--seed", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "beta,trials,frequency,stderr,capped"
    assert len(lines) == 3


def test_invasion_check_pass_and_config_error(capsys, tmp_path):
    assert run(["invasion-check", "--graph", "fixture:symmetric_demo",
                "--start", "1"]) == 0
    assert run(["invasion-check", "--graph", "fixture:sandwich_triangle",
                "--start", "1"]) == 2


def test_dist_compare_target(capsys, tmp_path):
    out = tmp_path / "dist.csv"
    code = run(["dist-compare", "--graph", "fixture:distribution_gap",
                "--models", "exp1,unif01", "--samples", "20000", "--seed", "7",
                "--target", "0,1,2", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "exp1" in printed and "unif01" in printed


def test_dist_compare_byte_identical(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert run(["dist-compare", "--graph", "fixture:distribution_gap",
                    "--models", "exp1", "--samples", "5000", "--seed", "9",
                    "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_wired_limit_flags_and_config(tmp_path, capsys):
    out = tmp_path / "wl.csv"
    code = run(["wired-limit", "--family", "tree:2", "--radii", "3,4,5",
                "--probes", "1", "--seeds", "3", "--weights", "exp1",
                "--seed", "11", "--out", str(out)])
    assert code == 0
    assert out.read_text().startswith("seed_index,probe,")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"family": "tree:2", "model": "exp1",
                               "radii": [3, 4], "probes": [1], "seeds": 2,
                               "seed": 11}))
    out2 = tmp_path / "wl2.csv"
    code = run(["wired-limit", "--config", str(cfg), "--out", str(out2)])
    assert code == 0


def test_connectivity_command(tmp_path, capsys):
    out = tmp_path / "conn.csv"
    code = run(["connectivity", "--family", "tree:3", "--radii", "2,3,4",
                "--probes", "1,2,3,4", "--pairs", "3", "--seeds", "2",
                "--seed", "5", "--out", str(out)])
    assert code == 0


def test_verify_exit_codes_and_report(tmp_path, capsys):
    code = run(["verify", "invasion", "--fast", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "invasion.csv").exists()
    printed = capsys.readouterr().out
    assert "[invasion] PASS" in printed


def test_verify_unknown_suite(capsys):
    assert run(["verify", "nonsense"]) == 1


def test_verify_reports_reproducible(tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        assert run(["verify", "perturbation", "--fast", "--seed", "123",
                    "--out", str(out)]) == 0
    left = (a / "perturbation.csv").read_bytes()
    right = (b / "perturbation.csv").read_bytes()
    assert left == right


def test_wired_limit_byte_identical(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        assert run(["wired-limit", "--family", "tree:2", "--radii", "3,4",
                    "--probes", "1", "--seeds", "2", "--weights", "exp1",
                    "--seed", "13", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_weights_is_config_error(tmp_path, capsys):
    g, _, w, _ = random_symmetric_instance(1)
    path = tmp_path / "nw.json"
    dump_graph_json(path, g)
    assert run(["msa", "--graph", str(path)]) == 2
