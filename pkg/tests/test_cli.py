import json
import re

import pytest

from vlc_limits import cli


def run(argv):
    return cli.main(argv)


def test_version(capsys):
    assert run(["--version"]) == 0
    assert "0.1.0" in capsys.readouterr().out


def test_missing_command_exits_1(capsys):
    assert run([]) == 1
    assert run(["no-such-command"]) == 1


def test_fmt_cell():
    assert cli.fmt_cell(1.0 / 3.0) == "0.333333333333"
    assert cli.fmt_cell(3) == "3"
    assert cli.fmt_cell(0.1) == "0.1"
    with pytest.raises(AssertionError):
        cli.fmt_cell(float("nan"))


def test_parse_grid():
    assert cli.parse_grid("1:5", integer=True) == [1, 2, 3, 4, 5]
    assert cli.parse_grid("2:10:3", integer=True) == [2, 5, 8]
    assert cli.parse_grid("0:0.5:0.25") == [0.0, 0.25, 0.5]
    assert cli.parse_grid("0.1") == [0.1]
    with pytest.raises(cli.UsageError):
        cli.parse_grid("0:0.5")  # float grids need an explicit step
    with pytest.raises(cli.UsageError):
        cli.parse_grid("a:b")


def test_erokhin_csv_shape(tmp_path):
    out = tmp_path / "e.csv"
    rc = run(
        ["erokhin", "--bernoulli", "0.11", "--eps-grid", "0:0.5:0.1", "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert re.fullmatch(r"# vlc-limits 0\.1\.0 config=[0-9a-f]{12}", lines[0])
    assert lines[1] == "eps,H_exact,T1_lower,T1_upper,psi_lower"
    assert len(lines) == 2 + 6
    # degenerate tail rows (eps >= 0.11) carry zero bounds, never NaN
    last = lines[-1].split(",")
    assert last[0] == "0.5"
    assert all(float(x) == 0.0 for x in last[1:])
    assert "nan" not in out.read_text().lower()


def test_byte_identical_reruns(tmp_path, monkeypatch):
    args = ["curve", "--bernoulli", "0.11", "--eps", "0.1", "--k", "1:12"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("VLC_THREADS", "4")
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_stdout_and_format_shorthand(capsys):
    rc = run(["erokhin", "--bernoulli", "0.3", "--eps-grid", "0.1", "--out", "-"])
    assert rc == 0
    text = capsys.readouterr().out
    assert text.startswith("# vlc-limits")
    # literal 'json' as the out path selects the format and writes to stdout
    rc = run(["erokhin", "--bernoulli", "0.3", "--eps-grid", "0.1", "--out", "json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["tool"] == "vlc-limits"
    assert doc["columns"] == ["eps", "H_exact", "T1_lower", "T1_upper", "psi_lower"]
    assert len(doc["rows"]) == 1


def test_lstar_json_document(tmp_path, capsys):
    src = tmp_path / "s.json"
    src.write_text(json.dumps({"probs": [0.5, 0.25, 0.125, 0.125]}))
    rc = run(
        ["lstar", "--source", str(src), "--eps", "0.1", "--mc", "100000",
         "--seed", "5", "--deterministic", "--out", "-"]
    )
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["tool"] == "vlc-limits"
    assert re.fullmatch(r"[0-9a-f]{12}", doc["config_hash"])
    assert doc["M"] >= 1
    assert doc["bounds"]["t2_lower"] <= doc["L_star"] <= doc["bounds"]["t2_upper"]
    assert doc["bounds"]["psi_lower"] <= doc["L_star"]
    assert doc["L_star"] <= doc["L_det"]
    mc = doc["mc"]
    assert mc["n"] == 100000 and mc["seed"] == 5
    assert abs(mc["emp_avg_len"] - doc["L_star"]) <= mc["ci3_avg_len"]


def test_malformed_inputs_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"weights": [1, 2]}))
    assert run(["lstar", "--source", str(bad), "--eps", "0.1"]) == 1
    assert "probs" in capsys.readouterr().err
    bad.write_text(json.dumps({"probs": []}))
    assert run(["lstar", "--source", str(bad), "--eps", "0.1"]) == 1
    bad.write_text("{not json")
    assert run(["lstar", "--source", str(bad), "--eps", "0.1"]) == 1
    assert run(["lstar", "--source", str(tmp_path / "absent.json"), "--eps", "0.1"]) == 1
    # distortion file without 'matrix'
    badm = tmp_path / "m.json"
    badm.write_text(json.dumps({"rows": [[0]]}))
    srcf = tmp_path / "s.json"
    srcf.write_text(json.dumps({"probs": [0.5, 0.5]}))
    rc = run(
        ["lossy", "--source", str(srcf), "--distortion", str(badm), "--d", "0.1",
         "--eps", "0.1", "--k", "1"]
    )
    assert rc == 1
    assert "matrix" in capsys.readouterr().err


def test_unknown_curve_column_exits_1(capsys):
    rc = run(
        ["curve", "--bernoulli", "0.11", "--eps", "0.1", "--k", "1:4",
         "--columns", "bogus"]
    )
    assert rc == 1
    assert "bogus" in capsys.readouterr().err


def test_bound_violation_exits_2(monkeypatch, capsys):
    def inverted(p, eps):
        return 10.0, -10.0

    monkeypatch.setattr(cli._erokhin, "theorem1_bounds", inverted)
    rc = run(["erokhin", "--bernoulli", "0.11", "--eps-grid", "0.05", "--out", "-"])
    assert rc == 2
    assert "violation" in capsys.readouterr().err.lower()


def test_lossy_csv_columns(tmp_path):
    out = tmp_path / "l.csv"
    rc = run(
        ["lossy", "--bernoulli", "0.11", "--hamming", "2", "--d", "0.05",
         "--eps", "0.1", "--k", "1:3", "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[1] == "k,rd_rate,tilted_cutoff,main_term,t6_lower,rplus"
    data = [l for l in lines if not l.startswith("#")][1:]
    assert len(data) == 3
    assert [row.split(",")[0] for row in data] == ["1", "2", "3"]


def test_curve_column_selection(tmp_path):
    out = tmp_path / "c.csv"
    rc = run(
        ["curve", "--bernoulli", "0.11", "--eps", "0.1", "--k", "1:4",
         "--columns", "exact,approx", "--out", str(out)]
    )
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[1] == "k,exact,approx"


def test_config_hash_stability_and_scope():
    cfg = {"command": "erokhin", "probs": [0.89, 0.11], "eps": [0.1]}
    h1 = cli.config_hash(cfg)
    h2 = cli.config_hash(dict(reversed(list(cfg.items()))))
    assert h1 == h2  # canonicalized key order
    assert re.fullmatch(r"[0-9a-f]{12}", h1)
    assert cli.config_hash({**cfg, "eps": [0.2]}) != h1


def test_validate_quick(capsys):
    assert run(["validate", "--quick"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok ") >= 8
    assert "FAIL" not in out


def test_figures_fig2(tmp_path):
    out = tmp_path / "fig2.csv"
    assert run(["figures", "--which", "fig2", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().strip().split("\n") if not l.startswith("#")]
    assert lines[0] == "length,rate,mass"
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 101  # lengths 0..100 at k = 100
    assert sum(float(r[2]) for r in rows) == pytest.approx(1.0, abs=1e-9)
