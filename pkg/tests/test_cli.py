import csv
import io
import json
import subprocess
import sys

import pytest

from octopsh import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_algebra(capsys):
    code, out, _ = run(capsys, "verify", "algebra", "--samples", "1000")
    assert code == 0
    lines = [json.loads(s) for s in out.splitlines()]
    assert lines and all(d["pass"] for d in lines)
    for d in lines:
        assert {"check", "inputs_digest", "value", "stderr", "gate", "pass", "config"} <= set(d)
        assert d["config"]["seed"] == 0 and d["config"]["suite"] == "algebra"


def test_unknown_suite_is_usage_error(capsys):
    code, out, err = run(capsys, "verify", "nosuch")
    assert code == 2 and out == "" and "usage" in err


def test_bad_flag_is_usage_error(capsys):
    code, _, err = run(capsys, "verify", "algebra", "--samples", "many")
    assert code == 2 and "usage" in err


def test_rerun_is_byte_identical(capsys):
    a = run(capsys, "verify", "hermitian", "--samples", "500", "--seed", "4")[1]
    b = run(capsys, "verify", "hermitian", "--samples", "500", "--seed", "4")[1]
    assert a == b


def test_timestamp_isolated_on_last_line(capsys):
    plain = run(capsys, "verify", "algebra", "--samples", "500")[1]
    stamped = run(capsys, "verify", "algebra", "--samples", "500", "--timestamp")[1]
    body, last = stamped.rstrip("\n").rsplit("\n", 1)
    assert body + "\n" == plain
    assert set(json.loads(last)) == {"timestamp"}


def test_config_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run\nseed = 11\nsamples = 700\nsuite = algebra\n")
    out = run(capsys, "verify", "--config", str(cfg))[1]
    assert json.loads(out.splitlines()[0])["config"]["seed"] == 11
    monkeypatch.setenv("OCTOPSH_SEED", "12")
    out = run(capsys, "verify", "--config", str(cfg))[1]
    assert json.loads(out.splitlines()[0])["config"]["seed"] == 12
    out = run(capsys, "verify", "--config", str(cfg), "--seed", "13")[1]
    d = json.loads(out.splitlines()[0])["config"]
    assert d["seed"] == 13 and d["samples"] == 700


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(capsys, "verify", "algebra", "--config", str(cfg))[0] == 2


def test_out_file(tmp_path, capsys):
    path = tmp_path / "r.jsonl"
    code, out, _ = run(capsys, "verify", "algebra", "--samples", "500", "--out", str(path))
    assert code == 0 and out == ""
    assert all(json.loads(s)["pass"] for s in path.read_text().splitlines())


def test_csv_format(capsys):
    out = run(capsys, "verify", "algebra", "--samples", "500", "--format", "csv")[1]
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:3] == ["check", "status", "pass"]
    assert out.count("\r\n") == len(rows)
    assert json.loads(rows[1][-1])["suite"] == "algebra"


def test_compute_perron_constant(capsys):
    code, out, _ = run(capsys, "compute", "perron", "--phi", "const 1", "--at", "0", "--samples", "20000")
    d = json.loads(out)
    assert code == 0
    assert d["details"]["lower"] == [1.0]
    assert abs(d["details"]["upper"][0] - 1.0) <= 3 * d["stderr"][0] + 1e-12


def test_compute_lelong_table(capsys):
    code, out, _ = run(capsys, "compute", "lelong", "--field", "fundamental", "--center", "0",
                       "--samples", "4000", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert list(rows[0]) == ["eps", "r", "sigma_over_r8", "stderr", "monotone"]
    assert len(rows) == 30 and all(r["monotone"] == "True" for r in rows)


def test_compute_capacity(capsys):
    code, out, _ = run(capsys, "compute", "capacity", "--r", "0.5", "--R", "1.0", "--samples", "4000")
    d = json.loads(out)
    assert code in (0, 3)
    assert d["check"] == "capacity.ball" and d["stderr"] > 0


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "compute", "capacity", "--r", "2", "--R", "1", "--samples", "100")
    assert code == 4 and "catalog.radii" in err
    code, _, err = run(capsys, "compute", "lelong", "--field", "(nosuch)", "--samples", "100")
    assert code == 4 and "catalog.parse" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "octopsh", "verify", "nosuch"], capture_output=True, text=True)
    assert res.returncode == 2
