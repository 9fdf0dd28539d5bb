"""Driver behavior: exit codes, artifacts, determinism."""

import json
import os

import pytest

from etacalc.cli import main
from etacalc.config import ConfigError, make_config, parse_config


def test_parse_config_flat_keys():
    cfg = parse_config("# comment\nseed = 11\nmodel.S = 40  # inline\n")
    assert cfg == {"seed": "11", "model.S": "40"}


def test_parse_config_rejects_bad_lines():
    with pytest.raises(ConfigError):
        parse_config("seed 11\n")
    with pytest.raises(ConfigError):
        parse_config("seed =\n")
    with pytest.raises(ConfigError):
        parse_config("seed = 1\nseed = 2\n")


def test_make_config_rejects_unknown_key_and_bad_values(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("sede = 11\n")
    with pytest.raises(ConfigError):
        make_config("identities", config_file=str(f))
    f.write_text("tol.identity = -1\n")
    with pytest.raises(ConfigError):
        make_config("identities", config_file=str(f))
    with pytest.raises(ConfigError):
        make_config("nosuchsuite")


def test_config_error_exits_2_with_no_artifacts(tmp_path, capsys):
    f = tmp_path / "broken.cfg"
    f.write_text("this is not a key value line\n")
    out = tmp_path / "out"
    rc = main(["identities", "--config", str(f), "--out", str(out)])
    assert rc == 2
    assert "config error" in capsys.readouterr().err
    assert not out.exists()


def test_identities_run_writes_artifacts(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("trials = 3\n")
    out = tmp_path / "out"
    rc = main(["identities", "--config", str(f), "--out", str(out),
               "--seed", "3"])
    assert rc == 0
    rows = (out / "identities_results.csv").read_text().splitlines()
    assert rows[0].split(",")[0] == "identity"
    assert len(rows) > 1
    rep = json.loads((out / "identities_report.json").read_text())
    assert rep["n_fail"] == 0
    assert rep["config"]["seed"] == 3


def test_csv_bit_identical_across_workers(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("trials = 4\n")
    texts = []
    for i, workers in enumerate((1, 3)):
        out = tmp_path / ("out%d" % i)
        rc = main(["identities", "--config", str(f), "--out", str(out),
                   "--workers", str(workers)])
        assert rc == 0
        texts.append((out / "identities_results.csv").read_bytes())
    assert texts[0] == texts[1]


def test_tolerance_failure_exits_1_with_diagnostics(tmp_path, capsys):
    f = tmp_path / "tight.cfg"
    f.write_text("trials = 2\ntol.identity = 1e-30\n")
    out = tmp_path / "out"
    rc = main(["identities", "--config", str(f), "--out", str(out)])
    assert rc == 1
    err = capsys.readouterr().err
    assert "FAIL" in err and "residual" in err
    # artifacts still written so the failure is diagnosable
    assert (out / "identities_results.csv").exists()


def test_out_dir_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv("ETACALC_OUT_DIR", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    f = tmp_path / "run.cfg"
    f.write_text("trials = 2\n")
    rc = main(["identities", "--config", str(f)])
    assert rc == 0
    assert os.path.exists(str(tmp_path / "envout" / "identities_results.csv"))
