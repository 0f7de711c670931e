import json

import numpy as np
import pytest

from spikelab import cli
from spikelab.config import load_config, parse_config, section_hash
from spikelab.errors import ConfigError, NonConvergenceError, RegimeError
from spikelab.grids import SymmetricGrid
from spikelab.ledger import RunLedger, format_value, load_field, save_field

MINIMAL = """\
model:
  N: 1
  V: {kind: constant, value: 1.0}
  W: {kind: constant, value: 1.0}
"""

COARSE_GRIDS = """\
grids:
  fast_h: 0.25
  fast_margin: 12.0
  slow_growth: 0.05
  radial_h: 0.02
"""


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.model.N == 1
    assert cfg.sweep.d_policy == "leading"
    assert cfg.outputs.formats == ("csv", "json")


def test_unknown_key_reports_line():
    text = MINIMAL + "sweep:\n  eps: [0.1]\n  colour: red\n"
    with pytest.raises(ConfigError, match=r"sweep\.colour \(line 7\)"):
        parse_config(text)


def test_unknown_potential_key_reports_line():
    text = MINIMAL.replace("value: 1.0}\n  W", "value: 1.0, slope: 2}\n  W")
    with pytest.raises(ConfigError, match=r"model\.V.*line 3"):
        parse_config(text)


def test_missing_potential_block():
    with pytest.raises(ConfigError, match="model.W"):
        parse_config("model:\n  N: 2\n  V: {kind: constant}\n")
    with pytest.raises(ConfigError, match="'model'"):
        parse_config("seed: 1\n")


def test_invalid_value_reports_line():
    with pytest.raises(ConfigError, match="line"):
        parse_config(MINIMAL + "sweep:\n  d_policy: random\n")
    with pytest.raises(ConfigError):
        parse_config("model: [1, 2]\n")
    with pytest.raises(ConfigError):
        parse_config("model: {V: {}, W: {}\n")


def test_env_overrides(monkeypatch, tmp_path):
    cfg = parse_config(MINIMAL)
    monkeypatch.setenv("SPIKELAB_OUTPUT_DIR", str(tmp_path))
    monkeypatch.setenv("SPIKELAB_WORKERS", "3")
    assert cfg.output_dir == tmp_path
    assert cfg.workers == 3
    monkeypatch.setenv("SPIKELAB_WORKERS", "many")
    with pytest.raises(ConfigError):
        cfg.workers


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.yaml")


def test_section_hash_is_order_independent():
    assert section_hash({"a": 1, "b": 2}) == section_hash({"b": 2, "a": 1})
    assert section_hash({"a": 1}) != section_hash({"a": 2})


def test_shipped_configs_parse():
    from pathlib import Path

    for p in sorted((Path(__file__).parents[1] / "configs").glob("*.yaml")):
        load_config(p)


def test_format_value():
    assert format_value(0.1) == "0.1"
    assert format_value(np.float64(1 / 3)) == repr(1 / 3)
    assert format_value(True) == "true"
    assert format_value(None) == ""


def test_ledger_schema_and_refusal(tmp_path):
    cols = {"a": "first", "b": "second"}
    led = RunLedger(tmp_path, "x", cols)
    led.append({"a": 1, "b": 0.5})
    led.append({"a": 2})
    lines = led.csv_path.read_text().splitlines()
    assert lines[0].startswith("# spikelab ledger schema v1 | a: first; b: second")
    assert led.read_csv()[1] == {"a": "2", "b": ""}
    data = json.loads(led.json_path.read_text())
    assert data["schema_version"] == 1 and len(data["rows"]) == 2
    with pytest.raises(Exception):
        led.append({"c": 1})
    with pytest.raises(ConfigError):
        RunLedger(tmp_path, "x", {"a": "changed"}).append({"a": 1})


def test_field_checkpoint_roundtrip(tmp_path):
    g = SymmetricGrid.stretched(3.0, 2.0, 0.1, 0.05, 3)
    f = g.field(np.exp(-g.radius))
    save_field(tmp_path / "f.txt", f, {"eps": 0.1})
    back, meta = load_field(tmp_path / "f.txt")
    assert np.array_equal(back.values, f.values)
    assert np.array_equal(back.grid.x1, g.x1) and back.grid.N == 3
    assert meta["eps"] == 0.1
    (tmp_path / "g.txt").write_text("nope\n")
    with pytest.raises(ConfigError):
        load_field(tmp_path / "g.txt")


def run(argv, monkeypatch, out):
    monkeypatch.setenv("SPIKELAB_OUTPUT_DIR", str(out))
    return cli.main(argv)


def test_groundstate_run_is_deterministic(tmp_path, monkeypatch, capsys):
    cfg = write(tmp_path, MINIMAL)
    assert run(["groundstate", str(cfg)], monkeypatch, tmp_path / "a") == 0
    assert run(["groundstate", str(cfg)], monkeypatch, tmp_path / "b") == 0
    a = (tmp_path / "a" / "groundstate.csv").read_text()
    b = (tmp_path / "b" / "groundstate.csv").read_text()
    assert a == b
    row = json.loads(capsys.readouterr().out.split("\n}\n")[0] + "\n}")
    assert abs(row["peak"] - np.sqrt(2)) < 1e-6
    assert (tmp_path / "a" / "groundstate.png").stat().st_size > 0
    assert (tmp_path / "a" / "checkpoints" / row["checkpoint"] / "profile.txt").exists()


def test_figures_can_be_disabled(tmp_path, monkeypatch):
    cfg = write(tmp_path, MINIMAL + "outputs:\n  figures: false\n")
    assert run(["groundstate", str(cfg)], monkeypatch, tmp_path / "o") == 0
    assert not (tmp_path / "o" / "groundstate.png").exists()


def test_exit_code_for_bad_config(tmp_path, monkeypatch, capsys):
    cfg = write(tmp_path, MINIMAL + "bogus: 1\n")
    assert run(["groundstate", str(cfg)], monkeypatch, tmp_path) == 2
    assert "spikelab.errors.ConfigError" in capsys.readouterr().err


def test_exit_code_for_violated_assumption(tmp_path, monkeypatch, capsys):
    text = MINIMAL.replace("N: 1", "N: 2").replace("W: {kind: constant, value: 1.0}",
                                                   "W: {kind: quadratic, value: 1.0, a: [20.0, 20.0]}")
    cfg = write(tmp_path, text + COARSE_GRIDS)
    assert run(["corrections", str(cfg)], monkeypatch, tmp_path) == 4
    assert "AssumptionError" in capsys.readouterr().err


@pytest.mark.parametrize("exc,code", [(NonConvergenceError, 3), (RegimeError, 5)])
def test_exit_codes_for_solver_failures(tmp_path, monkeypatch, exc, code):
    def boom(cfg):
        raise exc("forced")

    monkeypatch.setitem(cli.COMMANDS, "groundstate", boom)
    assert run(["groundstate", str(write(tmp_path, MINIMAL))], monkeypatch, tmp_path) == code


def test_errornorms_single_eps_skips_fits(tmp_path, monkeypatch, caplog):
    text = MINIMAL.replace("N: 1", "N: 2") + COARSE_GRIDS + "sweep:\n  eps: [0.1]\n"
    cfg = write(tmp_path, text)
    assert run(["errornorms", str(cfg)], monkeypatch, tmp_path) == 0
    summary = json.loads((tmp_path / "errornorms_summary.json").read_text())
    assert summary["E1_slope"] is None and summary["E2_slope_log2"] is None
    assert "fewer than 4" in caplog.text


def test_toy_reduced_run(tmp_path, monkeypatch):
    cfg = write(tmp_path, MINIMAL.replace("N: 1", "N: 2") + "sweep:\n  toy: true\n")
    assert run(["reduced", str(cfg)], monkeypatch, tmp_path) == 0
    rows = RunLedger(tmp_path, "reduced_model", cli.MODEL_COLUMNS).read_csv()
    assert [r["mode"] for r in rows] == ["toy"] * 5


def test_pipeline_reduced_run_reports_model_gap(tmp_path, monkeypatch):
    text = MINIMAL.replace("N: 1", "N: 2") + COARSE_GRIDS + "sweep:\n  full_eps: [0.1]\n  model_eps: [0.01]\n"
    assert run(["reduced", str(write(tmp_path, text))], monkeypatch, tmp_path) == 0
    row = RunLedger(tmp_path, "reduced_full", cli.FULL_COLUMNS).read_csv()[0]
    assert row["outcome"] == "converged"
    assert abs(float(row["model_gap"])) < 0.5
    summary = json.loads((tmp_path / "reduced_summary.json").read_text())
    assert summary["constants"]["b"] > 0 and not summary["model_gap_decays"]
