import csv
import json

import pytest

from cfjcas.cli import main
from cfjcas.config import load_config, parse_range, resolve_key
from cfjcas.errors import InvalidConfigError

FAST = ["--n-setups=1", "--n-rcs-draws=20", "--n-calibration=200"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_range_syntax():
    assert parse_range("-40:-10:5") == (-40, -35, -30, -25, -20, -15, -10)
    assert parse_range("2,4,6") == (2, 4, 6)
    with pytest.raises(ValueError):
        parse_range("1:0:1")


def test_key_resolution():
    assert resolve_key("n-ue") == "n_ue"
    assert resolve_key("gamma-c-db") == "plan.gamma_c_db"
    assert resolve_key("target_m") == "heights.target_m"
    with pytest.raises(InvalidConfigError) as err:
        resolve_key("bogus")
    assert err.value.key == "bogus"


def test_run_fig3_grid(tmp_path):
    out = tmp_path / "res"
    assert main(["run", "fig3", "--rcs-db=-40:-10:5", "--out", str(out), *FAST]) == 0
    rows = read_rows(out / "fig3.csv")
    assert len(rows) == 7 * 3
    assert {r["method"] for r in rows} == {"jcas_with_s0", "jcas_without_s0", "baseline"}
    manifest = json.loads((out / "fig3_manifest.json").read_text())
    assert manifest["experiment"] == "fig3" and manifest["seed"] == 0


def test_run_custom_single_row(tmp_path):
    args = ["run", "custom", "--n-ue=8", "--tau=100", "--gamma-c-db=20", "--out", str(tmp_path), *FAST]
    assert main(args) == 0
    assert len(read_rows(tmp_path / "custom.csv")) == 1


def test_rerun_with_recorded_seed_is_byte_identical(tmp_path):
    args = ["run", "fig5", "--n-ue-grid=2,4", "--plan.methods=baseline", *FAST]
    assert main(args + ["--seed", "5", "--out", str(tmp_path / "a")]) == 0
    seed = json.loads((tmp_path / "a" / "fig5_manifest.json").read_text())["seed"]
    assert main(args + ["--seed", str(seed), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "fig5.csv").read_bytes() == (tmp_path / "b" / "fig5.csv").read_bytes()


def test_unknown_key_names_it(tmp_path, capsys):
    assert main(["run", "fig3", "--bogus-key=3", "--out", str(tmp_path)]) != 0
    assert "bogus_key" in capsys.readouterr().err


def test_invalid_value_names_key(tmp_path, capsys):
    assert main(["run", "fig3", "--p-fa=1.5", "--out", str(tmp_path)]) != 0
    assert "p_fa" in capsys.readouterr().err


def test_missing_config_file_fails(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "absent.toml")]) != 0


def write_config(path, body):
    path.write_text(body)
    return str(path)


def test_validate_prints_derived_quantities(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.toml", "noise_dbm = -94\nn_ue = 8\n[plan]\nn_calibration = 200\n")
    assert main(["validate", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert out.startswith("OK")
    assert "3.981e-13 W" in out
    assert "antennas per AP     4" in out


def test_more_receivers_than_aps_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.toml",
                       'n_tx = 1\nn_rx = 3\nap_layout = "explicit"\nap_positions = [[10, 10], [20, 20]]\n')
    assert main(["validate", "--config", cfg]) == 2
    assert "ap_positions" in capsys.readouterr().err


def test_config_file_keys_and_overrides(tmp_path):
    cfg = write_config(tmp_path / "c.toml", "n_ue = 4\nseed = 9\n[heights]\nap_m = 12.0\n"
                                            "[plan]\nrcs_db = [-30, -20]\ntau = 50\n")
    run = load_config(cfg, {"n_ue": 6})
    assert run.scenario.n_ue == 6 and run.scenario.ap_height == 12.0
    assert run.plan.seed == 9 and run.plan.tau == 50
    assert run.rcs_db == (-30, -20)
    bad = write_config(tmp_path / "bad.toml", "[plan]\nsurprise = 1\n")
    with pytest.raises(InvalidConfigError) as err:
        load_config(bad)
    assert err.value.key == "plan.surprise"


def test_toml_grid_strings_are_ranges(tmp_path):
    cfg = write_config(tmp_path / "c.toml", '[plan]\nrcs_db = "-40:-30:5"\nn_ue_grid = [2, 4]\n')
    loaded = load_config(cfg)
    assert loaded.rcs_db == (-40.0, -35.0, -30.0)
    assert loaded.n_ue_grid == (2, 4)
    bad = write_config(tmp_path / "bad.toml", '[plan]\nrcs_db = "1:2"\n')
    with pytest.raises(InvalidConfigError, match="plan.rcs_db"):
        load_config(bad)
