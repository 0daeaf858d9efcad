import json

import pandas as pd
import pytest

from app.cli import main
from forecasters.store import ForecastStore
from services.carbon_data import load_dataset

CSV = ("datetime,carbon_intensity_avg\n"
       "2022-05-15T00:00:00Z,100\n2022-05-15T01:00:00Z,200\n2022-05-15T03:00:00Z,400\n")


@pytest.fixture
def config_file(tmp_path, policy_file):
    policy_file("pair", allowed_regions=["FR", "PL"])
    path = tmp_path / "pair_run.toml"
    path.write_text('name = "pair"\npolicy_file = "pair.toml"\nsynthetic_days = 5\nregions = ["FR", "PL"]\n'
                    'mode = ["ideal", "round_robin"]\nbatches = 2\nbatch_size = 10\nseed = 3\n', encoding="utf-8")
    return path


def test_ingest_writes_region_file(write_csv, tmp_path, capsys):
    out = tmp_path / "data"
    assert main(["ingest", "--region", "IT-NO", "--csv", str(write_csv(CSV)), "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == str(out / "IT-NO.csv")
    assert json.loads((out / "index.json").read_text())["regions"]["IT-NO"]["length"] == 4
    assert load_dataset(out)["IT-NO"].values == (100.0, 200.0, 300.0, 400.0)


def test_reingest_is_byte_identical(write_csv, tmp_path):
    out = tmp_path / "data"
    args = ["ingest", "--region", "IT-NO", "--csv", str(write_csv(CSV)), "--out", str(out)]
    main(args)
    first = (out / "IT-NO.csv").read_bytes()
    main(args)
    assert (out / "IT-NO.csv").read_bytes() == first


def test_malformed_row_exits_nonzero(write_csv, tmp_path, capsys):
    path = write_csv("datetime,carbon_intensity_avg\n2022-05-15T00:00:00Z,100\n2022-05-15T01:00:00Z,-7\n")
    assert main(["ingest", "--region", "DE", "--csv", str(path), "--out", str(tmp_path / "data")]) == 1
    assert "row 3" in capsys.readouterr().err


def test_forecast_store(constant_dataset, tmp_path):
    data = constant_dataset({"DE": 300.0, "FR": 60.0}, hours=200)
    out = tmp_path / "forecasts.csv"
    assert main(["forecast", "--data", str(data), "--method", "seasonal-naive", "--context-length", "24",
                 "--horizon", "48", "--every", "24", "--out", str(out)]) == 0
    store = ForecastStore.from_csv(out)
    assert store.regions() == ["DE", "FR"]
    assert len(store) == 16
    assert all(f.horizon == 48 and set(f.values) == {60.0} for f in store.forecasts("FR"))
    metrics = pd.read_csv(tmp_path / "forecasts_metrics.csv")
    assert metrics["region"].tolist() == ["DE", "FR"]
    assert metrics["mae"].tolist() == [0.0, 0.0]
    assert (tmp_path / "forecasts_vs_actual.csv").is_file()


def test_perfect_forecast_store_is_history(constant_dataset, tmp_path):
    data = constant_dataset({"DE": 300.0}, hours=60)
    out = tmp_path / "perfect.csv"
    assert main(["forecast", "--data", str(data), "--method", "perfect", "--context-length", "24",
                 "--horizon", "96", "--out", str(out)]) == 0
    history = load_dataset(data)["DE"].values
    for f in ForecastStore.from_csv(out).forecasts("DE"):
        assert f.values == history[f.issue_slot:]


def test_zero_horizon_is_a_usage_error(constant_dataset):
    with pytest.raises(SystemExit) as exc:
        main(["forecast", "--data", str(constant_dataset({"DE": 1.0})), "--horizon", "0"])
    assert exc.value.code == 2


def test_unknown_forecast_region(constant_dataset, capsys):
    assert main(["forecast", "--data", str(constant_dataset({"DE": 1.0})), "--regions", "MOON"]) == 1
    assert "region MOON not in dataset" in capsys.readouterr().err


def test_run_prints_comparison(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file), "--out", str(out)]) == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert "reduction_pct" in header.split(",")
    for name in ("reports.json", "decisions.csv", "comparison.csv", "manifest.json"):
        assert (out / name).is_file()


def test_run_twice_is_identical(config_file, tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--config", str(config_file), "--out", str(tmp_path / name)]) == 0
    for name in ("manifest.json", "reports.json", "decisions.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides_config(config_file, tmp_path):
    assert main(["--seed", "11", "run", "--config", str(config_file), "--out", str(tmp_path / "s")]) == 0
    assert json.loads((tmp_path / "s" / "manifest.json").read_text())["seed"] == 11


def test_report_merges_report_files(config_file, tmp_path, capsys):
    main(["run", "--config", str(config_file), "--out", str(tmp_path / "run")])
    capsys.readouterr()
    assert main(["report", str(tmp_path / "run" / "reports.json"), "--out", str(tmp_path / "tables")]) == 0
    assert "reduction_pct" in capsys.readouterr().out.splitlines()[0]
    assert (tmp_path / "tables" / "job_distribution.csv").is_file()


def test_report_without_inputs_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["report"])
    assert exc.value.code == 2


def test_validate(config_file, capsys):
    assert main(["validate", "--config", str(config_file)]) == 0
    assert capsys.readouterr().out.strip().endswith("ok")


def test_validate_reports_problems(tmp_path, capsys):
    path = tmp_path / "broken.toml"
    path.write_text('policy_file = "missing.toml"\nsynthetic_days = 5\n', encoding="utf-8")
    assert main(["validate", "--config", str(path)]) == 1
    assert "policy file not found" in capsys.readouterr().err
