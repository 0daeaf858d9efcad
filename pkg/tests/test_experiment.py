from pathlib import Path

import pytest

from models.errors import ConfigError
from models.power import HostSpec
from models.report import ExperimentConfig, ForecastSettings, Mode
from models.state import EventType
from models.vm import ScheduleDecision, ScheduleMode, VmRequest
from services.experiment import (ExperimentRunner, load_experiment_config, reduction_pct, run_experiment,
                                 validate_config)
from services.report_writer import write_experiment
from services.simulator import datacenters_for, simulate
from tests.conftest import make_series

PRESETS = Path(__file__).resolve().parent.parent / "presets"


def _rows(result, **match):
    return [r for r in result.comparison if all(getattr(r, k) == v for k, v in match.items())]


@pytest.fixture
def two_regions(constant_dataset, policy_file):
    data = constant_dataset({"A": 100.0, "B": 500.0})
    return data, policy_file("both", allowed_regions=["A", "B"])


class TestClosedForms:
    def test_constant_ci_gives_no_reduction(self, constant_dataset, policy_file):
        data = constant_dataset({"A": 300.0, "B": 300.0, "C": 300.0})
        config = ExperimentConfig(policy_file=[policy_file("all", allowed_regions=["A", "B", "C"])],
                                  regions_dir=data, mode=["ideal", "round_robin"], m_per_region=["inf", 100],
                                  batches=2, batch_size=40)
        result = run_experiment(config)
        optimized = _rows(result, mode=Mode.IDEAL)
        assert len(optimized) == 2
        for row in optimized:
            assert row.reduction_pct == pytest.approx(0.0, abs=1e-9)

    def test_low_region_against_high_region_is_eighty_percent(self, power_model):
        host = HostSpec(power=power_model)
        ci = {"A": make_series("A", [100.0] * 48), "B": make_series("B", [500.0] * 48)}
        vms = [VmRequest(id=f"vm{i}", min_cpu=1 + i % 8, min_ram=4.0, duration=1 + i % 12,
                         deadline=40, arrival=i % 20) for i in range(30)]
        by_id = {v.id: v for v in vms}

        def _all_in(region):
            decisions = [ScheduleDecision(vm_id=v.id, region=region, start_slot=v.arrival, duration=v.duration,
                                          deadline=v.deadline, arrival=v.arrival, cost=0.0,
                                          mode=ScheduleMode.OPTIMIZED) for v in vms]
            return simulate(datacenters_for(["A", "B"], host, 20), decisions, by_id, ci).total_gco2

        assert reduction_pct(_all_in("B"), _all_in("A")) == pytest.approx(80.0)

    def test_round_robin_over_two_regions(self, two_regions, write_csv):
        data, policy = two_regions
        traces = write_csv("vm_id,created,deleted,cores,ram_gb\n"
                           "vm,2022-05-15T00:00:00Z,2022-05-15T08:00:00Z,4,16\n", "traces.csv")
        config = ExperimentConfig(policy_file=[policy], regions_dir=data, traces=traces,
                                  mode=["ideal", "round_robin"], batches=2, batch_size=10)
        result = run_experiment(config)
        [row] = _rows(result, mode=Mode.IDEAL)
        # round robin alternates A and B, the optimizer puts everything in A
        assert row.reduction_pct == pytest.approx(200.0 / 3.0)
        assert row.scheduled == 20


class TestCapacity:
    @pytest.fixture
    def eight_regions(self, constant_dataset, policy_file):
        levels = {f"R{i}": 100.0 * i for i in range(1, 9)}
        data = constant_dataset(levels)
        policy = policy_file("all", allowed_regions=sorted(levels))
        return ExperimentConfig(policy_file=[policy], regions_dir=data, m_per_region=[5, 50],
                                mode=["ideal", "round_robin"], deadline_margin_hours=[6], batches=1, batch_size=100,
                                min_lifetime_hours=6, max_lifetime_hours=6, arrival_window_hours=24)

    def test_tight_capacity_spreads_jobs(self, eight_regions):
        result = run_experiment(eight_regions)
        [report] = [r for r in result.reports if r.capacity == "5" and r.mode == Mode.IDEAL]
        used = [r for r, jobs in report.region_jobs.items() if jobs > 0]
        # one region holds at most 5 * 35 // 6 six-hour jobs inside the batch span
        assert report.scheduled + report.unschedulable == 100
        assert report.scheduled > 90
        assert len(used) >= 4
        assert max(report.region_jobs.values()) <= 29

    def test_loose_capacity_fills_the_cleanest_region(self, eight_regions):
        result = run_experiment(eight_regions)
        [report] = [r for r in result.reports if r.capacity == "50" and r.mode == Mode.IDEAL]
        assert report.region_jobs["R1"] / report.scheduled >= 0.95

    def test_loose_capacity_reduces_more(self, eight_regions):
        result = run_experiment(eight_regions)
        [tight] = _rows(result, mode=Mode.IDEAL, capacity="5")
        [loose] = _rows(result, mode=Mode.IDEAL, capacity="50")
        assert loose.reduction_pct > tight.reduction_pct > 0

    def test_decisions_respect_capacity(self, eight_regions):
        result = run_experiment(eight_regions)
        rows = [d for d in result.decisions if d["capacity"] == "5" and d["mode"] == "ideal"]
        for region in {d["region"] for d in rows}:
            usage = {}
            for d in rows:
                if d["region"] == region:
                    for slot in range(d["start_slot"], d["start_slot"] + d["duration"]):
                        usage[slot] = usage.get(slot, 0) + 1
            assert max(usage.values()) <= 5


class TestSyntheticSweeps:
    @pytest.fixture
    def synthetic(self, policy_file):
        policy = policy_file("eu", allowed_regions=["DE", "FR", "PL"])
        return dict(policy_file=[policy], synthetic_days=10, regions=["DE", "FR", "PL"], seed=7,
                    batches=3, batch_size=30)

    def test_longer_margins_never_cost_more(self, synthetic):
        config = ExperimentConfig(**synthetic, mode=["ideal"], deadline_margin_hours=[6, 12, 24, 48])
        rows = sorted(run_experiment(config).comparison, key=lambda r: r.deadline_margin_hours)
        totals = [r.total_gco2 for r in rows]
        assert [r.deadline_margin_hours for r in rows] == [6, 12, 24, 48]
        for shorter, longer in zip(totals, totals[1:]):
            assert longer <= shorter * (1 + 1e-12)

    def test_perfect_forecast_matches_ideal(self, synthetic):
        config = ExperimentConfig(**synthetic, mode=["ideal", "forecast"],
                                  forecast=ForecastSettings(method="perfect", context_length=48))
        result = run_experiment(config)

        def _picked(mode):
            return sorted((d["batch"], d["vm_id"], d["region"], d["start_slot"], d["cost"])
                          for d in result.decisions if d["mode"] == mode)

        assert _picked("forecast") == _picked("ideal")
        [ideal] = _rows(result, mode=Mode.IDEAL)
        [forecast] = _rows(result, mode=Mode.FORECAST)
        assert forecast.total_gco2 == ideal.total_gco2

    def test_seasonal_forecast_sits_between_baseline_and_ideal(self, synthetic):
        config = ExperimentConfig(**synthetic, mode=["ideal", "forecast", "round_robin"],
                                  forecast=ForecastSettings(method="seasonal_naive", context_length=48))
        result = run_experiment(config)
        [ideal] = _rows(result, mode=Mode.IDEAL)
        [forecast] = _rows(result, mode=Mode.FORECAST)
        assert 0.0 < forecast.reduction_pct <= ideal.reduction_pct + 1e-9

    def test_runs_are_byte_identical(self, synthetic, tmp_path):
        config = ExperimentConfig(**synthetic, mode=["ideal", "round_robin"], m_per_region=[3, "inf"])
        first = write_experiment(run_experiment(config), config, tmp_path / "one", "test")
        second = write_experiment(run_experiment(config), config, tmp_path / "two", "test")
        assert first == second
        for name in first.outputs + ["manifest.json"]:
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_seed_changes_the_sample(self, synthetic):
        base = ExperimentConfig(**synthetic, mode=["ideal"])
        other = base.model_copy(update={"seed": 8})
        assert run_experiment(base).reports != run_experiment(other).reports


class TestRunner:
    def test_progress_events(self, two_regions):
        data, policy = two_regions
        seen = []
        config = ExperimentConfig(policy_file=[policy], regions_dir=data, batches=3, batch_size=5)
        ExperimentRunner(config, progress_callback=seen.append).run()
        assert [e["event_type"] for e in seen] == ["step_start", "step_complete"] + ["batch_complete"] * 3 + \
               ["step_complete"]
        assert seen[-1]["progress"] == 100.0
        assert [e["batch"] for e in seen if e["event_type"] == "batch_complete"] == [0, 1, 2]

    def test_short_dataset_emits_error(self, constant_dataset, policy_file):
        data = constant_dataset({"A": 100.0}, hours=30)
        config = ExperimentConfig(policy_file=[policy_file("a", allowed_regions=["A"])], regions_dir=data)
        runner = ExperimentRunner(config)
        with pytest.raises(ConfigError, match="warm-up"):
            runner.run()
        assert runner.events[-1]["event_type"] == EventType.ERROR.value

    def test_reduction_with_zero_baseline(self):
        assert reduction_pct(0.0, 0.0) == 0.0
        assert reduction_pct(200.0, 50.0) == 75.0


class TestConfig:
    def test_validate_lists_every_missing_file(self, tmp_path):
        config = ExperimentConfig(policy_file=[tmp_path / "nope.toml"], synthetic_days=5,
                                  traces=tmp_path / "traces.csv")
        problems = validate_config(config, tmp_path)
        assert any(p.startswith("policy file not found") for p in problems)
        assert any(p.startswith("trace file not found") for p in problems)

    def test_validate_unknown_policy_region(self, policy_file, tmp_path):
        config = ExperimentConfig(policy_file=[policy_file("p", allowed_regions=["DE", "MOON"])], synthetic_days=5,
                                  regions=["DE", "FR"])
        assert validate_config(config, tmp_path) == ["policy 'p': region MOON not in dataset"]

    def test_validate_missing_dataset_region(self, constant_dataset, policy_file, tmp_path):
        config = ExperimentConfig(policy_file=[policy_file("p", allowed_regions=["A"])],
                                  regions_dir=constant_dataset({"A": 1.0}), regions=["A", "B"])
        problems = validate_config(config, tmp_path)
        assert len(problems) == 1 and "region B not in dataset" in problems[0]

    def test_config_errors_are_listed(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('name = "bad"\nsynthetic_days = 5\npolicy_file = "p.toml"\nbatches = 0\nbogus = 1\n',
                        encoding="utf-8")
        with pytest.raises(ConfigError) as exc:
            load_experiment_config(path)
        assert len(exc.value.problems) == 2
        assert any("batches" in p for p in exc.value.problems)

    def test_exclusive_data_sources(self, tmp_path):
        with pytest.raises(ValueError):
            ExperimentConfig(policy_file=["p.toml"], synthetic_days=5, regions_dir=tmp_path)

    @pytest.mark.parametrize("preset", ["desk.toml", "subset_m50.toml", "latency_m5.toml", "gdpr.toml"])
    def test_synthetic_presets_validate(self, preset):
        config = load_experiment_config(PRESETS / preset)
        assert validate_config(config, PRESETS) == []
