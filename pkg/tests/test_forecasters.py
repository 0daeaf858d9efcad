import numpy as np
import pytest

from forecasters.methods import build_forecaster, forecast, method_from_settings
from forecasters.metrics import evaluate_forecast, evaluate_store
from forecasters.store import ForecastStore, RollingForecaster, rolling_forecast_store
from models.errors import ForecastError
from models.forecast import (Forecast, ForecastRequest, MovingAverage, Perfect, Persistence,
                             SeasonalNaive)
from models.report import ForecastSettings
from services.synthetic import sinusoid_series
from tests.conftest import make_series


def _request(context, issue_slot=None, horizon=96, region="DE"):
    context = tuple(float(v) for v in context)
    return ForecastRequest(region=region, context=context, context_length=len(context),
                           issue_slot=len(context) if issue_slot is None else issue_slot, horizon=horizon)


def test_persistence_carries_last_value():
    result = forecast(_request([100, 180, 250]), Persistence())
    assert result.values == (250.0,) * 96
    assert result.method == "persistence"


def test_seasonal_naive_repeats_last_period():
    context = list(range(48))
    result = forecast(_request(context), SeasonalNaive(period=24))
    cycle = tuple(float(v) for v in range(24, 48))
    assert result.values == cycle * 4


def test_moving_average_level():
    result = forecast(_request([10, 20, 30, 40], horizon=3), MovingAverage(window=2))
    assert result.values == (35.0, 35.0, 35.0)


def test_perfect_returns_actuals():
    actuals = make_series("DE", [300, 320, 310, 290, 305, 280])
    result = forecast(_request([320], issue_slot=2, horizon=3), Perfect(actuals=actuals))
    assert result.values == (310.0, 290.0, 305.0)


def test_perfect_coverage_gap():
    actuals = make_series("DE", [300, 320, 310])
    with pytest.raises(ForecastError, match="perfect foresight"):
        forecast(_request([320], issue_slot=2, horizon=3), Perfect(actuals=actuals))


def test_short_context_is_rejected():
    with pytest.raises(ForecastError, match="needs 24 context values"):
        forecast(_request(range(10)), SeasonalNaive(period=24))


def test_negative_predictions_are_clamped():
    result = forecast(_request([-5.0], horizon=4), Persistence())
    assert result.values == (0.0,) * 4


def test_method_from_settings():
    assert isinstance(method_from_settings(ForecastSettings(method="persistence")), Persistence)
    assert method_from_settings(ForecastSettings(method="seasonal_naive", period=12)).period == 12
    with pytest.raises(ForecastError):
        method_from_settings(ForecastSettings(method="perfect"))


def test_build_forecaster_tags():
    assert build_forecaster(SeasonalNaive(period=24)).tag == "seasonal_naive(24)"
    assert build_forecaster(MovingAverage(window=6)).tag == "moving_average(6)"


class TestMetrics:
    def test_identity(self):
        pred = Forecast(region="A", issue_slot=0, values=(100.0, 200.0), method="x")
        metrics = evaluate_forecast(pred, [100, 200])
        assert (metrics.mae, metrics.rmse, metrics.mape) == (0.0, 0.0, 0.0)

    def test_two_points(self):
        pred = Forecast(region="A", issue_slot=0, values=(110.0, 190.0), method="x")
        metrics = evaluate_forecast(pred, [100, 200])
        assert metrics.mae == pytest.approx(10.0)
        assert metrics.rmse == pytest.approx(10.0)
        assert metrics.mape == pytest.approx(7.5)

    def test_zero_actual_excluded_from_mape(self):
        pred = Forecast(region="A", issue_slot=0, values=(110.0, 5.0), method="x")
        metrics = evaluate_forecast(pred, [100, 0])
        assert metrics.mape_excluded == 1
        assert metrics.mape == pytest.approx(10.0)

    def test_length_mismatch(self):
        pred = Forecast(region="A", issue_slot=0, values=(1.0,), method="x")
        with pytest.raises(ForecastError):
            evaluate_forecast(pred, [1.0, 2.0])

    def test_store_scored_against_history(self):
        series = make_series("A", range(11))
        store = rolling_forecast_store(series, Persistence(), every=3, context_length=2, horizon=3)
        metrics, points = evaluate_store(store, {"A": series})
        # persistence on a unit ramp misses by 1, 2 and 3 at leads 0..2
        [row] = metrics.to_dict("records")
        assert (row["region"], row["method"], row["forecasts"]) == ("A", "persistence", 3)
        assert row["mae"] == pytest.approx(2.0)
        assert row["rmse"] == pytest.approx((14 / 3) ** 0.5)
        assert points["issue_slot"].tolist() == [2, 2, 2, 5, 5, 5, 8, 8, 8]
        assert (points["actual"] - points["forecast"]).tolist() == [1.0, 2.0, 3.0] * 3

    def test_store_tail_is_truncated_at_history_end(self):
        series = make_series("A", [100.0] * 6)
        store = rolling_forecast_store(series, Persistence(), every=1, context_length=4, horizon=4)
        metrics, points = evaluate_store(store, {"A": series})
        assert points.groupby("issue_slot").size().to_dict() == {4: 2, 5: 1}
        assert metrics["mae"].tolist() == [0.0]

    def test_store_region_without_history(self):
        store = ForecastStore([Forecast(region="B", issue_slot=0, values=(1.0,), method="x")])
        with pytest.raises(ForecastError):
            evaluate_store(store, {})

    def test_seasonal_naive_is_exact_on_periodic_data(self):
        series = sinusoid_series("A", 300.0, 100.0, hours=24 * 10)
        issue = 24 * 7
        context = series.values[issue - 48:issue]
        actual = series.values[issue:issue + 48]
        seasonal = forecast(_request(context, issue_slot=issue, horizon=48), SeasonalNaive(period=24))
        persistence = forecast(_request(context, issue_slot=issue, horizon=48), Persistence())
        assert evaluate_forecast(seasonal, actual).mape == pytest.approx(0.0, abs=1e-9)
        assert evaluate_forecast(persistence, actual).mape > 0.0


class TestStore:
    @pytest.fixture
    def long_series(self):
        rng = np.random.default_rng(11)
        return make_series("DE", rng.uniform(100, 500, size=1200))

    def test_hourly_issue_count(self, long_series):
        store = rolling_forecast_store(long_series, SeasonalNaive(), every=1, context_length=1024, horizon=96)
        assert len(store) == 176
        assert all(f.horizon == 96 for f in store.forecasts("DE"))

    def test_daily_issue_count(self, long_series):
        store = rolling_forecast_store(long_series, SeasonalNaive(), every=24, context_length=1024, horizon=96)
        assert len(store) == 8

    def test_short_series(self):
        series = make_series("DE", [100.0] * 1000)
        with pytest.raises(ForecastError, match="shorter than context length"):
            rolling_forecast_store(series, Persistence(), context_length=1024)

    def test_latest_is_staleness_rule(self, long_series):
        store = rolling_forecast_store(long_series, Persistence(), every=24, context_length=1024, horizon=96)
        assert store.latest("DE", 1000) is None
        assert store.latest("DE", 1024).issue_slot == 1024
        assert store.latest("DE", 1047).issue_slot == 1024
        assert store.latest("DE", 1048).issue_slot == 1048
        assert store.latest("DE", 5000).issue_slot == 1192
        assert store.latest("FR", 1100) is None

    def test_perfect_store_matches_history(self, long_series):
        store = rolling_forecast_store(long_series, Perfect(actuals=long_series), every=24,
                                       context_length=1024, horizon=96)
        for f in store.forecasts("DE"):
            assert f.values == long_series.values[f.issue_slot:f.issue_slot + f.horizon]

    def test_csv_round_trip(self, long_series, tmp_path):
        store = rolling_forecast_store(long_series, SeasonalNaive(), every=24, context_length=1024, horizon=96)
        loaded = ForecastStore.from_csv(store.to_csv(tmp_path / "forecasts.csv"))
        assert loaded.regions() == ["DE"]
        assert loaded.forecasts("DE") == store.forecasts("DE")

    def test_csv_rejects_holes(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("region,issue_slot,target_slot,value,method\n"
                        "DE,10,10,1.0,x\nDE,10,12,1.0,x\n", encoding="utf-8")
        with pytest.raises(ForecastError, match="contiguous"):
            ForecastStore.from_csv(path)

    def test_rolling_forecaster_matches_store(self, long_series):
        store = rolling_forecast_store(long_series, SeasonalNaive(), every=24, context_length=1024, horizon=96)
        lazy = RollingForecaster({"DE": long_series}, {"DE": SeasonalNaive()}, every=24,
                                 context_length=1024, horizon=96)
        for slot in (1023, 1024, 1030, 1071, 1072, 1199, 1500):
            assert lazy.latest("DE", slot) == store.latest("DE", slot)
