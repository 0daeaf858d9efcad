import numpy as np
import pytest

from models.errors import PlacementError, PowerModelError
from models.power import Datacenter, HostSpec, PowerModel
from models.vm import ScheduleDecision, ScheduleMode, VmRequest
from services.power import power_at, power_curve
from services.simulator import datacenters_for, place_vms, simulate
from tests.conftest import make_series

LINEAR = PowerModel(name="linear", points=((0.0, 100.0), (1.0, 300.0)))


def _vm(vm_id, cores=16, duration=2, arrival=0):
    return VmRequest(id=vm_id, min_cpu=cores, min_ram=4.0, duration=duration, deadline=arrival + duration + 24,
                     arrival=arrival)


def _decide(vm, region, start=None, mode=ScheduleMode.OPTIMIZED):
    start = vm.arrival if start is None else start
    return ScheduleDecision(vm_id=vm.id, region=region, start_slot=start, duration=vm.duration,
                            deadline=vm.deadline, arrival=vm.arrival, cost=0.0, mode=mode)


class TestPower:
    def test_linear_midpoint(self):
        assert power_at(LINEAR, 0.5) == 200.0
        assert power_at(LINEAR, 0.0) == 100.0

    def test_specpower_table(self, power_model):
        assert len(power_model.points) == 11
        assert power_at(power_model, 0.25) == pytest.approx(200.5)

    def test_curve_matches_pointwise(self, power_model):
        utils = np.array([[0.0, 0.25], [0.5, 1.0]])
        expected = [[power_at(power_model, u) for u in row] for row in utils]
        assert power_curve(power_model, utils).tolist() == expected

    def test_out_of_range(self):
        with pytest.raises(PowerModelError):
            power_at(LINEAR, 1.5)

    def test_decreasing_model_rejected(self):
        with pytest.raises(ValueError):
            PowerModel(name="bad", points=((0.0, 300.0), (1.0, 100.0)))


class TestPlacement:
    @pytest.fixture
    def dc(self):
        return Datacenter(region="A", host=HostSpec(cores=32, power=LINEAR), hosts=4)

    def test_exact_fit(self, dc):
        vms = {v.id: v for v in (_vm("a"), _vm("b"))}
        placements = place_vms(dc, [_decide(v, "A") for v in vms.values()], vms)
        assert placements.assignments == {"a": 0, "b": 0}

    def test_first_fit_trace(self, dc):
        vms = {v.id: v for v in (_vm("a"), _vm("b"), _vm("c"))}
        placements = place_vms(dc, [_decide(v, "A") for v in vms.values()], vms)
        assert [placements.assignments[k] for k in ("a", "b", "c")] == [0, 0, 1]

    def test_largest_first_within_a_slot(self, dc):
        vms = {v.id: v for v in (_vm("small", cores=8), _vm("big", cores=32))}
        placements = place_vms(dc, [_decide(v, "A") for v in vms.values()], vms)
        assert placements.assignments == {"big": 0, "small": 1}

    def test_host_frees_after_lifetime(self, dc):
        vms = {v.id: v for v in (_vm("early", cores=32, duration=2), _vm("late", cores=32, duration=2, arrival=2))}
        placements = place_vms(dc, [_decide(v, "A") for v in vms.values()], vms)
        assert placements.assignments == {"early": 0, "late": 0}

    def test_oversize_vm(self, dc):
        vm = _vm("huge", cores=64)
        with pytest.raises(PlacementError, match="larger than a host"):
            place_vms(dc, [_decide(vm, "A")], {vm.id: vm})

    def test_full_datacenter_rejects(self):
        dc = Datacenter(region="A", host=HostSpec(cores=32, power=LINEAR), hosts=1)
        vms = {v.id: v for v in (_vm("a", cores=32), _vm("b", cores=32))}
        placements = place_vms(dc, [_decide(v, "A") for v in vms.values()], vms)
        assert placements.rejected == ["b"]


class TestSimulate:
    def test_hand_computed_emissions(self):
        host = HostSpec(cores=1, ram_gb=8.0, power=LINEAR)
        vm = _vm("a", cores=1)
        report = simulate([Datacenter(region="A", host=host, hosts=1)], [_decide(vm, "A")], {"a": vm},
                          {"A": make_series("A", [100, 300])})
        # 0.2 kW above idle for two hours
        assert report.total_gco2 == pytest.approx(80.0)
        assert report.vm_gco2["a"] == pytest.approx(80.0)
        assert report.region_jobs == {"A": 1}

    def test_count_idle_charges_every_host(self):
        host = HostSpec(cores=1, ram_gb=8.0, power=LINEAR)
        vm = _vm("a", cores=1, duration=1)
        dcs = [Datacenter(region="A", host=host, hosts=2)]
        ci = {"A": make_series("A", [100, 300])}
        attributed = simulate(dcs, [_decide(vm, "A")], {"a": vm}, ci, span=(0, 2))
        idle = simulate(dcs, [_decide(vm, "A")], {"a": vm}, ci, count_idle=True, span=(0, 2))
        assert attributed.total_gco2 == pytest.approx(20.0)
        # slot 0: one busy and one idle host, slot 1: two idle hosts
        assert idle.total_gco2 == pytest.approx(0.4 * 100 + 0.2 * 300)
        assert idle.count_idle

    def test_no_vms(self, power_model):
        host = HostSpec(power=power_model)
        report = simulate(datacenters_for(["A", "B"], host, 10), [], {}, {})
        assert report.total_gco2 == 0.0
        assert report.scheduled == 0

    def test_constant_ci_makes_placement_irrelevant(self, power_model):
        rng = np.random.default_rng(4)
        regions = ["A", "B", "C"]
        vms = [_vm(f"vm{i}", cores=int(rng.choice([1, 2, 4, 8])), duration=int(rng.integers(1, 12)),
                   arrival=int(rng.integers(0, 24))) for i in range(60)]
        by_id = {v.id: v for v in vms}
        ci = {r: make_series(r, [250.0] * 72) for r in regions}
        host = HostSpec(power=power_model)
        cycled = [_decide(v, regions[i % 3], mode=ScheduleMode.ROUND_ROBIN) for i, v in enumerate(vms)]
        packed = [_decide(v, "B", start=v.arrival + 3) for v in vms]
        a = simulate(datacenters_for(regions, host, 50), cycled, by_id, ci)
        b = simulate(datacenters_for(regions, host, 50), packed, by_id, ci)
        assert a.total_gco2 == pytest.approx(b.total_gco2, rel=1e-12)

    def test_totals_are_conserved(self, power_model):
        rng = np.random.default_rng(8)
        regions = ["A", "B"]
        vms = [_vm(f"vm{i}", cores=int(rng.choice([2, 4, 16])), duration=int(rng.integers(1, 10)),
                   arrival=int(rng.integers(0, 24))) for i in range(40)]
        ci = {r: make_series(r, rng.uniform(50, 600, size=48)) for r in regions}
        decisions = [_decide(v, regions[i % 2]) for i, v in enumerate(vms)]
        report = simulate(datacenters_for(regions, HostSpec(power=power_model), 20), decisions,
                          {v.id: v for v in vms}, ci, unschedulable=3, labels={"policy": "p", "batch": 7})
        assert sum(report.region_gco2.values()) == pytest.approx(report.total_gco2)
        assert sum(report.vm_gco2.values()) == pytest.approx(report.total_gco2)
        assert sum(report.region_jobs.values()) == report.scheduled == 40
        assert sum(report.delay_histogram.values()) == 40
        assert (report.unschedulable, report.policy, report.batch) == (3, "p", 7)

    def test_decision_for_unknown_region(self, power_model):
        vm = _vm("a")
        with pytest.raises(PlacementError):
            simulate(datacenters_for(["A"], HostSpec(power=power_model), 1), [_decide(vm, "Z")], {"a": vm}, {})
