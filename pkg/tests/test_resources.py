import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compressmetrics.resources import (
    ResourceSummary,
    ResourceTrace,
    TraceError,
    baseline_subtract,
    cpu_utilization,
    ram_summary,
    read_resource_trace,
    summarize,
    write_resource_trace,
)

GB = 1e9


def summary(cpu, peak=1.0, mean=1.0):
    return ResourceSummary(cpu_utilization_pct=cpu, ram_peak=peak, ram_mean=mean, window=(0.0, 1.0))


class TestCpu:
    def test_sixty_then_forty(self):
        trace = ResourceTrace.from_samples([(0, 0, 0), (5, 3, 0), (10, 5, 0)])
        util = cpu_utilization(trace)
        assert util.per_interval.tolist() == [60.0, 40.0]
        assert util.mean_pct == 50.0
        assert util.clamped == 0

    def test_idle(self):
        trace = ResourceTrace.from_samples([(t, 7.5, 0) for t in range(6)])
        assert cpu_utilization(trace).per_interval.tolist() == [0.0] * 5

    def test_saturated(self):
        trace = ResourceTrace.from_samples([(t, t, 0) for t in np.arange(0, 3, 0.5)])
        assert cpu_utilization(trace).per_interval.tolist() == [100.0] * 5

    def test_multi_core_normalised(self):
        trace = ResourceTrace.from_samples([(0, 0, 0), (1, 2, 0)])
        assert cpu_utilization(trace, core_count=4).mean_pct == 50.0

    def test_anomalies_clamped_and_counted(self):
        trace = ResourceTrace.from_samples([(0, 0, 0), (1, 1.5, 0), (2, 1.0, 0), (3, 1.5, 0)])
        util = cpu_utilization(trace)
        assert util.per_interval.tolist() == [100.0, 0.0, 50.0]
        assert util.clamped == 2
        assert summarize(trace).clamped_intervals == 2

    @pytest.mark.parametrize("samples", [[(0, 0, 0)], []])
    def test_needs_two_samples(self, samples):
        with pytest.raises(TraceError):
            cpu_utilization(ResourceTrace.from_samples(samples))

    def test_non_monotone_time(self):
        with pytest.raises(TraceError, match="strictly increasing"):
            ResourceTrace.from_samples([(0, 0, 0), (2, 1, 0), (1, 1, 0)])


class TestRam:
    def test_constant(self):
        trace = ResourceTrace.from_samples([(t, 0, 2.48 * GB) for t in range(10)])
        assert ram_summary(trace) == (2.48 * GB, pytest.approx(2.48 * GB, rel=1e-15))

    def test_single_sample(self):
        assert ram_summary(ResourceTrace.from_samples([(0, 0, 5.0)])) == (5.0, 5.0)

    @pytest.mark.parametrize("n", [2, 3, 11, 1001])
    def test_ramp(self, n):
        # sample-and-hold: the final sample carries no weight, so a uniformly
        # sampled 1 -> 3 GB ramp averages 1 + (n-2)/(n-1) GB, tending to 2 GB
        t = np.linspace(0, 10, n)
        trace = ResourceTrace(t, np.zeros(n), np.linspace(1, 3, n) * GB)
        peak, mean = ram_summary(trace)
        assert peak == 3 * GB
        assert mean == pytest.approx((1 + (n - 2) / (n - 1)) * GB, rel=1e-12)
        assert abs(mean - 2 * GB) <= 2 * GB / (n - 1) + 1e-6

    def test_ramp_with_terminal_hold(self):
        # once the ramp's last value is held for one more interval the mean is
        # the analytic 2 GB when sampled at the interval midpoints
        n = 100
        t = np.arange(n + 1, dtype=float)
        ram = np.append(1 + 2 * (np.arange(n) + 0.5) / n, 3.0) * GB
        assert ram_summary(ResourceTrace(t, np.zeros(n + 1), ram))[1] == pytest.approx(2 * GB, rel=1e-12)

    def test_empty(self):
        with pytest.raises(TraceError):
            ram_summary(ResourceTrace.from_samples([]))


class TestBaseline:
    def test_table_figure(self):
        assert baseline_subtract(summary(49.6), summary(4.0)).cpu_utilization_pct == 45.6

    def test_identical(self):
        s = summary(30.0, 4.0, 3.0)
        out = baseline_subtract(s, s)
        assert (out.cpu_utilization_pct, out.ram_peak, out.ram_mean) == (0.0, 0.0, 0.0)
        assert out.warnings == ()

    def test_floor_with_warning(self):
        out = baseline_subtract(summary(3.0), summary(10.0))
        assert out.cpu_utilization_pct == 0.0
        assert any("cpu_utilization_pct" in w for w in out.warnings)

    def test_mean_never_exceeds_peak(self):
        out = baseline_subtract(summary(10, peak=5.0, mean=4.0), summary(1, peak=4.5, mean=0.5))
        assert out.ram_mean <= out.ram_peak


@st.composite
def traces(draw, start=0.0, rt0=0.0):
    n = draw(st.integers(2, 12))
    dts = draw(st.lists(st.floats(0.1, 5.0), min_size=n - 1, max_size=n - 1))
    fracs = draw(st.lists(st.floats(0.0, 1.0), min_size=n - 1, max_size=n - 1))
    t = np.concatenate([[start], start + np.cumsum(dts)])
    rt = np.concatenate([[rt0], rt0 + np.cumsum(np.array(dts) * np.array(fracs))])
    return ResourceTrace(t, rt, np.full(n, 1.0))


@settings(max_examples=200, deadline=None)
@given(traces(), st.data())
def test_concatenation_is_duration_weighted(first, data):
    second = data.draw(traces(start=float(first.t[-1]), rt0=float(first.cpu_rt[-1])))
    joined = ResourceTrace(np.concatenate([first.t, second.t[1:]]),
                           np.concatenate([first.cpu_rt, second.cpu_rt[1:]]),
                           np.concatenate([first.ram, second.ram[1:]]))
    d1 = first.t[-1] - first.t[0]
    d2 = second.t[-1] - second.t[0]
    expected = (cpu_utilization(first).mean_pct * d1 + cpu_utilization(second).mean_pct * d2) / (d1 + d2)
    assert cpu_utilization(joined).mean_pct == pytest.approx(expected, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(traces(), st.floats(-1e3, 1e3))
def test_time_shift_invariance(trace, shift):
    shifted = ResourceTrace(trace.t + shift, trace.cpu_rt, trace.ram)
    assert cpu_utilization(shifted).per_interval == pytest.approx(cpu_utilization(trace).per_interval, rel=1e-9, abs=1e-7)


@settings(max_examples=200, deadline=None)
@given(traces())
def test_intervals_bounded(trace):
    util = cpu_utilization(trace)
    assert np.all((util.per_interval >= 0) & (util.per_interval <= 100))


class TestFile:
    def test_round_trip(self):
        trace = ResourceTrace([0.0, 0.5, 1.25], [0.0, 0.1, 0.9], [1e9, 1.5e9, 1.2e9], gpu_util=[10, 20, 30.5])
        again = read_resource_trace(io.StringIO(write_resource_trace(trace)))
        for name in ("t", "cpu_rt", "ram", "gpu_util"):
            assert np.array_equal(getattr(again, name), getattr(trace, name))

    def test_gpu_mean(self):
        text = "t_s,cpu_rt_s,ram_bytes,gpu_util_pct\n0,0,1,20\n1,0.5,1,60\n3,1,1,0\n"
        s = summarize(read_resource_trace(io.StringIO(text)))
        assert s.gpu_utilization_pct == pytest.approx((20 * 1 + 60 * 2) / 3)

    @pytest.mark.parametrize("text, message", [
        ("", "empty"),
        ("time,cpu,ram\n0,0,0\n", "unexpected header"),
        ("t_s,cpu_rt_s,ram_bytes\n0,0\n", "line 2"),
        ("t_s,cpu_rt_s,ram_bytes\n0,0,x\n", "line 2"),
    ])
    def test_errors(self, text, message):
        with pytest.raises(TraceError, match=message):
            read_resource_trace(io.StringIO(text))
