import dataclasses
import math
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Polygon

from compressmetrics.combined import MetricReport, RatioBindings
from compressmetrics.reference import reference_reports
from compressmetrics.report import (
    MAX_RADAR_SERIES,
    ChartError,
    ChartSpec,
    LogFormatError,
    accuracy_speed_spec,
    bar_spec,
    build_comparison,
    parse_comparison_log,
    radar_geometry,
    radar_spec,
    render,
    render_accuracy_speed,
    render_bar,
    render_radar,
    write_comparison_log,
)

NS = {"svg": "http://www.w3.org/2000/svg"}
PTQ_OCS = 7.659140832199642


def parse_svg(text):
    root = ET.fromstring(text.encode("utf-8"))
    assert root.tag == "{http://www.w3.org/2000/svg}svg"
    return root


def points(poly):
    return [tuple(map(float, p.split(","))) for p in poly.get("points").split()]


@pytest.fixture(scope="module")
def case1():
    baseline, cands = reference_reports("resnet18_imagenet")
    report, _ = build_comparison(baseline, cands)
    return baseline, cands, report


class TestRadar:
    def test_case_study_structure(self, case1):
        _, cands, report = case1
        root = parse_svg(render_radar(radar_spec(report)))
        assert len(root.findall(".//svg:line[@class='axis']", NS)) == 5
        assert len(root.findall(".//svg:text[@class='axis-label']", NS)) == 5
        assert len(root.findall(".//svg:text[@class='legend-entry']", NS)) == len(cands)
        assert len(root.findall(".//svg:polygon[@class='series']", NS)) == len(cands)

    def test_regular_polygon(self):
        spec = ChartSpec("radar", tuple("ABCDE"), (("flat", (2.0,) * 5),))
        root = parse_svg(render_radar(spec))
        [poly] = root.findall(".//svg:polygon[@class='series']", NS)
        pts = points(poly)
        c = spec.size / 2
        radii = [math.hypot(x - c, y - c) for x, y in pts]
        sides = [math.dist(pts[i], pts[(i + 1) % 5]) for i in range(5)]
        assert max(radii) - min(radii) < 2e-3
        assert max(sides) - min(sides) < 4e-3
        # full scale is max * 1.1, so every vertex sits at 1/1.1 of the radius
        assert radii[0] == pytest.approx(spec.size * 0.35 / 1.1, abs=1e-3)

    def test_first_axis_at_twelve_clockwise(self):
        spec = ChartSpec("radar", ("up", "right-ish", "left-ish"), (("s", (1.0, 1.0, 1.0)),))
        pts = radar_geometry(spec)["s"]
        c = spec.size / 2
        assert pts[0][0] == pytest.approx(c) and pts[0][1] < c
        assert pts[1][0] > c  # clockwise in screen coordinates
        assert pts[2][0] < c

    @pytest.mark.parametrize("series, axes", [
        ((), tuple("ABC")),
        (tuple((f"s{i}", (1.0, 1.0, 1.0)) for i in range(MAX_RADAR_SERIES + 1)), tuple("ABC")),
        ((("s", (1.0, 1.0)),), ("A", "B")),
        ((("s", (1.0,) * 9),), tuple("ABCDEFGHI")),
    ])
    def test_preconditions(self, series, axes):
        with pytest.raises(ChartError):
            render_radar(ChartSpec("radar", axes, series))

    def test_too_many_series_points_to_filtering(self):
        spec = ChartSpec("radar", tuple("ABC"), tuple((f"s{i}", (1.0, 1.0, 1.0)) for i in range(7)))
        with pytest.raises(ChartError, match="rank_by_ocs"):
            render_radar(spec)

    def test_axis_mismatch(self):
        with pytest.raises(ChartError):
            ChartSpec("radar", tuple("ABC"), (("s", (1.0, 2.0)),))

    def test_non_finite(self):
        with pytest.raises(ChartError):
            ChartSpec("bar", ("OCS",), (("s", (math.nan,)),))

    def test_ocs_axis_normalised(self, case1):
        _, _, report = case1
        spec = radar_spec(report)
        ocs_axis = [values[4] for _, values in spec.series]
        assert min(ocs_axis) == 0.0 and max(ocs_axis) == 1.0
        assert any(f"OCS {PTQ_OCS:.3f}" in t for t in spec.legend)

    def test_log_scale_renders(self, case1):
        _, _, report = case1
        parse_svg(render_radar(radar_spec(report, log_scale=True)))


positive = st.floats(0.01, 20.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 8).flatmap(lambda n: st.tuples(
    st.lists(positive, min_size=n, max_size=n), st.lists(st.floats(0.0, 5.0), min_size=n, max_size=n))))
def test_dominating_polygon_contains(args):
    inner, bumps = args
    outer = [a + b for a, b in zip(inner, bumps)]
    axes = tuple(f"a{i}" for i in range(len(inner)))
    geom = radar_geometry(ChartSpec("radar", axes, (("outer", tuple(outer)), ("inner", tuple(inner)))))
    big, small = Polygon(geom["outer"]), Polygon(geom["inner"])
    assert big.buffer(1e-6).contains(small)


class TestBar:
    def bars(self, values):
        spec = ChartSpec("bar", ("OCS",), tuple((f"m{i}", (v,)) for i, v in enumerate(values)))
        root = parse_svg(render_bar(spec))
        return root.findall(".//svg:rect[@class='bar']", NS), root

    def test_sorted_descending(self):
        bars, _ = self.bars([3.0, 1.0, 2.0])
        assert [float(b.get("data-value")) for b in bars] == [3.0, 2.0, 1.0]
        xs = [float(b.get("x")) for b in bars]
        assert xs == sorted(xs)

    def test_single_zero(self):
        bars, root = self.bars([0.0])
        [bar] = bars
        assert float(bar.get("height")) == 0.0
        zero = root.find(".//svg:line[@class='zero-axis']", NS)
        assert float(bar.get("y")) == pytest.approx(float(zero.get("y1")), abs=1e-3)

    def test_mixed_signs(self):
        bars, root = self.bars([2.0, -1.0])
        y0 = float(root.find(".//svg:line[@class='zero-axis']", NS).get("y1"))
        pos, neg = bars
        assert float(pos.get("y")) + float(pos.get("height")) == pytest.approx(y0, abs=1e-3)
        assert float(pos.get("y")) < y0
        assert float(neg.get("y")) == pytest.approx(y0, abs=1e-3)
        assert float(neg.get("height")) > 0
        # heights proportional to value
        assert float(pos.get("height")) == pytest.approx(2 * float(neg.get("height")), rel=1e-3)

    def test_wrong_kind(self):
        with pytest.raises(ChartError):
            render_bar(ChartSpec("radar", tuple("ABC"), (("s", (1.0, 1.0, 1.0)),)))


class TestScatter:
    def markers(self, series):
        spec = ChartSpec("accuracy_vs_speed", ("CHATS", "Accuracy", "Disk"), tuple(series))
        return parse_svg(render_accuracy_speed(spec)).findall(".//svg:circle[@class='marker']", NS)

    def test_equal_sizes(self):
        a, b = self.markers([("a", (1.0, 0.5, 10.0)), ("b", (2.0, 0.7, 10.0))])
        assert a.get("r") == b.get("r")

    def test_sqrt_rule(self):
        a, b = self.markers([("a", (1.0, 0.5, 4.0)), ("b", (2.0, 0.7, 1.0))])
        assert float(a.get("r")) / float(b.get("r")) == pytest.approx(2.0, rel=1e-6)

    def test_non_positive_size(self):
        with pytest.raises(ChartError):
            self.markers([("a", (1.0, 0.5, 0.0))])

    def test_case_study(self, case1):
        baseline, cands, _ = case1
        root = parse_svg(render(accuracy_speed_spec([baseline, *cands])))
        assert len(root.findall(".//svg:circle[@class='marker']", NS)) == 6
        assert len(root.findall(".//svg:text[@class='legend-entry']", NS)) == 6
        labels = [t.text for t in root.findall(".//svg:text[@class='axis-label']", NS)]
        assert labels == ["CHATS", "Accuracy (top1)"]

    def test_missing_field(self):
        with pytest.raises(ChartError):
            accuracy_speed_spec([MetricReport(name="m", accuracy=0.5, accuracy_kind="top1")])


class TestDeterminism:
    def test_identical_specs_identical_bytes(self, case1):
        baseline, cands, report = case1
        for make in (lambda: radar_spec(report), lambda: bar_spec(report),
                     lambda: accuracy_speed_spec([baseline, *cands])):
            assert render(make()) == render(make())

    def test_no_timestamp_in_charts(self, case1):
        _, _, report = case1
        stamped = dataclasses.replace(report, generated_at="2024-01-01T00:00:00Z")
        assert render(radar_spec(stamped)) == render(radar_spec(report))


class TestLog:
    def test_ptq_round_trip(self, case1):
        _, _, report = case1
        again = parse_comparison_log(write_comparison_log(report))
        assert again == report
        ptq = next(e for e in again.entries if e.name == "PTQ (INT8)")
        assert ptq.score.value == pytest.approx(PTQ_OCS, rel=1e-9)

    def test_identity(self):
        rep = MetricReport(name="m", accuracy=0.5, accuracy_kind="top1", chats_dense=10,
                           disk_size_bytes=5, energy_per_inference_j=1.0)
        other = MetricReport(**{**rep.__dict__, "name": "same"})
        report, _ = build_comparison(rep, [other])
        again = parse_comparison_log(write_comparison_log(report))
        [entry] = again.entries
        r = entry.score.ratio_set
        assert entry.score.value == 0.0 and (r.P, r.S, r.C, r.E) == (1.0, 1.0, 1.0, 1.0)

    def test_bindings_and_zeta_embedded(self, case1):
        baseline, cands, _ = case1
        report, _ = build_comparison(baseline, cands, RatioBindings(size="params"), zeta=4.0)
        text = write_comparison_log(report)
        assert '"zeta": 4.0' in text and '"size": "params"' in text

    def test_empty_candidates(self):
        rep = MetricReport(name="m", accuracy=0.5, accuracy_kind="top1")
        with pytest.raises(ValueError):
            build_comparison(rep, [])

    def test_tampered_ocs(self, case1):
        _, _, report = case1
        text = write_comparison_log(report).replace(repr(PTQ_OCS), "9.5")
        with pytest.raises(LogFormatError, match="disagrees"):
            parse_comparison_log(text)

    @pytest.mark.parametrize("text", ["{", '{"format_version": 7}'])
    def test_bad_logs(self, text):
        with pytest.raises(LogFormatError):
            parse_comparison_log(text)


@st.composite
def comparisons(draw):
    n = draw(st.integers(1, 5))
    base = MetricReport(name="base", accuracy=draw(st.floats(0.05, 1)), accuracy_kind="top1",
                        chats_dense=draw(st.integers(1, 10**12)), disk_size_bytes=draw(st.integers(1, 10**9)),
                        energy_per_inference_j=draw(st.floats(1e-3, 100)))
    cands = [
        MetricReport(name=f"c{i}", accuracy=draw(st.floats(0, 1)), accuracy_kind="top1",
                     chats_dense=draw(st.integers(1, 10**12)), disk_size_bytes=draw(st.integers(1, 10**9)),
                     energy_per_inference_j=draw(st.floats(1e-3, 100)))
        for i in range(n)
    ]
    zeta = draw(st.floats(0.1, 8))
    stamp = draw(st.none() | st.just("2024-05-01T12:00:00Z"))
    return build_comparison(base, cands, zeta=zeta, generated_at=stamp)[0]


@settings(max_examples=200, deadline=None)
@given(comparisons())
def test_log_round_trip(report):
    assert parse_comparison_log(write_comparison_log(report)) == report
