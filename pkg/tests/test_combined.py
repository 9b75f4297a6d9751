import dataclasses
import json
import math
from fractions import Fraction
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compressmetrics.combined import (
    MetricReport,
    RatioBindings,
    RatioError,
    RatioSet,
    ReportFormatError,
    compute_ratios,
    ocs,
    ocs_value,
    parse_report,
    rank_by_ocs,
    ratio_set_from_dict,
    ratio_set_to_dict,
    resolve_zeta,
    write_report,
)
from compressmetrics.reference import reference_report, reference_reports

# Hand evaluation over the printed table values:
#   P = 70.1/70.3, S = 57.92/14.48 = 4, C = 44.7/11.3, E = 2.2/0.8 = 2.75
#   OCS = P^2 (P + S + C + E - 4)
PTQ_P = Fraction(701, 703)
PTQ_C = Fraction(447, 113)
PTQ_OCS_EXACT = PTQ_P**2 * (PTQ_P + 4 + PTQ_C + Fraction(11, 4) - 4)
PTQ_OCS = 7.659140832199642


def ratio_set(P=1.0, S=1.0, C=1.0, E=1.0, zeta=1.0):
    return RatioSet(P, S, C, E, zeta, RatioBindings())


def simple_report(name, acc=0.7, chats=100, disk=1000, energy=2.0, **kw):
    return MetricReport(name=name, accuracy=acc, accuracy_kind="top1", chats_dense=chats,
                        disk_size_bytes=disk, energy_per_inference_j=energy, **kw)


class TestPtq:
    def setup_method(self):
        self.baseline = reference_report("resnet18_imagenet", "None (FP32)")
        self.ptq = reference_report("resnet18_imagenet", "PTQ (INT8)")

    def test_pinned_constant(self):
        assert PTQ_OCS_EXACT == Fraction(1202775200645, 157037875004)
        assert float(PTQ_OCS_EXACT) == pytest.approx(PTQ_OCS, rel=1e-15)

    def test_ratios(self):
        r = compute_ratios(self.baseline, self.ptq)
        assert r.P == pytest.approx(0.99716, rel=1e-5)
        assert r.P == pytest.approx(float(PTQ_P), rel=1e-9)
        assert r.S == pytest.approx(4.0, rel=1e-9)
        assert r.C == pytest.approx(float(PTQ_C), rel=1e-9)
        assert r.C == pytest.approx(3.9558, rel=1e-4)
        assert r.E == pytest.approx(2.75, rel=1e-9)
        assert r.fields_used == {"P": "accuracy", "S": "chats_dense", "C": "disk_size_bytes",
                                 "E": "energy_per_inference_j"}

    def test_ocs(self):
        assert ocs(compute_ratios(self.baseline, self.ptq)).value == pytest.approx(PTQ_OCS, rel=1e-9)

    def test_zeta_four(self):
        r1 = compute_ratios(self.baseline, self.ptq, zeta=1.0)
        r4 = compute_ratios(self.baseline, self.ptq, zeta=4.0)
        assert r4.S == pytest.approx(16.0, rel=1e-12)
        assert (r4.P, r4.C, r4.E) == (r1.P, r1.C, r1.E)
        assert r1.with_zeta(4.0).S == pytest.approx(r4.S, rel=1e-12)

    def test_pruned_rows_use_effective_fields(self):
        gup = reference_report("resnet18_imagenet", "GUP_L1 (FP32)")
        r = compute_ratios(self.baseline, gup)
        assert r.fields_used["S"] == "chats_effective"
        assert r.S == pytest.approx(4.0)
        dense = compute_ratios(self.baseline, gup, RatioBindings(dense_only=True))
        assert dense.S == 1.0 and dense.fields_used["S"] == "chats_dense"


class TestRatioErrors:
    def test_identity(self):
        rep = simple_report("m")
        r = compute_ratios(rep, rep)
        assert (r.P, r.S, r.C, r.E) == (1.0, 1.0, 1.0, 1.0)
        assert ocs(r).value == 0.0

    def test_missing_field_named(self):
        with pytest.raises(RatioError) as err:
            compute_ratios(simple_report("a"), simple_report("b", energy=None))
        assert err.value.field == "energy_per_inference_j"

    def test_zero_denominator(self):
        with pytest.raises(RatioError, match="zero"):
            compute_ratios(simple_report("a"), simple_report("b", chats=0))

    def test_mismatched_kinds(self):
        cand = dataclasses.replace(simple_report("b"), accuracy_kind="map")
        with pytest.raises(RatioError, match="map"):
            compute_ratios(simple_report("a"), cand)

    def test_bad_zeta(self):
        with pytest.raises(RatioError):
            compute_ratios(simple_report("a"), simple_report("b"), zeta=0)

    @pytest.mark.parametrize("binding", ["speed=flops", "size=weights", "efficiency=heat", "colour=red"])
    def test_bad_bindings(self, binding):
        with pytest.raises(ValueError):
            RatioBindings.parse(binding)

    def test_parse_bindings(self):
        b = RatioBindings.parse("performance=map, speed=latency,size=cpu_util,dense_only=true")
        assert b == RatioBindings("map", "latency", "cpu_util", "energy", True)


class TestOcs:
    def test_identity_is_zero(self):
        assert ocs(ratio_set()).value == 0.0

    @pytest.mark.parametrize("S, C, E", [(1, 1, 1), (100, 0.01, 5), (0.5, 0.5, 0.5)])
    def test_p_zero_annihilates(self, S, C, E):
        assert ocs(ratio_set(0.0, S, C, E)).value == 0.0

    def test_matches_formula(self):
        assert ocs_value(0.5, 2, 3, 4) == 0.25 * (-0.5 + 1 + 2 + 3)


above = st.floats(1.0, 50.0, exclude_min=True)
below = st.floats(1e-3, 1.0, exclude_max=True)
positive = st.floats(1e-3, 50.0)


@settings(max_examples=1000)
@given(above, above, above, above)
def test_all_above_one_positive(P, S, C, E):
    assert ocs(ratio_set(P, S, C, E)).value > 0


@settings(max_examples=1000)
@given(below, below, below, below)
def test_all_below_one_negative(P, S, C, E):
    assert ocs(ratio_set(P, S, C, E)).value < 0


@settings(max_examples=1000)
@given(positive, positive, positive)
def test_p_zero_always_zero(S, C, E):
    assert ocs(ratio_set(0.0, S, C, E)).value == 0.0


@settings(max_examples=1000)
@given(st.sampled_from(["S", "C", "E"]), positive, positive, positive, positive, st.floats(1e-3, 10.0))
def test_strictly_increasing_in_s_c_e(which, P, S, C, E, bump):
    r = ratio_set(P, S, C, E)
    bigger = dataclasses.replace(r, **{which: getattr(r, which) + bump})
    # exact comparison through Fractions avoids float ties
    def exact(x):
        return Fraction(x.P) ** 2 * (Fraction(x.P) + Fraction(x.S) + Fraction(x.C) + Fraction(x.E) - 4)
    assert exact(bigger) > exact(r)
    assert ocs(bigger).value >= ocs(r).value


@settings(max_examples=300)
@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_zeta_linearity(a, b):
    base = simple_report("base", chats=300)
    cand = simple_report("c", chats=70, acc=0.6, disk=500, energy=1.5)
    ra = compute_ratios(base, cand, zeta=a)
    rb = compute_ratios(base, cand, zeta=b)
    assert ra.with_zeta(b).S == pytest.approx(rb.S, rel=1e-12)
    assert (ra.P, ra.C, ra.E) == (rb.P, rb.C, rb.E)


class TestRanking:
    def test_single_self(self):
        rep = simple_report("m")
        result = rank_by_ocs(rep, [rep])
        assert result.names() == ["m"] and result.entries[0][1].value == 0.0

    def test_dominator_first(self):
        base = simple_report("base")
        weak = simple_report("weak", acc=0.69, chats=90, disk=900, energy=1.9)
        strong = simple_report("strong", acc=0.7, chats=50, disk=400, energy=1.0)
        assert rank_by_ocs(base, [weak, strong]).names() == ["strong", "weak"]

    def test_ties_broken_by_name(self):
        base = simple_report("base")
        a = simple_report("b-model")
        b = simple_report("a-model")
        assert rank_by_ocs(base, [a, b]).names() == ["a-model", "b-model"]

    def test_failures_do_not_abort(self):
        base = simple_report("base")
        ok = simple_report("ok", chats=50)
        bad = simple_report("bad", energy=None)
        result = rank_by_ocs(base, [bad, ok])
        assert result.names() == ["ok"]
        assert "bad" in result.failures

    def test_empty(self):
        with pytest.raises(ValueError):
            rank_by_ocs(simple_report("a"), [])

    @settings(max_examples=50, deadline=None)
    @given(st.permutations(list(range(7))))
    def test_order_invariant(self, perm):
        baseline, cands = reference_reports("binary_nets_imagenet")
        shuffled = [cands[i] for i in perm]
        assert rank_by_ocs(baseline, shuffled).names() == rank_by_ocs(baseline, cands).names()


def hand_scores(table):
    """Exact OCS per row straight from the bundled table (top1, chats, disk, energy)."""
    doc = json.loads(resources.files("compressmetrics").joinpath("data/reference_results.json").read_text())[table]
    rows = {r["name"]: r for r in doc["rows"]}
    base = rows.pop(doc["baseline"])

    def q(v):
        return Fraction(str(v))

    out = {}
    for name, r in rows.items():
        P = q(r["accuracy_pct"]) / q(base["accuracy_pct"])
        S = q(base["chats_g"]) / q(r["chats_g"])
        C = q(base["disk_mb"]) / q(r["disk_mb"])
        E = q(base["energy_j"]) / q(r["energy_j"])
        out[name] = P**2 * (P + S + C + E - 4)
    return out


def test_binary_networks_ranking_matches_hand_evaluation():
    baseline, cands = reference_reports("binary_nets_imagenet")
    result = rank_by_ocs(baseline, cands)
    exact = hand_scores("binary_nets_imagenet")
    assert len(result.entries) == 7
    assert result.names() == sorted(exact, key=lambda n: -exact[n])
    for name, score in result.entries:
        assert score.value == pytest.approx(float(exact[name]), rel=1e-9)
    values = [s.value for _, s in result.entries]
    assert len(set(values)) == 7


def test_resnet18_table_ranking():
    baseline, cands = reference_reports("resnet18_imagenet")
    result = rank_by_ocs(baseline, cands)
    assert result.names()[0] == "BNN"
    assert dict((n, s.value) for n, s in result.entries)["PTQ (INT8)"] == pytest.approx(PTQ_OCS, rel=1e-9)


def test_resolve_zeta():
    assert resolve_zeta(None, None) == 1.0
    assert resolve_zeta(None, "turing") == 4.0
    assert resolve_zeta(2.5, "turing") == 2.5
    assert resolve_zeta(None, "lab", {"lab": 3.0}) == 3.0
    with pytest.raises(ValueError):
        resolve_zeta(None, "unknown")


def test_ratio_set_round_trip():
    r = ratio_set(0.9, 2.0, 3.0, 4.0, zeta=2.0)
    assert ratio_set_from_dict(json.loads(json.dumps(ratio_set_to_dict(r)))) == r


# --------------------------------------------------------------------------
# report serialization
# --------------------------------------------------------------------------


opt_nonneg = st.none() | st.floats(0, 1e12, allow_nan=False)
opt_int = st.none() | st.integers(0, 10**12)


@st.composite
def reports(draw):
    acc = draw(st.none() | st.floats(0, 1))
    return MetricReport(
        name=draw(st.text(min_size=1, max_size=12)),
        accuracy=acc,
        accuracy_kind=None if acc is None else draw(st.sampled_from(["top1", "top5", "map"])),
        latency_s=draw(opt_nonneg),
        macs_dense=draw(opt_int),
        macs_effective=draw(opt_nonneg),
        chats_dense=draw(opt_int),
        chats_effective=draw(opt_nonneg),
        disk_size_bytes=draw(opt_int),
        disk_size_tag=draw(st.none() | st.sampled_from(["measured", "estimated"])),
        params_total=draw(opt_int),
        cpu_utilization_pct=draw(st.none() | st.floats(0, 100)),
        ram_peak_bytes=draw(opt_nonneg),
        energy_per_inference_j=draw(opt_nonneg),
        mean_power_w=draw(opt_nonneg),
        provenance=draw(st.dictionaries(st.sampled_from(["accuracy", "latency_s"]),
                                        st.fixed_dictionaries({"file": st.text(max_size=8), "sha256": st.just("0" * 64)}))),
        warnings=tuple(draw(st.lists(st.text(max_size=10), max_size=3))),
    )


@settings(max_examples=300)
@given(reports())
def test_report_round_trip(report):
    assert parse_report(write_report(report)) == report


class TestReportValidation:
    @pytest.mark.parametrize("kw", [
        {"latency_s": -1.0},
        {"energy_per_inference_j": math.inf},
        {"accuracy": 70.3, "accuracy_kind": "top1"},
        {"accuracy": 0.5},
    ])
    def test_rejects(self, kw):
        with pytest.raises(ReportFormatError):
            MetricReport(name="m", **kw)

    @pytest.mark.parametrize("text", [
        "[1, 2]",
        "{not json",
        '{"name": "m", "format_version": 99}',
        '{"name": "m", "format_version": 1, "colour": "red"}',
        '{"format_version": 1}',
    ])
    def test_parse_rejects(self, text):
        with pytest.raises(ReportFormatError):
            parse_report(text)

    def test_sparsity(self):
        rep = MetricReport(name="m", params_total=10, params_nonzero=4)
        assert rep.sparsity == pytest.approx(0.6)
        assert rep.declares_sparsity
