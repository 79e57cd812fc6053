import json

import numpy as np
import pytest

from minifol.autodiff import map_values
from minifol.errors import DimensionError
from minifol.lemma import (
    AgreementReport,
    FormSample,
    check_closedness,
    check_linear_harmonicity,
    form_from_components,
    form_from_map,
    load_corpus,
    minimality_agreement,
    reconstruct_potential,
    rectangle_loop_integral,
)
from minifol.mapdef import load_map


def make_map(name, n, m, components, lo, hi):
    return load_map(
        {
            "name": name,
            "n": n,
            "m": m,
            "components": components,
            "domain": {"min": list(lo), "max": list(hi)},
        }
    )


HELICOID = make_map(
    "helicoid", 3, 1, ["atan2(x2, x1) - x3"], [0.5, 0.5, -3.0], [2.0, 2.0, 3.0]
)
PARABOLic = make_map("bowl", 2, 1, ["x1^2 + x2^2"], [-2, -2], [2, 2])


def angular_form(probe_count=6):
    return form_from_components(
        2,
        1,
        ["-x2/(x1^2 + x2^2)", "x1/(x1^2 + x2^2)"],
        [-2, -2],
        [2, 2],
        probe_count=probe_count,
        name="angular",
    )


class TestFormSample:
    def test_component_count_matches_binomial(self):
        form = form_from_map(HELICOID)
        assert form.components.shape[1] == 3
        lines = make_map("lines", 3, 2, ["x1", "x2"], [-1] * 3, [1] * 3)
        assert form_from_map(lines).components.shape[1] == 3

    def test_user_component_count_validated(self):
        with pytest.raises(DimensionError):
            form_from_components(2, 1, ["x1"], [-1, -1], [1, 1])

    def test_gradient_form_matches_jacobian_row(self):
        form = form_from_map(HELICOID)
        from minifol.diffgeo import jacobi_matrix_batch

        rows = jacobi_matrix_batch(HELICOID, form.points)[:, 0, :]
        np.testing.assert_array_equal(form.components, rows)

    def test_probes_inset_from_boundary(self):
        form = form_from_map(PARABOLic)
        assert (form.points > -2.0).all() and (form.points < 2.0).all()


class TestClosedness:
    def test_linear_map_zero(self):
        lin = make_map("lin", 3, 1, ["x1 + 2*x2 - x3"], [-1] * 3, [1] * 3)
        assert check_closedness(form_from_map(lin)) == 0.0

    def test_helicoid_within_fd_truncation(self):
        assert check_closedness(form_from_map(HELICOID), h=1e-3) <= 1e-4

    def test_angular_form_closed(self):
        assert check_closedness(angular_form(), h=1e-3) <= 1e-4

    def test_two_form_from_two_map(self):
        lines = make_map("lines", 3, 2, ["x1", "x2"], [-1] * 3, [1] * 3)
        assert check_closedness(form_from_map(lines)) == 0.0

    def test_top_degree_form_trivially_closed(self):
        form = form_from_components(2, 2, ["x1*x2"], [-1, -1], [1, 1])
        assert check_closedness(form) == 0.0

    def test_interior_margin_enforced(self):
        tiny = make_map("tiny", 2, 1, ["x1"], [0, 0], [1e-3, 1e-3])
        with pytest.raises(ValueError):
            check_closedness(form_from_map(tiny), h=1.0)


class TestPotentialReconstruction:
    def test_recovers_map_up_to_constant(self):
        para = make_map("p", 2, 1, ["x1^2 + x2"], [-1, -1], [1, 1])
        form = form_from_map(para, probe_count=7)
        rec = reconstruct_potential(form, [-0.9, -0.9])
        phi = map_values(para, rec.probe_points)[:, 0]
        phi0 = map_values(para, np.array([[-0.9, -0.9]]))[0, 0]
        assert np.abs(rec.values - (phi - phi0)).max() <= 1e-6
        assert rec.max_gradient_error <= 1e-6
        assert rec.exact

    def test_zero_form_constant_potential(self):
        form = form_from_components(2, 1, ["0", "0"], [-1, -1], [1, 1])
        rec = reconstruct_potential(form, [0.0, 0.0])
        np.testing.assert_array_equal(rec.values, 0.0)
        assert rec.exact

    def test_angular_form_flagged_non_exact(self):
        rec = reconstruct_potential(angular_form(), [-1.5, -1.5])
        assert not rec.exact
        assert rec.order_disagreement == pytest.approx(2 * np.pi, rel=0.01)

    def test_three_dimensional_potential(self):
        form = form_from_map(HELICOID, probe_count=4)
        rec = reconstruct_potential(form, [1.0, 1.0, 0.0])
        phi = map_values(HELICOID, rec.probe_points)[:, 0]
        phi0 = map_values(HELICOID, np.array([[1.0, 1.0, 0.0]]))[0, 0]
        assert np.abs(rec.values - (phi - phi0)).max() <= 1e-5
        assert rec.exact

    def test_higher_degree_rejected(self):
        lines = make_map("lines", 3, 2, ["x1", "x2"], [-1] * 3, [1] * 3)
        with pytest.raises(DimensionError):
            reconstruct_potential(form_from_map(lines), [0.0, 0.0, 0.0])


class TestLoopIntegral:
    def test_angular_winding(self):
        loop = rectangle_loop_integral(angular_form(), [-1.5, -1.5], [1.5, 1.5])
        assert loop == pytest.approx(2 * np.pi, rel=0.01)

    def test_exact_form_no_circulation(self):
        para = make_map("p", 2, 1, ["x1^2 + x2"], [-2, -2], [2, 2])
        loop = rectangle_loop_integral(form_from_map(para), [-1.0, -1.0], [1.0, 1.0])
        assert abs(loop) <= 1e-10

    def test_rectangle_missing_the_vortex(self):
        loop = rectangle_loop_integral(angular_form(), [0.5, 0.5], [1.5, 1.5])
        assert abs(loop) <= 1e-9

    def test_wrong_signature_rejected(self):
        form = form_from_map(HELICOID)
        with pytest.raises(DimensionError):
            rectangle_loop_integral(form, [0, 0], [1, 1])


class TestHarmonicity:
    def test_constant_form_all_zero(self):
        form = form_from_components(2, 1, ["2", "-1"], [-1, -1], [1, 1])
        res = check_linear_harmonicity(form)
        assert res == {
            "d_residual": 0.0,
            "delta_residual": 0.0,
            "hodge_residual": 0.0,
        }

    def test_helicoid_harmonic(self):
        res = check_linear_harmonicity(form_from_map(HELICOID), h=1e-3)
        assert res["hodge_residual"] <= 1e-3

    def test_delta_is_negative_laplacian(self):
        res = check_linear_harmonicity(form_from_map(PARABOLic), h=1e-3)
        assert res["d_residual"] == 0.0
        assert res["delta_residual"] == pytest.approx(4.0, abs=1e-6)
        assert res["hodge_residual"] == pytest.approx(4.0, abs=1e-6)

    def test_two_form_delta(self):
        # components lex: (1,2),(1,3),(2,3). delta(x1 dx1^dx2) = -dx2 by
        # the star-d-star convention, so the residual is 1; a coefficient
        # varying only off its own index set (x3 dx1^dx2) has delta 0
        form = form_from_components(3, 2, ["x1", "0", "0"], [-1] * 3, [1] * 3)
        res = check_linear_harmonicity(form)
        assert res["delta_residual"] == pytest.approx(1.0, abs=1e-9)
        off_axis = form_from_components(3, 2, ["x3", "0", "0"], [-1] * 3, [1] * 3)
        assert check_linear_harmonicity(off_axis)["delta_residual"] <= 1e-9


class TestCorpus:
    def test_fixed_membership_and_order(self):
        names = [d.name for d in load_corpus()]
        assert names == [
            "hyperplanes",
            "rotated_hyperplanes",
            "concentric_circles",
            "helicoid",
            "catenoid_level",
            "scherk_translation",
            "random_cubic",
            "vertical_lines",
        ]

    def test_signatures(self):
        corpus = {d.name: d for d in load_corpus()}
        assert corpus["vertical_lines"].m == 2
        assert corpus["concentric_circles"].n == 2
        assert all(d.m < d.n for d in corpus.values())


@pytest.fixture(scope="module")
def small_report():
    corpus = [d for d in load_corpus() if d.name in ("hyperplanes", "concentric_circles")]
    return minimality_agreement(corpus=corpus, grid=33, seed=0)


class TestAgreement:
    def test_each_map_once(self, small_report):
        names = [e["map"] for e in small_report.entries]
        assert names == ["hyperplanes", "concentric_circles"]

    def test_hyperplanes_full_agreement(self, small_report):
        entry = small_report.entries[0]
        assert entry["oracle"]["stationary"]
        assert entry["oracle"]["regular"]
        for verdict in entry["readings"].values():
            assert verdict["verdict"] == "minimal"
            assert verdict["max_residual"] <= 1e-6

    def test_circles_non_stationary(self, small_report):
        entry = small_report.entries[1]
        assert not entry["oracle"]["stationary"]
        assert not entry["oracle"]["regular"]
        assert entry["readings"]["FULL_TRACE"]["verdict"] == "not_minimal"
        assert entry["readings"]["FULL_TRACE"]["max_residual"] == pytest.approx(4.0)

    def test_confusion_counts(self, small_report):
        counts = small_report.confusion["FULL_TRACE"]
        assert counts["agree_minimal"] == 1
        assert counts["agree_not_minimal"] == 1
        assert counts["oracle_stationary_reading_not"] == 0
        assert counts["reading_minimal_oracle_not"] == 0

    def test_report_keys_and_json(self, small_report):
        doc = small_report.to_document()
        assert set(doc) == {
            "version",
            "grid",
            "seed",
            "tolerances",
            "readings",
            "maps",
            "confusion",
        }
        for entry in doc["maps"]:
            for key in ("map", "oracle", "readings", "grid", "seed", "tolerances"):
                assert key in entry
        parsed = json.loads(small_report.to_json())
        assert parsed == doc

    def test_deterministic(self):
        corpus = [d for d in load_corpus() if d.name == "hyperplanes"]
        a = minimality_agreement(corpus=corpus, grid=17, seed=3)
        b = minimality_agreement(corpus=corpus, grid=17, seed=3)
        assert a.to_json() == b.to_json()

    def test_map_failure_recorded_not_fatal(self):
        bad = make_map("four_d", 4, 1, ["x1"], [-1] * 4, [1] * 4)
        good = make_map("flat", 2, 1, ["x1"], [-1, -1], [1, 1])
        report = minimality_agreement(corpus=[bad, good], grid=17, seed=0)
        assert "error" in report.entries[0]
        assert "UnsupportedSignature" in report.entries[0]["error"]
        assert report.entries[1]["oracle"]["stationary"]

    def test_zero_level_reported_for_scherk(self):
        # grid 65: the stationarity tolerance is calibrated for 64-ish cells
        corpus = [d for d in load_corpus() if d.name == "scherk_translation"]
        report = minimality_agreement(corpus=corpus, grid=65, seed=0)
        entry = report.entries[0]
        assert entry["oracle"]["stationary"]
        assert entry["zero_level"]["stationary"]
        assert entry["zero_level"]["max_mean_curvature"] <= 1e-8
        # the designed disagreement: every trace reading rejects minimality
        for verdict in entry["readings"].values():
            assert verdict["verdict"] == "not_minimal"

    def test_report_type(self, small_report):
        assert isinstance(small_report, AgreementReport)
        assert small_report.grid == 33
        assert small_report.tolerances["reading_residual"] == 1e-6
