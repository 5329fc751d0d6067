"""Unit tests for the paired structural/registered evaluation."""

import numpy as np
import pytest

from src.lib.errors import EmptyVertexSet, FlipCountMismatch
from src.models.registration import EnergyTerms, IterationRecord, RegistrationResult, StopReason
from src.models.retinotopic_map import RetinotopicMap
from src.services.evaluation_runner import (
    REGISTERED_LABEL,
    STRUCTURAL_LABEL,
    create_evaluation_runner,
    evaluate_run,
    visual_coordinate_change,
)


def identity_result(retinotopic_map, f_flip=0):
    """A registration that leaves every vertex where it is."""
    zero = EnergyTerms(data_term=0.0, smooth_term=0.0, total=0.0)
    return RegistrationResult(
        f=retinotopic_map.param.uv,
        energy_trace=[IterationRecord(iteration=0, energy=zero, step_length=0.0, mu_max=0.0)],
        final_mu_max=0.0,
        converged=True,
        stop_reason=StopReason.ZERO_ENERGY,
        f_flip=f_flip,
    )


def with_visual(retinotopic_map, visual):
    return RetinotopicMap(
        mesh=retinotopic_map.mesh,
        param=retinotopic_map.param,
        visual=visual,
        prf_size=retinotopic_map.prf_size,
        variance_explained=retinotopic_map.variance_explained,
        hemisphere=retinotopic_map.hemisphere,
    )


class TestVisualCoordinateChange:
    """Tests for visual_coordinate_change."""

    def test_template_against_itself(self, affine_template):
        assert visual_coordinate_change(affine_template, affine_template, affine_template.param.uv) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_deformed_subject_has_positive_change(self, synthetic_case):
        change = visual_coordinate_change(
            synthetic_case.subject, synthetic_case.template, synthetic_case.subject.param.uv
        )

        assert change > 0.0

    def test_ground_truth_correspondence_has_zero_change(self, synthetic_case):
        change = visual_coordinate_change(
            synthetic_case.subject, synthetic_case.template, synthetic_case.deformation.ground_truth
        )

        assert change == pytest.approx(0.0, abs=1e-9)

    def test_threshold_above_every_r2(self, affine_template):
        with pytest.raises(EmptyVertexSet):
            visual_coordinate_change(affine_template, affine_template, affine_template.param.uv, r2_threshold=2.0)

    def test_unknown_weighting(self, affine_template):
        with pytest.raises(ValueError, match="weighting"):
            visual_coordinate_change(affine_template, affine_template, affine_template.param.uv, weighting="mean")

    def test_one_of_ten_vertices_off_by_one_degree(self, affine_template):
        visual = np.array(affine_template.visual)
        visual[4, 0] += 1.0
        subject = with_visual(affine_template, visual)
        mask = np.zeros(affine_template.vertex_count, dtype=bool)
        mask[:10] = True

        change = visual_coordinate_change(subject, affine_template, affine_template.param.uv, mask=mask)

        assert change == pytest.approx(0.1, abs=1e-12)

    def test_invariant_under_common_rotation_of_visual_coordinates(self, synthetic_case):
        angle = 0.7
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        subject, template = synthetic_case.subject, synthetic_case.template
        f = subject.param.uv

        before = visual_coordinate_change(subject, template, f)
        after = visual_coordinate_change(
            with_visual(subject, np.asarray(subject.visual) @ rotation.T),
            with_visual(template, np.asarray(template.visual) @ rotation.T),
            f,
        )

        assert after == pytest.approx(before, abs=1e-10)


class TestEvaluationRunner:
    """Tests for EvaluationRunner.evaluate."""

    def test_identity_registration_rows_agree(self, synthetic_case):
        report = evaluate_run(
            synthetic_case.subject,
            synthetic_case.template,
            identity_result(synthetic_case.subject),
            synthetic_case.stimulus,
            synthetic_case.bold,
        )
        structural = report.row(STRUCTURAL_LABEL)
        registered = report.row(REGISTERED_LABEL)

        assert [row.method_label for row in report.rows] == [STRUCTURAL_LABEL, REGISTERED_LABEL]
        assert structural.d_v == registered.d_v
        assert structural.rmse_reg == registered.rmse_reg
        assert structural.rmse_raw == registered.rmse_raw
        assert structural.n_vertices == registered.n_vertices == len(report.included_vertices)
        assert registered.f_flip == 0
        assert registered.hemisphere == "L"

    def test_template_as_subject_has_zero_change(self, synthetic_case):
        template = synthetic_case.template
        report = evaluate_run(
            template, template, identity_result(template), synthetic_case.stimulus, synthetic_case.bold
        )

        assert report.row(REGISTERED_LABEL).d_v == pytest.approx(0.0, abs=1e-9)

    def test_detail_has_one_entry_per_vertex_and_row(self, synthetic_case):
        report = evaluate_run(
            synthetic_case.subject,
            synthetic_case.template,
            identity_result(synthetic_case.subject),
            synthetic_case.stimulus,
            synthetic_case.bold,
            dv_weighting="r2",
            include_detail=True,
        )

        assert len(report.detail) == 2 * report.row(REGISTERED_LABEL).n_vertices
        assert {entry.method_label for entry in report.detail} == {STRUCTURAL_LABEL, REGISTERED_LABEL}

    def test_empty_vertex_set(self, synthetic_case):
        runner = create_evaluation_runner(synthetic_case.template, synthetic_case.stimulus, r2_threshold=2.0)

        with pytest.raises(EmptyVertexSet):
            runner.evaluate(synthetic_case.subject, identity_result(synthetic_case.subject), synthetic_case.bold)

    def test_vertex_count_mismatch(self, synthetic_case, affine_template):
        runner = create_evaluation_runner(synthetic_case.template, synthetic_case.stimulus)

        with pytest.raises(ValueError, match="vertices"):
            runner.evaluate(synthetic_case.subject, identity_result(affine_template), synthetic_case.bold)

    def test_unknown_weighting(self, synthetic_case):
        with pytest.raises(ValueError):
            create_evaluation_runner(synthetic_case.template, synthetic_case.stimulus, dv_weighting="median")

    def test_recorded_flip_count_must_match_the_map(self, synthetic_case):
        runner = create_evaluation_runner(synthetic_case.template, synthetic_case.stimulus)

        with pytest.raises(FlipCountMismatch) as excinfo:
            runner.evaluate(
                synthetic_case.subject, identity_result(synthetic_case.subject, f_flip=1), synthetic_case.bold
            )

        assert excinfo.value.code == "FlipCountMismatch"
        assert excinfo.value.stage == "evaluate"
