"""Unit tests for case-directory manifests and loaders."""

import json

import numpy as np
import pytest

from src.lib.errors import ChecksumMismatch, FormatError, MissingCaseFile
from src.services.case_directory import (
    load_case_bold,
    load_case_map,
    load_case_stimulus,
    load_manifest,
    open_case,
    verified_path,
)


class TestSyntheticCaseDirectories:
    """Tests for write_synthetic_case and the loaders."""

    def test_manifests_list_written_files(self, case_dirs):
        subject_dir, template_dir = case_dirs
        subject = load_manifest(open_case(subject_dir))
        template = load_manifest(open_case(template_dir))

        assert set(template.files) == {"mesh.retmesh", "uv.retuv", "prf.csv"}
        assert set(subject.files) == {
            "mesh.retmesh",
            "uv.retuv",
            "prf.csv",
            "stimulus.retstim",
            "bold.csv",
            "bold_noiseless.csv",
            "deformation.retuv",
        }
        assert template.role == "template"
        assert subject.hemisphere == "L"
        assert subject.seed == 7

    def test_manifest_keys_are_sorted(self, case_dirs):
        text = (case_dirs[0] / "manifest.json").read_text()

        assert list(json.loads(text)) == sorted(json.loads(text))

    def test_loaded_map_matches_generated_map(self, case_dirs, synthetic_case):
        loaded = load_case_map(open_case(case_dirs[0]))

        assert np.array_equal(loaded.param.uv, synthetic_case.subject.param.uv)
        assert np.allclose(loaded.visual, synthetic_case.subject.visual, atol=1e-9)
        assert np.array_equal(loaded.prf_size, synthetic_case.subject.prf_size)
        assert loaded.hemisphere.value == "L"

    def test_stimulus_and_bold(self, case_dirs, synthetic_case):
        case = open_case(case_dirs[0])

        assert np.array_equal(load_case_stimulus(case).frames, synthetic_case.stimulus.frames)
        assert np.array_equal(load_case_bold(case).samples, synthetic_case.bold.samples)


class TestVerification:
    """Tests for verified_path and the failure modes of the loaders."""

    def test_tampered_file(self, case_dirs):
        case = open_case(case_dirs[0])
        with case.prf.open("a", encoding="utf-8") as handle:
            handle.write("\n")

        with pytest.raises(ChecksumMismatch):
            load_case_map(case)

    def test_unlisted_file(self, case_dirs):
        case = open_case(case_dirs[1])
        (case.root / "extra.csv").write_text("x\n", encoding="utf-8")

        with pytest.raises(ChecksumMismatch, match="not listed"):
            verified_path(case, "extra.csv")

    def test_missing_file(self, case_dirs):
        case = open_case(case_dirs[1])

        with pytest.raises(MissingCaseFile):
            load_case_stimulus(case)

    def test_missing_uv(self, case_dirs):
        case = open_case(case_dirs[1])
        case.uv.unlink()

        with pytest.raises(MissingCaseFile, match="flatten"):
            load_case_map(case)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingCaseFile, match="manifest"):
            load_manifest(open_case(tmp_path))

    def test_invalid_manifest(self, tmp_path):
        (tmp_path / "manifest.json").write_text("[1, 2]", encoding="utf-8")

        with pytest.raises(FormatError):
            load_manifest(open_case(tmp_path))
