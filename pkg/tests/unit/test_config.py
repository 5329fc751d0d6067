"""Unit tests for the key = value config loader, configuration precedence and error lines."""

import pytest

from src.cli.common import CliState, machine_line_for, resolve_config
from src.lib.config import load_key_value_config
from src.lib.errors import ConfigError, EmptyVertexSet, FormatError


class TestKeyValueConfig:
    """Tests for load_key_value_config."""

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "drrm.cfg"
        path.write_text("# registration\n\nsmoothness_weight = 0.5\n  epsilon=0.1  \n", encoding="utf-8")

        assert load_key_value_config(path) == {"smoothness_weight": "0.5", "epsilon": "0.1"}

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "drrm.cfg"
        path.write_text("learning_rate = 0.1\n", encoding="utf-8")

        with pytest.raises(ConfigError, match="unknown key"):
            load_key_value_config(path)

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "drrm.cfg"
        path.write_text("epsilon = 0.1\nepsilon = 0.2\n", encoding="utf-8")

        with pytest.raises(ConfigError, match="duplicate"):
            load_key_value_config(path)

    def test_missing_equals(self, tmp_path):
        path = tmp_path / "drrm.cfg"
        path.write_text("epsilon 0.1\n", encoding="utf-8")

        with pytest.raises(ConfigError, match=":1:"):
            load_key_value_config(path)


class TestResolveConfig:
    """Tests for resolve_config precedence."""

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "drrm.cfg"
        path.write_text("smoothness_weight = 0.5\nepsilon = 0.2\n", encoding="utf-8")

        config = resolve_config(CliState(), path, smoothness_weight=2.0, epsilon=None)

        assert config.smoothness_weight == 2.0
        assert config.epsilon == 0.2

    def test_command_file_overrides_global_file(self, tmp_path):
        global_file = tmp_path / "global.cfg"
        global_file.write_text("epsilon = 0.2\nmax_outer_iterations = 7\n", encoding="utf-8")
        local_file = tmp_path / "local.cfg"
        local_file.write_text("epsilon = 0.3\n", encoding="utf-8")

        config = resolve_config(CliState(config=global_file), local_file)

        assert config.epsilon == 0.3
        assert config.max_outer_iterations == 7

    def test_global_seed(self):
        assert resolve_config(CliState(seed=99)).seed == 99

    def test_invalid_value(self, tmp_path):
        path = tmp_path / "drrm.cfg"
        path.write_text("epsilon = 1.5\n", encoding="utf-8")

        with pytest.raises(ConfigError, match="epsilon"):
            resolve_config(CliState(), path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            resolve_config(CliState(), tmp_path / "absent.cfg")


class TestMachineLine:
    def test_domain_error(self):
        line = machine_line_for(EmptyVertexSet("no vertices\nleft"), "evaluate")

        assert line == "stage=evaluate code=EmptyVertexSet msg=no vertices left"

    def test_stage_override(self):
        assert machine_line_for(FormatError("bad", stage="report"), "x").startswith("stage=report code=FormatError")

    def test_foreign_exception_uses_command(self):
        line = machine_line_for(FileNotFoundError("mesh.obj"), "flatten")

        assert line == "stage=flatten code=FileNotFoundError msg=mesh.obj"
