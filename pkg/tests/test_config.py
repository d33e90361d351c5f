"""
Settings, pipeline INI loading and log formatting
"""

import json
import logging
import math
from pathlib import Path

import pytest

from cmcindex.config import PipelineConfig, Settings, Symmetry, load_pipeline_config
from cmcindex.errors import ConfigError
from cmcindex.utils.logger import ConsoleFormatter, JSONFormatter

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "pipeline.ini"


def write_ini(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "cfg.ini"
    path.write_text(text, encoding="utf-8")
    return path


# ==================== Pipeline config ====================

def test_defaults():
    cfg = load_pipeline_config()
    assert isinstance(cfg, PipelineConfig)
    assert cfg.lattice.generators() == (complex(2 * math.pi, 0), complex(0, 2 * math.pi))
    assert cfg.solve.symmetry == Symmetry.NONE
    assert cfg.nodal.mask_radius == 3.0
    assert cfg.spectrum.zero_tol is None
    assert cfg.nodal.fit_points == ""
    assert cfg.nodal.fit_basis == "jacobi"


def test_shipped_config_loads():
    cfg = load_pipeline_config(CONFIG)
    assert cfg.lattice.kind == "rectangular"
    assert (cfg.lattice.nx, cfg.lattice.ny) == (64, 8)
    assert cfg.bounds.g == 2
    assert cfg.pipeline.output_dir == "./output/pipeline"


@pytest.mark.parametrize(
    "text",
    [
        "[solve]\nmethd = oned\n",
        "[extras]\nkey = 1\n",
        "[lattice]\nnx = 33\n",
        "[solve]\nenergy = 3.5\n",
        "[spectrum]\nsolver = arpack\n",
        "[nodal]\nfit_basis = spectrum\n",
        "[lattice\nnx = 8\n",
    ],
)
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError) as info:
        load_pipeline_config(write_ini(tmp_path, text))
    assert info.value.exit_code == 2


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_pipeline_config(tmp_path / "absent.ini")


def test_empty_values_keep_defaults(tmp_path):
    cfg = load_pipeline_config(write_ini(tmp_path, "[spectrum]\nzero_tol =\ncount = 24\n"))
    assert cfg.spectrum.zero_tol is None
    assert cfg.spectrum.count == 24


def test_overrides_win_over_file(tmp_path):
    path = write_ini(tmp_path, "[lattice]\nnx = 16\nny = 16\n[solve]\nsymmetry = even\n")
    cfg = load_pipeline_config(path, {"lattice": {"nx": 32, "ny": None}, "nodal": {"tol_zero": 1e-5}})
    assert (cfg.lattice.nx, cfg.lattice.ny) == (32, 16)
    assert cfg.solve.symmetry == Symmetry.EVEN
    assert cfg.nodal.tol_zero == 1e-5


def test_family_end_points():
    section = load_pipeline_config(overrides={"lattice": {"kind": "rectangular", "a": 2.5, "b": 1.0, "end_a": 4.0}}).lattice
    assert section.generators() == (2.5 + 0j, 1j)
    assert section.generators(end=True) == (4.0 + 0j, 1j)


def test_general_lattice_generators():
    section = load_pipeline_config(overrides={"lattice": {
        "kind": "general", "omega1_re": 1.0, "omega2_re": 0.5, "omega2_im": 2.0, "end_omega2_re": 0.25,
    }}).lattice
    assert section.generators() == (1 + 0j, 0.5 + 2j)
    assert section.generators(end=True) == (1 + 0j, 0.25 + 2j)


# ==================== Settings ====================

def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("CMC_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("CMC_OUTPUT_DIR", "/tmp/cmc-out")
    settings = Settings(_env_file=None)
    assert settings.log_level == "DEBUG"
    assert settings.output_dir == "/tmp/cmc-out"
    assert settings.app_name == "cmcindex"


# ==================== Log formatting ====================

def _record(**extra) -> logging.LogRecord:
    record = logging.LogRecord("cmcindex.test", logging.WARNING, __file__, 1, "Residual %s", ("high",), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_json_formatter_envelope():
    payload = json.loads(JSONFormatter("%(message)s").format(_record(stage="solve", iteration=3)))
    assert payload["message"] == "Residual high"
    assert payload["level"] == "WARNING"
    assert payload["logger"] == "cmcindex.test"
    assert payload["stage"] == "solve"
    assert payload["iteration"] == 3
    assert payload["timestamp"].endswith("Z")


def test_console_formatter_lists_context():
    line = ConsoleFormatter().format(_record(stage="nodal"))
    assert "WARNING" in line
    assert "Residual high" in line
    assert "stage=nodal" in line
