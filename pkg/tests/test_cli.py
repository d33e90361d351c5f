"""
Command-line surface: subcommands, artifacts and exit codes
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cmcindex.main import main
from cmcindex.models import Grid, ScalarField, TorusLattice
from cmcindex.services import bounds
from cmcindex.utils.artifacts import csv_text
from cmcindex.utils.fieldio import write_field
from cmcindex.utils.svg import NEGATIVE_FILL, POSITIVE_FILL

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "pipeline.ini"


def run_cli(*argv: str) -> int:
    return main(["--log-file", "", *argv])


def write_on_square(path: Path, func, n: int = 32) -> Path:
    grid = Grid(TorusLattice.square(2 * math.pi), n, n)
    write_field(path, ScalarField.from_function(grid, func))
    return path


# ==================== bounds / table ====================

def test_bounds_to_stdout(capsys):
    assert run_cli("bounds", "--g", "13", "--m", "2") == 0
    out = capsys.readouterr().out
    assert out.startswith('{\n  "schema": 1')
    report = json.loads(out)
    assert report["thm1"] == 6
    assert report["inputs"]["m"] == 2


def test_bounds_text_table(capsys):
    assert run_cli("bounds", "--g", "13", "--m", "2", "--text", "-") == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["g", "13"]


def test_bounds_rejects_small_genus(capsys):
    assert run_cli("bounds", "--g", "1") == 2
    assert "error" in capsys.readouterr().err


def test_table_matches_service(capsys):
    assert run_cli("table") == 0
    expected = csv_text(bounds.table(range(2, 21), [1, 2, 3], 1.0), bounds.TABLE_COLUMNS)
    assert capsys.readouterr().out == expected


def test_table_to_file(tmp_path):
    out = tmp_path / "bounds.csv"
    assert run_cli("table", "--g-min", "2", "--g-max", "4", "--m", "1", "--out", str(out)) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(bounds.TABLE_COLUMNS)
    assert len(lines) == 4


def test_table_rejects_empty_range():
    assert run_cli("table", "--g-min", "5", "--g-max", "4") == 2


# ==================== solve / spectrum / hierarchy ====================

def test_solve_then_spectrum(tmp_path):
    field = tmp_path / "u.cmcf"
    summary = tmp_path / "solve.json"
    assert run_cli(
        "solve", "--method", "trivial", "--nx", "16", "--ny", "16",
        "--out", str(field), "--summary", str(summary),
    ) == 0
    assert json.loads(summary.read_text())["branch_tag"] == "trivial"

    report_path = tmp_path / "spectrum.json"
    assert run_cli("spectrum", str(field), "--count", "16", "--out", str(report_path)) == 0
    report = json.loads(report_path.read_text())
    assert report["neg_count"] == 9
    assert report["zero_mult"] == 4
    assert [report["index_lower"], report["index_upper"]] == [8, 9]


def test_spectrum_count_below_zero_fails(tmp_path):
    field = write_on_square(tmp_path / "u.cmcf", lambda x, y: 0 * x, n=16)
    assert run_cli("spectrum", str(field), "--count", "5") == 3


def test_spectrum_missing_field(tmp_path):
    assert run_cli("spectrum", str(tmp_path / "absent.cmcf")) == 3


def test_hierarchy_dump(capsys):
    assert run_cli("hierarchy", "--jmax", "4") == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["rho2 = -(Dz^1 u)", "rho4 = -1/2*(Dz^1 u)^3 + (Dz^3 u)"]


def test_hierarchy_needs_jmax_two():
    assert run_cli("hierarchy", "--jmax", "1") == 2


# ==================== nodal ====================

def test_nodal_on_product_of_sines(tmp_path):
    field = write_on_square(tmp_path / "v.cmcf", lambda x, y: np.sin(x) * np.sin(y))
    out, svg, graph = tmp_path / "nodal.json", tmp_path / "nodal.svg", tmp_path / "graph.json"
    assert run_cli("nodal", str(field), "--out", str(out), "--svg", str(svg), "--graph", str(graph)) == 0

    summary = json.loads(out.read_text())
    assert summary["counts"] == {"F": 4, "E": 8, "V": 4, "r": 0}
    assert summary["euler"]["lhs"] == 0
    assert summary["euler"]["label"] == "holds"
    assert summary["domains"] == 4
    assert summary["domains_match_faces"]
    assert summary["nodal_index_bound"] == 2

    assert len(json.loads(graph.read_text())["vertices"]) == 4
    text = svg.read_text()
    assert "<svg" in text
    assert "F=4 E=8 V=4 r=0" in text
    assert POSITIVE_FILL in text and NEGATIVE_FILL in text


def test_nodal_fit_through_a_point(tmp_path):
    fields = [
        write_on_square(tmp_path / f"f{n}.cmcf", func)
        for n, func in enumerate([
            lambda x, y: np.cos(x),
            lambda x, y: np.sin(x),
            lambda x, y: np.cos(y),
            lambda x, y: np.sin(y),
        ])
    ]
    out = tmp_path / "nodal.json"
    assert run_cli("nodal", *map(str, fields), "--points", "0.3,0.2", "--out", str(out)) == 0

    summary = json.loads(out.read_text())
    assert summary["fit"]["residual"] < 1e-10
    assert not summary["fit"]["no_exact_kernel"]
    # cos(x − 0.3) − cos(y − 0.2): two diagonals crossing at the point and its antipode
    assert summary["counts"]["V"] == 2
    assert summary["chain"]["implication_holds"]


def test_nodal_needs_points_for_several_fields(tmp_path):
    a = write_on_square(tmp_path / "a.cmcf", lambda x, y: np.sin(x))
    b = write_on_square(tmp_path / "b.cmcf", lambda x, y: np.sin(y))
    assert run_cli("nodal", str(a), str(b)) == 2


def test_nodal_on_zero_field(tmp_path):
    field = write_on_square(tmp_path / "z.cmcf", lambda x, y: 0 * x)
    assert run_cli("nodal", str(field)) == 3


def test_bad_point_syntax(tmp_path):
    a = write_on_square(tmp_path / "a.cmcf", lambda x, y: np.sin(x))
    assert run_cli("nodal", str(a), "--points", "0.3;0.2") == 2


# ==================== pipeline ====================

@pytest.fixture(scope="module")
def pipeline_runs(tmp_path_factory):
    dirs = [tmp_path_factory.mktemp(name) for name in ("first", "second")]
    codes = [run_cli("pipeline", "--config", str(CONFIG), "--out", str(d)) for d in dirs]
    return codes, dirs


def test_pipeline_succeeds(pipeline_runs):
    codes, dirs = pipeline_runs
    assert codes == [0, 0]
    manifest = json.loads((dirs[0] / "manifest.json").read_text())
    assert manifest["command"] == "pipeline"
    assert manifest["results"]["violations"] == []
    assert manifest["results"]["residual_norm"] <= 1e-10
    assert manifest["tolerances"]["mask_radius"] == 3.0
    listed = {entry["path"] for entry in manifest["outputs"]}
    assert {"solution.cmcf", "spectrum.json", "nodal.json", "nodal.svg", "bounds.json", "v1.cmcf"} <= listed


def test_pipeline_reports_are_reproducible(pipeline_runs):
    _, (first, second) = pipeline_runs
    names = sorted(p.name for p in first.iterdir() if p.name != "manifest.json")
    assert names == sorted(p.name for p in second.iterdir() if p.name != "manifest.json")
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    digests = [
        {e["path"]: e["sha256"] for e in json.loads((d / "manifest.json").read_text())["outputs"]}
        for d in (first, second)
    ]
    assert digests[0] == digests[1]


def test_pipeline_nodal_field_of_translation(pipeline_runs):
    _, (first, _) = pipeline_runs
    nodal_summary = json.loads((first / "nodal.json").read_text())
    assert nodal_summary["field"] == "v1"
    # u_x vanishes on two vertical loops
    assert nodal_summary["counts"]["r"] == 2
    assert nodal_summary["euler"]["label"] == "lemma-not-applicable"
    assert [row["half_period"] for row in nodal_summary["half_periods"]] == ["w0", "w1", "w2", "w3"]


def test_pipeline_translation_field_is_antisymmetric(pipeline_runs):
    _, (first, _) = pipeline_runs
    rows = json.loads((first / "jacobi.json").read_text())["fields"]
    assert set(rows[0]["antisymmetry"]) == {"w0", "w1", "w2", "w3"}
    assert max(rows[0]["antisymmetry"].values()) < 1e-6


FIT_CONFIG = """\
[lattice]
kind = square
nx = 32
ny = 32

[solve]
method = trivial

[spectrum]
count = 16
jacobi_count = 1

[nodal]
field = eigen2
courant_combinations = 0
fit_points = 0.3,0.2
fit_basis = eigen
fit_size = 5
"""


def test_pipeline_vanishing_fit(tmp_path):
    config = tmp_path / "fit.ini"
    config.write_text(FIT_CONFIG, encoding="utf-8")
    out = tmp_path / "out"
    assert run_cli("pipeline", "--config", str(config), "--out", str(out)) == 0

    fit_summary = json.loads((out / "fit.json").read_text())
    assert fit_summary["basis"] == {"kind": "eigen", "size": 5}
    assert fit_summary["fit"]["residual"] < 1e-10
    assert_allclose(fit_summary["fit"]["points"], [[0.3, 0.2]])
    assert fit_summary["counts"]["V"] >= 1
    assert fit_summary["chain"]["implication_holds"]
    assert fit_summary["domains_match_faces"]

    listed = {entry["path"] for entry in json.loads((out / "manifest.json").read_text())["outputs"]}
    assert {"fit.json", "fit.svg"} <= listed


def test_pipeline_rejects_empty_fit_basis(tmp_path):
    config = tmp_path / "fit.ini"
    # the Jacobi fields of u = 0 all vanish
    config.write_text(FIT_CONFIG.replace("fit_basis = eigen", "fit_basis = jacobi"), encoding="utf-8")
    assert run_cli("pipeline", "--config", str(config), "--out", str(tmp_path / "out")) == 2


def test_pipeline_rejects_unknown_config_key(tmp_path):
    config = tmp_path / "bad.ini"
    config.write_text("[solve]\nmethd = oned\n", encoding="utf-8")
    assert run_cli("pipeline", "--config", str(config), "--out", str(tmp_path / "out")) == 2
