"""
Shared wiring for the subcommands: config loading, grids, solution acquisition
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel

from cmcindex.config import LatticeSection, PipelineConfig, load_pipeline_config, settings
from cmcindex.models import Grid, ScalarField, SinhGordonSolution, TorusLattice
from cmcindex.services import sinh_gordon
from cmcindex.services.continuation import BranchContinuation, LatticeFamily
from cmcindex.utils.artifacts import to_json, write_json
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)


def add_config_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", default=None, help="pipeline INI file")


def load_config(args: argparse.Namespace, overrides: Optional[dict[str, dict[str, Any]]] = None) -> PipelineConfig:
    """Config file from --config with command-line overrides on top"""
    return load_pipeline_config(getattr(args, "config", None), overrides)


def lattice_from(section: LatticeSection, end: bool = False) -> TorusLattice:
    w1, w2 = section.generators(end=end)
    return TorusLattice(w1, w2, section.m)


def grid_from(section: LatticeSection) -> Grid:
    return Grid(lattice_from(section), section.nx, section.ny)


def parse_point(text: str) -> complex:
    """"x,y" -> x + iy"""
    try:
        x, y = (float(part) for part in text.split(","))
    except ValueError as e:
        raise ValueError(f"Point must be given as x,y, got {text!r}") from e
    return complex(x, y)


def output_path(value: Optional[str], default_name: str) -> Path:
    return Path(value) if value else Path(settings.output_dir) / default_name


def emit(payload: BaseModel | dict, out: Optional[str]) -> None:
    """Write JSON to a file, or to stdout when no path is given"""
    if out:
        write_json(payload, out)
    else:
        sys.stdout.write(to_json(payload))


def solve_from_config(cfg: PipelineConfig) -> tuple[SinhGordonSolution, list[SinhGordonSolution]]:
    """
    Produce u with the configured method

    Returns:
        (solution, continuation branch; empty for other methods)
    """
    solve = cfg.solve
    section = cfg.lattice
    branch: list[SinhGordonSolution] = []

    if solve.method == "file":
        if not solve.seed_file:
            raise ValueError("solve.method = file needs solve.seed_file")
        solution = sinh_gordon.load_field(solve.seed_file)
    elif solve.method == "oned":
        solution = sinh_gordon.oned_solution(solve.energy, section.nx, section.ny, b=section.b, cfg=solve)
        if section.m > 1:
            solution = sinh_gordon.tile(solution, section.m)
    elif solve.method == "continuation":
        family = LatticeFamily(lattice_from(section), lattice_from(section, end=True))
        branch = BranchContinuation(family, grid_from(section), solve).run()
        solution = branch[-1]
    else:
        grid = grid_from(section)
        if solve.method == "trivial":
            seed = ScalarField.zeros(grid)
        elif solve.seed == "oned":
            lattice = grid.lattice
            profile = sinh_gordon.oned_solution(solve.energy, section.nx, section.ny, polish=False)
            seed = ScalarField(grid, profile.u.values)
            if abs(profile.grid.lattice.omega1 - lattice.omega1) > 1e-9 * abs(lattice.omega1):
                logger.warning(
                    "Seed profile period differs from the configured lattice; the seed is resampled as is",
                    extra={"stage": "solve"},
                )
        else:
            seed = sinh_gordon.seed_field(grid, solve.seed, solve.seed_amplitude)
        solution = sinh_gordon.SinhGordonSolver(solve).solve(seed)

    return solution, branch


def solution_summary(solution: SinhGordonSolution) -> dict:
    grid = solution.grid
    return {
        "branch_tag": solution.branch_tag,
        "residual_norm": solution.residual_norm,
        "iterations": solution.iterations,
        "amplitude": solution.amplitude,
        "parameter": solution.parameter,
        "history": list(solution.history),
        "grid": grid.to_dict(),
    }
