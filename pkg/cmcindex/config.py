"""
Configuration management using Pydantic Settings
Application settings come from the environment; pipeline knobs come from an INI file
"""

import configparser
import math
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from cmcindex.errors import ConfigError


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_prefix="CMC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Application
    app_name: str = "cmcindex"
    app_version: str = "1.0.0"
    debug: bool = False

    # Logging
    log_level: str = "INFO"
    log_file: str = "./logs/cmcindex.log"
    log_max_bytes: int = 10 * 1024 * 1024  # 10MB
    log_backup_count: int = 5

    # Artifacts
    output_dir: str = "./output"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


# Convenience access
settings = get_settings()


# ==================== Pipeline sections ====================

class Symmetry(str, Enum):
    """Symmetry imposed on Newton iterates"""
    NONE = "none"
    EVEN = "even"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class LatticeSection(_Section):
    """[lattice] - surface lattice, sublattice multiplicity and sampling"""

    kind: Literal["square", "rectangular", "general"] = "square"
    side: float = Field(2 * math.pi, gt=0)
    a: float = Field(2 * math.pi, gt=0)
    b: float = Field(2 * math.pi, gt=0)
    omega1_re: float = 2 * math.pi
    omega1_im: float = 0.0
    omega2_re: float = 0.0
    omega2_im: float = 2 * math.pi
    m: int = Field(1, ge=1)
    nx: int = Field(32, gt=0)
    ny: int = Field(32, gt=0)
    aliasing_threshold: float = Field(1e-10, gt=0)

    # End point of a lattice family for branch continuation (absent = same as start)
    end_side: Optional[float] = Field(None, gt=0)
    end_a: Optional[float] = Field(None, gt=0)
    end_b: Optional[float] = Field(None, gt=0)
    end_omega1_re: Optional[float] = None
    end_omega1_im: Optional[float] = None
    end_omega2_re: Optional[float] = None
    end_omega2_im: Optional[float] = None

    @model_validator(mode="after")
    def _even_resolution(self):
        if self.nx % 2 or self.ny % 2:
            raise ValueError("nx and ny must be even")
        return self

    def generators(self, end: bool = False) -> tuple[complex, complex]:
        """Lattice generators at the start (or end) of the family"""
        if self.kind == "square":
            side = self.end_side if end and self.end_side is not None else self.side
            return complex(side, 0.0), complex(0.0, side)
        if self.kind == "rectangular":
            a = self.end_a if end and self.end_a is not None else self.a
            b = self.end_b if end and self.end_b is not None else self.b
            return complex(a, 0.0), complex(0.0, b)

        def pick(name: str) -> float:
            value = getattr(self, f"end_{name}") if end else None
            return getattr(self, name) if value is None else value

        return (
            complex(pick("omega1_re"), pick("omega1_im")),
            complex(pick("omega2_re"), pick("omega2_im")),
        )


class SolveConfig(_Section):
    """[solve] - sinh-Gordon solver knobs"""

    method: Literal["trivial", "newton", "oned", "continuation", "file"] = "oned"
    seed: Literal["zero", "cosine", "oned"] = "oned"
    seed_amplitude: float = 0.5
    seed_file: str = ""
    energy: float = Field(6.0, gt=4.0)
    newton_tol: float = Field(1e-10, gt=0)
    max_iters: int = Field(50, ge=1)
    symmetry: Symmetry = Symmetry.NONE
    deflation: bool = False
    deflation_shift: float = Field(1.0, gt=0)
    gmres_restart: int = Field(60, ge=1)
    gmres_maxiter: int = Field(20, ge=1)
    quadratic_constant: float = Field(10.0, gt=0)
    continuation_steps: int = Field(6, ge=2)
    continuation_step: float = Field(0.05, gt=0)
    continuation_amplitude: float = Field(0.05, gt=0)
    max_step_halvings: int = Field(3, ge=0)


class SpectrumSection(_Section):
    """[spectrum] - Jacobi operator eigen-solve and hierarchy evaluation"""

    count: int = Field(16, ge=1)
    zero_tol: Optional[float] = Field(None, gt=0)
    kernel_tol: float = Field(1e-5, gt=0)
    dense_max: int = Field(4096, ge=1)
    solver: Literal["lanczos", "lobpcg"] = "lanczos"
    eig_tol: float = Field(1e-12, gt=0)
    jmax: int = Field(12, ge=2)
    jacobi_count: int = Field(3, ge=1)
    gram_tol: float = Field(1e-8, gt=0)


class NodalSection(_Section):
    """[nodal] - nodal graph extraction and Courant checks"""

    field: str = "v1"
    tol_zero: float = Field(1e-6, gt=0)
    tol_vertex: float = Field(1e-3, gt=0)
    mask_radius: float = Field(3.0, gt=0)
    candidate_threshold: float = Field(0.25, gt=0)
    fit_tol: float = Field(1e-8, gt=0)
    genus_m: int = Field(1, ge=0)
    courant_combinations: int = Field(20, ge=0)
    cluster_tol: float = Field(1e-8, gt=0)

    # Pipeline vanishing fit: prescribed zeros "x,y; x,y" over Jacobi fields or eigenfields
    fit_points: str = ""
    fit_basis: Literal["jacobi", "eigen"] = "jacobi"
    fit_size: int = Field(0, ge=0)


class BoundsSection(_Section):
    """[bounds] - closed-form index bounds"""

    g: int = Field(2, ge=2)
    m: Optional[int] = Field(None, ge=1)
    d_zero: bool = False
    c_tilde: float = Field(1e7, gt=0)
    c: Optional[float] = Field(None, gt=0)
    area_from_solution: bool = True


class PipelineSection(_Section):
    """[pipeline] - run-level options"""

    output_dir: str = Field(default_factory=lambda: settings.output_dir)
    seed: int = 0


class PipelineConfig(_Section):
    """Full pipeline configuration, one attribute per INI section"""

    lattice: LatticeSection = Field(default_factory=LatticeSection)
    solve: SolveConfig = Field(default_factory=SolveConfig)
    spectrum: SpectrumSection = Field(default_factory=SpectrumSection)
    nodal: NodalSection = Field(default_factory=NodalSection)
    bounds: BoundsSection = Field(default_factory=BoundsSection)
    pipeline: PipelineSection = Field(default_factory=PipelineSection)


def _sections_from_ini(path: Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e

    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        # Empty values mean "use the default"
        sections[name] = {k: v for k, v in parser.items(name) if v.strip() != ""}
    return sections


def load_pipeline_config(
    path: Optional[str | Path] = None,
    overrides: Optional[dict[str, dict[str, Any]]] = None
) -> PipelineConfig:
    """
    Load and validate a pipeline config

    Args:
        path: INI file with [lattice], [solve], [spectrum], [nodal], [bounds], [pipeline]
        overrides: Per-section values that win over the file (command-line flags)

    Returns:
        Validated PipelineConfig

    Raises:
        ConfigError: unreadable file, unknown section or key, invalid value
    """
    data: dict[str, dict[str, Any]] = _sections_from_ini(Path(path)) if path else {}
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e
