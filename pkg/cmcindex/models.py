"""
Domain models

Numerical carriers (lattice, grid, fields, solutions) are frozen dataclasses
holding read-only numpy arrays. Reports written to disk are pydantic models.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer


# ==================== Lattice and grid ====================

@dataclass(frozen=True)
class TorusLattice:
    """
    Surface lattice Λ = ⟨ω1, ω2⟩ and its period lattice Λ̃ = ⟨ω1, ω2/m⟩.

    The fundamental domain of Λ holds m translated copies of the fundamental
    domain of Λ̃ stacked along ω2.
    """

    omega1: complex
    omega2: complex
    m: int = 1

    def __post_init__(self):
        object.__setattr__(self, "omega1", complex(self.omega1))
        object.__setattr__(self, "omega2", complex(self.omega2))
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"Sublattice multiplicity must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))
        if not all(map(math.isfinite, (self.omega1.real, self.omega1.imag, self.omega2.real, self.omega2.imag))):
            raise ValueError("Lattice generators must be finite")
        if abs(self.omega1) == 0 or abs((self.omega2 / self.omega1).imag) < 1e-12:
            raise ValueError(f"Generators {self.omega1}, {self.omega2} are linearly dependent over R")

    @classmethod
    def square(cls, side: float, m: int = 1) -> "TorusLattice":
        return cls(complex(side, 0.0), complex(0.0, side), m)

    @classmethod
    def rectangular(cls, a: float, b: float, m: int = 1) -> "TorusLattice":
        return cls(complex(a, 0.0), complex(0.0, b), m)

    @property
    def area(self) -> float:
        """Euclidean area of the fundamental domain of Λ"""
        return abs((self.omega1.conjugate() * self.omega2).imag)

    @property
    def sub_generators(self) -> tuple[complex, complex]:
        """Generators of Λ̃"""
        return self.omega1, self.omega2 / self.m

    @property
    def jacobian(self) -> np.ndarray:
        """Matrix of (s, t) -> s·ω1 + t·ω2 in real (x, y) coordinates"""
        return np.array([
            [self.omega1.real, self.omega2.real],
            [self.omega1.imag, self.omega2.imag],
        ])

    def reduce(self, z, sub: bool = True):
        """
        Reduce points modulo Λ̃ (or Λ when sub=False) into the fundamental parallelogram

        Args:
            z: complex scalar or array
            sub: reduce modulo the period lattice Λ̃ instead of Λ

        Returns:
            Reduced points, same shape as z
        """
        w1, w2 = self.sub_generators if sub else (self.omega1, self.omega2)
        jac = np.array([[w1.real, w2.real], [w1.imag, w2.imag]])
        z = np.asarray(z, dtype=complex)
        s, t = np.linalg.solve(jac, np.stack([z.real.ravel(), z.imag.ravel()]))
        s = np.mod(s, 1.0)
        t = np.mod(t, 1.0)
        s[np.isclose(s, 1.0, rtol=0.0, atol=1e-12) | np.isclose(s, 0.0, rtol=0.0, atol=1e-12)] = 0.0
        t[np.isclose(t, 1.0, rtol=0.0, atol=1e-12) | np.isclose(t, 0.0, rtol=0.0, atol=1e-12)] = 0.0
        reduced = (s * w1 + t * w2).reshape(z.shape)
        return reduced if reduced.ndim else complex(reduced)

    def to_dict(self) -> dict:
        return {
            "omega1": [self.omega1.real, self.omega1.imag],
            "omega2": [self.omega2.real, self.omega2.imag],
            "m": self.m,
        }


@dataclass(frozen=True)
class Grid:
    """Uniform sampling of the fundamental domain of Λ: z = (j/nx)·ω1 + (k/ny)·ω2"""

    lattice: TorusLattice
    nx: int
    ny: int

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n <= 0 or n % 2:
                raise ValueError(f"{name} must be a positive even integer, got {n}")
            object.__setattr__(self, name, int(n))

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx); index [k, j] with k along ω2"""
        return self.ny, self.nx

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.lattice.area / self.size

    @property
    def cell_scale(self) -> float:
        """Shorter side length of a grid cell"""
        return min(abs(self.lattice.omega1) / self.nx, abs(self.lattice.omega2) / self.ny)

    def with_lattice(self, lattice: TorusLattice) -> "Grid":
        return Grid(lattice, self.nx, self.ny)

    def refined(self, factor: int) -> "Grid":
        return Grid(self.lattice, self.nx * factor, self.ny * factor)

    @cached_property
    def logical(self) -> tuple[np.ndarray, np.ndarray]:
        """Logical coordinates (s, t) in [0, 1)² of every node"""
        s = np.arange(self.nx) / self.nx
        t = np.arange(self.ny) / self.ny
        return np.meshgrid(s, t)

    @cached_property
    def points(self) -> np.ndarray:
        """Complex node positions z, shape (ny, nx)"""
        s, t = self.logical
        return s * self.lattice.omega1 + t * self.lattice.omega2

    @property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        z = self.points
        return z.real, z.imag

    @cached_property
    def mode_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer Fourier indices (p, q) in numpy FFT order, shape (ny, nx)"""
        p = np.fft.fftfreq(self.nx) * self.nx
        q = np.fft.fftfreq(self.ny) * self.ny
        return np.meshgrid(p, q)

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical wavevector ξ = 2π J^{-T} (p, q) of every Fourier mode"""
        p, q = self.mode_indices
        b = np.linalg.inv(self.lattice.jacobian).T
        xi_x = 2 * np.pi * (b[0, 0] * p + b[0, 1] * q)
        xi_y = 2 * np.pi * (b[1, 0] * p + b[1, 1] * q)
        return xi_x, xi_y

    @cached_property
    def xi_squared(self) -> np.ndarray:
        xi_x, xi_y = self.wavevectors
        return xi_x ** 2 + xi_y ** 2

    @cached_property
    def nyquist(self) -> np.ndarray:
        """Modes on the Nyquist row or column"""
        p, q = self.mode_indices
        return (np.abs(p) == self.nx // 2) | (np.abs(q) == self.ny // 2)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "lattice": self.lattice.to_dict()}


# ==================== Fields ====================

def _frozen_array(values, dtype, shape: tuple[int, int]) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.shape != shape:
        if arr.size == shape[0] * shape[1]:
            arr = arr.reshape(shape)
        else:
            raise ValueError(f"Field of shape {arr.shape} does not fit grid {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Field values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Doubly periodic real function sampled on a grid"""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, np.float64, self.grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        """Sample func(x, y) on the grid nodes"""
        x, y = grid.xy
        return cls(grid, np.broadcast_to(func(x, y), grid.shape))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def flat(self) -> np.ndarray:
        """Row-major layout: k (ω2 direction) slow, j fast"""
        return self.values.ravel()


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a grid, e.g. ∂_z^k u"""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, np.complex128, self.grid.shape))

    @property
    def real(self) -> ScalarField:
        return ScalarField(self.grid, self.values.real)

    @property
    def imag(self) -> ScalarField:
        return ScalarField(self.grid, self.values.imag)


# ==================== Solutions ====================

class BranchTag:
    TRIVIAL = "trivial"
    NEWTON = "newton"
    CONTINUATION = "continuation"
    ONED = "oned-shooting"
    FILE = "file"


@dataclass(frozen=True, eq=False)
class SinhGordonSolution:
    """A solution u of ¼Δ₀u + sinh u = 0 with its provenance"""

    u: ScalarField
    residual_norm: float
    branch_tag: str
    iterations: int = 0
    history: tuple[float, ...] = ()
    parameter: Optional[float] = None

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def amplitude(self) -> float:
        return self.u.sup_norm


# ==================== Reports ====================

class SchemaModel(BaseModel):
    """Base for JSON reports; "schema" is the first key of every document"""

    model_config = ConfigDict(populate_by_name=True, arbitrary_types_allowed=True)

    schema_version: int = Field(1, serialization_alias="schema", validation_alias="schema")

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class SpectrumReport(SchemaModel):
    """Low spectrum of the Jacobi operator and the index interval"""

    eigenvalues: list[float]
    neg_count: int
    zero_mult: int
    zero_tol: float
    index_lower: int
    index_upper: int
    ground_state_simple: bool
    kernel_flag: bool
    kernel_witness_rank: Optional[int] = None
    discretization: str = "dense"
    eigenfields: list[ScalarField] = Field(default_factory=list, exclude=True, repr=False)

    @field_serializer("eigenvalues")
    def _round_eigenvalues(self, values: list[float]) -> list[float]:
        return [round(v, 12) for v in values]


class NodalVertex(BaseModel):
    position: tuple[float, float]
    degree: int


class NodalEdge(BaseModel):
    """Arc between two vertices (equal endpoints for a loop-edge)"""

    start: int
    end: int
    points: list[tuple[float, float]]


class NodalGraph(SchemaModel):
    """Graph-with-loops traced from the zero set of a field"""

    vertices: list[NodalVertex] = Field(default_factory=list)
    edges: list[NodalEdge] = Field(default_factory=list)
    closed_loops: list[list[tuple[float, float]]] = Field(default_factory=list)
    faces: int = 0
    tol_zero: float = 0.0
    tol_vertex: float = 0.0
    degree_violations: list[int] = Field(default_factory=list)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_loops(self) -> int:
        return len(self.closed_loops)

    @property
    def num_edges(self) -> int:
        """ℰ counts closed loops as edges"""
        return len(self.edges) + len(self.closed_loops)

    @property
    def counts(self) -> dict:
        return {"F": self.faces, "E": self.num_edges, "V": self.num_vertices, "r": self.num_loops}


class EulerResult(BaseModel):
    lhs: int
    rhs: int
    holds: bool
    applicable: bool
    label: str
    face_euler_sum: Optional[int] = None


class CourantRow(BaseModel):
    j: int
    domains: int
    bound: int
    ok: bool
    kind: str = "eigenfield"


class VanishingFit(SchemaModel):
    points: list[tuple[float, float]]
    replicated_points: list[tuple[float, float]] = Field(default_factory=list)
    coefficients: list[float]
    residual: float
    basis_size: int
    least_singular_value: float
    no_exact_kernel: bool


class BoundInputs(BaseModel):
    model_config = ConfigDict(extra="forbid")

    g: int = Field(ge=2)
    m: int = Field(1, ge=1)
    d_zero: bool = False
    c_tilde: float = Field(1e7, gt=0)
    c: Optional[float] = Field(None, gt=0)
    area: Optional[float] = Field(None, gt=0)

    @property
    def c_value(self) -> float:
        """Isoperimetric constant C, π/(4·C̃) unless given"""
        return self.c if self.c is not None else math.pi / (4.0 * self.c_tilde)


class BoundReport(SchemaModel):
    inputs: BoundInputs
    thm1: int
    thm2: int
    thm2_applicable: bool
    thm3: int
    thm3_sharp: float
    thm3_simplified: float
    area_lower: float
    area: Optional[float] = None
    area_consistent: Optional[bool] = None
    korevaar_lower: Optional[int] = None
    spectrum_interval: Optional[tuple[int, int]] = None
    consistency: dict[str, bool] = Field(default_factory=dict)
    vacuous: list[str] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)
    known_g2_index_lower: int = 8
