"""
Spectral calculus on the torus C/Λ

Every operator is a diagonal Fourier multiplier in the logical coordinates
(s, t) of z = s·ω1 + t·ω2, with the physical wavevector ξ = 2π J^{-T}(p, q).
"""

from typing import Sequence, Union

import numpy as np

from cmcindex.errors import AliasingError, GridMismatch
from cmcindex.models import ComplexField, Grid, ScalarField, TorusLattice

AnyField = Union[ScalarField, ComplexField]

ALIASING_THRESHOLD = 1e-10


def _wrap(field: AnyField, values: np.ndarray) -> AnyField:
    if isinstance(field, ScalarField):
        return ScalarField(field.grid, values.real)
    return ComplexField(field.grid, values)


def same_grid(*fields: AnyField) -> Grid:
    """Common grid of the fields, or GridMismatch"""
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch(f"Fields live on different grids: {grid.to_dict()} vs {f.grid.to_dict()}")
    return grid


# ==================== Resolution guard ====================

def aliasing_fraction(field: AnyField) -> float:
    """Share of spectral energy in modes with |p| > nx/3 or |q| > ny/3"""
    grid = field.grid
    power = np.abs(np.fft.fft2(field.values)) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    p, q = grid.mode_indices
    high = (np.abs(p) > grid.nx / 3) | (np.abs(q) > grid.ny / 3)
    return float(power[high].sum() / total)


def check_resolved(field: AnyField, threshold: float = ALIASING_THRESHOLD) -> None:
    fraction = aliasing_fraction(field)
    if fraction > threshold:
        raise AliasingError(
            f"Field under-resolved: top-third spectral energy {fraction:.3e} exceeds {threshold:.1e}",
            fraction=fraction,
            threshold=threshold,
            grid=field.grid.to_dict(),
        )


# ==================== Multipliers ====================

def dz_multiplier(grid: Grid) -> np.ndarray:
    """∂_z = ½(∂_x − i∂_y) ↔ ½(iξx + ξy)"""
    xi_x, xi_y = grid.wavevectors
    mult = 0.5 * (1j * xi_x + xi_y)
    mult[grid.nyquist] = 0.0
    return mult


def dzbar_multiplier(grid: Grid) -> np.ndarray:
    """∂_z̄ = ½(∂_x + i∂_y) ↔ ½(iξx − ξy)"""
    xi_x, xi_y = grid.wavevectors
    mult = 0.5 * (1j * xi_x - xi_y)
    mult[grid.nyquist] = 0.0
    return mult


def apply_multiplier(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """ifft2(multiplier · fft2(values)) over the last two axes"""
    return np.fft.ifft2(np.fft.fft2(values, axes=(-2, -1)) * multiplier, axes=(-2, -1))


def laplacian_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Δ_Eucl = −(∂_xx + ∂_yy) on raw real arrays, no resolution guard"""
    return apply_multiplier(values, grid.xi_squared).real


# ==================== Operators ====================

def dz(field: AnyField, k: int = 1, threshold: float = ALIASING_THRESHOLD, check: bool = True) -> ComplexField:
    """
    k-th complex derivative ∂_z^k of a field

    Args:
        field: real or complex field
        k: derivative order ≥ 1
        threshold: aliasing threshold for the resolution guard
        check: run the resolution guard

    Returns:
        ComplexField of ∂_z^k field

    Raises:
        AliasingError: field not resolved on its grid
    """
    if k < 1:
        raise ValueError(f"Derivative order must be >= 1, got {k}")
    if check:
        check_resolved(field, threshold)
    grid = field.grid
    return ComplexField(grid, apply_multiplier(field.values, dz_multiplier(grid) ** k))


def dzbar(field: AnyField, k: int = 1, threshold: float = ALIASING_THRESHOLD, check: bool = True) -> ComplexField:
    """k-th conjugate derivative ∂_z̄^k"""
    if k < 1:
        raise ValueError(f"Derivative order must be >= 1, got {k}")
    if check:
        check_resolved(field, threshold)
    grid = field.grid
    return ComplexField(grid, apply_multiplier(field.values, dzbar_multiplier(grid) ** k))


def laplacian_eucl(field: ScalarField, threshold: float = ALIASING_THRESHOLD, check: bool = True) -> ScalarField:
    """Δ_Eucl f = −(f_xx + f_yy), multiplier |ξ|²"""
    if check:
        check_resolved(field, threshold)
    return ScalarField(field.grid, laplacian_values(field.values, field.grid))


def gradient(field: ScalarField, threshold: float = ALIASING_THRESHOLD, check: bool = True) -> tuple[ScalarField, ScalarField]:
    """(∂_x f, ∂_y f)"""
    if check:
        check_resolved(field, threshold)
    grid = field.grid
    xi_x, xi_y = grid.wavevectors
    coeffs = np.fft.fft2(field.values)
    coeffs[grid.nyquist] = 0.0
    fx = np.fft.ifft2(1j * xi_x * coeffs).real
    fy = np.fft.ifft2(1j * xi_y * coeffs).real
    return ScalarField(grid, fx), ScalarField(grid, fy)


def logical_derivatives(values: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """(∂_s f, ∂_t f) along the lattice generators, for edge interpolation"""
    p, q = grid.mode_indices
    coeffs = np.fft.fft2(values)
    coeffs[grid.nyquist] = 0.0
    ds = np.fft.ifft2(2j * np.pi * p * coeffs).real
    dt = np.fft.ifft2(2j * np.pi * q * coeffs).real
    return ds, dt


# ==================== Symmetries ====================

def half_periods(lattice: TorusLattice) -> list[complex]:
    """{0, ω̃1/2, ω̃2/2, (ω̃1+ω̃2)/2} reduced to the fundamental domain of Λ̃"""
    w1, w2 = lattice.sub_generators
    return [lattice.reduce(w) for w in (0j, w1 / 2, w2 / 2, (w1 + w2) / 2)]


def reflect_values(values: np.ndarray) -> np.ndarray:
    """Index reflection (k, j) -> (−k, −j) mod (ny, nx) over the last two axes"""
    return np.roll(np.flip(values, axis=(-2, -1)), 1, axis=(-2, -1))


def reflect(field: AnyField) -> AnyField:
    """f(−z) by index reflection"""
    return _wrap(field, reflect_values(field.values))


def even_part(values: np.ndarray) -> np.ndarray:
    """½(f(z) + f(−z))"""
    return 0.5 * (values + reflect_values(values))


def shift(field: AnyField, ds: float, dt: float) -> AnyField:
    """f(z + ds·ω1 + dt·ω2), exact for band-limited fields"""
    grid = field.grid
    p, q = grid.mode_indices
    phase = np.exp(2j * np.pi * (p * ds + q * dt))
    return _wrap(field, apply_multiplier(field.values, phase))


def translate(field: AnyField, w: complex) -> AnyField:
    """f(z + w) for an arbitrary complex offset w"""
    s, t = np.linalg.solve(field.grid.lattice.jacobian, [w.real, w.imag])
    return shift(field, float(s), float(t))


# ==================== Resampling and point evaluation ====================

def _pad_axis(coeffs: np.ndarray, n_new: int, axis: int) -> np.ndarray:
    n = coeffs.shape[axis]
    if n_new == n:
        return coeffs
    half = n // 2
    c = np.moveaxis(coeffs, axis, 0)
    out = np.zeros((n_new,) + c.shape[1:], dtype=complex)
    out[:half] = c[:half]
    out[n_new - half + 1:] = c[half + 1:]
    # split the Nyquist mode symmetrically
    out[half] = 0.5 * c[half]
    out[n_new - half] = 0.5 * c[half]
    return np.moveaxis(out, 0, axis)


def upsample(field: ScalarField, factor: int) -> ScalarField:
    """Fourier zero-padding onto a grid refined by an integer factor"""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"Upsampling factor must be a positive integer, got {factor}")
    if factor == 1:
        return field
    grid = field.grid.refined(int(factor))
    coeffs = np.fft.fft2(field.values)
    coeffs = _pad_axis(_pad_axis(coeffs, grid.ny, 0), grid.nx, 1)
    values = np.fft.ifft2(coeffs).real * factor ** 2
    return ScalarField(grid, values)


def to_logical(lattice: TorusLattice, points: Sequence[complex] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.asarray(points, dtype=complex).ravel()
    s, t = np.linalg.solve(lattice.jacobian, np.stack([z.real, z.imag]))
    return s, t


def interpolate(field: AnyField, points, dx: int = 0, dy: int = 0) -> np.ndarray:
    """
    Evaluate the trigonometric interpolant (or a derivative of it) at arbitrary points

    Args:
        field: field to evaluate
        points: complex points
        dx, dy: derivative orders in x and y

    Returns:
        Values at the points (real for ScalarField)
    """
    grid = field.grid
    coeffs = np.fft.fft2(field.values) / grid.size
    if dx or dy:
        xi_x, xi_y = grid.wavevectors
        coeffs = coeffs * (1j * xi_x) ** dx * (1j * xi_y) ** dy
        coeffs[grid.nyquist] = 0.0

    s, t = to_logical(grid.lattice, points)
    p = np.fft.fftfreq(grid.nx) * grid.nx
    q = np.fft.fftfreq(grid.ny) * grid.ny
    ex = np.exp(2j * np.pi * np.outer(s, p))
    ey = np.exp(2j * np.pi * np.outer(t, q))
    values = np.einsum("pk,kj,pj->p", ey, coeffs, ex)
    return values.real if isinstance(field, ScalarField) else values


# ==================== Quadrature ====================

def integrate(field: ScalarField) -> float:
    """∫ f dxdy by the periodic trapezoid rule"""
    return float(field.values.sum() * field.grid.cell_area)


def inner(a: ScalarField, b: ScalarField) -> float:
    same_grid(a, b)
    return float(np.sum(a.values * b.values) * a.grid.cell_area)


def l2_norm(field: ScalarField) -> float:
    return float(np.sqrt(inner(field, field)))
