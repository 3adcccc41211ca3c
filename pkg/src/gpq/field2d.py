"""Uniform square grids, discrete operators, quadrature, and the trapped energy.

Conventions: Dirichlet zero outside the box (fields are zero-extended), the
Laplacian is the 5-point stencil, the kinetic term is the staggered
forward-difference Dirichlet form (in 2D that sum of squared node differences
carries no factor of h), and box integrals are composite trapezoid.  With
zero-extension the Dirichlet form and the stencil are exact summation-by-parts
partners for fields vanishing on the boundary ring.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .radial import profile_evaluator


@dataclass(frozen=True)
class Grid2D:
    """Square grid of side 2L: nodes at center - L, ..., center + L per axis.

    The center offset lets a campaign zoom onto a concentration region
    without changing the node count.
    """

    half_width: float = 8.0
    n: int = 257
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (isinstance(self.n, int) and self.n >= 16):
            raise ParameterError(f"2D grid needs n >= 16 nodes per axis, got {self.n}")
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise ParameterError(f"2D grid needs half_width > 0, got {self.half_width}")
        if len(self.center) != 2 or not all(np.isfinite(c) for c in self.center):
            raise ParameterError(f"grid center must be a finite 2D point, got {self.center}")

    @property
    def h(self):
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def axis_x(self):
        return self.center[0] + np.linspace(-self.half_width, self.half_width, self.n)

    @property
    def axis_y(self):
        return self.center[1] + np.linspace(-self.half_width, self.half_width, self.n)

    def mesh(self):
        return np.meshgrid(self.axis_x, self.axis_y, indexing="ij")


@dataclass(frozen=True, eq=False)
class Field2D:
    """Real scalar samples on a Grid2D, row-major (x index first)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ParameterError("field shape does not match its grid")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("field contains non-finite samples")


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float       # Dirichlet form, int |grad u|^2
    potential: float     # int V u^2
    interaction: float   # int u^{q+2}
    total: float         # kinetic + potential - (2a/(q+2)) interaction


def integrate(f):
    """Composite trapezoid over the box."""
    return _trapz2(f.values, f.grid.h)


def _trapz2(values, h):
    return np.trapezoid(np.trapezoid(values, dx=h, axis=1), dx=h)


def mass(f):
    return _trapz2(f.values**2, f.grid.h)


def p_norm_power(f, p):
    return _trapz2(np.abs(f.values) ** p, f.grid.h)


def laplacian(f):
    """5-point stencil with zero extension beyond the box."""
    h2 = f.grid.h**2
    padded = np.pad(f.values, 1)
    out = (
        padded[2:, 1:-1]
        + padded[:-2, 1:-1]
        + padded[1:-1, 2:]
        + padded[1:-1, :-2]
        - 4.0 * f.values
    ) / h2
    return Field2D(f.grid, out)


def kinetic_energy(f):
    """Zero-extension Dirichlet form: sum of squared differences over all edges.

    Includes the edges from the boundary ring to the exterior zeros, which
    makes the form the exact adjoint of the zero-extension stencil.
    """
    padded = np.pad(f.values, 1)
    dx = np.diff(padded[:, 1:-1], axis=0)
    dy = np.diff(padded[1:-1, :], axis=1)
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def normalize(f):
    m = mass(f)
    if m <= 0:
        raise ParameterError("cannot normalize a field with zero mass")
    return Field2D(f.grid, f.values / math.sqrt(m))


def energy(f, V, a, q):
    """Trapped energy of a unit-mass field; V is a Field2D of samples."""
    m = mass(f)
    if abs(m - 1.0) > 1e-8:
        raise ParameterError(f"energy is compared on the unit-mass manifold, got mass {m}")
    kin = kinetic_energy(f)
    pot = _trapz2(V.values * f.values**2, f.grid.h)
    inter = p_norm_power(f, q + 2.0)
    total = kin + pot - 2.0 * a / (q + 2.0) * inter
    return EnergyBreakdown(kinetic=kin, potential=pot, interaction=inter, total=total)


def embed_radial(profile, grid, center=(0.0, 0.0)):
    """Sample a radial profile onto the 2D grid around the given center."""
    X, Y = grid.mesh()
    radii = np.hypot(X - center[0], Y - center[1])
    return Field2D(grid, profile_evaluator(profile)(radii))


def gaussian_field(grid, center=(0.0, 0.0), width=1.0):
    """Unit-mass Gaussian bump."""
    X, Y = grid.mesh()
    r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    return normalize(Field2D(grid, np.exp(-r2 / (2.0 * width**2))))


def bilinear_sample(f, x, y):
    """Sample the field at arbitrary points; zero outside the box."""
    h = f.grid.h
    L = f.grid.half_width
    cx, cy = f.grid.center
    gx = (np.asarray(x, dtype=float) - cx + L) / h
    gy = (np.asarray(y, dtype=float) - cy + L) / h
    n = f.grid.n
    inside = (gx >= 0) & (gx <= n - 1) & (gy >= 0) & (gy <= n - 1)
    gx = np.clip(gx, 0, n - 1)
    gy = np.clip(gy, 0, n - 1)
    i0 = np.clip(np.floor(gx).astype(int), 0, n - 2)
    j0 = np.clip(np.floor(gy).astype(int), 0, n - 2)
    tx = gx - i0
    ty = gy - j0
    vals = (
        f.values[i0, j0] * (1 - tx) * (1 - ty)
        + f.values[i0 + 1, j0] * tx * (1 - ty)
        + f.values[i0, j0 + 1] * (1 - tx) * ty
        + f.values[i0 + 1, j0 + 1] * tx * ty
    )
    return np.where(inside, vals, 0.0)


def save_field(f, directory, stem):
    """Flat binary of float64 in row-major order plus a JSON header {L, n}."""
    directory.mkdir(parents=True, exist_ok=True)
    bin_path = directory / f"{stem}.bin"
    hdr_path = directory / f"{stem}.json"
    f.values.astype("<f8").tofile(bin_path)
    with open(hdr_path, "w") as fh:
        json.dump({"L": f.grid.half_width, "n": f.grid.n}, fh, sort_keys=True)
        fh.write("\n")
    return [bin_path, hdr_path]


def load_field(directory, stem):
    with open(directory / f"{stem}.json") as fh:
        hdr = json.load(fh)
    grid = Grid2D(hdr["L"], hdr["n"])
    values = np.fromfile(directory / f"{stem}.bin", dtype="<f8").reshape(grid.n, grid.n)
    return Field2D(grid, values)
