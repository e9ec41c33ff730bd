"""Symmetric elliptic matrix fields and their Beltrami data.

If div(A grad u) = 0 then v with grad v = R A grad u, R the rotation by a
right angle, is a conjugate function and f = u + iv solves
f_zbar = mu f_z + nu conj(f_z) with

    mu = (a22 - a11 - 2i a12) / (1 + tr A + det A)
    nu = (1 - det A) / (1 + tr A + det A)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import Grid, RegionMask
from .report import ReportTable
from .transforms import SpectralPlan


class NotPositiveDefinite(ValueError):
    """A sample of a matrix field is not symmetric positive definite."""


@dataclass(frozen=True, eq=False)
class MatrixField:
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.a11, self.a12, self.a22)]
        shape = np.broadcast_shapes(*(a.shape for a in arrs))
        arrs = [np.broadcast_to(a, shape).copy() for a in arrs]
        for name, a in zip(("a11", "a12", "a22"), arrs):
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite samples")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(self.a11 <= 0) or np.any(self.det <= 0):
            raise NotPositiveDefinite("matrix field is not positive definite")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.a11.shape

    @property
    def det(self) -> np.ndarray:
        return self.a11 * self.a22 - self.a12 ** 2

    @property
    def trace(self) -> np.ndarray:
        return self.a11 + self.a22

    def eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * self.trace
        rad = np.hypot(0.5 * (self.a11 - self.a22), self.a12)
        lmax = half + rad
        # det / lmax avoids cancellation in half - rad
        return self.det / lmax, lmax

    def apply(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.a11 * x + self.a12 * y, self.a12 * x + self.a22 * y

    @classmethod
    def identity(cls, shape) -> "MatrixField":
        return cls(np.ones(shape), np.zeros(shape), np.ones(shape))


def ellipticity(A: MatrixField) -> np.ndarray:
    """Smallest K with |h|^2 / K <= <h, A h> <= K |h|^2 at each sample."""
    lmin, lmax = A.eigenvalues()
    return np.maximum(lmax, 1.0 / lmin)


def beltrami_from_matrix(A: MatrixField) -> tuple[np.ndarray, np.ndarray]:
    D = 1.0 + A.trace + A.det
    mu = (A.a22 - A.a11 - 2j * A.a12) / D
    nu = (1.0 - A.det) / D
    return mu, nu


def matrix_from_beltrami(mu, nu=0.0) -> MatrixField:
    """Inverse of beltrami_from_matrix; nu must be real and |mu| + |nu| < 1."""
    mu = np.asarray(mu, dtype=complex)
    nu = np.asarray(nu)
    if np.iscomplexobj(nu):
        if np.any(np.abs(nu.imag) > 1e-14):
            raise ValueError("a symmetric matrix field has real nu")
        nu = nu.real
    nu = np.broadcast_to(nu.astype(float), mu.shape)
    if np.any(np.abs(mu) + np.abs(nu) >= 1):
        raise NotPositiveDefinite("need |mu| + |nu| < 1")
    X = 4.0 / ((1.0 + nu) ** 2 - np.abs(mu) ** 2)  # equals 1 + tr A + det A
    det = 1.0 - nu * X
    tr = X * (1.0 + nu) - 2.0
    return MatrixField(0.5 * (tr - mu.real * X), -0.5 * mu.imag * X, 0.5 * (tr + mu.real * X))


def _grad(u: np.ndarray, grid: Grid, method: str) -> tuple[np.ndarray, np.ndarray]:
    if method == "central":
        gx, gy = np.gradient(np.asarray(u, dtype=float), grid.h, edge_order=2)
        return gx, gy
    if method == "spectral":
        return SpectralPlan(grid).gradient(u)
    raise ValueError(f"unknown gradient method {method!r}")


def conjugate_relation_check(u: np.ndarray, v: np.ndarray, A: MatrixField, grid: Grid,
                             region: RegionMask | None = None, gradient: str = "central") -> ReportTable:
    """Residuals of grad v = R A grad u and of the R-linear Beltrami equation for f = u + iv."""
    bits = np.ones((grid.n, grid.n), dtype=bool) if region is None else region.bits
    ux, uy = _grad(u, grid, gradient)
    vx, vy = _grad(v, grid, gradient)
    px, py = A.apply(ux, uy)
    # rotation by a right angle: (x, y) -> (-y, x)
    r1 = math.sqrt(grid.cell_area * float(np.sum(((vx + py) ** 2 + (vy - px) ** 2)[bits])))
    fx, fy = ux + 1j * vx, uy + 1j * vy
    fz = 0.5 * (fx - 1j * fy)
    fzbar = 0.5 * (fx + 1j * fy)
    mu, nu = beltrami_from_matrix(A)
    res = fzbar - mu * fz - nu * np.conj(fz)
    r2 = math.sqrt(grid.cell_area * float(np.sum(np.abs(res[bits]) ** 2)))
    df = math.sqrt(grid.cell_area * float(np.sum((np.abs(fz) + np.abs(fzbar))[bits] ** 2)))
    table = ReportTable("conjugate relation", ["r1", "r2", "df_norm"])
    table.add([r1, r2, df], r2 <= 10 * r1 + 1e-8 * df)
    return table


def energy(u: np.ndarray, A: MatrixField, region: RegionMask, gradient: str = "central") -> float:
    """h^2 sum of <grad u, A grad u> over the region."""
    grid = region.grid
    ux, uy = _grad(u, grid, gradient)
    px, py = A.apply(ux, uy)
    return grid.cell_area * float(np.sum((ux * px + uy * py)[region.bits]))


def jacobian_integral(u: np.ndarray, v: np.ndarray, region: RegionMask, gradient: str = "central") -> float:
    grid = region.grid
    ux, uy = _grad(u, grid, gradient)
    vx, vy = _grad(v, grid, gradient)
    return grid.cell_area * float(np.sum((ux * vy - uy * vx)[region.bits]))
