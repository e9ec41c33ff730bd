"""Beurling and Cauchy transforms as Fourier multipliers on the periodic grid.

With the transform convention ``f^(xi) = sum f(x) exp(-i x.xi)`` and the
complex frequency ``xi = xi1 + i xi2``, the derivatives act as

    d/dzbar  <->  i xi / 2          d/dz  <->  i conj(xi) / 2

so the Beurling transform (``S d/dzbar = d/dz``) is the unimodular multiplier
``conj(xi) / xi`` and the Cauchy transform (the inverse of d/dzbar) is
``2 / (i xi)``. Both are undefined at xi = 0 and are set to zero there: outputs
are mean free and only determined up to an additive constant.
"""

from __future__ import annotations

import os
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .field import ComplexField, Grid, GridMismatchError


def thread_cap() -> int:
    """Parallelism cap from ``BELTRAMI_THREADS`` (default: all cores)."""
    raw = os.environ.get("BELTRAMI_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


class SpectralPlan:
    """Frequency lattice and multipliers for one grid.

    Immutable after construction; every transform allocates its own output so
    a plan can be shared between threads.
    """

    def __init__(self, grid: Grid, workers: int | None = None):
        self.grid = grid
        self.workers = workers if workers is not None else thread_cap()
        k = sfft.fftfreq(grid.n, d=grid.h) * 2.0 * np.pi
        xi = k[:, None] + 1j * k[None, :]
        xi.setflags(write=False)
        self.xi = xi

    @cached_property
    def _nonzero(self) -> np.ndarray:
        return self.xi != 0

    @cached_property
    def beurling_multiplier(self) -> np.ndarray:
        m = np.zeros_like(self.xi)
        nz = self._nonzero
        m[nz] = np.conj(self.xi[nz]) / self.xi[nz]
        m.setflags(write=False)
        return m

    @cached_property
    def cauchy_multiplier(self) -> np.ndarray:
        c = np.zeros_like(self.xi)
        nz = self._nonzero
        c[nz] = 2.0 / (1j * self.xi[nz])
        c.setflags(write=False)
        return c

    @cached_property
    def dbar_multiplier(self) -> np.ndarray:
        return 0.5j * self.xi

    @cached_property
    def dz_multiplier(self) -> np.ndarray:
        return 0.5j * np.conj(self.xi)

    def apply(self, multiplier: np.ndarray, samples: np.ndarray) -> np.ndarray:
        spec = sfft.fft2(samples, workers=self.workers)
        spec *= multiplier
        return sfft.ifft2(spec, workers=self.workers)

    def _check(self, f: ComplexField) -> None:
        if f.grid != self.grid:
            raise GridMismatchError(f"field grid {f.grid} does not match plan grid {self.grid}")

    def beurling(self, f: ComplexField) -> ComplexField:
        self._check(f)
        return ComplexField(self.grid, self.apply(self.beurling_multiplier, f.samples))

    def cauchy(self, f: ComplexField) -> ComplexField:
        self._check(f)
        return ComplexField(self.grid, self.apply(self.cauchy_multiplier, f.samples))

    def dbar(self, f: ComplexField) -> ComplexField:
        self._check(f)
        return ComplexField(self.grid, self.apply(self.dbar_multiplier, f.samples))

    def dz(self, f: ComplexField) -> ComplexField:
        self._check(f)
        return ComplexField(self.grid, self.apply(self.dz_multiplier, f.samples))

    def gradient(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spectral (d/dx, d/dy) of a real grid function."""
        spec = sfft.fft2(np.asarray(u, dtype=float), workers=self.workers)
        ux = sfft.ifft2(spec * (1j * self.xi.real), workers=self.workers).real
        uy = sfft.ifft2(spec * (1j * self.xi.imag), workers=self.workers).real
        return ux, uy


def beurling(plan: SpectralPlan, f: ComplexField) -> ComplexField:
    return plan.beurling(f)


def cauchy(plan: SpectralPlan, f: ComplexField) -> ComplexField:
    return plan.cauchy(f)


def dbar(plan: SpectralPlan, f: ComplexField) -> ComplexField:
    return plan.dbar(f)


def dz(plan: SpectralPlan, f: ComplexField) -> ComplexField:
    return plan.dz(f)
