"""Uniform periodic grids over [-L, L]^2 and the complex fields that live on them.

Samples are cell centred: sample (i, j) sits at
``x = -L + (i + 1/2) h``, ``y = -L + (j + 1/2) h`` with ``h = 2L / n``, so no
sample ever lands on the origin. Arrays are stored with shape ``(n, n)`` and
index ``[i, j]``; flattening in C order gives the row-major layout used by the
CF1/RM1 file formats.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

CF1_MAGIC = b"CF1\0"
RM1_MAGIC = b"RM1\0"
_HEADER = struct.Struct("<4sId")


class GridMismatchError(ValueError):
    """Raised when two objects that must share a grid do not."""


@dataclass(frozen=True)
class Grid:
    n: int
    L: float

    def __post_init__(self):
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 64, got {self.n}")
        if self.L < 2:
            raise ValueError(f"half width L must be >= 2, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def z(self) -> np.ndarray:
        x = self.axis
        return x[:, None] + 1j * x[None, :]

    @cached_property
    def r(self) -> np.ndarray:
        return np.abs(self.z)

    # masks -----------------------------------------------------------------
    def disk(self, radius: float, center: complex = 0.0) -> "RegionMask":
        return RegionMask(self, np.abs(self.z - center) < radius)

    def annulus(self, inner: float, outer: float) -> "RegionMask":
        return RegionMask(self, (self.r > inner) & (self.r < outer))

    def full(self) -> "RegionMask":
        return RegionMask(self, np.ones((self.n, self.n), dtype=bool))

    def empty(self) -> "RegionMask":
        return RegionMask(self, np.zeros((self.n, self.n), dtype=bool))

    def unit_disk(self) -> "RegionMask":
        return RegionMask(self, self.r <= 1.0)

    def nearest_index(self, point: complex) -> tuple[int, int]:
        i = int(np.clip(np.floor((point.real + self.L) / self.h), 0, self.n - 1))
        j = int(np.clip(np.floor((point.imag + self.L) / self.h), 0, self.n - 1))
        return i, j


def _check_same_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        n = self.grid.n
        if s.shape == (n * n,):
            s = s.reshape(n, n)
        if s.shape != (n, n):
            raise ValueError(f"samples must have shape ({n}, {n}), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("field samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ComplexField":
        return cls(grid, func(grid.z))

    @property
    def flat(self) -> np.ndarray:
        return self.samples.reshape(-1)

    def mean(self) -> complex:
        return complex(self.samples.mean())

    def __add__(self, other):
        if isinstance(other, ComplexField):
            _check_same_grid(self.grid, other.grid)
            return ComplexField(self.grid, self.samples + other.samples)
        return ComplexField(self.grid, self.samples + other)

    def __sub__(self, other):
        if isinstance(other, ComplexField):
            _check_same_grid(self.grid, other.grid)
            return ComplexField(self.grid, self.samples - other.samples)
        return ComplexField(self.grid, self.samples - other)

    def __mul__(self, other):
        if isinstance(other, ComplexField):
            _check_same_grid(self.grid, other.grid)
            return ComplexField(self.grid, self.samples * other.samples)
        return ComplexField(self.grid, self.samples * other)

    __rmul__ = __mul__

    def __neg__(self):
        return ComplexField(self.grid, -self.samples)

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.samples))

    def abs(self) -> np.ndarray:
        return np.abs(self.samples)


@dataclass(frozen=True, eq=False)
class RegionMask:
    grid: Grid
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        n = self.grid.n
        if b.shape == (n * n,):
            b = b.reshape(n, n)
        if b.shape != (n, n):
            raise ValueError(f"mask must have shape ({n}, {n}), got {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def complement(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.bits)

    def __and__(self, other: "RegionMask") -> "RegionMask":
        _check_same_grid(self.grid, other.grid)
        return RegionMask(self.grid, self.bits & other.bits)

    def __or__(self, other: "RegionMask") -> "RegionMask":
        _check_same_grid(self.grid, other.grid)
        return RegionMask(self.grid, self.bits | other.bits)


def l2_norm(f: ComplexField) -> float:
    """L2 norm with the midpoint rule: ``sqrt(h^2 * sum |f|^2)``."""
    return float(np.sqrt(f.grid.cell_area * np.sum(np.abs(f.samples) ** 2)))


def restrict(f: ComplexField, E: RegionMask) -> ComplexField:
    _check_same_grid(f.grid, E.grid)
    return ComplexField(f.grid, np.where(E.bits, f.samples, 0.0))


def measure(E: RegionMask) -> float:
    return E.count * E.grid.cell_area


def image_measure(J: np.ndarray, E: RegionMask, tol: float = 1e-9) -> float:
    """Area of f(E) obtained by integrating the Jacobian J over E.

    Exact for Sobolev homeomorphisms with the Lusin N property. A sample of J
    below ``-tol`` inside E means J is not a valid Jacobian field.
    """
    J = np.asarray(J, dtype=float)
    if J.shape != E.bits.shape:
        raise GridMismatchError("Jacobian shape does not match mask grid")
    inside = J[E.bits]
    if inside.size and inside.min() < -tol:
        raise ValueError(f"negative Jacobian sample {inside.min():.3e} inside region")
    return float(E.grid.cell_area * inside.sum())


# CF1 / RM1 files --------------------------------------------------------------

def _read_header(buf: bytes, magic: bytes) -> tuple[Grid, int]:
    if len(buf) < _HEADER.size:
        raise ValueError("file too short for header")
    tag, n, L = _HEADER.unpack_from(buf)
    if tag != magic:
        raise ValueError(f"bad magic {tag!r}, expected {magic!r}")
    return Grid(int(n), float(L)), _HEADER.size


def field_to_bytes(f: ComplexField) -> bytes:
    payload = np.empty(f.grid.n * f.grid.n * 2, dtype="<f8")
    payload[0::2] = f.flat.real
    payload[1::2] = f.flat.imag
    return _HEADER.pack(CF1_MAGIC, f.grid.n, f.grid.L) + payload.tobytes()


def field_from_bytes(buf: bytes) -> ComplexField:
    grid, off = _read_header(buf, CF1_MAGIC)
    expected = grid.n * grid.n * 16
    if len(buf) - off != expected:
        raise ValueError(f"CF1 payload is {len(buf) - off} bytes, expected {expected}")
    data = np.frombuffer(buf, dtype="<f8", offset=off)
    return ComplexField(grid, data[0::2] + 1j * data[1::2])


def mask_to_bytes(E: RegionMask) -> bytes:
    return _HEADER.pack(RM1_MAGIC, E.grid.n, E.grid.L) + E.bits.reshape(-1).astype(np.uint8).tobytes()


def mask_from_bytes(buf: bytes) -> RegionMask:
    grid, off = _read_header(buf, RM1_MAGIC)
    expected = grid.n * grid.n
    if len(buf) - off != expected:
        raise ValueError(f"RM1 payload is {len(buf) - off} bytes, expected {expected}")
    data = np.frombuffer(buf, dtype=np.uint8, offset=off)
    if data.max(initial=0) > 1:
        raise ValueError("RM1 payload bytes must be 0 or 1")
    return RegionMask(grid, data.astype(bool))


def write_field(path, f: ComplexField) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def read_field(path) -> ComplexField:
    return field_from_bytes(Path(path).read_bytes())


def write_mask(path, E: RegionMask) -> None:
    Path(path).write_bytes(mask_to_bytes(E))


def read_mask(path) -> RegionMask:
    return mask_from_bytes(Path(path).read_bytes())
