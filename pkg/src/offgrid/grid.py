"""Centered integer index grids and the complex sample containers built on them.

A grid of size ``n`` covers the indices ``-(n // 2), ..., (n - 1) // 2`` on each
axis.  Sample arrays are stored row-major with index ``k`` at array position
``k + n // 2``, so ``k = 0`` is always present.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyResultError,
    FormatError,
    GridMismatchError,
    InvalidArgumentError,
)


@dataclass(frozen=True)
class Axis:
    """Closed integer range ``lo..hi``."""

    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


@dataclass(frozen=True)
class IndexGrid:
    """Rectangular grid of integer indices.

    Grids made by :func:`make_grid` are centered.  Contraction can produce
    off-center grids (e.g. ``{-3..2}`` inside ``{-4..3}``), so the axis
    ranges are stored explicitly.
    """

    rows: Axis
    cols: Axis

    @property
    def n1(self) -> int:
        return self.rows.size

    @property
    def n2(self) -> int:
        return self.cols.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    def k1(self) -> np.ndarray:
        """Row indices as a column vector (broadcasts against :meth:`k2`)."""
        return self.rows.indices()[:, None]

    def k2(self) -> np.ndarray:
        return self.cols.indices()[None, :]

    def radius_squared(self) -> np.ndarray:
        return (self.k1() ** 2 + self.k2() ** 2).astype(float)

    def offset(self, k1: int, k2: int) -> int:
        """Row-major linear offset of index ``(k1, k2)``."""
        if not (self.rows.lo <= k1 <= self.rows.hi and self.cols.lo <= k2 <= self.cols.hi):
            raise InvalidArgumentError(f"index ({k1}, {k2}) outside grid")
        return (k1 - self.rows.lo) * self.n2 + (k2 - self.cols.lo)

    def position(self, k1: int, k2: int) -> tuple[int, int]:
        """Array position ``(i, j)`` of index ``(k1, k2)``."""
        return (k1 - self.rows.lo, k2 - self.cols.lo)

    def contains(self, other: "IndexGrid") -> bool:
        return (
            self.rows.lo <= other.rows.lo
            and other.rows.hi <= self.rows.hi
            and self.cols.lo <= other.cols.lo
            and other.cols.hi <= self.cols.hi
        )

    def is_centered(self) -> bool:
        return self.rows.lo == -(self.n1 // 2) and self.cols.lo == -(self.n2 // 2)

    def centered_subgrid(self, m1: int, m2: int) -> "IndexGrid":
        sub = make_grid(m1, m2)
        if not self.contains(sub):
            raise InvalidArgumentError(f"{m1}x{m2} does not fit in {self.n1}x{self.n2}")
        return sub

    def __iter__(self):
        for a in self.rows.indices():
            for b in self.cols.indices():
                yield (int(a), int(b))


def _centered_axis(n: int) -> Axis:
    return Axis(-(n // 2), (n - 1) // 2)


def make_grid(n1: int, n2: int | None = None) -> IndexGrid:
    if n2 is None:
        n2 = n1
    if int(n1) != n1 or int(n2) != n2 or n1 < 1 or n2 < 1:
        raise InvalidArgumentError(f"grid dimensions must be positive integers, got {n1}x{n2}")
    return IndexGrid(_centered_axis(int(n1)), _centered_axis(int(n2)))


def contract(outer: IndexGrid, inner: IndexGrid) -> IndexGrid:
    """Indices ``k`` of ``outer`` with ``k + inner`` inside ``outer``."""
    rows = Axis(outer.rows.lo - inner.rows.lo, outer.rows.hi - inner.rows.hi)
    cols = Axis(outer.cols.lo - inner.cols.lo, outer.cols.hi - inner.cols.hi)
    if rows.size < 1 or cols.size < 1:
        raise EmptyResultError("inner grid does not fit inside outer grid")
    return IndexGrid(rows, cols)


def minkowski(a: IndexGrid, b: IndexGrid) -> IndexGrid:
    return IndexGrid(
        Axis(a.rows.lo + b.rows.lo, a.rows.hi + b.rows.hi),
        Axis(a.cols.lo + b.cols.lo, a.cols.hi + b.cols.hi),
    )


def negate(a: IndexGrid) -> IndexGrid:
    return IndexGrid(Axis(-a.rows.hi, -a.rows.lo), Axis(-a.cols.hi, -a.cols.lo))


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=np.complex128, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True, eq=False)
class SpectralImage:
    """Complex samples on an index grid, ``values[i, j]`` at ``k = (rows.lo + i, cols.lo + j)``."""

    grid: IndexGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.grid.shape:
            raise GridMismatchError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("spectral samples must be finite")
        object.__setattr__(self, "values", values)

    def __getitem__(self, k: tuple[int, int]) -> complex:
        return complex(self.values[self.grid.position(*k)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def restrict(self, sub: IndexGrid) -> "SpectralImage":
        if not self.grid.contains(sub):
            raise GridMismatchError("restriction grid is not inside the sample grid")
        i0, j0 = self.grid.position(sub.rows.lo, sub.cols.lo)
        return SpectralImage(sub, self.values[i0 : i0 + sub.n1, j0 : j0 + sub.n2])

    def embed(self, outer: IndexGrid) -> "SpectralImage":
        """Zero-pad into a larger grid."""
        if not outer.contains(self.grid):
            raise GridMismatchError("embedding grid does not contain the sample grid")
        out = np.zeros(outer.shape, dtype=np.complex128)
        i0, j0 = outer.position(self.grid.rows.lo, self.grid.cols.lo)
        out[i0 : i0 + self.grid.n1, j0 : j0 + self.grid.n2] = self.values
        return SpectralImage(outer, out)

    @classmethod
    def zeros(cls, grid: IndexGrid) -> "SpectralImage":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class GradientSpectrum:
    """Pair of derivative spectra stored as one ``(2, n1, n2)`` array."""

    grid: IndexGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (2, *self.grid.shape):
            raise GridMismatchError(f"gradient values shape {values.shape} does not match grid")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_components(cls, first: SpectralImage, second: SpectralImage) -> "GradientSpectrum":
        if first.grid != second.grid:
            raise GridMismatchError("gradient components must share one grid")
        return cls(first.grid, np.stack([first.values, second.values]))

    @property
    def first(self) -> SpectralImage:
        return SpectralImage(self.grid, self.values[0])

    @property
    def second(self) -> SpectralImage:
        return SpectralImage(self.grid, self.values[1])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


# -- SPC1 binary format ------------------------------------------------------

_SPC_MAGIC = b"SPC1"


def write_spc(path: str | Path, image: SpectralImage | np.ndarray) -> None:
    """Write samples as ``SPC1``: magic, u32 n1, u32 n2, then (re, im) float64 pairs.

    A real ``ndarray`` is written with zero imaginary parts.
    """
    values = image.values if isinstance(image, SpectralImage) else np.asarray(image)
    if values.ndim != 2:
        raise InvalidArgumentError("SPC1 holds a single 2-D array")
    n1, n2 = values.shape
    body = np.empty((n1, n2, 2), dtype="<f8")
    body[..., 0] = values.real
    body[..., 1] = values.imag if np.iscomplexobj(values) else 0.0
    with open(path, "wb") as fh:
        fh.write(_SPC_MAGIC)
        fh.write(struct.pack("<II", n1, n2))
        fh.write(body.tobytes(order="C"))


def read_spc(path: str | Path) -> SpectralImage:
    """Read an ``SPC1`` file as samples on the centered grid of its size."""
    data = Path(path).read_bytes()
    if data[:4] != _SPC_MAGIC or len(data) < 12:
        raise FormatError(f"{path}: not an SPC1 file")
    n1, n2 = struct.unpack("<II", data[4:12])
    expected = 12 + 16 * n1 * n2
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=12).reshape(n1, n2, 2)
    return SpectralImage(make_grid(n1, n2), body[..., 0] + 1j * body[..., 1])
