"""Tight-frame filter banks from the SVD of a lifted gradient spectrum.

The right singular vectors ``Y`` of ``H(D v)`` give filters ``a_m = Y[:, m] / sqrt(m2)``.
Since ``Y`` is unitary these satisfy the unitary extension principle, so the
undecimated periodic transform built from them is a tight frame.

Coefficient stacks are ``(2, m2, n1, n2)`` arrays: gradient component, filter,
then the sample grid.  Analysis is periodic cross-correlation with each
filter; synthesis is its adjoint.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .errors import (
    DimensionMismatchError,
    FormatError,
    GridMismatchError,
    InvalidArgumentError,
    NumericalError,
)
from .forward import deriv
from .grid import GradientSpectrum, IndexGrid, SpectralImage, make_grid, minkowski, negate
from .hankel import HankelShape, build_dense, numerical_rank

CoefficientStack = np.ndarray

DEFAULT_RANK_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class FilterBank:
    filter_grid: IndexGrid
    filters: np.ndarray  # (m2, k1, k2)
    singular_values: np.ndarray
    rank: int
    sample_grid: IndexGrid

    def __post_init__(self):
        filters = np.array(self.filters, dtype=np.complex128, copy=True)
        sv = np.array(self.singular_values, dtype=float, copy=True)
        m2 = self.filter_grid.size
        if filters.shape != (m2, *self.filter_grid.shape):
            raise DimensionMismatchError(f"expected {m2} filters on {self.filter_grid.shape}")
        if sv.shape != (m2,):
            raise DimensionMismatchError("one singular value per filter required")
        if not 0 <= self.rank <= m2:
            raise InvalidArgumentError(f"rank {self.rank} outside [0, {m2}]")
        if self.filter_grid.n1 > self.sample_grid.n1 or self.filter_grid.n2 > self.sample_grid.n2:
            raise InvalidArgumentError("filters larger than the sample grid")
        filters.setflags(write=False)
        sv.setflags(write=False)
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "singular_values", sv)

    @property
    def m2(self) -> int:
        return self.filter_grid.size

    @property
    def matrix(self) -> np.ndarray:
        """Filters as the columns of an ``m2 x m2`` matrix (row-major over the filter grid)."""
        return self.filters.reshape(self.m2, self.m2).T

    def on_grid(self, sample_grid: IndexGrid) -> "FilterBank":
        """Same filters acting on another sample grid."""
        return replace(self, sample_grid=sample_grid)

    def with_rank(self, rank: int) -> "FilterBank":
        return replace(self, rank=int(rank))

    def transfer_functions(self) -> np.ndarray:
        """DFTs (over the periodic sample grid) of the correlation kernels, ``(m2, n1, n2)``.

        Filter tap ``l`` sits at array position ``-l mod n`` so that a circular
        convolution with the kernel is correlation with the filter.
        """
        n1, n2 = self.sample_grid.shape
        kernel = np.zeros((self.m2, n1, n2), dtype=np.complex128)
        rows = (-self.filter_grid.rows.indices()) % n1
        cols = (-self.filter_grid.cols.indices()) % n2
        kernel[:, rows[:, None], cols[None, :]] = self.filters
        return sfft.fft2(kernel)


def from_matrix(
    matrix: np.ndarray,
    filter_grid: IndexGrid,
    sample_grid: IndexGrid,
    singular_values: np.ndarray | None = None,
    rank: int | None = None,
) -> FilterBank:
    m2 = filter_grid.size
    matrix = np.asarray(matrix)
    if matrix.shape != (m2, m2):
        raise DimensionMismatchError(f"bank matrix must be {m2}x{m2}")
    sv = np.zeros(m2) if singular_values is None else singular_values
    return FilterBank(
        filter_grid,
        matrix.T.reshape(m2, *filter_grid.shape),
        sv,
        m2 if rank is None else rank,
        sample_grid,
    )


def hankel_svd(g: GradientSpectrum, shape: HankelShape) -> tuple[np.ndarray, np.ndarray]:
    """Singular values (padded to ``m2``) and the full unitary right factor ``Y``."""
    h = build_dense(g, shape)
    try:
        _, s, vh = np.linalg.svd(h, full_matrices=(h.shape[0] < h.shape[1]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD of the lifted matrix failed: {exc}") from exc
    sv = np.zeros(shape.m2)
    sv[: s.size] = s
    return sv, vh.conj().T


def bank_from_spectrum(
    v: SpectralImage,
    filter_grid: IndexGrid | tuple[int, int],
    rank: int | None = None,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> FilterBank:
    """Tight-frame bank from the SVD of ``H(D v)``.

    ``rank=None`` takes the numerical rank: the number of singular values above
    ``rank_tol`` times the largest.
    """
    if not isinstance(filter_grid, IndexGrid):
        filter_grid = make_grid(*filter_grid)
    shape = HankelShape(v.grid, filter_grid)
    sv, y = hankel_svd(deriv(v), shape)
    r = numerical_rank(sv, rank_tol) if rank is None else int(rank)
    return from_matrix(y / np.sqrt(shape.m2), filter_grid, v.grid, sv, r)


def analysis(bank: FilterBank, g: GradientSpectrum) -> CoefficientStack:
    if g.grid != bank.sample_grid:
        raise GridMismatchError("gradient spectrum is not on the bank's sample grid")
    return analysis_values(bank.transfer_functions(), g.values)


def analysis_values(transfer: np.ndarray, g: np.ndarray) -> CoefficientStack:
    """Array form of :func:`analysis` with precomputed transfer functions."""
    return sfft.ifft2(sfft.fft2(g)[:, None] * transfer[None])


def synthesis(bank: FilterBank, c: CoefficientStack) -> GradientSpectrum:
    if c.shape != (2, bank.m2, *bank.sample_grid.shape):
        raise DimensionMismatchError(f"coefficient stack shape {c.shape} does not match bank")
    return GradientSpectrum(bank.sample_grid, synthesis_values(bank.transfer_functions(), c))


def synthesis_values(transfer: np.ndarray, c: CoefficientStack) -> np.ndarray:
    return sfft.ifft2(np.sum(np.conj(transfer)[None] * sfft.fft2(c), axis=1))


def uep_residual(bank: FilterBank) -> float:
    """Largest deviation of ``sum_m sum_l a_m(k + l) conj(a_m(l))`` from ``delta(k)`` over ``k`` in ``K - K``."""
    shifts = minkowski(bank.filter_grid, negate(bank.filter_grid))
    k1, k2 = bank.filter_grid.shape
    padded = np.zeros((bank.m2, shifts.n1 + k1 - 1, shifts.n2 + k2 - 1), dtype=np.complex128)
    # place each filter so that padded[:, k + l] holds a_m(k + l) for k in shifts, l in K
    padded[:, k1 - 1 : 2 * k1 - 1, k2 - 1 : 2 * k2 - 1] = bank.filters
    worst = 0.0
    for s1 in shifts.rows.indices():
        for s2 in shifts.cols.indices():
            shifted = padded[:, s1 + k1 - 1 : s1 + 2 * k1 - 1, s2 + k2 - 1 : s2 + 2 * k2 - 1]
            val = np.sum(shifted * np.conj(bank.filters))
            target = 1.0 if (s1 == 0 and s2 == 0) else 0.0
            worst = max(worst, abs(val - target))
    return float(worst)


def weights(bank: FilterBank, nu: float, eps: float) -> np.ndarray:
    """Per-filter thresholds ``nu / (sigma_m + eps)``."""
    if eps <= 0:
        raise InvalidArgumentError("eps must be positive")
    return nu / (bank.singular_values + eps)


# -- FBK1 binary format --------------------------------------------------------

_FBK_MAGIC = b"FBK1"


def write_bank(path: str | Path, bank: FilterBank) -> None:
    """``FBK1``: magic, u32 k1, k2, m2, rank, m2 float64 singular values, then the filters."""
    k1, k2 = bank.filter_grid.shape
    body = np.empty((bank.m2, k1, k2, 2), dtype="<f8")
    body[..., 0] = bank.filters.real
    body[..., 1] = bank.filters.imag
    with open(path, "wb") as fh:
        fh.write(_FBK_MAGIC)
        fh.write(struct.pack("<IIII", k1, k2, bank.m2, bank.rank))
        fh.write(np.asarray(bank.singular_values, dtype="<f8").tobytes())
        fh.write(body.tobytes(order="C"))


def read_bank(path: str | Path, sample_grid: IndexGrid) -> FilterBank:
    """Read an ``FBK1`` bank; the file does not record the sample grid, so the caller supplies it."""
    data = Path(path).read_bytes()
    if data[:4] != _FBK_MAGIC or len(data) < 20:
        raise FormatError(f"{path}: not an FBK1 file")
    k1, k2, m2, rank = struct.unpack("<IIII", data[4:20])
    if m2 != k1 * k2:
        raise FormatError(f"{path}: m2={m2} does not equal k1*k2={k1 * k2}")
    expected = 20 + 8 * m2 + 16 * m2 * k1 * k2
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    sv = np.frombuffer(data, dtype="<f8", count=m2, offset=20)
    body = np.frombuffer(data, dtype="<f8", offset=20 + 8 * m2).reshape(m2, k1, k2, 2)
    return FilterBank(make_grid(k1, k2), body[..., 0] + 1j * body[..., 1], sv, rank, sample_grid)
