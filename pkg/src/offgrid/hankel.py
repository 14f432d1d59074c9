"""Two-fold Hankel lifting of gradient spectra.

For a sample grid ``O`` and filter grid ``K`` the lifted matrix has rows indexed
by ``O:K`` and columns by ``K`` (both row-major), entry ``(k, l)`` equal to
``g(k + l)``, with the two gradient components stacked vertically.  Production
code never forms the matrix; products with it are batched FFT correlations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sfft

from .errors import DimensionMismatchError, GridMismatchError, InvalidArgumentError
from .grid import GradientSpectrum, IndexGrid, contract, make_grid


@dataclass(frozen=True)
class HankelShape:
    sample_grid: IndexGrid
    filter_grid: IndexGrid

    def __post_init__(self):
        if self.filter_grid.n1 % 2 == 0 or self.filter_grid.n2 % 2 == 0:
            raise InvalidArgumentError("filter grids must have odd dimensions")
        if not self.filter_grid.is_centered():
            raise InvalidArgumentError("filter grids must be centered")
        # raises EmptyResultError when the filter does not fit
        contract(self.sample_grid, self.filter_grid)

    @classmethod
    def of(cls, sample_grid: IndexGrid, k1: int, k2: int | None = None) -> "HankelShape":
        return cls(sample_grid, make_grid(k1, k1 if k2 is None else k2))

    @property
    def row_grid(self) -> IndexGrid:
        return contract(self.sample_grid, self.filter_grid)

    @property
    def m1(self) -> int:
        return self.row_grid.size

    @property
    def m2(self) -> int:
        return self.filter_grid.size

    @property
    def matrix_shape(self) -> tuple[int, int]:
        return (2 * self.m1, self.m2)


def _check(g: GradientSpectrum, shape: HankelShape) -> None:
    if g.grid != shape.sample_grid:
        raise GridMismatchError("gradient spectrum is not on the Hankel sample grid")


def build_dense(g: GradientSpectrum, shape: HankelShape) -> np.ndarray:
    """Explicit ``2 m1 x m2`` two-fold Hankel matrix (reference implementation)."""
    _check(g, shape)
    kshape = shape.filter_grid.shape
    blocks = [
        sliding_window_view(g.values[c], kshape).reshape(shape.m1, shape.m2) for c in range(2)
    ]
    return np.vstack(blocks)


def valid_correlate(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Batched 2-D valid cross-correlation ``out[p] = sum_q x[p + q] * kernels[q]``.

    ``x`` has shape ``(..., n1, n2)`` and ``kernels`` ``(..., k1, k2)``; leading
    axes broadcast.  Evaluated with FFTs of size ``>= (n1, n2)``, which is wrap-free
    for the valid region.
    """
    n1, n2 = x.shape[-2:]
    k1, k2 = kernels.shape[-2:]
    if k1 > n1 or k2 > n2:
        raise DimensionMismatchError("kernel larger than the correlated array")
    s = (sfft.next_fast_len(n1), sfft.next_fast_len(n2))
    flipped = kernels[..., ::-1, ::-1]
    prod = sfft.fft2(x, s=s) * sfft.fft2(flipped, s=s)
    full = sfft.ifft2(prod)
    return full[..., k1 - 1 : n1, k2 - 1 : n2]


def full_convolve(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    """Batched 2-D full linear convolution, output ``(n1 + k1 - 1, n2 + k2 - 1)``."""
    n1, n2 = x.shape[-2:]
    k1, k2 = kernels.shape[-2:]
    out = (n1 + k1 - 1, n2 + k2 - 1)
    s = (sfft.next_fast_len(out[0]), sfft.next_fast_len(out[1]))
    full = sfft.ifft2(sfft.fft2(x, s=s) * sfft.fft2(kernels, s=s))
    return full[..., : out[0], : out[1]]


def _as_filters(bank_matrix: np.ndarray, shape: HankelShape) -> np.ndarray:
    """Columns of an ``m2 x p`` matrix as a ``(p, k1, k2)`` filter stack."""
    bank_matrix = np.asarray(bank_matrix)
    if bank_matrix.ndim != 2 or bank_matrix.shape[0] != shape.m2:
        raise DimensionMismatchError(f"bank matrix needs {shape.m2} rows, got {bank_matrix.shape}")
    return bank_matrix.T.reshape(-1, *shape.filter_grid.shape)


def _as_coefficients(c: np.ndarray, shape: HankelShape) -> np.ndarray:
    """Columns of a ``2 m1 x p`` matrix as a ``(2, p, r1, r2)`` stack."""
    c = np.asarray(c)
    if c.ndim != 2 or c.shape[0] != 2 * shape.m1:
        raise DimensionMismatchError(f"coefficient matrix needs {2 * shape.m1} rows, got {c.shape}")
    rows = shape.row_grid.shape
    return c.T.reshape(c.shape[1], 2, *rows).transpose(1, 0, 2, 3)


def lift_times_filters(g: GradientSpectrum, bank_matrix: np.ndarray, shape: HankelShape) -> np.ndarray:
    """``build_dense(g, shape) @ bank_matrix`` via one FFT correlation per filter and component."""
    _check(g, shape)
    filters = _as_filters(bank_matrix, shape)
    out = valid_correlate(g.values[:, None], filters[None])  # (2, p, r1, r2)
    p = filters.shape[0]
    return out.reshape(2, p, shape.m1).transpose(0, 2, 1).reshape(2 * shape.m1, p)


def lift_adjoint_times(g: GradientSpectrum, c: np.ndarray, shape: HankelShape) -> np.ndarray:
    """``build_dense(g, shape).conj().T @ c`` via FFT correlations."""
    _check(g, shape)
    coeffs = _as_coefficients(c, shape)  # (2, p, r1, r2)
    out = valid_correlate(np.conj(g.values)[:, None], coeffs).sum(axis=0)  # (p, k1, k2)
    return out.reshape(out.shape[0], shape.m2).T


def unlift(z: np.ndarray, shape: HankelShape) -> GradientSpectrum:
    """Adjoint of the lifting: accumulate matrix entries back onto ``g(k + l)``."""
    z = np.asarray(z)
    if z.shape != shape.matrix_shape:
        raise DimensionMismatchError(f"expected {shape.matrix_shape}, got {z.shape}")
    r1, r2 = shape.row_grid.shape
    k1, k2 = shape.filter_grid.shape
    out = np.zeros((2, *shape.sample_grid.shape), dtype=np.complex128)
    blocks = z.reshape(2, r1, r2, k1, k2)
    for q1 in range(k1):
        for q2 in range(k2):
            out[:, q1 : q1 + r1, q2 : q2 + r2] += blocks[:, :, :, q1, q2]
    return GradientSpectrum(shape.sample_grid, out)


def unlift_product(c: np.ndarray, bank_matrix: np.ndarray, shape: HankelShape) -> np.ndarray:
    """``unlift(c @ bank_matrix.conj().T)`` as a ``(2, n1, n2)`` array, one full convolution per column."""
    coeffs = _as_coefficients(c, shape)  # (2, p, r1, r2)
    filters = _as_filters(bank_matrix, shape)  # (p, k1, k2)
    if coeffs.shape[1] != filters.shape[0]:
        raise DimensionMismatchError("coefficient and filter column counts differ")
    return full_convolve(coeffs, np.conj(filters)[None]).sum(axis=1)


def patch_count_weights(shape: HankelShape) -> np.ndarray:
    """Number of Hankel entries that copy each sample; ``H* H`` is multiplication by it."""
    r1, r2 = shape.row_grid.shape
    k1, k2 = shape.filter_grid.shape
    w1 = np.convolve(np.ones(r1, dtype=np.int64), np.ones(k1, dtype=np.int64))
    w2 = np.convolve(np.ones(r2, dtype=np.int64), np.ones(k2, dtype=np.int64))
    return np.outer(w1, w2)


def lifted_frobenius_sq(g: GradientSpectrum, shape: HankelShape) -> float:
    """``||H(g)||_F^2`` without forming the matrix."""
    return float(np.sum(patch_count_weights(shape) * np.abs(g.values) ** 2))


def annihilation_residual(g: GradientSpectrum, filt: np.ndarray, shape: HankelShape) -> float:
    """Scale-free residual ``||H(g) a|| / (||H(g)||_F ||a||)``; zero for an annihilating filter."""
    filt = np.asarray(filt, dtype=np.complex128)
    if filt.shape != shape.filter_grid.shape:
        raise DimensionMismatchError("filter support must match the filter grid")
    a = filt.reshape(-1, 1)
    num = np.linalg.norm(lift_times_filters(g, a, shape))
    den = np.sqrt(lifted_frobenius_sq(g, shape)) * np.linalg.norm(a)
    return float(num / (den + np.finfo(float).tiny)) if num > 0 else 0.0


def shifted_filters(filt: np.ndarray, minimal_grid: IndexGrid, big_grid: IndexGrid) -> np.ndarray:
    """All translates ``a(. - m)``, ``m`` in ``big:minimal``, embedded in ``big_grid``.

    Returns a ``(|big:minimal|, n1, n2)`` stack of filters on ``big_grid``.
    """
    shifts = contract(big_grid, minimal_grid)
    out = []
    for m1, m2 in shifts:
        emb = np.zeros(big_grid.shape, dtype=np.complex128)
        i0, j0 = big_grid.position(minimal_grid.rows.lo + m1, minimal_grid.cols.lo + m2)
        emb[i0 : i0 + minimal_grid.n1, j0 : j0 + minimal_grid.n2] = filt
        out.append(emb)
    return np.array(out)


def rank_upper_bound(filter_grid: IndexGrid, minimal_grid: IndexGrid) -> int:
    """``|K'| - |K':K|``, the rank bound for an assumed support ``K'`` around a minimal ``K``."""
    if not (minimal_grid.n1 <= filter_grid.n1 and minimal_grid.n2 <= filter_grid.n2):
        raise InvalidArgumentError("minimal filter grid larger than the assumed filter grid")
    return filter_grid.size - contract(filter_grid, minimal_grid).size


def necessary_condition(n: int, k1: int, k2: int) -> bool:
    """Sample-count condition ``2 (N - K1)(N - K2) >= (K1 + 1)(K2 + 1) - 1``."""
    if n < 1 or k1 < 1 or k2 < 1:
        raise InvalidArgumentError("inputs must be positive")
    return 2 * (n - k1) * (n - k2) >= (k1 + 1) * (k2 + 1) - 1


def numerical_rank(singular_values: np.ndarray, rel_tol: float) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))
