"""Diagonal degradation operators on Fourier samples and the spectral derivative."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, GridMismatchError, InvalidArgumentError
from .grid import GradientSpectrum, IndexGrid, SpectralImage, make_grid


@dataclass(frozen=True, eq=False)
class ForwardOp:
    """Pointwise multiplier on a sample grid.

    ``mask`` marks the sampled frequencies.  ``multiplier`` defaults to the
    mask itself (a sampling projection); a general complex multiplier models
    deblurring-type operators.  Either way the DC sample must be observed.
    """

    grid: IndexGrid
    mask: np.ndarray
    multiplier: np.ndarray | None = None

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.shape != self.grid.shape:
            raise GridMismatchError("mask shape must equal grid shape")
        mult = mask.astype(np.complex128) if self.multiplier is None else np.array(
            self.multiplier, dtype=np.complex128, copy=True
        )
        if mult.shape != self.grid.shape:
            raise GridMismatchError("multiplier shape must equal grid shape")
        mask.setflags(write=False)
        mult.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "multiplier", mult)
        dc = self.grid.position(0, 0)
        if not mask[dc] or mult[dc] == 0:
            raise InvalidArgumentError("the DC frequency must be sampled")

    @property
    def is_projection(self) -> bool:
        return bool(np.array_equal(self.multiplier, self.mask.astype(np.complex128)))

    @property
    def sampled_count(self) -> int:
        return int(self.mask.sum())

    def gain(self) -> np.ndarray:
        """``|A(k)|^2``, the diagonal of ``A* A``."""
        return np.abs(self.multiplier) ** 2

    def adjoint_values(self, f: np.ndarray) -> np.ndarray:
        return np.conj(self.multiplier) * f

    def restrict(self, sub: IndexGrid) -> "ForwardOp":
        i0, j0 = self.grid.position(sub.rows.lo, sub.cols.lo)
        sl = (slice(i0, i0 + sub.n1), slice(j0, j0 + sub.n2))
        return ForwardOp(sub, self.mask[sl], self.multiplier[sl])


def lowpass_op(grid: IndexGrid, inner: tuple[int, int] | int) -> ForwardOp:
    if isinstance(inner, int):
        inner = (inner, inner)
    m1, m2 = inner
    if m1 < 1 or m2 < 1 or m1 > grid.n1 or m2 > grid.n2:
        raise InvalidArgumentError(f"low-pass block {m1}x{m2} does not fit in {grid.n1}x{grid.n2}")
    sub = make_grid(m1, m2)
    mask = np.zeros(grid.shape, dtype=bool)
    i0, j0 = grid.position(sub.rows.lo, sub.cols.lo)
    mask[i0 : i0 + m1, j0 : j0 + m2] = True
    return ForwardOp(grid, mask)


def random_mask(
    grid: IndexGrid,
    fraction: float,
    density_power: float = 3.0,
    calib: int = 12,
    seed: int = 0,
) -> ForwardOp:
    """Variable-density random sampling with a fully sampled centre block.

    Outside the ``calib x calib`` block, frequencies are drawn without
    replacement with probability proportional to ``(1 - r / r_max) ** density_power``
    (``r`` the radial index distance).  The total count is ``round(fraction * |grid|)``.
    """
    if not 0 < fraction <= 1:
        raise InvalidArgumentError("fraction must lie in (0, 1]")
    if density_power < 0 or calib < 1:
        raise InvalidArgumentError("density_power must be >= 0 and calib >= 1")
    budget = int(round(fraction * grid.size))
    calib1, calib2 = min(calib, grid.n1), min(calib, grid.n2)
    if budget < calib1 * calib2:
        raise InvalidArgumentError(
            f"budget {budget} cannot cover the {calib1}x{calib2} calibration block"
        )
    mask = lowpass_op(grid, (calib1, calib2)).mask.copy()
    free = np.flatnonzero(~mask.ravel())
    need = budget - int(mask.sum())
    if need >= free.size:
        mask[:] = True
        return ForwardOp(grid, mask)
    if need > 0:
        r = np.sqrt(grid.radius_squared()).ravel()[free]
        weight = np.clip(1.0 - r / r.max(), 0.0, None) ** density_power
        rng = np.random.default_rng(seed)
        positive = np.count_nonzero(weight)
        if positive >= need:
            chosen = rng.choice(free, size=need, replace=False, p=weight / weight.sum())
        else:
            # too few positive-weight candidates: take them all, fill the rest uniformly
            rest = free[weight == 0]
            chosen = np.concatenate(
                [free[weight > 0], rng.choice(rest, size=need - positive, replace=False)]
            )
        mask.ravel()[chosen] = True
    return ForwardOp(grid, mask)


def apply(op: ForwardOp, v: SpectralImage) -> SpectralImage:
    if v.grid != op.grid:
        raise GridMismatchError("operator and samples live on different grids")
    return SpectralImage(v.grid, op.multiplier * v.values)


def apply_adjoint(op: ForwardOp, v: SpectralImage) -> SpectralImage:
    if v.grid != op.grid:
        raise GridMismatchError("operator and samples live on different grids")
    return SpectralImage(v.grid, op.adjoint_values(v.values))


def derivative_multipliers(grid: IndexGrid) -> np.ndarray:
    """``(2, n1, n2)`` array of ``2 pi i k_1`` and ``2 pi i k_2``."""
    k1 = np.broadcast_to(grid.k1(), grid.shape)
    k2 = np.broadcast_to(grid.k2(), grid.shape)
    return 2j * np.pi * np.stack([k1, k2]).astype(np.complex128)


def deriv_symbol(grid: IndexGrid) -> np.ndarray:
    """Diagonal of ``D* D``: ``4 pi^2 |k|^2``."""
    return 4 * np.pi**2 * grid.radius_squared()


def deriv(v: SpectralImage) -> GradientSpectrum:
    return GradientSpectrum(v.grid, derivative_multipliers(v.grid) * v.values[None])


def deriv_adjoint(g: GradientSpectrum) -> SpectralImage:
    mult = derivative_multipliers(g.grid)
    return SpectralImage(g.grid, np.sum(np.conj(mult) * g.values, axis=0))


# -- MSK1 binary format --------------------------------------------------------

_MSK_MAGIC = b"MSK1"


def write_mask(path: str | Path, op: ForwardOp | np.ndarray) -> None:
    mask = op.mask if isinstance(op, ForwardOp) else np.asarray(op, dtype=bool)
    n1, n2 = mask.shape
    with open(path, "wb") as fh:
        fh.write(_MSK_MAGIC)
        fh.write(struct.pack("<II", n1, n2))
        fh.write(mask.astype(np.uint8).tobytes(order="C"))


def read_mask(path: str | Path) -> ForwardOp:
    data = Path(path).read_bytes()
    if data[:4] != _MSK_MAGIC or len(data) < 12:
        raise FormatError(f"{path}: not an MSK1 file")
    n1, n2 = struct.unpack("<II", data[4:12])
    if len(data) != 12 + n1 * n2:
        raise FormatError(f"{path}: truncated mask")
    body = np.frombuffer(data, dtype=np.uint8, offset=12).reshape(n1, n2)
    if np.any(body > 1):
        raise FormatError(f"{path}: mask bytes must be 0 or 1")
    return ForwardOp(make_grid(n1, n2), body.astype(bool))
