"""Edge-set estimation from the null-space filters of a learned bank.

Each null-space filter ``b_m`` is the coefficient vector of a trigonometric
polynomial ``phi_m(x) = sum_k b_m(k) exp(-2 pi i k.x)`` vanishing on the edges.
The sum-of-squares average

    phi_bar(x) = sqrt(sum_m |phi_m(x)|^2)

vanishes there too and is (generically) positive elsewhere.  It depends only
on the span of the null-space filters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError
from .framebank import FilterBank
from .grid import make_grid


@dataclass(frozen=True, eq=False)
class EdgeMap:
    """``values[j1, j2] = phi_bar(j1 / p1 - 1/2, j2 / p2 - 1/2)``."""

    resolution: tuple[int, int]
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != tuple(self.resolution):
            raise InvalidArgumentError("edge map values do not match the resolution")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("edge map values must be finite and nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        p1, p2 = self.resolution
        return np.arange(p1) / p1 - 0.5, np.arange(p2) / p2 - 0.5


def evaluate_polynomials(filters: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """``sum_k filters[m](k) exp(-2 pi i k.x)`` on the tensor grid ``x1 x x2``, shape ``(q, len(x1), len(x2))``."""
    filters = np.asarray(filters, dtype=np.complex128)
    fg = make_grid(*filters.shape[-2:])
    e1 = np.exp(-2j * np.pi * np.outer(x1, fg.rows.indices()))
    e2 = np.exp(-2j * np.pi * np.outer(x2, fg.cols.indices()))
    # separable direct sum: E1 @ b_m @ E2^T per filter
    return np.einsum("ik,qkl,jl->qij", e1, filters, e2, optimize=True)


def pseudospectrum(
    bank: FilterBank,
    rank: int | None = None,
    resolution: tuple[int, int] = (64, 64),
) -> EdgeMap:
    """Sum-of-squares magnitude of the filters ``rank, ..., m2 - 1`` on a pixel lattice.

    Filters are rescaled by ``sqrt(m2)`` so the null-space basis is orthonormal.
    """
    rank = bank.rank if rank is None else int(rank)
    if not 0 <= rank < bank.m2:
        raise InvalidArgumentError(f"rank must lie in [0, {bank.m2 - 1}]")
    p1, p2 = resolution
    if p1 < 1 or p2 < 1:
        raise InvalidArgumentError("resolution must be positive")
    null = np.sqrt(bank.m2) * bank.filters[rank:]
    x1 = np.arange(p1) / p1 - 0.5
    x2 = np.arange(p2) / p2 - 0.5
    vals = evaluate_polynomials(null, x1, x2)
    phi = np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))
    return EdgeMap((p1, p2), phi)


def edge_mask(edge_map: EdgeMap, quantile: float) -> np.ndarray:
    """Pixels whose value is at most the ``quantile``-th value of the map.

    The comparison is inclusive, so a constant map gives an all-true mask.
    """
    if not 0 < quantile <= 1:
        raise InvalidArgumentError("quantile must lie in (0, 1]")
    thr = np.quantile(edge_map.values, quantile)
    return edge_map.values <= thr


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Min-max normalization to 0..255; a constant image maps to zeros."""
    image = np.asarray(image, dtype=float)
    lo, hi = float(image.min()), float(image.max())
    if hi <= lo:
        return np.zeros(image.shape, dtype=np.uint8)
    return np.round(255 * (image - lo) / (hi - lo)).astype(np.uint8)


def write_png(path: str | Path, image: np.ndarray) -> None:
    Image.fromarray(to_uint8(image), mode="L").save(path, format="PNG")
