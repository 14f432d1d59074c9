"""Stage 1: restore low-frequency samples and learn a tight-frame bank from them.

:func:`learn` runs proximal alternating minimization on

    ||A v - f||^2 + beta ||H(D v) A_f - C||_F^2,   A_f A_f^* = I / m2,  C[:, r:] = 0,

with proximal weights ``beta1``, ``beta2``, ``beta3`` on the three blocks.  Every
block update is a closed form: a pointwise division for ``v``, a convex
combination for ``C`` and a scaled polar factor for ``A_f``.  Only the ``r``
nonzero columns of ``C`` are ever stored.

:func:`cadzow` is the variable-splitting baseline that replaces the bank by a
rank-``r`` truncated SVD of the full lifted matrix at every sweep.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, GridMismatchError, InvalidArgumentError, NumericalError
from .forward import ForwardOp, deriv, deriv_adjoint, deriv_symbol
from .framebank import DEFAULT_RANK_TOL, FilterBank, bank_from_spectrum, hankel_svd
from .grid import GradientSpectrum, SpectralImage, make_grid
from .hankel import (
    HankelShape,
    build_dense,
    lift_adjoint_times,
    lift_times_filters,
    numerical_rank,
    patch_count_weights,
    unlift,
    unlift_product,
)


@dataclass
class LearnConfig:
    filter_size: tuple[int, int] = (9, 9)
    rank: int | None = None  # None: numerical rank of the initial lifted matrix
    beta: float = 1.0
    beta1: float | None = None  # None: 1e-2 * beta
    beta2: float | None = None
    beta3: float | None = None
    max_iters: int = 200
    rel_tol: float = 5e-4
    rank_tol: float = DEFAULT_RANK_TOL
    trace_objective: bool = True

    def __post_init__(self):
        k1, k2 = self.filter_size
        if k1 % 2 == 0 or k2 % 2 == 0:
            raise InvalidArgumentError("filter dimensions must be odd")
        if self.beta <= 0:
            raise InvalidArgumentError("beta must be positive")
        for name in ("beta1", "beta2", "beta3"):
            val = getattr(self, name)
            if val is None:
                setattr(self, name, 1e-2 * self.beta)
            elif val <= 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.rank is not None and not 1 <= self.rank <= k1 * k2:
            raise InvalidArgumentError(f"rank must lie in [1, {k1 * k2}]")


@dataclass
class TraceRow:
    iter: int
    objective: float
    rel_change: float
    wall_ms: float
    prox: float = float("nan")
    sigma_gap: float = float("nan")


@dataclass
class LearnResult:
    v: SpectralImage
    bank: FilterBank
    iters: int
    converged: bool
    rank: int
    filters: np.ndarray  # last bank-matrix iterate, m2 x m2
    trace: list[TraceRow] = field(default_factory=list)
    peak_coeff_entries: int = 0
    objective0: float = float("nan")


@dataclass
class CadzowResult:
    v: SpectralImage
    iters: int
    converged: bool
    trace: list[TraceRow] = field(default_factory=list)


def _check_inputs(f_low: SpectralImage, op: ForwardOp) -> None:
    if f_low.grid != op.grid:
        raise GridMismatchError("measurements and operator live on different grids")
    if not op.mask[op.grid.position(0, 0)]:
        raise InvalidArgumentError("the DC frequency must be sampled")


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    den = np.linalg.norm(new)
    return float(np.linalg.norm(new - old) / den) if den > 0 else 0.0


def _finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite values in {what}")


def objective_value(
    f_low: SpectralImage,
    op: ForwardOp,
    v: SpectralImage,
    bank_matrix: np.ndarray,
    c: np.ndarray,
    cfg: LearnConfig,
) -> float:
    """``||A v - f||^2 + beta ||H(D v) A_f - C||_F^2``.

    ``c`` may hold only the leading ``p <= m2`` columns; the rest are taken as
    zero, which is how membership in the constraint set is enforced.
    """
    shape = HankelShape.of(v.grid, *cfg.filter_size)
    if c.shape[0] != 2 * shape.m1 or c.shape[1] > shape.m2:
        raise DimensionMismatchError("coefficient matrix has the wrong shape")
    misfit = np.linalg.norm(op.multiplier * v.values - f_low.values) ** 2
    ha = lift_times_filters(deriv(v), bank_matrix, shape)
    p = c.shape[1]
    coupling = np.linalg.norm(ha[:, :p] - c) ** 2 + np.linalg.norm(ha[:, p:]) ** 2
    return float(misfit + cfg.beta * coupling)


def learn(
    f_low: SpectralImage,
    op: ForwardOp,
    cfg: LearnConfig | None = None,
    callback: Callable[[int, np.ndarray, np.ndarray, np.ndarray], None] | None = None,
) -> LearnResult:
    """Proximal alternating minimization for the data-driven tight-frame model.

    ``callback(n, v, c, bank_matrix)`` sees every iterate; ``c`` holds only
    the ``r`` stored columns.  Returns the restored low-frequency samples and the bank obtained from the
    SVD of their lifted gradient (not the last iterate of the bank matrix,
    which is returned separately as ``filters``).
    """
    cfg = cfg or LearnConfig()
    _check_inputs(f_low, op)
    grid = f_low.grid
    shape = HankelShape.of(grid, *cfg.filter_size)
    m2 = shape.m2
    beta, b1, b2, b3 = cfg.beta, cfg.beta1, cfg.beta2, cfg.beta3

    gain = op.gain()
    af = op.adjoint_values(f_low.values)
    dsym = deriv_symbol(grid)
    denom = gain + beta * (patch_count_weights(shape) / m2) * dsym + b1

    v = af.copy()
    g = deriv(SpectralImage(grid, v))
    sv0, y0 = hankel_svd(g, shape)
    if cfg.rank is not None:
        r = cfg.rank
    else:
        # keep at least one annihilating filter even when noise fills the spectrum
        r = max(1, min(m2 - 1, numerical_rank(sv0, cfg.rank_tol)))
    bank_mat = y0 / np.sqrt(m2)
    c = lift_times_filters(g, bank_mat[:, :r], shape)
    peak = c.size

    trace: list[TraceRow] = []
    obj0 = (
        objective_value(f_low, op, SpectralImage(grid, v), bank_mat, c, cfg)
        if cfg.trace_objective
        else float("nan")
    )
    converged = False
    n = 0
    for n in range(1, cfg.max_iters + 1):
        t0 = time.perf_counter()
        # v-step: exact pointwise minimizer
        back = unlift_product(c, bank_mat[:, :r], shape)
        numer = af + beta * deriv_adjoint(GradientSpectrum(grid, back)).values + b1 * v
        v_new = numer / denom
        _finite(v_new, "v-step")
        g = deriv(SpectralImage(grid, v_new))

        # C-step on the r free columns; columns r.. stay zero
        ha = lift_times_filters(g, bank_mat[:, :r], shape)
        c_new = (beta * ha + b2 * c) / (beta + b2)
        peak = max(peak, c_new.size)

        # bank step: polar factor of H* C + (beta3 / beta) A_f
        m = (b3 / beta) * bank_mat
        m[:, :r] += lift_adjoint_times(g, c_new, shape)
        try:
            u, s, vh = np.linalg.svd(m)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"bank-step SVD failed: {exc}") from exc
        bank_new = (u @ vh) / np.sqrt(m2)

        rel = _rel_change(v_new, v)
        wall = (time.perf_counter() - t0) * 1e3
        row = TraceRow(n, float("nan"), rel, wall, sigma_gap=float(np.min(-np.diff(s))) if s.size > 1 else 0.0)
        if cfg.trace_objective:
            row.objective = objective_value(f_low, op, SpectralImage(grid, v_new), bank_new, c_new, cfg)
            row.prox = float(
                b1 * np.linalg.norm(v_new - v) ** 2
                + b2 * np.linalg.norm(c_new - c) ** 2
                + b3 * np.linalg.norm(bank_new - bank_mat) ** 2
            )
        trace.append(row)
        v, c, bank_mat = v_new, c_new, bank_new
        if callback is not None:
            callback(n, v, c, bank_mat)
        if rel <= cfg.rel_tol:
            converged = True
            break

    v_img = SpectralImage(grid, v)
    bank = bank_from_spectrum(v_img, make_grid(*cfg.filter_size), rank=r)
    return LearnResult(v_img, bank, n, converged, r, bank_mat, trace, peak, obj0)


def cadzow(
    f_low: SpectralImage,
    op: ForwardOp,
    r: int,
    beta: float,
    filter_size: tuple[int, int] = (9, 9),
    max_iters: int = 200,
    rel_tol: float = 5e-4,
    trace_objective: bool = True,
) -> CadzowResult:
    """Variable splitting between the samples and a rank-``r`` lifted matrix ``Z``.

    ``Z`` is the truncated SVD of ``H(D v)``; the ``v``-update solves
    ``(|A|^2 + beta w |2 pi k|^2) v = A* f + beta D* H*(Z)`` pointwise, with
    ``w`` the patch counts.
    """
    _check_inputs(f_low, op)
    if beta <= 0:
        raise InvalidArgumentError("beta must be positive")
    grid = f_low.grid
    shape = HankelShape.of(grid, *filter_size)
    if not 1 <= r <= shape.m2:
        raise InvalidArgumentError(f"rank must lie in [1, {shape.m2}]")
    gain = op.gain()
    af = op.adjoint_values(f_low.values)
    denom = gain + beta * patch_count_weights(shape) * deriv_symbol(grid)

    def project(g: GradientSpectrum) -> np.ndarray:
        h = build_dense(g, shape)
        try:
            u, s, vh = np.linalg.svd(h, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"lifted SVD failed: {exc}") from exc
        return (u[:, :r] * s[:r]) @ vh[:r]

    v = af.copy()
    z = project(deriv(SpectralImage(grid, v)))
    trace: list[TraceRow] = []
    converged = False
    n = 0
    for n in range(1, max_iters + 1):
        t0 = time.perf_counter()
        back = deriv_adjoint(unlift(z, shape)).values
        v_new = (af + beta * back) / denom
        _finite(v_new, "v-step")
        g = deriv(SpectralImage(grid, v_new))
        z = project(g)
        rel = _rel_change(v_new, v)
        wall = (time.perf_counter() - t0) * 1e3
        obj = float("nan")
        if trace_objective:
            obj = float(
                np.linalg.norm(op.multiplier * v_new - f_low.values) ** 2
                + beta * np.linalg.norm(build_dense(g, shape) - z) ** 2
            )
        trace.append(TraceRow(n, obj, rel, wall))
        v = v_new
        if rel <= rel_tol:
            converged = True
            break
    return CadzowResult(SpectralImage(grid, v), n, converged, trace)


def write_trace(path: str | Path, trace: list[TraceRow]) -> None:
    """CSV with columns ``iter, objective, rel_change, wall_ms``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "objective", "rel_change", "wall_ms"])
        for row in trace:
            w.writerow([row.iter, repr(row.objective), repr(row.rel_change), repr(row.wall_ms)])
