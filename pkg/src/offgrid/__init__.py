"""Off-the-grid restoration of piecewise-constant images from Fourier samples.

Stage 1 (:mod:`offgrid.learn`) restores low-frequency samples and learns a
tight-frame filter bank from the SVD of their lifted gradient; stage 2
(:mod:`offgrid.restore`) restores the full spectrum with a weighted l1
analysis model.  :mod:`offgrid.edges` turns the bank's null-space filters into
an edge map.
"""

from .edges import EdgeMap, edge_mask, pseudospectrum
from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptyResultError,
    FormatError,
    GridMismatchError,
    InvalidArgumentError,
    NumericalError,
    OffgridError,
    StageError,
    UnsupportedShapeError,
)
from .forward import ForwardOp, apply, apply_adjoint, deriv, deriv_adjoint, lowpass_op, random_mask
from .framebank import FilterBank, analysis, bank_from_spectrum, synthesis, uep_residual, weights
from .grid import GradientSpectrum, IndexGrid, SpectralImage, contract, make_grid, minkowski
from .hankel import HankelShape, annihilation_residual, build_dense, lift_adjoint_times, lift_times_filters
from .learn import LearnConfig, cadzow, learn, objective_value
from .metrics import MetricsReport, hfen, snr, ssim
from .phantoms import Scene, Shape, add_noise, scene_fourier
from .restore import RestoreConfig, ifft_baseline, lslp, soft_threshold, split_bregman, to_image

__version__ = "0.1.0"
