"""Image-quality indices: SNR, HFEN and SSIM.

* ``snr = 20 log10(||ref|| / ||ref - rec||)`` (reference not mean-removed),
  ``+inf`` when the images are equal.
* ``hfen = ||LoG(rec) - LoG(ref)|| / ||LoG(ref)||`` with a 15x15, sigma 1.5
  Laplacian-of-Gaussian and symmetric (mirror) boundary.
* ``ssim`` is the mean of the SSIM map with an 11x11 Gaussian window of sigma 1.5,
  ``C1 = (0.01 L)^2``, ``C2 = (0.03 L)^2`` and symmetric boundary.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatchError

_SSIM_SIGMA = 1.5
_SSIM_TRUNCATE = 3.5  # radius int(3.5 * 1.5 + 0.5) = 5, an 11-tap window


def _pair(ref, rec) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=float)
    rec = np.asarray(rec, dtype=float)
    if ref.shape != rec.shape:
        raise DimensionMismatchError(f"shape mismatch {ref.shape} vs {rec.shape}")
    return ref, rec


def snr(ref, rec) -> float:
    ref, rec = _pair(ref, rec)
    err = np.linalg.norm(ref - rec)
    if err == 0:
        return math.inf
    return float(20 * np.log10(np.linalg.norm(ref) / err))


def log_kernel(size: int = 15, sigma: float = 1.5) -> np.ndarray:
    """Zero-mean Laplacian-of-Gaussian kernel (same construction as MATLAB's ``fspecial('log')``)."""
    half = (size - 1) / 2
    x = np.arange(size) - half
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    r2 = x1**2 + x2**2
    h = np.exp(-r2 / (2 * sigma**2))
    h[h < np.finfo(float).eps * h.max()] = 0
    h /= h.sum()
    h1 = h * (r2 - 2 * sigma**2) / sigma**4
    return h1 - h1.mean()


def hfen(ref, rec) -> float:
    """Relative high-frequency error; ``nan`` when the reference has no LoG response."""
    ref, rec = _pair(ref, rec)
    k = log_kernel()
    lr = ndimage.correlate(ref, k, mode="reflect")
    le = ndimage.correlate(rec, k, mode="reflect")
    den = np.linalg.norm(lr)
    # a constant reference only leaves rounding noise after the zero-mean kernel
    if den <= 1e-12 * np.abs(k).sum() * np.linalg.norm(ref):
        return math.nan
    return float(np.linalg.norm(le - lr) / den)


def ssim(ref, rec, data_range: float = 1.0) -> float:
    ref, rec = _pair(ref, rec)
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2

    def blur(a):
        return ndimage.gaussian_filter(a, _SSIM_SIGMA, mode="reflect", truncate=_SSIM_TRUNCATE)

    mu_x, mu_y = blur(ref), blur(rec)
    sxx = blur(ref * ref) - mu_x**2
    syy = blur(rec * rec) - mu_y**2
    sxy = blur(ref * rec) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * sxy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


@dataclass
class MetricsReport:
    scene: str
    task: str
    method: str
    snr: float
    hfen: float
    ssim: float
    wall_ms: float
    seed: int


def evaluate(ref, rec, scene: str, task: str, method: str, wall_ms: float, seed: int) -> MetricsReport:
    return MetricsReport(scene, task, method, snr(ref, rec), hfen(ref, rec), ssim(ref, rec), wall_ms, seed)


def write_metrics(path: str | Path, reports: list[MetricsReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(MetricsReport)])
        for rep in reports:
            w.writerow([repr(x) if isinstance(x, float) else x for x in astuple(rep)])
