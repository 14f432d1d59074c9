"""Analytic piecewise-constant scenes with closed-form Fourier samples.

A scene is a sum of indicator functions of rectangles and ellipses inside
``[-1/2, 1/2)^2``, each with a complex amplitude.  Its Fourier transform
``F(u)(k) = int u(x) exp(-2 pi i k.x) dx`` is evaluated exactly at integer
frequencies.

Scene text format, one shape per line (``#`` starts a comment)::

    rect|ellipse  c1 c2  a b  rot  re(alpha) im(alpha)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.special import j1

from .errors import FormatError, InvalidArgumentError, UnsupportedShapeError
from .grid import IndexGrid, SpectralImage


@dataclass(frozen=True)
class Shape:
    kind: Literal["rect", "ellipse"]
    center: tuple[float, float]
    half_sizes: tuple[float, float]
    rotation: float = 0.0
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.kind not in ("rect", "ellipse"):
            raise UnsupportedShapeError(f"unknown shape kind {self.kind!r}")
        a, b = self.half_sizes
        if a <= 0 or b <= 0:
            raise InvalidArgumentError("half sizes must be positive")
        e1, e2 = self.extent()
        c1, c2 = self.center
        if c1 - e1 < -0.5 or c1 + e1 > 0.5 or c2 - e2 < -0.5 or c2 + e2 > 0.5:
            raise InvalidArgumentError(f"{self.kind} at {self.center} leaves [-1/2, 1/2)^2")

    def extent(self) -> tuple[float, float]:
        """Half-widths of the axis-aligned bounding box after rotation."""
        a, b = self.half_sizes
        c, s = abs(math.cos(self.rotation)), abs(math.sin(self.rotation))
        if self.kind == "rect":
            return (a * c + b * s, a * s + b * c)
        return (math.hypot(a * c, b * s), math.hypot(a * s, b * c))

    @property
    def area(self) -> float:
        a, b = self.half_sizes
        return 4 * a * b if self.kind == "rect" else math.pi * a * b

    def contains(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Boolean indicator at points ``(x1, x2)``; half-open on the upper edges."""
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        d1, d2 = x1 - self.center[0], x2 - self.center[1]
        y1 = c * d1 + s * d2
        y2 = -s * d1 + c * d2
        a, b = self.half_sizes
        if self.kind == "rect":
            return (y1 >= -a) & (y1 < a) & (y2 >= -b) & (y2 < b)
        return (y1 / a) ** 2 + (y2 / b) ** 2 <= 1.0


@dataclass(frozen=True)
class Scene:
    shapes: tuple[Shape, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))


def _phase(k1, k2, center) -> np.ndarray:
    return np.exp(-2j * np.pi * (k1 * center[0] + k2 * center[1]))


def _sinc_factor(k: np.ndarray, h: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    safe = np.where(k == 0, 1.0, k)
    return np.where(k == 0, 2 * h, np.sin(2 * np.pi * safe * h) / (np.pi * safe))


def rect_fourier(shape: Shape, k1, k2) -> np.ndarray:
    """Fourier transform of an axis-aligned rectangle at integer frequencies.

    ``k1`` and ``k2`` broadcast against each other; scalars give a 0-d array.
    """
    if shape.kind != "rect":
        raise UnsupportedShapeError("rect_fourier needs a rectangle")
    if shape.rotation != 0:
        raise UnsupportedShapeError("rotated rectangles have no closed form here")
    a, b = shape.half_sizes
    return (
        shape.amplitude
        * _phase(k1, k2, shape.center)
        * _sinc_factor(k1, a)
        * _sinc_factor(k2, b)
    )


def ellipse_fourier(shape: Shape, k1, k2) -> np.ndarray:
    """Fourier transform of a (possibly rotated) ellipse via the disk transform ``J1(2 pi rho) / rho``."""
    if shape.kind != "ellipse":
        raise UnsupportedShapeError("ellipse_fourier needs an ellipse")
    a, b = shape.half_sizes
    c, s = math.cos(shape.rotation), math.sin(shape.rotation)
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    r1 = c * k1 + s * k2
    r2 = -s * k1 + c * k2
    rho = np.hypot(a * r1, b * r2)
    safe = np.where(rho == 0, 1.0, rho)
    disk = np.where(rho == 0, np.pi, j1(2 * np.pi * safe) / safe)
    return shape.amplitude * _phase(k1, k2, shape.center) * a * b * disk


def shape_fourier(shape: Shape, k1, k2) -> np.ndarray:
    if shape.kind == "rect":
        return rect_fourier(shape, k1, k2)
    return ellipse_fourier(shape, k1, k2)


def scene_fourier(scene: Scene, grid: IndexGrid) -> SpectralImage:
    k1, k2 = grid.k1(), grid.k2()
    values = np.zeros(grid.shape, dtype=np.complex128)
    for shape in scene.shapes:
        values += shape_fourier(shape, k1, k2)
    return SpectralImage(grid, values)


def rasterize(scene: Scene, n1: int, n2: int | None = None) -> np.ndarray:
    """Scene values at pixel centres ``x = k / n`` for ``k`` on the centered grid."""
    from .grid import make_grid

    grid = make_grid(n1, n2 if n2 is not None else n1)
    x1 = grid.k1() / grid.n1 + 0 * grid.k2()
    x2 = grid.k2() / grid.n2 + 0 * grid.k1()
    out = np.zeros(grid.shape, dtype=np.complex128)
    for shape in scene.shapes:
        out += shape.amplitude * shape.contains(x1, x2)
    return out.real if np.all(out.imag == 0) else out


def add_noise(v: SpectralImage, sigma: float, seed: int) -> SpectralImage:
    """Add i.i.d. circular complex Gaussian noise of total variance ``sigma**2``.

    Uses numpy's PCG64 generator seeded with ``seed``; real and imaginary parts
    are drawn as two consecutive standard-normal blocks.
    """
    if sigma < 0:
        raise InvalidArgumentError("sigma must be nonnegative")
    if sigma == 0:
        return v
    rng = np.random.default_rng(seed)
    shape = v.values.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return SpectralImage(v.grid, v.values + noise * (sigma / math.sqrt(2)))


# -- scene files --------------------------------------------------------------

def parse_scene(text: str) -> Scene:
    shapes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 8:
            raise FormatError(f"line {lineno}: expected 8 fields, got {len(parts)}")
        kind = parts[0].lower()
        if kind not in ("rect", "ellipse"):
            raise FormatError(f"line {lineno}: unknown shape {parts[0]!r}")
        try:
            c1, c2, a, b, rot, re_, im_ = (float(p) for p in parts[1:])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        shapes.append(Shape(kind, (c1, c2), (a, b), rot, complex(re_, im_)))
    return Scene(tuple(shapes))


def format_scene(scene: Scene) -> str:
    lines = []
    for s in scene.shapes:
        lines.append(
            f"{s.kind} {s.center[0]!r} {s.center[1]!r} {s.half_sizes[0]!r} {s.half_sizes[1]!r} "
            f"{s.rotation!r} {complex(s.amplitude).real!r} {complex(s.amplitude).imag!r}"
        )
    return "\n".join(lines) + "\n"


def read_scene(path: str | Path) -> Scene:
    return parse_scene(Path(path).read_text())


def square_phantom(half: float = 0.25, amplitude: float = 1.0) -> Scene:
    """Centered axis-aligned square ``[-half, half)^2``."""
    return Scene((Shape("rect", (0.0, 0.0), (half, half), 0.0, amplitude),))


def square_disk_phantom() -> Scene:
    """Desk-scale test scene: an off-center square and a disk with different amplitudes."""
    return Scene(
        (
            Shape("rect", (-0.12, -0.1), (0.2, 0.16), 0.0, 0.8),
            Shape("ellipse", (0.2, 0.18), (0.14, 0.14), 0.0, 0.5),
        )
    )
