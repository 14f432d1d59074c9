"""Independent reference computations used by the tests.

Nothing here calls the package's fast paths: Fourier samples come from
quadrature, Hankel products from explicit loops, grids from enumeration.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# -- grids ---------------------------------------------------------------------

def axis_range(n: int) -> list[int]:
    return list(range(-(n // 2), (n - 1) // 2 + 1))


def enumerate_contraction(outer: tuple[range, range], inner: tuple[range, range]) -> set[tuple[int, int]]:
    """``{k in outer : k + l in outer for all l in inner}`` by brute force."""
    out_set = set(itertools.product(*outer))
    inner_set = list(itertools.product(*inner))
    return {
        k for k in out_set if all((k[0] + l[0], k[1] + l[1]) in out_set for l in inner_set)
    }


def enumerate_minkowski(a: range, b: range) -> set[int]:
    return {x + y for x in a for y in b}


# -- Fourier samples by quadrature ---------------------------------------------

def _chord_integral(k2: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``int_lo^hi exp(-2 pi i k2 t) dt`` elementwise."""
    if k2 == 0:
        return hi - lo
    w = -2j * np.pi * k2
    return (np.exp(w * hi) - np.exp(w * lo)) / w


def ellipse_quadrature(center, half_sizes, rotation, amplitude, k1, k2, nodes: int = 400) -> complex:
    """Fourier sample of a rotated ellipse: exact chord integral in x2, Gauss-Legendre in x1.

    The substitution ``d1 = e1 sin(theta)`` removes the square-root endpoint
    behaviour of the chord length, so the outer rule converges spectrally.
    """
    a, b = half_sizes
    c, s = math.cos(rotation), math.sin(rotation)
    qa = s * s / a**2 + c * c / b**2
    e1 = 1.0 / math.sqrt(c * c / a**2 + s * s / b**2 - (c * s / a**2 - s * c / b**2) ** 2 / qa)
    theta, wts = np.polynomial.legendre.leggauss(nodes)
    theta = theta * (np.pi / 2)
    wts = wts * (np.pi / 2)
    d1 = e1 * np.sin(theta)
    qb = 2 * d1 * (c * s / a**2 - s * c / b**2)
    qc = d1**2 * (c * c / a**2 + s * s / b**2) - 1
    disc = np.sqrt(np.clip(qb * qb - 4 * qa * qc, 0, None))
    lo = (-qb - disc) / (2 * qa)
    hi = (-qb + disc) / (2 * qa)
    inner = _chord_integral(k2, lo, hi)
    outer = np.sum(wts * e1 * np.cos(theta) * np.exp(-2j * np.pi * k1 * d1) * inner)
    return complex(amplitude * np.exp(-2j * np.pi * (k1 * center[0] + k2 * center[1])) * outer)


def rect_quadrature(center, half_sizes, amplitude, k1, k2, nodes: int = 200) -> complex:
    """Axis-aligned rectangle: exact chord integral in x2, Gauss-Legendre in x1."""
    a, b = half_sizes
    x, w = np.polynomial.legendre.leggauss(nodes)
    d1 = a * x
    inner = _chord_integral(k2, np.full_like(d1, -b), np.full_like(d1, b))
    outer = np.sum(a * w * np.exp(-2j * np.pi * k1 * d1) * inner)
    return complex(amplitude * np.exp(-2j * np.pi * (k1 * center[0] + k2 * center[1])) * outer)


def simpson_rect_2d(half: float, k1: int, k2: int, intervals: int = 4096) -> complex:
    """Composite Simpson over ``[-1/2, 1/2]^2`` for a centered square ``[-half, half)^2``.

    The indicator is separable, so the 2-D tensor rule factorizes into two 1-D
    rules.  Nodes fall on the edges when ``half * intervals`` is an integer; the
    edge nodes then get weight one half, matching the integral exactly.
    """
    x = np.linspace(-0.5, 0.5, intervals + 1)
    h = 1.0 / intervals
    w = np.ones(intervals + 1)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    w *= h / 3

    def axis(k):
        ind = (np.abs(x) < half).astype(float)
        ind[np.isclose(np.abs(x), half)] = 0.5
        return np.sum(w * ind * np.exp(-2j * np.pi * k * x))

    return complex(axis(k1) * axis(k2))


# -- Hankel matrices by explicit loops -----------------------------------------

def hankel_loops(g: np.ndarray, k1: int, k2: int) -> np.ndarray:
    """Two-fold Hankel matrix of a ``(2, n1, n2)`` array, entry ``(k, l) = g(k + l)``, by loops."""
    _, n1, n2 = g.shape
    r1, r2 = n1 - k1 + 1, n2 - k2 + 1
    out = np.zeros((2 * r1 * r2, k1 * k2), dtype=np.complex128)
    for comp in range(2):
        for i in range(r1):
            for j in range(r2):
                row = comp * r1 * r2 + i * r2 + j
                for p in range(k1):
                    for q in range(k2):
                        out[row, p * k2 + q] = g[comp, i + p, j + q]
    return out


def patch_counts_by_enumeration(n1: int, n2: int, k1: int, k2: int) -> np.ndarray:
    w = np.zeros((n1, n2), dtype=int)
    for i in range(n1 - k1 + 1):
        for j in range(n2 - k2 + 1):
            w[i : i + k1, j : j + k2] += 1
    return w


# -- misc ----------------------------------------------------------------------

def rank_bound_by_enumeration(kp: int, k: int) -> int:
    ax_p, ax = axis_range(kp), axis_range(k)
    cont = enumerate_contraction((ax_p, ax_p), (ax, ax))
    return kp * kp - len(cont)


def random_complex(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def periodic_correlation_loops(x: np.ndarray, filt: np.ndarray, lo: tuple[int, int]) -> np.ndarray:
    """``out(k) = sum_l x(k + l) filt(l)`` with periodic wrap; ``lo`` is the filter grid's lower corner."""
    n1, n2 = x.shape
    k1, k2 = filt.shape
    out = np.zeros_like(x, dtype=np.complex128)
    for p in range(k1):
        for q in range(k2):
            out += filt[p, q] * np.roll(x, shift=(-(lo[0] + p), -(lo[1] + q)), axis=(0, 1))
    return out
