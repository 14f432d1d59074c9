import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from offgrid.errors import EmptyResultError, FormatError, GridMismatchError, InvalidArgumentError
from offgrid.grid import (
    Axis,
    GradientSpectrum,
    IndexGrid,
    SpectralImage,
    contract,
    make_grid,
    minkowski,
    read_spc,
    write_spc,
)

from oracles import axis_range, enumerate_contraction, enumerate_minkowski


def test_make_grid_ranges():
    assert make_grid(8).rows == Axis(-4, 3)
    assert make_grid(5).cols == Axis(-2, 2)
    g = make_grid(256)
    assert (g.rows.lo, g.rows.hi) == (-128, 127)
    assert make_grid(3, 6).shape == (3, 6)


@pytest.mark.parametrize("dims", [(0, 4), (4, 0), (-1, 3)])
def test_make_grid_rejects_nonpositive(dims):
    with pytest.raises(InvalidArgumentError):
        make_grid(*dims)


@given(st.integers(1, 40), st.integers(1, 40))
def test_grid_invariants(n1, n2):
    g = make_grid(n1, n2)
    assert g.size == n1 * n2
    assert g.rows.lo <= 0 <= g.rows.hi and g.cols.lo <= 0 <= g.cols.hi
    assert list(g.rows.indices()) == axis_range(n1)
    if n1 % 2:
        assert g.rows.lo == -g.rows.hi


def test_contract_examples():
    assert contract(make_grid(8), make_grid(3)) == IndexGrid(Axis(-3, 2), Axis(-3, 2))
    assert contract(make_grid(5), make_grid(5)) == IndexGrid(Axis(0, 0), Axis(0, 0))
    # frozen from brute-force enumeration of the defining set
    big = contract(make_grid(65), make_grid(25))
    assert big.shape == (41, 41)
    ax = (axis_range(65),) * 2
    assert big.size == len(enumerate_contraction(ax, (axis_range(25),) * 2)) == 1681


def test_contract_too_large():
    with pytest.raises(EmptyResultError):
        contract(make_grid(3), make_grid(5))


def test_minkowski_examples():
    k = make_grid(3)
    assert minkowski(k, k) == make_grid(5)
    g = make_grid(7, 4)
    assert minkowski(g, make_grid(1)) == g
    a = IndexGrid(Axis(-2, 1), Axis(0, 0))
    b = IndexGrid(Axis(-1, 1), Axis(0, 0))
    s = minkowski(a, b)
    assert set(s.rows.indices()) == enumerate_minkowski(range(-2, 2), range(-1, 2)) == set(range(-3, 3))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 16), st.integers(1, 16), st.integers(1, 16), st.integers(1, 16))
def test_contract_matches_enumeration_and_stays_inside(o1, o2, k1, k2):
    outer, inner = make_grid(o1, o2), make_grid(k1, k2)
    truth = enumerate_contraction((axis_range(o1), axis_range(o2)), (axis_range(k1), axis_range(k2)))
    if not truth:
        with pytest.raises(EmptyResultError):
            contract(outer, inner)
        return
    c = contract(outer, inner)
    assert set(c) == truth
    assert outer.contains(minkowski(c, inner))


@given(st.integers(1, 12), st.integers(1, 12))
def test_offset_is_bijection(n1, n2):
    g = make_grid(n1, n2)
    offs = [g.offset(*k) for k in g]
    assert sorted(offs) == list(range(n1 * n2))
    for k1, k2 in itertools.islice(iter(g), 20):
        assert g.offset(k1, k2) == (k1 + n1 // 2) * n2 + (k2 + n2 // 2)


def test_spectral_image_contract():
    g = make_grid(4, 3)
    v = SpectralImage(g, np.arange(12).reshape(4, 3))
    assert v[(-2, -1)] == 0 and v[(1, 1)] == 11
    assert v.values.flags.writeable is False
    with pytest.raises(GridMismatchError):
        SpectralImage(g, np.zeros((3, 4)))
    with pytest.raises(InvalidArgumentError):
        SpectralImage(g, np.full((4, 3), np.nan))


def test_restrict_embed_roundtrip(rng):
    g, sub = make_grid(9), make_grid(5)
    v = SpectralImage(sub, rng.standard_normal((5, 5)))
    assert np.array_equal(v.embed(g).restrict(sub).values, v.values)
    assert v.embed(g).norm() == pytest.approx(v.norm())


def test_gradient_components_share_grid():
    with pytest.raises(GridMismatchError):
        GradientSpectrum.from_components(SpectralImage.zeros(make_grid(3)), SpectralImage.zeros(make_grid(4)))


def test_spc_roundtrip_and_layout(tmp_path, rng):
    g = make_grid(3, 5)
    vals = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    path = tmp_path / "x.spc"
    write_spc(path, SpectralImage(g, vals))
    data = path.read_bytes()
    assert data[:4] == b"SPC1"
    assert np.frombuffer(data[4:12], "<u4").tolist() == [3, 5]
    pairs = np.frombuffer(data[12:], "<f8").reshape(-1, 2)
    # row-major: element (k1, k2) = (-1, -2) first, then (-1, -1)
    assert pairs[1, 0] == vals[0, 1].real and pairs[1, 1] == vals[0, 1].imag
    assert np.array_equal(read_spc(path).values, vals)


def test_spc_rejects_garbage(tmp_path):
    p = tmp_path / "bad.spc"
    p.write_bytes(b"SPC1" + b"\x02\x00\x00\x00\x02\x00\x00\x00" + b"\x00" * 10)
    with pytest.raises(FormatError):
        read_spc(p)
    p.write_bytes(b"NOPE")
    with pytest.raises(FormatError):
        read_spc(p)
