import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from offgrid.errors import DimensionMismatchError, FormatError, GridMismatchError, InvalidArgumentError
from offgrid.forward import deriv
from offgrid.framebank import (
    FilterBank,
    analysis,
    bank_from_spectrum,
    from_matrix,
    read_bank,
    synthesis,
    uep_residual,
    weights,
    write_bank,
)
from offgrid.grid import GradientSpectrum, SpectralImage, contract, make_grid
from offgrid.hankel import HankelShape, numerical_rank

from oracles import periodic_correlation_loops, random_complex


def _bank(rng, n=12, k=3):
    v = SpectralImage(make_grid(n), random_complex(rng, n, n))
    return bank_from_spectrum(v, (k, k))


def _grad(rng, grid):
    return GradientSpectrum(grid, random_complex(rng, 2, *grid.shape))


def test_bank_is_scaled_unitary(rng):
    bank = _bank(rng, 14, 5)
    a = bank.matrix
    assert np.allclose(a @ a.conj().T, np.eye(25) / 25, atol=1e-12)
    assert np.all(np.diff(bank.singular_values) <= 0)
    assert uep_residual(bank) <= 1e-10


def test_identity_bank_and_uep_examples():
    grid = make_grid(8)
    delta = FilterBank(make_grid(1), np.ones((1, 1, 1)), np.ones(1), 1, grid)
    g = GradientSpectrum(grid, np.arange(128).reshape(2, 8, 8) * (1 + 1j))
    assert np.allclose(analysis(delta, g)[:, 0], g.values)
    basis = from_matrix(np.eye(9) / 3, make_grid(3), grid)
    assert uep_residual(basis) <= 1e-15
    box = FilterBank(make_grid(3, 1), np.full((3, 3, 1), 0.0), np.zeros(3), 3, grid)
    box = FilterBank(make_grid(3, 1), np.concatenate([np.full((1, 3, 1), 1 / 3), np.zeros((2, 3, 1))]), np.zeros(3), 3, grid)
    assert uep_residual(box) > 0.1


def test_analysis_is_periodic_correlation(rng):
    bank = _bank(rng, 10, 3)
    g = _grad(rng, bank.sample_grid)
    coeffs = analysis(bank, g)
    lo = (bank.filter_grid.rows.lo, bank.filter_grid.cols.lo)
    for m in (0, 4, 8):
        for comp in range(2):
            ref = periodic_correlation_loops(g.values[comp], bank.filters[m], lo)
            assert np.allclose(coeffs[comp, m], ref, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 3, 5, 7, 9]))
def test_tight_frame_identity(seed, k):
    rng = np.random.default_rng(seed)
    bank = _bank(rng, 16, k)
    g = _grad(rng, bank.sample_grid)
    c = analysis(bank, g)
    assert np.linalg.norm(synthesis(bank, c).values - g.values) <= 1e-10 * g.norm()
    assert np.linalg.norm(c) == pytest.approx(g.norm(), rel=1e-12)
    assert uep_residual(bank) <= 1e-10


def test_adjointness(rng):
    bank = _bank(rng, 9, 3)
    g = _grad(rng, bank.sample_grid)
    c = random_complex(rng, 2, 9, 9, 9)
    lhs = np.vdot(c, analysis(bank, g))
    rhs = np.vdot(synthesis(bank, c).values, g.values)
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
    assert np.all(synthesis(bank, np.zeros_like(c)).values == 0)
    assert np.all(analysis(bank, GradientSpectrum(bank.sample_grid, np.zeros((2, 9, 9)))) == 0)


def test_zero_spectrum_bank():
    bank = bank_from_spectrum(SpectralImage.zeros(make_grid(9)), (3, 3))
    assert np.all(bank.singular_values == 0)
    assert uep_residual(bank) <= 1e-10


def test_square_phantom_bank(square33):
    bank = bank_from_spectrum(square33, (3, 3))
    sv = bank.singular_values
    assert np.sum(sv <= 1e-8 * sv[0]) >= 1
    r = numerical_rank(sv, 1e-8)
    # group sparsity of the null-space coefficients on the valid region
    coeffs = analysis(bank, deriv(square33))
    valid = contract(square33.grid, bank.filter_grid)
    i0, j0 = square33.grid.position(valid.rows.lo, valid.cols.lo)
    block = coeffs[:, r:, i0 : i0 + valid.n1, j0 : j0 + valid.n2]
    assert np.abs(block).max() <= 1e-8 * np.abs(coeffs).max()


def test_analysis_matches_hankel_valid_region(rng):
    """Correlation with a_m on the valid region equals the lifted product column."""
    from offgrid.hankel import lift_times_filters

    bank = _bank(rng, 11, 3)
    g = _grad(rng, bank.sample_grid)
    shape = HankelShape(bank.sample_grid, bank.filter_grid)
    lifted = lift_times_filters(g, bank.matrix, shape).reshape(2, shape.m1, 9)
    coeffs = analysis(bank, g)
    valid = shape.row_grid
    i0, j0 = bank.sample_grid.position(valid.rows.lo, valid.cols.lo)
    block = coeffs[:, :, i0 : i0 + valid.n1, j0 : j0 + valid.n2].reshape(2, 9, -1)
    assert np.allclose(block.transpose(0, 2, 1), lifted, atol=1e-12)


def test_weights():
    bank = FilterBank(make_grid(1, 3), np.zeros((3, 1, 3)), np.array([2.0, 1.0, 0.0]), 2, make_grid(4))
    w = weights(bank, 1.0, 1e-8)
    assert w[0] == pytest.approx(0.4999999975, rel=1e-12)
    assert w[2] == pytest.approx(1e8)
    assert np.all(np.diff(w) >= 0)
    with pytest.raises(InvalidArgumentError):
        weights(bank, 1.0, 0.0)


def test_bank_validation():
    with pytest.raises(DimensionMismatchError):
        FilterBank(make_grid(3), np.zeros((8, 3, 3)), np.zeros(8), 2, make_grid(5))
    with pytest.raises(InvalidArgumentError):
        FilterBank(make_grid(3), np.zeros((9, 3, 3)), np.zeros(9), 10, make_grid(5))
    bank = from_matrix(np.eye(9) / 3, make_grid(3), make_grid(6))
    with pytest.raises(GridMismatchError):
        analysis(bank, GradientSpectrum(make_grid(5), np.zeros((2, 5, 5))))


def test_bank_file_roundtrip(tmp_path, rng):
    bank = _bank(rng, 9, 3).with_rank(5)
    p = tmp_path / "b.fbk"
    write_bank(p, bank)
    back = read_bank(p, bank.sample_grid)
    assert back.rank == 5
    assert np.array_equal(back.filters, bank.filters)
    assert np.array_equal(back.singular_values, bank.singular_values)
    data = p.read_bytes()
    assert data[:4] == b"FBK1" and len(data) == 20 + 8 * 9 + 16 * 81
    p.write_bytes(data[:-8])
    with pytest.raises(FormatError):
        read_bank(p, bank.sample_grid)
