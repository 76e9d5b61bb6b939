"""Banded operator tests: matvec paths, symbols, stride Laplacians."""

import numpy as np
import pytest

from nlmg.stencil import closed_form_stencil
from nlmg.toeplitz import (
    SymBandMatrix,
    SymBandToeplitz,
    dense_spectrum,
    laplacian_mixture_weights,
    stride_laplacian,
    stride_laplacian_spectrum,
)


def random_band(s, rng):
    band = -np.abs(rng.normal(size=s + 1))
    band[0] = -2.0 * band[1:].sum() + 0.5  # keep it safely positive definite
    return band


def test_toeplitz_matvec_matches_dense():
    rng = np.random.default_rng(3)
    for s, n in ((1, 9), (4, 33), (12, 40)):
        op = SymBandToeplitz(random_band(s, rng), n)
        v = rng.normal(size=n)
        assert op.matvec(v, mode="direct") == pytest.approx(op.to_dense() @ v, rel=1e-13)


def test_symband_matvec_matches_dense():
    rng = np.random.default_rng(4)
    ab = rng.normal(size=(4, 21))
    M = SymBandMatrix(ab)
    v = rng.normal(size=21)
    assert M.matvec(v) == pytest.approx(M.to_dense() @ v, rel=1e-13)
    A = M.to_dense()
    assert A == pytest.approx(A.T)


def test_fft_matvec_matches_direct():
    rng = np.random.default_rng(5)
    # wide nonlocal band, narrow band, and an awkward non power of two size
    cases = [
        (closed_form_stencil(4.0 / 2**8, 1.0).coeffs, 2**8 - 1),
        (closed_form_stencil(0.01, 0.05).coeffs, 1000),
        (random_band(17, rng), 530),
    ]
    for band, n in cases:
        op = SymBandToeplitz(band, n)
        v = rng.normal(size=n)
        d = op.matvec(v, mode="direct")
        f = op.matvec(v, mode="fft")
        assert np.abs(d - f).max() <= 1e-12 * np.abs(d).max()


def test_matvec_mode_validation():
    op = SymBandToeplitz([2.0, -1.0], 8)
    with pytest.raises(ValueError):
        op.matvec(np.zeros(8), mode="magic")
    with pytest.raises(ValueError):
        op.matvec(np.zeros(9))


def test_band_clipping_and_trim():
    # offsets past the last row never touch an unknown: clipped silently
    band = np.array([2.0, -0.5, -0.25, -0.125, -0.0625])
    op = SymBandToeplitz(band, 3)
    assert op.halfwidth == 2
    full = SymBandToeplitz(band, 8).to_dense()[:3, :3]
    assert op.to_dense() == pytest.approx(full)
    # trailing zeros are dropped from storage
    assert SymBandToeplitz([2.0, -1.0, 0.0, 0.0], 9).halfwidth == 1


def test_matvec_deterministic():
    rng = np.random.default_rng(6)
    op = SymBandToeplitz(random_band(9, rng), 200)
    v = rng.normal(size=200)
    assert np.array_equal(op.matvec(v), op.matvec(v))
    assert np.array_equal(op.matvec(v, mode="fft"), op.matvec(v, mode="fft"))


def test_generating_function_laplacian():
    op = SymBandToeplitz([2.0, -1.0], 16)
    g = op.generating_function()
    theta = np.linspace(0.0, np.pi, 33)
    assert g(theta) == pytest.approx(2.0 - 2.0 * np.cos(theta))


def test_symbol_bounds_bracket_spectrum():
    st = closed_form_stencil(4.0 / 2**6, 5.0 * 4.0 / 2**6)
    op = st.operator(2**6 - 1)
    lo, hi = op.symbol_bounds()
    eigs = dense_spectrum(op)
    assert lo - 1e-12 <= eigs.min() and eigs.max() <= hi + 1e-12
    # zero row sum means the symbol vanishes at frequency zero
    assert op.generating_function()(0.0) == pytest.approx(0.0, abs=1e-12 * st.coeffs[0])


def test_symband_layout_and_entry():
    ab = np.array([[4.0, 4.0, 4.0], [-1.0, -1.0, 99.0]])  # tail junk must be ignored
    M = SymBandMatrix(ab)
    assert M.entry(0, 1) == -1.0
    assert M.entry(2, 2) == 4.0
    assert M.entry(0, 2) == 0.0
    assert M.ab[1, -1] == 0.0
    with pytest.raises(ValueError):
        SymBandMatrix(np.zeros((5, 4)))  # halfwidth >= dimension


def test_eigenvalues_match_numpy():
    rng = np.random.default_rng(8)
    op = SymBandToeplitz(random_band(3, rng), 24)
    lam = dense_spectrum(op)
    ref = np.linalg.eigvalsh(op.to_dense())
    assert lam == pytest.approx(ref, rel=1e-11, abs=1e-11)
    lo = op.to_symband().eigenvalues(which=(0, 0))[0]
    assert lo == pytest.approx(ref[0], rel=1e-11)


def test_dense_spectrum_cap():
    op = SymBandToeplitz([2.0, -1.0], 64)
    with pytest.raises(ValueError):
        dense_spectrum(op, cap=32)


def test_stride_laplacian_structure():
    L3 = stride_laplacian(10, 3)
    A = L3.to_dense()
    assert A[0, 0] == 2.0 and A[0, 3] == -1.0 and A[0, 1] == 0.0
    # stride at or past the dimension leaves only the diagonal
    assert stride_laplacian(5, 7).to_dense() == pytest.approx(2.0 * np.eye(5))


def test_stride_spectrum_divisible():
    for dim, stride in ((12, 3), (12, 4), (9, 1)):
        spect = stride_laplacian_spectrum(dim, stride)
        assert spect.multiplicity == stride
        got = np.sort(dense_spectrum(stride_laplacian(dim, stride)))
        want = np.sort(np.repeat(spect.values, spect.multiplicity))
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_stride_spectrum_lower_bound():
    for dim, stride in ((10, 3), (13, 4), (11, 2)):
        spect = stride_laplacian_spectrum(dim, stride)
        assert spect.values is None
        lam1 = dense_spectrum(stride_laplacian(dim, stride)).min()
        assert lam1 >= spect.lambda1_lower - 1e-12


def test_stride_spectrum_diag_case():
    spect = stride_laplacian_spectrum(6, 9)
    assert spect.values == pytest.approx([2.0])
    assert spect.multiplicity == 6


def test_mixture_weights_reconstruct_operator():
    st = closed_form_stencil(0.25, 1.0)
    w = laplacian_mixture_weights(st.coeffs)
    assert w == pytest.approx(-st.coeffs[1:])
    n = 12
    A = st.operator(n).to_dense()
    B = sum(wj * stride_laplacian(n, j + 1).to_dense() for j, wj in enumerate(w))
    assert B == pytest.approx(A, rel=1e-13)


def test_mixture_weights_reject_nonzero_row_sum():
    with pytest.raises(ValueError):
        laplacian_mixture_weights(np.array([2.0, -0.5]))


def test_constructor_validation():
    with pytest.raises(ValueError):
        SymBandToeplitz(np.zeros((2, 2)), 4)
    with pytest.raises(ValueError):
        SymBandToeplitz([], 4)
    with pytest.raises(ValueError):
        SymBandToeplitz([1.0], 0)
    with pytest.raises(ValueError):
        stride_laplacian(0, 1)
