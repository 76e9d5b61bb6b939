"""Symmetric banded operators, Toeplitz and general.

Two storage classes cover everything the solver touches.  SymBandToeplitz
holds one band replicated down the diagonal and supports both a direct
banded matvec and an FFT matvec through a circulant embedding; the two
paths agree to rounding and the cheaper one is picked per call.
SymBandMatrix is the general symmetric banded fallback in LAPACK lower
band layout, used for materialized coarse operators and spectral checks.

Also here: the stride-j second difference matrices that the nonlocal
band decomposes into, their closed form spectra, and dense eigenvalue
helpers with a hard size cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "SymBandToeplitz",
    "SymBandMatrix",
    "GeneratingFunction",
    "stride_laplacian",
    "stride_laplacian_spectrum",
    "StrideSpectrum",
    "laplacian_mixture_weights",
    "dense_spectrum",
    "DENSE_CAP",
]

DENSE_CAP = 4096


def _next_pow2(m: int) -> int:
    return 1 << (m - 1).bit_length()


@dataclass(frozen=True)
class GeneratingFunction:
    """Symbol of a symmetric Toeplitz band: f(t) = a0 + 2 sum a_k cos(k t).

    Eigenvalues of every finite section lie strictly inside the range of
    f over [0, pi], which is what makes sampled bounds trustworthy.
    """

    band: np.ndarray

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, len(self.band))
        # outer product form, fine for the sample counts used here
        return self.band[0] + 2.0 * np.cos(np.multiply.outer(theta, k)) @ self.band[1:]


class SymBandToeplitz:
    """Symmetric banded Toeplitz matrix defined by its first column band.

    band[k] is the coefficient at offset k.  Offsets at or beyond n never
    connect two rows, so a longer band is silently clipped; trailing
    zeros are dropped to keep the stored halfwidth tight.
    """

    def __init__(self, band, n: int):
        band = np.ascontiguousarray(band, dtype=float)
        if band.ndim != 1 or band.size == 0:
            raise ValueError("band must be a nonempty 1d array")
        if n < 1:
            raise ValueError("n must be positive")
        if band.size > n:
            band = band[:n]
        nz = np.nonzero(band)[0]
        last = int(nz[-1]) if nz.size else 0
        self.band = band[: last + 1].copy()
        self.n = int(n)
        self._symbol_fft: Optional[np.ndarray] = None
        self._embed = 0

    @property
    def halfwidth(self) -> int:
        return len(self.band) - 1

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        return np.full(self.n, self.band[0])

    def _matvec_direct(self, v: np.ndarray) -> np.ndarray:
        # fixed accumulation order: diagonal first, then offsets 1..s,
        # so repeated runs are bitwise identical
        w = self.band[0] * v
        for k in range(1, len(self.band)):
            t = self.band[k]
            w[:-k] += t * v[k:]
            w[k:] += t * v[:-k]
        return w

    def _prepare_fft(self):
        m = _next_pow2(2 * self.n)
        if self._symbol_fft is None or self._embed != m:
            s = len(self.band) - 1
            c = np.zeros(m)
            c[: s + 1] = self.band
            if s > 0:
                c[m - s:] = self.band[s:0:-1]
            self._embed = m
            self._symbol_fft = np.fft.rfft(c)

    def _matvec_fft(self, v: np.ndarray) -> np.ndarray:
        self._prepare_fft()
        vp = np.zeros(self._embed)
        vp[: self.n] = v
        return np.fft.irfft(np.fft.rfft(vp) * self._symbol_fft, n=self._embed)[: self.n]

    def flops_direct(self) -> float:
        return 2.0 * self.n * (2 * len(self.band) - 1)

    def flops_fft(self) -> float:
        m = _next_pow2(2 * self.n)
        # three real transforms plus the pointwise product
        return 7.5 * m * math.log2(m) + 2.0 * m

    def matvec(self, v: np.ndarray, mode: str = "auto") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError("vector length mismatch")
        if mode == "direct":
            return self._matvec_direct(v)
        if mode == "fft":
            return self._matvec_fft(v)
        if mode != "auto":
            raise ValueError(f"unknown matvec mode {mode!r}")
        if self.flops_fft() < self.flops_direct():
            return self._matvec_fft(v)
        return self._matvec_direct(v)

    def __matmul__(self, v):
        return self.matvec(v)

    def generating_function(self) -> GeneratingFunction:
        return GeneratingFunction(self.band)

    def symbol_bounds(self, samples: int = 8192):
        """Min and max of the symbol sampled on [0, pi].

        The sample count grows with the halfwidth so oscillatory wide
        bands are still resolved (at least 4 samples per coefficient).
        """
        samples = max(samples, 4 * (len(self.band)))
        g = self.generating_function()(np.linspace(0.0, np.pi, samples))
        return float(g.min()), float(g.max())

    def to_symband(self) -> "SymBandMatrix":
        s = self.halfwidth
        ab = np.zeros((s + 1, self.n))
        for k in range(s + 1):
            ab[k, : self.n - k] = self.band[k]
        return SymBandMatrix(ab)

    def to_dense(self) -> np.ndarray:
        return self.to_symband().to_dense()

    def to_sparse(self):
        diags, offs = [], []
        for k in range(len(self.band)):
            if k == 0:
                diags.append(np.full(self.n, self.band[0]))
                offs.append(0)
            else:
                diags.append(np.full(self.n - k, self.band[k]))
                offs.append(k)
                diags.append(np.full(self.n - k, self.band[k]))
                offs.append(-k)
        return sp.diags(diags, offs, format="csr")

    def eigenvalues(self) -> np.ndarray:
        return self.to_symband().eigenvalues()


class SymBandMatrix:
    """General symmetric banded matrix, LAPACK lower band storage.

    ab has shape (s+1, n) with ab[k, i] = A[i+k, i]; the trailing k
    entries of row k are padding and forced to zero.
    """

    def __init__(self, ab):
        ab = np.array(ab, dtype=float)
        if ab.ndim != 2 or ab.shape[0] < 1 or ab.shape[1] < 1:
            raise ValueError("ab must be (s+1, n)")
        s, n = ab.shape[0] - 1, ab.shape[1]
        if s >= n:
            raise ValueError("halfwidth must be below the dimension")
        for k in range(1, s + 1):
            ab[k, n - k:] = 0.0
        self.ab = ab
        self.n = n

    @property
    def halfwidth(self) -> int:
        return self.ab.shape[0] - 1

    @property
    def shape(self):
        return (self.n, self.n)

    def diagonal(self) -> np.ndarray:
        return self.ab[0]

    def matvec(self, v: np.ndarray, mode: str = "auto") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError("vector length mismatch")
        w = self.ab[0] * v
        for k in range(1, self.ab.shape[0]):
            t = self.ab[k, : self.n - k]
            w[: self.n - k] += t * v[k:]
            w[k:] += t * v[: self.n - k]
        return w

    def __matmul__(self, v):
        return self.matvec(v)

    def entry(self, i: int, j: int) -> float:
        k = abs(i - j)
        if k > self.halfwidth:
            return 0.0
        return float(self.ab[k, min(i, j)])

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for k in range(self.ab.shape[0]):
            d = self.ab[k, : self.n - k]
            A += np.diag(d, k)
            if k:
                A += np.diag(d, -k)
        return A

    def to_sparse(self):
        diags, offs = [self.ab[0]], [0]
        for k in range(1, self.ab.shape[0]):
            diags.append(self.ab[k, : self.n - k])
            offs.append(k)
            diags.append(self.ab[k, : self.n - k])
            offs.append(-k)
        return sp.diags(diags, offs, format="csr")

    def eigenvalues(self, which: Optional[tuple] = None) -> np.ndarray:
        """All eigenvalues, or an index range (lo, hi) of them, ascending."""
        if which is None:
            return scipy.linalg.eig_banded(self.ab, lower=True, eigvals_only=True)
        return scipy.linalg.eig_banded(
            self.ab, lower=True, eigvals_only=True, select="i", select_range=which
        )


def stride_laplacian(dim: int, stride: int) -> SymBandToeplitz:
    """Second difference at distance `stride`: 2 on the diagonal, -1 at
    offset `stride`.  For stride >= dim the coupling falls outside the
    matrix and only the diagonal survives."""
    if dim < 1 or stride < 1:
        raise ValueError("dim and stride must be positive")
    band = np.zeros(min(stride, dim - 1) + 1) if dim > 1 else np.zeros(1)
    band[0] = 2.0
    if stride <= dim - 1:
        band[stride] = -1.0
    return SymBandToeplitz(band, dim)


@dataclass(frozen=True)
class StrideSpectrum:
    """Spectrum description of a stride Laplacian.

    The matrix splits into `stride` independent second difference
    chains.  If every chain has the same length q the spectrum is
    exactly the q chain eigenvalues, each with multiplicity `stride`;
    otherwise the chains differ in length by one and only a positive
    lower bound on the smallest eigenvalue is reported.
    """

    values: Optional[np.ndarray]
    multiplicity: Optional[int]
    lambda1_lower: float


def stride_laplacian_spectrum(dim: int, stride: int) -> StrideSpectrum:
    if dim < 1 or stride < 1:
        raise ValueError("dim and stride must be positive")
    if stride >= dim:
        # pure diagonal, eigenvalue 2 with full multiplicity
        return StrideSpectrum(np.array([2.0]), dim, 2.0)
    if dim % stride == 0:
        q = dim // stride
        k = np.arange(1, q + 1)
        vals = 4.0 * np.sin(k * np.pi / (2.0 * (q + 1))) ** 2
        return StrideSpectrum(vals, stride, float(vals[0]))
    qmax = math.ceil(dim / stride)
    lo = 4.0 * math.sin(math.pi / (2.0 * (qmax + 1))) ** 2
    return StrideSpectrum(None, None, lo)


def laplacian_mixture_weights(band: np.ndarray) -> np.ndarray:
    """Weights w such that the band equals sum_j w[j-1] * stride_j matrix.

    Matching offsets gives w_j = -band[j]; the diagonal then matches
    automatically because the band has zero row sum.  A nonzero residual
    on the diagonal means the input was not a zero row sum band.
    """
    band = np.asarray(band, dtype=float)
    w = -band[1:]
    resid = band[0] - 2.0 * w.sum()
    scale = max(abs(band[0]), 1.0)
    if abs(resid) > 1e-12 * scale:
        raise ValueError("band does not have zero row sum, no mixture exists")
    return w


def dense_spectrum(op, cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues of a banded operator, refused above the size cap."""
    n = op.shape[0]
    if n > cap:
        raise ValueError(f"dense spectrum of n={n} refused, cap is {cap}")
    sb = op.to_symband() if isinstance(op, SymBandToeplitz) else op
    return sb.eigenvalues()
