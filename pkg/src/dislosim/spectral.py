"""Spectral kernel machinery on the periodic unit torus.

Everything here is defined through the discrete Fourier transform with the
1/N^2 normalization

    c_m(v) = (1/N^2) sum_n v_n exp(-2*pi*i m.n / N),

so that a constant field has c_0 equal to that constant and discrete
Parseval reads sum_m |c_m|^2 = (dx)^2 sum |v|^2 with dx = 1/N.

The interaction kernel has Fourier coefficients m1^2 m2^2 / (m1^2+m2^2)^2
(zero on the axes); it is singular in physical space, so the grid field used
by the scheme is the Cesaro-regularized trigonometric polynomial synthesized
directly from its weighted coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImaginaryResidueError",
    "NegativeCoefficientError",
    "SizeMismatchError",
    "SigmaField",
    "kernel_coeff",
    "fejer_weight",
    "sigma_coeff",
    "build_sigma_field",
    "dft2",
    "idft2",
    "convolve_scaled",
    "sigma_dft_coeffs",
    "signed_freqs",
]

IMAG_TOL = 1e-10
NEG_TOL = 1e-12


class ImaginaryResidueError(ArithmeticError):
    """Synthesized field carries an imaginary part above tolerance."""


class NegativeCoefficientError(ArithmeticError):
    """A kernel spectrum coefficient is negative beyond roundoff slack."""


class SizeMismatchError(ValueError):
    """Operands live on grids of different size."""


def kernel_coeff(m1: int, m2: int) -> float:
    """Fourier coefficient m1^2 m2^2 / (m1^2 + m2^2)^2 of the kernel.

    Vanishes whenever m1 == 0 or m2 == 0 (in particular at the zero mode)
    and is bounded by 1/4 everywhere by the AM-GM inequality.
    """
    if m1 == 0 or m2 == 0:
        return 0.0
    q = float(m1 * m1 + m2 * m2)
    return (m1 * m1) * (m2 * m2) / (q * q)


def fejer_weight(p: int, M: int) -> float:
    """Triangular weight (1 - |p|/M) for |p| < M, zero otherwise."""
    if M < 1:
        raise ValueError("order M must be >= 1")
    return max(0.0, 1.0 - abs(p) / M)


def sigma_coeff(m1: int, m2: int, M: int) -> float:
    """Coefficient of the order-M regularized kernel at frequency (m1, m2).

    Product of the two triangular weights with the kernel coefficient;
    supported on the open square |m1| < M, |m2| < M.
    """
    return fejer_weight(m1, M) * fejer_weight(m2, M) * kernel_coeff(m1, m2)


@dataclass(frozen=True)
class SigmaField:
    """Regularized kernel sampled at the N x N grid nodes."""

    M: int
    N: int
    values: np.ndarray


def _banded_spectrum(M: int, N: int) -> np.ndarray:
    """N x N array of regularized-kernel coefficients folded mod N.

    Frequencies outside {0,...,N-1} alias onto their residue; when the band
    width 2M-1 exceeds N several signed frequencies can land on the same
    slot and their weighted coefficients accumulate, which is exactly what
    nodal sampling of the trigonometric polynomial sees.
    """
    ms = np.arange(-(M - 1), M)  # band of surviving frequencies
    w = 1.0 - np.abs(ms) / M
    m1, m2 = np.meshgrid(ms, ms, indexing="ij")
    qq = (m1 * m1 + m2 * m2).astype(np.float64)
    qq[qq == 0.0] = 1.0  # (0,0) has zero numerator anyway
    kc = (m1 * m1) * (m2 * m2) / (qq * qq)
    band = np.outer(w, w) * kc

    spectrum = np.zeros((N, N), dtype=np.float64)
    np.add.at(spectrum, (m1 % N, m2 % N), band)
    return spectrum


def build_sigma_field(M: int, N: int) -> SigmaField:
    """Synthesize the regularized kernel at the grid nodes x_i = i/N.

    The synthesis sums the weighted coefficients over the (2M-1)^2
    surviving frequencies; the result is real with sup norm at most M^2.

    Raises
    ------
    ImaginaryResidueError
        If the synthesized field has imaginary residue above 1e-10, which
        signals a frequency-bookkeeping bug.
    """
    if not 1 <= M <= N:
        raise ValueError("need 1 <= M <= N")
    spectrum = _banded_spectrum(M, N)
    field = np.fft.ifft2(spectrum) * N * N
    residue = float(np.max(np.abs(field.imag)))
    if residue > IMAG_TOL:
        raise ImaginaryResidueError(
            f"imaginary residue {residue:.3e} exceeds {IMAG_TOL:.0e}"
        )
    return SigmaField(M=M, N=N, values=np.ascontiguousarray(field.real))


def dft2(v: np.ndarray) -> np.ndarray:
    """2-D DFT with the 1/N^2 normalization (fast transform inside)."""
    n0, n1 = v.shape
    if n0 != n1:
        raise SizeMismatchError(f"expected a square grid, got {v.shape}")
    return np.fft.fft2(v) / (n0 * n0)


def idft2(c: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft2`; returns the real part of the synthesis."""
    n0, n1 = c.shape
    if n0 != n1:
        raise SizeMismatchError(f"expected a square spectrum, got {c.shape}")
    return np.real(np.fft.ifft2(c) * (n0 * n0))


def convolve_scaled(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Circular convolution weighted by the cell area (dx)^2 = 1/N^2.

    out[i, j] = sum_{l, r} (dx)^2 v[l, r] w[i-l, j-r] with cyclic indices,
    so that spectrally c(out) = c(v) * c(w) under the 1/N^2 normalization.
    """
    if v.shape != w.shape:
        raise SizeMismatchError(f"shape mismatch {v.shape} vs {w.shape}")
    n = v.shape[0]
    if n != v.shape[1]:
        raise SizeMismatchError(f"expected square grids, got {v.shape}")
    out = np.fft.ifft2(np.fft.fft2(v) * np.fft.fft2(w)) / (n * n)
    return np.real(out)


def sigma_dft_coeffs(M: int, N: int) -> np.ndarray:
    """DFT coefficients of the node-sampled regularized kernel.

    These are the weights of the dissipation quadratic form; they must be
    real, nonnegative and bounded by 4 (each coefficient is a sum of at
    most four aliased weighted kernel coefficients).

    Raises
    ------
    NegativeCoefficientError
        If any coefficient drops below -1e-12, which would break the
        entropy structure of the scheme.
    """
    coeffs = dft2(build_sigma_field(M, N).values)
    residue = float(np.max(np.abs(coeffs.imag)))
    if residue > IMAG_TOL:
        raise ImaginaryResidueError(
            f"imaginary residue {residue:.3e} exceeds {IMAG_TOL:.0e}"
        )
    low = float(np.min(coeffs.real))
    if low < -NEG_TOL:
        raise NegativeCoefficientError(
            f"coefficient {low:.3e} below -{NEG_TOL:.0e}"
        )
    return coeffs


def signed_freqs(N: int) -> np.ndarray:
    """Signed frequency representatives in (-N/2, N/2], Nyquist mapped to +N/2."""
    m = np.arange(N)
    return np.where(m <= N // 2, m, m - N)
