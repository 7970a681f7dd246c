"""Spectral layer against brute-force oracles and the kernel bounds."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dislosim.spectral import (
    ImaginaryResidueError,
    SizeMismatchError,
    build_sigma_field,
    convolve_scaled,
    dft2,
    fejer_weight,
    idft2,
    kernel_coeff,
    sigma_coeff,
    sigma_dft_coeffs,
    signed_freqs,
)

RNG = np.random.default_rng(20240831)


# ---------------------------------------------------------------- oracles


def dft2_direct(v):
    """Quadruple-loop DFT with the 1/N^2 normalization."""
    n = v.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for m1 in range(n):
        for m2 in range(n):
            acc = 0.0 + 0.0j
            for n1 in range(n):
                for n2 in range(n):
                    acc += v[n1, n2] * cmath.exp(
                        -2j * math.pi * (m1 * n1 + m2 * n2) / n
                    )
            out[m1, m2] = acc / (n * n)
    return out


def convolve_direct(v, w):
    """Quadruple-loop cell-weighted circular convolution."""
    n = v.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for l in range(n):
                for r in range(n):
                    acc += v[l, r] * w[(i - l) % n, (j - r) % n]
            out[i, j] = acc / (n * n)
    return out


def sigma_node_direct(M, N, i, j):
    """Scalar sum of weighted kernel coefficients at one node."""
    acc = 0.0 + 0.0j
    for m1 in range(-(M - 1), M):
        for m2 in range(-(M - 1), M):
            acc += sigma_coeff(m1, m2, M) * cmath.exp(
                2j * math.pi * (m1 * i + m2 * j) / N
            )
    return acc


# ---------------------------------------------------------- coefficients


def test_kernel_coeff_values():
    assert kernel_coeff(0, 0) == 0.0
    assert kernel_coeff(1, 1) == 0.25
    assert kernel_coeff(3, 0) == 0.0
    assert kernel_coeff(0, 5) == 0.0
    assert kernel_coeff(2, 1) == pytest.approx(0.16, abs=1e-15)


@given(st.integers(-200, 200), st.integers(-200, 200))
def test_kernel_coeff_bounds_and_symmetry(m1, m2):
    val = kernel_coeff(m1, m2)
    assert 0.0 <= val <= 0.25
    assert val == kernel_coeff(-m1, m2) == kernel_coeff(m1, -m2)
    assert val == kernel_coeff(m2, m1)


def test_fejer_weight_values():
    assert fejer_weight(0, 4) == 1.0
    assert fejer_weight(2, 4) == 0.5
    assert fejer_weight(4, 4) == 0.0
    assert fejer_weight(7, 4) == 0.0


@given(st.integers(-50, 50), st.integers(1, 40))
def test_fejer_weight_props(p, M):
    w = fejer_weight(p, M)
    assert 0.0 <= w <= 1.0
    assert w == fejer_weight(-p, M)
    if abs(p) >= M:
        assert w == 0.0
    if abs(p) + 1 <= 50:
        assert fejer_weight(abs(p) + 1, M) <= w


def test_sigma_coeff_values():
    assert sigma_coeff(1, 1, 2) == pytest.approx(0.0625, abs=1e-15)
    assert sigma_coeff(1, 1, 1) == 0.0
    assert sigma_coeff(0, 5, 8) == 0.0


@given(st.integers(-20, 20), st.integers(-20, 20), st.integers(1, 16))
def test_sigma_coeff_support(m1, m2, M):
    val = sigma_coeff(m1, m2, M)
    assert val >= 0.0
    if abs(m1) >= M or abs(m2) >= M:
        assert val == 0.0


# ---------------------------------------------------------- sigma field


def test_sigma_field_m1_zero():
    for n in (1, 2, 5, 8):
        assert np.all(build_sigma_field(1, n).values == 0.0)


def test_sigma_field_node_value_m2_n8():
    sf = build_sigma_field(2, 8)
    # four surviving frequencies (+-1, +-1), each contributing 0.0625 at 0
    assert sf.values[0, 0] == pytest.approx(0.25, abs=1e-12)
    assert np.max(np.abs(sf.values)) <= 4.0 + 1e-12


def test_sigma_field_matches_scalar_sum():
    for M, N in ((2, 8), (3, 5), (4, 4), (5, 7)):
        sf = build_sigma_field(M, N)
        for i, j in ((0, 0), (1, 2), (N - 1, 3 % N)):
            direct = sigma_node_direct(M, N, i, j)
            assert abs(direct.imag) < 1e-10
            assert sf.values[i, j] == pytest.approx(direct.real, abs=1e-10)


def test_sigma_field_bound_sweep():
    # sup bound M^2 over a dense (M, N) sweep
    for n in range(1, 33):
        for m in range(1, n + 1):
            sf = build_sigma_field(m, n)
            assert np.max(np.abs(sf.values)) <= m * m + 1e-10


def test_sigma_field_rejects_bad_order():
    with pytest.raises(ValueError):
        build_sigma_field(5, 4)
    with pytest.raises(ValueError):
        build_sigma_field(0, 4)


# ------------------------------------------------------------------- DFT


def test_dft2_constant_field():
    c = dft2(np.full((6, 6), 5.0))
    assert c[0, 0] == pytest.approx(5.0, abs=1e-13)
    rest = c.copy()
    rest[0, 0] = 0.0
    assert np.max(np.abs(rest)) < 1e-13


def test_dft2_single_cosine():
    n = 8
    i = np.arange(n)
    v = np.cos(2 * math.pi * i / n)[:, None] * np.ones((1, n))
    c = dft2(v)
    assert c[1, 0] == pytest.approx(0.5, abs=1e-13)
    assert c[n - 1, 0] == pytest.approx(0.5, abs=1e-13)
    c[1, 0] = c[n - 1, 0] = 0.0
    assert np.max(np.abs(c)) < 1e-13


def test_dft2_matches_direct_sum():
    v = RNG.standard_normal((8, 8))
    assert np.max(np.abs(dft2(v) - dft2_direct(v))) < 1e-10


def test_idft2_roundtrip():
    for n in (2, 3, 8, 16):
        v = RNG.standard_normal((n, n))
        assert np.max(np.abs(idft2(dft2(v)) - v)) < 1e-12


def test_dft2_conjugate_symmetry():
    n = 6
    v = RNG.standard_normal((n, n))
    c = dft2(v)
    for m1 in range(n):
        for m2 in range(n):
            assert c[(-m1) % n, (-m2) % n] == pytest.approx(
                np.conj(c[m1, m2]), abs=1e-13
            )


def test_parseval():
    for n in (2, 3, 4, 8, 16):
        v = RNG.standard_normal((n, n))
        lhs = np.sum(np.abs(dft2(v)) ** 2)
        rhs = np.sum(v * v) / (n * n)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_dft2_rejects_non_square():
    with pytest.raises(SizeMismatchError):
        dft2(np.zeros((3, 4)))


# ------------------------------------------------------------ convolution


def test_convolve_zero_and_constant():
    v = RNG.standard_normal((6, 6))
    assert np.max(np.abs(convolve_scaled(v, np.zeros((6, 6))))) == 0.0
    w = RNG.standard_normal((6, 6))
    out = convolve_scaled(np.ones((6, 6)), w)
    assert np.max(np.abs(out - np.sum(w) / 36.0)) < 1e-12


def test_convolve_matches_direct_sum():
    for n in (2, 3, 4, 8):
        v = RNG.standard_normal((n, n))
        w = RNG.standard_normal((n, n))
        assert np.max(np.abs(convolve_scaled(v, w) - convolve_direct(v, w))) < 1e-10


def test_convolve_spectral_factorization():
    n = 8
    v = RNG.standard_normal((n, n))
    w = RNG.standard_normal((n, n))
    lhs = dft2(convolve_scaled(v, w))
    rhs = dft2(v) * dft2(w)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_convolve_rejects_mismatch():
    with pytest.raises(SizeMismatchError):
        convolve_scaled(np.zeros((4, 4)), np.zeros((5, 5)))


def test_sigma_annihilates_x1_means():
    # fields depending on j only are killed by the kernel convolution
    for M, N in ((2, 8), (4, 8), (8, 8)):
        sf = build_sigma_field(M, N)
        h = RNG.standard_normal(N)
        v = np.broadcast_to(h, (N, N)).copy()
        out = convolve_scaled(sf.values, v)
        assert np.max(np.abs(out)) < 1e-10


# ------------------------------------------------------ sigma DFT coeffs


def test_sigma_dft_m1_all_zero():
    c = sigma_dft_coeffs(1, 6)
    assert np.max(np.abs(c)) < 1e-14


def test_sigma_dft_range_and_symmetry():
    for M, N in ((2, 4), (3, 8), (8, 8), (16, 16)):
        c = sigma_dft_coeffs(M, N)
        assert np.max(np.abs(c.imag)) <= 1e-10
        assert np.min(c.real) >= -1e-12
        assert np.max(c.real) <= 4.0
        flipped = c[(-np.arange(N)) % N][:, (-np.arange(N)) % N]
        assert np.max(np.abs(c - flipped)) < 1e-12


def weighted_alias_sum(M, N, m1, m2):
    """Sum of weighted kernel coefficients over frequencies p == m (mod N)."""
    acc = 0.0
    for p1 in range(-(M - 1), M):
        for p2 in range(-(M - 1), M):
            if (p1 - m1) % N == 0 and (p2 - m2) % N == 0:
                acc += sigma_coeff(p1, p2, M)
    return acc


def test_sigma_dft_equals_weighted_alias_sum():
    # includes M = N cases where in-band aliases get fractional weights
    for M, N in ((2, 4), (3, 4), (4, 4), (5, 5), (6, 8)):
        c = sigma_dft_coeffs(M, N)
        for m1 in range(N):
            for m2 in range(N):
                assert c[m1, m2].real == pytest.approx(
                    weighted_alias_sum(M, N, m1, m2), abs=1e-10
                )


def test_sigma_dft_example_m2_n4():
    c = sigma_dft_coeffs(2, 4)
    assert c[1, 1].real == pytest.approx(0.0625, abs=1e-12)


def test_signed_freqs():
    assert list(signed_freqs(8)) == [0, 1, 2, 3, 4, -3, -2, -1]
    assert list(signed_freqs(5)) == [0, 1, 2, -2, -1]
