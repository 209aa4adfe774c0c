"""Closed-form fixtures shared by the test suite, scripts and the CLI.

Every builder returns exact coefficient data (binomial or geometric series),
so tests can compare library output against independent expansions.
"""
from __future__ import annotations

import numpy as np
from scipy.special import binom

from .symbols import MatrixSymbol, adjoint_flip, riesz_project, symbol_mul


def g_one_plus_z() -> MatrixSymbol:
    """Scalar outer g = (1+z)/sqrt(2); |g|^2 = 1 + cos t, vanishing at -1."""
    return MatrixSymbol.scalar([1 / np.sqrt(2), 1 / np.sqrt(2)])


def g_poisson(N: int) -> MatrixSymbol:
    """Scalar outer g = sqrt(3)/(2 - z); |g|^2 is the Poisson kernel at 1/2."""
    coeffs = np.sqrt(3) / 2.0 * (0.5 ** np.arange(N + 1))
    return MatrixSymbol.scalar(coeffs)


def g_poisson_double(N: int) -> MatrixSymbol:
    """Scalar outer sqrt(3)/(2 - z^2), unit H2 norm."""
    coeffs = np.zeros(N + 1)
    coeffs[0::2] = np.sqrt(3) / 2.0 * (0.5 ** np.arange(len(coeffs[0::2])))
    return MatrixSymbol.scalar(coeffs)


def phi_poisson_double(N: int) -> MatrixSymbol:
    """Laurent band of zbar (2 - z^2) / (2 - zbar^2).

    Exact expansion: coefficient -1/2 at degree +1, 3/4 at degree -1, and
    3/2^(k+2) at degree -(2k+1) for k >= 1; even degrees vanish.
    """
    arr = np.zeros(N + 2, dtype=complex)  # degrees -N..1
    arr[-1] = -0.5  # degree +1
    arr[N - 1] = 0.75  # degree -1
    k = 1
    while 2 * k + 1 <= N:
        arr[N - (2 * k + 1)] = 3.0 * 2.0 ** (-k - 2)
        k += 1
    return MatrixSymbol.scalar(arr, min_deg=-N)


def sqrt_binomial(sign: int, N: int) -> MatrixSymbol:
    """(1 + sign z)^(1/2) by the binomial series, truncated at N."""
    coeffs = np.array([binom(0.5, k) * (sign ** k) for k in range(N + 1)])
    return MatrixSymbol.scalar(coeffs)


def sqrt_diag_G(N: int) -> MatrixSymbol:
    """Diagonal outer (1/2) diag((1+z)^(1/2), (1-z)^(1/2))."""
    return MatrixSymbol.diag(sqrt_binomial(+1, N).scale(0.5),
                             sqrt_binomial(-1, N).scale(0.5))


def lin_diag_G() -> MatrixSymbol:
    """Diagonal outer (1/sqrt2) diag(1+z, 1-z)."""
    s = 1 / np.sqrt(2)
    return MatrixSymbol.diag(MatrixSymbol.scalar([s, s]),
                             MatrixSymbol.scalar([s, -s]))


def column_G() -> MatrixSymbol:
    """Rectangular outer column (1, 0)^T."""
    return MatrixSymbol(2, 1, 0, np.array([[[1.0], [0.0]]], dtype=complex))


def model_inner_det_z() -> MatrixSymbol:
    """2x2 inner (1/2)[[1+z, -(1-z)], [z-1, 1+z]] with determinant z."""
    return MatrixSymbol(2, 2, 0, 0.5 * np.array(
        [[[1, -1], [-1, 1]], [[1, 1], [1, 1]]], dtype=complex))


def conjugation_inner() -> MatrixSymbol:
    """2x2 inner (1/2)[[1+z, i(1-z)], [-i(1-z), 1+z]] for theta = z."""
    return MatrixSymbol(2, 2, 0, 0.5 * np.array(
        [[[1, 1j], [-1j, 1]], [[1, -1j], [1j, 1]]], dtype=complex))


def rank2_partial_isometry() -> MatrixSymbol:
    """3x3 analytic partial isometry of rank 2 built from theta = z.

    Columns: a = (1+z)/2, b = -(1-z)/2 wired as [[a,0,-b],[th fb,0,th fa],[0,0,0]];
    boundary values satisfy T^H T = diag(1,0,1), T T^H = diag(1,1,0).
    """
    a = MatrixSymbol.scalar([0.5, 0.5])
    b = MatrixSymbol.scalar([-0.5, 0.5])
    theta = MatrixSymbol.monomial(1)

    def tf(s):
        return riesz_project(symbol_mul(theta, adjoint_flip(s)), "plus")

    zero = MatrixSymbol.scalar([0.0])
    return MatrixSymbol.from_blocks([
        [a, zero, b.scale(-1)],
        [tf(b), zero, tf(a)],
        [zero, zero, zero],
    ])


def half_signature() -> MatrixSymbol:
    """Constant contraction (1/2) diag(1, -1)."""
    return MatrixSymbol.constant(np.diag([0.5, -0.5]))


def twisted_contraction(b1: MatrixSymbol, b2: MatrixSymbol) -> MatrixSymbol:
    """2x2 symbol [[b1, b2], [-b2, -b1]] from scalar entries."""
    return MatrixSymbol.from_blocks([[b1, b2], [b2.scale(-1), b1.scale(-1)]])


def sarason_B_closed_form(N: int) -> MatrixSymbol:
    """Taylor series of z/(2+z): (-1)^(k+1) z^k / 2^k for k >= 1."""
    coeffs = np.zeros(N + 1)
    k = np.arange(1, N + 1)
    coeffs[1:] = (-1.0) ** (k + 1) * 0.5 ** k
    return MatrixSymbol.scalar(coeffs)
