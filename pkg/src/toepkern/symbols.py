"""Matrix-valued Laurent polynomials and analytic vector polynomials on the circle.

Everything downstream (Toeplitz sections, factorizations, classification)
manipulates two carriers: MatrixSymbol, a matrix Laurent polynomial with
coefficients on a finite degree band, and HardyElement, an analytic vector
polynomial. Boundary sampling uses the offset grid xi_j = exp(2 pi i (j+1/2)/K)
so that real-axis zeros of the standard fixtures (1 +- z) never coincide with a
sample point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg


def _pow2_at_least(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length() if n > 1 else 2


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical policy shared by all operations.

    Parameters
    ----------
    trunc_degree : int
        Working truncation degree N for analytic expansions.
    grid_size : int
        Boundary sample count K; a power of two with K >= 4*(N+1) so products
        of degree-N factors are alias-free.
    rank_tol : float
        Relative singular-value cutoff for numerical kernels.
    residual_tol : float
        Absolute tolerance for identity residuals.
    g0prime_contracted : bool
        Alternative orientation (I - B0) A' for the reduced outer function in
        the classification pipeline; the default multiplies by the inverse.
    """

    trunc_degree: int = 64
    grid_size: int = 512
    rank_tol: float = 1e-8
    residual_tol: float = 1e-8
    g0prime_contracted: bool = False

    def __post_init__(self) -> None:
        if self.trunc_degree < 1:
            raise ValueError("trunc_degree must be positive")
        k = self.grid_size
        if k & (k - 1) or k < 4 * (self.trunc_degree + 1):
            raise ValueError("grid_size must be a power of two >= 4*(N+1)")

    def with_degree(self, n: int) -> "ToleranceConfig":
        """Config at truncation degree n with a compatible grid."""
        k = max(_pow2_at_least(4 * (n + 1)), 8)
        return ToleranceConfig(n, k, self.rank_tol, self.residual_tol,
                               self.g0prime_contracted)


DEFAULT_CONFIG = ToleranceConfig()


def grid_points(K: int) -> np.ndarray:
    """Offset K-point grid exp(2 pi i (j+1/2)/K) on the unit circle."""
    return np.exp(2j * np.pi * (np.arange(K) + 0.5) / K)


@dataclass(frozen=True, eq=False)
class MatrixSymbol:
    """Matrix Laurent polynomial sum_k coeffs[k - min_deg] z^k.

    coeffs has shape (n_deg, rows, cols); degree k runs over
    [min_deg, min_deg + n_deg - 1]. Values are immutable.
    """

    rows: int
    cols: int
    min_deg: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.ndim != 3 or arr.shape[1:] != (self.rows, self.cols):
            raise ValueError("coeffs must have shape (n_deg, rows, cols)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    # -- construction -----------------------------------------------------
    @staticmethod
    def zero(rows: int, cols: int) -> "MatrixSymbol":
        return MatrixSymbol(rows, cols, 0, np.zeros((1, rows, cols), complex))

    @staticmethod
    def identity(m: int) -> "MatrixSymbol":
        return MatrixSymbol(m, m, 0, np.eye(m, dtype=complex)[None])

    @staticmethod
    def constant(mat: np.ndarray) -> "MatrixSymbol":
        mat = np.atleast_2d(np.asarray(mat, dtype=complex))
        return MatrixSymbol(mat.shape[0], mat.shape[1], 0, mat[None])

    @staticmethod
    def scalar(series: Sequence[complex], min_deg: int = 0) -> "MatrixSymbol":
        arr = np.asarray(series, dtype=complex).reshape(-1, 1, 1)
        return MatrixSymbol(1, 1, min_deg, arr)

    @staticmethod
    def monomial(k: int, m: int = 1) -> "MatrixSymbol":
        """z^k * I_m."""
        return MatrixSymbol(m, m, k, np.eye(m, dtype=complex)[None])

    @staticmethod
    def from_blocks(blocks: Sequence[Sequence["MatrixSymbol"]]) -> "MatrixSymbol":
        """Assemble a matrix symbol from a grid of scalar (1x1) symbols."""
        p, q = len(blocks), len(blocks[0])
        lo = min(s.min_deg for row in blocks for s in row)
        hi = max(s.max_deg for row in blocks for s in row)
        out = np.zeros((hi - lo + 1, p, q), complex)
        for i, row in enumerate(blocks):
            if len(row) != q:
                raise ValueError("ragged block grid")
            for j, s in enumerate(row):
                if s.rows != 1 or s.cols != 1:
                    raise ValueError("from_blocks takes scalar symbols")
                out[s.min_deg - lo:s.min_deg - lo + s.coeffs.shape[0], i, j] = \
                    s.coeffs[:, 0, 0]
        return MatrixSymbol(p, q, lo, out)

    @staticmethod
    def diag(*entries: "MatrixSymbol") -> "MatrixSymbol":
        """Block-diagonal stack of scalar (1x1) symbols."""
        m = len(entries)
        lo = min(e.min_deg for e in entries)
        hi = max(e.max_deg for e in entries)
        out = np.zeros((hi - lo + 1, m, m), complex)
        for i, e in enumerate(entries):
            if e.rows != 1 or e.cols != 1:
                raise ValueError("diag takes scalar symbols")
            out[e.min_deg - lo:e.min_deg - lo + e.coeffs.shape[0], i, i] = \
                e.coeffs[:, 0, 0]
        return MatrixSymbol(m, m, lo, out)

    # -- basic queries -----------------------------------------------------
    @property
    def max_deg(self) -> int:
        return self.min_deg + self.coeffs.shape[0] - 1

    def coeff(self, k: int) -> np.ndarray:
        if self.min_deg <= k <= self.max_deg:
            return self.coeffs[k - self.min_deg]
        return np.zeros((self.rows, self.cols), complex)

    def norm_l2(self) -> float:
        """L2(T) norm with the Frobenius norm on matrix values."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        lo = min(self.min_deg, other.min_deg)
        hi = max(self.max_deg, other.max_deg)
        out = np.zeros((hi - lo + 1, self.rows, self.cols), complex)
        out[self.min_deg - lo:self.max_deg - lo + 1] += self.coeffs
        out[other.min_deg - lo:other.max_deg - lo + 1] += other.coeffs
        return MatrixSymbol(self.rows, self.cols, lo, out)

    def __sub__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        return self + other.scale(-1)

    def scale(self, c: complex) -> "MatrixSymbol":
        return MatrixSymbol(self.rows, self.cols, self.min_deg, self.coeffs * c)

    def __mul__(self, other: "MatrixSymbol") -> "MatrixSymbol":
        return symbol_mul(self, other)

    def truncate(self, lo: int, hi: int) -> "MatrixSymbol":
        """Restrict the degree band to [lo, hi] (zero symbol if disjoint)."""
        lo2, hi2 = max(lo, self.min_deg), min(hi, self.max_deg)
        if lo2 > hi2:
            return MatrixSymbol(self.rows, self.cols, 0,
                                np.zeros((1, self.rows, self.cols), complex))
        return MatrixSymbol(self.rows, self.cols, lo2,
                            self.coeffs[lo2 - self.min_deg:hi2 - self.min_deg + 1])

    def compress(self, tol: float = 0.0) -> "MatrixSymbol":
        """Drop zero margins of the degree band."""
        mags = np.abs(self.coeffs).reshape(self.coeffs.shape[0], -1).max(axis=1)
        keep = np.nonzero(mags > tol)[0]
        if keep.size == 0:
            return MatrixSymbol.zero(self.rows, self.cols)
        return MatrixSymbol(self.rows, self.cols, self.min_deg + int(keep[0]),
                            self.coeffs[keep[0]:keep[-1] + 1])

    # -- evaluation --------------------------------------------------------
    def eval_at(self, z: complex) -> np.ndarray:
        """Value at a point; Laurent symbols are evaluable only on |z| = 1."""
        z = complex(z)
        if self.min_deg < 0 and abs(abs(z) - 1.0) > 1e-9:
            raise ValueError("negative degrees present: evaluation needs |z| = 1")
        if abs(z) > 1.0 + 1e-9:
            raise ValueError("evaluation outside the closed disc")
        powers = z ** np.arange(self.min_deg, self.max_deg + 1) if self.min_deg >= 0 \
            else np.array([z ** k if k >= 0 else np.conj(z) ** (-k)
                           for k in range(self.min_deg, self.max_deg + 1)])
        return np.tensordot(powers, self.coeffs, axes=(0, 0))

    # -- JSON interchange ---------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "min_deg": self.min_deg,
            "max_deg": self.max_deg,
            "coeffs": [
                [[float(v.real), float(v.imag)] for v in mat.reshape(-1)]
                for mat in self.coeffs
            ],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "MatrixSymbol":
        rows, cols = int(d["rows"]), int(d["cols"])
        lo, hi = int(d["min_deg"]), int(d["max_deg"])
        entries = d["coeffs"]
        if len(entries) != hi - lo + 1:
            raise ValueError("coeffs length disagrees with degree range")
        arr = np.zeros((hi - lo + 1, rows, cols), complex)
        for i, flat in enumerate(entries):
            if len(flat) != rows * cols:
                raise ValueError("coefficient entry count disagrees with shape")
            vals = np.array([complex(re, im) for re, im in flat])
            arr[i] = vals.reshape(rows, cols)
        return MatrixSymbol(rows, cols, lo, arr)


def symbol_mul(a: MatrixSymbol, b: MatrixSymbol) -> MatrixSymbol:
    """Exact Cauchy-product coefficients of the pointwise matrix product."""
    if a.cols != b.rows:
        raise ValueError("dimension mismatch in symbol product")
    na, nb = a.coeffs.shape[0], b.coeffs.shape[0]
    out = np.zeros((na + nb - 1, a.rows, b.cols), complex)
    for i in range(na):
        out[i:i + nb] += np.matmul(a.coeffs[i], b.coeffs)
    return MatrixSymbol(a.rows, b.cols, a.min_deg + b.min_deg, out)


def adjoint_flip(a: MatrixSymbol) -> MatrixSymbol:
    """Boundary adjoint a(xi)^H: degree k picks up conj-transpose of -k."""
    arr = np.conj(np.transpose(a.coeffs[::-1], (0, 2, 1)))
    return MatrixSymbol(a.cols, a.rows, -a.max_deg, arr)


def riesz_project(a: MatrixSymbol, sign: str) -> MatrixSymbol:
    """Riesz projections: 'plus' keeps degrees >= 0, 'minus' keeps < 0."""
    if sign == "plus":
        return a.truncate(0, max(a.max_deg, 0))
    if sign == "minus":
        return a.truncate(min(a.min_deg, -1), -1)
    raise ValueError("sign must be 'plus' or 'minus'")


# -- boundary sampling ------------------------------------------------------

def sample_symbol(a: MatrixSymbol, K: int) -> np.ndarray:
    """Values of a at the K offset grid points, shape (K, rows, cols).

    Exact (to roundoff) trigonometric evaluation via FFT with the half-step
    phase twist; requires K at least the band width.
    """
    n = a.coeffs.shape[0]
    if K < n:
        raise ValueError("grid too small for the degree band")
    degs = np.arange(a.min_deg, a.max_deg + 1)
    phased = a.coeffs * np.exp(1j * np.pi * degs / K)[:, None, None]
    buf = np.zeros((K, a.rows, a.cols), complex)
    np.add.at(buf, degs % K, phased)
    return K * np.fft.ifft(buf, axis=0)


def symbol_from_samples(values: np.ndarray, min_deg: int, max_deg: int) -> MatrixSymbol:
    """Fourier coefficients on [min_deg, max_deg] from offset-grid samples."""
    values = np.asarray(values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None, None]
    K = values.shape[0]
    if max_deg - min_deg + 1 > K:
        raise ValueError("requested band exceeds grid resolution")
    hat = np.fft.fft(values, axis=0) / K
    degs = np.arange(min_deg, max_deg + 1)
    arr = hat[degs % K] * np.exp(-1j * np.pi * degs / K)[:, None, None]
    return MatrixSymbol(values.shape[1], values.shape[2], min_deg, arr)


def symbols_allclose(a: MatrixSymbol, b: MatrixSymbol, tol: float = 1e-12) -> bool:
    return (a - b).norm_l2() <= tol


# -- Hardy elements -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HardyElement:
    """Analytic vector polynomial f = sum_j coeffs[j] z^j, coeffs (N+1, m)."""

    dim: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise ValueError("coeffs must have shape (N+1, dim)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @staticmethod
    def from_vector(vec: np.ndarray, dim: int) -> "HardyElement":
        vec = np.asarray(vec, dtype=complex).reshape(-1, dim)
        return HardyElement(dim, vec)

    @staticmethod
    def scalar(series: Sequence[complex]) -> "HardyElement":
        return HardyElement(1, np.asarray(series, complex).reshape(-1, 1))

    @property
    def degree(self) -> int:
        return self.coeffs.shape[0] - 1

    def to_vector(self, degree: int | None = None) -> np.ndarray:
        """Stacked coefficient vector, zero-padded/truncated to degree."""
        n = self.degree if degree is None else degree
        out = np.zeros(((n + 1), self.dim), complex)
        take = min(n + 1, self.coeffs.shape[0])
        out[:take] = self.coeffs[:take]
        return out.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def eval_at(self, z: complex) -> np.ndarray:
        powers = np.power(complex(z), np.arange(self.coeffs.shape[0]))
        return powers @ self.coeffs

    def as_symbol(self) -> MatrixSymbol:
        return MatrixSymbol(self.dim, 1, 0, self.coeffs[:, :, None])

    def backward_shift(self) -> "HardyElement":
        """S* f = (f - f(0))/z."""
        if self.coeffs.shape[0] == 1:
            return HardyElement(self.dim, np.zeros((1, self.dim), complex))
        return HardyElement(self.dim, self.coeffs[1:])


def hardy_inner(f: HardyElement, g: HardyElement) -> complex:
    """H2 inner product <f, g> = sum_j <f_j, g_j>."""
    n = max(f.coeffs.shape[0], g.coeffs.shape[0])
    a = np.zeros((n, f.dim), complex)
    b = np.zeros((n, g.dim), complex)
    a[:f.coeffs.shape[0]] = f.coeffs
    b[:g.coeffs.shape[0]] = g.coeffs
    return complex(np.sum(a * np.conj(b)))


def apply_symbol(a: MatrixSymbol, f: HardyElement, degree: int) -> HardyElement:
    """p_+(a f) truncated to the requested degree (exact convolution first)."""
    prod = symbol_mul(a, f.as_symbol())
    out = np.zeros((degree + 1, a.rows), complex)
    lo, hi = max(prod.min_deg, 0), min(prod.max_deg, degree)
    if lo <= hi:
        out[lo:hi + 1] = prod.coeffs[lo - prod.min_deg:hi - prod.min_deg + 1, :, 0]
    return HardyElement(a.rows, out)


# -- Herglotz transform and Cayley map ---------------------------------------

def _check_hermitian_band(density: MatrixSymbol, tol: float) -> None:
    if density.rows != density.cols:
        raise ValueError("density must be square")
    flipped = adjoint_flip(density)
    if (density - flipped).norm_l2() > tol * max(density.norm_l2(), 1.0):
        raise ValueError("density is not Hermitian-valued on the circle")


def herglotz(density: MatrixSymbol, z: complex,
             config: ToleranceConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Herglotz integral F(z) of a Hermitian density, |z| < 1.

    F(z) = c_0 + 2 sum_{k>=1} c_k z^k with c_k the analytic-side Fourier
    coefficients of the density.
    """
    if abs(z) >= 1:
        raise ValueError("Herglotz transform is defined inside the disc")
    _check_hermitian_band(density, 1e-10)
    acc = np.array(density.coeff(0), complex)
    zk = 1.0 + 0j
    for k in range(1, density.max_deg + 1):
        zk *= z
        acc = acc + 2.0 * zk * density.coeff(k)
    return acc


def herglotz_taylor(density: MatrixSymbol, N: int,
                    config: ToleranceConfig = DEFAULT_CONFIG) -> MatrixSymbol:
    """Degree-N Taylor truncation of the Herglotz transform."""
    _check_hermitian_band(density, 1e-10)
    m = density.rows
    arr = np.zeros((N + 1, m, m), complex)
    arr[0] = density.coeff(0)
    for k in range(1, N + 1):
        arr[k] = 2.0 * density.coeff(k)
    return MatrixSymbol(m, m, 0, arr)


def series_inverse(a: MatrixSymbol, N: int) -> MatrixSymbol:
    """Power-series inverse of an analytic symbol with invertible a(0)."""
    if a.min_deg < 0:
        raise ValueError("series inverse needs an analytic symbol")
    if a.rows != a.cols:
        raise ValueError("series inverse needs a square symbol")
    m = a.rows
    s0 = a.coeff(0)
    s0_inv = np.linalg.inv(s0)
    out = np.zeros((N + 1, m, m), complex)
    out[0] = s0_inv
    for k in range(1, N + 1):
        acc = np.zeros((m, m), complex)
        for j in range(1, min(k, a.max_deg) + 1):
            acc += a.coeff(j) @ out[k - j]
        out[k] = -s0_inv @ acc
    return MatrixSymbol(m, m, 0, out)


def cayley(F: MatrixSymbol) -> MatrixSymbol:
    """B = (F + I)^{-1} (F - I) as a Taylor truncation at deg F.

    Power-series inversion keeps the output a genuine analytic truncation;
    B(0) = 0 whenever F(0) = I.
    """
    if F.min_deg != 0 and F.compress().min_deg < 0:
        raise ValueError("cayley needs an analytic symbol")
    N = F.max_deg
    eye = MatrixSymbol.identity(F.rows)
    inv = series_inverse(F + eye, N)
    return symbol_mul(inv, F - eye).truncate(0, N)


# -- pointwise matrix functions on the grid -----------------------------------

def matrix_pointwise(a: MatrixSymbol, kind: str, K: int,
                     tol: float = 1e-10):
    """Samplewise principal-branch matrix functions on the K-point grid.

    kind in {'sqrt_psd', 'log_pd', 'exp', 'polar'}; sqrt/log demand Hermitian
    (semi)definite samples, polar demands nonsingular samples and returns the
    pair (unitary, hermitian) with sample = unitary @ hermitian.
    """
    vals = sample_symbol(a, K)
    if kind in ("sqrt_psd", "log_pd"):
        herm_dev = np.max(np.abs(vals - np.conj(np.transpose(vals, (0, 2, 1)))))
        if herm_dev > 1e-8 * (1 + np.max(np.abs(vals))):
            raise ValueError("samples are not Hermitian")
        w, v = np.linalg.eigh(vals)
        if kind == "sqrt_psd":
            if np.min(w) < -tol * max(1.0, float(np.max(np.abs(w)))):
                raise ValueError("indefinite sample in sqrt_psd")
            w = np.sqrt(np.clip(w, 0.0, None))
        else:
            if np.min(w) <= 0:
                raise ValueError("non-positive sample in log_pd")
            w = np.log(w)
        return np.einsum("kij,kj,klj->kil", v, w, np.conj(v))
    if kind == "exp":
        return np.array([scipy.linalg.expm(s) for s in vals])
    if kind == "polar":
        u, s, vh = np.linalg.svd(vals)
        if np.min(s) <= tol * np.max(s):
            raise ValueError("singular sample in polar decomposition")
        unitary = u @ vh
        herm = np.einsum("kji,kj,kjl->kil", np.conj(vh), s, vh)
        return unitary, herm
    raise ValueError(f"unknown pointwise kind: {kind}")
