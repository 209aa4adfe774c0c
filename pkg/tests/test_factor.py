"""Inner certification, outer detection, factorization and division tests.

Oracles: binomial/geometric series expansions (fixtures module), quadrature
boundary moduli, and exact rational long division for quotients.
"""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toepkern import (
    MatrixSymbol,
    ToleranceConfig,
    adjoint_flip,
    grid_points,
    sample_symbol,
    symbol_mul,
    symbols_allclose,
)
from toepkern.factor import (
    DivisionResult,
    PreconditionError,
    bauer_factorize,
    divide_inner,
    exp_log_defect,
    garcia_inner,
    is_inner,
    outer_exp_log,
    shift_span,
)
from toepkern.fixtures import (
    conjugation_inner,
    g_one_plus_z,
    g_poisson,
    lin_diag_G,
    model_inner_det_z,
    rank2_partial_isometry,
    sarason_B_closed_form,
    sqrt_diag_G,
)

CFG = ToleranceConfig()


# -- inner certification -------------------------------------------------------

def test_z_times_identity_is_inner():
    cert = is_inner(MatrixSymbol.monomial(1, 2), CFG)
    assert cert.is_inner
    assert cert.rank == 2
    assert np.allclose(cert.domain_projector, np.eye(2))


def test_rank2_partial_isometry_certified():
    cert = is_inner(rank2_partial_isometry(), CFG)
    assert cert.is_inner
    assert cert.rank == 2
    assert np.allclose(cert.domain_projector, np.diag([1.0, 0.0, 1.0]), atol=1e-12)
    assert np.allclose(cert.range_projector, np.diag([1.0, 1.0, 0.0]), atol=1e-12)


def test_outer_diagonal_rejected_by_is_inner():
    cert = is_inner(lin_diag_G(), CFG)
    assert not cert.is_inner
    assert cert.deviation > 0.1  # |1+e^{it}|/sqrt2 is far from 1 off t=0


def test_is_inner_requires_square():
    with pytest.raises(ValueError):
        is_inner(MatrixSymbol(2, 1, 0, np.ones((1, 2, 1))), CFG)


def test_is_inner_requires_analytic():
    with pytest.raises(ValueError):
        is_inner(MatrixSymbol.monomial(-1), CFG)


# -- inner completion ------------------------------------------------------------

def test_garcia_trivial_completion():
    U = garcia_inner(MatrixSymbol.monomial(1), MatrixSymbol.scalar([1.0]),
                     MatrixSymbol.scalar([0.0]), CFG)
    want = MatrixSymbol.diag(MatrixSymbol.scalar([1.0]), MatrixSymbol.monomial(1))
    assert symbols_allclose(U.compress(1e-14), want, 1e-12)


def test_garcia_reproduces_det_z_inner():
    a = MatrixSymbol.scalar([0.5, 0.5])
    b = MatrixSymbol.scalar([0.5, -0.5])
    U = garcia_inner(MatrixSymbol.monomial(1), a, b, CFG)
    assert symbols_allclose(U, model_inner_det_z(), 1e-12)
    cert = is_inner(U, CFG)
    assert cert.is_inner and cert.rank == 2


def test_garcia_reproduces_conjugation_inner():
    a = MatrixSymbol.scalar([0.5, 0.5])
    b = MatrixSymbol.scalar([-0.5j, 0.5j])
    U = garcia_inner(MatrixSymbol.monomial(1), a, b, CFG)
    assert symbols_allclose(U, conjugation_inner(), 1e-12)


def _entry(U, i, j):
    return MatrixSymbol(1, 1, U.min_deg, U.coeffs[:, i:i + 1, j:j + 1])


def test_garcia_determinant_is_theta():
    # a = (1+z^2)/2, b = (1-z^2)/2 satisfy |a|^2+|b|^2 = 1 and live in K_{z^3}
    theta = MatrixSymbol.monomial(2)
    a = MatrixSymbol.scalar([0.5, 0.0, 0.5])
    b = MatrixSymbol.scalar([0.5, 0.0, -0.5])
    U = garcia_inner(theta, a, b, CFG)
    det = symbol_mul(_entry(U, 0, 0), _entry(U, 1, 1)) \
        - symbol_mul(_entry(U, 0, 1), _entry(U, 1, 0))
    assert symbols_allclose(det.compress(1e-12), theta, 1e-10)


def test_garcia_rejects_non_unimodular_pair():
    a = MatrixSymbol.scalar([0.9, 0.0])
    b = MatrixSymbol.scalar([0.1])
    with pytest.raises(PreconditionError) as err:
        garcia_inner(MatrixSymbol.monomial(1), a, b, CFG)
    assert "|a|^2" in err.value.check


def test_garcia_rejects_outside_model_space():
    # b = z^2 is orthogonal to nothing useful: z^2 not in span{1, z}
    a = MatrixSymbol.scalar([1.0])
    b = MatrixSymbol.scalar([0.0, 0.0, 1.0])
    with pytest.raises(PreconditionError) as err:
        garcia_inner(MatrixSymbol.monomial(1), a, b, CFG)
    assert "model space" in err.value.check or "|a|^2" in err.value.check


# -- outer detection ----------------------------------------------------------------

def test_sqrt_diag_outer_with_identity_carrier():
    rep = shift_span(sqrt_diag_G(48), 48, CFG)
    assert rep.verdict == "outer"
    assert rep.rank == 2
    assert np.allclose(np.abs(rep.theta0), np.eye(2), atol=1e-12)


def test_monomial_not_outer():
    rep = shift_span(MatrixSymbol.monomial(1), 16, CFG)
    assert rep.verdict == "not-outer"


def test_blaschke_factor_not_outer():
    # (z - 1/2)/(1 - z/2) = -1/2 + (3/4) sum z^k/2^(k-1), truncated
    N = 48
    coeffs = np.zeros(N + 1)
    coeffs[0] = -0.5
    coeffs[1:] = 0.75 * 0.5 ** np.arange(N)
    rep = shift_span(MatrixSymbol.scalar(coeffs), N, CFG)
    assert rep.verdict == "not-outer"
    assert abs(rep.eta_fine - 0.5) < 1e-3


def test_column_symbol_outer_reduced_to_one():
    G = MatrixSymbol(2, 1, 0, np.array([[[1.0], [0.0]]], dtype=complex))
    rep = shift_span(G, 8, CFG)
    assert rep.verdict == "outer"
    assert rep.rank == 1
    assert np.allclose(rep.theta0, [[1.0], [0.0]])
    assert symbols_allclose(rep.g_tilde.compress(1e-14),
                            MatrixSymbol.scalar([1.0]), 1e-12)


def test_poisson_symbol_outer():
    rep = shift_span(g_poisson(64), 64, CFG)
    assert rep.verdict == "outer"
    assert rep.eta_fine <= 1e-12


def test_one_plus_z_outer_despite_boundary_zero():
    g = g_one_plus_z()
    rep = shift_span(g, 32, CFG)
    assert rep.verdict == "outer"
    # boundary zero shows up as a vanishing, halving eta rather than a flat one
    assert rep.eta_coarse > 1e-6
    assert rep.eta_fine < 0.75 * rep.eta_coarse


@given(st.integers(1, 4))
@settings(max_examples=10, deadline=None)
def test_shifted_outer_loses_verdict(k):
    g = symbol_mul(MatrixSymbol.monomial(k), g_poisson(32))
    rep = shift_span(g, 40, CFG)
    assert rep.verdict == "not-outer"


# -- spectral factorization -------------------------------------------------------------

def test_constant_density_root():
    A = bauer_factorize(MatrixSymbol.constant(0.75 * np.eye(2)), 8, CFG)
    assert symbols_allclose(A.compress(1e-13),
                            MatrixSymbol.constant(np.sqrt(3) / 2 * np.eye(2)), 1e-10)


def test_one_plus_cos_factors_to_one_plus_z():
    g = g_one_plus_z()
    density = symbol_mul(adjoint_flip(g), g)  # 1 + cos t
    A = bauer_factorize(density, 16, CFG)
    want = g.coeffs[:, 0, 0]
    assert np.max(np.abs(A.coeffs[:2, 0, 0] - want)) < 1e-9
    assert np.max(np.abs(A.coeffs[2:, 0, 0])) < 1e-9


def test_offcircle_roots_give_outer_factor():
    # |2-z|^2 = 5 - 2z - 2zbar factors as (2-z), not the reflected (1-2z)
    band = MatrixSymbol.scalar([-2, 5, -2], min_deg=-1)
    A = bauer_factorize(band, 8, CFG)
    assert np.max(np.abs(A.coeffs[:2, 0, 0] - np.array([2.0, -1.0]))) < 1e-10
    assert np.max(np.abs(A.coeffs[2:, 0, 0])) < 1e-10
    assert shift_span(A, 24, CFG).verdict == "outer"


def test_truncated_rational_band_recovers_outer_factor():
    # band of 3/|2-z|^2 from the truncated series of sqrt(3)/(2-z)
    g = np.sqrt(3) / 2.0 * 0.5 ** np.arange(65)
    band = MatrixSymbol.scalar(np.convolve(g, g[::-1]), min_deg=-64)
    A = bauer_factorize(band, 64, CFG)
    assert np.max(np.abs(A.coeffs[:, 0, 0] - g)) < 1e-10
    assert shift_span(A, 64, CFG).verdict == "outer"


def test_one_plus_cos_boundary_modulus():
    g = g_one_plus_z()
    density = symbol_mul(adjoint_flip(g), g)
    A = outer_exp_log(density, 16, CFG)
    K = 512
    xi = grid_points(K)
    want = np.sqrt(np.abs(1.0 + np.cos(np.angle(xi))))
    got = np.abs(sample_symbol(A, K)[:, 0, 0])
    assert np.max(np.abs(got - want)) < 1e-8


def test_exp_log_trivial_cases():
    one = outer_exp_log(MatrixSymbol.scalar([1.0]), 8, CFG)
    assert symbols_allclose(one.compress(1e-13), MatrixSymbol.scalar([1.0]), 1e-12)
    threequarter = outer_exp_log(MatrixSymbol.scalar([0.75]), 8, CFG)
    assert abs(threequarter.coeff(0)[0, 0] - np.sqrt(3) / 2) < 1e-12


def test_exp_log_refuses_nondiagonal():
    phi = MatrixSymbol.constant(np.array([[2.0, 0.5], [0.5, 2.0]]))
    with pytest.raises(ValueError):
        outer_exp_log(phi, 8, CFG)


def _noncommuting_density():
    A0 = MatrixSymbol(2, 2, 0, np.array([[[1, 0.5], [0, 1]],
                                         [[0, 0.5], [0.2, 0]]], dtype=complex))
    return symbol_mul(adjoint_flip(A0), A0)


def test_bauer_matricial_reconstruction():
    phi = _noncommuting_density()
    A = bauer_factorize(phi, 24, CFG)
    K = 512
    av = sample_symbol(A, K)
    rec = np.matmul(np.conj(np.transpose(av, (0, 2, 1))), av)
    assert np.max(np.abs(rec - sample_symbol(phi, K))) < CFG.residual_tol
    # gauge: A(0) Hermitian positive definite
    a0 = A.coeff(0)
    assert np.max(np.abs(a0 - np.conj(a0.T))) < 1e-10
    assert np.min(np.linalg.eigvalsh((a0 + np.conj(a0.T)) / 2)) > 0


def test_bauer_factor_is_outer():
    A = bauer_factorize(_noncommuting_density(), 24, CFG)
    assert shift_span(A, 24, CFG).verdict == "outer"


def test_bauer_gauge_stable_across_moment_sizes():
    phi = _noncommuting_density()
    A1 = bauer_factorize(phi, 24, CFG, moment_rows=256)
    A2 = bauer_factorize(phi, 24, CFG, moment_rows=384)
    assert (A1 - A2).norm_l2() <= 1e-6


def test_bauer_rejects_indefinite():
    phi = MatrixSymbol.constant(np.diag([1.0, -1.0]))
    with pytest.raises(PreconditionError):
        bauer_factorize(phi, 8, CFG)


def test_exp_log_defect_separates_commuting_from_not():
    assert exp_log_defect(_noncommuting_density(), 24, CFG) > 1e-3
    g = g_poisson(16)
    diag = symbol_mul(adjoint_flip(g), g)
    assert exp_log_defect(diag, 24, CFG) < 1e-10


# -- division by inner functions -----------------------------------------------------------

def test_divide_monomials():
    res = divide_inner(MatrixSymbol.scalar([0.0, 0.0, 0.5]),
                       MatrixSymbol.monomial(1), CFG)
    assert res.divisible
    assert symbols_allclose(res.quotient.compress(1e-14),
                            MatrixSymbol.scalar([0.0, 0.5]), 1e-13)


def test_divide_sarason_series_by_z():
    B = sarason_B_closed_form(64)
    res = divide_inner(B, MatrixSymbol.monomial(1), CFG)
    assert res.divisible
    # quotient must be 1/(2+z) = sum (-1)^k z^k / 2^(k+1)
    want = (-1.0) ** np.arange(64) * 0.5 ** (np.arange(64) + 1)
    assert np.max(np.abs(res.quotient.coeffs[:64, 0, 0] - want)) < 1e-12


def test_divide_failure_reports_mass():
    B = sarason_B_closed_form(64)
    res = divide_inner(B, MatrixSymbol.monomial(2), CFG)
    assert not res.divisible
    assert res.quotient is None
    assert abs(res.defect - 0.5) < 1e-10


def test_divide_then_remultiply():
    B = sarason_B_closed_form(64)
    U = model_inner_det_z()
    UB = symbol_mul(U, MatrixSymbol.diag(B, B))
    res = divide_inner(UB, U, CFG)
    assert res.divisible
    K = 512
    dev = sample_symbol(symbol_mul(U, res.quotient).truncate(0, 65), K) \
        - sample_symbol(UB, K)
    assert np.max(np.abs(dev)) <= 10 * CFG.residual_tol


def test_divide_requires_inner_divisor():
    with pytest.raises(PreconditionError):
        divide_inner(MatrixSymbol.scalar([0.0, 1.0]), lin_diag_G(), CFG)
