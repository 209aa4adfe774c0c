"""Pairs, special pairs, rigidity, and the kernel classification.

A nearly S*-invariant subspace F = G K_U is the kernel of a Toeplitz
operator exactly when three sub-verdicts align: the contraction B attached
to G is divisible by U, the quotient pair (B0, A') is special (no singular
mass), and the square of G0' = (I - B0)^{-1} A' is rigid.  This module
implements the sub-tests, the classification pipeline, the constructive
recipe that runs the argument backwards, and the rectangular embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .symbols import (DEFAULT_CONFIG, HardyElement, MatrixSymbol,
                      ToleranceConfig, adjoint_flip, apply_symbol, cayley,
                      hardy_inner, herglotz_taylor, sample_symbol,
                      series_inverse, symbol_from_samples, symbol_mul)
from .toeplitz import (KERNEL_GAP_FACTOR, SubspaceBasis, build_toeplitz,
                       kernel_basis, orthonormal_basis, subspace_angle)
from .factor import (OuterReport, PreconditionError, bauer_factorize,
                     divide_inner, is_inner, shift_span)
from .nearly import model_space_basis, sarason_B

DEFAULT_LADDER = (16, 32, 64)
RIGIDITY_FLOOR = 1e-4
ANGLE_TOL = 1e-5


# -- pairs --------------------------------------------------------------------------

@dataclass(frozen=True)
class Pair:
    """Corona pair (B, A): analytic unit-ball B with outer A, A*A + B*B = I a.e."""

    B: MatrixSymbol
    A: MatrixSymbol
    mass_gap: float
    special: str


def pair_identity_defect(B: MatrixSymbol, A: MatrixSymbol,
                         config: ToleranceConfig = DEFAULT_CONFIG) -> float:
    """Max over grid samples of ||A*A + B*B - I|| in spectral norm."""
    K = config.grid_size
    sa = sample_symbol(A, K)
    sb = sample_symbol(B, K)
    acc = np.einsum("kij,kil->kjl", sa.conj(), sa) \
        + np.einsum("kij,kil->kjl", sb.conj(), sb)
    acc -= np.eye(B.cols)[None]
    return float(np.max(np.linalg.norm(acc, 2, axis=(1, 2))))


def pair_from_B(B: MatrixSymbol, N: int | None = None,
                config: ToleranceConfig = DEFAULT_CONFIG) -> Pair:
    """Complete a unit-ball analytic B to a pair by factoring I - B*B.

    A is the outer spectral factor normalized with A(0) Hermitian positive
    definite; the mass gap and special verdict are filled in by
    special_test when I - B(0) is invertible.
    """
    if B.rows != B.cols:
        raise ValueError("B must be square")
    N = config.trunc_degree if N is None else N
    m = B.rows
    samples = sample_symbol(B, config.grid_size)
    top = float(np.max(np.linalg.norm(samples, 2, axis=(1, 2))))
    if top > 1.0 + 10 * config.residual_tol:
        raise PreconditionError("B in the unit ball on the circle", top)
    density = MatrixSymbol.identity(m) - symbol_mul(adjoint_flip(B), B)
    dens_samples = sample_symbol(density, config.grid_size)
    min_eig = float(np.min(np.linalg.eigvalsh(
        (dens_samples + dens_samples.conj().transpose(0, 2, 1)) / 2)))
    if min_eig < 1e-12:
        raise PreconditionError("I - B*B positive on grid samples", min_eig)
    A = bauer_factorize(density, N, config)
    a0 = np.linalg.eigvalsh((A.coeff(0) + A.coeff(0).conj().T) / 2)
    if a0.min() <= 0:
        raise PreconditionError("A(0) positive definite", float(a0.min()))
    try:
        gap, verdict = special_test(B, A, N, config)
    except (PreconditionError, np.linalg.LinAlgError):
        gap, verdict = float("nan"), "indeterminate"
    return Pair(B, A, gap, verdict)


def special_test(B0: MatrixSymbol, A_prime: MatrixSymbol, N: int | None = None,
                 config: ToleranceConfig = DEFAULT_CONFIG) -> tuple[float, str]:
    """Total-mass criterion for specialness of the pair (B0, A').

    mass_gap = || Re[(I + B0(0))(I - B0(0))^{-1}] - Gram(G0') || with
    G0' = (I - B0)^{-1} A'.  The Hermitian part of the Herglotz value at 0
    carries the full measure; the Gram carries only its absolutely
    continuous part, so a gap certifies singular mass.  The Gram is formed
    at two truncation depths and drift between them yields "indeterminate"
    (divergence cannot be ruled out at this N).
    """
    N = config.trunc_degree if N is None else N
    r = B0.rows
    ident = pair_identity_defect(B0, A_prime, config)
    if ident > 100 * config.residual_tol:
        raise PreconditionError("pair boundary identity A*A + B*B = I", ident)
    b00 = B0.coeff(0)
    eye = np.eye(r)
    if np.linalg.cond(eye - b00) > 1e12:
        raise PreconditionError("I - B0(0) invertible", float(np.linalg.cond(eye - b00)))
    X = (eye + b00) @ np.linalg.inv(eye - b00)
    herm = (X + X.conj().T) / 2

    inv = series_inverse(MatrixSymbol.identity(r) - B0, 2 * N)
    g0p = symbol_mul(inv, A_prime)

    def gram_to(depth: int) -> np.ndarray:
        acc = np.zeros((r, r), complex)
        for d in range(0, min(depth, g0p.max_deg) + 1):
            c = g0p.coeff(d)
            acc += c.conj().T @ c
        return acc

    gram_lo, gram_hi = gram_to(N), gram_to(2 * N)
    drift = float(np.linalg.norm(gram_hi - gram_lo, 2))
    gap = float(np.linalg.norm(herm - gram_hi, 2))
    if drift > max(100 * config.residual_tol, 1e-3 * np.linalg.norm(gram_hi, 2)):
        return gap, "indeterminate"
    if gap <= 10 * config.residual_tol:
        return gap, "special"
    if gap >= RIGIDITY_FLOOR:
        return gap, "not-special"
    return gap, "indeterminate"


# -- rigidity -----------------------------------------------------------------------

@dataclass(frozen=True)
class RigidityReport:
    """sigma_min ladder of the finite sections of F* F^{-1}.

    verdict "non-rigid" always carries a certified witness (a kernel
    vector v with ||T v|| <= 10 rank_tol ||v||); "rigid" requires the
    ladder to stay above the floor without decay; anything else is
    "indeterminate" since finite sections cannot prove an infinite kernel
    trivial.
    """

    verdict: str
    sigma_ladder: tuple
    ladder: tuple
    witness: HardyElement | None = None
    witness_residual: float = float("inf")


def rigidity_test(F: MatrixSymbol, ladder=DEFAULT_LADDER,
                  config: ToleranceConfig = DEFAULT_CONFIG) -> RigidityReport:
    """Three-valued rigidity verdict for the square of an outer F."""
    span = shift_span(F, config.trunc_degree, config)
    if span.verdict != "outer":
        raise PreconditionError("F outer", span.eta_fine)
    K = config.grid_size
    sf = sample_symbol(F, K)
    smin_f = float(np.min(np.linalg.svd(sf, compute_uv=False)))
    if smin_f < 1e-12:
        raise PreconditionError("F invertible on grid samples", smin_f)
    phi_samples = np.einsum("kji,kjl->kil", sf.conj(), np.linalg.inv(sf))
    phi = symbol_from_samples(phi_samples, -(K // 2), K // 2 - 1).compress(1e-13)

    sigmas = []
    witness = None
    witness_residual = float("inf")
    for n in ladder:
        T = build_toeplitz(phi, n)
        u, s, vh = np.linalg.svd(T.matrix)
        smin = float(s[-1])
        sigmas.append(smin)
        if witness is None and smin <= 10 * config.rank_tol * max(float(s[0]), 1.0):
            gap_ok = s.size < 2 or s[-2] >= KERNEL_GAP_FACTOR * max(smin, 1e-300)
            if gap_ok:
                v = vh[-1].conj()
                resid = float(np.linalg.norm(T.matrix @ v))
                if resid <= 10 * config.rank_tol:
                    peak = v[np.argmax(np.abs(v))]
                    v = v * (np.conj(peak) / abs(peak))
                    witness = HardyElement.from_vector(v, F.rows)
                    witness_residual = resid
    if witness is not None:
        verdict = "non-rigid"
    elif min(sigmas) >= RIGIDITY_FLOOR and sigmas[-1] >= 0.5 * sigmas[0]:
        verdict = "rigid"
    else:
        verdict = "indeterminate"
    return RigidityReport(verdict, tuple(sigmas), tuple(ladder),
                          witness, witness_residual)


# -- the Toeplitz symbol ------------------------------------------------------------

def _unitary_completion(theta0: np.ndarray) -> np.ndarray:
    comp = scipy.linalg.null_space(theta0.conj().T)
    for j in range(comp.shape[1]):
        peak = comp[np.argmax(np.abs(comp[:, j])), j]
        if abs(peak) > 0:
            comp[:, j] *= np.conj(peak) / abs(peak)
    return np.hstack([theta0, comp])


def toeplitz_symbol(G: MatrixSymbol, U: MatrixSymbol,
                    theta: OuterReport | None = None,
                    config: ToleranceConfig = DEFAULT_CONFIG) -> MatrixSymbol:
    """Boundary symbol whose Toeplitz kernel is G K_U.

    Square G: samples of G* U* G^{-1}.  Rectangular G (r < m, theta from
    shift_span required): the span is rotated flat by Theta = [Theta0,
    completion], the reduced r x r symbol is built from G~ = Theta0^H G,
    and the m x m result is Theta (G~* U* G~^{-1} (+) I_{m-r}) Theta*.
    """
    K = config.grid_size
    m = G.rows
    su = sample_symbol(U, K)
    rect = theta is not None and theta.rank < m
    if rect:
        gt = symbol_mul(MatrixSymbol.constant(theta.theta0.conj().T), G)
    else:
        if G.rows != G.cols:
            raise ValueError("rectangular G requires a shift_span report")
        gt = G
    sg = sample_symbol(gt, K)
    smin = float(np.min(np.linalg.svd(sg, compute_uv=False)))
    if smin < 1e-12:
        raise PreconditionError("G~ invertible on grid samples", smin)
    core = np.einsum("kji,kjl->kil", sg.conj(),
                     np.einsum("kji,kjl->kil", su.conj(), np.linalg.inv(sg)))
    if rect:
        full = _unitary_completion(theta.theta0)
        r = theta.rank
        padded = np.tile(np.eye(m, dtype=complex), (K, 1, 1))
        padded[:, :r, :r] = core
        core = np.einsum("ij,kjl,ml->kim", full, padded, full.conj())
    if not np.all(np.isfinite(core)):
        raise PreconditionError("bounded boundary samples", float("inf"))
    return symbol_from_samples(core, -(K // 2), K // 2 - 1).compress(1e-13)


# -- classification -----------------------------------------------------------------

@dataclass(frozen=True)
class ClassificationReport:
    """Pipeline record: three sub-verdicts, the symbol, and the cross-check.

    final is "is-kernel" only when divisibility, specialness, and rigidity
    all pass and the kernel of the constructed symbol agrees with G K_U
    within the angle tolerance at both truncation depths.
    """

    divisibility: str
    divisibility_defect: float
    special: str
    mass_gap: float
    rigidity: str
    sigma_ladder: tuple
    final: str
    symbol: MatrixSymbol | None
    cross_check_angle: float
    ladder: tuple

    def to_json_dict(self, symbol_ref: str = "inline") -> dict:
        def clean(x):
            if x is None or (isinstance(x, float) and not np.isfinite(x)):
                return None
            return x
        return {
            "divisibility": {"verdict": self.divisibility,
                             "defect": clean(self.divisibility_defect)},
            "special": {"verdict": self.special, "mass_gap": clean(self.mass_gap)},
            "rigidity": {"verdict": self.rigidity,
                         "sigma_min": [clean(s) for s in self.sigma_ladder]},
            "final": self.final,
            "symbol_ref": symbol_ref if self.symbol is not None else None,
            "cross_check_angle": clean(self.cross_check_angle),
            "ladder": {"N": list(self.ladder)},
        }


def _gk_basis(G: MatrixSymbol, U: MatrixSymbol, M: int,
              config: ToleranceConfig) -> SubspaceBasis:
    ku = model_space_basis(U, M, config)
    if ku.size == 0:
        return SubspaceBasis(G.rows, M, ())
    images = [apply_symbol(G, k, M) for k in ku.elements]
    cols = np.stack([f.to_vector(M) for f in images], axis=1)
    return orthonormal_basis(cols, G.rows, M, config.rank_tol)


def _cross_check(phi: MatrixSymbol, G: MatrixSymbol, U: MatrixSymbol,
                 N: int, config: ToleranceConfig) -> float:
    worst = 0.0
    for M in (N, 2 * N):
        ker = kernel_basis(build_toeplitz(phi, M), config)
        target = _gk_basis(G, U, M, config)
        worst = max(worst, subspace_angle(ker, target))
    return worst


def classify_kernel(G: MatrixSymbol, U: MatrixSymbol, N: int,
                    config: ToleranceConfig = DEFAULT_CONFIG,
                    ladder=DEFAULT_LADDER) -> ClassificationReport:
    """Decide whether F = G K_U is the kernel of a Toeplitz operator.

    Pipeline: B from the Sarason construction; division B = U B0;
    specialness of (B0, A') with A' = (I - B0 U) G; rigidity of the square
    of G0' = (I - B0)^{-1} A'.  The constructed symbol and the subspace
    angle between its Toeplitz kernel and G K_U are reported whenever the
    samples allow, whatever the verdicts.  Indeterminate sub-verdicts
    propagate; they are never resolved by majority.
    """
    if G.rows != G.cols:
        raise ValueError("rectangular G: use embed_rect")
    m = G.rows
    cert = is_inner(U, config)
    if not cert.is_inner or cert.rank != U.rows:
        raise PreconditionError("U inner of full rank", cert.deviation)
    if np.linalg.norm(U.coeff(0)) > 1e-10:
        raise PreconditionError("U(0) = 0", float(np.linalg.norm(U.coeff(0))))

    _, B = sarason_B(G, N, config)
    div = divide_inner(B, U, config)
    if div.divisible:
        div_verdict = "divisible"
    elif div.defect >= RIGIDITY_FLOOR:
        div_verdict = "not-divisible"
    else:
        div_verdict = "indeterminate"

    special_verdict, gap = "skipped", float("nan")
    rig_verdict, sigmas = "skipped", ()
    if div.divisible:
        B0 = div.quotient
        eye = MatrixSymbol.identity(m)
        A_prime = symbol_mul(eye - symbol_mul(B0, U), G)
        gap, special_verdict = special_test(B0, A_prime, N, config)
        if config.g0prime_contracted:
            g0p = symbol_mul(eye - B0, A_prime)
        else:
            g0p = symbol_mul(series_inverse(eye - B0, N), A_prime).truncate(0, N)
        rig = rigidity_test(g0p, ladder, config)
        rig_verdict, sigmas = rig.verdict, rig.sigma_ladder

    phi = None
    angle = float("nan")
    try:
        phi = toeplitz_symbol(G, U, None, config)
        angle = _cross_check(phi, G, U, N, config)
    except PreconditionError:
        pass

    verdicts = (div_verdict, special_verdict, rig_verdict)
    if verdicts == ("divisible", "special", "rigid"):
        final = "is-kernel" if angle <= ANGLE_TOL else "indeterminate"
    elif any(v in ("not-divisible", "not-special", "non-rigid") for v in verdicts):
        final = "not-kernel"
    else:
        final = "indeterminate"
    return ClassificationReport(div_verdict, float(div.defect),
                                special_verdict, gap,
                                rig_verdict, sigmas,
                                final, phi, angle, tuple(ladder))


# -- the constructive recipe --------------------------------------------------------

def _inv_sqrt_hermitian(h: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    if w.min() <= 0:
        raise PreconditionError("Gram positive definite", float(w.min()))
    return v @ np.diag(w ** -0.5) @ v.conj().T


@dataclass(frozen=True)
class ConstructionResult:
    """Output of the recipe: G with orthonormal columns, F = G K_U, the symbol."""

    G: MatrixSymbol
    F: SubspaceBasis
    phi: MatrixSymbol
    scale: np.ndarray = field(repr=False)
    pair: Pair | None = None
    B: MatrixSymbol | None = None
    angle_N: float = float("nan")
    angle_2N: float = float("nan")
    rigidity: RigidityReport | None = None


def construct_kernel(G0p: MatrixSymbol, U: MatrixSymbol, N: int,
                     config: ToleranceConfig = DEFAULT_CONFIG,
                     ladder=DEFAULT_LADDER) -> ConstructionResult:
    """Run the classification backwards from a rigid G0'.

    F0 = Herglotz of G0'* G0', B0 = cayley(F0), A' from bauer_factorize of
    I - B0*B0 (the recovered pair must be special), B = U B0, and
    G = (I - B0 U)^{-1} A' rescaled on the right so its column Gram is the
    identity.  Returns G, the orthonormalized F = {p_+(G k)}, the symbol,
    and the kernel agreement angles at N and 2N.
    """
    if G0p.rows != G0p.cols:
        raise ValueError("G0' must be square")
    r = G0p.rows
    rig = rigidity_test(G0p, ladder, config)
    if rig.verdict != "rigid":
        raise PreconditionError("G0' square rigid", rig.sigma_ladder[-1]
                                if rig.sigma_ladder else float("nan"))
    cert = is_inner(U, config)
    if not cert.is_inner or cert.rank != U.rows:
        raise PreconditionError("U inner of full rank", cert.deviation)
    if np.linalg.norm(U.coeff(0)) > 1e-10:
        raise PreconditionError("U(0) = 0", float(np.linalg.norm(U.coeff(0))))

    density = symbol_mul(adjoint_flip(G0p), G0p)
    F0 = herglotz_taylor(density, N, config)
    B0 = cayley(F0)
    eye = MatrixSymbol.identity(r)
    complement = eye - symbol_mul(adjoint_flip(B0), B0)
    A_prime = bauer_factorize(complement, N, config)
    gap, verdict = special_test(B0, A_prime, N, config)
    if verdict != "special":
        raise PreconditionError("recovered pair (B0, A') special", gap)

    B = symbol_mul(U, B0)
    g_raw = symbol_mul(series_inverse(eye - symbol_mul(B0, U), N),
                       A_prime).truncate(0, N)
    gram = np.zeros((r, r), complex)
    for d in range(0, g_raw.max_deg + 1):
        c = g_raw.coeff(d)
        gram += c.conj().T @ c
    scale = _inv_sqrt_hermitian(gram)
    G = symbol_mul(g_raw, MatrixSymbol.constant(scale))

    phi = toeplitz_symbol(G, U, None, config)
    F = _gk_basis(G, U, N, config)
    angles = []
    for M in (N, 2 * N):
        ker = kernel_basis(build_toeplitz(phi, M), config)
        angles.append(subspace_angle(ker, _gk_basis(G, U, M, config)))
    return ConstructionResult(G, F, phi, scale,
                              Pair(B0, A_prime, gap, verdict), B,
                              angles[0], angles[1], rig)


# -- rectangular embedding ----------------------------------------------------------

@dataclass(frozen=True)
class EmbedResult:
    """Ambient m x m symbol for a flat r-dimensional shift span, r < m."""

    theta: np.ndarray = field(repr=False)
    phi: MatrixSymbol | None = None
    classification: ClassificationReport | None = None
    ambient_angle: float = float("nan")


def embed_rect(G: MatrixSymbol, U: MatrixSymbol, N: int,
               config: ToleranceConfig = DEFAULT_CONFIG,
               ladder=DEFAULT_LADDER) -> EmbedResult:
    """Classify a rectangular G (r < m) and return the full-size symbol.

    The shift span of G is rotated onto the first r coordinates by a
    constant unitary Theta, the reduced r x r problem goes through
    classify_kernel, and the returned symbol acts as the reduced symbol on
    the span and as the identity on its complement.  The kernel of the
    ambient symbol is cross-checked against G K_U directly.
    """
    m, r = G.rows, G.cols
    if r >= m:
        raise ValueError("square input: use classify_kernel")
    span = shift_span(G, N, config)
    if span.verdict != "outer":
        raise PreconditionError("G outer", span.eta_fine)
    if span.rank != r or U.rows != r:
        raise PreconditionError("shift span dimension equals r", float(span.rank))

    gt = symbol_mul(MatrixSymbol.constant(span.theta0.conj().T), G).compress(1e-14)
    classification = classify_kernel(gt, U, N, config, ladder)
    phi = toeplitz_symbol(G, U, span, config)
    theta = _unitary_completion(span.theta0)

    worst = 0.0
    for M in (N, 2 * N):
        ker = kernel_basis(build_toeplitz(phi, M), config)
        target = _gk_basis(G, U, M, config)
        worst = max(worst, subspace_angle(ker, target))
    return EmbedResult(theta, phi, classification, worst)


# -- the H(B) inner product ---------------------------------------------------------

def hb_inner(h1: HardyElement, h2: HardyElement, pair: Pair,
             config: ToleranceConfig = DEFAULT_CONFIG) -> complex:
    """<h1, h2> + <h1+, h2+> where T_{A*} h+ = T_{B*} h at degree N.

    The companion h+ is found by least squares on the finite sections; a
    large solve residual means h is not in H(B) at this truncation.
    """
    N = config.trunc_degree
    TA = build_toeplitz(adjoint_flip(pair.A), N).matrix
    TB = build_toeplitz(adjoint_flip(pair.B), N).matrix

    def companion(h: HardyElement) -> HardyElement:
        rhs = TB @ h.to_vector(N)
        sol, *_ = np.linalg.lstsq(TA, rhs, rcond=None)
        resid = float(np.linalg.norm(TA @ sol - rhs))
        if resid > 10 * config.residual_tol * max(1.0, h.norm()):
            raise ValueError(
                f"not in H(B) at this truncation: solve residual {resid:.3e}")
        return HardyElement.from_vector(sol, h.dim)

    p1, p2 = companion(h1), companion(h2)
    return hardy_inner(h1, h2) + hardy_inner(p1, p2)
