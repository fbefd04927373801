"""Finite-N ensemble-averaged bivariate moments of transition strength densities.

The Hamiltonian is EGUE(k) for ``m`` spinless fermions in ``N`` single
particle states; the transition operator removes (or adds) ``k0`` particles
and has independent Gaussian defining-space coefficients.  Moments are

    M_PQ = < O^dagger H^Q O H^P >^m

(ensemble average of the normalized m-particle trace).  All numbers returned
by the functions in this module are *coefficients*: the physical moment is
``coefficient * vo2 * vh2 ** ((P + Q) / 2)``.

Integer and rational pieces are evaluated exactly; square roots (which enter
through the U-coefficient) are taken in float at the last step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .combinatorics import binomial, d_nu, lambda_coeff, u_coeff_sq
from .errors import DomainError

__all__ = [
    "DomainError",
    "ModelParams",
    "BivariateMoments",
    "CumulantSet",
    "MOMENT_ORDERS",
    "h2_moment",
    "h4_moment",
    "z11_sq",
    "z11",
    "m00",
    "m20_m02_m40_m04",
    "m11",
    "m31",
    "m13",
    "m22_terms",
    "m22_hybrid",
    "removal_moments",
    "addition_variants",
    "exact_moments",
    "cumulants",
    "cumulants_from_moments",
]

REMOVAL = "removal"
ADDITION = "addition"
MODES = (REMOVAL, ADDITION)

# (P, Q) pairs carried by BivariateMoments, in a fixed reporting order.
MOMENT_ORDERS = ((0, 0), (2, 0), (0, 2), (1, 1), (4, 0), (0, 4), (3, 1), (1, 3), (2, 2))


@dataclass(frozen=True)
class ModelParams:
    """The (N, m, k, k0) quadruple plus the two variance scales.

    ``k = 0`` and ``k0 = 0`` are admitted as degenerate limits (scalar H,
    identity-like O); physical use has both >= 1.
    """

    N: int
    m: int
    k: int
    k0: int
    vh2: float = 1.0
    vo2: float = 1.0

    def __post_init__(self):
        N, m, k, k0 = self.N, self.m, self.k, self.k0
        for name in ("N", "m", "k", "k0"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                raise DomainError(f"{name} must be an int, got {getattr(self, name)!r}")
        if not (0 <= k <= m <= N):
            raise DomainError(f"need 0 <= k <= m <= N, got N={N}, m={m}, k={k}")
        if not (0 <= k0 <= m):
            raise DomainError(f"need 0 <= k0 <= m, got m={m}, k0={k0}")
        if not (self.vh2 > 0 and self.vo2 > 0):
            raise DomainError(f"variance scales must be positive, got vh2={self.vh2}, vo2={self.vo2}")

    def final_m(self, mode: str = REMOVAL) -> int:
        """Particle number of the space O maps into."""
        check_mode(self, mode)
        return self.m - self.k0 if mode == REMOVAL else self.m + self.k0

    def with_m(self, m: int) -> "ModelParams":
        return replace(self, m=m)


def check_mode(params: ModelParams, mode: str) -> None:
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == ADDITION and params.m + params.k0 > params.N:
        raise DomainError(f"addition needs m + k0 <= N, got m={params.m}, k0={params.k0}, N={params.N}")


@dataclass
class BivariateMoments:
    """The M_PQ coefficients for P + Q in {0, 2, 4}.

    Values are in units of ``vo2 * vh2 ** ((P+Q)/2)``; :meth:`scaled` gives the
    physical number.  ``m22`` may be ``None`` when no value is available.
    ``se`` optionally holds standard errors (Monte Carlo provenance).
    """

    m00: float
    m20: float
    m02: float
    m11: float
    m40: float
    m04: float
    m31: float
    m13: float
    m22: float | None
    mode: str = REMOVAL
    provenance: str = "exact"
    vh2: float = 1.0
    vo2: float = 1.0
    se: dict = field(default_factory=dict)

    def get(self, P: int, Q: int) -> float | None:
        return getattr(self, f"m{P}{Q}")

    def scaled(self, P: int, Q: int) -> float | None:
        value = self.get(P, Q)
        if value is None:
            return None
        return value * self.vo2 * self.vh2 ** ((P + Q) / 2)

    def as_dict(self) -> dict:
        return {f"M{P}{Q}": self.get(P, Q) for P, Q in MOMENT_ORDERS}


@dataclass(frozen=True)
class CumulantSet:
    """Correlation coefficient and scale-free fourth-order cumulants."""

    xi: float
    k40: float
    k04: float
    k31: float
    k13: float
    k22: float | None

    def as_dict(self) -> dict:
        return {
            "xi": self.xi,
            "k40": self.k40,
            "k04": self.k04,
            "k31": self.k31,
            "k13": self.k13,
            "k22": self.k22,
        }


# ---------------------------------------------------------------------------
# H moments in a fixed particle-number space


def _check_hspace(N: int, m: int, k: int) -> None:
    if not (0 <= m <= N) or k < 0:
        raise DomainError(f"need 0 <= m <= N and k >= 0, got N={N}, m={m}, k={k}")


def h2_moment(N: int, m: int, k: int) -> Fraction:
    """<H^2>^m in units of vh2: Lambda^0(N, m, k)."""
    _check_hspace(N, m, k)
    return Fraction(lambda_coeff(N, m, k, 0))


def h4_moment(N: int, m: int, k: int) -> Fraction:
    """<H^4>^m in units of vh2^2.

    Two of the three Wick pairings factorize into 2 <H^2>^2; the crossed
    pairing leaves a sum over the irreps nu of the k-body tensor.
    """
    _check_hspace(N, m, k)
    h2 = h2_moment(N, m, k)
    dim = binomial(N, m)
    if dim == 0:
        return Fraction(0)
    crossed = sum(
        lambda_coeff(N, m, k, nu) * lambda_coeff(N, m, m - k, nu) * d_nu(N, nu)
        for nu in range(0, min(k, m - k) + 1)
    )
    return 2 * h2 * h2 + Fraction(crossed, dim)


# ---------------------------------------------------------------------------
# Removal-operator moments


def z11_sq(N: int, m: int, k0: int, k: int, nu: int) -> Fraction:
    """Exact square of Z11(N, m, k0, k, nu)."""
    if not (0 <= k0 <= m <= N) or not (0 <= nu <= k):
        raise DomainError(f"z11 domain violated: N={N}, m={m}, k0={k0}, k={k}, nu={nu}")
    mf = m - k0
    return (
        binomial(N, k0)
        * d_nu(N, nu)
        * lambda_coeff(N, m, m - k, nu)
        * lambda_coeff(N, mf, mf - k, nu)
        * u_coeff_sq(N, m, mf, nu)
    )


def z11(N: int, m: int, k0: int, k: int, nu: int) -> float:
    """Z11 with the phase-times-U factor taken as +|U|."""
    return math.sqrt(z11_sq(N, m, k0, k, nu))


def _removal_prefactor(p: ModelParams) -> Fraction:
    # C(N, m)^-1 * C(N - k0, m - k0): reduced matrix element product of A, A^dagger
    return Fraction(binomial(p.N - p.k0, p.m - p.k0), binomial(p.N, p.m))


def _z11_list(p: ModelParams) -> list[float]:
    return [z11(p.N, p.m, p.k0, p.k, nu) for nu in range(p.k + 1)]


def m00(params: ModelParams, mode: str = REMOVAL) -> Fraction:
    """<O^dagger O>^m: C(m, k0) for removal, C(N - m, k0) for addition."""
    check_mode(params, mode)
    if mode == REMOVAL:
        return Fraction(binomial(params.m, params.k0))
    return Fraction(binomial(params.N - params.m, params.k0))


def m20_m02_m40_m04(params: ModelParams, mode: str = REMOVAL) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Moments that factorize into M00 times a pure-H moment."""
    base = m00(params, mode)
    N, m, k = params.N, params.m, params.k
    mf = params.final_m(mode)
    return (
        base * h2_moment(N, m, k),
        base * h2_moment(N, mf, k),
        base * h4_moment(N, m, k),
        base * h4_moment(N, mf, k),
    )


def m11(params: ModelParams) -> float:
    """First mixed moment <O^dagger H O H>^m for removal."""
    return float(_removal_prefactor(params)) * math.fsum(_z11_list(params))


def m31(params: ModelParams) -> float:
    """<O^dagger H O H^3>^m for removal."""
    p = params
    zs = _z11_list(p)
    crossed = math.fsum(lambda_coeff(p.N, p.m, p.k, nu) * zs[nu] for nu in range(0, min(p.k, p.m - p.k) + 1))
    return 2 * float(h2_moment(p.N, p.m, p.k)) * m11(p) + float(_removal_prefactor(p)) * crossed


def m13(params: ModelParams) -> float:
    """<O^dagger H^3 O H>^m for removal."""
    p = params
    mf = p.m - p.k0
    zs = _z11_list(p)
    crossed = math.fsum(lambda_coeff(p.N, mf, p.k, nu) * zs[nu] for nu in range(0, min(p.k, mf - p.k) + 1))
    return 2 * float(h2_moment(p.N, mf, p.k)) * m11(p) + float(_removal_prefactor(p)) * crossed


def asymptotic_t3(m: int, k: int, k0: int) -> float:
    """Asymptotic normalized third term of M22 (its contribution to mu22)."""
    den = binomial(m, k0) * binomial(m - k0, k)
    if den == 0:
        raise DomainError(f"third-term ratio undefined for m={m}, k={k}, k0={k0}")
    return float(Fraction(binomial(m - 2 * k, k0) * binomial(m - k, k), den))


def m22_terms(params: ModelParams) -> tuple[float, float, float]:
    """The three terms of M22 for removal.

    The first two are exact.  No closed form exists for the reduced matrix
    elements in the third, so it is replaced by its asymptotic value
    rescaled to moment units: ``t3 * M20 * M02 / M00``.
    """
    p = params
    mf = p.m - p.k0
    base = m00(p)
    h2i = h2_moment(p.N, p.m, p.k)
    h2f = h2_moment(p.N, mf, p.k)
    term1 = float(base * h2i * h2f)
    pre2 = Fraction(binomial(p.N - p.k0, p.m - p.k0), binomial(p.N, p.m) * binomial(p.N, p.k0))
    term2 = float(pre2) * math.fsum(_z11_list(p)) ** 2
    term3 = asymptotic_t3(p.m, p.k, p.k0) * float(base * h2i * h2f)
    return term1, term2, term3


def m22_hybrid(params: ModelParams) -> float:
    """M22 with exact first two terms and the asymptotic third term."""
    return math.fsum(m22_terms(params))


def removal_moments(params: ModelParams, *, hybrid_m22: bool = True) -> BivariateMoments:
    p = params
    check_mode(p, REMOVAL)
    base = m00(p)
    a20, a02, a40, a04 = m20_m02_m40_m04(p)
    mm22 = None
    if hybrid_m22:
        try:
            mm22 = m22_hybrid(p)
        except DomainError:
            mm22 = None
    return BivariateMoments(
        m00=float(base),
        m20=float(a20),
        m02=float(a02),
        m11=m11(p),
        m40=float(a40),
        m04=float(a04),
        m31=m31(p),
        m13=m13(p),
        m22=mm22,
        mode=REMOVAL,
        provenance="exact-hybrid" if mm22 is not None else "exact",
        vh2=p.vh2,
        vo2=p.vo2,
    )


def addition_variants(params: ModelParams, *, hybrid_m22: bool = True) -> BivariateMoments:
    """Moments for the k0-particle addition operator acting on m particles.

    Adding k0 particles to m is removing k0 from m + k0 read backwards: by
    cyclicity of the trace

        M^add_PQ(m) = C(N, m + k0) / C(N, m) * M^rem_QP(m + k0).
    """
    p = params
    check_mode(p, ADDITION)
    up = removal_moments(p.with_m(p.m + p.k0), hybrid_m22=hybrid_m22)
    ratio = float(Fraction(binomial(p.N, p.m + p.k0), binomial(p.N, p.m)))
    # M00 from the direct formula; the others via the trace identity
    return BivariateMoments(
        m00=float(m00(p, ADDITION)),
        m20=ratio * up.m02,
        m02=ratio * up.m20,
        m11=ratio * up.m11,
        m40=ratio * up.m04,
        m04=ratio * up.m40,
        m31=ratio * up.m13,
        m13=ratio * up.m31,
        m22=None if up.m22 is None else ratio * up.m22,
        mode=ADDITION,
        provenance=up.provenance,
        vh2=p.vh2,
        vo2=p.vo2,
    )


def exact_moments(params: ModelParams, mode: str = REMOVAL, *, hybrid_m22: bool = True) -> BivariateMoments:
    """Closed-form moments in either mode."""
    check_mode(params, mode)
    if mode == REMOVAL:
        return removal_moments(params, hybrid_m22=hybrid_m22)
    return addition_variants(params, hybrid_m22=hybrid_m22)


# ---------------------------------------------------------------------------
# Cumulants


def cumulants_from_moments(moments: BivariateMoments) -> CumulantSet:
    """Reduced cumulants from moment coefficients.

    Works on the unit-scale coefficients, so the result does not depend on
    ``vh2``/``vo2`` at all.
    """
    M = moments
    if M.m00 <= 0:
        raise DomainError("M00 must be positive")
    t20 = M.m20 / M.m00
    t02 = M.m02 / M.m00
    if not (t20 > 0 and t02 > 0):
        raise DomainError("second moments must be positive to form cumulants")
    s20 = math.sqrt(t20)
    s02 = math.sqrt(t02)
    xi = (M.m11 / M.m00) / (s20 * s02)
    mu40 = (M.m40 / M.m00) / t20**2
    mu04 = (M.m04 / M.m00) / t02**2
    mu31 = (M.m31 / M.m00) / (t20 * s20 * s02)
    mu13 = (M.m13 / M.m00) / (s20 * t02 * s02)
    k22 = None
    if M.m22 is not None:
        mu22 = (M.m22 / M.m00) / (t20 * t02)
        k22 = mu22 - 2 * xi**2 - 1
    return CumulantSet(
        xi=xi,
        k40=mu40 - 3,
        k04=mu04 - 3,
        k31=mu31 - 3 * xi,
        k13=mu13 - 3 * xi,
        k22=k22,
    )


def cumulants(arg, mode: str = REMOVAL) -> CumulantSet:
    """Cumulants of a :class:`BivariateMoments`, or of ``exact_moments(params, mode)``."""
    if isinstance(arg, ModelParams):
        arg = exact_moments(arg, mode)
    return cumulants_from_moments(arg)
