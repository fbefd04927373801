"""Large-N limits of the correlation coefficient and fourth-order cumulants.

For N -> infinity at fixed (m, k, k0) only the top irrep (nu = k) survives in
every sum and the cumulants become ratios of binomials in m alone.  Each
quantity is written as ``a * sqrt(r) + b`` with rationals a, r, b, so that
identities between them hold to rounding.

The dilute limit (m -> infinity with m/N -> 0) keeps the 1/m terms only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .combinatorics import binomial
from .errors import DomainError

__all__ = [
    "AsymptoticCumulants",
    "xi_asymp",
    "xi_sq_asymp",
    "k40_k04_asymp",
    "k31_k13_asymp",
    "k22_asymp",
    "dilute_expansion",
    "asymptotic_cumulants",
]


def _check(m: int, k: int, k0: int, need_xi: bool = True) -> None:
    for name, v in (("m", m), ("k", k), ("k0", k0)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise DomainError(f"{name} must be a non-negative int, got {v!r}")
    if need_xi and m < k + k0:
        raise DomainError(f"need m >= k + k0, got m={m}, k={k}, k0={k0}")


def _ratio(num: int, den: int) -> Fraction:
    if den == 0:
        raise DomainError("zero denominator in asymptotic ratio")
    return Fraction(num, den)


def xi_sq_asymp(m: int, k: int, k0: int) -> Fraction:
    """Exact square of the asymptotic correlation coefficient."""
    _check(m, k, k0)
    return _ratio(binomial(m - k, k0) ** 2 * binomial(m, k), binomial(m, k0) ** 2 * binomial(m - k0, k))


def xi_asymp(m: int, k: int, k0: int) -> float:
    """C(m-k, k0) sqrt(C(m, k)) / (C(m, k0) sqrt(C(m-k0, k)))."""
    _check(m, k, k0)
    a = _ratio(binomial(m - k, k0), binomial(m, k0))
    return float(a) * math.sqrt(_ratio(binomial(m, k), binomial(m - k0, k)))


def k40_k04_asymp(m: int, k: int, k0: int) -> tuple[float, float]:
    """Marginal excesses C(m-k, k)/C(m, k) - 1 and C(m-k0-k, k)/C(m-k0, k) - 1."""
    _check(m, k, k0, need_xi=False)
    if k0 > m:
        raise DomainError(f"need k0 <= m, got m={m}, k0={k0}")
    k40 = _ratio(binomial(m - k, k), binomial(m, k)) - 1
    k04 = _ratio(binomial(m - k0 - k, k), binomial(m - k0, k)) - 1
    return float(k40), float(k04)


def k31_k13_asymp(m: int, k: int, k0: int) -> tuple[float, float]:
    """Mixed cumulants from their explicit binomial forms.

    These equal xi * k40 and xi * k04; they are computed here without going
    through those products so the equality is a real check.
    """
    _check(m, k, k0)
    c_m_k = binomial(m, k)
    c_f_k = binomial(m - k0, k)
    lead = _ratio(binomial(m - k, k0), binomial(m, k0))
    root = math.sqrt(Fraction(c_m_k * c_f_k))
    k31 = float(lead * binomial(m - k, k)) / root
    # C(m-k0-k, k) C(m-k, k0) C(m, k)^(1/2) / (C(m, k0) C(m-k0, k)^(3/2))
    k13 = float(lead * binomial(m - k0 - k, k) * c_m_k / c_f_k) / root
    xi = xi_asymp(m, k, k0)
    return k31 - xi, k13 - xi


def k22_asymp(m: int, k: int, k0: int, *, approximate: bool = False) -> float:
    """Asymptotic k22.

    Default: -2 xi^2 + xi^2 + t3 with the middle ratio kept as its own
    binomial expression.  ``approximate=True`` gives the variant that folds
    both ratios over the common factor C(m-2k, k0).
    """
    _check(m, k, k0)
    c_mk0 = binomial(m, k0)
    c_fk = binomial(m - k0, k)
    xi2 = xi_sq_asymp(m, k, k0)
    if approximate:
        bracket = binomial(m, k) + binomial(m - k, k)
        return float(-2 * xi2 + _ratio(binomial(m - 2 * k, k0) * bracket, c_mk0 * c_fk))
    middle = _ratio(binomial(m, k) * binomial(m - k, k0) ** 2, c_fk * c_mk0**2)
    t3 = _ratio(binomial(m - 2 * k, k0) * binomial(m - k, k), c_mk0 * c_fk)
    return float(-2 * xi2 + middle + t3)


def dilute_expansion(m: int, k: int, k0: int) -> tuple[float, float]:
    """Leading 1/m terms: (1 - k k0 / (2m), -k^2 / m)."""
    _check(m, k, k0, need_xi=False)
    if m <= k * k0:
        raise DomainError(f"need m > k * k0, got m={m}, k={k}, k0={k0}")
    return float(1 - Fraction(k * k0, 2 * m)), float(Fraction(-k * k, m))


@dataclass(frozen=True)
class AsymptoticCumulants:
    """Large-N cumulants together with their dilute-limit leading terms."""

    xi: float
    k40: float
    k04: float
    k31: float
    k13: float
    k22: float
    xi_dilute: float | None
    krs_dilute: float | None

    def as_dict(self) -> dict:
        return {
            "xi": self.xi,
            "k40": self.k40,
            "k04": self.k04,
            "k31": self.k31,
            "k13": self.k13,
            "k22": self.k22,
            "xi_dilute": self.xi_dilute,
            "krs_dilute": self.krs_dilute,
        }


def asymptotic_cumulants(m: int, k: int, k0: int, *, approximate_k22: bool = False) -> AsymptoticCumulants:
    """Everything above in one record; dilute terms are None when m <= k k0."""
    k40, k04 = k40_k04_asymp(m, k, k0)
    k31, k13 = k31_k13_asymp(m, k, k0)
    try:
        xd, kd = dilute_expansion(m, k, k0)
    except DomainError:
        xd, kd = None, None
    return AsymptoticCumulants(
        xi=xi_asymp(m, k, k0),
        k40=k40,
        k04=k04,
        k31=k31,
        k13=k13,
        k22=k22_asymp(m, k, k0, approximate=approximate_k22),
        xi_dilute=xd,
        krs_dilute=kd,
    )
