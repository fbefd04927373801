"""Exact integer/rational building blocks for the EGUE moment formulas.

Every function here is total over the integers and exact: Python ints for
counts, :class:`fractions.Fraction` for ratios.  Out-of-range binomials are
zero, which several of the closed forms rely on (``d(N:0)`` and ``Lambda``
with a large irrep label).
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

__all__ = ["binomial", "lambda_coeff", "d_nu", "u_coeff_sq"]


def binomial(n: int, k: int) -> int:
    """C(n, k), with C(n, k) = 0 whenever k < 0, k > n or n < 0."""
    if n < 0 or k < 0 or k > n:
        return 0
    return comb(n, k)


def lambda_coeff(Np: int, mp: int, r: int, mu: int) -> int:
    """Lambda^mu(N', m', r) = C(m' - mu, r) * C(N' - m' + r - mu, r).

    Up to an (N, m)-dependent factor this is a U(N) Racah coefficient; it
    carries the variance propagation of a rank-``r`` operator from the
    defining space into ``m'``-particle space.
    """
    return binomial(mp - mu, r) * binomial(Np - mp + r - mu, r)


def d_nu(N: int, nu: int) -> int:
    """Dimension factor d(N:nu) = C(N, nu)^2 - C(N, nu - 1)^2."""
    if nu < 0:
        raise ValueError(f"d_nu needs nu >= 0, got {nu}")
    return binomial(N, nu) ** 2 - binomial(N, nu - 1) ** 2


def u_coeff_sq(N: int, m: int, p: int, nu: int) -> Fraction:
    """Square of the U(N) U-coefficient U(f_m, fbar_p, f_m, f_p; f_{m-p}, nu).

    Only the square is ever needed; the sign is fixed by convention to make
    the phase-times-U product positive.
    """
    if not (0 <= p <= m <= N) or nu < 0:
        raise ValueError(f"u_coeff_sq domain: need 0 <= p <= m <= N, nu >= 0; got {(N, m, p, nu)}")
    num = (
        binomial(N + 1, nu) ** 2
        * binomial(m - nu, p - nu)
        * binomial(N - nu - p, m - p)
        * (N - 2 * nu + 1)
    )
    den = binomial(N - m + p, p) ** 2 * binomial(N, m - p) * (N + 1)
    if num <= 0:
        # N - 2nu + 1 < 0 only when some binomial already vanished
        return Fraction(0)
    return Fraction(num, den)
