import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from egue_strength.combinatorics import binomial, lambda_coeff
from egue_strength.exact_moments import (
    ADDITION,
    REMOVAL,
    BivariateMoments,
    DomainError,
    ModelParams,
    asymptotic_t3,
    cumulants,
    cumulants_from_moments,
    exact_moments,
    h2_moment,
    h4_moment,
    m00,
    m11,
    m13,
    m20_m02_m40_m04,
    m22_terms,
    m31,
    z11,
)


@st.composite
def model_params(draw, max_N=40):
    N = draw(st.integers(2, max_N))
    m = draw(st.integers(2, N))
    k = draw(st.integers(1, m - 1))
    k0 = draw(st.integers(1, m - k))
    return ModelParams(N, m, k, k0)


# -- parameter validation


@pytest.mark.parametrize(
    "args",
    [(5, 6, 1, 1), (10, 4, 5, 1), (10, 4, 2, 5), (10, -1, 0, 0), (10, 4, 2, 1, 0.0), (10, 4, 2, 1, 1.0, -1.0)],
)
def test_invalid_params(args):
    with pytest.raises(DomainError):
        ModelParams(*args)


def test_non_integer_params():
    with pytest.raises(DomainError):
        ModelParams(10.0, 4, 2, 1)


def test_addition_needs_room():
    with pytest.raises(DomainError):
        exact_moments(ModelParams(6, 5, 2, 2), ADDITION)
    with pytest.raises(DomainError):
        exact_moments(ModelParams(6, 3, 2, 1), "sideways")


# -- pure H moments


def test_h2_examples():
    assert h2_moment(20, 10, 2) == 2970
    assert h2_moment(20, 10, 0) == 1
    assert h2_moment(4, 2, 2) == binomial(4, 2)


def test_h4_examples():
    d = binomial(4, 2)
    assert h4_moment(4, 2, 2) == 2 * d * d + 1 == 73
    assert h4_moment(9, 4, 0) == 3


@given(st.integers(1, 14), st.data())
def test_k_equals_m_is_plain_gue(N, data):
    m = data.draw(st.integers(1, N))
    d = binomial(N, m)
    assert h2_moment(N, m, m) == d
    assert h4_moment(N, m, m) == 2 * d * d + 1


def test_h_moment_domain():
    with pytest.raises(DomainError):
        h2_moment(5, 6, 1)


# -- building blocks of the mixed moments


def test_z11_vanishes_with_lambda_factor():
    N, m, k0, k, nu = 6, 5, 1, 3, 3
    mf = m - k0
    assert lambda_coeff(N, mf, mf - k, nu) == 0
    assert z11(N, m, k0, k, nu) == 0.0


def test_z11_domain():
    with pytest.raises(DomainError):
        z11(6, 3, 1, 2, 3)


def test_m00_examples():
    assert m00(ModelParams(20, 10, 2, 1)) == 10
    assert m00(ModelParams(20, 10, 2, 10)) == 1
    assert m00(ModelParams(20, 10, 2, 1), ADDITION) == 10
    mom = exact_moments(ModelParams(20, 10, 2, 1, vo2=2.5))
    assert mom.scaled(0, 0) == pytest.approx(25.0)


def test_factorized_moments():
    p = ModelParams(20, 10, 2, 1)
    a20, a02, a40, a04 = m20_m02_m40_m04(p)
    assert a20 / m00(p) == 2970
    assert a02 / m00(p) == h2_moment(20, 9, 2)
    assert a40 / m00(p) == h4_moment(20, 10, 2)
    assert a04 / m00(p) == h4_moment(20, 9, 2)


def test_k0_zero_marginals_coincide():
    mom = exact_moments(ModelParams(12, 5, 2, 0))
    assert mom.m20 == mom.m02
    assert mom.m40 == mom.m04


def test_scalar_h_limit():
    p = ModelParams(9, 4, 0, 2)
    base = float(m00(p))
    assert m11(p) == pytest.approx(base, rel=1e-14)
    assert m31(p) == pytest.approx(3 * base, rel=1e-14)
    assert m13(p) == pytest.approx(3 * base, rel=1e-14)


def test_addition_with_k0_zero_matches_removal():
    p = ModelParams(10, 4, 2, 0)
    assert exact_moments(p, ADDITION).as_dict() == pytest.approx(exact_moments(p, REMOVAL).as_dict(), rel=1e-14)


# -- cumulants against the printed reference values


TABLE_ROWS = {
    (20, 10, 2, 1): (0.82, -0.54, -0.55, -0.44, -0.45, -0.21),
    (60, 20, 3, 2): (0.79, -0.51, -0.54, -0.40, -0.43, -0.22),
    (24, 8, 2, 2): (0.66, -0.56, -0.67, -0.37, -0.43, -0.22),
}


@pytest.mark.parametrize("row", sorted(TABLE_ROWS))
def test_cumulants_reference_rows(row):
    c = cumulants(ModelParams(*row))
    ref = TABLE_ROWS[row]
    got = (c.xi, c.k40, c.k04, c.k31, c.k13)
    assert got == pytest.approx(ref[:5], abs=0.005)
    assert c.k22 == pytest.approx(ref[5], abs=0.01)


def test_xi_rounds_to_reference():
    assert round(cumulants(ModelParams(20, 10, 2, 1)).xi, 2) == 0.82


@given(
    st.floats(0.1, 10),
    st.floats(0.1, 10),
    st.floats(-0.99, 0.99),
    st.floats(0.1, 5),
)
def test_gaussian_moments_have_zero_cumulants(s1, s2, xi, norm):
    mom = BivariateMoments(
        m00=norm,
        m20=norm * s1**2,
        m02=norm * s2**2,
        m11=norm * xi * s1 * s2,
        m40=norm * 3 * s1**4,
        m04=norm * 3 * s2**4,
        m31=norm * 3 * xi * s1**3 * s2,
        m13=norm * 3 * xi * s1 * s2**3,
        m22=norm * s1**2 * s2**2 * (1 + 2 * xi**2),
    )
    c = cumulants_from_moments(mom)
    assert c.xi == pytest.approx(xi, abs=1e-12)
    for v in (c.k40, c.k04, c.k31, c.k13, c.k22):
        assert abs(v) < 1e-10


def test_cumulants_need_positive_widths():
    mom = BivariateMoments(1, 0, 1, 0, 0, 1, 0, 0, None)
    with pytest.raises(DomainError):
        cumulants_from_moments(mom)


# -- hybrid M22


def test_hybrid_second_term_normalizes_to_xi_squared():
    p = ModelParams(30, 10, 2, 1)
    mom = exact_moments(p)
    t1, t2, t3 = m22_terms(p)
    norm = mom.m00 * (mom.m20 / mom.m00) * (mom.m02 / mom.m00)
    xi = cumulants(mom).xi
    assert t1 / norm == pytest.approx(1.0, rel=1e-14)
    assert t2 / norm == pytest.approx(xi**2, rel=1e-12)
    assert t3 / norm == pytest.approx(asymptotic_t3(10, 2, 1), rel=1e-14)
    assert cumulants(mom).k22 == pytest.approx(asymptotic_t3(10, 2, 1) - xi**2, abs=1e-12)


def test_hybrid_finite_in_k0_zero_limit():
    mom = exact_moments(ModelParams(12, 6, 2, 0))
    assert mom.provenance == "exact-hybrid"
    assert math.isfinite(mom.m22) and mom.m22 > 0


def test_hybrid_unavailable_when_ratio_undefined():
    # m - k0 < k: H vanishes in the final space, so no M22 and no cumulants
    mom = exact_moments(ModelParams(8, 3, 3, 1))
    assert mom.m22 is None and mom.provenance == "exact"
    assert mom.m02 == 0
    with pytest.raises(DomainError):
        cumulants(mom)


# -- properties


@settings(max_examples=60, deadline=None)
@given(model_params(), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_scale_invariance_bit_identical(p, a, b):
    base = cumulants(p)
    scaled = cumulants(ModelParams(p.N, p.m, p.k, p.k0, vh2=a, vo2=b))
    assert scaled == base


@settings(max_examples=80, deadline=None)
@given(model_params())
def test_cauchy_schwarz_and_xi_range(p):
    mom = exact_moments(p)
    assert mom.m00 > 0 and mom.m20 > 0 and mom.m02 > 0
    assert mom.m11**2 <= mom.m20 * mom.m02 * (1 + 1e-12)
    xi = cumulants(mom).xi
    assert 0 < xi < 1 + 1e-12


@settings(max_examples=60, deadline=None)
@given(model_params())
def test_addition_cauchy_schwarz(p):
    assume(p.m + p.k0 <= p.N)
    mom = exact_moments(p, ADDITION)
    assert mom.m00 == binomial(p.N - p.m, p.k0)
    assert mom.m11**2 <= mom.m20 * mom.m02 * (1 + 1e-12)
