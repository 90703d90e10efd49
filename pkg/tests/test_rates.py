import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ratelift import rates as R
from ratelift.rates import RateQuery


def test_prox_sharp_values():
    assert R.k_prox_sharp(RateQuery(delta0=10, epsilon=1, rho=1, alpha=1)).iterations == 9
    assert R.k_prox_sharp(RateQuery(delta0=1, epsilon=1)).iterations == 0
    assert R.k_prox_sharp(RateQuery(delta0=5, epsilon=1, rho=2, alpha=0.5)).iterations == 8


def test_subgrad_quadratic_values():
    assert R.k_subgrad_quadratic(RateQuery(L=1, alpha=1, epsilon=0.01)).iterations == pytest.approx(800, rel=1e-15)
    assert R.k_subgrad_quadratic(RateQuery(L=1, alpha=1, epsilon=8)).iterations == 1
    D, eps = 1.7, 0.03
    direct = R.k_subgrad_quadratic(RateQuery(L=2, alpha=eps / D ** 2, epsilon=eps))
    assert direct.iterations == pytest.approx(8 * 4 * D ** 2 / eps ** 2, rel=1e-12)


def test_subgrad_sharp_values():
    assert R.k_subgrad_sharp(RateQuery(L=1, alpha=1, delta0=8, epsilon=1)).iterations == 12
    assert R.k_subgrad_sharp(RateQuery(delta0=1, epsilon=1)).iterations == 0
    assert R.k_subgrad_sharp(RateQuery(L=2, alpha=1, delta0=2, epsilon=1)).iterations == 16


def test_table_cells():
    with pytest.raises(R.UnsupportedCellError):
        R.k_table("bundle", "sharp", RateQuery())
    b = R.k_table("prox", "general", RateQuery(epsilon=0.1))
    assert b.iterations == pytest.approx(10, rel=1e-15) and b.asymptotic_only
    b = R.k_table("universal", "quadratic", RateQuery(alpha=4, delta0=math.e, epsilon=1))
    assert b.iterations == pytest.approx(0.5, rel=1e-15) and b.asymptotic_only
    assert not R.k_table("subgrad", "sharp", RateQuery(delta0=4, epsilon=1)).asymptotic_only


def test_unknown_cell_is_a_usage_error():
    with pytest.raises(ValueError):
        R.table_rate("newton", "sharp")


@pytest.mark.parametrize("method,regime", [("bundle", "sharp"), ("gd", "sharp"), ("universal", "sharp")])
def test_empty_cells(method, regime):
    with pytest.raises(R.UnsupportedCellError):
        R.table_rate(method, regime)


def test_lift_general_examples():
    L, D, eps, d0 = 1.3, 2.2, 0.05, 3.0
    q = RateQuery(L=L, D=D, epsilon=eps, delta0=d0)
    assert R.lift_general(R.k_subgrad_quadratic, q).iterations == pytest.approx(8 * L ** 2 * D ** 2 / eps ** 2, rel=1e-12)
    assert R.lift_general(R.k_subgrad_sharp, q).iterations == pytest.approx(
        4 * L ** 2 * D ** 2 / eps ** 2 * math.log2(d0 / eps), rel=1e-12)
    constant = R.table_rate("subgrad", "general")
    assert R.lift_general(constant, q) == constant(q)


def test_lift_growth_examples():
    L, a, eps, d0 = 1.3, 0.7, 0.05, 3.0
    q = RateQuery(L=L, alpha=a, epsilon=eps, delta0=d0, q=2.0)
    assert R.lift_growth(R.k_subgrad_sharp, q).iterations == pytest.approx(
        4 * L ** 2 / (a * eps) * math.log2(d0 / eps), rel=1e-12)
    with pytest.raises(ValueError):
        R.lift_growth(R.k_subgrad_sharp, RateQuery(q=None))
    with pytest.raises(ValueError):
        RateQuery(p=2.0, q=2.0)


@given(eps=st.floats(1e-6, 10), p=st.floats(1, 3), gap=st.floats(0.01, 3))
def test_weakened_modulus_identity_at_alpha_equal_eps(eps, p, gap):
    # alpha = eps makes alpha**(p/q) eps**(1-p/q) collapse to eps
    assert R._weakened_alpha(eps, eps, p, p + gap) == pytest.approx(eps, rel=1e-12)


EXPLICIT = [R.k_prox_sharp, R.k_subgrad_quadratic, R.k_subgrad_sharp]
CATALOGUE = [R.table_rate(m, r) for m in R.METHODS for r in R.REGIMES
             if (m, r) not in {("bundle", "sharp"), ("gd", "sharp"), ("universal", "sharp")}]


def grid_queries():
    for L, D, eps, d0 in itertools.product((0.5, 2.0), (0.3, 1.0, 4.0), (1e-4, 1e-2, 0.5), (1.0, 20.0)):
        yield RateQuery(L=L, D=D, epsilon=eps, delta0=d0, rho=0.7)


@pytest.mark.parametrize("K", CATALOGUE)
def test_lift_general_is_substitution(K):
    p = getattr(K, "exponent", 1.0)
    for q in grid_queries():
        expected = K(RateQuery(**{**q.__dict__, "alpha": q.epsilon / q.D ** p, "p": p}))
        assert R.lift_general(K, q).iterations == pytest.approx(expected.iterations, rel=1e-12)


@pytest.mark.parametrize("K", CATALOGUE)
def test_growth_lift_reduces_to_general_lift(K):
    p = getattr(K, "exponent", 1.0)
    for q in grid_queries():
        for qexp in (p + 0.5, 2 * p + 1):
            weak = RateQuery(**{**q.__dict__, "alpha": q.epsilon / q.D ** qexp, "q": qexp})
            assert R.lift_growth(K, weak).iterations == pytest.approx(
                R.lift_general(K, q).iterations, rel=1e-12)


@pytest.mark.parametrize("K", CATALOGUE)
def test_monotone_in_alpha_and_eps(K):
    for base in grid_queries():
        prev = None
        for a in (0.1, 0.5, 1.0, 3.0):
            v = K(RateQuery(**{**base.__dict__, "alpha": a})).iterations
            assert prev is None or v <= prev * (1 + 1e-12)
            prev = v
        prev = None
        for eps in (1e-5, 1e-3, 1e-1, 0.9):
            v = K(RateQuery(**{**base.__dict__, "epsilon": eps})).iterations
            assert prev is None or v <= prev * (1 + 1e-12)
            prev = v


def test_restart_count():
    assert R.restart_count(8, 1) == 3
    assert R.restart_count(1, 1) == 0
    assert R.restart_count(9, 1) == 4


def test_restart_sum_general_prox_geometric():
    for D, rho, eps, d0 in itertools.product((0.5, 2.0), (0.3, 1.0), (1e-3, 0.1), (1.0, 50.0)):
        q = RateQuery(D=D, rho=rho, epsilon=eps, delta0=d0)
        total = R.restart_sum_general(R.k_prox_sharp, q).iterations
        brute = sum(D ** 2 / (rho * 2.0 ** n * eps) for n in range(R.restart_count(d0, eps)))
        assert total == pytest.approx(brute, rel=1e-14)
        assert total <= 2 * D ** 2 / (rho * eps)


def test_restart_single_epoch():
    q = RateQuery(delta0=1.5, epsilon=1.0, D=2.0, alpha=3.0, q=2.0)
    single = R.k_prox_sharp(RateQuery(delta0=2.0, epsilon=1.0, alpha=1.0 / 2.0))
    assert R.restart_sum_general(R.k_prox_sharp, q).iterations == single.iterations
    single = R.k_prox_sharp(RateQuery(delta0=2.0, epsilon=1.0, alpha=3.0 ** 0.5))
    assert R.restart_sum_growth(R.k_prox_sharp, q).iterations == single.iterations


def test_restart_sum_growth_prox_closed_form():
    q = RateQuery(delta0=37.0, epsilon=0.01, alpha=2.0, rho=0.5, q=2.0)
    N = R.restart_count(37.0, 0.01)
    assert R.restart_sum_growth(R.k_prox_sharp, q).iterations == pytest.approx(N / (0.5 * 2.0), rel=1e-12)


def test_restart_sum_growth_at_alpha_equal_eps():
    eps = 0.01
    q = RateQuery(delta0=5.0, epsilon=eps, alpha=eps, rho=1.0, q=2.0)
    brute = 0.0
    for n in range(R.restart_count(5.0, eps)):
        e = 2.0 ** n * eps
        a_sub = eps ** 0.5 * e ** 0.5
        brute += (2 * e - e) / a_sub ** 2
    assert R.restart_sum_growth(R.k_prox_sharp, q).iterations == pytest.approx(brute, rel=1e-14)


def test_restart_sum_with_asymptotic_cell():
    # a 1/sqrt(alpha)-type cell restarted with alpha_n = eps_n / D**2 sums like sqrt(L D**2/eps)
    K = R.table_rate("universal", "quadratic")
    q = RateQuery(delta0=10.0, epsilon=1e-4, D=1.0)
    total = R.restart_sum_general(K, q)
    assert total.asymptotic_only
    assert 0 < total.iterations <= 10 * math.sqrt(1.0 / 1e-4)


@pytest.mark.parametrize("K", EXPLICIT)
def test_restart_sum_dominated_by_worst_epoch(K):
    for q in grid_queries():
        N = R.restart_count(q.delta0, q.epsilon)
        if N == 0:
            continue
        p = K.exponent
        worst = K(RateQuery(**{**q.__dict__, "delta0": 2 * q.epsilon * 2 ** (N - 1),
                               "alpha": q.epsilon / q.D ** p, "p": p})).iterations
        assert R.restart_sum_general(K, q).iterations <= N * worst * (1 + 1e-12)


def test_lower_bounds():
    assert R.lower_bound_nonsmooth(1, 1, 0.25).iterations == 1
    assert R.lower_bound_nonsmooth(2, 1, 0.5).iterations == 1
    assert R.lower_bound_nonsmooth(1, 1, 1e300).iterations == pytest.approx(0, abs=1e-300)
    assert R.lower_bound_smooth(32 / 3, 1, 1).iterations == pytest.approx(1, rel=1e-15)
    assert R.lower_bound_smooth(1, 0, 1).iterations == 0
    assert R.lower_bound_smooth(3, 4, 0.5).iterations == pytest.approx(3, rel=1e-15)


def test_rate_bound_serialization():
    assert R.RateBound(3.5, True).to_dict() == {"iterations": 3.5, "asymptotic_only": True}


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_lower_bound_nonsmooth_scales(M, D):
    lb = R.lower_bound_nonsmooth(M, D, 0.1).iterations
    assert np.isclose(lb, M * M * D * D / 0.16, rtol=1e-12)
