import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ratelift.envelope import (
    GridFunction,
    ModelPoint,
    build_auxiliary,
    check_agreement,
    check_growth,
    check_smoothness_dual,
    conjugate,
    convex_envelope,
    effective_holder_constant,
    envelope_from_iterates,
    growth_envelope_precondition,
    make_grid,
    minimizer_point,
    pointwise_min,
    snap_points,
    upper_model,
)
from ratelift.harness import EnvelopeScenario, certify_scenario
from ratelift.problems import SmoothnessDescriptor, make_power_norm
from ratelift.solvers import SolverConfig, polyak_subgradient, proximal_point

QUAD = SmoothnessDescriptor(2.0, 1.0)
KINK = SmoothnessDescriptor(2.0, 0.0)
STAR = ModelPoint(0.0, 0.0, 0.0)


def gf(x, v):
    return GridFunction(np.asarray(x, float), np.asarray(v, float))


# --- grid functions ----------------------------------------------------------------


def test_grid_function_validation():
    with pytest.raises(ValueError):
        gf([0, 1], [0, 1])
    with pytest.raises(ValueError):
        gf([0, 2, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        gf([0, 1, 3], [0, 1, 2])
    with pytest.raises(ValueError):
        gf([0, 1, 2], [0, np.inf, np.inf])
    F = gf([0, 1, 2, 3], [0, np.inf, 1, 2])
    assert F.delta == 1.0 and F.at(2.0) == 1.0


def test_grid_center_is_exact():
    g = make_grid(0.3, 1.5, 4001)
    assert g[2000] == 0.3 and g.size == 4001


# --- models ------------------------------------------------------------------------------


def test_upper_models():
    x = make_grid(0.0, 1.0, 201)
    np.testing.assert_allclose(upper_model(STAR, QUAD, x).values, x ** 2, rtol=0, atol=1e-15)
    m = upper_model(ModelPoint(1.0, 1.0, 1.0), KINK, x)
    np.testing.assert_allclose(m.values, 1 + (x - 1) + 2 * np.abs(x - 1), atol=1e-15)
    assert m.at(1.0) == 1.0


def test_pointwise_min():
    x = make_grid(1.0, 2.0, 401)
    a, b = gf(x, x ** 2), gf(x, (x - 2) ** 2)
    m = pointwise_min([a, b])
    assert m.at(1.0) == 1.0
    np.testing.assert_array_equal(m.values, np.where(x <= 1.0, x ** 2, (x - 2) ** 2))
    np.testing.assert_array_equal(pointwise_min([a]).values, a.values)
    np.testing.assert_array_equal(pointwise_min([a, gf(x, x ** 2 + 1)]).values, a.values)


# --- conjugates -------------------------------------------------------------------------


def test_conjugate_examples():
    x = make_grid(0.0, 3.0, 6001)
    half = conjugate(gf(x, 0.5 * x ** 2), [0.5, 1.0, 1.5])
    assert half.values[1] == pytest.approx(0.5, abs=1e-6)
    y = make_grid(0.0, 5.0, 1001)
    c = conjugate(gf(y, np.abs(y)), [0.5, 1.25, 2.0])
    assert c.values[0] == pytest.approx(0.0, abs=1e-12)
    assert c.values[2] == pytest.approx(5.0, abs=1e-12)
    aff = conjugate(gf(y, 1.5 * y - 0.7), [1.0, 1.5, 2.0])
    assert aff.values[1] == pytest.approx(0.7, abs=1e-12)
    assert aff.values[0] > 2.0 and aff.values[2] > 2.0


def test_conjugate_ignores_infinite_values():
    x = np.linspace(-1, 1, 5)
    c = conjugate(gf(x, [np.inf, 1.0, 0.0, 1.0, np.inf]), [2.0, 3.0, 4.0])
    np.testing.assert_array_equal(c.values, [0.0, 0.5, 1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_conjugate_order_reversal_and_min_max(seed):
    rng = np.random.default_rng(seed)
    x = np.linspace(-2, 2, 301)
    H = gf(x, rng.normal(size=x.size))
    F = gf(x, H.values + rng.uniform(0, 1, size=x.size))
    duals = np.linspace(-4, 4, 257)
    cH, cF = conjugate(H, duals).values, conjugate(F, duals).values
    assert np.all(cH >= cF)
    np.testing.assert_array_equal(conjugate(pointwise_min([F, H]), duals).values, np.maximum(cF, cH))


# --- envelopes -------------------------------------------------------------------------


@pytest.mark.parametrize("fn", [lambda x: x ** 2, np.abs, np.exp, lambda x: np.maximum(x, 2 * x - 1)])
def test_envelope_of_convex_is_identity(fn):
    x = np.linspace(-2, 2, 1001)
    np.testing.assert_allclose(convex_envelope(gf(x, fn(x))).values, fn(x), rtol=0, atol=1e-12)


def test_envelope_bridges_two_wells():
    x = make_grid(1.0, 2.0, 401)
    F = gf(x, np.minimum(x ** 2, (x - 2) ** 2))
    env = convex_envelope(F)
    assert env.at(1.0) < 1.0
    assert env.at(1.0) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_envelope_below_and_convex(seed):
    rng = np.random.default_rng(seed)
    x = np.linspace(-1, 1, 201)
    F = gf(x, rng.normal(size=x.size).cumsum())
    env = convex_envelope(F)
    assert np.all(env.values <= F.values + 1e-12)
    assert np.all(np.diff(env.values, 2) >= -1e-10)


# --- auxiliary function ---------------------------------------------------------------


def test_auxiliary_single_minimizer_model():
    x = make_grid(0.0, 1.5, 301)
    res = build_auxiliary([], STAR, QUAD, x, radius=1.0)
    np.testing.assert_allclose(res.h.values, x ** 2, atol=1e-12)
    assert res.agreement.passed and res.smoothness.passed


def test_auxiliary_symmetric_kinks():
    f = make_power_norm(1.0, 1.0)
    x = make_grid(0.0, 1.5, 3001)
    res = build_auxiliary(snap_points(f, [1.0, -1.0], x), minimizer_point(f), KINK, x, radius=1.0)
    inside = np.abs(x) <= 1.0
    np.testing.assert_allclose(res.h.values[inside], np.abs(x[inside]), atol=1e-12)
    for m in res.models:
        assert np.all(res.h.values <= m.values + 1e-12)
    assert np.all(np.diff(res.h.values, 2) >= -1e-10)
    assert res.agreement.passed


def test_auxiliary_without_points_is_minimizer_model():
    x = make_grid(0.0, 1.0, 101)
    res = build_auxiliary([], STAR, KINK, x)
    np.testing.assert_allclose(res.h.values, 2 * np.abs(x), atol=1e-12)
    assert check_agreement(res).passed


def test_minimizer_anchor_must_be_flat():
    with pytest.raises(ValueError):
        build_auxiliary([], ModelPoint(0.0, 0.0, 1.0), KINK, make_grid(0.0, 1.0, 11))


def abs_polyak_envelope():
    f = make_power_norm(1.0, 1.0)
    run = proximal_point(f, [1.0], SolverConfig(epsilon=1e-300, max_iter=4, rho=0.1))
    return f, envelope_from_iterates(f, [r.x for r in run.trace], f.smoothness, D=1.0)


def test_agreement_passes_and_catches_perturbation():
    f, res = abs_polyak_envelope()
    rep = check_agreement(res, f)
    assert rep.passed and rep.tolerance == pytest.approx(2 * res.h.delta * 1.0 + 1e-12)
    pts = list(res.points)
    pts[2] = ModelPoint(pts[2].x, pts[2].f + 1.0, pts[2].g)
    bad = check_agreement(res, points=pts)
    assert not bad.passed and bad.witness == pts[2].x


def test_agreement_on_polyak_trace():
    f = make_power_norm(1.0, 1.0)
    run = polyak_subgradient(f, [0.8], SolverConfig(epsilon=1e-6))
    res = envelope_from_iterates(f, [r.x for r in run.trace], f.smoothness)
    assert res.agreement.passed


def test_smoothness_checks():
    f = make_power_norm(1.0, 2.0)
    xs = [[1.0], [0.5], [-0.25]]
    res = envelope_from_iterates(f, xs, QUAD, D=1.0)
    assert check_smoothness_dual(res, QUAD).passed
    g = make_power_norm(1.0, 1.0)
    kink = envelope_from_iterates(g, [[1.0], [-0.6]], KINK, D=1.0)
    assert check_smoothness_dual(kink, KINK).passed
    # the envelope's slopes span [-1, 1]; a constant whose effective bound is
    # half that spread must be refuted
    bad = check_smoothness_dual(kink, SmoothnessDescriptor(0.5, 0.0))
    assert not bad.passed and bad.witness is not None


def test_envelope_is_taken_over_the_whole_line():
    # far to the right the model at -1 (slope 1) is the smallest, so the
    # envelope cannot climb faster than slope 1 anywhere
    g = make_power_norm(1.0, 1.0)
    x = make_grid(0.0, 1.5, 3001)
    res = build_auxiliary(snap_points(g, [1.0, -1.0], x), minimizer_point(g), KINK, x, radius=1.0)
    assert res.h.at(1.5) == pytest.approx(1.5, abs=1e-5)
    # finite far field: slopes exceed 1 by O(1 / FAR_FIELD)
    assert np.max(np.abs(np.diff(res.h.values) / np.diff(x))) <= 1.0 + 1e-5


def test_smoothness_single_model():
    x = make_grid(0.0, 1.5, 1501)
    res = build_auxiliary([], STAR, SmoothnessDescriptor(3.0, 0.5), x, radius=1.0)
    assert check_smoothness_dual(res, SmoothnessDescriptor(3.0, 0.5)).passed


def test_effective_constant():
    assert effective_holder_constant(SmoothnessDescriptor(3.0, 1.0)) == 3.0
    assert effective_holder_constant(SmoothnessDescriptor(3.0, 0.0)) == 6.0


def test_growth_checks():
    f, res = abs_polyak_envelope()
    eps = 0.9 * min(f.value(p.x) for p in res.points)
    assert check_growth(res, eps / 1.0, 1.0, 1.0).passed
    assert check_growth(res, 0.0, 1.0, 1.0).passed
    with pytest.raises(ValueError):
        check_growth(res, eps, 1.0, 5.0)


def test_doubled_growth_target_refuted():
    sc = EnvelopeScenario({"kind": "power_norm", "alpha": 1.0, "p": 1.0}, "polyak_subgradient",
                          1.0, 1, p=1.0, epsilon=0.9)
    assert certify_scenario(sc).passed
    doubled = certify_scenario(EnvelopeScenario(**{**sc.__dict__, "alpha_scale": 2.0}))
    assert not doubled.envelope.growth.passed


def test_growth_envelope_precondition():
    assert growth_envelope_precondition(SmoothnessDescriptor(2.0, 0.0), 1.0, 1.0)
    assert not growth_envelope_precondition(SmoothnessDescriptor(1.0, 1.0), 1.0, 1.0)


def test_envelope_csv_columns():
    f, res = abs_polyak_envelope()
    lines = res.to_csv(f).splitlines()
    assert lines[0] == "x,f,min_models,h"
    assert len(lines) == res.h.grid.size + 1


@settings(max_examples=20, deadline=None)
@given(x0=st.floats(0.2, 3.0), T=st.integers(1, 6), alpha=st.floats(0.5, 2.0))
def test_agreement_on_generated_traces(x0, T, alpha):
    f = make_power_norm(alpha, 1.0)
    run = proximal_point(f, [x0], SolverConfig(epsilon=1e-300, max_iter=T - 1, rho=0.05 / alpha ** 2))
    res = envelope_from_iterates(f, [r.x for r in run.trace], f.smoothness, count=1001)
    assert res.agreement.passed
