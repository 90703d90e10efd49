"""One-dimensional auxiliary envelopes built from first-order models.

Given oracle data ``(x_k, f(x_k), g_k)`` along a trajectory, each anchor
defines the Hölder upper model

    h_k(x) = f_k + g_k (x - x_k) + L / (eta + 1) |x - x_k|**(eta + 1)

and the auxiliary objective ``h`` is the convex envelope of their pointwise
minimum.  Everything here works on a uniform grid: conjugates are discrete
Legendre-Fenchel transforms and the envelope is the lower convex hull of the
sampled minimum.  The ``check_*`` functions certify, by sampled inequalities,
that ``h`` agrees with ``f`` at the anchors, inherits Hölder smoothness and
has the claimed growth on a ball around the minimizer.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .problems import CertReport, ProblemInstance, SmoothnessDescriptor

__all__ = [
    "GridFunction",
    "ModelPoint",
    "EnvelopeResult",
    "make_grid",
    "snap_points",
    "minimizer_point",
    "upper_model",
    "pointwise_min",
    "conjugate",
    "convex_envelope",
    "build_auxiliary",
    "envelope_from_iterates",
    "check_agreement",
    "check_smoothness_dual",
    "check_growth",
    "effective_holder_constant",
    "growth_envelope_precondition",
]

DEFAULT_COUNT = 4001
DEFAULT_SPAN = 1.5
FAR_FIELD = 1e6
_FAR_SAMPLES = 400
_CHUNK = 256


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a 1-D function on a uniform grid; values may be ``+inf``."""

    grid: np.ndarray
    values: np.ndarray
    origin_tag: str = ""

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if grid.size < 3:
            raise ValueError("a grid function needs at least 3 points")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > 1e-6 * steps.mean():
            raise ValueError("grid must be uniformly spaced")
        if np.any(np.isnan(values)) or np.any(values == -np.inf):
            raise ValueError("values must be real or +inf")
        if np.count_nonzero(np.isfinite(values)) < 3:
            raise ValueError("a grid function needs at least 3 finite values")

    @property
    def delta(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))

    def index_of(self, x: float) -> int:
        return int(np.argmin(np.abs(self.grid - x)))

    def at(self, x: float) -> float:
        return float(self.values[self.index_of(x)])


@dataclass(frozen=True)
class ModelPoint:
    x: float
    f: float
    g: float


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    h: GridFunction
    models: tuple
    min_models: GridFunction
    points: tuple
    x_star_point: ModelPoint
    radius: float
    agreement: Optional[CertReport] = None
    smoothness: Optional[CertReport] = None
    growth: Optional[CertReport] = None

    @property
    def anchors(self) -> tuple:
        return tuple(self.points) + (self.x_star_point,)

    def reports(self) -> dict:
        out = {}
        for name in ("agreement", "smoothness", "growth"):
            rep = getattr(self, name)
            out[name] = None if rep is None else rep.to_dict()
        return out

    def to_csv(self, f: Optional[ProblemInstance] = None) -> str:
        """Columns ``x, f, min_models, h`` (``f`` left empty without an instance)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("x", "f", "min_models", "h"))
        for x, m, hv in zip(self.h.grid, self.min_models.values, self.h.values):
            fx = repr(f.value(x)) if f is not None else ""
            writer.writerow((repr(float(x)), fx, repr(float(m)), repr(float(hv))))
        return buf.getvalue()


def make_grid(center: float, half_width: float, count: int = DEFAULT_COUNT) -> np.ndarray:
    """Uniform grid on ``[center - half_width, center + half_width]``.

    With an odd ``count`` the center is itself a gridpoint, exactly.
    """
    return float(center) + float(half_width) * np.linspace(-1.0, 1.0, int(count))


def _grid_of(grid) -> np.ndarray:
    return grid.grid if isinstance(grid, GridFunction) else np.asarray(grid, dtype=float)


def snap_points(f: ProblemInstance, xs: Sequence, grid) -> list:
    """Move each iterate to its nearest gridpoint and re-query the oracle there."""
    grid = _grid_of(grid)
    out = []
    for x in xs:
        xg = float(grid[int(np.argmin(np.abs(grid - float(np.ravel(x)[0]))))])
        out.append(ModelPoint(xg, f.value(xg), float(f.subgrad(xg)[0])))
    return out


def minimizer_point(f: ProblemInstance) -> ModelPoint:
    return ModelPoint(float(f.x_star[0]), f.f_star, 0.0)


def upper_model(pt: ModelPoint, s: SmoothnessDescriptor, grid, tag: str = "") -> GridFunction:
    if math.isinf(s.L):
        raise ValueError("upper models need a finite Hölder constant")
    x = _grid_of(grid)
    d = x - pt.x
    values = pt.f + pt.g * d + s.L / (s.eta + 1.0) * np.abs(d) ** (s.eta + 1.0)
    return GridFunction(x, values, tag or f"model@{pt.x:.6g}")


def pointwise_min(models: Sequence[GridFunction]) -> GridFunction:
    if not models:
        raise ValueError("need at least one model")
    grid = models[0].grid
    for m in models[1:]:
        if m.grid.shape != grid.shape or not np.array_equal(m.grid, grid):
            raise ValueError("models must share one grid")
    return GridFunction(grid, np.min([m.values for m in models], axis=0), "min")


def _conjugate_argmax(F: GridFunction, duals: np.ndarray):
    finite = np.isfinite(F.values)
    if not np.any(finite):
        raise ValueError("conjugate of an everywhere-infinite function")
    xs, fs = F.grid[finite], F.values[finite]
    index = np.flatnonzero(finite)
    values = np.empty(duals.size)
    arg = np.empty(duals.size, dtype=int)
    for start in range(0, duals.size, _CHUNK):
        block = np.outer(duals[start:start + _CHUNK], xs) - fs
        j = np.argmax(block, axis=1)
        arg[start:start + _CHUNK] = index[j]
        values[start:start + _CHUNK] = block[np.arange(j.size), j]
    return values, arg


def conjugate(F: GridFunction, dual_grid) -> GridFunction:
    """Discrete Legendre-Fenchel transform ``max_i g x_i - F(x_i)`` on ``dual_grid``."""
    duals = _grid_of(dual_grid)
    values, _ = _conjugate_argmax(F, duals)
    return GridFunction(duals, values, f"conj({F.origin_tag})")


def _lower_hull(x: np.ndarray, y: np.ndarray) -> list:
    """Indices of the lower convex hull of points sorted by ``x`` (monotone chain)."""
    hull: list = []
    for i in range(x.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross > 0:
                break
            hull.pop()
        hull.append(i)
    return hull


def convex_envelope(F: GridFunction) -> GridFunction:
    """Lower convex hull of ``(x_i, F(x_i))`` interpolated back onto the grid."""
    x, y = F.grid, F.values
    if x.size < 3:
        raise ValueError("convex envelope needs at least 3 points")
    if not np.all(np.isfinite(y)):
        raise ValueError("convex envelope needs finite values")
    hull = _lower_hull(x, y)
    values = np.interp(x, x[hull], y[hull])
    values[hull] = y[hull]
    return GridFunction(x, values, f"env({F.origin_tag})")


def _interp_near(x: np.ndarray, hx: np.ndarray, hy: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation evaluated from the nearer segment end.

    Hull segments can reach far outside the grid; extrapolating from the far
    end would cancel large numbers.
    """
    a = np.clip(np.searchsorted(hx, x, side="right") - 1, 0, hx.size - 2)
    b = a + 1
    slope = (hy[b] - hy[a]) / (hx[b] - hx[a])
    from_a = hy[a] + slope * (x - hx[a])
    from_b = hy[b] + slope * (x - hx[b])
    return np.where(np.abs(x - hx[a]) <= np.abs(x - hx[b]), from_a, from_b)


def _model_min(anchors, s: SmoothnessDescriptor, x: np.ndarray) -> np.ndarray:
    d = x[None, :] - np.array([pt.x for pt in anchors])[:, None]
    f = np.array([pt.f for pt in anchors])[:, None]
    g = np.array([pt.g for pt in anchors])[:, None]
    return np.min(f + g * d + s.L / (s.eta + 1.0) * np.abs(d) ** (s.eta + 1.0), axis=0)


def _envelope_with_far_field(mins: GridFunction, anchors, s: SmoothnessDescriptor) -> GridFunction:
    """Convex envelope of the model minimum over the whole line, restricted to the grid.

    The models are known in closed form, so the minimum is also sampled on a
    geometric far field reaching ``FAR_FIELD`` half-widths beyond each grid
    end; without it, hull chords to the truncated grid ends would steepen the
    envelope near the boundary.
    """
    x = mins.grid
    half = 0.5 * (x[-1] - x[0])
    offsets = half * (np.geomspace(1.0, FAR_FIELD, _FAR_SAMPLES)[1:] - 1.0)
    left, right = (x[0] - offsets)[::-1], x[-1] + offsets
    xs = np.concatenate([left, x, right])
    ys = np.concatenate([_model_min(anchors, s, left), mins.values, _model_min(anchors, s, right)])
    hull = _lower_hull(xs, ys)
    values = _interp_near(x, xs[hull], ys[hull])
    on_grid = [i - left.size for i in hull if left.size <= i < left.size + x.size]
    values[on_grid] = mins.values[on_grid]
    return GridFunction(x, values, "env(min)")


def effective_holder_constant(s: SmoothnessDescriptor) -> float:
    """Hölder constant the envelope is certified against: ``2**(1 - eta) L``.

    A model ``|x - x_k|**(eta+1) L/(eta+1)`` has derivative differences up to
    ``2**(1-eta) L |x - x'|**eta`` (attained at points symmetric about
    ``x_k``), so that is the constant the envelope inherits; it equals ``L``
    for ``eta = 1``.
    """
    return 2.0 ** (1.0 - s.eta) * s.L


def growth_envelope_precondition(s: SmoothnessDescriptor, D: float, delta0: float) -> bool:
    """``L D**(eta+1) / (eta+1) >= f(x0) - f_star``."""
    return s.L * D ** (s.eta + 1.0) / (s.eta + 1.0) >= delta0


# ---------------------------------------------------------------------------
# construction


def build_auxiliary(points: Sequence[ModelPoint], x_star_point: ModelPoint,
                    s: SmoothnessDescriptor, grid, *, radius: Optional[float] = None,
                    growth_target: Optional[tuple] = None) -> EnvelopeResult:
    """Models, their pointwise minimum and its convex envelope, with reports.

    The envelope is taken over the whole real line (see
    :func:`_envelope_with_far_field`) and then restricted to the grid.
    ``growth_target`` is ``(alpha_target, p)``; without it the growth report is
    left empty.  ``radius`` is the growth-ball radius ``D`` and defaults to
    the largest anchor distance from the minimizer.
    """
    if x_star_point.g != 0.0:
        raise ValueError("the minimizer anchor must carry a zero subgradient")
    x = _grid_of(grid)
    points = tuple(points)
    models = tuple(upper_model(pt, s, x, f"h_{k}") for k, pt in enumerate(points))
    models += (upper_model(x_star_point, s, x, "h_*"),)
    mins = pointwise_min(models)
    h = _envelope_with_far_field(mins, points + (x_star_point,), s)
    if radius is None:
        dists = [abs(pt.x - x_star_point.x) for pt in points]
        radius = max(dists) if dists else (x[-1] - x[0]) / (2.0 * DEFAULT_SPAN)
    res = EnvelopeResult(h, models, mins, points, x_star_point, float(radius))
    res = replace(res, agreement=check_agreement(res), smoothness=check_smoothness_dual(res, s))
    if growth_target is not None:
        alpha_target, p = growth_target
        res = replace(res, growth=check_growth(res, alpha_target, p, res.radius))
    return res


def envelope_from_iterates(f: ProblemInstance, xs: Sequence, s: SmoothnessDescriptor,
                           D: Optional[float] = None, count: int = DEFAULT_COUNT,
                           span: float = DEFAULT_SPAN,
                           growth_target: Optional[tuple] = None) -> EnvelopeResult:
    """Snap 1-D iterates onto a grid around ``x_star`` and build the envelope.

    The grid spans ``[x_star - span D, x_star + span D]`` with ``D`` defaulting
    to the largest iterate distance from ``x_star``.
    """
    if f.dimension != 1:
        raise ValueError("envelopes are built for 1-D instances only")
    x_star = float(f.x_star[0])
    if D is None:
        D = max(abs(float(np.ravel(x)[0]) - x_star) for x in xs)
    grid = make_grid(x_star, span * D, count)
    points = snap_points(f, xs, grid)
    return build_auxiliary(points, minimizer_point(f), s, grid, radius=D,
                           growth_target=growth_target)


# ---------------------------------------------------------------------------
# certification


def check_agreement(res: EnvelopeResult, f: Optional[ProblemInstance] = None,
                    points: Optional[Sequence[ModelPoint]] = None,
                    tol: Optional[float] = None) -> CertReport:
    """``h(x_i) = f(x_i)`` and ``h >= h(x_i) + g_i (x - x_i)`` at every anchor.

    Anchors are ``points`` (default: those the envelope was built from) plus
    the minimizer.  The default tolerance is ``2 delta max|g|``.
    """
    anchors = (tuple(res.points) if points is None else tuple(points)) + (res.x_star_point,)
    h = res.h
    if tol is None:
        tol = 2.0 * h.delta * max(abs(pt.g) for pt in anchors) + 1e-12
    violations = []
    for pt in anchors:
        i = h.index_of(pt.x)
        target = f.value(pt.x) if f is not None else pt.f
        mismatch = abs(h.values[i] - target)
        support = np.max(h.values[i] + pt.g * (h.grid - h.grid[i]) - h.values)
        violations.append(max(mismatch, support))
    return CertReport.from_violations(violations, lambda i: anchors[i].x, tol)


def _ball_cells(res: EnvelopeResult):
    h = res.h
    slopes = np.diff(h.values) / np.diff(h.grid)
    mids = 0.5 * (h.grid[1:] + h.grid[:-1])
    c = res.x_star_point.x
    r = res.radius * (1.0 + 1e-12)
    inside = (np.abs(h.grid[:-1] - c) <= r) & (np.abs(h.grid[1:] - c) <= r)
    return slopes[inside], mids[inside]


def check_smoothness_dual(res: EnvelopeResult, s: SmoothnessDescriptor,
                          tol: Optional[float] = None, pair_count: int = 20_000,
                          seed: int = 0) -> CertReport:
    """Sampled evidence that ``h`` is Hölder smooth on the growth ball.

    Primal: finite-difference slopes of ``h`` on cells inside ``B(x_star, D)``
    satisfy ``|s - s'| <= L' |m - m'|**eta + tol`` where ``L'`` is
    :func:`effective_holder_constant`.  Dual, ``eta > 0``: the discrete
    conjugate satisfies the uniform-convexity lower bound with modulus
    ``eta / ((eta+1) L'**(1/eta))`` between slopes attained in the ball.
    Dual, ``eta = 0``: the slopes ``g`` at which the conjugate's maximizer lies
    strictly inside the ball (outside them the supremum runs to the boundary,
    standing in for ``+inf``) span an interval no wider than ``L'``.
    """
    L_eff = effective_holder_constant(s)
    eta = s.eta
    h = res.h
    slopes, mids = _ball_cells(res)
    if slopes.size < 2:
        return CertReport(True, 0.0, None, 0, 0.0 if tol is None else float(tol))

    duals = np.linspace(slopes.min() - 1.0, slopes.max() + 1.0, h.grid.size)
    dual_vals, arg = _conjugate_argmax(h, duals)
    if tol is None:
        if eta > 0:
            tol = L_eff * h.delta ** eta
        else:
            tol = 2.0 * (duals[1] - duals[0]) + 1e-9 * L_eff

    rng = np.random.default_rng(seed)
    n = slopes.size
    i = np.concatenate([np.arange(n - 1), rng.integers(0, n, pair_count), [np.argmin(slopes)]])
    j = np.concatenate([np.arange(1, n), rng.integers(0, n, pair_count), [np.argmax(slopes)]])
    primal = np.abs(slopes[i] - slopes[j]) - L_eff * np.abs(mids[i] - mids[j]) ** eta
    violations = [primal]
    witnesses = [lambda t: ("primal", float(mids[i[t]]), float(mids[j[t]]))]

    c, r = res.x_star_point.x, res.radius
    if eta > 0:
        attained = np.flatnonzero((duals >= slopes.min()) & (duals <= slopes.max())
                                  & (np.abs(h.grid[arg] - c) <= r * (1.0 + 1e-12)))
        if attained.size >= 2:
            a = attained[rng.integers(0, attained.size, pair_count)]
            b = attained[rng.integers(0, attained.size, pair_count)]
            a = np.concatenate([attained[:-1], a])
            b = np.concatenate([attained[1:], b])
            modulus = eta / ((eta + 1.0) * L_eff ** (1.0 / eta))
            step = duals[b] - duals[a]
            lower = dual_vals[a] + h.grid[arg[a]] * step + modulus * np.abs(step) ** ((eta + 1.0) / eta)
            violations.append(lower - dual_vals[b])
            witnesses.append(lambda t, a=a, b=b: ("dual", float(duals[a[t]]), float(duals[b[t]])))
    else:
        interior = np.flatnonzero(np.abs(h.grid[arg] - c) < r * (1.0 - 1e-12))
        if interior.size:
            lo, hi = duals[interior.min()], duals[interior.max()]
            violations.append(np.array([(hi - lo) - L_eff]))
            witnesses.append(lambda t, lo=lo, hi=hi: ("dual-domain", float(lo), float(hi)))

    best = None
    checked = 0
    for v, w in zip(violations, witnesses):
        checked += v.size
        rep = CertReport.from_violations(v, w, tol)
        if best is None or rep.max_violation > best.max_violation:
            best = rep
    return replace(best, samples_checked=checked)


def check_growth(res: EnvelopeResult, alpha_target: float, p: float, D: float,
                 tol: Optional[float] = None) -> CertReport:
    """``h(x) >= h(x_star) + alpha_target |x - x_star|**p - tol`` on ``B(x_star, D)``."""
    h = res.h
    c = res.x_star_point.x
    slack = 1e-9 * max(1.0, abs(D))
    if h.grid[0] > c - D + slack or h.grid[-1] < c + D - slack:
        raise ValueError("the grid does not cover the growth ball")
    if tol is None:
        tol = 1e-9 * max(1.0, float(np.max(np.abs(h.values))))
    inside = np.abs(h.grid - c) <= D * (1.0 + 1e-12)
    xs = h.grid[inside]
    bound = h.at(c) + alpha_target * np.abs(xs - c) ** p
    return CertReport.from_violations(bound - h.values[inside], lambda i: float(xs[i]), tol)
