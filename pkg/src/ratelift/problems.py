"""Objective oracles with known optimum, smoothness and growth constants.

A :class:`ProblemInstance` bundles a value oracle, a minimum-norm subgradient
oracle and (when available) a proximal oracle for a convex function whose
minimizer and optimal value are known in advance.  Two families are provided:

* power norms ``f(x) = alpha * ||x - x_star||**p`` (``make_power_norm``)
* maxima of affine pieces ``f(x) = max_i <a_i, x> + b_i`` (``make_piecewise_max``)

plus sampling-based verifiers for the Hölder smoothness and Hölder growth
constants attached to an instance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

__all__ = [
    "SmoothnessDescriptor",
    "GrowthDescriptor",
    "CertReport",
    "ProblemInstance",
    "UnsupportedInstanceError",
    "as_point",
    "make_power_norm",
    "make_piecewise_max",
    "problem_from_spec",
    "verify_smoothness",
    "verify_growth",
]

_BISECTION_STEPS = 200
_HOLDER_SAMPLES = 10_000
_HOLDER_INFLATION = 1.05


class UnsupportedInstanceError(ValueError):
    """Raised when an instance cannot provide the requested oracle."""


@dataclass(frozen=True)
class SmoothnessDescriptor:
    """Hölder smoothness ``||g - g'|| <= L ||x - x'||**eta``.

    ``(inf, 0)`` is the "no structure assumed" sentinel.
    """

    L: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if math.isinf(self.L) and self.eta != 0:
            raise ValueError("L = inf is only allowed together with eta = 0")

    @property
    def unstructured(self) -> bool:
        return math.isinf(self.L)


@dataclass(frozen=True)
class GrowthDescriptor:
    """Hölder growth ``f(x) >= f(x_star) + alpha ||x - x_star||**p``."""

    alpha: float
    p: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")


@dataclass(frozen=True)
class CertReport:
    """Outcome of a sampled inequality check.

    ``max_violation`` is the largest amount by which the checked inequality
    failed (0 when it held everywhere); ``passed`` is true exactly when that
    amount is within ``tolerance``.
    """

    passed: bool
    max_violation: float
    witness: Any
    samples_checked: int
    tolerance: float

    @classmethod
    def from_violations(cls, violations, witnesses, tolerance, samples=None):
        violations = np.asarray(violations, dtype=float)
        if violations.size == 0:
            return cls(True, 0.0, None, 0, float(tolerance))
        i = int(np.argmax(violations))
        worst = max(float(violations[i]), 0.0)
        return cls(
            passed=bool(worst <= tolerance),
            max_violation=worst,
            witness=witnesses(i),
            samples_checked=int(violations.size if samples is None else samples),
            tolerance=float(tolerance),
        )

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "max_violation": float(self.max_violation),
            "witness": _jsonable(self.witness),
            "samples_checked": int(self.samples_checked),
            "tolerance": float(self.tolerance),
        }


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, list)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def as_point(x, dimension: Optional[int] = None) -> np.ndarray:
    """Coerce ``x`` to a 1-D float array, checking its length if asked."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"points must be vectors, got shape {arr.shape}")
    if dimension is not None and arr.shape[0] != dimension:
        raise ValueError(f"expected a point of dimension {dimension}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A convex objective exposed through first-order oracles.

    Use :meth:`value`, :meth:`subgrad` and :meth:`prox` rather than the raw
    callables; they validate dimensions.  ``lipschitz_f`` is ``sup ||g||`` over
    the growth ball ``B(x_star, D)``, while ``smoothness.L`` for ``eta = 0``
    instances bounds subgradient *differences* and is ``2 * lipschitz_f``.
    """

    kind: str
    dimension: int
    value_fn: Callable[[np.ndarray], float]
    subgrad_fn: Callable[[np.ndarray], np.ndarray]
    x_star: np.ndarray
    f_star: float
    smoothness: SmoothnessDescriptor
    lipschitz_f: float
    D: float
    growth: Optional[GrowthDescriptor] = None
    prox_fn: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    # derivative of the radial profile phi with f(x) = f_star + phi(||x - x_star||)
    radial_slope: Optional[Callable[[float], float]] = None
    params: dict = field(default_factory=dict)

    def value(self, x) -> float:
        return float(self.value_fn(as_point(x, self.dimension)))

    def subgrad(self, x) -> np.ndarray:
        """Minimum-norm element of the subdifferential at ``x``."""
        return np.asarray(self.subgrad_fn(as_point(x, self.dimension)), dtype=float)

    def prox(self, x, rho: float) -> np.ndarray:
        if not rho > 0:
            raise ValueError(f"rho must be positive, got {rho}")
        x = as_point(x, self.dimension)
        if self.prox_fn is not None:
            return self.prox_fn(x, rho)
        if self.radial_slope is not None:
            return _radial_prox(x, self.x_star, rho, self.radial_slope)
        raise UnsupportedInstanceError(
            f"{self.kind} instance of dimension {self.dimension} has no prox oracle"
        )

    @property
    def has_prox(self) -> bool:
        return self.prox_fn is not None or self.radial_slope is not None

    def to_spec(self) -> dict:
        """JSON-ready description that :func:`problem_from_spec` inverts."""
        spec = {
            "kind": self.kind,
            "alpha": None,
            "p": None,
            "x_star": self.x_star.tolist(),
            "dimension": self.dimension,
            "slopes": None,
            "offsets": None,
            "D": self.D,
        }
        spec.update(self.params)
        return spec


def _radial_prox(x, x_star, rho, slope):
    """Prox of a radial function by bisection on the stationarity condition
    ``phi'(t) + (t - r) / rho = 0`` over ``t in [0, r]``."""
    u = x - x_star
    r = float(np.linalg.norm(u))
    if r == 0.0:
        return x_star.copy()
    lo, hi = 0.0, r
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if slope(mid) + (mid - r) / rho > 0:
            hi = mid
        else:
            lo = mid
    t = 0.5 * (lo + hi)
    return x_star + (t / r) * u


# ---------------------------------------------------------------------------
# power norms


def make_power_norm(alpha: float, p: float, x_star=0.0, dimension: int = 1,
                    D: float = 1.0, seed: int = 0) -> ProblemInstance:
    """``f(x) = alpha * ||x - x_star||**p``, the tight (alpha, p)-growth instance.

    The smoothness descriptor is ``(2 alpha, 0)`` for ``p = 1`` and
    ``(2 alpha, 1)`` for ``p = 2``.  For ``1 < p < 2`` the Hölder constant for
    exponent ``p - 1`` is estimated from sampled pairs in ``B(x_star, D)`` and
    inflated by 5%; for ``p > 2`` the same estimate is made with exponent 1,
    which is only valid on that ball.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1 for a convex power norm, got {p}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    dimension = int(dimension)
    x_star = as_point(np.broadcast_to(np.asarray(x_star, dtype=float), (dimension,)), dimension).copy()
    alpha, p = float(alpha), float(p)

    def value(x):
        return alpha * float(np.linalg.norm(x - x_star)) ** p

    def subgrad(x):
        u = x - x_star
        r = float(np.linalg.norm(u))
        if r == 0.0:
            return np.zeros(dimension)
        return alpha * p * r ** (p - 2.0) * u

    prox_fn = None
    if p == 1.0:
        def prox_fn(x, rho):
            u = x - x_star
            r = float(np.linalg.norm(u))
            if r <= rho * alpha:
                return x_star.copy()
            return x_star + (1.0 - rho * alpha / r) * u
    elif p == 2.0:
        def prox_fn(x, rho):
            return x_star + (x - x_star) / (1.0 + 2.0 * rho * alpha)

    def radial_slope(t):
        return alpha * p * t ** (p - 1.0)

    lipschitz_f = alpha * p * D ** (p - 1.0)
    if p == 1.0:
        smoothness = SmoothnessDescriptor(2.0 * alpha, 0.0)
    elif p == 2.0:
        smoothness = SmoothnessDescriptor(2.0 * alpha, 1.0)
    else:
        eta = min(p - 1.0, 1.0)
        L = _estimate_holder_constant(subgrad, x_star, D, eta, seed)
        smoothness = SmoothnessDescriptor(L, eta)

    return ProblemInstance(
        kind="power_norm",
        dimension=dimension,
        value_fn=value,
        subgrad_fn=subgrad,
        x_star=x_star,
        f_star=0.0,
        smoothness=smoothness,
        lipschitz_f=lipschitz_f,
        D=float(D),
        growth=GrowthDescriptor(alpha, p),
        prox_fn=prox_fn,
        radial_slope=radial_slope,
        params={"alpha": alpha, "p": p},
    )


def _estimate_holder_constant(subgrad, center, radius, eta, seed):
    rng = np.random.default_rng(seed)
    half = _HOLDER_SAMPLES // 2
    xs = _sample_ball(rng, center, radius, 2 * half)
    ys = np.concatenate([xs[half:], 2.0 * center - xs[:half]])
    xs = np.concatenate([xs[:half], xs[:half]])
    best = 0.0
    for x, y in zip(xs, ys):
        dist = float(np.linalg.norm(x - y))
        if dist == 0.0:
            continue
        ratio = float(np.linalg.norm(subgrad(x) - subgrad(y))) / dist ** eta
        best = max(best, ratio)
    return _HOLDER_INFLATION * best


# ---------------------------------------------------------------------------
# maxima of affine pieces


def _min_norm_in_hull(vectors: np.ndarray) -> np.ndarray:
    """Minimum-norm point of the convex hull of the rows of ``vectors``."""
    m, n = vectors.shape
    if m == 1:
        return vectors[0].copy()
    if n == 1:
        lo, hi = vectors[:, 0].min(), vectors[:, 0].max()
        return np.array([min(max(0.0, lo), hi)])
    best, best_norm = None, np.inf
    # Carathéodory: some optimal point is a combination of at most n + 1 rows
    for size in range(1, min(m, n + 1) + 1):
        for subset in itertools.combinations(range(m), size):
            A = vectors[list(subset)]
            G = A @ A.T
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = G
            kkt[:size, size] = 1.0
            kkt[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            lam = sol[:size]
            if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-9:
                continue
            point = lam @ A
            norm = float(np.linalg.norm(point))
            if norm < best_norm - 1e-15:
                best, best_norm = point, norm
    return best


def make_piecewise_max(slopes: Sequence, offsets: Sequence[float], x_star,
                       D: float = 1.0) -> ProblemInstance:
    """``f(x) = max_i <slopes[i], x> + offsets[i]`` with minimizer ``x_star``.

    Raises ``ValueError`` when ``x_star`` does not minimize the maximum, which
    includes the unbounded-below case.  The growth modulus is the smallest
    directional slope of ``f`` leaving ``x_star``, i.e. the distance from the
    origin to the boundary of the hull of the active slopes there.
    """
    A = np.asarray(slopes, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    b = np.asarray(offsets, dtype=float).reshape(-1)
    if A.shape[0] != b.shape[0] or A.shape[0] == 0:
        raise ValueError("slopes and offsets must be non-empty and of equal length")
    dimension = A.shape[1]
    x_star = as_point(np.broadcast_to(np.asarray(x_star, dtype=float), (dimension,)), dimension).copy()

    def value(x):
        return float(np.max(A @ x + b))

    def active(x):
        vals = A @ x + b
        top = vals.max()
        return vals >= top - 1e-12 * (1.0 + abs(top))

    def subgrad(x):
        return _min_norm_in_hull(A[active(x)])

    act = active(x_star)
    g_star = _min_norm_in_hull(A[act])
    if np.linalg.norm(g_star) > 1e-12:
        raise ValueError("x_star is not a minimizer: 0 is not in the hull of the active slopes")

    act_slopes = A[act]
    if dimension == 1:
        alpha = min(act_slopes[:, 0].max(), -act_slopes[:, 0].min())
    else:
        try:
            hull = ConvexHull(act_slopes)
            # equations are [unit normal, offset] with normal.x + offset <= 0 inside
            alpha = float(np.min(-hull.equations[:, -1]))
        except QhullError:
            alpha = 0.0
    growth = GrowthDescriptor(float(alpha), 1.0) if alpha > 1e-12 else None

    prox_fn = None
    if dimension == 1:
        def prox_fn(x, rho):
            return _piecewise_prox_1d(A[:, 0], b, x, rho)

    lipschitz_f = float(np.max(np.linalg.norm(A, axis=1)))
    return ProblemInstance(
        kind="piecewise_max",
        dimension=dimension,
        value_fn=value,
        subgrad_fn=subgrad,
        x_star=x_star,
        f_star=value(x_star),
        smoothness=SmoothnessDescriptor(2.0 * lipschitz_f, 0.0),
        lipschitz_f=lipschitz_f,
        D=float(D),
        growth=growth,
        prox_fn=prox_fn,
        params={"slopes": A.tolist(), "offsets": b.tolist()},
    )


def _piecewise_prox_1d(a, b, x, rho):
    """Exact prox of a 1-D max of affine pieces.

    The minimizer is either a kink of the max or a stationary point
    ``x - rho * a_i`` of one piece, so it suffices to compare those candidates.
    """
    x0 = float(x[0])
    cands = [x0 - rho * ai for ai in a]
    for i, j in itertools.combinations(range(len(a)), 2):
        if a[i] != a[j]:
            cands.append((b[j] - b[i]) / (a[i] - a[j]))
    cands = np.asarray(cands)
    obj = np.max(np.outer(cands, a) + b, axis=1) + (cands - x0) ** 2 / (2.0 * rho)
    return np.array([cands[int(np.argmin(obj))]])


# ---------------------------------------------------------------------------
# serialization


def problem_from_spec(spec: dict) -> ProblemInstance:
    """Build an instance from ``{kind, alpha, p, x_star, dimension, slopes, offsets, D}``."""
    kind = spec.get("kind")
    D = float(spec.get("D") or 1.0)
    if kind == "power_norm":
        dimension = int(spec.get("dimension") or 1)
        return make_power_norm(spec["alpha"], spec["p"], spec.get("x_star", 0.0), dimension, D=D)
    if kind == "piecewise_max":
        return make_piecewise_max(spec["slopes"], spec["offsets"], spec.get("x_star", 0.0), D=D)
    raise ValueError(f"unknown problem kind {kind!r}")


# ---------------------------------------------------------------------------
# verifiers


def _sample_ball(rng, center, radius, count):
    n = center.shape[0]
    if n == 1:
        return center + rng.uniform(-radius, radius, size=(count, 1))
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(count, 1)) ** (1.0 / n)
    return center + radii * directions


def _ball_grid(center, radius, count):
    n = center.shape[0]
    per_axis = max(2, int(math.ceil(count ** (1.0 / n))))
    axis = np.linspace(-radius, radius, per_axis)
    mesh = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    mesh = mesh[np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)]
    return center + mesh


def _region(f, region):
    if region is None:
        return f.x_star, f.D
    center, radius = region
    return as_point(center, f.dimension), float(radius)


def verify_smoothness(f: ProblemInstance, descriptor: SmoothnessDescriptor,
                      sample_count: int = 1000, region=None, tol: float = 1e-12,
                      seed: int = 0) -> CertReport:
    """Check ``||g - g'|| <= L ||x - x'||**eta + tol`` on random pairs.

    ``region`` is ``(center, radius)`` and defaults to ``B(x_star, D)``.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    center, radius = _region(f, region)
    if descriptor.unstructured:
        return CertReport(True, 0.0, None, sample_count, float(tol))
    rng = np.random.default_rng(seed)
    xs = _sample_ball(rng, center, radius, sample_count)
    ys = _sample_ball(rng, center, radius, sample_count)
    gx = np.array([f.subgrad(x) for x in xs])
    gy = np.array([f.subgrad(y) for y in ys])
    lhs = np.linalg.norm(gx - gy, axis=1)
    rhs = descriptor.L * np.linalg.norm(xs - ys, axis=1) ** descriptor.eta
    return CertReport.from_violations(lhs - rhs, lambda i: (xs[i], ys[i]), tol)


def verify_growth(f: ProblemInstance, descriptor: GrowthDescriptor, region=None,
                  grid_count: int = 1001, tol: float = 1e-12) -> CertReport:
    """Check ``f(x) >= f_star + alpha ||x - x_star||**p - tol`` on a grid over the ball."""
    center, radius = _region(f, region)
    pts = _ball_grid(center, radius, grid_count)
    vals = np.array([f.value(x) for x in pts])
    bound = f.f_star + descriptor.alpha * np.linalg.norm(pts - f.x_star, axis=1) ** descriptor.p
    return CertReport.from_violations(bound - vals, lambda i: pts[i], tol)
