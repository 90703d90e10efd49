"""Iteration-count formulas, growth-lifting substitutions and restart sums.

A rate function ``K`` maps a :class:`RateQuery` to a :class:`RateBound`.  The
explicit-constant rates carry their native growth exponent as the attribute
``K.exponent``; lifting and restart sums use it (falling back to ``query.p``)
when substituting the growth modulus.

Table cells that are only known up to ``O(.)`` are encoded with constant 1
and flagged ``asymptotic_only``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

__all__ = [
    "RateQuery",
    "RateBound",
    "UnsupportedCellError",
    "k_prox_sharp",
    "k_subgrad_quadratic",
    "k_subgrad_sharp",
    "k_table",
    "table_rate",
    "lift_general",
    "lift_growth",
    "restart_count",
    "restart_sum_general",
    "restart_sum_growth",
    "lower_bound_nonsmooth",
    "lower_bound_smooth",
    "METHODS",
    "REGIMES",
]

METHODS = ("prox", "subgrad", "bundle", "gd", "universal")
REGIMES = ("general", "quadratic", "sharp")


class UnsupportedCellError(KeyError):
    """The requested (method, regime) cell has no known rate."""


@dataclass(frozen=True)
class RateQuery:
    delta0: float = 1.0
    epsilon: float = 1e-3
    alpha: float = 1.0
    p: float = 1.0
    q: Optional[float] = None
    L: float = 1.0
    eta: float = 0.0
    D: float = 1.0
    rho: float = 1.0

    def __post_init__(self):
        if self.q is not None and not self.q > self.p:
            raise ValueError(f"q must exceed p, got q={self.q}, p={self.p}")


@dataclass(frozen=True)
class RateBound:
    iterations: float
    asymptotic_only: bool = False

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "asymptotic_only": self.asymptotic_only}


RateFn = Callable[[RateQuery], RateBound]


def _exponent(p: float):
    def mark(fn):
        fn.exponent = p
        return fn
    return mark


@_exponent(1.0)
def k_prox_sharp(q: RateQuery) -> RateBound:
    """Proximal point under sharp growth: ``(delta0 - eps) / (rho alpha**2)``."""
    if q.delta0 <= q.epsilon:
        return RateBound(0.0)
    return RateBound((q.delta0 - q.epsilon) / (q.rho * q.alpha ** 2))


@_exponent(2.0)
def k_subgrad_quadratic(q: RateQuery) -> RateBound:
    """Polyak subgradient under quadratic growth: ``8 L**2 / (alpha eps)``.

    ``L`` is the subgradient-norm bound.
    """
    return RateBound(8.0 * q.L ** 2 / (q.alpha * q.epsilon))


@_exponent(1.0)
def k_subgrad_sharp(q: RateQuery) -> RateBound:
    """Polyak subgradient under sharp growth: ``(4 L**2 / alpha**2) log2(delta0 / eps)``."""
    if q.delta0 <= q.epsilon:
        return RateBound(0.0)
    return RateBound(4.0 * q.L ** 2 / q.alpha ** 2 * math.log2(q.delta0 / q.epsilon))


def _asymptotic(fn, p=None):
    def rate(q: RateQuery) -> RateBound:
        return RateBound(max(fn(q), 0.0), asymptotic_only=True)
    if p is not None:
        rate.exponent = p
    return rate


def _log_ratio(q):
    return math.log(q.delta0 / q.epsilon) if q.delta0 > q.epsilon else 0.0


_TABLE: dict = {
    ("prox", "general"): _asymptotic(lambda q: 1.0 / q.epsilon),
    ("prox", "quadratic"): _asymptotic(lambda q: _log_ratio(q) / q.alpha, 2.0),
    ("prox", "sharp"): k_prox_sharp,
    ("subgrad", "general"): _asymptotic(lambda q: 1.0 / q.epsilon ** 2),
    ("subgrad", "quadratic"): k_subgrad_quadratic,
    ("subgrad", "sharp"): k_subgrad_sharp,
    ("bundle", "general"): _asymptotic(lambda q: 1.0 / q.epsilon ** 3),
    ("bundle", "quadratic"): _asymptotic(lambda q: 1.0 / (q.epsilon * q.alpha ** 2), 2.0),
    ("gd", "general"): _asymptotic(lambda q: 1.0 / q.epsilon),
    ("gd", "quadratic"): _asymptotic(lambda q: _log_ratio(q) / q.alpha, 2.0),
    ("universal", "general"): _asymptotic(lambda q: 1.0 / math.sqrt(q.epsilon)),
    ("universal", "quadratic"): _asymptotic(lambda q: _log_ratio(q) / math.sqrt(q.alpha), 2.0),
}


def table_rate(method: str, regime: str) -> RateFn:
    """The rate function stored in a cell of the catalogue."""
    if method not in METHODS or regime not in REGIMES:
        raise ValueError(f"unknown cell ({method!r}, {regime!r})")
    try:
        return _TABLE[method, regime]
    except KeyError:
        raise UnsupportedCellError(f"no known rate for {method} under {regime} growth") from None


def k_table(method: str, regime: str, q: RateQuery) -> RateBound:
    return table_rate(method, regime)(q)


def _growth_exponent(K: RateFn, q: RateQuery) -> float:
    return getattr(K, "exponent", q.p)


def lift_general(K: RateFn, q: RateQuery) -> RateBound:
    """Evaluate ``K`` with the growth modulus replaced by ``eps / D**p``."""
    p = _growth_exponent(K, q)
    return K(replace(q, alpha=q.epsilon / q.D ** p, p=p, q=None))


def _weakened_alpha(alpha, eps, p, q_exp):
    return alpha ** (p / q_exp) * eps ** (1.0 - p / q_exp)


def lift_growth(K: RateFn, q: RateQuery) -> RateBound:
    """Evaluate ``K`` with ``alpha`` replaced by ``alpha**(p/q) * eps**(1 - p/q)``.

    ``q.alpha`` is the modulus of the weaker ``(alpha, q)`` growth actually held.
    """
    p = _growth_exponent(K, q)
    if q.q is None or not q.q > p:
        raise ValueError(f"lifting to weaker growth needs q > p, got q={q.q}, p={p}")
    return K(replace(q, alpha=_weakened_alpha(q.alpha, q.epsilon, p, q.q), p=p, q=None))


def restart_count(delta0: float, epsilon: float) -> int:
    """``N = ceil(log2(delta0 / eps))``, or 0 when already within ``eps``."""
    if delta0 <= epsilon:
        return 0
    return math.ceil(math.log2(delta0 / epsilon))


def _restart_sum(K, q, alpha_of):
    p = _growth_exponent(K, q)
    total, asym = 0.0, False
    for n in range(restart_count(q.delta0, q.epsilon)):
        eps_n = 2.0 ** n * q.epsilon
        term = K(replace(q, delta0=2.0 * eps_n, epsilon=eps_n, alpha=alpha_of(eps_n, p), p=p, q=None))
        total += term.iterations
        asym = asym or term.asymptotic_only
    return RateBound(total, asym)


def restart_sum_general(K: RateFn, q: RateQuery) -> RateBound:
    """``sum_{n<N} K(2**(n+1) eps, 2**n eps, 2**n eps / D**p)``."""
    return _restart_sum(K, q, lambda eps_n, p: eps_n / q.D ** p)


def restart_sum_growth(K: RateFn, q: RateQuery) -> RateBound:
    """``sum_{n<N} K(2**(n+1) eps, 2**n eps, alpha**(p/q) (2**n eps)**(1 - p/q))``."""
    p = _growth_exponent(K, q)
    if q.q is None or not q.q > p:
        raise ValueError(f"restart sum under weaker growth needs q > p, got q={q.q}, p={p}")
    return _restart_sum(K, q, lambda eps_n, p: _weakened_alpha(q.alpha, eps_n, p, q.q))


def lower_bound_nonsmooth(M: float, D: float, epsilon: float) -> RateBound:
    """Subgradient evaluations any span method needs on M-Lipschitz problems."""
    return RateBound((M * D / (4.0 * epsilon)) ** 2)


def lower_bound_smooth(L: float, D: float, epsilon: float) -> RateBound:
    """Iterations any span method needs on L-smooth problems."""
    return RateBound(math.sqrt(3.0 * L * D ** 2 / (32.0 * epsilon)))
