"""Proximal point, Polyak subgradient and Hölder gradient descent, plus the
gap-halving restart wrapper.

Every solver records one :class:`IterationRecord` per visited iterate.  The
record's ``candidate`` is the point ``x_k - gamma_k g_k`` whose objective gap
decides termination: ``gamma_k = 0`` for the proximal point and subgradient
methods, and the gradient step itself for gradient descent (so its candidate
is the next iterate).
"""

from __future__ import annotations

import collections
import csv
import io
import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .problems import ProblemInstance, SmoothnessDescriptor, as_point

__all__ = [
    "IterationRecord",
    "RunResult",
    "SolverConfig",
    "EPS_REACHED",
    "MAX_ITER",
    "EXACT_MIN",
    "holder_step",
    "offset_candidate",
    "proximal_point",
    "polyak_subgradient",
    "holder_gradient_descent",
    "restart_fom",
    "SOLVERS",
]

EPS_REACHED = "eps-reached"
MAX_ITER = "max-iter"
EXACT_MIN = "exact-min"

_STALL = 1e-14

TRACE_COLUMNS = ("k", "restart_epoch", "x", "f", "grad_norm", "gamma",
                 "f_candidate", "gap", "dist")


@dataclass(frozen=True, eq=False)
class IterationRecord:
    k: int
    x: np.ndarray
    f: float
    g: np.ndarray
    gamma: float
    candidate: np.ndarray
    f_candidate: float
    gap: float
    dist: float
    restart_epoch: int = 0

    def csv_row(self) -> list:
        return [
            self.k,
            self.restart_epoch,
            ";".join(repr(float(v)) for v in self.x),
            repr(self.f),
            repr(float(np.linalg.norm(self.g))),
            repr(self.gamma),
            repr(self.f_candidate),
            repr(self.gap),
            repr(self.dist),
        ]


@dataclass(frozen=True, eq=False)
class RunResult:
    trace: tuple
    terminated: str
    iterations_used: int
    epsilon: float

    @property
    def final(self) -> IterationRecord:
        return self.trace[-1]

    def iterates(self) -> np.ndarray:
        return np.array([rec.x for rec in self.trace])

    def metadata(self) -> dict:
        last = self.final
        return {
            "terminated": self.terminated,
            "iterations_used": self.iterations_used,
            "epsilon": self.epsilon,
            "final_gap": last.gap,
            "final_candidate": last.candidate.tolist(),
            "records": len(self.trace),
        }

    def to_json(self) -> str:
        return json.dumps(self.metadata(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for rec in self.trace:
            writer.writerow(rec.csv_row())
        return buf.getvalue()


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-6
    max_iter: int = 10**6
    rho: float = 1.0
    record_trace: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be nonnegative, got {self.max_iter}")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")


def holder_step(g: np.ndarray, s: SmoothnessDescriptor) -> float:
    """``||g||**((1 - eta)/eta) / L**(1/eta)`` for ``eta > 0``, else 0."""
    if s.eta == 0:
        return 0.0
    if math.isinf(s.L):
        raise ValueError("the offset step needs a finite Hölder constant when eta > 0")
    gnorm = float(np.linalg.norm(g))
    return gnorm ** ((1.0 - s.eta) / s.eta) / s.L ** (1.0 / s.eta)


def offset_candidate(x, g, s: SmoothnessDescriptor) -> np.ndarray:
    """Return ``x - gamma * g`` with the Hölder offset stepsize ``gamma``."""
    x = as_point(x)
    gamma = holder_step(np.asarray(g, dtype=float), s)
    if gamma == 0.0:
        return x.copy()
    return x - gamma * np.asarray(g, dtype=float)


def _drive(f: ProblemInstance, x0, cfg: SolverConfig,
           advance: Callable[[np.ndarray, float, np.ndarray], np.ndarray],
           gamma_of: Callable[[np.ndarray], float]) -> RunResult:
    x = as_point(x0, f.dimension).copy()
    trace = [] if cfg.record_trace else collections.deque(maxlen=1)
    status = MAX_ITER
    for k in range(cfg.max_iter + 1):
        fx = f.value(x)
        g = f.subgrad(x)
        gamma = gamma_of(g)
        if gamma:
            cand = x - gamma * g
            f_cand = f.value(cand)
        else:
            cand, f_cand = x, fx
        rec = IterationRecord(
            k=k, x=x, f=fx, g=g, gamma=gamma, candidate=cand,
            f_candidate=f_cand, gap=f_cand - f.f_star,
            dist=float(np.linalg.norm(x - f.x_star)),
        )
        trace.append(rec)
        if not np.any(g):
            status = EXACT_MIN
            break
        if rec.gap <= cfg.epsilon:
            status = EPS_REACHED
            break
        if k == cfg.max_iter:
            break
        x_next = advance(x, fx, g)
        if np.max(np.abs(x_next - x)) <= _STALL:
            status = EXACT_MIN
            break
        x = x_next
    return RunResult(tuple(trace), status, trace[-1].k, cfg.epsilon)


def proximal_point(f: ProblemInstance, x0, cfg: SolverConfig) -> RunResult:
    """Iterate ``x_{k+1} = prox_{rho f}(x_k)``; candidates are the iterates."""
    if not f.has_prox:
        # surface the oracle's own error before iterating
        f.prox(f.x_star, cfg.rho)
    return _drive(f, x0, cfg, lambda x, fx, g: f.prox(x, cfg.rho), lambda g: 0.0)


def polyak_subgradient(f: ProblemInstance, x0, cfg: SolverConfig,
                       smoothness: Optional[SmoothnessDescriptor] = None) -> RunResult:
    """Subgradient method with the Polyak step ``(f(x_k) - f_star) / ||g_k||**2``.

    Candidates are the iterates themselves (the method's Lipschitz, ``eta = 0``
    model).  Passing ``smoothness`` with ``eta > 0`` switches the candidates to
    the Hölder offset points instead; the trajectory is unaffected.
    """
    def advance(x, fx, g):
        return x - ((fx - f.f_star) / float(g @ g)) * g

    if smoothness is None or smoothness.eta == 0:
        gamma_of = lambda g: 0.0
    else:
        gamma_of = lambda g: holder_step(g, smoothness)
    return _drive(f, x0, cfg, advance, gamma_of)


def holder_gradient_descent(f: ProblemInstance, x0, cfg: SolverConfig,
                            smoothness: Optional[SmoothnessDescriptor] = None) -> RunResult:
    """Gradient descent with stepsize ``||g||**((1-eta)/eta) / L**(1/eta)``.

    The candidate of record ``k`` is the next iterate, so termination at ``k``
    means ``x_{k+1}`` is epsilon-optimal.
    """
    s = f.smoothness if smoothness is None else smoothness
    if s.eta == 0:
        raise ValueError("gradient descent needs eta > 0; use polyak_subgradient for eta = 0")

    def advance(x, fx, g):
        return x - holder_step(g, s) * g

    return _drive(f, x0, cfg, advance, lambda g: holder_step(g, s))


SOLVERS = {
    "proximal_point": proximal_point,
    "polyak_subgradient": polyak_subgradient,
    "holder_gradient_descent": holder_gradient_descent,
}


def restart_fom(inner: Callable[..., RunResult], f: ProblemInstance, x0,
                epsilon: float, cfg: Optional[SolverConfig] = None,
                **inner_kwargs) -> RunResult:
    """Run ``inner`` to targets ``2**(N-1) eps, ..., 2 eps, eps``, restarting each
    epoch at the candidate that met the previous target.

    ``N = ceil(log2((f(x0) - f_star) / eps))``.  The returned trace concatenates
    the epochs with globally renumbered ``k``; when an epoch restarts at the
    previous epoch's last iterate that duplicate record is kept only once (in
    the later epoch).  An epoch whose target the restart point already meets
    is skipped, so every inner step is one the unwrapped solver also takes.
    """
    cfg = SolverConfig(epsilon=epsilon) if cfg is None else replace(cfg, epsilon=epsilon)
    x0 = as_point(x0, f.dimension)
    delta0 = f.value(x0) - f.f_star
    n_epochs = math.ceil(math.log2(delta0 / epsilon)) if delta0 > epsilon else 0
    if n_epochs <= 0:
        run = inner(f, x0, replace(cfg, max_iter=0), **inner_kwargs)
        status = run.terminated if run.terminated != MAX_ITER else EPS_REACHED
        return RunResult(run.trace, status, 0, epsilon)

    records: list = []
    x = x0
    for epoch in range(n_epochs):
        target = 2.0 ** (n_epochs - 1 - epoch) * epsilon
        if records and f.value(x) - f.f_star <= target:
            # the restart point already meets this target: the epoch is empty
            continue
        offset = 0
        if records:
            if np.array_equal(records[-1].x, x):
                offset = records.pop().k
            else:
                offset = records[-1].k + 1
        epoch_cfg = replace(cfg, epsilon=target, max_iter=max(cfg.max_iter - offset, 0),
                            record_trace=True)
        run = inner(f, x, epoch_cfg, **inner_kwargs)
        records.extend(replace(rec, k=rec.k + offset, restart_epoch=epoch) for rec in run.trace)
        if run.terminated != EPS_REACHED:
            return _restart_result(records, run.terminated, epsilon, cfg.record_trace)
        x = run.final.candidate
    return _restart_result(records, EPS_REACHED, epsilon, cfg.record_trace)


def _restart_result(records, status, epsilon, keep_all):
    kept = tuple(records) if keep_all else (records[-1],)
    return RunResult(kept, status, records[-1].k, epsilon)
