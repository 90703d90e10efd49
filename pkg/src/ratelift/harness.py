"""Experiment orchestration: config parsing, solver runs, bound comparison and
CSV/JSON artifacts."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import rates as R
from .envelope import EnvelopeResult, envelope_from_iterates, growth_envelope_precondition
from .problems import ProblemInstance, SmoothnessDescriptor, problem_from_spec
from .solvers import (EXACT_MIN, EPS_REACHED, SOLVERS, RunResult, SolverConfig,
                      offset_candidate, restart_fom)

__all__ = [
    "OUTPUT_ROOT_ENV",
    "ConfigError",
    "ExperimentConfig",
    "ComparisonReport",
    "ExperimentResult",
    "compare_bounds",
    "query_for",
    "evaluate_rate",
    "run_experiment",
    "EnvelopeScenario",
    "ScenarioOutcome",
    "certify_scenario",
]

OUTPUT_ROOT_ENV = "RATELIFT_OUTPUT_ROOT"

TRANSFORMS = ("none", "lift_general", "lift_growth", "restart_general", "restart_growth")
_QUERY_FIELDS = {f.name for f in fields(R.RateQuery)}


class ConfigError(ValueError):
    """Invalid experiment config; ``errors`` maps field names to messages."""

    def __init__(self, errors: dict):
        self.errors = dict(errors)
        detail = "; ".join(f"{k}: {v}" for k, v in sorted(self.errors.items()))
        super().__init__(f"invalid config ({detail})")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    solver: str
    x0: list
    epsilon: float
    max_iter: int = 10**6
    rho: float = 1.0
    record_trace: bool = True
    restart: bool = False
    rates: list = field(default_factory=list)
    envelope: bool = False
    output_dir: str = "out"
    seed: int = 0

    def validate(self) -> None:
        errors = {}
        if self.solver not in SOLVERS:
            errors["solver"] = f"unknown solver {self.solver!r}; expected one of {sorted(SOLVERS)}"
        if not isinstance(self.epsilon, (int, float)) or not self.epsilon > 0:
            errors["epsilon"] = "must be a positive number"
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            errors["max_iter"] = "must be an integer >= 1"
        if not isinstance(self.rho, (int, float)) or not self.rho > 0:
            errors["rho"] = "must be a positive number"
        try:
            inst = problem_from_spec(self.problem)
        except (KeyError, TypeError, ValueError) as exc:
            errors["problem"] = str(exc)
        else:
            if len(np.atleast_1d(self.x0)) != inst.dimension:
                errors["x0"] = f"expected {inst.dimension} coordinates"
        for i, spec in enumerate(self.rates):
            try:
                _rate_fn(spec)
                if spec.get("transform", "none") not in TRANSFORMS:
                    raise ValueError(f"unknown transform {spec.get('transform')!r}")
            except (KeyError, ValueError) as exc:
                errors[f"rates[{i}]"] = str(exc).strip("'\"")
        if errors:
            raise ConfigError(errors)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        errors = {k: "unknown field" for k in sorted(set(data) - known)}
        for name in ("problem", "solver", "x0", "epsilon"):
            if name not in data:
                errors[name] = "required"
        if errors:
            raise ConfigError(errors)
        cfg = cls(**{k: data[k] for k in known if k in data})
        x0 = cfg.x0 if isinstance(cfg.x0, list) else list(np.atleast_1d(cfg.x0).tolist())
        return replace(cfg, x0=x0, rates=list(cfg.rates))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ComparisonReport:
    observed_iterations: int
    predicted_bound: float
    predicted_ceiling: int
    bound_respected: Optional[bool]
    slack_ratio: Optional[float]
    asymptotic_only: bool
    conclusive: bool
    label: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def compare_bounds(result: RunResult, bound: R.RateBound, label: str = "") -> ComparisonReport:
    """Compare an observed iteration count with ``ceil`` of a predicted bound.

    ``bound_respected`` is ``None`` for asymptotic-only bounds; a run that hit
    its iteration cap is marked ``conclusive=False`` but still compared.
    """
    observed = result.iterations_used
    ceiling = math.ceil(bound.iterations)
    respected = None if bound.asymptotic_only else observed <= ceiling
    slack = bound.iterations / observed if observed > 0 else None
    return ComparisonReport(
        observed_iterations=observed,
        predicted_bound=bound.iterations,
        predicted_ceiling=ceiling,
        bound_respected=respected,
        slack_ratio=slack,
        asymptotic_only=bound.asymptotic_only,
        conclusive=result.terminated in (EPS_REACHED, EXACT_MIN),
        label=label,
    )


def query_for(f: ProblemInstance, x0, epsilon: float, rho: float = 1.0, **overrides) -> R.RateQuery:
    """Rate arguments read off an instance and a starting point.

    ``L`` is the subgradient-norm bound ``lipschitz_f`` and ``D`` the initial
    distance ``||x0 - x_star||``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    values = dict(
        delta0=f.value(x0) - f.f_star,
        epsilon=epsilon,
        alpha=f.growth.alpha if f.growth else 1.0,
        p=f.growth.p if f.growth else 1.0,
        L=f.lipschitz_f,
        eta=f.smoothness.eta,
        D=float(np.linalg.norm(x0 - f.x_star)),
        rho=rho,
    )
    values.update({k: v for k, v in overrides.items() if k in _QUERY_FIELDS})
    return R.RateQuery(**values)


def _rate_fn(spec: dict):
    return R.table_rate(spec["method"], spec["regime"])


def evaluate_rate(spec: dict, query: R.RateQuery) -> R.RateBound:
    """Evaluate a ``{method, regime, transform}`` rate spec on ``query``."""
    K = _rate_fn(spec)
    transform = spec.get("transform", "none")
    if transform == "none":
        return K(query)
    return {
        "lift_general": R.lift_general,
        "lift_growth": R.lift_growth,
        "restart_general": R.restart_sum_general,
        "restart_growth": R.restart_sum_growth,
    }[transform](K, query)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    run: RunResult
    comparisons: tuple
    envelope: Optional[dict]
    output_dir: Path

    @property
    def comparison(self) -> Optional[ComparisonReport]:
        return self.comparisons[0] if self.comparisons else None

    @property
    def ok(self) -> bool:
        return all(c.bound_respected is not False for c in self.comparisons) and (
            self.envelope is None or all(
                rep is None or rep["passed"] for rep in self.envelope["reports"].values()))


def _resolve_output(path: str) -> Path:
    out = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run the configured solver, compare against each rate, write artifacts.

    Writes ``trace.csv`` and ``report.json`` (plus ``envelope.csv`` when the
    envelope toggle is on) into the output directory, which is placed under
    ``$RATELIFT_OUTPUT_ROOT`` when that is set and the path is relative.
    """
    cfg.validate()
    f = problem_from_spec(cfg.problem)
    solver = SOLVERS[cfg.solver]
    scfg = SolverConfig(epsilon=cfg.epsilon, max_iter=cfg.max_iter, rho=cfg.rho,
                        record_trace=cfg.record_trace)
    if cfg.restart:
        run = restart_fom(solver, f, cfg.x0, cfg.epsilon, scfg)
    else:
        run = solver(f, cfg.x0, scfg)

    comparisons = []
    for spec in cfg.rates:
        overrides = {k: v for k, v in spec.items() if k in _QUERY_FIELDS}
        query = query_for(f, cfg.x0, cfg.epsilon, cfg.rho, **overrides)
        bound = evaluate_rate(spec, query)
        label = f"{spec['method']}/{spec['regime']}/{spec.get('transform', 'none')}"
        comparisons.append(compare_bounds(run, bound, label))

    out = _resolve_output(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(run.to_csv())

    envelope = None
    if cfg.envelope:
        envelope = _envelope_artifacts(f, run, cfg.epsilon, out)

    report = {
        "config": cfg.to_dict(),
        "run": run.metadata(),
        "comparisons": [c.to_dict() for c in comparisons],
        "envelope": envelope,
    }
    (out / "report.json").write_text(_dump(report))
    return ExperimentResult(run, tuple(comparisons), envelope, out)


def _envelope_artifacts(f: ProblemInstance, run: RunResult, epsilon: float, out: Path):
    if f.dimension != 1:
        return {"skipped": "envelopes are 1-D only", "reports": {}}
    xs = [rec.x for rec in run.trace if rec.gap > epsilon]
    if not xs:
        return {"skipped": "no iterate outside the epsilon-level set", "reports": {}}
    s = f.smoothness
    if s.unstructured:
        return {"skipped": "no finite smoothness constant", "reports": {}}
    # growth exponent must be at least eta + 1 for the lifted growth bound to hold near x_star
    p = max(f.growth.p if f.growth else 1.0, s.eta + 1.0)
    D = float(np.linalg.norm(np.asarray(run.trace[0].x) - f.x_star))
    res = envelope_from_iterates(f, xs, s, D=D, growth_target=(epsilon / D ** p, p))
    (out / "envelope.csv").write_text(res.to_csv(f))
    return {"growth_exponent": p, "D": D, "anchors": len(xs), "reports": res.reports()}


@dataclass(frozen=True)
class EnvelopeScenario:
    """A short 1-D solver trace to be certified through the auxiliary envelope.

    ``model`` is the ``(L, eta)`` pair the upper models use (default: the
    instance's own constant).  ``target`` picks the growth modulus checked:
    ``"general"`` uses ``eps / D**p``; ``"growth"`` uses
    ``alpha**(p/q) eps**(1 - p/q)`` with ``(alpha, q)`` the instance's growth.
    ``epsilon`` defaults to 0.9 times the smallest candidate gap along the
    trace, so no iterate counts as epsilon-optimal.  ``alpha_scale`` multiplies
    the target modulus (values above 1 probe tightness).
    """

    problem: dict
    solver: str
    x0: float
    steps: int
    p: float
    target: str = "general"
    rho: float = 1.0
    model: Optional[tuple] = None
    epsilon: Optional[float] = None
    alpha_scale: float = 1.0
    grid_count: int = 4001
    name: str = ""


@dataclass(frozen=True, eq=False)
class ScenarioOutcome:
    scenario: EnvelopeScenario
    run: RunResult
    envelope: EnvelopeResult
    epsilon: float
    D: float
    alpha_target: float
    precondition: bool

    @property
    def passed(self) -> bool:
        return all(r is not None and r.passed for r in
                   (self.envelope.agreement, self.envelope.smoothness, self.envelope.growth))

    def to_dict(self) -> dict:
        return {
            "name": self.scenario.name,
            "passed": self.passed,
            "epsilon": self.epsilon,
            "D": self.D,
            "alpha_target": self.alpha_target,
            "precondition": self.precondition,
            "anchors": len(self.envelope.points),
            "reports": self.envelope.reports(),
        }


def certify_scenario(sc: EnvelopeScenario) -> ScenarioOutcome:
    """Run ``sc.steps`` iterates of the solver and certify their envelope."""
    if sc.steps < 1:
        raise ValueError("a scenario needs at least one iterate")
    if sc.target not in ("general", "growth"):
        raise ValueError(f"unknown growth target {sc.target!r}")
    f = problem_from_spec(sc.problem)
    s = f.smoothness if sc.model is None else SmoothnessDescriptor(*map(float, sc.model))
    # an epsilon this small never stops the run early
    cfg = SolverConfig(epsilon=1e-300, max_iter=sc.steps - 1, rho=sc.rho)
    kwargs = {} if sc.solver == "proximal_point" else {"smoothness": s}
    run = SOLVERS[sc.solver](f, [sc.x0], cfg, **kwargs)
    xs = [rec.x for rec in run.trace]
    gaps = [f.value(offset_candidate(rec.x, rec.g, s)) - f.f_star for rec in run.trace]
    eps = 0.9 * min(gaps) if sc.epsilon is None else sc.epsilon
    if min(gaps) <= eps:
        raise ValueError("an iterate of the trace is already epsilon-optimal")
    D = abs(sc.x0 - float(f.x_star[0]))
    if sc.target == "general":
        alpha_target = eps / D ** sc.p
    else:
        if f.growth is None or not f.growth.p > sc.p:
            raise ValueError("the growth target needs instance growth exponent q > p")
        alpha_target = f.growth.alpha ** (sc.p / f.growth.p) * eps ** (1.0 - sc.p / f.growth.p)
    alpha_target *= sc.alpha_scale
    res = envelope_from_iterates(f, xs, s, D=D, count=sc.grid_count,
                                 growth_target=(alpha_target, sc.p))
    pre = growth_envelope_precondition(s, D, f.value([sc.x0]) - f.f_star)
    return ScenarioOutcome(sc, run, res, eps, D, alpha_target, pre)


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_json(Path(path).read_text())


def smoothness_from(spec: Optional[dict], default: SmoothnessDescriptor) -> SmoothnessDescriptor:
    if not spec:
        return default
    return SmoothnessDescriptor(float(spec["L"]), float(spec["eta"]))
