"""The acceptance battery: ten end-to-end checks shared by ``ratelift suite`` and
the test suite.

Each ``criterion_*`` function returns a :class:`CriterionResult`; none of them
raises on a failed check.  The solver runs they generate are cached so the
per-iteration inequality and trajectory checks see exactly the same runs.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from decimal import Decimal, getcontext
from typing import Callable

import numpy as np

from . import rates as R
from .envelope import GridFunction, conjugate, convex_envelope, pointwise_min
from .harness import EnvelopeScenario, certify_scenario
from .problems import SmoothnessDescriptor, make_piecewise_max, make_power_norm
from .solvers import (EXACT_MIN, SolverConfig, holder_gradient_descent,
                      polyak_subgradient, proximal_point, restart_fom)

__all__ = ["CriterionResult", "SuiteRun", "CRITERIA", "run_all", "suite_runs", "envelope_scenarios"]

RECURRENCE_TOL = 1e-9
DISTANCE_TOL = 1e-12
TRAJECTORY_TOL = 1e-14
ALGEBRA_RTOL = 1e-12


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail}"


@dataclass(frozen=True, eq=False)
class SuiteRun:
    label: str
    solver: str
    f: object
    run: object
    rho: float = 1.0
    lipschitz: float = math.inf
    sharp_alpha: float = 0.0


# ---------------------------------------------------------------------------
# instance families


PROX_GRID = dict(alpha=(0.5, 1.0, 2.0), rho=(0.3, 1.0, 2.5), x0=(1.3, 4.7, 10.1))
PROX_EPS = 1e-9

SHARP_PIECEWISE = (
    # (name, slopes, offsets, x_star, x0)
    ("abs", [[1.0], [-1.0]], [0.0, 0.0], [0.0], [7.0]),
    ("skewed-v", [[2.0], [-1.0]], [0.0, 0.0], [0.0], [-3.0]),
    ("four-piece-1d", [[1.0], [-1.0], [3.0], [-2.0]], [0.0, 0.0, -2.0, -3.0], [0.0], [5.0]),
    ("shifted-1d", [[1.5], [-0.5]], [-1.05, 0.35], [0.7], [-2.0]),
    ("l1-norm-2d", [[1, 1], [1, -1], [-1, 1], [-1, -1]], [0, 0, 0, 0], [0, 0], [3.0, 1.0]),
    ("triangle-2d", [[1, 0], [-1, 2], [-1, -2]], [0, 0, 0], [0, 0], [2.0, -1.5]),
    ("pentagon-2d", [[2, 1], [-1, 1.5], [0.5, -3], [-2, -0.5], [1.5, -1]],
     [-0.8, 0.8, -0.85, 0.9, -0.95], [0.5, -0.2], [2.0, 1.0]),
)
SHARP_EPS = (1e-3, 1e-6)

QUADRATIC_SETTINGS = (
    # (alpha, x_star, x0)
    (1.0, [0.0], [1.0]),
    (0.5, [0.3, -0.4], [2.0, 1.0]),
    (3.0, [1.0, 0.0, -1.0], [0.0, 0.5, 0.5]),
)
QUADRATIC_EPS = 1e-4


def _piecewise(slopes, offsets, x_star):
    return make_piecewise_max(slopes, offsets, x_star)


def _quadratic(alpha, x_star, x0):
    D = float(np.linalg.norm(np.subtract(x0, x_star)))
    return make_power_norm(alpha, 2.0, x_star, dimension=len(x_star), D=D)


@functools.lru_cache(maxsize=1)
def suite_runs() -> tuple:
    """Every solver run the battery makes, plain and restart-wrapped."""
    runs = []
    for a, rho, x0 in itertools.product(*PROX_GRID.values()):
        f = make_power_norm(a, 1.0, 0.0, D=x0)
        cfg = SolverConfig(epsilon=PROX_EPS, rho=rho)
        for wrapped in (False, True):
            run = (restart_fom(proximal_point, f, [x0], PROX_EPS, cfg) if wrapped
                   else proximal_point(f, [x0], cfg))
            runs.append(SuiteRun(f"prox-sharp a={a} rho={rho} x0={x0}{' restarted' * wrapped}",
                                 "proximal_point", f, run, rho, f.lipschitz_f, a))
    for alpha, x_star, x0 in QUADRATIC_SETTINGS:
        f = _quadratic(alpha, x_star, x0)
        for rho in (0.5, 2.0):
            cfg = SolverConfig(epsilon=1e-8, rho=rho)
            for wrapped in (False, True):
                run = (restart_fom(proximal_point, f, x0, 1e-8, cfg) if wrapped
                       else proximal_point(f, x0, cfg))
                runs.append(SuiteRun(f"prox-quadratic a={alpha} rho={rho}{' restarted' * wrapped}",
                                     "proximal_point", f, run, rho, f.lipschitz_f))
    for name, slopes, offsets, x_star, x0 in SHARP_PIECEWISE:
        f = _piecewise(slopes, offsets, x_star)
        for eps in SHARP_EPS:
            cfg = SolverConfig(epsilon=eps)
            for wrapped in (False, True):
                run = (restart_fom(polyak_subgradient, f, x0, eps, cfg) if wrapped
                       else polyak_subgradient(f, x0, cfg))
                runs.append(SuiteRun(f"polyak-sharp {name} eps={eps}{' restarted' * wrapped}",
                                     "polyak_subgradient", f, run, 1.0, f.lipschitz_f,
                                     f.growth.alpha))
    for alpha, x_star, x0 in QUADRATIC_SETTINGS:
        f = _quadratic(alpha, x_star, x0)
        cfg = SolverConfig(epsilon=QUADRATIC_EPS)
        for wrapped in (False, True):
            run = (restart_fom(polyak_subgradient, f, x0, QUADRATIC_EPS, cfg) if wrapped
                   else polyak_subgradient(f, x0, cfg))
            runs.append(SuiteRun(f"polyak-quadratic a={alpha}{' restarted' * wrapped}",
                                 "polyak_subgradient", f, run, 1.0, f.lipschitz_f))
    gd_cases = (
        ("p=1.5", make_power_norm(1.0, 1.5, 0.0, D=2.0), [2.0], None),
        ("p=1.5 2d", make_power_norm(0.7, 1.5, [0.5, 0.5], dimension=2, D=1.5), [1.5, -0.3], None),
        ("quadratic L=4a", _quadratic(1.0, [0.0], [1.0]), [1.0], SmoothnessDescriptor(4.0, 1.0)),
        ("quadratic 2d L=3a", _quadratic(0.5, [0.3, -0.4], [2.0, 1.0]), [2.0, 1.0],
         SmoothnessDescriptor(1.5, 1.0)),
    )
    for name, f, x0, s in gd_cases:
        cfg = SolverConfig(epsilon=1e-6)
        for wrapped in (False, True):
            run = (restart_fom(holder_gradient_descent, f, x0, 1e-6, cfg, smoothness=s) if wrapped
                   else holder_gradient_descent(f, x0, cfg, smoothness=s))
            runs.append(SuiteRun(f"gd {name}{' restarted' * wrapped}",
                                 "holder_gradient_descent", f, run, 1.0, f.lipschitz_f))
    return tuple(runs)


def _plain_runs(prefix: str):
    return [r for r in suite_runs() if r.label.startswith(prefix) and "restarted" not in r.label]


# ---------------------------------------------------------------------------
# criteria


def criterion_prox_termination() -> CriterionResult:
    failures, worst_slack = [], math.inf
    runs = _plain_runs("prox-sharp")
    for r in runs:
        delta0 = r.f.value(r.run.trace[0].x) - r.f.f_star
        bound = math.ceil((delta0 - PROX_EPS) / (r.rho * r.sharp_alpha ** 2))
        ok = r.run.terminated == EXACT_MIN and r.run.iterations_used <= bound
        worst_slack = min(worst_slack, bound - r.run.iterations_used)
        if not ok:
            failures.append(f"{r.label}: {r.run.terminated} after {r.run.iterations_used} > {bound}")
    detail = f"{len(runs)} runs, min integer slack {worst_slack}"
    return CriterionResult(1, "prox finite termination", not failures,
                           detail if not failures else "; ".join(failures[:3]))


def criterion_subgradient_sharp() -> CriterionResult:
    failures = []
    runs = _plain_runs("polyak-sharp")
    dims = set()
    for r in runs:
        dims.add(r.f.dimension)
        x0 = r.run.trace[0].x
        q = R.RateQuery(delta0=r.f.value(x0) - r.f.f_star, epsilon=r.run.epsilon,
                        alpha=r.sharp_alpha, L=r.lipschitz)
        bound = math.ceil(R.k_subgrad_sharp(q).iterations)
        ok = r.run.final.gap <= r.run.epsilon and r.run.iterations_used <= bound
        if not ok:
            failures.append(f"{r.label}: {r.run.iterations_used} > {bound}")
    instances = len(SHARP_PIECEWISE)
    ok = not failures and instances >= 5 and dims >= {1, 2}
    return CriterionResult(2, "subgradient sharp rate", ok,
                           f"{instances} instances, dims {sorted(dims)}, {len(runs)} runs"
                           if not failures else "; ".join(failures[:3]))


def criterion_subgradient_quadratic() -> CriterionResult:
    failures = []
    runs = _plain_runs("polyak-quadratic")
    for r in runs:
        q = R.RateQuery(epsilon=QUADRATIC_EPS, alpha=r.f.growth.alpha, L=r.lipschitz, p=2.0)
        bound = math.ceil(R.k_subgrad_quadratic(q).iterations)
        ok = r.run.final.gap <= QUADRATIC_EPS and r.run.iterations_used <= bound
        if not ok:
            failures.append(f"{r.label}: {r.run.iterations_used} > {bound}")
    return CriterionResult(3, "subgradient quadratic rate", not failures and len(runs) >= 3,
                           f"{len(runs)} settings" if not failures else "; ".join(failures))


def iteration_inequality_violations(r: SuiteRun) -> list:
    """Per-step inequalities along one run; returns human-readable violations."""
    out = []
    trace = r.run.trace
    for a, b in zip(trace, trace[1:]):
        if b.k != a.k + 1:
            continue
        if b.dist > a.dist + DISTANCE_TOL:
            out.append(f"{r.label} k={a.k}: distance grew by {b.dist - a.dist:.3g}")
        if r.solver == "polyak_subgradient":
            gap = a.f - r.f.f_star
            rhs = a.dist ** 2 - gap ** 2 / r.lipschitz ** 2
            if b.dist ** 2 > rhs + RECURRENCE_TOL:
                out.append(f"{r.label} k={a.k}: recurrence off by {b.dist ** 2 - rhs:.3g}")
        elif r.solver == "proximal_point":
            step = float(np.sum((b.x - a.x) ** 2))
            if b.f + step / r.rho > a.f + RECURRENCE_TOL:
                out.append(f"{r.label} k={a.k}: prox descent off")
            if r.sharp_alpha and b.gap > RECURRENCE_TOL:
                if b.f > a.f - r.rho * r.sharp_alpha ** 2 + RECURRENCE_TOL:
                    out.append(f"{r.label} k={a.k}: decrease below rho*alpha^2")
                if math.sqrt(step) < r.rho * r.sharp_alpha - RECURRENCE_TOL:
                    out.append(f"{r.label} k={a.k}: step shorter than rho*alpha")
    return out


def criterion_iteration_inequalities() -> CriterionResult:
    runs = [r for r in suite_runs() if r.solver in ("polyak_subgradient", "proximal_point")]
    violations = [v for r in runs for v in iteration_inequality_violations(r)]
    steps = sum(len(r.run.trace) - 1 for r in runs)
    return CriterionResult(4, "per-iteration inequalities", not violations,
                           f"{len(runs)} runs, {steps} steps checked"
                           if not violations else "; ".join(violations[:3]))


def _rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def criterion_lifting_algebra() -> CriterionResult:
    worst = 0.0
    axis = np.logspace(-1, 1, 10)
    eps_axis = np.logspace(-6, -1, 10)
    for L, D, eps in itertools.product(axis, axis, eps_axis):
        got = R.lift_general(R.k_subgrad_quadratic, R.RateQuery(epsilon=eps, L=L, D=D)).iterations
        worst = max(worst, _rel_err(got, 8.0 * L ** 2 * D ** 2 / eps ** 2))
    for L, alpha, eps in itertools.product(axis, axis, eps_axis):
        q = R.RateQuery(delta0=1.0, epsilon=eps, alpha=alpha, L=L, q=2.0)
        got = R.lift_growth(R.k_subgrad_sharp, q).iterations
        worst = max(worst, _rel_err(got, 4.0 * L ** 2 / (alpha * eps) * math.log2(1.0 / eps)))
    return CriterionResult(5, "lifting algebra", worst <= ALGEBRA_RTOL,
                           f"2000 grid points, max relative error {worst:.2e}")


def criterion_restart_sums() -> CriterionResult:
    failures, checked = [], 0
    worst_ratio, worst_rel = 0.0, 0.0
    for D, rho, eps, delta0 in itertools.product((0.5, 1.0, 2.0, 5.0), (0.1, 1.0, 3.0),
                                                 (1e-4, 1e-2, 0.3), (0.45, 1.0, 37.0)):
        if delta0 <= eps:
            continue
        q = R.RateQuery(delta0=delta0, epsilon=eps, D=D, rho=rho)
        total = R.restart_sum_general(R.k_prox_sharp, q).iterations
        worst_ratio = max(worst_ratio, total / (2.0 * D ** 2 / (rho * eps)))
        checked += 1
    for alpha, rho, eps, delta0 in itertools.product((0.5, 1.0, 4.0), (0.1, 1.0, 3.0),
                                                     (1e-4, 1e-2, 0.3), (0.45, 1.0, 37.0)):
        if delta0 <= eps:
            continue
        q = R.RateQuery(delta0=delta0, epsilon=eps, alpha=alpha, rho=rho, q=2.0)
        total = R.restart_sum_growth(R.k_prox_sharp, q).iterations
        N = math.ceil(math.log2(delta0 / eps))
        brute = 0.0
        for n in range(N):
            e = 2.0 ** n * eps
            a = alpha ** 0.5 * e ** 0.5
            brute += (2.0 * e - e) / (rho * a ** 2)
        if total != brute:
            failures.append(f"brute-force mismatch at alpha={alpha} rho={rho} eps={eps}")
        worst_rel = max(worst_rel, _rel_err(total, N / (rho * alpha)))
        checked += 1
    ok = not failures and worst_ratio <= 1.0 and worst_rel <= ALGEBRA_RTOL
    return CriterionResult(6, "restart sums", ok,
                           f"{checked} grid points, max sum/bound {worst_ratio:.4f}, "
                           f"closed-form rel error {worst_rel:.1e}"
                           + (f"; {failures[0]}" if failures else ""))


def criterion_trajectory_invariance() -> CriterionResult:
    runs = suite_runs()
    plain = {r.label: r for r in runs if "restarted" not in r.label}
    failures, pairs = [], 0
    worst = 0.0
    for r in runs:
        if "restarted" not in r.label:
            continue
        base = plain[r.label.replace(" restarted", "")]
        a, b = base.run.iterates(), r.run.iterates()
        pairs += 1
        if a.shape != b.shape:
            failures.append(f"{base.label}: {len(a)} vs {len(b)} iterates")
            continue
        diff = float(np.max(np.abs(a - b)))
        worst = max(worst, diff)
        if diff > TRAJECTORY_TOL:
            failures.append(f"{base.label}: max deviation {diff:.3g}")
    solvers = {r.solver for r in runs}
    ok = not failures and len(solvers) == 3
    return CriterionResult(7, "restart trajectory invariance", ok,
                           f"{pairs} wrapped runs over {len(solvers)} solvers, max deviation {worst:.1e}"
                           if not failures else "; ".join(failures[:3]))


def envelope_scenarios() -> list:
    """One-dimensional traces certified through the auxiliary envelope."""
    out = []
    for alpha, T in itertools.product((1.0, 2.0), (1, 3, 5)):
        out.append(EnvelopeScenario(
            {"kind": "power_norm", "alpha": alpha, "p": 1.0}, "proximal_point", 1.0, T,
            p=1.0, rho=0.1 / alpha ** 2, name=f"prox |x| a={alpha} T={T}"))
    for x0, T in ((1.0, 3), (-1.0, 5)):
        out.append(EnvelopeScenario(
            {"kind": "piecewise_max", "slopes": [[2.0], [-1.0]], "offsets": [0.0, 0.0],
             "x_star": [0.0]}, "proximal_point", x0, T, p=1.0, rho=0.05,
            name=f"prox skewed-v x0={x0} T={T}"))
    for alpha, T in itertools.product((1.0, 0.5), (1, 3, 5)):
        problem = {"kind": "power_norm", "alpha": alpha, "p": 2.0}
        lip = 2.0 * alpha  # subgradient-norm bound on the unit ball
        out.append(EnvelopeScenario(problem, "polyak_subgradient", 1.0, T, p=2.0,
                                    model=(4.0 * alpha, 1.0),
                                    name=f"polyak a|x|^2 a={alpha} T={T} smooth models"))
        out.append(EnvelopeScenario(problem, "polyak_subgradient", 1.0, T, p=1.0,
                                    model=(2.0 * lip, 0.0), target="growth",
                                    name=f"polyak a|x|^2 a={alpha} T={T} weakened growth"))
        if alpha == 1.0:
            out.append(EnvelopeScenario(problem, "polyak_subgradient", 1.0, T, p=1.0,
                                        model=(2.0 * lip, 0.0),
                                        name=f"polyak a|x|^2 a={alpha} T={T} kink models"))
    return out


def tightness_scenarios() -> list:
    """Scenarios whose doubled growth target should be refuted."""
    return [
        EnvelopeScenario({"kind": "power_norm", "alpha": 1.0, "p": 1.0}, "polyak_subgradient",
                         1.0, 1, p=1.0, epsilon=0.9, alpha_scale=2.0, name="|x| doubled"),
        EnvelopeScenario({"kind": "power_norm", "alpha": 1.0, "p": 2.0}, "polyak_subgradient",
                         1.0, 3, p=1.0, model=(4.0, 0.0), target="growth", alpha_scale=2.0,
                         name="a|x|^2 weakened doubled"),
    ]


def criterion_envelope_certification() -> CriterionResult:
    outcomes = [certify_scenario(sc) for sc in envelope_scenarios()]
    failures = [o.scenario.name for o in outcomes if not (o.passed and o.precondition)]
    refuted = [certify_scenario(sc) for sc in tightness_scenarios()]
    probe_ok = any(not o.envelope.growth.passed for o in refuted)
    ok = not failures and len(outcomes) >= 10 and probe_ok
    detail = (f"{len(outcomes)} scenarios certified on 4001-point grids; "
              f"doubled target refuted on {sum(not o.envelope.growth.passed for o in refuted)}"
              f"/{len(refuted)} probes")
    if failures:
        detail = "failed: " + ", ".join(failures[:4])
    return CriterionResult(8, "envelope certification", ok, detail)


def _grid_fn(grid, values, tag=""):
    return GridFunction(np.asarray(grid, float), np.asarray(values, float), tag)


def criterion_conjugate_machinery() -> CriterionResult:
    x = np.linspace(-2.0, 2.0, 2001)
    convex = {
        "x^2": x ** 2,
        "|x-0.3|": np.abs(x - 0.3),
        "exp": np.exp(x),
        "max(x,2x-1)": np.maximum(x, 2 * x - 1),
        "x^4": x ** 4,
        "x^2/2+|x|": 0.5 * x ** 2 + np.abs(x),
    }
    worst = 0.0
    for vals in convex.values():
        F = _grid_fn(x, vals)
        env = convex_envelope(F).values
        worst = max(worst, float(np.max(np.abs(env - vals))) / max(1.0, float(np.max(np.abs(vals)))))
    # literal double conjugate of x^2 through its chord slopes
    F = _grid_fn(x, x ** 2)
    chords = x[:-1] + x[1:]
    Fss = conjugate(conjugate(F, chords), x).values
    worst = max(worst, float(np.max(np.abs(Fss - x ** 2))) / 4.0)
    identity_ok = worst <= 1e-12

    rng = np.random.default_rng(0)
    duals = np.linspace(-6.0, 6.0, 1501)
    exact_ok, order_ok = True, True
    for _ in range(100):
        H = _grid_fn(x, rng.normal(size=x.size).cumsum() * 0.05 + x ** 2)
        F = _grid_fn(x, H.values + np.abs(rng.normal(size=x.size)))
        cH, cF = conjugate(H, duals).values, conjugate(F, duals).values
        order_ok &= bool(np.all(cH >= cF))
        cmin = conjugate(pointwise_min([F, _grid_fn(x, np.abs(x) * 1.5)]), duals).values
        exact_ok &= bool(np.array_equal(cmin, np.maximum(cF, conjugate(_grid_fn(x, np.abs(x) * 1.5), duals).values)))
    ok = identity_ok and exact_ok and order_ok
    return CriterionResult(9, "conjugate machinery", ok,
                           f"biconjugate error {worst:.1e}, min/max exact={exact_ok}, "
                           f"order reversal on 100 pairs={order_ok}")


LOWER_BOUND_TRIPLES = (
    ("1", "1", "0.1"),
    ("2.5", "0.4", "0.001"),
    ("10", "3", "0.5"),
    ("0.3", "7", "0.02"),
    ("4", "4", "1e-6"),
)


def _hand_lower_bounds(M: str, D: str, eps: str):
    getcontext().prec = 50
    m, d, e = Decimal(M), Decimal(D), Decimal(eps)
    nonsmooth = m * m * d * d / (16 * e * e)
    smooth = (3 * m * d * d / (32 * e)).sqrt()
    return float(nonsmooth), float(smooth)


def criterion_lower_bounds() -> CriterionResult:
    worst = 0.0
    for M, D, eps in LOWER_BOUND_TRIPLES:
        ns, sm = _hand_lower_bounds(M, D, eps)
        worst = max(worst,
                    _rel_err(R.lower_bound_nonsmooth(float(M), float(D), float(eps)).iterations, ns),
                    _rel_err(R.lower_bound_smooth(float(M), float(D), float(eps)).iterations, sm))
    uppers: dict = {
        "lifted subgrad quadratic": lambda q: R.lift_general(R.k_subgrad_quadratic, q),
        "lifted subgrad sharp": lambda q: R.lift_general(R.k_subgrad_sharp, q),
        "restarted subgrad quadratic": lambda q: R.restart_sum_general(R.k_subgrad_quadratic, q),
        "restarted subgrad sharp": lambda q: R.restart_sum_general(R.k_subgrad_sharp, q),
    }
    violations, checked = [], 0
    for M, D, eps in itertools.product((0.5, 1.0, 3.0), (0.5, 1.0, 4.0), (1e-3, 1e-2, 0.1)):
        if 2 * eps > M * D:
            continue
        lower = R.lower_bound_nonsmooth(M, D, eps).iterations
        for delta0 in (2 * eps, math.sqrt(2 * eps * M * D), M * D):
            q = R.RateQuery(delta0=delta0, epsilon=eps, L=M, D=D)
            for name, upper in uppers.items():
                checked += 1
                if upper(q).iterations < lower:
                    violations.append(f"{name} at M={M} D={D} eps={eps}")
    ok = worst <= 1e-12 and not violations
    return CriterionResult(10, "lower-bound formulas", ok,
                           f"hand-computation rel error {worst:.1e}; {checked} upper/lower comparisons"
                           + (f"; {violations[0]}" if violations else ""))


CRITERIA: tuple = (
    criterion_prox_termination,
    criterion_subgradient_sharp,
    criterion_subgradient_quadratic,
    criterion_iteration_inequalities,
    criterion_lifting_algebra,
    criterion_restart_sums,
    criterion_trajectory_invariance,
    criterion_envelope_certification,
    criterion_conjugate_machinery,
    criterion_lower_bounds,
)


def run_all(report: Callable[[str], None] = print) -> list:
    results = []
    for check in CRITERIA:
        res = check()
        report(res.line())
        results.append(res)
    return results
