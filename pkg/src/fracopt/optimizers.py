"""Descent rules under study, their stopping logic, and stability checks.

Four update rules:

* GDM  - discrete steepest descent u_{k+1} = u_k - omega grad f(u_k).
* CGM  - the continuous flow du/dt = -gain grad f(u), integrated by the
  adaptive integer-order reference solver.
* FGDM - discrete descent with a fractional derivative of f in place of
  the gradient (Riemann-Liouville or Caputo, fixed limit or fixed
  memory window).  Its fixed points generally differ from the extrema
  of f; ``converged_to`` makes that gap observable.
* FCTM - the fractional-time flow D^alpha_t u = -gain grad f(u), whose
  equilibria coincide with the stationary points of f.

First-passage statistics (earliest time/iteration with the progress
metric below a threshold) are recorded for every run.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    IterationDivergenceError,
    OperatorDomainError,
    OrderRangeError,
)
from .fdesolve import FdeProblem, Trajectory, solve_pece, solve_reference_ode
from .fracops import MemoryWindow, caputo_poly_derivative, gl_derivative, rl_poly_derivative
from .problems import Objective
from .specfun import MlSeriesConfig, mittag_leffler, gamma

__all__ = [
    "Method",
    "OptimizerConfig",
    "StoppingRule",
    "DiscreteTrace",
    "RunCost",
    "RunResult",
    "EnergyTrace",
    "run_gdm",
    "run_fgdm",
    "run_fctm",
    "stability_envelope_check",
    "oscillation_census",
    "first_passages",
]

_DEFAULT_K_MAX = 20000


class Method(enum.Enum):
    GDM = "gdm"
    CGM = "cgm"
    FGDM = "fgdm"
    FCTM = "fctm"

    @classmethod
    def parse(cls, name: str) -> "Method":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ConfigError(f"unknown method: {name!r}") from None


@dataclass(frozen=True)
class OptimizerConfig:
    """Method selection plus exactly the gains that method needs.

    omega is the discrete step size (GDM/FGDM); gain is the flow gain
    (CGM/FCTM).  Setting a field the chosen method does not use is a
    configuration error.
    """

    method: Method
    alpha: float = 1.0
    omega: float | None = None
    gain: float | None = None
    fgdm_operator: str | None = None
    window: MemoryWindow | None = None
    h: float | None = None
    t_end: float | None = None
    v0: float | np.ndarray | None = None
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10

    def __post_init__(self) -> None:
        m = self.method
        need = {
            Method.GDM: ("omega",),
            Method.CGM: ("gain", "t_end"),
            Method.FGDM: ("omega", "fgdm_operator", "window"),
            Method.FCTM: ("gain", "h", "t_end"),
        }[m]
        allowed = set(need) | {
            Method.GDM: set(),
            Method.CGM: {"h"},
            Method.FGDM: set(),
            Method.FCTM: {"v0"},
        }[m]
        for name in ("omega", "gain", "fgdm_operator", "window", "h", "t_end", "v0"):
            value = getattr(self, name)
            if name in need and value is None:
                raise ConfigError(f"{m.value} requires {name}")
            if value is not None and name not in allowed:
                raise ConfigError(f"{name} is not a {m.value} parameter")
        if self.omega is not None and not self.omega > 0:
            raise ConfigError("omega must be > 0")
        if self.gain is not None and not self.gain > 0:
            raise ConfigError("gain must be > 0")
        if m in (Method.GDM, Method.CGM) and self.alpha != 1.0:
            raise ConfigError(f"{m.value} runs at alpha = 1")
        if m is Method.FGDM and not 0 < self.alpha <= 1:
            raise ConfigError("fgdm requires alpha in (0, 1]")
        if m is Method.FCTM and not 0 < self.alpha <= 2:
            raise ConfigError("fctm requires alpha in (0, 2]")
        if m is Method.FGDM and self.fgdm_operator not in ("caputo", "rl"):
            raise ConfigError("fgdm_operator must be 'caputo' or 'rl'")
        if self.v0 is not None and self.alpha <= 1:
            raise ConfigError("v0 is only meaningful for alpha > 1")


@dataclass(frozen=True)
class StoppingRule:
    """Union of stop conditions: metric < epsilon, t >= t_end, k >= k_max.

    ``thresholds`` are the first-passage levels recorded along the way
    (strictly decreasing).  Continuous methods integrate their configured
    horizon and evaluate epsilon on the stored grid; if epsilon is never
    reached the run is reported non-converged with the best state seen.
    """

    epsilon: float | None = None
    t_end: float | None = None
    k_max: int | None = None
    thresholds: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        thr = tuple(float(t) for t in self.thresholds)
        if any(b >= a for a, b in zip(thr, thr[1:])):
            raise ConfigError("thresholds must be strictly decreasing")
        object.__setattr__(self, "thresholds", thr)


@dataclass(frozen=True)
class DiscreteTrace:
    """Iteration list (u_k, f(u_k)) of a discrete descent run."""

    iterates: np.ndarray
    costs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "iterates", np.ascontiguousarray(self.iterates, dtype=float))
        object.__setattr__(self, "costs", np.ascontiguousarray(self.costs, dtype=float))
        self.iterates.flags.writeable = False
        self.costs.flags.writeable = False

    def __len__(self) -> int:
        return len(self.costs)

    def to_csv(self, path) -> None:
        d = self.iterates.shape[1]
        header = "k," + ",".join(f"u_{i}" for i in range(d)) + ",f"
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for k, (row, c) in enumerate(zip(self.iterates, self.costs)):
                fh.write(
                    f"{k}," + ",".join(repr(float(x)) for x in row) + f",{repr(float(c))}\n"
                )


@dataclass(frozen=True)
class RunCost:
    field_evaluations: int
    wall_seconds: float


@dataclass(frozen=True)
class RunResult:
    method: Method
    alpha: float
    trace: Trajectory | None
    iterations: DiscreteTrace | None
    first_passage: dict[float, float]
    final_metric: float
    converged_to: np.ndarray
    converged: bool
    cost: RunCost

    @property
    def trace_times(self) -> np.ndarray:
        if self.trace is not None:
            return self.trace.times
        return np.arange(len(self.iterations), dtype=float)


def first_passages(
    times: np.ndarray, metrics: np.ndarray, thresholds: Sequence[float]
) -> dict[float, float]:
    """Earliest time (or iteration index) with metric strictly below each
    threshold; thresholds never reached are absent from the map."""
    out: dict[float, float] = {}
    for eps in thresholds:
        below = np.flatnonzero(metrics < eps)
        if below.size:
            out[float(eps)] = float(times[below[0]])
    return out


def _metric_series(objective: Objective, states: np.ndarray) -> np.ndarray:
    return np.array([objective.metric(u) for u in states])


def _wrap_result(
    objective: Objective,
    cfg: OptimizerConfig,
    stop: StoppingRule,
    times: np.ndarray,
    states: np.ndarray,
    trace: Trajectory | None,
    iterations: DiscreteTrace | None,
    nfev: int,
    wall: float,
) -> RunResult:
    metrics = _metric_series(objective, states)
    passages = first_passages(times, metrics, stop.thresholds)
    converged = True
    converged_to = states[-1]
    if stop.epsilon is not None:
        reached = np.flatnonzero(metrics < stop.epsilon)
        if reached.size == 0:
            converged = False
            converged_to = states[int(np.argmin(metrics))]
    return RunResult(
        method=cfg.method,
        alpha=cfg.alpha,
        trace=trace,
        iterations=iterations,
        first_passage=passages,
        final_metric=float(metrics[-1]),
        converged_to=np.array(converged_to),
        converged=converged,
        cost=RunCost(field_evaluations=nfev, wall_seconds=wall),
    )


def run_gdm(
    objective: Objective,
    u0: np.ndarray,
    cfg: OptimizerConfig,
    stop: StoppingRule = StoppingRule(),
) -> RunResult:
    """Discrete steepest descent with fixed step size."""
    if cfg.method is not Method.GDM:
        raise ConfigError("run_gdm requires a gdm configuration")
    t0 = time.perf_counter()
    u = np.atleast_1d(np.asarray(u0, dtype=float)).copy()
    k_max = stop.k_max if stop.k_max is not None else _DEFAULT_K_MAX
    us = [u.copy()]
    fs = [objective.f(u)]
    nfev = 0
    # overflow on a diverging run is expected and detected explicitly
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(k_max):
            if stop.epsilon is not None and objective.metric(u) < stop.epsilon:
                break
            u = u - cfg.omega * objective.gradient(u)
            nfev += 1
            fk = objective.f(u)
            if not (np.all(np.isfinite(u)) and math.isfinite(fk)):
                raise IterationDivergenceError(k + 1)
            us.append(u.copy())
            fs.append(fk)
    trace = DiscreteTrace(iterates=np.array(us), costs=np.array(fs))
    wall = time.perf_counter() - t0
    times = np.arange(len(trace), dtype=float)
    return _wrap_result(objective, cfg, stop, times, trace.iterates, None, trace, nfev, wall)


def _fgdm_operator(objective: Objective, cfg: OptimizerConfig) -> Callable[[float], float]:
    """Fractional derivative of the scalar objective at a point, honoring
    the configured window.  Polynomial objectives use the exact power
    rule; sampled objectives fall back to the Grunwald-Letnikov sum."""
    window = cfg.window
    alpha = cfg.alpha
    poly = objective.polynomial
    if poly is not None:
        if cfg.fgdm_operator == "caputo":
            return lambda u: caputo_poly_derivative(poly, alpha, u, window.effective_lower_limit(u))
        return lambda u: rl_poly_derivative(poly, alpha, u, window.effective_lower_limit(u))

    def f_scalar(xs: np.ndarray) -> np.ndarray:
        return np.array([objective.f(np.array([x])) for x in np.atleast_1d(xs)])

    def op(u: float) -> float:
        value = gl_derivative(f_scalar, alpha, u, window)
        if cfg.fgdm_operator == "caputo" and alpha < 1:
            # Caputo = RL minus the image of f at the lower limit
            a_eff = window.effective_lower_limit(u)
            value -= float(f_scalar(np.array([a_eff]))[0]) * (u - a_eff) ** (-alpha) / gamma(1.0 - alpha)
        return value

    return op


def run_fgdm(
    objective: Objective,
    u0: float,
    cfg: OptimizerConfig,
    stop: StoppingRule = StoppingRule(),
) -> RunResult:
    """Fractional-gradient descent on a scalar objective.

    The update direction is the configured fractional derivative of f, so
    the iteration settles on the operator's zero, which for alpha < 1 is
    not the extremum of f.
    """
    if cfg.method is not Method.FGDM:
        raise ConfigError("run_fgdm requires an fgdm configuration")
    if objective.dimension != 1:
        raise ConfigError("fgdm is restricted to scalar objectives")
    t0 = time.perf_counter()
    derivative = _fgdm_operator(objective, cfg)
    u = float(np.atleast_1d(np.asarray(u0, dtype=float))[0])
    k_max = stop.k_max if stop.k_max is not None else _DEFAULT_K_MAX
    us = [u]
    fs = [objective.f(np.array([u]))]
    nfev = 0
    for k in range(k_max):
        if stop.epsilon is not None and objective.metric(np.array([u])) < stop.epsilon:
            break
        try:
            d = derivative(u)
        except OperatorDomainError as exc:
            raise OperatorDomainError(
                f"iteration {k}: iterate u = {u:g} left the operator domain ({exc})"
            ) from exc
        u_next = u - cfg.omega * d
        fk = objective.f(np.array([u_next]))
        if not (math.isfinite(u_next) and math.isfinite(fk)):
            raise IterationDivergenceError(k + 1)
        u = u_next
        nfev += 1
        us.append(u)
        fs.append(fk)
        if abs(cfg.omega * d) < 1e-14 * max(1.0, abs(u)):
            break  # settled at the operator zero to machine precision
    trace = DiscreteTrace(iterates=np.array(us)[:, None], costs=np.array(fs))
    wall = time.perf_counter() - t0
    times = np.arange(len(trace), dtype=float)
    return _wrap_result(objective, cfg, stop, times, trace.iterates, None, trace, nfev, wall)


def run_fctm(
    objective: Objective,
    u0: np.ndarray,
    cfg: OptimizerConfig,
    stop: StoppingRule = StoppingRule(),
) -> RunResult:
    """Integrate the descent flow D^alpha_t u = -gain grad f(u).

    FCTM uses the fractional predictor-corrector; a CGM configuration
    routes through the adaptive integer-order reference solver.  Any
    equilibrium of this flow is a stationary point of f.
    """
    if cfg.method not in (Method.FCTM, Method.CGM):
        raise ConfigError("run_fctm requires an fctm or cgm configuration")
    t0 = time.perf_counter()
    gain = cfg.gain
    nfev_box = [0]

    def fde_field(u: np.ndarray) -> np.ndarray:
        nfev_box[0] += 1
        return -gain * objective.gradient(u)

    t_end = stop.t_end if stop.t_end is not None else cfg.t_end
    v0 = cfg.v0 if cfg.alpha > 1 else None
    if cfg.alpha > 1 and v0 is None:
        v0 = 0.0
    problem = FdeProblem(
        alpha=cfg.alpha, field=fde_field, u0=u0, t_end=t_end, h=cfg.h or 1e-3, v0=v0
    )
    if cfg.method is Method.CGM:
        t_eval = problem.h * np.arange(int(round(t_end / problem.h)) + 1) if cfg.h else None
        traj = solve_reference_ode(problem, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, t_eval=t_eval)
    else:
        traj = solve_pece(problem)
    wall = time.perf_counter() - t0
    return _wrap_result(
        objective, cfg, stop, traj.times, traj.states, traj, None,
        traj.stats.field_evaluations, wall,
    )


@dataclass(frozen=True)
class EnergyTrace:
    """Squared distance to the optimum along a trajectory."""

    times: np.ndarray
    energies: np.ndarray
    eta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", np.ascontiguousarray(self.times, dtype=float))
        object.__setattr__(self, "energies", np.ascontiguousarray(self.energies, dtype=float))
        self.times.flags.writeable = False
        self.energies.flags.writeable = False

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("t,V\n")
            for t, v in zip(self.times, self.energies):
                fh.write(f"{repr(float(t))},{repr(float(v))}\n")


def stability_envelope_check(
    trace: Trajectory,
    u_star: np.ndarray,
    eta: float,
    alpha: float,
    slack: float = 1e-6,
) -> tuple[EnergyTrace, bool]:
    """Check V(t) <= V(0) E_{alpha,1}(-eta t^alpha) + slack on the grid.

    V(t) = ||u(t) - u*||^2 with eta the strong-convexity constant.  The
    envelope holds for orders in (0, 1]; larger orders raise
    :class:`OrderRangeError` since the bound is not established there.
    """
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise OrderRangeError(f"envelope check requires alpha in (0, 1], got {alpha:g}")
    if not eta > 0:
        raise ValueError("eta must be > 0")
    u_star = np.atleast_1d(np.asarray(u_star, dtype=float))
    diff = trace.states - u_star[None, :]
    energies = np.sum(diff * diff, axis=1)
    energy = EnergyTrace(times=trace.times, energies=energies, eta=float(eta))
    v0 = float(energies[0])
    if v0 == 0.0:
        return energy, bool(np.all(energies <= slack))
    z_max = eta * float(trace.times[-1]) ** alpha
    cfg = MlSeriesConfig(argument_switch_radius=max(50.0, 1.1 * z_max))
    envelope = np.array(
        [mittag_leffler(alpha, 1.0, -eta * t**alpha, cfg) for t in trace.times]
    )
    ok = bool(np.all(energies <= v0 * envelope + slack))
    return energy, ok


def oscillation_census(energy: EnergyTrace) -> int:
    """Number of strict local minima of V over the grid interior."""
    v = energy.energies
    if v.size < 3:
        return 0
    interior = (v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])
    return int(np.count_nonzero(interior))
