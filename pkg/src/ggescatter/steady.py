"""Steady states of the occupation flow.

Two solvers are provided: plain forward propagation until the flow stalls,
and an iterative construction that adds one generalized charge per step,
each built from the flow left over by the previous step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple

import numpy as np
from scipy.optimize import brentq, root

from .gge import GgeState, clamp, occupations_from_multipliers, susceptibility
from .lindblad_kernel import LindbladKernels, lindblad_kernels, rate_from_occupations
from .model import BogoliubovTable, Variant
from .reset_kernel import ResetKernels, ResetParams, cycle_rate_from_occupations, reset_kernels

__all__ = [
    "Flow",
    "LindbladFlow",
    "ResetFlow",
    "IterationRecord",
    "SteadyResult",
    "ConvergenceError",
    "RootSolveError",
    "residual_flow",
    "solve_by_evolution",
    "solve_iterative",
]

log = logging.getLogger(__name__)

ROOT_TOL = 1e-10


class Flow(Protocol):
    """Occupation flow ``dn/dclock`` on a fixed table."""

    table: BogoliubovTable
    discrete: bool
    default_dt: float

    def __call__(self, n: np.ndarray) -> np.ndarray: ...


class LindbladFlow:
    """Continuous-time flow per unit of scaled time ``eps * t``."""

    discrete = False
    default_dt = 0.1

    def __init__(self, table: BogoliubovTable):
        self.table = table
        self.kernels: LindbladKernels = lindblad_kernels(table)

    def __call__(self, n: np.ndarray) -> np.ndarray:
        return rate_from_occupations(n, self.kernels)


class ResetFlow:
    """Change of the occupations over one reset cycle."""

    discrete = True
    default_dt = 1.0

    def __init__(self, table: BogoliubovTable, params: ResetParams):
        self.table = table
        self.params = params
        self.kernels: ResetKernels = reset_kernels(table, params)

    def __call__(self, n: np.ndarray) -> np.ndarray:
        return cycle_rate_from_occupations(n, self.kernels)


def make_flow(table: BogoliubovTable, reset: Optional[ResetParams] = None) -> Flow:
    if table.variant is Variant.CONTINUOUS:
        if reset is not None:
            raise ValueError("reset parameters given for a continuous-time table")
        return LindbladFlow(table)
    if reset is None:
        raise ValueError("a Floquet table needs reset parameters")
    return ResetFlow(table, reset)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """Outcome of one step of :func:`solve_iterative`."""

    k: int
    residual: float
    stationarity: float
    multipliers: np.ndarray = field(repr=False)
    n: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class SteadyResult:
    """Solver output.

    ``iterations`` counts Euler steps (evolution) or accepted charges
    (iterative); ``elapsed`` is the clock advance of the evolution solver.
    """

    state: GgeState
    residual: float
    iterations: int
    elapsed: float = 0.0
    converged: bool = True
    history: Tuple[IterationRecord, ...] = ()


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, state: GgeState):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual
        self.state = state


class RootSolveError(RuntimeError):
    def __init__(self, k: int, residual: float, best: Optional[SteadyResult]):
        super().__init__(f"stationarity root solve failed at step k={k} (residual {residual:.3e})")
        self.k = k
        self.residual = residual
        self.best = best


def _check_flow(state: GgeState, flow: Flow):
    if not flow.table.grid.same_as(state.table.grid) or flow.table.variant is not state.table.variant:
        raise ValueError("flow and state are built on different tables")


def residual_flow(state: GgeState, flow: Flow) -> float:
    """Average remaining flow ``(1/L) sum_q |dn_q/dclock|``."""
    _check_flow(state, flow)
    return float(np.mean(np.abs(flow(state.n))))


def solve_by_evolution(initial: GgeState, flow: Flow, dt: Optional[float] = None,
                       tol: float = 1e-10, max_time: float = 1e5,
                       criterion: str = "mean") -> SteadyResult:
    """Propagate with clamped Euler steps until the flow falls below ``tol``.

    ``criterion`` selects the stopping norm: ``"mean"`` uses the residual
    flow, ``"max"`` the largest per-mode change.  Discrete (reset) flows
    only accept ``dt = 1``.

    Raises
    ------
    ConvergenceError
        If the clock advances by ``max_time`` before the flow drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if criterion not in ("mean", "max"):
        raise ValueError(f"criterion must be 'mean' or 'max', got {criterion!r}")
    _check_flow(initial, flow)
    dt = flow.default_dt if dt is None else float(dt)
    if flow.discrete and dt != 1.0:
        raise ValueError("a reset cycle cannot be subdivided; use dt = 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    norm = np.mean if criterion == "mean" else np.max
    n = initial.n
    max_steps = int(np.ceil(max_time / dt))
    for step in range(max_steps + 1):
        r = flow(n)
        res = float(norm(np.abs(r)))
        if res < tol:
            state = GgeState(initial.table, n, initial.clock + step * dt)
            return SteadyResult(state, float(np.mean(np.abs(r))), step, step * dt)
        if step == max_steps:
            break
        n = clamp(n + dt * r)
    state = GgeState(initial.table, n, initial.clock + max_steps * dt)
    raise ConvergenceError(f"no steady state within clock span {max_time:g}", res, state)


def _bracket_root(f, x0: float, span: float = 1e3):
    """Expand a symmetric interval around ``x0`` until ``f`` changes sign."""
    f0 = f(x0)
    if f0 == 0:
        return x0, x0
    d = max(abs(x0), 1e-2) * 0.5
    while d < span:
        for x in (x0 + d, x0 - d):
            if np.sign(f(x)) != np.sign(f0):
                return (x0, x) if x > x0 else (x, x0)
        d *= 2.0
    raise RootSolveError(0, float(abs(f0)), None)


def _stationarity(D: np.ndarray, flow: Flow, lams: np.ndarray) -> np.ndarray:
    n = occupations_from_multipliers(D.T @ lams)
    return D @ flow(n) / D.shape[1]


def _newton(D: np.ndarray, flow: Flow, lams: np.ndarray, tol: float, max_iter: int = 60):
    """Damped Newton on ``D @ flow(n(D^T lams)) = 0``.

    The flow is quadratic in ``n``, so a central difference along
    ``dn = -chi * D[b]`` gives the exact directional derivative.
    """
    L = D.shape[1]
    F = _stationarity(D, flow, lams)
    for _ in range(max_iter):
        fnorm = np.abs(F).max()
        if fnorm < tol:
            return lams, fnorm, True
        n = occupations_from_multipliers(D.T @ lams)
        chi = n * (1.0 - n)
        jac = np.empty((len(lams), len(lams)))
        for b in range(len(lams)):
            dn = -chi * D[b]
            jac[:, b] = D @ (0.5 * (flow(n + dn) - flow(n - dn))) / L
        try:
            step = np.linalg.solve(jac, -F)
        except np.linalg.LinAlgError:
            return lams, fnorm, False
        t = 1.0
        while t > 1e-8:
            trial = lams + t * step
            Ft = _stationarity(D, flow, trial)
            if np.abs(Ft).max() < fnorm:
                break
            t *= 0.5
        else:
            return lams, fnorm, False
        lams, F = trial, Ft
    fnorm = np.abs(F).max()
    return lams, fnorm, fnorm < tol


def _solve_multipliers(D, flow, lams, tol, k):
    lams, fnorm, ok = _newton(D, flow, lams, tol)
    if ok:
        return lams, fnorm
    log.info("Newton stalled at k=%d (|F|=%.3e); falling back to hybr", k, fnorm)
    sol = root(lambda x: _stationarity(D, flow, x), lams, method="hybr", tol=1e-14)
    fnorm_h = float(np.abs(_stationarity(D, flow, sol.x)).max())
    if fnorm_h < tol:
        return sol.x, fnorm_h
    raise RootSolveError(k, min(fnorm, fnorm_h), None)


def solve_iterative(flow: Flow, initial_beta: float = 1.0, k_max: int = 12,
                    tol: float = 1e-10, root_tol: float = ROOT_TOL) -> SteadyResult:
    """Iterative construction of the stationary GGE from generalized charges.

    Step ``k = 0`` fits a Gibbs state ``mu = lambda_0 eps`` whose energy flow
    vanishes.  Step ``k`` adds the charge with per-mode weights
    ``w_m = -flow_m / chi_mm`` evaluated at the previous state and re-solves
    the stationarity of all ``k + 1`` charges for their multipliers.  The
    weights are rescaled to unit max-norm; the scale is absorbed by the
    multipliers.

    Iteration stops when the residual flow falls below ``tol``, when
    ``k_max`` is reached, or when a step fails to lower the residual; the
    best state found is returned.  ``history`` has one record per accepted step.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    table = flow.table
    L = table.L
    eps = table.eps

    def energy_flow(beta):
        return float(eps @ flow(occupations_from_multipliers(beta * eps))) / L

    lo, hi = _bracket_root(energy_flow, float(initial_beta))
    beta0 = lo if lo == hi else brentq(energy_flow, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    directions = [eps / np.abs(eps).max()]
    lams = np.array([beta0 * np.abs(eps).max()])

    def record(k, lams):
        D = np.array(directions)
        n = occupations_from_multipliers(D.T @ lams)
        r = flow(n)
        return IterationRecord(k, float(np.mean(np.abs(r))),
                               float(np.abs(D @ r).max() / L), lams.copy(), n)

    history = [record(0, lams)]
    best = history[0]
    for k in range(1, k_max + 1):
        if best.residual < tol:
            break
        n = best.n
        w = -flow(n) / susceptibility(GgeState(table, n))
        scale = np.abs(w).max()
        if not np.isfinite(scale) or scale == 0:
            break
        directions.append(w / scale)
        D = np.array(directions)
        try:
            lams, _ = _solve_multipliers(D, flow, np.append(best.multipliers, 0.0), root_tol, k)
        except RootSolveError as exc:
            raise RootSolveError(k, exc.residual, _result(table, history, best, tol)) from None
        rec = record(k, lams)
        if rec.residual >= best.residual:
            log.info("step k=%d did not improve the residual (%.3e >= %.3e)", k, rec.residual, best.residual)
            directions.pop()
            break
        history.append(rec)
        best = rec
    return _result(table, history, best, tol)


def _result(table, history, best, tol) -> SteadyResult:
    return SteadyResult(GgeState(table, best.n), best.residual, best.k,
                        converged=best.residual < tol, history=tuple(history))
