"""Drivers comparing GGE dynamics with the exact dense oracle.

Both comparisons start from the maximally mixed state of the even fermion
parity sector, the sector described by the momentum grid.  The observable
is the bulk nearest-neighbour correlator ``<sx_{L/2} sx_{L/2+1}>`` (and its
``yy`` partner for the continuous model).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from . import oracle
from .gge import GgeState, string_correlator
from .lindblad_kernel import evolve, lindblad_kernels
from .model import ModelParams, Variant, bogoliubov_table, build_grid
from .reset_kernel import ResetParams, evolve_cycles, reset_kernels

__all__ = ["ComparisonTrace", "compare_lindblad_exact", "compare_reset_exact"]


@dataclass(frozen=True, eq=False)
class ComparisonTrace:
    """Exact and GGE observable curves for one coupling strength.

    ``x`` is the scaled time ``eps t`` (continuous model) or the scaled cycle
    count ``lambda^2 N_c`` (reset protocol).
    """

    coupling: float
    x: np.ndarray = field(repr=False)
    exact: Dict[str, np.ndarray] = field(repr=False)
    gge: Dict[str, np.ndarray] = field(repr=False)

    def deviation(self, kind: str = "xx") -> np.ndarray:
        return np.abs(self.exact[kind] - self.gge[kind])

    def max_deviation(self, kind: str = "xx") -> float:
        return float(self.deviation(kind).max())


def _bond_operators(L: int, kinds: Sequence[str]):
    i = L // 2 - 1
    return {k: oracle.string_operator(k, i, 1, L) for k in kinds}


def compare_lindblad_exact(params: ModelParams, L: int, epsilons: Sequence[float],
                           t_max_scaled: float = 3.0, observe_every_scaled: float = 0.05,
                           dt_scaled_gge: float = 1e-3, dt_exact=None,
                           kinds: Sequence[str] = ("xx", "yy")) -> Dict[float, ComparisonTrace]:
    """Dense Lindblad evolution against GGE propagation for each ``eps``."""
    if params.variant is not Variant.CONTINUOUS:
        raise ValueError("continuous-time comparison needs continuous-time parameters")
    table = bogoliubov_table(params, build_grid(L))
    kernels = lindblad_kernels(table)
    ops = _bond_operators(L, kinds)
    out = {}
    for eps in epsilons:
        spec = oracle.lindblad_spec(params, L, eps)
        xs, vals = [], {k: [] for k in kinds}

        def observe(t, rho):
            xs.append(eps * t)
            for k, op in ops.items():
                vals[k].append(oracle.expectation(op, rho).real)

        rho0 = oracle.infinite_temperature(L, "even")
        oracle.lindblad_evolve(rho0, spec, t_max_scaled / eps, dt_exact, observe,
                               observe_every=observe_every_scaled / eps)
        x = np.array(xs)
        state = GgeState.infinite_temperature(table)
        gvals = {k: [] for k in kinds}
        for target in x:
            state = evolve(state, max(target, state.clock), dt_scaled_gge, kernels=kernels)
            for k in kinds:
                gvals[k].append(string_correlator(state, k, 1))
        out[float(eps)] = ComparisonTrace(float(eps), x, {k: np.array(v) for k, v in vals.items()},
                                          {k: np.array(v) for k, v in gvals.items()})
    return out


def compare_reset_exact(params: ModelParams, h_A: float, T: int, n_sys: int,
                        lambdas: Sequence[float], x_max: float = 3.0,
                        kinds: Sequence[str] = ("xx",)) -> Dict[float, ComparisonTrace]:
    """Exact reset circuit against GGE cycle updates for each constant coupling ``lambda``.

    Both are run for ``round(x_max / lambda^2)`` cycles and recorded after every cycle.
    """
    if params.variant is not Variant.FLOQUET:
        raise ValueError("reset comparison needs Floquet parameters")
    table = bogoliubov_table(params, build_grid(n_sys))
    ops = _bond_operators(n_sys, kinds)
    out = {}
    for lam in lambdas:
        reset = ResetParams.constant(h_A, T, lam)
        n_cycles = int(round(x_max / lam**2))
        circuit = oracle.reset_circuit(params, reset, n_sys)
        rho = oracle.infinite_temperature(n_sys, "even")
        exact = {k: [oracle.expectation(op, rho).real] for k, op in ops.items()}
        for _ in range(n_cycles):
            rho = circuit.cycle(rho)
            for k, op in ops.items():
                exact[k].append(oracle.expectation(op, rho).real)
        state = GgeState.infinite_temperature(table)
        gge = {k: [string_correlator(state, k, 1)] for k in kinds}

        def observe(s):
            for k in kinds:
                gge[k].append(string_correlator(s, k, 1))

        evolve_cycles(state, reset, n_cycles, observe, kernels=reset_kernels(table, reset))
        x = lam**2 * np.arange(n_cycles + 1)
        out[float(lam)] = ComparisonTrace(float(lam), x, {k: np.array(v) for k, v in exact.items()},
                                          {k: np.array(v) for k, v in gge.items()})
    return out
