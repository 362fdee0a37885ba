"""Scattering rates for the chain with Lindblad operators ``S+_j S-_{j+1} + S^z_j + 1/2``.

Rates are per unit of scaled time ``eps * t``: the coupling strength never
enters this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .gge import GgeState
from .model import BogoliubovTable, ModelParams, Variant, bogoliubov_coefficients

__all__ = [
    "FactorizedKernel",
    "LindbladKernels",
    "kernel_fs",
    "kernel_fc",
    "kernel_fa",
    "kernel_matrices",
    "lindblad_kernels",
    "rate",
    "rate_naive",
    "euler_step",
    "evolve",
]


@dataclass(frozen=True, eq=False)
class FactorizedKernel:
    """Separable representation ``K[q, q'] = sum_r left[r, q] * right[r, q']``."""

    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return self.left.shape[0]

    def matrix(self) -> np.ndarray:
        return self.left.T @ self.right

    def contract(self, g: np.ndarray) -> np.ndarray:
        """``sum_q' K[q, q'] g[q']`` in O(rank * L)."""
        return self.left.T @ (self.right @ g)

    def contract_transposed(self, g: np.ndarray) -> np.ndarray:
        """``sum_q' K[q', q] g[q']``."""
        return self.right.T @ (self.left @ g)

    def __mul__(self, other: "FactorizedKernel") -> "FactorizedKernel":
        L = self.left.shape[1]
        left = (self.left[:, None, :] * other.left[None, :, :]).reshape(-1, L)
        right = (self.right[:, None, :] * other.right[None, :, :]).reshape(-1, L)
        return FactorizedKernel(left, right)

    def __add__(self, other: "FactorizedKernel") -> "FactorizedKernel":
        return FactorizedKernel(np.vstack([self.left, other.left]),
                                np.vstack([self.right, other.right]))


def _fs(u, v, q, up, vp, qp):
    c, cp = np.cos(q), np.cos(qp)
    return (u**2 * up**2 * (1 + cp) + v**2 * vp**2 * (1 + c)
            - u * v * up * vp * (1 + cp + c + np.cos(q + qp)))


def _fc(u, v, q, up, vp, qp):
    c, cp = np.cos(q), np.cos(qp)
    return (v**2 * up**2 * (1 + c) + u**2 * vp**2 * (1 + cp)
            - u * v * up * vp * (1 + cp + c + np.cos(q - qp)))


def _fa(u, v, q, up, vp, qp):
    c, cp = np.cos(q), np.cos(qp)
    return (v**2 * up**2 * (1 + cp) + u**2 * vp**2 * (1 + c)
            - u * v * up * vp * (1 + cp + c + np.cos(q - qp)))


def _pointwise(f, q, qp, params: ModelParams):
    if params.variant is not Variant.CONTINUOUS:
        raise ValueError("Lindblad kernels need continuous-time parameters")
    q, qp = np.broadcast_arrays(np.asarray(q, float), np.asarray(qp, float))
    _, u, v = bogoliubov_coefficients(params, q)
    _, up, vp = bogoliubov_coefficients(params, qp)
    return f(u, v, q, up, vp, qp)


def kernel_fs(q, qp, params: ModelParams):
    """Transition weight ``f^s_{q,q'}`` for a quasiparticle moving ``q' -> q``."""
    return _pointwise(_fs, q, qp, params)


def kernel_fc(q, qp, params: ModelParams):
    """Pair-creation weight ``f^c_{q,q'}`` (symmetric in its arguments)."""
    return _pointwise(_fc, q, qp, params)


def kernel_fa(q, qp, params: ModelParams):
    """Pair-annihilation weight ``f^a_{q,q'}`` (symmetric in its arguments)."""
    return _pointwise(_fa, q, qp, params)


def _check_continuous(table: BogoliubovTable):
    if table.variant is not Variant.CONTINUOUS:
        raise ValueError("Lindblad rates need a continuous-time Bogoliubov table")


def kernel_matrices(table: BogoliubovTable):
    """Dense ``(f^s, f^c, f^a)`` on the grid, indexed ``[q, q']``; O(L^2) memory."""
    _check_continuous(table)
    q, u, v = table.q, table.u, table.v
    args = (u[:, None], v[:, None], q[:, None], u[None, :], v[None, :], q[None, :])
    return _fs(*args), _fc(*args), _fa(*args)


@dataclass(frozen=True, eq=False)
class LindbladKernels:
    table: BogoliubovTable
    fs: FactorizedKernel
    fc: FactorizedKernel
    fa: FactorizedKernel


def lindblad_kernels(table: BogoliubovTable) -> LindbladKernels:
    """Rank-4 separable forms of ``f^s``, ``f^c`` and ``f^a``.

    Uses ``1 + cos q + cos q' + cos(q +- q') = (1 + cos q)(1 + cos q') -+ sin q sin q'``.
    """
    _check_continuous(table)
    q, u, v = table.q, table.u, table.v
    c1, s = 1.0 + np.cos(q), np.sin(q)
    u2, v2, uv = u * u, v * v, u * v
    fs = FactorizedKernel(np.array([u2, v2 * c1, -uv * c1, uv * s]),
                          np.array([u2 * c1, v2, uv * c1, uv * s]))
    fc = FactorizedKernel(np.array([v2 * c1, u2, -uv * c1, -uv * s]),
                          np.array([u2, v2 * c1, uv * c1, uv * s]))
    fa = FactorizedKernel(np.array([v2, u2 * c1, -uv * c1, -uv * s]),
                          np.array([u2 * c1, v2, uv * c1, uv * s]))
    return LindbladKernels(table, fs, fc, fa)


def _kernels_for(state: GgeState, kernels: Optional[LindbladKernels]) -> LindbladKernels:
    if kernels is None:
        return lindblad_kernels(state.table)
    if not kernels.table.grid.same_as(state.table.grid):
        raise ValueError("kernels and state live on different grids")
    return kernels


def rate_from_occupations(n: np.ndarray, kernels: LindbladKernels) -> np.ndarray:
    m = 1.0 - n
    L = n.shape[0]
    gain = m * kernels.fs.contract(n) + m * kernels.fc.contract(m)
    loss = n * kernels.fs.contract_transposed(m) + n * kernels.fa.contract(n)
    return (2.0 / L) * (gain - loss)


def rate(state: GgeState, kernels: Optional[LindbladKernels] = None) -> np.ndarray:
    """``d<n_q>/d(eps t)`` for every grid momentum, in O(L).

    Pass precomputed ``kernels`` to avoid rebuilding the factors on every call.
    """
    _check_continuous(state.table)
    return rate_from_occupations(state.n, _kernels_for(state, kernels))


def rate_naive(state: GgeState) -> np.ndarray:
    """Reference O(L^2) double sum over the dense kernel matrices."""
    fs, fc, fa = kernel_matrices(state.table)
    n = state.n
    m = 1.0 - n
    terms = (fs * np.outer(m, n) - fs.T * np.outer(n, m)
             + fc * np.outer(m, m) - fa * np.outer(n, n))
    return 2.0 / state.L * terms.sum(axis=1)


def euler_step(state: GgeState, dt_scaled: float,
               kernels: Optional[LindbladKernels] = None) -> GgeState:
    if dt_scaled < 0:
        raise ValueError("dt_scaled must be nonnegative")
    if dt_scaled == 0:
        return state
    return state.evolved(state.n + dt_scaled * rate(state, kernels), dt_scaled)


def evolve(state: GgeState, t_end_scaled: float, dt_scaled: float,
           observer: Optional[Callable[[GgeState], None]] = None, stride: int = 1,
           kernels: Optional[LindbladKernels] = None) -> GgeState:
    """Euler propagation up to ``t_end_scaled``.

    All steps have length ``dt_scaled`` except the last one, which is shortened
    to land on ``t_end_scaled``.  ``observer`` is called after every
    ``stride``-th step and after the final step.
    """
    if t_end_scaled < state.clock - 1e-12:
        raise ValueError(f"t_end {t_end_scaled} lies before the state clock {state.clock}")
    if dt_scaled <= 0:
        raise ValueError("dt_scaled must be positive")
    kernels = _kernels_for(state, kernels)
    span = t_end_scaled - state.clock
    n_steps = max(0, int(np.ceil(span / dt_scaled - 1e-9)))
    start = state.clock
    for k in range(1, n_steps + 1):
        dt = dt_scaled if k < n_steps else span - (n_steps - 1) * dt_scaled
        state = euler_step(state, dt, kernels)
        if k == n_steps:
            # avoid accumulated float drift in the clock
            state = GgeState(state.table, state.n, start + span)
        if observer is not None and (k % stride == 0 or k == n_steps):
            observer(state)
    return state
