"""Per-cycle occupation update of the Floquet chain coupled to periodically reset ancillas.

Each cycle consists of ``T`` Trotter steps with system-ancilla couplings
``lambda_tau`` followed by a reset of every ancilla to spin down.  To second
order in ``lambda`` the cycle acts on a GGE through

.. math::

    \\Delta n_q = \\frac{2}{L} \\sum_{q'} g^s_{q,q'} [(1-n_q) n_{q'} a(\\tilde\\varepsilon_{q'}-\\tilde\\varepsilon_q)
        - n_q (1-n_{q'}) a(\\tilde\\varepsilon_q-\\tilde\\varepsilon_{q'})]
        + g^{ca}_{q,q'} [(1-n_q)(1-n_{q'}) a(-\\tilde\\varepsilon_{q'}-\\tilde\\varepsilon_q)
        - n_q n_{q'} a(\\tilde\\varepsilon_{q'}+\\tilde\\varepsilon_q)]

where ``a`` is the ancilla spectral function :func:`a_omega`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .gge import GgeState
from .lindblad_kernel import FactorizedKernel
from .model import BogoliubovTable, ModelParams, Variant, bogoliubov_coefficients

__all__ = [
    "ResetParams",
    "ResetKernels",
    "a_omega",
    "a_omega_constant",
    "kernel_gs",
    "kernel_gca",
    "reset_kernels",
    "cycle_rate",
    "cycle_rate_direct",
    "evolve_cycles",
]

RESONANCE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ResetParams:
    """Ancilla field ``h_A``, cycle length ``T`` and coupling schedule ``lambdas[tau-1]``."""

    h_A: float
    T: int
    lambdas: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T!r}")
        lam = np.array(self.lambdas, dtype=float).reshape(-1)
        if lam.shape != (int(self.T),):
            raise ValueError(f"need {int(self.T)} couplings, got {lam.size}")
        if not np.all(np.isfinite(lam)) or not np.isfinite(self.h_A):
            raise ValueError("h_A and the couplings must be finite")
        lam.setflags(write=False)
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "h_A", float(self.h_A))
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def constant(cls, h_A: float, T: int, lam: float) -> "ResetParams":
        return cls(h_A, T, np.full(int(T), float(lam)))

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.lambdas == self.lambdas[0]))

    def __repr__(self) -> str:
        lam = f"{self.lambdas[0]:g}" if self.is_constant else "varying"
        return f"ResetParams(h_A={self.h_A:g}, T={self.T}, lambda={lam})"

    def autocorrelation(self) -> np.ndarray:
        """``c_m = sum_{tau - tau' = m} lambda_tau lambda_tau'`` for ``m = -(T-1) .. T-1``."""
        return np.correlate(self.lambdas, self.lambdas, mode="full")


def a_omega(omega, params: ResetParams) -> np.ndarray:
    """``|sum_tau lambda_tau exp(i tau (omega - pi h_A))|^2`` by direct summation."""
    omega = np.asarray(omega, dtype=float)
    tau = np.arange(1, params.T + 1)
    y = omega[..., None] - np.pi * params.h_A
    amp = np.exp(1j * tau * y) @ params.lambdas
    return np.abs(amp) ** 2


def a_omega_constant(omega, params: ResetParams) -> np.ndarray:
    """Closed form ``lambda^2 sin^2(T y/2) / sin^2(y/2)`` for a constant schedule.

    Near the resonance ``y = 0 (mod 2 pi)`` the ratio is replaced by its
    Taylor expansion to keep full precision.
    """
    if not params.is_constant:
        raise ValueError("closed form needs a constant coupling schedule")
    T, lam2 = params.T, params.lambdas[0] ** 2
    half = 0.5 * (np.asarray(omega, dtype=float) - np.pi * params.h_A)
    # the ratio has period pi in the half angle
    delta = half - np.pi * np.round(half / np.pi)
    s = np.sin(delta)
    small = np.abs(s) < RESONANCE_TOL
    safe = np.where(small, 1.0, s)
    ratio = np.where(small, T**2 * (1.0 - (T**2 - 1) * delta**2 / 3.0),
                     (np.sin(T * delta) / safe) ** 2)
    return lam2 * ratio


def _gs(q, u, v, qp, up, vp):
    return (1 + np.cos(q + qp)) * np.abs(up * u - np.conj(vp) * v) ** 2


def _gca(q, u, v, qp, up, vp):
    return (1 + np.cos(qp - q)) * np.abs(up * v - vp * u) ** 2


def _pointwise(f, q, qp, params: ModelParams):
    if params.variant is not Variant.FLOQUET:
        raise ValueError("reset kernels need Floquet parameters")
    q, qp = np.broadcast_arrays(np.asarray(q, float), np.asarray(qp, float))
    _, u, v = bogoliubov_coefficients(params, q)
    _, up, vp = bogoliubov_coefficients(params, qp)
    return f(q, u, v, qp, up, vp)


def kernel_gs(q, qp, params: ModelParams):
    """``(1 + cos(q + q')) |u_q' u_q - conj(v_q') v_q|^2``."""
    return _pointwise(_gs, q, qp, params)


def kernel_gca(q, qp, params: ModelParams):
    """``(1 + cos(q' - q)) |u_q' v_q - v_q' u_q|^2``; vanishes on the diagonal."""
    return _pointwise(_gca, q, qp, params)


def _check_floquet(table: BogoliubovTable):
    if table.variant is not Variant.FLOQUET:
        raise ValueError("cycle rates need a Floquet Bogoliubov table")


def kernel_matrices(table: BogoliubovTable):
    """Dense ``(g^s, g^ca)`` indexed ``[q, q']``."""
    _check_floquet(table)
    q, u, v = table.q, table.u, table.v
    args = (q[:, None], u[:, None], v[:, None], q[None, :], u[None, :], v[None, :])
    return _gs(*args), _gca(*args)


@dataclass(frozen=True, eq=False)
class ResetKernels:
    """Separable forms of the four products ``g * a`` entering the cycle rate.

    ``gain_s[q, q'] = g^s a(e_q' - e_q)``, ``loss_s = g^s a(e_q - e_q')``,
    ``create = g^ca a(-e_q' - e_q)`` and ``annihilate = g^ca a(e_q' + e_q)``.
    """

    table: BogoliubovTable
    params: ResetParams
    gain_s: FactorizedKernel
    loss_s: FactorizedKernel
    create: FactorizedKernel
    annihilate: FactorizedKernel


def reset_kernels(table: BogoliubovTable, params: ResetParams) -> ResetKernels:
    """Build the rank ``12 (2T - 1)`` separable kernels used by :func:`cycle_rate`."""
    _check_floquet(table)
    q, u, v, e = table.q, table.u.astype(complex), table.v, table.eps
    one = np.ones_like(u)
    eiq = np.exp(1j * q)
    # 1 + cos(q + q') and 1 + cos(q' - q) as sums of products
    pre_s = FactorizedKernel(np.array([one, 0.5 * eiq, 0.5 * eiq.conj()]),
                             np.array([one, eiq, eiq.conj()]))
    pre_ca = FactorizedKernel(np.array([one, 0.5 * eiq.conj(), 0.5 * eiq]),
                              np.array([one, eiq, eiq.conj()]))
    u2, v2 = u * u, np.abs(v) ** 2 + 0j
    uv, uvc = u * v, u * np.conj(v)
    mod_s = FactorizedKernel(np.array([u2, uvc, uv, v2]),
                             np.array([u2, -uv, -uvc, v2]))
    mod_ca = FactorizedKernel(np.array([v2, uv, uvc, u2]),
                              np.array([u2, -uvc, -uv, v2]))
    # a(x) = sum_m c_m exp(i m (x - pi h_A))
    m = np.arange(-(params.T - 1), params.T)
    cm = params.autocorrelation() * np.exp(-1j * np.pi * params.h_A * m)
    ph = np.exp(1j * np.outer(m, e))

    def spectral(sign_q: int, sign_qp: int) -> FactorizedKernel:
        left = cm[:, None] * (ph if sign_q > 0 else ph.conj())
        right = ph if sign_qp > 0 else ph.conj()
        return FactorizedKernel(left, right)

    gs, gca = pre_s * mod_s, pre_ca * mod_ca
    return ResetKernels(
        table,
        params,
        gain_s=gs * spectral(-1, +1),
        loss_s=gs * spectral(+1, -1),
        create=gca * spectral(-1, -1),
        annihilate=gca * spectral(+1, +1),
    )


def _kernels_for(state: GgeState, params: ResetParams,
                 kernels: Optional[ResetKernels]) -> ResetKernels:
    if kernels is None:
        return reset_kernels(state.table, params)
    if not kernels.table.grid.same_as(state.table.grid):
        raise ValueError("kernels and state live on different grids")
    if kernels.params is not params:
        raise ValueError("kernels were built for different reset parameters")
    return kernels


def cycle_rate_from_occupations(n: np.ndarray, kernels: ResetKernels) -> np.ndarray:
    m = 1.0 - n
    total = (m * kernels.gain_s.contract(n) - n * kernels.loss_s.contract(m)
             + m * kernels.create.contract(m) - n * kernels.annihilate.contract(n))
    return (2.0 / n.shape[0]) * total.real


def cycle_rate(state: GgeState, params: ResetParams,
               kernels: Optional[ResetKernels] = None) -> np.ndarray:
    """Change of every ``<n_q>`` over one reset cycle, in O(T L)."""
    _check_floquet(state.table)
    return cycle_rate_from_occupations(state.n, _kernels_for(state, params, kernels))


def cycle_rate_direct(state: GgeState, params: ResetParams) -> np.ndarray:
    """Reference O(L^2) double sum with the spectral function evaluated pairwise."""
    gs, gca = kernel_matrices(state.table)
    e = state.table.eps
    n = state.n[:, None]
    npr = state.n[None, :]
    d = e[None, :] - e[:, None]
    s = e[None, :] + e[:, None]
    terms = (gs * ((1 - n) * npr * a_omega(d, params) - n * (1 - npr) * a_omega(-d, params))
             + gca * ((1 - n) * (1 - npr) * a_omega(-s, params) - n * npr * a_omega(s, params)))
    return 2.0 / state.L * terms.sum(axis=1)


def evolve_cycles(state: GgeState, params: ResetParams, n_cycles: int,
                  observer: Optional[Callable[[GgeState], None]] = None,
                  kernels: Optional[ResetKernels] = None) -> GgeState:
    """Apply ``n_cycles`` clamped cycle updates; ``observer`` sees the state after each."""
    if int(n_cycles) != n_cycles or n_cycles < 0:
        raise ValueError(f"n_cycles must be a nonnegative integer, got {n_cycles!r}")
    kernels = _kernels_for(state, params, kernels)
    for _ in range(int(n_cycles)):
        state = state.evolved(state.n + cycle_rate_from_occupations(state.n, kernels), 1)
        if observer is not None:
            observer(state)
    return state
