"""Generalized Gibbs ensemble states of the Ising chain and their observables.

A state stores the mode occupations ``<n_q>``; the Lagrange multipliers
``mu_q = ln((1 - n_q) / n_q)`` are derived on demand.  Occupations are kept
inside ``[DELTA, 1 - DELTA]`` so that ``mu`` stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import BogoliubovTable, ChargeCoefficients

__all__ = [
    "DELTA",
    "NOISE_FLOOR",
    "GgeState",
    "CorrelatorSeries",
    "occupations_from_multipliers",
    "multipliers_from_occupations",
    "clamp",
    "susceptibility",
    "charge_expectation",
    "two_point_functions",
    "string_correlator",
    "correlator_series",
    "fit_correlation_length",
]

DELTA = 1e-12
NOISE_FLOOR = 1e-12


def clamp(n: np.ndarray) -> np.ndarray:
    return np.clip(n, DELTA, 1.0 - DELTA)


def occupations_from_multipliers(mu) -> np.ndarray:
    """Fermi function ``exp(-mu) / (1 + exp(-mu))``, clamped to ``[DELTA, 1 - DELTA]``."""
    mu = np.asarray(mu, dtype=float)
    # 0.5 (1 - tanh(mu/2)) is the overflow-free form of the Fermi function
    return clamp(0.5 * (1.0 - np.tanh(0.5 * mu)))


def multipliers_from_occupations(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return np.log1p(-n) - np.log(n)


@dataclass(frozen=True, eq=False)
class GgeState:
    """Occupations on a Bogoliubov table plus a clock.

    ``clock`` is the scaled time ``eps * t`` for the continuous model and the
    number of completed reset cycles for the Floquet protocol.
    """

    table: BogoliubovTable
    n: np.ndarray = field(repr=False)
    clock: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        if n.shape != (self.table.L,):
            raise ValueError(f"occupations have shape {n.shape}, expected ({self.table.L},)")
        n = clamp(n)
        n.setflags(write=False)
        object.__setattr__(self, "n", n)

    @classmethod
    def from_multipliers(cls, table, mu, clock=0.0) -> "GgeState":
        return cls(table, occupations_from_multipliers(mu), clock)

    @classmethod
    def thermal(cls, table, beta: float) -> "GgeState":
        return cls.from_multipliers(table, beta * table.eps)

    @classmethod
    def infinite_temperature(cls, table) -> "GgeState":
        return cls(table, np.full(table.L, 0.5))

    @classmethod
    def ground(cls, table) -> "GgeState":
        return cls(table, np.full(table.L, DELTA))

    @property
    def mu(self) -> np.ndarray:
        return multipliers_from_occupations(self.n)

    @property
    def L(self) -> int:
        return self.table.L

    def evolved(self, n, dclock) -> "GgeState":
        return replace(self, n=n, clock=self.clock + dclock)


def susceptibility(state: GgeState) -> np.ndarray:
    """Diagonal of ``<n_q n_q'> - <n_q><n_q'>``, i.e. ``n_q (1 - n_q)``."""
    return state.n * (1.0 - state.n)


def charge_expectation(state: GgeState, coeffs: ChargeCoefficients) -> float:
    """Per-site charge ``(1/L) sum_q c_q <n_q>``.

    Even charges are reported relative to their infinite-temperature value.
    """
    if coeffs.coeffs.shape != state.n.shape or (
        coeffs.grid is not None and not coeffs.grid.same_as(state.table.grid)
    ):
        raise ValueError("charge coefficients were built on a different grid")
    n = state.n if coeffs.is_odd else state.n - 0.5
    return float(np.dot(coeffs.coeffs, n) / state.L)


def _mode_pair_expectations(state: GgeState):
    """Return ``(<c_q^+ c_q>, <c_q c_{-q}>)`` for every grid momentum."""
    t = state.table
    m = t.grid.inverse_index
    u, v, n = t.u, t.v, state.n
    normal = u**2 * n + np.abs(v) ** 2 * (1.0 - n[m])
    anomalous = -u * np.conj(v[m]) * (1.0 - n) - np.conj(v) * u[m] * n[m]
    return normal, anomalous


def two_point_functions(state: GgeState, ells):
    """Real-space ``G(l) = <c_i^+ c_{i+l}>`` and ``F(l) = <c_i c_{i+l}>`` for integer ``l``."""
    ells = np.asarray(ells)
    q = state.table.q
    normal, anomalous = _mode_pair_expectations(state)
    phase = np.exp(1j * np.outer(ells, q))
    G = phase @ normal / state.L
    F = -1j * (np.conj(phase) @ anomalous) / state.L
    return G, F


def _strings(state: GgeState, kind: str, ells: np.ndarray) -> np.ndarray:
    if kind not in ("xx", "yy"):
        raise ValueError(f"kind must be 'xx' or 'yy', got {kind!r}")
    G, F = two_point_functions(state, np.concatenate([ells, -ells]))
    k = len(ells)
    Gp, Gm, Fp, Fm = G[:k], G[k:], F[:k], F[k:]
    sign = (-1.0) ** ells
    if kind == "xx":
        # (-1)^(l+1) (c_i^+ - c_i)(c_j + c_j^+)
        val = -sign * (Gp + Gm + np.conj(Fm) - Fp)
    else:
        # (-1)^l (c_i^+ + c_i)(c_j^+ - c_j)
        val = sign * (np.conj(Fm) - Gp - Gm - Fp)
    return val.real


def string_correlator(state: GgeState, kind: str, ell: int) -> float:
    """``<sa_i sz_{i+1} ... sz_{i+l-1} sb_{i+l}>`` for ``kind`` in ``{'xx', 'yy'}``.

    The string reduces to a Majorana bilinear, so the value is a single
    momentum sum over the Gaussian state.
    """
    if not 1 <= ell <= state.L // 2:
        raise ValueError(f"ell must lie in [1, {state.L // 2}], got {ell}")
    return float(_strings(state, kind, np.array([int(ell)]))[0])


@dataclass(frozen=True)
class CorrelatorSeries:
    kind: str
    ells: np.ndarray
    values: np.ndarray

    def scaled(self, c: float) -> "CorrelatorSeries":
        return CorrelatorSeries(self.kind, self.ells, c * self.values)


def correlator_series(state: GgeState, kind: str, ell_max: int) -> CorrelatorSeries:
    if not 1 <= ell_max <= state.L // 2:
        raise ValueError(f"ell_max must lie in [1, {state.L // 2}], got {ell_max}")
    ells = np.arange(1, ell_max + 1)
    return CorrelatorSeries(kind, ells, _strings(state, kind, ells))


def fit_correlation_length(series: CorrelatorSeries, ell_min: int = 2, ell_max: int = 20) -> float:
    """Least-squares fit of ``ln|value|`` against ``l``; returns ``-1/slope``.

    Only points in ``[ell_min, ell_max]`` above the noise floor take part.
    """
    ells = np.asarray(series.ells)
    vals = np.abs(np.asarray(series.values))
    keep = (ells >= ell_min) & (ells <= ell_max) & (vals > NOISE_FLOOR)
    if keep.sum() < 3:
        raise ValueError(
            f"need at least 3 points above {NOISE_FLOOR:g} in [{ell_min}, {ell_max}], "
            f"found {int(keep.sum())}"
        )
    x, y = ells[keep].astype(float), np.log(vals[keep])
    slope = np.polyfit(x, y, 1)[0]
    if slope >= 0:
        raise ValueError(f"correlations do not decay (slope {slope:.3g})")
    return float(-1.0 / slope)
