"""Momentum grids and Bogoliubov diagonalization of the transverse field Ising chain.

Two variants are supported:

* ``CONTINUOUS``: ``H = sum_j J sx_j sx_{j+1} + h sz_j`` with dispersion
  ``eps_q = 2 sqrt(J^2 + 2 h J cos q + h^2)``.
* ``FLOQUET``: the Trotterized propagator
  ``U = exp(-i pi J/2 sum sx sx) exp(-i pi h/2 sum sz)`` with quasi-energies
  ``cos eps_q = cos(pi J) cos(pi h) - sin(pi J) sin(pi h) cos q``.

Fermion conventions (used consistently by the oracle):
``sz_j = 2 c_j^+ c_j - 1``, ``c_j = exp(-i pi/4) / sqrt(L) sum_q exp(iqj) c_q`` and
``c_q = u_q d_q - conj(v_q) d_{-q}^+``.  Only the even-parity sector is
treated, whose momenta are ``2 pi (k + 1/2) / L``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Variant",
    "ModelParams",
    "MomentumGrid",
    "BogoliubovTable",
    "ChargeCoefficients",
    "GaplessModeError",
    "build_grid",
    "bogoliubov_coefficients",
    "bogoliubov_continuous",
    "bogoliubov_floquet",
    "bogoliubov_table",
    "floquet_block",
    "charge_coefficients",
]

GAP_TOL = 1e-12


class GaplessModeError(ValueError):
    """Raised when a grid momentum sits on a gapless (zero quasiparticle energy) point."""


class Variant(str, enum.Enum):
    CONTINUOUS = "continuous"
    FLOQUET = "floquet"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelParams:
    J: float
    h: float
    variant: Variant = Variant.CONTINUOUS

    def __post_init__(self):
        if not (np.isfinite(self.J) and np.isfinite(self.h)):
            raise ValueError(f"J and h must be finite, got J={self.J}, h={self.h}")
        object.__setattr__(self, "J", float(self.J))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "variant", Variant(self.variant))


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Even-sector momenta ``q_k = 2 pi (k + 1/2) / L``, strictly increasing in (0, 2 pi)."""

    L: int
    momenta: np.ndarray = field(repr=False)

    @property
    def inverse_index(self) -> np.ndarray:
        """Index of ``2 pi - q_k`` for every ``k``."""
        return self.L - 1 - np.arange(self.L)

    def shift_index(self) -> np.ndarray:
        """Index of ``q_k + pi (mod 2 pi)``; only defined for even ``L``."""
        if self.L % 2:
            raise ValueError("momentum shift by pi requires even L")
        return (np.arange(self.L) + self.L // 2) % self.L

    def same_as(self, other: "MomentumGrid") -> bool:
        return self is other or self.L == other.L


def build_grid(L: int) -> MomentumGrid:
    if int(L) != L or L < 2:
        raise ValueError(f"grid needs an integer L >= 2, got {L!r}")
    L = int(L)
    q = 2.0 * np.pi * (np.arange(L) + 0.5) / L
    return MomentumGrid(L, _readonly(q))


@dataclass(frozen=True, eq=False)
class BogoliubovTable:
    """Per-momentum dispersion and Bogoliubov coefficients.

    ``u`` is real and nonnegative; ``v`` is real for the continuous model and
    complex for the Floquet one.  ``e0 = -sum(eps)/2``.
    """

    params: ModelParams
    grid: MomentumGrid
    eps: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    e0: float = 0.0

    @property
    def variant(self) -> Variant:
        return self.params.variant

    @property
    def L(self) -> int:
        return self.grid.L

    @property
    def q(self) -> np.ndarray:
        return self.grid.momenta


def _rotation(a: np.ndarray, b: np.ndarray, xi: np.ndarray):
    """Bogoliubov pair ``((xi + a), b) / sqrt(2 xi (xi + a))`` evaluated without cancellation.

    For ``a < 0`` the identity ``xi + a = |b|^2 / (xi - a)`` is used.  On the
    singular locus ``b = 0`` this gives ``(1, 0)`` for ``a > 0`` and ``(0, 1)``
    for ``a < 0``; a fully degenerate block ``xi = 0`` gets ``(1, 0)``.
    """
    # a degenerate block (xi = 0) has no preferred rotation; use the identity
    flat = xi <= 0
    if np.any(flat):
        xi = np.where(flat, 1.0, xi)
        a = np.where(flat, 1.0, a)
        b = np.where(flat, 0.0, b)
    absb = np.abs(b)
    u = np.empty_like(xi)
    v = np.empty(xi.shape, dtype=np.result_type(b, float))
    pos = a >= 0
    # a >= 0: direct formula, xi + a >= xi > 0
    s = np.sqrt(2.0 * xi[pos] * (xi[pos] + a[pos]))
    u[pos] = (xi[pos] + a[pos]) / s
    v[pos] = b[pos] / s
    neg = ~pos
    xm = xi[neg] - a[neg]
    u[neg] = absb[neg] / np.sqrt(2.0 * xi[neg] * xm)
    bn, an = b[neg], absb[neg]
    phase = np.ones(bn.shape, dtype=v.dtype)
    nz = an > 0
    if np.iscomplexobj(phase):
        phase[nz] = np.exp(1j * np.angle(bn[nz]))
    else:
        phase[nz] = np.sign(bn[nz])
    v[neg] = phase * np.sqrt(xm / (2.0 * xi[neg]))
    return u, v


def bogoliubov_coefficients(params: ModelParams, q):
    """Return ``(eps, u, v)`` at arbitrary momenta ``q`` (array-like).

    No gap check is made here; see :func:`bogoliubov_continuous` and
    :func:`bogoliubov_floquet` for the grid-level builders that reject gapless modes.
    """
    q = np.asarray(q, dtype=float)
    J, h = params.J, params.h
    if params.variant is Variant.CONTINUOUS:
        a = 2.0 * (J * np.cos(q) + h)
        b = -2.0 * J * np.sin(q)
        eps = np.hypot(a, b)
        u, v = _rotation(np.atleast_1d(a), np.atleast_1d(b), np.atleast_1d(eps))
        return eps, u.reshape(q.shape), v.reshape(q.shape)
    sJ, cJ = np.sin(np.pi * J), np.cos(np.pi * J)
    sH, cH = np.sin(np.pi * h), np.cos(np.pi * h)
    cos_eps = cJ * cH - sJ * sH * np.cos(q)
    a = sJ * cH * np.cos(q) + cJ * sH
    b = -np.exp(-1j * np.pi * h) * sJ * np.sin(q)
    xi = np.sqrt(a * a + np.abs(b) ** 2)
    # xi = sin(eps) exactly, so atan2 is the principal arccos without its
    # loss of precision near eps = 0 and eps = pi
    eps = np.arctan2(xi, cos_eps)
    u, v = _rotation(np.atleast_1d(a), np.atleast_1d(b), np.atleast_1d(xi))
    return eps, u.reshape(q.shape), v.reshape(q.shape)


def bogoliubov_continuous(params: ModelParams, grid: MomentumGrid) -> BogoliubovTable:
    if params.variant is not Variant.CONTINUOUS:
        raise ValueError("bogoliubov_continuous needs a continuous-time ModelParams")
    eps, u, v = bogoliubov_coefficients(params, grid.momenta)
    scale = max(abs(params.J), abs(params.h), 1.0)
    bad = np.flatnonzero(eps <= GAP_TOL * scale)
    if bad.size:
        raise GaplessModeError(
            f"gapless mode at q={grid.momenta[bad[0]]:.17g} for J={params.J}, h={params.h}"
        )
    return BogoliubovTable(params, grid, _readonly(eps), _readonly(u), _readonly(v),
                           float(-0.5 * eps.sum()))


def bogoliubov_floquet(params: ModelParams, grid: MomentumGrid) -> BogoliubovTable:
    if params.variant is not Variant.FLOQUET:
        raise ValueError("bogoliubov_floquet needs a Floquet ModelParams")
    eps, u, v = bogoliubov_coefficients(params, grid.momenta)
    # sin(eps) == xi; cos(eps) = +-1 means a degenerate Floquet block
    bad = np.flatnonzero(np.sin(eps) < GAP_TOL)
    if bad.size:
        raise GaplessModeError(
            f"gapless Floquet mode at q={grid.momenta[bad[0]]:.17g} for J={params.J}, h={params.h}"
        )
    return BogoliubovTable(params, grid, _readonly(eps), _readonly(u), _readonly(v),
                           float(-0.5 * eps.sum()))


def bogoliubov_table(params: ModelParams, grid: MomentumGrid) -> BogoliubovTable:
    """Dispatch on ``params.variant``."""
    if params.variant is Variant.CONTINUOUS:
        return bogoliubov_continuous(params, grid)
    return bogoliubov_floquet(params, grid)


def floquet_block(params: ModelParams, q: float):
    """2x2 generators ``(X_q, Z_q)`` of one momentum block of the Trotter step.

    The block propagator is ``expm(-1j X_q) @ expm(-1j Z_q)`` acting on the
    bispinor ``(c_q, c_{-q}^+)``.
    """
    c, s = np.cos(q), np.sin(q)
    X = np.pi * params.J * np.array([[c, -s], [-s, -c]], dtype=complex)
    Z = np.pi * params.h * np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    return X, Z


@dataclass(frozen=True, eq=False)
class ChargeCoefficients:
    """Coefficients ``c_q`` of a local conserved charge ``C_i = sum_q c_q n_q``."""

    index: int
    coeffs: np.ndarray = field(repr=False)
    grid: MomentumGrid = field(repr=False, default=None)

    @property
    def is_odd(self) -> bool:
        return self.index % 2 == 1


def charge_coefficients(table: BogoliubovTable, index: int) -> ChargeCoefficients:
    """``C_{2l}: cos(q l) eps_q`` and ``C_{2l-1}: 2 J sin(q l)``; ``C_0`` is the Hamiltonian."""
    if index < 0:
        raise ValueError(f"charge index must be >= 0, got {index}")
    q = table.q
    if index % 2 == 0:
        ell = index // 2
        c = np.cos(q * ell) * table.eps
    else:
        ell = (index + 1) // 2
        c = 2.0 * table.params.J * np.sin(q * ell)
    return ChargeCoefficients(index, _readonly(c), table.grid)
