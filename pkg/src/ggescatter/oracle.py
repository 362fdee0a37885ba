"""Exact dense reference for small chains.

Basis conventions: qubit 0 is the leftmost tensor factor, ``|0>`` is spin up
(``sz = +1``) and corresponds to an occupied Jordan-Wigner fermion.  In the
reset protocol system and ancilla qubits are interleaved, so system site
``j`` is qubit ``2j`` and its ancilla is qubit ``2j + 1``.

Operators are built as ``scipy.sparse`` matrices; density matrices are dense
``numpy`` arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .model import BogoliubovTable, ModelParams, Variant
from .reset_kernel import ResetParams

__all__ = [
    "OracleError",
    "LindbladSpec",
    "ResetCircuit",
    "site_operator",
    "annihilation_operators",
    "build_tfim_sparse",
    "build_tfim_dense",
    "jump_operators",
    "lindblad_spec",
    "default_rk4_step",
    "lindblad_evolve",
    "reset_circuit",
    "reset_circuit_cycle",
    "attach_ancillas",
    "trace_out_ancillas",
    "mode_number_operators",
    "mode_occupations_exact",
    "gge_density_matrix",
    "thermal_density_matrix",
    "ground_state_density_matrix",
    "infinite_temperature",
    "parity_diagonal",
    "string_operator",
    "expectation",
    "check_density_matrix",
]

log = logging.getLogger(__name__)

MAX_SITES = 12

_SX = sp.csr_matrix(np.array([[0, 1], [1, 0]], dtype=complex))
_SY = sp.csr_matrix(np.array([[0, -1j], [1j, 0]], dtype=complex))
_SZ = sp.csr_matrix(np.array([[1, 0], [0, -1]], dtype=complex))
_SPLUS = sp.csr_matrix(np.array([[0, 1], [0, 0]], dtype=complex))
_SMINUS = _SPLUS.T.tocsr()
_PAULI = {"x": _SX, "y": _SY, "z": _SZ, "+": _SPLUS, "-": _SMINUS}


class OracleError(RuntimeError):
    """Numerical failure inside the dense reference (e.g. trace drift)."""


def _kron_all(ops: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), ops)


def site_operator(op, j: int, n: int) -> sp.csr_matrix:
    """Embed the single-qubit ``op`` (a Pauli label or 2x2 matrix) on qubit ``j`` of ``n``."""
    if isinstance(op, str):
        op = _PAULI[op]
    ops = [sp.identity(2, dtype=complex, format="csr")] * n
    ops[j] = sp.csr_matrix(op)
    return _kron_all(ops)


def _check_size(L: int, limit: int = MAX_SITES):
    if int(L) != L or not 2 <= L <= limit:
        raise ValueError(f"dense oracle supports 2 <= L <= {limit}, got {L!r}")


def annihilation_operators(L: int) -> List[sp.csr_matrix]:
    """Jordan-Wigner ``c_j = prod_{l<j}(-sz_l) s-_j``."""
    _check_size(L)
    I2 = sp.identity(2, dtype=complex, format="csr")
    return [_kron_all([-_SZ] * j + [_SMINUS] + [I2] * (L - j - 1)) for j in range(L)]


def build_tfim_sparse(J: float, h: float, L: int) -> sp.csr_matrix:
    """``sum_j J sx_j sx_{j+1} + h sz_j`` with a periodic bond."""
    _check_size(L)
    dim = 2**L
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(L):
        H = H + J * (site_operator("x", j, L) @ site_operator("x", (j + 1) % L, L))
        H = H + h * site_operator("z", j, L)
    return H.tocsr()


def build_tfim_dense(J: float, h: float, L: int) -> np.ndarray:
    return build_tfim_sparse(J, h, L).toarray()


def jump_operators(L: int) -> List[sp.csr_matrix]:
    """``L_j = S+_j S-_{j+1} + S^z_j + 1/2`` on every site, periodic."""
    _check_size(L)
    ident = sp.identity(2**L, dtype=complex, format="csr")
    out = []
    for j in range(L):
        hop = site_operator("+", j, L) @ site_operator("-", (j + 1) % L, L)
        out.append((hop + 0.5 * site_operator("z", j, L) + 0.5 * ident).tocsr())
    return out


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    """Generator ``-i[H, rho] + eps sum_j (L_j rho L_j^+ - {L_j^+ L_j, rho}/2)``."""

    hamiltonian: sp.csr_matrix = field(repr=False)
    jumps: List[sp.csr_matrix] = field(repr=False)
    epsilon: float = 0.0

    def __post_init__(self):
        H = self.hamiltonian
        if H.shape[0] != H.shape[1] or abs(H - H.getH()).max() > 1e-12:
            raise ValueError("hamiltonian must be square and Hermitian")
        L = int(round(np.log2(H.shape[0])))
        if 2**L != H.shape[0] or len(self.jumps) != L:
            raise ValueError(f"need one jump operator per site ({L}), got {len(self.jumps)}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def n_sites(self) -> int:
        return len(self.jumps)

    def superoperator(self) -> sp.csr_matrix:
        """Generator acting on the row-major vectorization ``rho.reshape(-1)``."""
        H, eps = self.hamiltonian, self.epsilon
        dim = H.shape[0]
        ident = sp.identity(dim, dtype=complex, format="csr")
        decay = sum((Lj.getH() @ Lj for Lj in self.jumps), sp.csr_matrix((dim, dim), dtype=complex))
        heff = (H - 0.5j * eps * decay).tocsr()
        sup = -1j * sp.kron(heff, ident) + 1j * sp.kron(ident, heff.conj())
        if eps:
            for Lj in self.jumps:
                sup = sup + eps * sp.kron(Lj, Lj.conj())
        return sup.tocsr()


def lindblad_spec(params: ModelParams, L: int, epsilon: float) -> LindbladSpec:
    if params.variant is not Variant.CONTINUOUS:
        raise ValueError("the Lindblad oracle needs continuous-time parameters")
    return LindbladSpec(build_tfim_sparse(params.J, params.h, L), jump_operators(L), float(epsilon))


def _norm1(A: sp.spmatrix) -> float:
    return float(abs(A).sum(axis=0).max())


def default_rk4_step(spec: LindbladSpec) -> float:
    """``min(0.01, 0.5 / (2 ||H||_1 + 2 eps sum_j ||L_j||_1^2))``; keeps RK4 well inside its stability region."""
    bound = 2.0 * _norm1(spec.hamiltonian) + 2.0 * spec.epsilon * sum(_norm1(Lj) ** 2 for Lj in spec.jumps)
    return min(0.01, 0.5 / bound)


def lindblad_evolve(rho: np.ndarray, spec: LindbladSpec, t_end: float, dt: Optional[float] = None,
                    observer: Optional[Callable[[float, np.ndarray], None]] = None,
                    observe_every: float = 0.0, drift_tol: float = 1e-8) -> np.ndarray:
    """Classical RK4 integration of the master equation up to physical time ``t_end``.

    The step count is ``ceil(t_end / dt)`` with ``dt`` shrunk to divide
    ``t_end`` evenly.  ``rho`` is Hermitized after every step.  ``observer(t,
    rho)`` runs at ``t = 0``, then whenever at least ``observe_every`` time
    has passed since the last call, and at ``t_end``.

    Raises
    ------
    OracleError
        If the trace drifts by more than ``drift_tol``.
    """
    rho = np.array(rho, dtype=complex)
    dim = spec.hamiltonian.shape[0]
    if rho.shape != (dim, dim):
        raise ValueError(f"rho has shape {rho.shape}, expected {(dim, dim)}")
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if observer is not None:
        observer(0.0, rho)
    if t_end == 0:
        return rho
    dt = default_rk4_step(spec) if dt is None else float(dt)
    n_steps = int(np.ceil(t_end / dt - 1e-9))
    dt = t_end / n_steps
    sup = spec.superoperator()
    tr0 = np.trace(rho).real
    x = rho.reshape(-1)
    last_obs = 0.0
    for k in range(1, n_steps + 1):
        k1 = sup @ x
        k2 = sup @ (x + 0.5 * dt * k1)
        k3 = sup @ (x + 0.5 * dt * k2)
        k4 = sup @ (x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        r = x.reshape(dim, dim)
        x = (0.5 * (r + r.conj().T)).reshape(-1)
        t = k * dt
        if observer is not None and (t - last_obs >= observe_every - 1e-12 or k == n_steps):
            observer(t, x.reshape(dim, dim))
            last_obs = t
    rho = x.reshape(dim, dim)
    drift = abs(np.trace(rho).real - tr0)
    if not (drift <= drift_tol and np.all(np.isfinite(x))):
        raise OracleError(f"trace drifted by {drift:.3e} over {n_steps} RK4 steps of dt={dt:.3g}")
    return rho


def _coupling_exponential(G: sp.csr_matrix, lam: float) -> np.ndarray:
    """``exp(-i lam G)`` for ``G^3 = G``."""
    G2 = G @ G
    ident = sp.identity(G.shape[0], dtype=complex, format="csr")
    return (ident - 1j * np.sin(lam) * G + (np.cos(lam) - 1.0) * G2).toarray()


@dataclass(frozen=True, eq=False)
class ResetCircuit:
    """Precomputed unitary of one reset cycle on ``2 L_sys`` interleaved qubits."""

    n_sys: int
    params: ResetParams
    unitary: np.ndarray = field(repr=False)
    embed: np.ndarray = field(repr=False)

    def cycle(self, rho_sys: np.ndarray) -> np.ndarray:
        return reset_circuit_cycle(rho_sys, self)


def _ancilla_down_indices(n_sys: int) -> np.ndarray:
    """Full-register index of every system basis state with all ancillas down (bit 1)."""
    idx = np.zeros(2**n_sys, dtype=np.int64)
    for i in range(2**n_sys):
        b = 0
        for j in range(n_sys):
            bit = (i >> (n_sys - 1 - j)) & 1
            b = (b << 2) | (bit << 1) | 1
        idx[i] = b
    return idx


def reset_circuit(params: ModelParams, reset: ResetParams, n_sys: int) -> ResetCircuit:
    """Build the cycle unitary ``prod_tau [U_SA(lambda_tau) U_A U_S]`` (first step rightmost).

    ``U_S = exp(-i pi J/2 sum sx sx) exp(-i pi h/2 sum sz)`` on the system,
    ``U_A = exp(-i pi h_A/2 sum sz)`` on the ancillas and
    ``U_SA = prod_j exp(-i lambda Q_j sx~_j)`` with ``j`` ascending (rightmost
    factor first), ``Q_j = S+_j S-_{j+1} + S-_j S+_{j+1}``.
    """
    _check_size(n_sys, limit=6)
    nq = 2 * n_sys
    S = lambda op, j: site_operator(op, 2 * j, nq)
    A = lambda op, j: site_operator(op, 2 * j + 1, nq)
    XX = sum(S("x", j) @ S("x", (j + 1) % n_sys) for j in range(n_sys))
    Zs = sum(S("z", j) for j in range(n_sys))
    Za = sum(A("z", j) for j in range(n_sys))
    # all three generators are diagonal or two-local commuting sums; expm is exact
    U0 = (sla.expm(-0.5j * np.pi * reset.h_A * Za.toarray())
          @ sla.expm(-0.5j * np.pi * params.J * XX.toarray())
          @ sla.expm(-0.5j * np.pi * params.h * Zs.toarray()))
    G = []
    for j in range(n_sys):
        k = (j + 1) % n_sys
        Q = S("+", j) @ S("-", k) + S("-", j) @ S("+", k)
        G.append((Q @ A("x", j)).tocsr())
    W = np.eye(2**nq, dtype=complex)
    for lam in reset.lambdas:
        step = U0
        for Gj in G:
            step = _coupling_exponential(Gj, lam) @ step
        W = step @ W
    return ResetCircuit(n_sys, reset, W, _ancilla_down_indices(n_sys))


def attach_ancillas(rho_sys: np.ndarray, n_sys: int) -> np.ndarray:
    """``rho_sys`` tensored with all ancillas down, in interleaved order."""
    idx = _ancilla_down_indices(n_sys)
    out = np.zeros((4**n_sys, 4**n_sys), dtype=complex)
    out[np.ix_(idx, idx)] = rho_sys
    return out


def trace_out_ancillas(rho_full: np.ndarray, n_sys: int) -> np.ndarray:
    t = rho_full.reshape([2, 2] * n_sys + [2, 2] * n_sys)
    # axes (s0, a0, s1, a1, ...) for rows then columns; contract a_j row with a_j column
    nq = 2 * n_sys
    rows = list(range(nq))
    cols = list(range(nq, 2 * nq))
    for j in range(n_sys):
        cols[2 * j + 1] = rows[2 * j + 1]
    out = [rows[2 * j] for j in range(n_sys)] + [cols[2 * j] for j in range(n_sys)]
    res = np.einsum(t, rows + cols, out)
    return res.reshape(2**n_sys, 2**n_sys)


def reset_circuit_cycle(rho_sys: np.ndarray, circuit: ResetCircuit) -> np.ndarray:
    """One cycle: attach down ancillas, evolve with the cycle unitary, trace ancillas out."""
    dim = 2**circuit.n_sys
    if rho_sys.shape != (dim, dim):
        raise ValueError(f"rho has shape {rho_sys.shape}, expected {(dim, dim)}")
    M = circuit.unitary[:, circuit.embed]
    full = M @ rho_sys @ M.conj().T
    out = trace_out_ancillas(full, circuit.n_sys)
    return 0.5 * (out + out.conj().T)


def mode_annihilation_operators(table: BogoliubovTable) -> List[sp.csr_matrix]:
    """``d_q = conj(u_q) c_q + conj(v_q) c_{-q}^+`` with ``c_q = e^{i pi/4}/sqrt(L) sum_j e^{-iqj} c_j``."""
    L = table.L
    _check_size(L, limit=10)
    c = annihilation_operators(L)
    q = table.q
    cq = [sum((np.exp(0.25j * np.pi - 1j * qk * j) / np.sqrt(L)) * c[j] for j in range(L)) for qk in q]
    inv = table.grid.inverse_index
    return [(np.conj(table.u[k]) * cq[k] + np.conj(table.v[k]) * cq[inv[k]].getH()).tocsr()
            for k in range(L)]


def mode_number_operators(table: BogoliubovTable) -> List[sp.csr_matrix]:
    return [(d.getH() @ d).tocsr() for d in mode_annihilation_operators(table)]


def expectation(op, rho: np.ndarray) -> complex:
    """``Tr[op rho]`` without forming the product."""
    if sp.issparse(op):
        op = op.tocsr()
        return complex(op.multiply(rho.T).sum())
    return complex(np.einsum("ij,ji->", op, rho))


def mode_occupations_exact(rho: np.ndarray, table: BogoliubovTable,
                           number_ops: Optional[List[sp.csr_matrix]] = None) -> np.ndarray:
    if rho.shape != (2**table.L, 2**table.L):
        raise ValueError(f"rho has shape {rho.shape}, expected a {table.L}-site density matrix")
    ops = mode_number_operators(table) if number_ops is None else number_ops
    return np.array([expectation(n, rho).real for n in ops])


def _gibbs(Hmat: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(Hmat)
    p = np.exp(-(w - w.min()))
    rho = (V * (p / p.sum())) @ V.conj().T
    return 0.5 * (rho + rho.conj().T)


def gge_density_matrix(table: BogoliubovTable, mu: np.ndarray) -> np.ndarray:
    """``exp(-sum_q mu_q n_q) / Z`` on the full Fock space."""
    ops = mode_number_operators(table)
    K = sum(m * n for m, n in zip(np.asarray(mu, float), ops))
    return _gibbs(K.toarray())


def thermal_density_matrix(H, beta: float) -> np.ndarray:
    H = H.toarray() if sp.issparse(H) else np.asarray(H)
    return _gibbs(beta * H)


def parity_diagonal(L: int) -> np.ndarray:
    """Diagonal of the fermion parity ``prod_j (-sz_j)``; ``+1`` on the even sector."""
    z = np.array([-1.0, 1.0])
    return reduce(np.kron, [z] * L)


def infinite_temperature(L: int, sector: Optional[str] = "even") -> np.ndarray:
    """Maximally mixed state, optionally restricted to one fermion-parity sector."""
    if sector is None:
        diag = np.ones(2**L)
    elif sector in ("even", "odd"):
        par = parity_diagonal(L)
        diag = (par > 0 if sector == "even" else par < 0).astype(float)
    else:
        raise ValueError(f"sector must be 'even', 'odd' or None, got {sector!r}")
    return np.diag(diag / diag.sum()).astype(complex)


def ground_state_density_matrix(H, sector: Optional[str] = "even") -> np.ndarray:
    """Projector on the lowest eigenvector of ``H`` within a parity sector."""
    H = H.toarray() if sp.issparse(H) else np.asarray(H)
    L = int(round(np.log2(H.shape[0])))
    if sector is None:
        keep = np.arange(H.shape[0])
    else:
        par = parity_diagonal(L)
        keep = np.flatnonzero(par > 0 if sector == "even" else par < 0)
    w, V = np.linalg.eigh(H[np.ix_(keep, keep)])
    psi = np.zeros(H.shape[0], dtype=complex)
    psi[keep] = V[:, 0]
    return np.outer(psi, psi.conj())


def string_operator(kind: str, i: int, ell: int, L: int) -> sp.csr_matrix:
    """``s^a_i sz_{i+1} ... sz_{i+l-1} s^b_{i+l}`` with ``kind = ab`` in ``{'xx', 'yy'}`` (open string, no wrap)."""
    if kind not in ("xx", "yy") or not (0 <= i and i + ell < L and ell >= 1):
        raise ValueError(f"bad string operator kind={kind!r}, i={i}, ell={ell} for L={L}")
    op = site_operator(kind[0], i, L) @ site_operator(kind[1], i + ell, L)
    for j in range(i + 1, i + ell):
        op = op @ site_operator("z", j, L)
    return op.tocsr()


def check_density_matrix(rho: np.ndarray, trace_tol: float = 1e-10, herm_tol: float = 1e-12,
                         eig_tol: float = 1e-8) -> float:
    """Validate trace, Hermiticity and positivity; returns the smallest eigenvalue."""
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise OracleError(f"trace {tr:.15g} differs from 1")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise OracleError(f"Hermiticity violated by {herm:.3e}")
    lmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if lmin < -eig_tol:
        raise OracleError(f"negative eigenvalue {lmin:.3e}")
    return lmin
