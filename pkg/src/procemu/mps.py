"""Matrix product states and second-order TEBD for the transverse-field Ising chain.

Tensors have axes (left bond, physical, right bond).  The Hamiltonian is
H = J sum_i Z_i Z_{i+1} + g sum_j X_j, the same convention as
:func:`procemu.qsim.hamiltonian.build_hamiltonian` with ``kind="ising"``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError
from .qsim.core import BASIS_CHANGE, PauliBasisSpec, QubitState, X, Z

logger = logging.getLogger(__name__)

MAX_STATEVECTOR_SITES = 12


@dataclass
class MatrixProductState:
    tensors: list
    canonical_center: int | None = None

    @property
    def L(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MatrixProductState":
        return MatrixProductState([t.copy() for t in self.tensors], self.canonical_center)

    def norm(self) -> float:
        return float(np.sqrt(abs(mps_overlap(self, self))))


@dataclass
class TebdParams:
    J: float = 0.5
    g: float = 1.0
    dt: float = 0.02
    t_total: float = 1.0
    chi_max: int = 64
    svd_cutoff: float = 1e-10
    # raise instead of truncating when a bond needs more than chi_max values
    strict: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.chi_max < 1:
            raise ValueError("chi_max must be >= 1")
        if self.svd_cutoff < 0:
            raise ValueError("svd_cutoff must be non-negative")

    @property
    def num_steps(self) -> int:
        steps = self.t_total / self.dt
        n = int(round(steps))
        if abs(steps - n) > 1e-9 * max(1.0, steps):
            raise ValueError(f"t_total/dt = {steps} is not an integer number of steps")
        return n


@dataclass
class TebdResult:
    state: MatrixProductState
    truncated_weight: float = 0.0
    step_weights: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)


def mps_from_product(local_states) -> MatrixProductState:
    tensors = []
    for i, v in enumerate(local_states):
        v = np.asarray(v, dtype=complex).reshape(-1)
        if v.shape != (2,):
            raise ValueError(f"local state {i} must be a 2-vector")
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ValueError(f"local state {i} is not normalised")
        tensors.append(v.reshape(1, 2, 1).copy())
    return MatrixProductState(tensors, canonical_center=0)


def mps_from_statevector(state: QubitState, chi_max: int | None = None, cutoff: float = 0.0) -> MatrixProductState:
    """Exact (or truncated) left-canonical decomposition by successive SVDs."""
    L = state.num_qubits
    rest = state.amplitudes.reshape(1, -1)
    tensors = []
    for _ in range(L - 1):
        chi_l = rest.shape[0]
        m = rest.reshape(chi_l * 2, -1)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        keep = _num_kept(s, chi_max, cutoff)
        u, s, vh = u[:, :keep], s[:keep], vh[:keep]
        tensors.append(u.reshape(chi_l, 2, keep))
        rest = s[:, None] * vh
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MatrixProductState(tensors, canonical_center=L - 1)


def mps_to_statevector(psi: MatrixProductState) -> QubitState:
    if psi.L > MAX_STATEVECTOR_SITES:
        raise CapabilityError(f"statevector contraction limited to L <= {MAX_STATEVECTOR_SITES}")
    out = psi.tensors[0]
    for t in psi.tensors[1:]:
        out = np.tensordot(out, t, axes=([-1], [0]))
    return QubitState(psi.L, out.reshape(-1))


def mps_overlap(a: MatrixProductState, b: MatrixProductState) -> complex:
    """<a|b> by a left-to-right transfer-matrix sweep."""
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.einsum("ab,asc,bsd->cd", env, ta.conj(), tb)
    return complex(env[0, 0])


def _num_kept(s: np.ndarray, chi_max: int | None, cutoff: float) -> int:
    keep = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 1
    keep = max(keep, 1)
    if chi_max is not None:
        keep = min(keep, chi_max)
    return keep


def _move_center(psi: MatrixProductState, target: int):
    """QR/LQ sweeps so that all tensors left of ``target`` are left-isometric and right ones right-isometric."""
    if psi.canonical_center is None:
        # full canonicalisation: sweep right to the end, then back
        psi.canonical_center = 0
        _move_center(psi, psi.L - 1)
    c = psi.canonical_center
    T = psi.tensors
    while c < target:
        chi_l, d, chi_r = T[c].shape
        q, r = np.linalg.qr(T[c].reshape(chi_l * d, chi_r))
        T[c] = q.reshape(chi_l, d, q.shape[1])
        T[c + 1] = np.tensordot(r, T[c + 1], axes=([1], [0]))
        c += 1
    while c > target:
        chi_l, d, chi_r = T[c].shape
        q, r = np.linalg.qr(T[c].reshape(chi_l, d * chi_r).T)
        T[c] = q.T.reshape(q.shape[1], d, chi_r)
        T[c - 1] = np.tensordot(T[c - 1], r.T, axes=([2], [0]))
        c -= 1
    psi.canonical_center = c


def apply_single_site(psi: MatrixProductState, gate: np.ndarray, site: int):
    psi.tensors[site] = np.einsum("st,atb->asb", gate, psi.tensors[site])


def apply_two_site(psi: MatrixProductState, gate: np.ndarray, site: int, chi_max: int,
                   cutoff: float, strict: bool = False) -> float:
    """Apply a (2,2,2,2) gate on (site, site+1) and truncate; returns discarded weight."""
    _move_center(psi, site)
    A, B = psi.tensors[site], psi.tensors[site + 1]
    theta = np.tensordot(A, B, axes=([2], [0]))  # (a, s, t, b)
    theta = np.einsum("stuv,auvb->astb", gate, theta)
    chi_l, _, _, chi_r = theta.shape
    u, s, vh = np.linalg.svd(theta.reshape(chi_l * 2, 2 * chi_r), full_matrices=False)
    needed = _num_kept(s, None, cutoff)
    if strict and needed > chi_max:
        raise CapabilityError(
            f"bond ({site},{site + 1}) needs {needed} singular values, chi_max is {chi_max}"
        )
    keep = min(needed, chi_max)
    total = float(np.sum(s**2))
    discarded = float(np.sum(s[keep:] ** 2)) / total
    u, s, vh = u[:, :keep], s[:keep], vh[:keep]
    s = s / np.linalg.norm(s)
    psi.tensors[site] = u.reshape(chi_l, 2, keep)
    psi.tensors[site + 1] = (s[:, None] * vh).reshape(keep, 2, chi_r)
    psi.canonical_center = site + 1
    return discarded


def _field_gate(g: float, tau: float) -> np.ndarray:
    return np.cos(g * tau) * np.eye(2) - 1j * np.sin(g * tau) * X


def _zz_gate(J: float, tau: float) -> np.ndarray:
    zz = np.kron(Z, Z)
    return np.diag(np.exp(-1j * J * tau * np.diag(zz).real)).reshape(2, 2, 2, 2)


def tebd_step(psi: MatrixProductState, p: TebdParams) -> float:
    """One symmetric Trotter step: half field, even bonds, odd bonds, half field."""
    half = _field_gate(p.g, p.dt / 2)
    bond = _zz_gate(p.J, p.dt)
    weight = 0.0
    for i in range(psi.L):
        apply_single_site(psi, half, i)
    for start in (0, 1):
        for i in range(start, psi.L - 1, 2):
            weight += apply_two_site(psi, bond, i, p.chi_max, p.svd_cutoff, p.strict)
    for i in range(psi.L):
        apply_single_site(psi, half, i)
    c = psi.canonical_center
    psi.tensors[c] = psi.tensors[c] / np.linalg.norm(psi.tensors[c])
    return weight


def tebd_evolve(psi: MatrixProductState, p: TebdParams) -> TebdResult:
    out = psi.copy()
    result = TebdResult(out)
    steps = p.num_steps
    if steps == 0:
        return result
    if out.canonical_center is None:
        _move_center(out, 0)
    c = out.canonical_center
    out.tensors[c] = out.tensors[c] / np.linalg.norm(out.tensors[c])
    for k in range(steps):
        w = tebd_step(out, p)
        result.step_weights.append(w)
        result.step_norms.append(out.norm())
        result.truncated_weight += w
        logger.debug("tebd step %d truncated weight %.3e", k, w)
    return result


def reduced_density_matrix(psi: MatrixProductState, sites) -> np.ndarray:
    """Reduced density matrix on ``sites`` (any order), indices ordered as given."""
    sites = tuple(int(s) for s in sites)
    srt = sorted(sites)
    env = np.ones((1, 1, 1, 1), dtype=complex)  # (ket bond, bra bond, ket phys, bra phys)
    for i, A in enumerate(psi.tensors):
        if i in srt:
            env = np.einsum("abmn,asc,btd->cdmsnt", env, A, A.conj())
            c, d, m, s, n, t = env.shape
            env = env.reshape(c, d, m * s, n * t)
        else:
            env = np.einsum("abmn,asc,bsd->cdmn", env, A, A.conj())
    rho = env[0, 0]
    k = len(srt)
    rho = rho.reshape((2,) * (2 * k))
    order = [srt.index(s) for s in sites]
    rho = np.transpose(rho, order + [k + o for o in order])
    rho = rho.reshape(2**k, 2**k)
    return rho / np.trace(rho).real


def local_pauli_statistics(psi: MatrixProductState, spec: PauliBasisSpec) -> np.ndarray:
    """Outcome distribution of a k-local Pauli measurement, k <= 4."""
    k = len(spec.sites)
    if k > 4:
        raise ValueError("local_pauli_statistics supports at most 4 sites")
    spec.check_range(psi.L)
    rho = reduced_density_matrix(psi, spec.sites)
    V = np.ones((1, 1), dtype=complex)
    for lab in spec.labels:
        V = np.kron(V, BASIS_CHANGE[lab])
    probs = np.clip(np.real(np.diag(V @ rho @ V.conj().T)), 0.0, None)
    return probs / probs.sum()
