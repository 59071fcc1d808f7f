"""Dense spin-chain Hamiltonians, exact evolution and ground states."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CapabilityError
from .core import I2, X, Z, QubitState

MAX_DENSE_SITES = 12
KINDS = ("long_range_ising", "ising", "site_dep_ising")


@dataclass
class HamiltonianSpec:
    """Couplings per kind.

    * ``long_range_ising``: H = -sum_{i<j} |i-j|^-alpha X_i X_j - B sum_j Z_j
    * ``ising``: H = J sum_i Z_i Z_{i+1} + g sum_j X_j
    * ``site_dep_ising``: H = sum_i J_i Z_i Z_{i+1} + g sum_j X_j
    """

    kind: str
    L: int
    alpha: float = 1.0
    B: float = 1.0
    J: float = 0.5
    g: float = 1.0
    J_sites: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Hamiltonian kind {self.kind!r}")
        if self.L < 2:
            raise ValueError("need L >= 2")
        if self.kind == "long_range_ising" and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.kind == "site_dep_ising":
            if self.J_sites is None:
                raise ValueError("site_dep_ising needs J_sites")
            self.J_sites = np.asarray(self.J_sites, dtype=float)
            if self.J_sites.shape != (self.L - 1,):
                raise ValueError(f"J_sites must have length L-1 = {self.L - 1}")


def _site_op(op: np.ndarray, site: int, L: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for q in range(L):
        out = np.kron(out, op if q == site else I2)
    return out


def _pair_op(op_a, i, op_b, j, L):
    out = np.ones((1, 1), dtype=complex)
    for q in range(L):
        out = np.kron(out, op_a if q == i else (op_b if q == j else I2))
    return out


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    L = spec.L
    if L > MAX_DENSE_SITES:
        raise CapabilityError(
            f"dense Hamiltonian limited to L <= {MAX_DENSE_SITES} (got {L}); "
            "use procemu.mps for nearest-neighbour Ising chains"
        )
    dim = 2**L
    H = np.zeros((dim, dim), dtype=complex)
    if spec.kind == "long_range_ising":
        for i in range(L):
            for j in range(i + 1, L):
                H -= _pair_op(X, i, X, j, L) / abs(i - j) ** spec.alpha
        for j in range(L):
            H -= spec.B * _site_op(Z, j, L)
    else:
        bonds = np.full(L - 1, spec.J) if spec.kind == "ising" else spec.J_sites
        for i in range(L - 1):
            H += bonds[i] * _pair_op(Z, i, Z, i + 1, L)
        for j in range(L):
            H += spec.g * _site_op(X, j, L)
    return H


def _check_hermitian(H: np.ndarray, tol: float = 1e-10):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if np.max(np.abs(H - H.conj().T)) > tol:
        raise ValueError("Hamiltonian is not Hermitian")


class Propagator:
    """Caches the eigendecomposition of H so repeated evolutions are cheap."""

    def __init__(self, H: np.ndarray):
        _check_hermitian(H)
        self.energies, self.vectors = np.linalg.eigh(H)

    def evolve(self, state: QubitState, t: float) -> QubitState:
        if state.amplitudes.size != self.energies.size:
            raise ValueError("state and Hamiltonian dimensions differ")
        coeffs = self.vectors.conj().T @ state.amplitudes
        out = self.vectors @ (np.exp(-1j * self.energies * t) * coeffs)
        return QubitState(state.num_qubits, out)


def exact_evolve(H: np.ndarray, state: QubitState, t: float) -> QubitState:
    """Apply exp(-iHt) through the eigendecomposition of H."""
    return Propagator(H).evolve(state, t)


def fix_phase(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    idx = int(np.argmax(np.abs(vec) > tol * np.max(np.abs(vec))))
    a = vec[idx]
    return vec * (abs(a) / a)


def ground_state(H: np.ndarray) -> tuple[QubitState, float]:
    """Lowest eigenvector of H (first one returned by LAPACK on ties) and its energy."""
    _check_hermitian(H)
    w, v = np.linalg.eigh(H)
    vec = v[:, 0]
    vec = fix_phase(vec / np.linalg.norm(vec))
    return QubitState.from_vector(vec), float(w[0])
