"""Exact statevector / density-matrix simulation for small qubit registers.

Qubit 0 is the most significant bit of a basis index, i.e. the leftmost
factor of a Kronecker product.  Amplitude arrays are reshaped to
``(2,) * num_qubits`` so that axis ``i`` is qubit ``i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"X": X, "Y": Y, "Z": Z}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j]).astype(complex)
# Rows of each matrix are the +1 and -1 eigenvectors (conjugated), so that
# V @ psi gives amplitudes in the eigenbasis with +1 first.
BASIS_CHANGE = {"X": _H, "Y": _H @ _SDG, "Z": I2}

_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
).reshape(2, 2, 2, 2)

STATE_TOL = 1e-10


@dataclass
class QubitState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != 2**self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes, got {self.amplitudes.size}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "QubitState":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_vector(cls, vec) -> "QubitState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        n = int(round(np.log2(vec.size)))
        if 2**n != vec.size:
            raise ValueError("vector length is not a power of two")
        return cls(n, vec)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.num_qubits)

    def to_density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.num_qubits, np.outer(a, a.conj()))


@dataclass
class DensityOperator:
    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = 2**self.num_qubits
        if self.matrix.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {self.matrix.shape}")

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def rank(self, tol: float = 1e-10) -> int:
        w = np.linalg.eigvalsh(self.matrix)
        return int(np.sum(w > tol))

    def is_valid(self, tol: float = STATE_TOL) -> bool:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > tol:
            return False
        if abs(np.trace(m) - 1) > tol:
            return False
        return bool(np.linalg.eigvalsh(m).min() >= -tol)


@dataclass
class PauliBasisSpec:
    sites: tuple
    labels: tuple

    def __post_init__(self):
        self.sites = tuple(int(s) for s in self.sites)
        self.labels = tuple(str(lab).upper() for lab in self.labels)
        if len(self.sites) != len(self.labels):
            raise ValueError("sites and labels must have equal length")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("sites must be distinct")
        bad = [lab for lab in self.labels if lab not in PAULIS]
        if bad:
            raise ValueError(f"unknown Pauli labels {bad}")

    @classmethod
    def full(cls, labels: str | Sequence[str]) -> "PauliBasisSpec":
        labels = tuple(labels)
        return cls(tuple(range(len(labels))), labels)

    def check_range(self, num_qubits: int):
        if any(s < 0 or s >= num_qubits for s in self.sites):
            raise ValueError(f"sites {self.sites} out of range for {num_qubits} qubits")

    @property
    def label_string(self) -> str:
        return "".join(self.labels)


def full_pauli_specs(num_qubits: int) -> list[PauliBasisSpec]:
    """All 3^L full-register Pauli settings in lexicographic X < Y < Z order."""
    return [PauliBasisSpec.full(p) for p in itertools.product("XYZ", repeat=num_qubits)]


def klocal_pauli_specs(num_qubits: int, k: int, contiguous: bool = True) -> list[PauliBasisSpec]:
    if contiguous:
        groups = [tuple(range(i, i + k)) for i in range(num_qubits - k + 1)]
    else:
        groups = list(itertools.combinations(range(num_qubits), k))
    return [
        PauliBasisSpec(sites, labels)
        for sites in groups
        for labels in itertools.product("XYZ", repeat=k)
    ]


@dataclass
class CircuitSpec:
    num_qubits: int
    depth: int
    angles: np.ndarray = field(default=None)
    noise_rate: float = 0.0

    def __post_init__(self):
        if self.angles is None:
            self.angles = np.zeros((self.depth, self.num_qubits, 3))
        self.angles = np.asarray(self.angles, dtype=float).reshape(
            self.depth, self.num_qubits, 3
        )
        if not np.all(np.isfinite(self.angles)):
            raise ValueError("circuit angles must be finite")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")

    @classmethod
    def random(cls, num_qubits, depth, rng, noise_rate=0.0, angle_max=2 * np.pi):
        angles = rng.uniform(0.0, angle_max, size=(depth, num_qubits, 3))
        return cls(num_qubits, depth, angles, noise_rate)


def _expm_pauli(theta: float, pauli: np.ndarray) -> np.ndarray:
    # exp(-i theta P) for P^2 = 1
    return np.cos(theta) * I2 - 1j * np.sin(theta) * pauli


def rotation_unitary(theta_x: float, theta_y: float, theta_z: float) -> np.ndarray:
    """exp(-i tz Z) exp(-i ty Y) exp(-i tx X); note there is no factor 1/2."""
    return _expm_pauli(theta_z, Z) @ _expm_pauli(theta_y, Y) @ _expm_pauli(theta_x, X)


def apply_1q(tensor: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    out = np.tensordot(gate, tensor, axes=([1], [qubit]))
    return np.moveaxis(out, 0, qubit)


def apply_2q(tensor: np.ndarray, gate: np.ndarray, q0: int, q1: int) -> np.ndarray:
    """Apply a (2,2,2,2) gate with axes (out0, out1, in0, in1)."""
    out = np.tensordot(gate, tensor, axes=([2, 3], [q0, q1]))
    return np.moveaxis(out, [0, 1], [q0, q1])


def _as_state(state: QubitState) -> QubitState:
    if not isinstance(state, QubitState):
        raise TypeError(f"expected QubitState, got {type(state).__name__}")
    return state


def apply_single_qubit_rotations(state: QubitState, angles) -> QubitState:
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (state.num_qubits, 3):
        raise ValueError(
            f"need one (tx, ty, tz) triple per qubit: expected shape "
            f"({state.num_qubits}, 3), got {angles.shape}"
        )
    psi = state.tensor()
    for q in range(state.num_qubits):
        psi = apply_1q(psi, rotation_unitary(*angles[q]), q)
    return QubitState(state.num_qubits, psi.reshape(-1))


def apply_cnot_chain(state: QubitState) -> QubitState:
    if state.num_qubits < 2:
        raise ValueError("CNOT chain needs at least two qubits")
    psi = state.tensor()
    for q in range(state.num_qubits - 1):
        psi = apply_2q(psi, _CNOT, q, q + 1)
    return QubitState(state.num_qubits, psi.reshape(-1))


# Density-matrix helpers: rho is reshaped to (2,)*L + (2,)*L, row axes first.

def _rho_tensor(rho: DensityOperator) -> np.ndarray:
    return rho.matrix.reshape((2,) * (2 * rho.num_qubits))


def _rho_apply_1q(t: np.ndarray, gate: np.ndarray, qubit: int, n: int) -> np.ndarray:
    t = apply_1q(t, gate, qubit)
    return apply_1q(t, gate.conj(), n + qubit)


def _rho_apply_2q(t: np.ndarray, gate: np.ndarray, q0: int, q1: int, n: int) -> np.ndarray:
    t = apply_2q(t, gate, q0, q1)
    return apply_2q(t, gate.conj(), n + q0, n + q1)


def _depolarize_tensor(t: np.ndarray, qubit: int, p: float, n: int) -> np.ndarray:
    out = (1.0 - p) * t
    for P in (X, Y, Z):
        out = out + (p / 3.0) * _rho_apply_1q(t, P, qubit, n)
    return out


def apply_depolarizing(rho: DensityOperator, qubit: int, p: float) -> DensityOperator:
    """rho -> (1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z) on one qubit."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing rate must lie in [0, 1]")
    if not 0 <= qubit < rho.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {rho.num_qubits} qubits")
    n = rho.num_qubits
    t = _depolarize_tensor(_rho_tensor(rho), qubit, p, n)
    return DensityOperator(n, t.reshape(2**n, 2**n))


def run_circuit(spec: CircuitSpec, state: QubitState) -> DensityOperator:
    """Rotation layer, CNOT chain, then (optionally) depolarizing on every qubit; repeated."""
    n = spec.num_qubits
    if state.num_qubits != n:
        raise ValueError(f"circuit is for {n} qubits, input has {state.num_qubits}")
    if spec.noise_rate == 0.0:
        psi = state
        for layer in range(spec.depth):
            psi = apply_single_qubit_rotations(psi, spec.angles[layer])
            if n >= 2:
                psi = apply_cnot_chain(psi)
        return psi.to_density()

    t = _rho_tensor(state.to_density())
    for layer in range(spec.depth):
        for q in range(n):
            t = _rho_apply_1q(t, rotation_unitary(*spec.angles[layer, q]), q, n)
        for q in range(n - 1):
            t = _rho_apply_2q(t, _CNOT, q, q + 1, n)
        for q in range(n):
            t = _depolarize_tensor(t, q, spec.noise_rate, n)
    return DensityOperator(n, t.reshape(2**n, 2**n))


def run_circuit_statevector(spec: CircuitSpec, state: QubitState) -> QubitState:
    """Noise-free statevector path; independent of the density-matrix path."""
    if spec.noise_rate != 0.0:
        raise ValueError("statevector simulation requires noise_rate == 0")
    psi = state
    for layer in range(spec.depth):
        psi = apply_single_qubit_rotations(psi, spec.angles[layer])
        if spec.num_qubits >= 2:
            psi = apply_cnot_chain(psi)
    return psi


def pauli_statistics(state, spec: PauliBasisSpec) -> np.ndarray:
    """Outcome distribution of a Pauli measurement on ``spec.sites``.

    Outcomes are indexed site-major in the order of ``spec.sites``; bit 0 is
    the +1 eigenvalue.  Unmeasured qubits are traced out.
    """
    n = state.num_qubits
    spec.check_range(n)
    k = len(spec.sites)
    if isinstance(state, QubitState):
        psi = state.tensor()
        for s, lab in zip(spec.sites, spec.labels):
            psi = apply_1q(psi, BASIS_CHANGE[lab], s)
        probs = np.abs(psi) ** 2
        rest = tuple(q for q in range(n) if q not in spec.sites)
        probs = probs.sum(axis=rest) if rest else probs
        # remaining axes are in ascending qubit order; reorder to spec order
        order = np.argsort(np.argsort(spec.sites))
        probs = np.transpose(probs, order) if k > 1 else probs
    elif isinstance(state, DensityOperator):
        t = _rho_tensor(state)
        for s, lab in zip(spec.sites, spec.labels):
            t = _rho_apply_1q(t, BASIS_CHANGE[lab], s, n)
        diag = np.real(np.einsum(t.reshape(2**n, 2**n), [0, 0], [0]))
        probs = diag.reshape((2,) * n)
        rest = tuple(q for q in range(n) if q not in spec.sites)
        probs = probs.sum(axis=rest) if rest else probs
        order = np.argsort(np.argsort(spec.sites))
        probs = np.transpose(probs, order) if k > 1 else probs
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    probs = np.clip(np.asarray(probs, dtype=float).reshape(-1), 0.0, None)
    return probs / probs.sum()


def ghz_state(num_qubits: int) -> QubitState:
    amps = np.zeros(2**num_qubits, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return QubitState(num_qubits, amps)


def plus_state(num_qubits: int) -> QubitState:
    return QubitState(num_qubits, np.full(2**num_qubits, 2 ** (-num_qubits / 2), dtype=complex))


_BASE_STATES = {"rotated_zero": QubitState.zero, "rotated_ghz": ghz_state, "rotated_plus": plus_state}


def prepare_input_state(ensemble: str, angle_bound: float, rng, num_qubits: int) -> QubitState:
    """Base state with independent local rotations, angles uniform in [0, angle_bound]."""
    if angle_bound <= 0:
        raise ValueError("angle_bound must be positive")
    try:
        base = _BASE_STATES[ensemble](num_qubits)
    except KeyError:
        raise ValueError(f"unknown ensemble {ensemble!r}; choose from {sorted(_BASE_STATES)}")
    angles = rng.uniform(0.0, angle_bound, size=(num_qubits, 3))
    return apply_single_qubit_rotations(base, angles)


def quantum_fidelity(a, b) -> float:
    """|<a|b>|^2 for pure states given as QubitState or amplitude vectors."""
    va = a.amplitudes if isinstance(a, QubitState) else np.asarray(a, dtype=complex).reshape(-1)
    vb = b.amplitudes if isinstance(b, QubitState) else np.asarray(b, dtype=complex).reshape(-1)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    f = abs(np.vdot(va, vb)) ** 2
    return float(min(max(f, 0.0), 1.0))
