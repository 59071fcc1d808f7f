"""Single-mode truncated Fock space: coherent states, Kerr gate, binned homodyne.

Quadratures follow x_theta = (e^{i theta} a^dag + e^{-i theta} a) / 2, so the
vacuum has variance 1/4.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import GridRangeError

DEFAULT_CUTOFF = 60
MIN_CAPTURED_MASS = 0.99


class TruncationWarning(UserWarning):
    pass


@dataclass
class FockState:
    cutoff: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != self.cutoff:
            raise ValueError("amplitude vector length must equal the cutoff")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def photon_distribution(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_photon_number(self) -> float:
        return float(np.arange(self.cutoff) @ self.photon_distribution())


@dataclass(frozen=True)
class QuadratureGrid:
    x_min: float = -6.0
    x_max: float = 6.0
    num_bins: int = 120

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        if self.num_bins < 2:
            raise ValueError("need at least two bins")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.num_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def width(self) -> float:
        return (self.x_max - self.x_min) / self.num_bins


def coherent_state(alpha: complex, cutoff: int = DEFAULT_CUTOFF) -> FockState:
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    alpha = complex(alpha)
    if abs(alpha) ** 2 > cutoff / 2:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds cutoff/2 = {cutoff / 2}; "
            "the Fock truncation may lose probability mass",
            TruncationWarning,
            stacklevel=2,
        )
    c = np.empty(cutoff, dtype=complex)
    c[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, cutoff):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return FockState(cutoff, c)


def fock_state(n: int, cutoff: int) -> FockState:
    c = np.zeros(cutoff, dtype=complex)
    c[n] = 1.0
    return FockState(cutoff, c)


def kerr_evolve(state: FockState, t: float) -> FockState:
    """exp(-i t a^dag^2 a^2): phase e^{-i t n(n-1)} on |n>."""
    n = np.arange(state.cutoff)
    return FockState(state.cutoff, state.amplitudes * np.exp(-1j * t * (n * (n - 1))))


def hermite_functions(q: np.ndarray, cutoff: int) -> np.ndarray:
    """Harmonic-oscillator eigenfunctions psi_n(q) for X = (a + a^dag)/sqrt(2).

    Returns an array of shape (cutoff, len(q)); uses the stable three-term
    recurrence, so large n does not overflow.
    """
    q = np.asarray(q, dtype=float)
    out = np.zeros((cutoff,) + q.shape)
    out[0] = np.pi**-0.25 * np.exp(-(q**2) / 2)
    if cutoff > 1:
        out[1] = np.sqrt(2.0) * q * out[0]
    for n in range(1, cutoff - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * q * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_wavefunction(state: FockState, theta: float, x: np.ndarray) -> np.ndarray:
    """<x_theta = x | psi>, normalised as a density in x (vacuum variance 1/4)."""
    # x = X / sqrt(2); the x_theta eigenbasis is the x eigenbasis rotated by e^{-i theta n}
    n = np.arange(state.cutoff)
    rotated = state.amplitudes * np.exp(-1j * theta * n)
    q = np.sqrt(2.0) * np.asarray(x, dtype=float)
    return 2**0.25 * (rotated @ hermite_functions(q, state.cutoff))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def homodyne_bins(state: FockState, theta: float, grid: QuadratureGrid):
    """Binned homodyne distribution and the probability mass that fell off the grid.

    Returns ``(probs, leaked)`` with ``probs`` renormalised to sum to one.
    Bin masses are integrated with 12-point Gauss-Legendre per bin.
    """
    edges = grid.edges
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xs = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    dens = np.abs(quadrature_wavefunction(state, theta, xs.reshape(-1))) ** 2
    masses = (dens.reshape(xs.shape) @ _GL_WEIGHTS) * half
    captured = float(masses.sum())
    total = state.norm() ** 2
    leaked = max(total - captured, 0.0)
    if captured < MIN_CAPTURED_MASS * total:
        raise GridRangeError(
            f"grid [{grid.x_min}, {grid.x_max}] captures only {captured:.4f} of the "
            f"quadrature distribution at theta={theta:.4f}"
        )
    return masses / captured, leaked


def homodyne_distribution(state: FockState, theta: float, grid: QuadratureGrid | None = None) -> np.ndarray:
    if not 0.0 <= theta < np.pi:
        raise ValueError("theta must lie in [0, pi)")
    return homodyne_bins(state, theta, grid or QuadratureGrid())[0]


def homodyne_thetas(count: int = 100) -> np.ndarray:
    """Evenly spaced phases 0, pi/count, ..., (count-1) pi/count."""
    return np.arange(count) * np.pi / count


def quadrature_mean(state: FockState, theta: float) -> float:
    """<x_theta> from ladder-operator matrix elements (no wavefunctions involved)."""
    c = state.amplitudes
    n = np.arange(1, state.cutoff)
    a_exp = np.sum(np.conj(c[:-1]) * np.sqrt(n) * c[1:])  # <a>
    return float(np.real(np.exp(-1j * theta) * a_exp)) / state.norm() ** 2


def quadrature_variance(state: FockState, theta: float) -> float:
    c = state.amplitudes / state.norm()
    N = state.cutoff
    a = np.diag(np.sqrt(np.arange(1, N)), 1).astype(complex)
    x = (np.exp(1j * theta) * a.conj().T + np.exp(-1j * theta) * a) / 2
    m1 = np.vdot(c, x @ c).real
    m2 = np.vdot(c, x @ (x @ c)).real
    return float(m2 - m1**2)
