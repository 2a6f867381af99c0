"""Projector-target QAOA simulated in the permutation-symmetric (Dicke) subspace.

With target |0...0>, initial state |+>^n and mixer sum_j X_j all invariant under
qubit permutations, the whole trajectory lives in the (n+1)-dimensional span of
the Dicke states |D_k>, k = Hamming weight. Amplitudes are stored against the
unit-norm Dicke states, so the restricted mixer is the real symmetric
tridiagonal matrix with off-diagonal sqrt((k+1)(n-k)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import lgamma, log

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _kernels

MAX_QUBITS = 30
NORM_TOL = 1e-12


@dataclass(frozen=True)
class DickeState:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be >= 1, got {self.n}")
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.n + 1,):
            raise ValueError(f"expected {self.n + 1} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amps", amps)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)


@dataclass(frozen=True)
class AngleSchedule:
    """Per-layer angles (gamma_k, beta_k), k = 1..p.

    Raw values may be any reals; :meth:`canonical` maps them into
    gamma in [0, 2pi), beta in [0, pi) on request only.
    """

    gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    betas: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        gammas = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        betas = np.atleast_1d(np.asarray(self.betas, dtype=float))
        if gammas.ndim != 1 or gammas.shape != betas.shape:
            raise ValueError(
                f"gammas and betas must be 1-d of equal length, got {gammas.shape} and {betas.shape}"
            )
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "betas", betas)

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_vector(cls, theta) -> AngleSchedule:
        """Inverse of :meth:`to_vector`: first half gammas, second half betas."""
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or len(theta) % 2:
            raise ValueError("parameter vector must be 1-d with even length")
        p = len(theta) // 2
        return cls(theta[:p].copy(), theta[p:].copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gammas, self.betas])

    def canonical(self) -> AngleSchedule:
        return AngleSchedule(np.mod(self.gammas, 2 * np.pi), np.mod(self.betas, np.pi))

    def inverted(self) -> AngleSchedule:
        """Apply (gamma, beta) -> (2pi - gamma, pi - beta) to every layer."""
        return AngleSchedule(2 * np.pi - self.gammas, np.pi - self.betas)

    def append(self, gamma: float, beta: float) -> AngleSchedule:
        return AngleSchedule(np.append(self.gammas, gamma), np.append(self.betas, beta))


@dataclass(frozen=True)
class MixerPropagator:
    n: int
    beta: float
    matrix: np.ndarray


@dataclass(frozen=True)
class OverlapResult:
    g: complex
    magnitude_sq: float
    energy_pperp: float

    @classmethod
    def from_amplitude(cls, g: complex) -> OverlapResult:
        g = complex(g)
        mag = min(abs(g) ** 2, 1.0)
        return cls(g=g, magnitude_sq=mag, energy_pperp=1.0 - mag)


def _check_n(n: int, max_n: int = MAX_QUBITS) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"qubit count must be a positive integer, got {n!r}")
    if n > max_n:
        raise ValueError(f"qubit count {n} exceeds the symmetric-subspace cap {max_n}")


def mixer_offdiagonal(n: int) -> np.ndarray:
    k = np.arange(n, dtype=float)
    return np.sqrt((k + 1) * (n - k))


@lru_cache(maxsize=None)
def mixer_eigensystem(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and (real orthogonal) eigenvectors of the restricted mixer.

    The spectrum is exactly {n - 2k}; the numerical eigenvalues are snapped to
    those integers. Returned arrays are read-only so the cache can be shared.
    """
    evals, evecs = eigh_tridiagonal(np.zeros(n + 1), mixer_offdiagonal(n))
    exact = np.arange(-n, n + 1, 2, dtype=float)
    if np.max(np.abs(evals - exact)) > 1e-8 * max(n, 1):
        raise RuntimeError(f"mixer spectrum for n={n} deviates from n-2k")
    evecs = np.ascontiguousarray(evecs)
    exact.setflags(write=False)
    evecs.setflags(write=False)
    return exact, evecs


def dicke_init(n: int, max_n: int = MAX_QUBITS) -> DickeState:
    """|+>^n in the Dicke basis: amps[k] = sqrt(C(n, k)) / 2^(n/2)."""
    _check_n(n, max_n)
    return DickeState(n, _initial_amps(n).copy())


def apply_projector_phase(state: DickeState, gamma: float) -> DickeState:
    amps = state.amps.copy()
    amps[0] *= np.exp(-1j * gamma)
    return DickeState(state.n, amps)


def build_mixer(n: int, beta: float) -> MixerPropagator:
    """exp(-i beta H_sym) assembled from the cached eigendecomposition."""
    _check_n(n)
    evals, evecs = mixer_eigensystem(n)
    matrix = (evecs * np.exp(-1j * beta * evals)) @ evecs.T
    return MixerPropagator(n, float(beta), matrix)


def apply_mixer(state: DickeState, propagator: MixerPropagator) -> DickeState:
    if propagator.n != state.n:
        raise ValueError(f"propagator built for n={propagator.n}, state has n={state.n}")
    return DickeState(state.n, propagator.matrix @ state.amps)


@lru_cache(maxsize=None)
def _initial_amps(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    log_binom = np.array([lgamma(n + 1) - lgamma(j + 1) - lgamma(n - j + 1) for j in k])
    amps = np.exp(0.5 * log_binom - 0.5 * n * log(2.0)).astype(complex)
    amps.setflags(write=False)
    return amps


@lru_cache(maxsize=None)
def _eigen_frame(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(eigenvalues, <0|eigenvector_j>, |+>^n in eigen-coordinates)."""
    evals, evecs = mixer_eigensystem(n)
    v0 = np.ascontiguousarray(evecs[0])
    psi0 = evecs.T @ _initial_amps(n)
    v0.setflags(write=False)
    psi0.setflags(write=False)
    return evals, v0, psi0


def _as_batch(gammas, betas) -> tuple[np.ndarray, np.ndarray]:
    gammas = np.asarray(gammas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if gammas.shape != betas.shape:
        raise ValueError("gammas and betas must have the same shape")
    if gammas.ndim == 1:
        gammas, betas = gammas[None, :], betas[None, :]
    return gammas, betas


def eigen_state(n: int, schedule: AngleSchedule) -> np.ndarray:
    """Circuit output in mixer eigen-coordinates (single schedule)."""
    _check_n(n)
    evals, v0, psi = _eigen_frame(n)
    psi = psi.copy()
    for gamma, beta in zip(schedule.gammas, schedule.betas):
        psi += (np.exp(-1j * gamma) - 1.0) * (psi @ v0) * v0
        psi *= np.exp(-1j * beta * evals)
    return psi


def overlap_batch(n: int, gammas, betas) -> np.ndarray:
    """Complex overlaps for a batch of schedules, angle arrays of shape (R, p).

    Works in the mixer eigenbasis: the mixer is a diagonal phase there and the
    projector phase is a rank-one update along <0|.
    """
    _check_n(n)
    gammas, betas = _as_batch(gammas, betas)
    evals, v0, psi0 = _eigen_frame(n)
    psi = np.broadcast_to(psi0, (gammas.shape[0], n + 1)).copy()
    for k in range(gammas.shape[1]):
        a = psi @ v0
        psi += ((np.exp(-1j * gammas[:, k]) - 1.0) * a)[:, None] * v0
        psi *= np.exp(-1j * np.outer(betas[:, k], evals))
    return psi @ v0


def overlap_and_gradient_batch(n: int, gammas, betas) -> tuple[np.ndarray, np.ndarray]:
    """|g|^2 and its gradient (R, 2p) for a batch of schedules.

    The gradient is ordered d/dgamma_1..p then d/dbeta_1..p. Compiled version
    of :func:`overlap_and_gradient_reference`.
    """
    _check_n(n)
    gammas, betas = _as_batch(gammas, betas)
    evals, v0, psi0 = _eigen_frame(n)
    return _kernels.overlap_and_gradient(
        evals, v0, psi0, np.ascontiguousarray(gammas), np.ascontiguousarray(betas)
    )


def overlap_and_gradient_reference(n: int, gammas, betas) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised numpy evaluation of |g|^2 and its gradient.

    A bra is pulled back through the circuit; each derivative inserts -iP
    (gamma) or -iH (beta) at its layer.
    """
    _check_n(n)
    gammas, betas = _as_batch(gammas, betas)
    evals, v0, psi0 = _eigen_frame(n)
    r, p = gammas.shape
    phase_g = np.exp(-1j * gammas)
    phase_b = np.exp(-1j * betas[:, :, None] * evals)
    psi = np.broadcast_to(psi0, (r, n + 1)).copy()
    states = np.empty((p, r, n + 1), dtype=complex)
    before = np.empty((p, r), dtype=complex)
    for k in range(p):
        a = psi @ v0
        before[k] = a
        psi += ((phase_g[:, k] - 1.0) * a)[:, None] * v0
        psi *= phase_b[:, k]
        states[k] = psi
    g = psi @ v0
    dg = np.empty((r, 2 * p), dtype=complex)
    bra = np.broadcast_to(v0, (r, n + 1)).astype(complex)
    for k in range(p - 1, -1, -1):
        dg[:, p + k] = -1j * np.einsum("rj,rj->r", bra, evals * states[k])
        bra = bra * phase_b[:, k]
        b0 = bra @ v0
        dg[:, k] = -1j * phase_g[:, k] * b0 * before[k]
        bra = bra + ((phase_g[:, k] - 1.0) * b0)[:, None] * v0
    value = np.minimum(np.abs(g) ** 2, 1.0)
    grad = 2.0 * (np.conj(g)[:, None] * dg).real
    return value, grad


def final_state(n: int, schedule: AngleSchedule) -> DickeState:
    _check_n(n)
    state = dicke_init(n)
    for gamma, beta in zip(schedule.gammas, schedule.betas):
        state = apply_mixer(apply_projector_phase(state, gamma), build_mixer(n, beta))
    return state


def simulate(n: int, schedule: AngleSchedule) -> OverlapResult:
    """Overlap <0...0|psi_p> after applying V(gamma_k) then U(beta_k), k = 1..p."""
    g = overlap_batch(n, schedule.gammas, schedule.betas)[0]
    return OverlapResult.from_amplitude(g)


def overlap_sq(n: int, theta) -> float:
    """|g|^2 for a flat parameter vector (gammas then betas)."""
    return simulate(n, AngleSchedule.from_vector(theta)).magnitude_sq


def gradient(n: int, schedule: AngleSchedule) -> np.ndarray:
    """Analytic gradient of |g|^2, ordered d/dgamma_1..p then d/dbeta_1..p."""
    if schedule.p < 1:
        raise ValueError("gradient needs at least one layer")
    return overlap_and_gradient_batch(n, schedule.gammas, schedule.betas)[1][0]
