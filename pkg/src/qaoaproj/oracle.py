"""Brute-force 2^n statevector simulation, used as ground truth for symsim.

Basis index convention: qubit 0 is the most significant bit, so the bitstring
t_0 t_1 ... t_{n-1} sits at index sum_j t_j 2^(n-1-j).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .symsim import AngleSchedule, DickeState, OverlapResult

MAX_QUBITS = 12


class ResourceLimitError(ValueError):
    """Requested system size exceeds the brute-force cap."""


@dataclass(frozen=True)
class StateVector:
    n: int
    amps: np.ndarray


@dataclass(frozen=True)
class TargetSpec:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"target bits must be 0/1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, n: int) -> TargetSpec:
        return cls((0,) * n)

    @classmethod
    def from_string(cls, s: str) -> TargetSpec:
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_index(cls, index: int, n: int) -> TargetSpec:
        return cls(tuple((index >> (n - 1 - j)) & 1 for j in range(n)))

    @property
    def index(self) -> int:
        idx = 0
        for b in self.bits:
            idx = (idx << 1) | b
        return idx


def _check_cap(n: int, max_n: int) -> None:
    if n < 1:
        raise ValueError(f"qubit count must be >= 1, got {n}")
    if n > max_n:
        raise ResourceLimitError(f"n={n} exceeds statevector cap {max_n}")


def plus_state(n: int, max_n: int = MAX_QUBITS) -> StateVector:
    _check_cap(n, max_n)
    return StateVector(n, np.full(2**n, 2.0 ** (-n / 2), dtype=complex))


def apply_mixer_inplace(amps: np.ndarray, n: int, beta: float) -> None:
    """exp(-i beta sum_j X_j) as n single-qubit rotations on a (2,)*n view."""
    c, s = np.cos(beta), -1j * np.sin(beta)
    psi = amps.reshape((2,) * n)
    for j in range(n):
        view = np.moveaxis(psi, j, 0)
        lo = view[0].copy()
        hi = view[1].copy()
        view[0] = c * lo + s * hi
        view[1] = s * lo + c * hi


def run_circuit(n: int, schedule: AngleSchedule, target: TargetSpec | None = None,
                max_n: int = MAX_QUBITS) -> StateVector:
    target = target or TargetSpec.zeros(n)
    if len(target.bits) != n:
        raise ValueError(f"target has {len(target.bits)} bits, expected {n}")
    amps = plus_state(n, max_n).amps.copy()
    t = target.index
    for gamma, beta in zip(schedule.gammas, schedule.betas):
        amps[t] *= np.exp(-1j * gamma)
        apply_mixer_inplace(amps, n, beta)
    return StateVector(n, amps)


def statevector_overlap(n: int, schedule: AngleSchedule, target: TargetSpec | None = None,
                        max_n: int = MAX_QUBITS) -> OverlapResult:
    state = run_circuit(n, schedule, target, max_n)
    t = (target or TargetSpec.zeros(n)).index
    return OverlapResult.from_amplitude(state.amps[t])


@lru_cache(maxsize=None)
def dicke_basis(n: int) -> np.ndarray:
    """Columns are the unit-norm Dicke states |D_k>, k = 0..n, in the 2^n basis."""
    _check_cap(n, MAX_QUBITS)
    weights = np.array([bin(i).count("1") for i in range(2**n)])
    basis = np.zeros((2**n, n + 1))
    for k in range(n + 1):
        basis[weights == k, k] = 1.0 / np.sqrt(comb(n, k))
    basis.setflags(write=False)
    return basis


def dense_mixer(n: int, beta: float) -> np.ndarray:
    """Full 2^n x 2^n matrix of exp(-i beta sum_j X_j) as a Kronecker product."""
    _check_cap(n, MAX_QUBITS)
    single = np.array([[np.cos(beta), -1j * np.sin(beta)],
                       [-1j * np.sin(beta), np.cos(beta)]])
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, single)
    return out


def project_to_dicke(state: StateVector) -> tuple[DickeState, float]:
    """Symmetric-subspace component of ``state`` and the norm of what is left."""
    basis = dicke_basis(state.n)
    coeffs = basis.T @ state.amps
    residual = state.amps - basis @ coeffs
    return DickeState(state.n, coeffs), float(np.linalg.norm(residual))
