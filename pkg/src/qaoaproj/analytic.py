"""Closed forms for single-layer projector QAOA and the depth recursion.

All single-layer expressions take the target |0...0> and the normalisation
in which |g|^2 is the success probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

BISECTION_TOL = 1e-14
PATHOLOGY_TOL = 1e-12


class SolverFailure(RuntimeError):
    """Bracketing root search could not proceed (no sign change)."""


@dataclass(frozen=True)
class P1Solution:
    n: int
    beta: float
    gamma: float
    magnitude_sq: float
    branch_k: int = 1
    residual: float = 0.0


@dataclass(frozen=True)
class AsymptoticAngles:
    n: int
    beta: float
    gamma: float


@dataclass(frozen=True)
class Stationarity:
    """Wrapped residuals of arg g = -gamma and arg A = (gamma + pi)/2.

    ``pathology`` names the degenerate case when one applies; the residuals
    are then NaN.
    """

    r_gamma: float
    r_beta: float
    pathology: str | None = None

    @property
    def applicable(self) -> bool:
        return self.pathology is None


def wrap_angle(x):
    """Map angles into (-pi, pi]."""
    y = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)
    return float(y) if np.ndim(y) == 0 else y


def cos_power(beta, n: int):
    """cos(beta)**n evaluated via exp(n log|cos beta|) with the sign kept apart.

    Keeps the magnitude finite-or-zero for n in the hundreds without pow
    overflow warnings on intermediate terms.
    """
    c = np.cos(np.asarray(beta, dtype=float))
    sign = np.where(c < 0, (-1.0) ** n, 1.0)
    with np.errstate(divide="ignore"):
        mag = np.exp(n * np.log(np.abs(c)))
    out = sign * mag
    return float(out) if np.ndim(out) == 0 else out


def overlap_sq_p1(n: int, gamma, beta):
    c_n = cos_power(beta, n)
    return 2.0**-n * (
        1.0
        + 2.0 * c_n * (np.cos(gamma - n * beta) - np.cos(n * beta))
        + 2.0 * c_n**2 * (1.0 - np.cos(gamma))
    )


def overlap_complex_p1(n: int, gamma, beta):
    c_n = cos_power(beta, n)
    return 2.0 ** (-n / 2) * (np.exp(-1j * gamma) * c_n + (np.exp(-1j * beta * n) - c_n))


def overlap_sq_on_line(n: int, beta):
    """|g|^2 restricted to gamma = pi - 2 beta."""
    c_n1 = cos_power(beta, n + 1)
    return 2.0**-n * (1.0 + 4.0 * c_n1 * (c_n1 - np.cos((n + 1) * beta)))


def beta_equation_residual(n: int, beta):
    """sin((n+2) beta) - sin(2 beta) cos^n(beta); roots are the line's critical points."""
    return np.sin((n + 2) * beta) - np.sin(2 * beta) * cos_power(beta, n)


def commutator_amplitude(n: int, beta: float) -> complex:
    """A = <+|[P, H_x] e^{i beta H_x}|0> = -n cos^{n-1}(beta) e^{-i beta} / 2^{n/2}."""
    return -n * cos_power(beta, n - 1) * np.exp(-1j * beta) * 2.0 ** (-n / 2)


def bisect(f: Callable[[float], float], lo: float, hi: float,
           tol: float = BISECTION_TOL, max_iter: int = 200) -> float:
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise SolverFailure(f"no sign change on [{lo!r}, {hi!r}]: f={f_lo:.3e}, {f_hi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def branch_bracket(n: int, k: int) -> tuple[float, float]:
    width = math.pi / (n + 2)
    return (k - 0.5) * width, (k + 0.5) * width


def solve_branch(n: int, k: int) -> P1Solution:
    """Root of the beta equation near k pi/(n+2), placed on the line gamma = pi - 2 beta."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    lo, hi = branch_bracket(n, k)
    beta = bisect(lambda b: beta_equation_residual(n, b), lo, hi)
    return P1Solution(
        n=n,
        beta=beta,
        gamma=math.pi - 2 * beta,
        magnitude_sq=float(overlap_sq_on_line(n, beta)),
        branch_k=k,
        residual=float(beta_equation_residual(n, beta)),
    )


def solve_optimal_p1(n: int) -> P1Solution:
    """Optimal single-layer angles: the k = 1 root of the beta equation."""
    return solve_branch(n, 1)


def asymptotic_angles(n: int) -> AsymptoticAngles:
    if n < 5:
        raise ValueError(f"asymptotic expansion needs n >= 5, got {n}")
    beta = math.pi / n - 4 * math.pi / n**2
    return AsymptoticAngles(n=n, beta=beta, gamma=math.pi - 2 * beta)


def stationarity_residuals(n: int, gamma: float, beta: float) -> Stationarity:
    g = complex(overlap_complex_p1(n, gamma, beta))
    checks = (
        ("sin(gamma/2) = 0", abs(math.sin(gamma / 2))),
        ("cos(beta) = 0", abs(math.cos(beta))),
        ("g = 0", abs(g)),
    )
    for name, value in checks:
        if value < PATHOLOGY_TOL:
            return Stationarity(math.nan, math.nan, name)
    # arg A from its closed form; the sign of cos^{n-1} decides pi - beta vs -beta
    arg_a = math.pi - beta if cos_power(beta, n - 1) > 0 else -beta
    r_gamma = wrap_angle(math.atan2(g.imag, g.real) + gamma)
    r_beta = wrap_angle(arg_a - (gamma + math.pi) / 2)
    return Stationarity(r_gamma, r_beta)


def depth0_overlap(n: int, mixer_angle: float = 0.0) -> complex:
    """g_0 after a bare mixer: <0|U(b)|+> = 2^{-n/2} e^{-i b n}."""
    return 2.0 ** (-n / 2) * np.exp(-1j * mixer_angle * n)


def recursion_step(n: int, g_evaluator: Callable[[np.ndarray, np.ndarray], complex],
                   gammas, betas, gamma_new: float, beta_new: float) -> complex:
    """g_{p+1} from two depth-p evaluations.

    g_{p+1} = g_p(gammas, betas') + g_p(gammas, betas) cos^n(beta_new) (e^{-i gamma_new} - 1)
    where betas' adds beta_new to the last mixer angle only. At p = 0 the
    evaluator is not called; the bare-mixer overlap is used instead.
    """
    gammas = np.asarray(gammas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    kick = cos_power(beta_new, n) * (np.exp(-1j * gamma_new) - 1.0)
    if len(gammas) == 0:
        return depth0_overlap(n, beta_new) + depth0_overlap(n) * kick
    shifted = betas.copy()
    shifted[-1] += beta_new
    return complex(g_evaluator(gammas, shifted) + g_evaluator(gammas, betas) * kick)


def overlap_by_recursion(n: int, gammas, betas) -> complex:
    """Build g_p layer by layer from the recursion alone (no state vectors)."""
    gammas = np.asarray(gammas, dtype=float)
    betas = np.asarray(betas, dtype=float)

    def evaluate(gs, bs):
        if len(gs) == 0:
            return depth0_overlap(n)
        return recursion_step(n, evaluate, gs[:-1], bs[:-1], gs[-1], bs[-1])

    return complex(evaluate(gammas, betas))
