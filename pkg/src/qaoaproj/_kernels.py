"""Compiled inner loops: overlap-and-gradient evaluation and the per-row ascent.

Everything works in the mixer eigenbasis (see symsim): ``evals`` are the
eigenvalues n - 2k, ``v0`` the eigenvector components on |0...0> and ``psi0``
the initial state in eigen-coordinates.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_EPS = np.finfo(np.float64).eps


@njit(cache=True)
def _value_grad(evals, v0, psi0, x, p, grad):
    """|g|^2 at x = (gammas, betas); writes d|g|^2/dx into ``grad``."""
    d = evals.shape[0]
    states = np.empty((p, d), dtype=np.complex128)
    before = np.empty(p, dtype=np.complex128)
    phase_b = np.empty((p, d), dtype=np.complex128)
    phase_g = np.empty(p, dtype=np.complex128)
    psi = psi0.copy()
    bra = np.empty(d, dtype=np.complex128)
    for k in range(p):
        phase_g[k] = np.exp(-1j * x[k])
        for j in range(d):
            phase_b[k, j] = np.exp(-1j * x[p + k] * evals[j])
    for k in range(p):
        a = 0j
        for j in range(d):
            a += psi[j] * v0[j]
        before[k] = a
        kick = (phase_g[k] - 1.0) * a
        for j in range(d):
            psi[j] = (psi[j] + kick * v0[j]) * phase_b[k, j]
            states[k, j] = psi[j]
    g = 0j
    for j in range(d):
        g += psi[j] * v0[j]
        bra[j] = v0[j]
    gc = np.conj(g)
    for k in range(p - 1, -1, -1):
        acc = 0j
        for j in range(d):
            acc += bra[j] * evals[j] * states[k, j]
        grad[p + k] = 2.0 * (gc * (-1j) * acc).real
        b0 = 0j
        for j in range(d):
            bra[j] *= phase_b[k, j]
            b0 += bra[j] * v0[j]
        grad[k] = 2.0 * (gc * (-1j) * phase_g[k] * b0 * before[k]).real
        kick = (phase_g[k] - 1.0) * b0
        for j in range(d):
            bra[j] += kick * v0[j]
    return min(g.real * g.real + g.imag * g.imag, 1.0)


@njit(cache=True)
def overlap_and_gradient(evals, v0, psi0, gammas, betas):
    r, p = gammas.shape
    values = np.empty(r)
    grads = np.empty((r, 2 * p))
    x = np.empty(2 * p)
    for row in range(r):
        x[:p] = gammas[row]
        x[p:] = betas[row]
        values[row] = _value_grad(evals, v0, psi0, x, p, grads[row])
    return values, grads


@njit(cache=True)
def _masked_norm(g, free):
    s = 0.0
    for i in range(g.shape[0]):
        if free[i]:
            s += g[i] * g[i]
    return np.sqrt(s)


@njit(cache=True)
def ascend_rows(evals, v0, psi0, starts, free, max_iterations, gradient_tolerance,
                armijo, shrink):
    """Gradient ascent with Barzilai-Borwein trial steps and Armijo backtracking.

    ``starts`` is (R, 2p); only coordinates with ``free`` set move. Same rules
    as the pure-Python ``train.ascend``, one row at a time.
    """
    r, dim = starts.shape
    p = dim // 2
    xs = starts.copy()
    values = np.empty(r)
    gnorms = np.empty(r)
    iterations = np.zeros(r, dtype=np.int64)
    g = np.empty(dim)
    g_new = np.empty(dim)
    g_prev = np.empty(dim)
    x_prev = np.empty(dim)
    trial = np.empty(dim)
    for row in range(r):
        x = xs[row]
        f = _value_grad(evals, v0, psi0, x, p, g)
        for i in range(dim):
            if not free[i]:
                g[i] = 0.0
        gnorm = _masked_norm(g, free)
        step = 1.0
        have_prev = False
        for _ in range(max_iterations):
            if gnorm < gradient_tolerance:
                break
            if have_prev:
                sy = 0.0
                ss = 0.0
                for i in range(dim):
                    s_i = x[i] - x_prev[i]
                    sy += s_i * (g[i] - g_prev[i])
                    ss += s_i * s_i
                # ascent: curvature along s is negative near a maximum
                if sy < 0:
                    step = min(ss / -sy, 1e3)
                else:
                    step = max(step, 1.0)
            t = step
            slack = 16 * _EPS * max(abs(f), 1e-300)
            accepted = False
            while True:
                for i in range(dim):
                    trial[i] = x[i] + t * g[i]
                f_new = _value_grad(evals, v0, psi0, trial, p, g_new)
                for i in range(dim):
                    if not free[i]:
                        g_new[i] = 0.0
                gain = armijo * t * gnorm * gnorm
                if f_new >= f + gain:
                    accepted = True
                elif gain < slack and f_new >= f - slack and _masked_norm(g_new, free) < gnorm:
                    accepted = True
                if accepted:
                    break
                t *= shrink
                if t * gnorm < 1e-18:
                    break
            if not accepted:
                break
            x_prev[:] = x
            g_prev[:] = g
            x[:] = trial
            g[:] = g_new
            f = f_new
            gnorm = _masked_norm(g, free)
            step = t
            have_prev = True
            iterations[row] += 1
        values[row] = f
        gnorms[row] = gnorm
    return xs, values, gnorms, iterations
