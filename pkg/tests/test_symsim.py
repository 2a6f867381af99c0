from __future__ import annotations

from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qaoaproj import oracle, symsim
from qaoaproj.symsim import AngleSchedule

angles = st.floats(-10, 10, allow_nan=False)


def test_p0_overlap_is_uniform_amplitude():
    for n in (1, 4, 9):
        res = symsim.simulate(n, AngleSchedule())
        assert res.magnitude_sq == pytest.approx(2.0**-n, abs=1e-15)


def test_initial_amplitudes_are_binomial():
    n = 7
    amps = symsim.dicke_init(n).amps
    expected = np.sqrt([comb(n, k) for k in range(n + 1)]) / 2 ** (n / 2)
    np.testing.assert_allclose(amps, expected, atol=1e-15)


def test_mixer_spectrum_is_integer_ladder():
    for n in (1, 2, 5, 12):
        evals, evecs = symsim.mixer_eigensystem(n)
        np.testing.assert_array_equal(evals, np.arange(-n, n + 1, 2))
        np.testing.assert_allclose(evecs.T @ evecs, np.eye(n + 1), atol=1e-13)


def test_propagator_matches_expm():
    n, beta = 6, 0.37
    off = symsim.mixer_offdiagonal(n)
    h = np.diag(off, 1) + np.diag(off, -1)
    np.testing.assert_allclose(symsim.build_mixer(n, beta).matrix, expm(-1j * beta * h), atol=1e-13)


def test_single_layer_overlap_at_pi_gamma():
    # gamma = pi flips the sign of the target amplitude, beta = 0 leaves it
    n = 3
    res = symsim.simulate(n, AngleSchedule([np.pi], [0.0]))
    assert res.g == pytest.approx(-(2.0 ** (-n / 2)), abs=1e-15)


def test_mixer_alone_gives_global_phase():
    n, beta = 5, 0.81
    state = symsim.dicke_init(n)
    out = symsim.apply_mixer(state, symsim.build_mixer(n, beta))
    np.testing.assert_allclose(out.amps, np.exp(-1j * beta * n) * state.amps, atol=1e-13)


def test_final_state_and_fast_path_agree(rng):
    for _ in range(20):
        n, p = int(rng.integers(1, 11)), int(rng.integers(1, 5))
        sched = AngleSchedule(rng.uniform(0, 7, p), rng.uniform(0, 4, p))
        g_state = symsim.final_state(n, sched).amps[0]
        assert abs(g_state - symsim.simulate(n, sched).g) < 1e-13


def test_matches_statevector_oracle(rng):
    for _ in range(60):
        n, p = int(rng.integers(1, 11)), int(rng.integers(1, 5))
        sched = AngleSchedule(rng.uniform(0, 2 * np.pi, p), rng.uniform(0, np.pi, p))
        assert abs(symsim.simulate(n, sched).g - oracle.statevector_overlap(n, sched).g) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.lists(st.tuples(angles, angles), min_size=1, max_size=5))
def test_norm_preserved(n, layers):
    sched = AngleSchedule([g for g, _ in layers], [b for _, b in layers])
    assert abs(symsim.final_state(n, sched).norm_sq - 1.0) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.lists(st.tuples(angles, angles), min_size=1, max_size=4))
def test_inversion_conjugates_overlap(n, layers):
    sched = AngleSchedule([g for g, _ in layers], [b for _, b in layers])
    g = symsim.simulate(n, sched).g
    g_inv = symsim.simulate(n, sched.inverted()).g
    assert abs(abs(g) - abs(g_inv)) < 1e-12
    assert abs(g_inv - (-1) ** (n * sched.p) * np.conj(g)) < 1e-12


def test_gradient_matches_finite_differences(rng):
    h = 1e-6
    for _ in range(30):
        n, p = int(rng.integers(1, 9)), int(rng.integers(1, 4))
        theta = np.concatenate([rng.uniform(0, 2 * np.pi, p), rng.uniform(0, np.pi, p)])
        grad = symsim.gradient(n, AngleSchedule.from_vector(theta))
        for i in range(2 * p):
            e = np.zeros(2 * p)
            e[i] = h
            fd = (symsim.overlap_sq(n, theta + e) - symsim.overlap_sq(n, theta - e)) / (2 * h)
            assert abs(grad[i] - fd) < 1e-6


def test_compiled_gradient_matches_reference(rng):
    gammas, betas = rng.uniform(0, 6, (8, 3)), rng.uniform(0, 3, (8, 3))
    v1, g1 = symsim.overlap_and_gradient_batch(7, gammas, betas)
    v2, g2 = symsim.overlap_and_gradient_reference(7, gammas, betas)
    np.testing.assert_allclose(v1, v2, atol=1e-14)
    np.testing.assert_allclose(g1, g2, atol=1e-13)


def test_eigen_state_prefix_consistency(rng):
    n = 6
    sched = AngleSchedule(rng.uniform(0, 6, 3), rng.uniform(0, 3, 3))
    _, v0, _ = symsim._eigen_frame(n)
    assert abs(symsim.eigen_state(n, sched) @ v0 - symsim.simulate(n, sched).g) < 1e-13


def test_canonical_ranges():
    sched = AngleSchedule([-1.0, 7.0], [-0.5, 4.0]).canonical()
    assert np.all((sched.gammas >= 0) & (sched.gammas < 2 * np.pi))
    assert np.all((sched.betas >= 0) & (sched.betas < np.pi))


def test_vector_roundtrip():
    sched = AngleSchedule([0.1, 0.2], [0.3, 0.4])
    back = AngleSchedule.from_vector(sched.to_vector())
    np.testing.assert_array_equal(back.gammas, sched.gammas)
    np.testing.assert_array_equal(back.betas, sched.betas)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        symsim.dicke_init(0)
    with pytest.raises(ValueError):
        symsim.dicke_init(31)
    with pytest.raises(ValueError):
        AngleSchedule([0.1, 0.2], [0.3])
    with pytest.raises(ValueError):
        symsim.apply_mixer(symsim.dicke_init(3), symsim.build_mixer(4, 0.1))
    with pytest.raises(ValueError):
        symsim.gradient(3, AngleSchedule())


def test_large_n_is_fine():
    res = symsim.simulate(30, AngleSchedule([2.0, 1.0], [0.1, 0.2]))
    assert 0.0 <= res.magnitude_sq <= 1.0
    assert res.energy_pperp == pytest.approx(1.0 - res.magnitude_sq)
