"""Validation of the adaptive stepper against exact solutions and scipy."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from kposim._integrate import (
    DP_A,
    DP_B,
    DP_E,
    DP_P,
    NUMBA_COMPILED,
    _integrate_core_py,
    gksl_apply,
    integrate_lindblad,
    stability_step_cap,
)
from kposim.units import TWO_PI

from conftest import ref_gksl_rhs, ref_ladder, ref_hamiltonian


def banded_data(n_trunc, chi_mhz, delta_mhz):
    chi, delta = TWO_PI * chi_mhz, TWO_PI * delta_mhz
    ns = np.arange(n_trunc)
    e_diag = delta * ns + 0.5 * chi * ns * (ns - 1.0)
    s2 = np.sqrt(ns * np.maximum(ns - 1.0, 0.0))
    return e_diag, s2


def test_rhs_matches_definition():
    rng = np.random.default_rng(2)
    n = 9
    chi_mhz, delta_mhz, p_mhz, kappa_mhz = 18.729, -46.8225, 0.8, 0.73
    e_diag, s2 = banded_data(n, chi_mhz, delta_mhz)
    h = ref_hamiltonian(n, TWO_PI * chi_mhz, TWO_PI * delta_mhz, TWO_PI * p_mhz)
    a = ref_ladder(n)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = 0.5 * (m + m.conj().T)
    out = np.zeros((n, n), dtype=complex)
    gksl_apply(e_diag, s2, TWO_PI * p_mhz, TWO_PI * kappa_mhz, rho, out)
    expected = ref_gksl_rhs(h, a, TWO_PI * kappa_mhz, rho)
    assert np.abs(out - expected).max() <= 1e-12 * np.abs(expected).max()


def test_exact_single_photon_decay():
    n = 6
    kappa = TWO_PI * 0.1
    e_diag, s2 = banded_data(n, 18.0, -9.0)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[1, 1] = 1.0
    times = np.linspace(0.0, 20.0, 9)
    out, steps, t_reached, ok = integrate_lindblad(
        e_diag, s2, 0.0, kappa, rho0, times, 1e-10, 1e-13
    )
    assert ok
    for i, t in enumerate(times):
        photon = float(np.real(np.trace(np.diag(np.arange(n)) @ out[i])))
        assert photon == pytest.approx(np.exp(-kappa * t), abs=1e-9)


def test_against_scipy_reference():
    n = 8
    chi_mhz, delta_mhz, p_mhz, kappa_mhz = 18.729, -28.0935, 0.55, 0.2
    e_diag, s2 = banded_data(n, chi_mhz, delta_mhz)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[0, 0] = 1.0
    times = np.array([0.7, 1.4, 2.0])
    out, _, _, ok = integrate_lindblad(
        e_diag, s2, TWO_PI * p_mhz, TWO_PI * kappa_mhz, rho0, times, 1e-9, 1e-12
    )
    assert ok

    h = ref_hamiltonian(n, TWO_PI * chi_mhz, TWO_PI * delta_mhz, TWO_PI * p_mhz)
    a = ref_ladder(n)

    def rhs(t, y):
        rho = y.reshape(n, n)
        return ref_gksl_rhs(h, a, TWO_PI * kappa_mhz, rho).reshape(-1)

    sol = solve_ivp(
        rhs, (0.0, 2.0), rho0.reshape(-1), method="DOP853", rtol=1e-11, atol=1e-14,
        t_eval=times, dense_output=False,
    )
    for i in range(times.size):
        ref = sol.y[:, i].reshape(n, n)
        assert np.abs(out[i] - ref).max() <= 2e-7


def test_hermiticity_closed_updates():
    n = 10
    e_diag, s2 = banded_data(n, 18.729, -65.551)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[0, 0] = 1.0
    times = np.linspace(0.1, 3.0, 5)
    out, _, _, ok = integrate_lindblad(
        e_diag, s2, TWO_PI * 0.9, TWO_PI * 0.73, rho0, times, 1e-8, 1e-11
    )
    assert ok
    for i in range(times.size):
        assert np.abs(out[i] - out[i].conj().T).max() <= 1e-10
        assert abs(np.trace(out[i]).real - 1.0) <= 1e-9


@pytest.mark.skipif(not NUMBA_COMPILED, reason="numba not available")
def test_python_fallback_matches_compiled():
    n = 5
    e_diag, s2 = banded_data(n, 18.0, -9.0)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[0, 0] = 1.0
    times = np.array([0.05, 0.1])
    cap = stability_step_cap(e_diag, s2, TWO_PI * 0.4, TWO_PI * 0.5)
    args = (e_diag, s2, TWO_PI * 0.4, TWO_PI * 0.5, rho0, times, 1e-8, 1e-11, 10**7,
            cap, DP_A, DP_B, DP_E, DP_P)
    out_py, steps_py, t_py, ok_py = _integrate_core_py(*args)
    out_jit, steps_jit, t_jit, ok_jit = integrate_lindblad(
        e_diag, s2, TWO_PI * 0.4, TWO_PI * 0.5, rho0, times, 1e-8, 1e-11
    )
    assert ok_py and ok_jit
    assert steps_py == steps_jit
    assert np.abs(out_py - out_jit).max() <= 1e-13


def test_step_budget_failure_reports_time_reached():
    n = 8
    e_diag, s2 = banded_data(n, 18.729, -65.551)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[0, 0] = 1.0
    times = np.array([5.0])
    out, steps, t_reached, ok = integrate_lindblad(
        e_diag, s2, TWO_PI * 1.0, TWO_PI * 0.73, rho0, times, 1e-10, 1e-13, max_steps=50
    )
    assert not ok
    assert 0.0 <= t_reached < 5.0
    assert steps == 50


def test_dense_output_between_steps():
    # sampling finer than the natural step must agree with a direct
    # integration to each time
    n = 6
    e_diag, s2 = banded_data(n, 18.0, -9.0)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[0, 0] = 1.0
    p, kappa = TWO_PI * 0.3, TWO_PI * 0.05
    fine = np.linspace(0.001, 0.5, 37)
    out_fine, _, _, ok = integrate_lindblad(e_diag, s2, p, kappa, rho0, fine, 1e-10, 1e-13)
    assert ok
    for idx in (0, 17, 36):
        single, _, _, ok1 = integrate_lindblad(
            e_diag, s2, p, kappa, rho0, np.array([fine[idx]]), 1e-12, 1e-14
        )
        assert ok1
        assert np.abs(out_fine[idx] - single[0]).max() <= 5e-9
