"""Built-in invariant suite backing the ``verify`` CLI command.

Each check is a standalone function returning a CheckResult, so the
suite can also be driven with deliberately corrupted inputs when testing
the checks themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import EvolveSpec, lindblad_evolve, schrodinger_evolve
from .fock import FockSpace, KpoParams, build_h0, build_hamiltonian, build_v, fock_state
from .spectral import (
    degeneracy_detuning,
    degenerate_pair_at,
    energy_splitting,
    perturbative_rabi_angular_frequency,
    scaling_exponent_fit,
    truncation_convergence,
)
from .steady import build_liouvillian, steady_photon_number, steady_state, vectorize_density
from .units import mhz_to_angular

__all__ = ["CheckResult", "run_all_checks", "CHECK_NAMES"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_hamiltonian_hermiticity(n_trunc: int = 30) -> CheckResult:
    """Built Hamiltonians are Hermitian to 1e-12 of their largest entry."""
    rng = np.random.default_rng(7)
    worst = 0.0
    space = FockSpace(n_trunc)
    for _ in range(5):
        params = KpoParams.from_mhz(
            chi_over_2pi_mhz=rng.uniform(-25, 25),
            delta_over_2pi_mhz=rng.uniform(-110, 10),
            p_over_2pi_mhz=rng.uniform(0, 2),
        )
        h = build_hamiltonian(space, params)
        scale = float(np.abs(h.entries).max())
        worst = max(worst, h.hermiticity_defect() / scale)
    return CheckResult("hamiltonian_hermiticity", worst <= 1e-12, f"max defect {worst:.2e}")


def check_h0_diagonal(n_trunc: int = 30) -> CheckResult:
    """The undriven Hamiltonian has exactly zero off-diagonal entries."""
    space = FockSpace(n_trunc)
    params = KpoParams.from_mhz(18.0, -9.0)
    h0 = build_h0(space, params).entries
    off = h0 - np.diag(np.diag(h0))
    ok = not np.any(off != 0.0)
    return CheckResult("h0_diagonal", ok, "off-diagonal entries all zero" if ok else "nonzero found")


def check_drive_parity(n_trunc: int = 30) -> CheckResult:
    """The two-photon drive couples only Fock states two indices apart."""
    v = build_v(FockSpace(n_trunc)).entries
    bad = 0.0
    for i in range(n_trunc):
        for j in range(n_trunc):
            if abs(i - j) != 2 and v[i, j] != 0.0:
                bad = max(bad, abs(v[i, j]))
    return CheckResult("drive_parity_selection", bad == 0.0, f"max forbidden element {bad:.2e}")


def check_degeneracy_condition(n_trunc: int = 30) -> CheckResult:
    """E_0 = E_n at the degeneracy detuning, to floating-point cancellation."""
    space = FockSpace(n_trunc)
    worst = 0.0
    for n in (2, 4, 6, 8, 10, 12):
        chi = mhz_to_angular(18.729)
        params = KpoParams(chi=chi, delta=degeneracy_detuning(chi, n))
        diag = np.real(np.diag(build_h0(space, params).entries))
        scale = max(abs(diag).max(), 1.0)
        worst = max(worst, abs(diag[n] - diag[0]) / scale)
    return CheckResult("degeneracy_condition", worst <= 1e-12, f"max |E_n - E_0|/scale {worst:.2e}")


def check_liouvillian_trace(lmat: np.ndarray | None = None, n_trunc: int = 12) -> CheckResult:
    """The trace functional annihilates the generator (trace preservation)."""
    if lmat is None:
        params = KpoParams.from_mhz(18.729, -28.0935, 0.5, kappa_e_over_2pi_mhz=0.3)
        lmat = build_liouvillian(FockSpace(n_trunc), params).matrix
    n = int(round(math.sqrt(lmat.shape[0])))
    trace_vec = vectorize_density(np.eye(n, dtype=complex))
    defect = float(np.abs(trace_vec @ lmat).max())
    scale = float(np.abs(lmat).max())
    ok = defect <= 1e-10 * max(scale, 1.0)
    return CheckResult("liouvillian_trace_functional", ok, f"defect {defect:.2e} (scale {scale:.2e})")


def check_liouvillian_hermiticity_preservation(n_trunc: int = 10) -> CheckResult:
    """L applied to a Hermitian matrix yields a Hermitian matrix."""
    params = KpoParams.from_mhz(18.729, -46.8225, 0.7, kappa_e_over_2pi_mhz=0.2, kappa_i_over_2pi_mhz=0.1)
    lmat = build_liouvillian(FockSpace(n_trunc), params).matrix
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(5):
        m = rng.normal(size=(n_trunc, n_trunc)) + 1j * rng.normal(size=(n_trunc, n_trunc))
        rho = 0.5 * (m + m.conj().T)
        out = (lmat @ vectorize_density(rho)).reshape((n_trunc, n_trunc), order="F")
        worst = max(worst, float(np.abs(out - out.conj().T).max() / max(np.abs(out).max(), 1.0)))
    return CheckResult("liouvillian_hermiticity_preservation", worst <= 1e-10, f"max rel defect {worst:.2e}")


def check_vacuum_steady_state(n_trunc: int = 12) -> CheckResult:
    """Undriven lossy oscillator settles into the vacuum."""
    params = KpoParams.from_mhz(18.729, -28.0935, 0.0, kappa_e_over_2pi_mhz=0.5)
    photon = steady_photon_number(steady_state(FockSpace(n_trunc), params))
    return CheckResult("vacuum_steady_state", abs(photon) <= 1e-10, f"<n> = {photon:.2e}")


def check_two_photon_splitting_law(n_trunc: int = 30) -> CheckResult:
    """Exact splitting at the |0>,|2> degeneracy matches 2 sqrt(2) p to 0.1%."""
    params = KpoParams.from_mhz(18.0, 0.0, 0.18)
    pair = degenerate_pair_at(FockSpace(n_trunc), params, 2)
    split = abs(energy_splitting(pair))
    law = abs(perturbative_rabi_angular_frequency(params, 2))
    rel = abs(split - law) / law
    return CheckResult("two_photon_splitting_law", rel <= 1e-3, f"rel deviation {rel:.2e}")


def _splitting_scaling(n: int, n_trunc: int) -> float:
    points = []
    for p_mhz in np.linspace(0.2, 1.0, 8):
        params = KpoParams.from_mhz(18.0, 0.0, float(p_mhz))
        pair = degenerate_pair_at(FockSpace(n_trunc), params, n)
        points.append((float(p_mhz), abs(energy_splitting(pair))))
    return scaling_exponent_fit(points)


def check_scaling_exponent_n4(n_trunc: int = 30) -> CheckResult:
    """Splitting at the 4-photon degeneracy scales as p^2 (5%)."""
    slope = _splitting_scaling(4, n_trunc)
    return CheckResult("scaling_exponent_n4", abs(slope - 2.0) <= 0.1, f"slope {slope:.4f}")


def check_scaling_exponent_n6(n_trunc: int = 30) -> CheckResult:
    """Splitting at the 6-photon degeneracy scales as p^3 (5%)."""
    slope = _splitting_scaling(6, n_trunc)
    return CheckResult("scaling_exponent_n6", abs(slope - 3.0) <= 0.15, f"slope {slope:.4f}")


def check_steady_vs_dynamics(n_trunc: int = 14) -> CheckResult:
    """Long-time master-equation evolution reaches the null-space steady state."""
    rng = np.random.default_rng(20260809)
    space = FockSpace(n_trunc)
    worst = 0.0
    for _ in range(2):
        params = KpoParams.from_mhz(
            chi_over_2pi_mhz=18.729,
            delta_over_2pi_mhz=rng.uniform(-60.0, 5.0),
            p_over_2pi_mhz=rng.uniform(0.1, 1.0),
            kappa_e_over_2pi_mhz=0.47,
            kappa_i_over_2pi_mhz=0.26,
        )
        t_final = 20.0 / params.kappa
        spec = EvolveSpec(
            params=params,
            initial=fock_state(space, 0),
            t_final=t_final,
            dt_out=t_final,
            mode="open",
            rtol=1e-10,
            atol=1e-13,
        )
        evolved = lindblad_evolve(spec).photon_number[-1]
        target = steady_photon_number(steady_state(space, params))
        worst = max(worst, abs(evolved - target) / max(abs(target), 1e-3))
        if abs(evolved - target) > max(1e-6 * abs(target), 1e-9):
            return CheckResult(
                "steady_vs_dynamics",
                False,
                f"diff {abs(evolved - target):.2e} at delta/2pi={params.delta/ (2*math.pi):.3f} MHz",
            )
    return CheckResult("steady_vs_dynamics", True, f"max rel diff {worst:.2e}")


def check_truncation_convergence(n_trunc: int = 30, partner: int = 12) -> CheckResult:
    """Splitting for the largest studied partner is truncation-converged."""
    if partner >= n_trunc:
        return CheckResult(
            "truncation_convergence",
            False,
            f"partner {partner} does not fit in n_trunc={n_trunc}",
        )
    params = KpoParams.from_mhz(18.0, 0.0, 1.0)
    value, converged = truncation_convergence(params, "splitting", n_trunc, partner=partner)
    return CheckResult("truncation_convergence", converged, f"splitting {value:.3e} rad/us")


def check_closed_open_equivalence(n_trunc: int = 16) -> CheckResult:
    """At kappa = 0 the master equation reproduces unitary evolution to 1e-6."""
    space = FockSpace(n_trunc)
    params = KpoParams.from_mhz(18.0, 0.0, 1.0)
    params = replace(params, delta=degeneracy_detuning(params.chi, 4))
    base = dict(params=params, initial=fock_state(space, 0), t_final=2.0, dt_out=0.02)
    closed = schrodinger_evolve(EvolveSpec(mode="closed", **base))
    open_ = lindblad_evolve(EvolveSpec(mode="open", rtol=1e-10, atol=1e-12, **base))
    diff = float(np.abs(closed.photon_number - open_.photon_number).max())
    purity = float(np.trace(open_.final_state.data @ open_.final_state.data).real)
    ok = diff <= 1e-6 and abs(purity - 1.0) <= 1e-8
    return CheckResult("closed_open_kappa0_equivalence", ok, f"max diff {diff:.2e}, purity defect {abs(purity-1):.2e}")


def check_open_evolution_sanity(n_trunc: int = 12) -> CheckResult:
    """Trace, Hermiticity, positivity, and monotone undriven decay."""
    space = FockSpace(n_trunc)
    params = KpoParams.from_mhz(18.729, -28.0935, 0.0, kappa_e_over_2pi_mhz=0.3)
    spec = EvolveSpec(
        params=params, initial=fock_state(space, 3), t_final=5.0, dt_out=0.05, mode="open"
    )
    traj = lindblad_evolve(spec)
    rho = traj.final_state.data
    trace_defect = abs(float(np.trace(rho).real) - 1.0)
    herm_defect = float(np.abs(rho - rho.conj().T).max())
    min_eig = float(np.linalg.eigvalsh(rho).min())
    decays = bool(np.all(np.diff(traj.photon_number) < 0.0))
    ok = trace_defect <= 1e-9 and herm_defect <= 1e-10 and min_eig >= -1e-8 and decays
    return CheckResult(
        "open_evolution_sanity",
        ok,
        f"trace {trace_defect:.1e}, herm {herm_defect:.1e}, min eig {min_eig:.1e}, monotone decay {decays}",
    )


_CHECKS = [
    check_hamiltonian_hermiticity,
    check_h0_diagonal,
    check_drive_parity,
    check_degeneracy_condition,
    check_liouvillian_trace,
    check_liouvillian_hermiticity_preservation,
    check_vacuum_steady_state,
    check_two_photon_splitting_law,
    check_scaling_exponent_n4,
    check_scaling_exponent_n6,
    check_steady_vs_dynamics,
    check_truncation_convergence,
    check_closed_open_equivalence,
    check_open_evolution_sanity,
]

CHECK_NAMES = [fn.__name__.removeprefix("check_") for fn in _CHECKS]


def run_all_checks(n_trunc: int = 30) -> list[CheckResult]:
    """Run every invariant check; n_trunc feeds the spectral checks."""
    results = []
    for fn in _CHECKS:
        if fn in (check_hamiltonian_hermiticity, check_h0_diagonal, check_drive_parity,
                  check_degeneracy_condition, check_two_photon_splitting_law,
                  check_scaling_exponent_n4, check_scaling_exponent_n6):
            results.append(fn(n_trunc=n_trunc))
        elif fn is check_truncation_convergence:
            results.append(fn(n_trunc=n_trunc, partner=12))
        else:
            results.append(fn())
    return results
