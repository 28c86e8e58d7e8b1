"""Time evolution of the driven Kerr resonator.

Closed evolution solves the Schroedinger equation by eigendecomposition
of the (time-independent) Hamiltonian, which is exact to eigensolver
precision.  Open evolution integrates the single-photon-loss master
equation

    d rho / dt = -i [H, rho] + (kappa/2)(2 a rho a+ - {a+ a, rho}),

with kappa = kappa_e + kappa_i, using an adaptive embedded Runge-Kutta
pair (see _integrate).  Both produce <a+ a>(t) and Fock-population
trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ._integrate import integrate_lindblad
from .fock import FockSpace, KpoParams, QuantumState, build_h0, build_hamiltonian, build_v

__all__ = [
    "EvolveSpec",
    "Trajectory",
    "IntegrationError",
    "schrodinger_evolve",
    "lindblad_evolve",
    "snapshot_photon_numbers",
    "first_return_period",
    "fringe_contrast",
]

TRACE_TOL = 1e-9
HERM_TOL = 1e-10


class IntegrationError(RuntimeError):
    """Integrator could not meet its tolerance; carries the time reached."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(message)
        self.t_reached = t_reached


@dataclass(frozen=True)
class EvolveSpec:
    """One time-evolution task.

    ``dt_out`` is the output sampling interval; the integrator's internal
    steps are independent of it.  ``rtol``/``atol`` apply to the open-mode
    stepper only.
    """

    params: KpoParams
    initial: QuantumState
    t_final: float
    dt_out: float
    mode: str = "open"
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self) -> None:
        if self.mode not in ("closed", "open"):
            raise ValueError(f"mode must be 'closed' or 'open', got {self.mode!r}")
        if not (self.t_final > 0.0 and math.isfinite(self.t_final)):
            raise ValueError(f"t_final must be positive and finite, got {self.t_final}")
        if not (0.0 < self.dt_out <= self.t_final):
            raise ValueError(f"dt_out must satisfy 0 < dt_out <= t_final, got {self.dt_out}")
        if self.mode == "closed" and self.initial.kind != "ket":
            raise ValueError("closed evolution requires a ket initial state")

    def output_times(self) -> np.ndarray:
        n_full = int(math.floor(self.t_final / self.dt_out + 1e-9))
        times = self.dt_out * np.arange(n_full + 1)
        if times[-1] < self.t_final - 1e-12 * self.t_final:
            times = np.append(times, self.t_final)
        return times


@dataclass(frozen=True)
class Trajectory:
    """Sampled evolution: photon number and Fock populations vs time."""

    times: np.ndarray = field(repr=False)
    photon_number: np.ndarray = field(repr=False)
    populations: np.ndarray | None = field(repr=False)
    final_state: QuantumState

    def write_csv(self, path) -> None:
        """Columns: time_us, photon_number, pop_0..pop_k; one header row."""
        import io

        buf = io.StringIO()
        n_pop = 0 if self.populations is None else self.populations.shape[1]
        header = ["time_us", "photon_number"] + [f"pop_{k}" for k in range(n_pop)]
        buf.write(",".join(header) + "\n")
        for i, t in enumerate(self.times):
            row = [f"{t:.17g}", f"{self.photon_number[i]:.17g}"]
            if n_pop:
                row += [f"{self.populations[i, k]:.17g}" for k in range(n_pop)]
            buf.write(",".join(row) + "\n")
        with open(path, "w", newline="\n") as fh:
            fh.write(buf.getvalue())


def schrodinger_evolve(spec: EvolveSpec) -> Trajectory:
    """Closed evolution psi(t) = exp(-i H t) psi(0) via eigendecomposition."""
    if spec.mode != "closed":
        raise ValueError("schrodinger_evolve requires mode='closed'")
    space = spec.initial.space
    h = build_hamiltonian(space, spec.params)
    energies, states = scipy.linalg.eigh(h.entries)
    coeff0 = states.conj().T @ spec.initial.data

    times = spec.output_times()
    levels = space.levels
    pops = np.empty((times.size, space.n_trunc))
    for i, t in enumerate(times):
        psi = states @ (np.exp(-1j * energies * t) * coeff0)
        pops[i] = np.abs(psi) ** 2
    norms = pops.sum(axis=1)
    if np.abs(norms - 1.0).max() > 1e-9:
        raise IntegrationError(
            f"norm drift {np.abs(norms - 1.0).max():.3e} exceeds 1e-9", float(times[-1])
        )
    photon = pops @ levels
    psi_final = states @ (np.exp(-1j * energies * times[-1]) * coeff0)
    psi_final = psi_final / np.linalg.norm(psi_final)
    final = QuantumState(space, "ket", psi_final)
    return Trajectory(times, photon, pops, final)


def _banded_hamiltonian_data(space: FockSpace, params: KpoParams):
    """Diagonal energies and two-photon couplings consumed by the stepper.

    Extracted from the built operators so the stepper shares the exact
    Hamiltonian construction used everywhere else.
    """
    e_diag = np.real(np.diag(build_h0(space, params).entries)).copy()
    v = build_v(space).entries
    n = space.n_trunc
    s2 = np.zeros(n)
    for k in range(2, n):
        s2[k] = v[k - 2, k].real
    return e_diag, s2


def lindblad_evolve(spec: EvolveSpec) -> Trajectory:
    """Open evolution under single-photon loss at rate kappa_e + kappa_i.

    The sampled density matrices are Hermitian-closed by construction of
    the update; trace is checked against drift at every output time.
    kappa = 0 reproduces unitary evolution and is allowed.
    """
    if spec.mode != "open":
        raise ValueError("lindblad_evolve requires mode='open'")
    initial = spec.initial.as_density()
    space = initial.space
    params = spec.params
    e_diag, s2 = _banded_hamiltonian_data(space, params)

    times = spec.output_times()
    out, n_steps, t_reached, ok = integrate_lindblad(
        e_diag, s2, params.p, params.kappa, initial.data, times, spec.rtol, spec.atol
    )
    if not ok:
        raise IntegrationError(
            f"step-size control failed at t = {t_reached:.6g} us "
            f"(rtol={spec.rtol}, atol={spec.atol})",
            t_reached,
        )

    levels = space.levels
    photon = np.empty(times.size)
    pops = np.empty((times.size, space.n_trunc))
    for i in range(times.size):
        rho = out[i]
        herm_defect = float(np.abs(rho - rho.conj().T).max())
        if herm_defect > HERM_TOL:
            raise IntegrationError(
                f"Hermiticity defect {herm_defect:.3e} at t = {times[i]:.6g} us", float(times[i])
            )
        trace = float(np.trace(rho).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise IntegrationError(
                f"trace drift {abs(trace - 1.0):.3e} at t = {times[i]:.6g} us", float(times[i])
            )
        diag = np.real(np.diag(rho))
        pops[i] = diag
        photon[i] = float(levels @ diag)

    rho_final = out[-1]
    rho_final = 0.5 * (rho_final + rho_final.conj().T)
    rho_final = rho_final / np.trace(rho_final).real
    final = QuantumState(space, "density", rho_final)
    return Trajectory(times, photon, pops, final)


def first_return_period(times: np.ndarray, values: np.ndarray) -> float:
    """Oscillation period from successive upward half-maximum crossings.

    Robust against small fast ripples superposed on a slow two-level
    oscillation: crossings of the half-maximum are located where the slow
    envelope is steepest.  Requires at least two upward crossings in the
    window; returns their separation (linear interpolation between
    samples).
    """
    values = np.asarray(values, dtype=float)
    half = 0.5 * (values.max() + values.min())
    crossings = []
    for i in range(1, values.size):
        if values[i - 1] < half <= values[i]:
            frac = (half - values[i - 1]) / (values[i] - values[i - 1])
            crossings.append(times[i - 1] + frac * (times[i] - times[i - 1]))
            if len(crossings) == 2:
                break
    if len(crossings) < 2:
        raise ValueError("fewer than two upward half-maximum crossings in the window")
    return float(crossings[1] - crossings[0])


def fringe_contrast(values: np.ndarray) -> float:
    """Max minus min of an observable over a parameter grid."""
    values = np.asarray(values, dtype=float)
    return float(values.max() - values.min())


def snapshot_photon_numbers(
    params: KpoParams,
    space: FockSpace,
    times: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> np.ndarray:
    """<a+ a> from the vacuum at the given sample times (one integration)."""
    from .fock import fock_state

    t_sorted = np.asarray(sorted(set(float(t) for t in times)))
    if t_sorted[0] <= 0.0:
        raise ValueError("snapshot times must be positive")
    e_diag, s2 = _banded_hamiltonian_data(space, params)
    initial = fock_state(space, 0).as_density()
    out, n_steps, t_reached, ok = integrate_lindblad(
        e_diag, s2, params.p, params.kappa, initial.data, t_sorted, rtol, atol
    )
    if not ok:
        raise IntegrationError(
            f"step-size control failed at t = {t_reached:.6g} us", t_reached
        )
    levels = space.levels
    values = {}
    for i, t in enumerate(t_sorted):
        rho = out[i]
        trace = float(np.trace(rho).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise IntegrationError(f"trace drift at snapshot t = {t:.6g} us", float(t))
        values[float(t)] = float(levels @ np.real(np.diag(rho)))
    return np.array([values[float(t)] for t in times])
