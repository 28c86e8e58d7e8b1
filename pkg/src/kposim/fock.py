"""Truncated Fock space, ladder operators, and the KPO Hamiltonian.

The rotating-frame Kerr parametric oscillator Hamiltonian (hbar = 1)

    H = (chi/2) a+ a+ a a + Delta a+ a + p (a^2 + a+^2)

is split into a diagonal part H0 (Kerr + detuning) and the two-photon
drive V = a^2 + a+^2.  The Fock levels of H0 are

    E_n = Delta n + (chi/2) n (n - 1),

so |0> and |n> become degenerate when Delta = -(chi/2)(n - 1).  Everything
here is built dense on the lowest n_trunc number states; truncation
adequacy is checked elsewhere (see spectral.truncation_convergence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .units import ghz_to_angular, mhz_to_angular

__all__ = [
    "FockSpace",
    "KpoParams",
    "MatrixOperator",
    "QuantumState",
    "annihilation",
    "creation",
    "number_operator",
    "build_h0",
    "build_v",
    "build_hamiltonian",
    "lab_frame_hamiltonian",
    "fock_state",
    "plus_minus_superposition",
]

# Validity slacks for constructed states.
KET_NORM_TOL = 1e-10
DENSITY_HERM_TOL = 1e-10
DENSITY_TRACE_TOL = 1e-9
DENSITY_POSITIVITY_SLACK = 1e-8


@dataclass(frozen=True)
class FockSpace:
    """Bosonic mode truncated to the number states |0> .. |n_trunc - 1>."""

    n_trunc: int

    def __post_init__(self) -> None:
        if not isinstance(self.n_trunc, (int, np.integer)) or self.n_trunc < 2:
            raise ValueError(f"n_trunc must be an integer >= 2, got {self.n_trunc!r}")

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.n_trunc)


@dataclass(frozen=True)
class KpoParams:
    """Physical parameters of the driven Kerr resonator, all in rad/us.

    chi      Kerr nonlinearity
    delta    detuning (resonator frequency minus half the two-photon
             drive frequency)
    p        two-photon (parametric) drive amplitude, >= 0
    kappa_e  external single-photon loss rate, >= 0
    kappa_i  internal single-photon loss rate, >= 0
    omega_r  readout frequency used only for output-power conversion;
             optional
    """

    chi: float
    delta: float
    p: float = 0.0
    kappa_e: float = 0.0
    kappa_i: float = 0.0
    omega_r: float | None = None

    def __post_init__(self) -> None:
        for name in ("chi", "delta", "p", "kappa_e", "kappa_i"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.p < 0.0:
            raise ValueError(f"p must be >= 0, got {self.p}")
        if self.kappa_e < 0.0 or self.kappa_i < 0.0:
            raise ValueError("dissipation rates must be >= 0")
        if self.omega_r is not None and not math.isfinite(self.omega_r):
            raise ValueError(f"omega_r must be finite, got {self.omega_r!r}")

    @property
    def kappa(self) -> float:
        """Total single-photon loss rate."""
        return self.kappa_e + self.kappa_i

    @classmethod
    def from_mhz(
        cls,
        chi_over_2pi_mhz: float,
        delta_over_2pi_mhz: float = 0.0,
        p_over_2pi_mhz: float = 0.0,
        kappa_e_over_2pi_mhz: float = 0.0,
        kappa_i_over_2pi_mhz: float = 0.0,
        omega_r_over_2pi_ghz: float | None = None,
    ) -> "KpoParams":
        """Build from cyclic frequencies in MHz (omega_r in GHz)."""
        omega_r = None if omega_r_over_2pi_ghz is None else ghz_to_angular(omega_r_over_2pi_ghz)
        return cls(
            chi=mhz_to_angular(chi_over_2pi_mhz),
            delta=mhz_to_angular(delta_over_2pi_mhz),
            p=mhz_to_angular(p_over_2pi_mhz),
            kappa_e=mhz_to_angular(kappa_e_over_2pi_mhz),
            kappa_i=mhz_to_angular(kappa_i_over_2pi_mhz),
            omega_r=omega_r,
        )


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MatrixOperator:
    """Dense complex operator on a truncated Fock space."""

    space: FockSpace
    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.complex128)
        n = self.space.n_trunc
        if entries.shape != (n, n):
            raise ValueError(f"operator shape {entries.shape} does not match n_trunc={n}")
        object.__setattr__(self, "entries", _freeze(entries))

    def dagger(self) -> "MatrixOperator":
        return MatrixOperator(self.space, self.entries.conj().T.copy())

    def hermiticity_defect(self) -> float:
        """max |O - O+| over entries, for Hermiticity checks."""
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def is_hermitian(self, rel_tol: float = 1e-12) -> bool:
        scale = float(np.abs(self.entries).max())
        if scale == 0.0:
            return True
        return self.hermiticity_defect() <= rel_tol * scale

    def expectation(self, state: "QuantumState") -> complex:
        if state.kind == "ket":
            return complex(np.vdot(state.data, self.entries @ state.data))
        return complex(np.trace(self.entries @ state.data))

    def dump_text(self) -> str:
        """Plain-text dump for debugging: one row per line, entries as
        're,im' pairs separated by spaces.  Not a stability guarantee."""
        lines = []
        for row in self.entries:
            lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class QuantumState:
    """Pure ket or density matrix on a truncated Fock space.

    Kets must be normalized; density matrices must be Hermitian, unit
    trace, and positive up to a small numerical slack.
    """

    space: FockSpace
    kind: str
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n = self.space.n_trunc
        data = np.asarray(self.data, dtype=np.complex128)
        if self.kind == "ket":
            if data.shape != (n,):
                raise ValueError(f"ket shape {data.shape} does not match n_trunc={n}")
            norm = float(np.linalg.norm(data))
            if abs(norm - 1.0) > KET_NORM_TOL:
                raise ValueError(f"ket norm deviates from 1 by {abs(norm - 1.0):.3e}")
        elif self.kind == "density":
            if data.shape != (n, n):
                raise ValueError(f"density shape {data.shape} does not match n_trunc={n}")
            herm = float(np.abs(data - data.conj().T).max())
            if herm > DENSITY_HERM_TOL:
                raise ValueError(f"density Hermiticity defect {herm:.3e} exceeds {DENSITY_HERM_TOL}")
            trace = complex(np.trace(data))
            if abs(trace - 1.0) > DENSITY_TRACE_TOL:
                raise ValueError(f"density trace deviates from 1 by {abs(trace - 1.0):.3e}")
            min_eig = float(np.linalg.eigvalsh(data).min())
            if min_eig < -DENSITY_POSITIVITY_SLACK:
                raise ValueError(f"density min eigenvalue {min_eig:.3e} below positivity slack")
        else:
            raise ValueError(f"kind must be 'ket' or 'density', got {self.kind!r}")
        object.__setattr__(self, "data", _freeze(data))

    def as_density(self) -> "QuantumState":
        """Promote a ket to |psi><psi|; densities pass through."""
        if self.kind == "density":
            return self
        rho = np.outer(self.data, self.data.conj())
        return QuantumState(self.space, "density", rho)

    def photon_number(self) -> float:
        """Expectation value of a+ a."""
        levels = self.space.levels
        if self.kind == "ket":
            return float(np.sum(levels * np.abs(self.data) ** 2))
        return float(np.real(np.sum(levels * np.real(np.diag(self.data)))))

    def fidelity(self, other: "QuantumState") -> float:
        """|<self|other>|^2 for kets."""
        if self.kind != "ket" or other.kind != "ket":
            raise ValueError("fidelity helper is defined for kets")
        return float(np.abs(np.vdot(self.data, other.data)) ** 2)


def annihilation(space: FockSpace) -> MatrixOperator:
    """Ladder operator a with exact entries sqrt(k) on the superdiagonal."""
    n = space.n_trunc
    a = np.zeros((n, n), dtype=np.complex128)
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return MatrixOperator(space, a)


def creation(space: FockSpace) -> MatrixOperator:
    """Ladder operator a+."""
    return annihilation(space).dagger()


def number_operator(space: FockSpace) -> MatrixOperator:
    """a+ a, diagonal with the occupation numbers."""
    return MatrixOperator(space, np.diag(space.levels.astype(np.complex128)))


def build_h0(space: FockSpace, params: KpoParams) -> MatrixOperator:
    """Undriven part: diagonal with Delta n + (chi/2) n (n - 1)."""
    n = space.levels
    diag = params.delta * n + 0.5 * params.chi * n * (n - 1)
    return MatrixOperator(space, np.diag(diag.astype(np.complex128)))


def build_v(space: FockSpace) -> MatrixOperator:
    """Two-photon drive operator a^2 + a+^2.

    Couples only Fock states whose indices differ by exactly 2, so
    <n|V|0> = 0 for every n other than 2.
    """
    a = annihilation(space).entries
    v = a @ a
    v = v + v.conj().T
    return MatrixOperator(space, v)


def build_hamiltonian(space: FockSpace, params: KpoParams) -> MatrixOperator:
    """Rotating-frame Hamiltonian H = H0 + p V (Hermitian by construction)."""
    h = build_h0(space, params).entries + params.p * build_v(space).entries
    return MatrixOperator(space, h)


def lab_frame_hamiltonian(
    space: FockSpace, chi: float, omega_c: float, p: float, omega_p: float, t: float
) -> MatrixOperator:
    """Lab-frame Hamiltonian at time t:

        (chi/2) a+ a+ a a + omega_c a+ a + 2 p (a^2 + a+^2) cos(omega_p t)

    Housed for completeness and documentation; this artifact never
    integrates it in time.  The rotating-frame build_hamiltonian with
    delta = omega_c - omega_p/2 is the operational model.
    """
    n = space.levels
    diag = omega_c * n + 0.5 * chi * n * (n - 1)
    h = np.diag(diag.astype(np.complex128))
    h += 2.0 * p * math.cos(omega_p * t) * build_v(space).entries
    return MatrixOperator(space, h)


def fock_state(space: FockSpace, n: int) -> QuantumState:
    """Number state |n>."""
    if not 0 <= n < space.n_trunc:
        raise IndexError(f"Fock index {n} out of range [0, {space.n_trunc})")
    ket = np.zeros(space.n_trunc, dtype=np.complex128)
    ket[n] = 1.0
    return QuantumState(space, "ket", ket)


def plus_minus_superposition(space: FockSpace, n: int, sign: str) -> QuantumState:
    """Equal-weight superposition (|0> +/- |n>) / sqrt(2)."""
    if not 0 < n < space.n_trunc:
        raise IndexError(f"Fock index {n} out of range (0, {space.n_trunc})")
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    ket = np.zeros(space.n_trunc, dtype=np.complex128)
    ket[0] = 1.0 / math.sqrt(2.0)
    ket[n] = (1.0 if sign == "+" else -1.0) / math.sqrt(2.0)
    return QuantumState(space, "ket", ket)
