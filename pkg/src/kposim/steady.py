"""Liouvillian construction, steady states, and output-power conversion.

The single-photon-loss master equation is vectorized under column
stacking, vec(A X B) = (B^T kron A) vec(X), giving the dense Liouvillian

    L = -i (I kron H - H^T kron I)
        + kappa (conj(a) kron a)
        - (kappa/2) (I kron a+ a + (a+ a)^T kron I).

For kappa > 0 its null space is one dimensional and holds the unique
steady state, solved here by singular value decomposition.  The steady
photon number converts to emitted microwave power via
P_o = hbar * omega_r * kappa_e * <a+ a>.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fock import FockSpace, KpoParams, MatrixOperator, QuantumState, annihilation, build_hamiltonian
from .units import HBAR_JS, RAD_PER_US_TO_RAD_PER_S

__all__ = [
    "Liouvillian",
    "SteadyStateError",
    "build_liouvillian",
    "steady_state",
    "steady_state_with_residual",
    "steady_photon_number",
    "output_power",
    "vectorize_density",
    "unvectorize_density",
]

# Singular values below this fraction of the largest are counted as null.
NULL_SPACE_REL_TOL = 1e-12
RESIDUAL_REL_TOL = 1e-8
# Largest negative eigenvalue magnitude the positivity clip will absorb.
CLIP_GUARD = 1e-6


class SteadyStateError(RuntimeError):
    """Null-space solve failed or is ill-posed (e.g. kappa = 0)."""


@dataclass(frozen=True)
class Liouvillian:
    """Dense superoperator acting on column-stacked density matrices."""

    space: FockSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        dim = self.space.n_trunc**2
        matrix = np.asarray(self.matrix, dtype=np.complex128)
        if matrix.shape != (dim, dim):
            raise ValueError(f"Liouvillian shape {matrix.shape}, expected {(dim, dim)}")
        object.__setattr__(self, "matrix", matrix)


def vectorize_density(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvectorize_density(vec: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(vec).reshape((n, n), order="F")


def build_liouvillian(space: FockSpace, params: KpoParams) -> Liouvillian:
    """Assemble the master-equation generator for the given parameters.

    kappa = 0 is allowed (purely unitary generator) but flagged, since
    the steady state is then not unique.
    """
    kappa = params.kappa
    if kappa == 0.0:
        warnings.warn("kappa = 0: Liouvillian has a degenerate null space", stacklevel=2)
    h = build_hamiltonian(space, params).entries
    a = annihilation(space).entries
    nop = (a.conj().T @ a).real.astype(np.complex128)
    eye = np.eye(space.n_trunc, dtype=np.complex128)

    lmat = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    if kappa > 0.0:
        lmat += kappa * np.kron(a.conj(), a)
        lmat -= 0.5 * kappa * (np.kron(eye, nop) + np.kron(nop.T, eye))
    return Liouvillian(space, lmat)


def steady_state_with_residual(
    space: FockSpace, params: KpoParams
) -> tuple[QuantumState, float]:
    """Steady state plus the norm of the generator applied to it.

    The right-singular vector of the smallest singular value is
    Hermitian-symmetrized and trace-normalized.  Tiny negative
    eigenvalues from the finite-precision null vector (possible when
    kappa is many orders below the Hamiltonian scales) are clipped to
    zero; the clip is guarded and the residual is verified on the
    returned state.
    """
    if params.kappa <= 0.0:
        raise SteadyStateError("steady state requires kappa = kappa_e + kappa_i > 0")
    liouv = build_liouvillian(space, params)
    lmat = liouv.matrix
    _, svals, vh = scipy.linalg.svd(lmat)
    null_count = int(np.sum(svals <= NULL_SPACE_REL_TOL * svals[0]))
    if null_count != 1:
        raise SteadyStateError(
            f"null space dimension {null_count} (expected 1); "
            "kappa may be zero or the Liouvillian numerically degenerate"
        )

    n = space.n_trunc
    rho = unvectorize_density(vh[-1].conj(), n)
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.trace(rho).real
    if abs(trace) < 1e-14:
        raise SteadyStateError("null vector has vanishing trace; cannot normalize")
    rho = rho / trace

    eigvals, eigvecs = scipy.linalg.eigh(rho)
    min_eig = float(eigvals.min())
    if min_eig < -CLIP_GUARD:
        raise SteadyStateError(
            f"steady-state solve produced eigenvalue {min_eig:.3e}; "
            "null vector too contaminated to trust"
        )
    if min_eig < 0.0:
        clipped = np.clip(eigvals, 0.0, None)
        rho = (eigvecs * clipped) @ eigvecs.conj().T
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real

    residual = float(np.linalg.norm(lmat @ vectorize_density(rho)))
    bound = RESIDUAL_REL_TOL * float(np.abs(lmat).max())
    if residual > bound:
        raise SteadyStateError(
            f"steady-state residual {residual:.3e} exceeds bound {bound:.3e}"
        )
    return QuantumState(space, "density", rho), residual


def steady_state(space: FockSpace, params: KpoParams) -> QuantumState:
    """Unique steady state of the master equation for kappa > 0."""
    state, _ = steady_state_with_residual(space, params)
    return state


def steady_photon_number(rho: QuantumState) -> float:
    """Tr(a+ a rho) with a guard on the imaginary residue."""
    if rho.kind != "density":
        raise ValueError("steady_photon_number expects a density matrix")
    space = rho.space
    nop = MatrixOperator(space, np.diag(space.levels.astype(np.complex128)))
    value = nop.expectation(rho)
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ValueError(f"photon number has imaginary residue {value.imag:.3e}")
    return float(value.real)


def output_power(photon_number: float, params: KpoParams) -> float:
    """Emitted power hbar * omega_r * kappa_e * <a+ a> in watts.

    omega_r and kappa_e are converted from rad/us to rad/s.
    """
    if params.omega_r is None:
        raise ValueError("output power requires omega_r in the parameters")
    if photon_number < 0.0:
        raise ValueError(f"photon number must be >= 0, got {photon_number}")
    omega_r_si = params.omega_r * RAD_PER_US_TO_RAD_PER_S
    kappa_e_si = params.kappa_e * RAD_PER_US_TO_RAD_PER_S
    return HBAR_JS * omega_r_si * kappa_e_si * photon_number
