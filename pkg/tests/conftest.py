"""Shared helpers: independent reference constructions for cross-checks.

Everything here is built from raw numpy/scipy, deliberately not reusing
the package's own operator builders, so tests compare two separate
routes to the same physics.
"""

import numpy as np
import scipy.linalg

TWO_PI = 2.0 * np.pi


def ref_ladder(n_trunc: int) -> np.ndarray:
    a = np.zeros((n_trunc, n_trunc), dtype=complex)
    for k in range(1, n_trunc):
        a[k - 1, k] = np.sqrt(k)
    return a


def ref_hamiltonian(n_trunc: int, chi: float, delta: float, p: float) -> np.ndarray:
    """Kerr + detuning + two-photon drive, all rates in rad/us."""
    a = ref_ladder(n_trunc)
    ad = a.conj().T
    ns = np.arange(n_trunc)
    h0 = np.diag(delta * ns + 0.5 * chi * ns * (ns - 1)).astype(complex)
    return h0 + p * (a @ a + ad @ ad)


def ref_liouvillian(n_trunc: int, chi: float, delta: float, p: float, kappa: float) -> np.ndarray:
    """Column-stacking master-equation generator."""
    h = ref_hamiltonian(n_trunc, chi, delta, p)
    a = ref_ladder(n_trunc)
    nop = a.conj().T @ a
    eye = np.eye(n_trunc)
    lmat = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    lmat += kappa * np.kron(a.conj(), a)
    lmat -= 0.5 * kappa * (np.kron(eye, nop) + np.kron(nop.T, eye))
    return lmat


def ref_gksl_rhs(h: np.ndarray, a: np.ndarray, kappa: float, rho: np.ndarray) -> np.ndarray:
    """Master-equation right-hand side straight from its definition."""
    ad = a.conj().T
    nop = ad @ a
    out = -1j * (h @ rho - rho @ h)
    out += kappa * (a @ rho @ ad) - 0.5 * kappa * (nop @ rho + rho @ nop)
    return out


def ref_splitting_mhz(n_trunc: int, chi_mhz: float, p_mhz: float, partner: int) -> float:
    """|E+ - E-| via dense diagonalization and fidelity matching, in MHz.

    Independent oracle for the spectral module: raw scipy eigh plus
    argmax matching against (|0> +/- |n>)/sqrt(2).
    """
    chi, p = TWO_PI * chi_mhz, TWO_PI * p_mhz
    delta = -0.5 * chi * (partner - 1)
    energies, states = scipy.linalg.eigh(ref_hamiltonian(n_trunc, chi, delta, p))
    phi_p = np.zeros(n_trunc, dtype=complex)
    phi_m = np.zeros(n_trunc, dtype=complex)
    phi_p[0] = phi_p[partner] = 2**-0.5
    phi_m[0] = 2**-0.5
    phi_m[partner] = -(2**-0.5)
    ip = int(np.argmax(np.abs(phi_p.conj() @ states) ** 2))
    im = int(np.argmax(np.abs(phi_m.conj() @ states) ** 2))
    return float(abs(energies[ip] - energies[im]) / TWO_PI)
