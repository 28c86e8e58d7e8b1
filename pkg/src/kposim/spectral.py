"""Exact diagonalization and perturbative analysis of multiphoton degeneracies.

At the degeneracy detuning Delta = -(chi/2)(n - 1) the drive hybridizes
|0> and |n> into a pair (|0> +/- |n>)/sqrt(2) split by an effective Rabi
angular frequency.  Closed forms exist for the lowest even partners:

    Omega_2 = 2 sqrt(2) p
    Omega_4 = 2 sqrt(6) p^2 / chi
    Omega_6 = 3 sqrt(5) p^3 / (2 chi^2)

These are the angular frequencies of the population oscillation
P(t) = (1/2)(1 - cos(Omega t)) and equal the exact eigenenergy splitting
E+ - E- at leading order; the splitting scales as p^(n/2) / chi^(n/2-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fock import FockSpace, KpoParams, MatrixOperator, build_hamiltonian, plus_minus_superposition

__all__ = [
    "EigenDecomposition",
    "DegeneratePair",
    "DegenerateMatchError",
    "degeneracy_detuning",
    "diagonalize",
    "match_degenerate_pair",
    "degenerate_pair_at",
    "energy_splitting",
    "perturbative_rabi_angular_frequency",
    "scaling_exponent_fit",
    "truncation_convergence",
]

HERMITICITY_REL_TOL = 1e-12

# Splittings below this multiple of the eigensolver noise floor are treated
# as exact degeneracies; the basis freedom is then resolved deterministically.
DEGENERACY_NOISE_FACTOR = 1e3


class DegenerateMatchError(RuntimeError):
    """Raised when a degenerate pair cannot be identified unambiguously."""


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectrum of a Hermitian operator, energies ascending.

    Column k of ``states`` is the orthonormal eigenvector paired with
    ``energies[k]``.
    """

    space: FockSpace
    energies: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DegeneratePair:
    """Eigenpair hybridizing |0> and |n>, identified by fidelity matching.

    ``e_plus``/``e_minus`` are the energies of the states matched to
    (|0> + |n>)/sqrt(2) and (|0> - |n>)/sqrt(2) respectively, in that
    order (not sorted).
    """

    n: int
    delta_star: float
    e_plus: float
    e_minus: float
    state_plus: np.ndarray = field(repr=False)
    state_minus: np.ndarray = field(repr=False)
    fid_plus: float
    fid_minus: float


def degeneracy_detuning(chi: float, n: int) -> float:
    """Detuning -(chi/2)(n - 1) at which |0> and |n> are degenerate."""
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2 != 0:
        raise ValueError(f"partner index must be a positive even integer >= 2, got {n!r}")
    return -0.5 * chi * (n - 1)


def diagonalize(h: MatrixOperator) -> EigenDecomposition:
    """Full Hermitian eigendecomposition with energies ascending."""
    if not h.is_hermitian(HERMITICITY_REL_TOL):
        scale = float(np.abs(h.entries).max())
        raise ValueError(
            f"operator is not Hermitian within tolerance: defect "
            f"{h.hermiticity_defect():.3e} vs {HERMITICITY_REL_TOL * scale:.3e}"
        )
    energies, states = scipy.linalg.eigh(h.entries)
    return EigenDecomposition(h.space, energies, states)


def _resolve_degenerate_subspace(
    decomp: EigenDecomposition, members: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Fix the basis freedom of a (numerically) degenerate eigenspace.

    Projects the target superpositions (|0> +/- |n>)/sqrt(2) onto the
    degenerate span and orthonormalizes.  For the 2-photon partner this
    coincides with diagonalizing the drive inside the subspace; for
    higher partners the drive block vanishes there and the projection is
    the deterministic completion.
    """
    basis = decomp.states[:, members]
    space = decomp.space
    phi_p = plus_minus_superposition(space, n, "+").data
    phi_m = plus_minus_superposition(space, n, "-").data
    # Components of the targets inside the degenerate span.
    coeff = basis.conj().T @ np.column_stack([phi_p, phi_m])
    raw = basis @ coeff
    # Orthonormalize (QR keeps the plus-like column first).
    q, _ = np.linalg.qr(raw)
    # Fix the arbitrary phase so overlaps are real positive.
    for col, target in zip(range(2), (phi_p, phi_m)):
        ov = np.vdot(q[:, col], target)
        if abs(ov) > 0:
            q[:, col] *= ov / abs(ov)
    return q[:, 0], q[:, 1], float(np.abs(np.vdot(phi_p, q[:, 0])) ** 2), float(
        np.abs(np.vdot(phi_m, q[:, 1])) ** 2
    )


def match_degenerate_pair(
    decomp: EigenDecomposition, n: int, delta_star: float = math.nan
) -> DegeneratePair:
    """Identify the eigenvectors with highest fidelity to (|0> +/- |n>)/sqrt(2).

    The two matches must be distinct eigenvectors.  If they collide, or
    the matched energies are degenerate below the float64 resolution of
    the eigensolver, the basis freedom of the degenerate subspace is
    resolved deterministically (see ``_resolve_degenerate_subspace``);
    a collision outside a degenerate subspace signals a drive too strong
    or a detuning away from the degeneracy and raises.
    """
    space = decomp.space
    if not 0 < n < space.n_trunc:
        raise IndexError(f"partner index {n} out of range (0, {space.n_trunc})")
    phi_p = plus_minus_superposition(space, n, "+").data
    phi_m = plus_minus_superposition(space, n, "-").data
    fid_p = np.abs(phi_p.conj() @ decomp.states) ** 2
    fid_m = np.abs(phi_m.conj() @ decomp.states) ** 2
    ip = int(np.argmax(fid_p))
    im = int(np.argmax(fid_m))

    energies = decomp.energies
    scale = float(np.abs(energies).max())
    noise_floor = DEGENERACY_NOISE_FACTOR * np.finfo(float).eps * max(scale, 1.0)

    degenerate = abs(energies[ip] - energies[im]) <= noise_floor
    if ip == im or degenerate:
        # Collect the numerically degenerate cluster around the best match.
        e_ref = energies[ip]
        members = np.flatnonzero(np.abs(energies - e_ref) <= noise_floor)
        if members.size < 2:
            raise DegenerateMatchError(
                f"eigenvector {ip} maximizes fidelity with both target "
                f"superpositions (fid+={fid_p[ip]:.4f}, fid-={fid_m[im]:.4f}); "
                "drive too strong or detuning away from the degeneracy"
            )
        if members.size > 2:
            # Keep the two members with the largest combined target weight.
            weight = fid_p[members] + fid_m[members]
            members = members[np.argsort(weight)[-2:]]
        vp, vm, fp, fm = _resolve_degenerate_subspace(decomp, members, n)
        ep = em = float(e_ref)
        return DegeneratePair(n, delta_star, ep, em, vp, vm, fp, fm)

    return DegeneratePair(
        n,
        delta_star,
        float(energies[ip]),
        float(energies[im]),
        decomp.states[:, ip].copy(),
        decomp.states[:, im].copy(),
        float(fid_p[ip]),
        float(fid_m[im]),
    )


def degenerate_pair_at(
    space: FockSpace, params: KpoParams, n: int
) -> DegeneratePair:
    """Diagonalize at the degeneracy detuning for partner n and match.

    Convenience wrapper: overrides params.delta with the exact
    degeneracy condition for the given chi.
    """
    from dataclasses import replace

    delta_star = degeneracy_detuning(params.chi, n)
    h = build_hamiltonian(space, replace(params, delta=delta_star))
    return match_degenerate_pair(diagonalize(h), n, delta_star)


def energy_splitting(pair: DegeneratePair) -> float:
    """E+ - E- of a matched pair; may be negative, returned as-is."""
    return pair.e_plus - pair.e_minus


def perturbative_rabi_angular_frequency(params: KpoParams, n: int) -> float:
    """Closed-form Rabi angular frequency Omega_n for n in {2, 4, 6}.

    Convention: Omega is the angular frequency of the population
    oscillation P(t) = (1/2)(1 - cos(Omega t)) and equals the eigenenergy
    splitting |E+ - E-| at leading order.  The formula value is returned
    as written, so Omega_4 is negative when chi < 0; comparisons against
    splittings use |Omega|.
    """
    p = params.p
    if n == 2:
        return 2.0 * math.sqrt(2.0) * p
    if n in (4, 6):
        if params.chi == 0.0:
            raise ValueError("chi must be nonzero for the higher-order Rabi frequencies")
        if n == 4:
            return 2.0 * math.sqrt(6.0) * p**2 / params.chi
        return 3.0 * math.sqrt(5.0) * p**3 / (2.0 * params.chi**2)
    raise ValueError(f"closed forms exist for n in {{2, 4, 6}}, got {n}")


def scaling_exponent_fit(splittings: list[tuple[float, float]]) -> float:
    """Least-squares slope of log|splitting| vs log p.

    Expects >= 4 points with strictly positive drive and splitting.
    """
    if len(splittings) < 4:
        raise ValueError(f"need at least 4 points for a scaling fit, got {len(splittings)}")
    ps = np.array([q[0] for q in splittings], dtype=float)
    ss = np.array([q[1] for q in splittings], dtype=float)
    if np.any(ps <= 0.0) or np.any(ss <= 0.0):
        raise ValueError("scaling fit requires positive drives and splittings")
    slope, _ = np.polyfit(np.log(ps), np.log(ss), 1)
    return float(slope)


def _splitting_at_truncation(params: KpoParams, partner: int, n_trunc: int) -> float:
    pair = degenerate_pair_at(FockSpace(n_trunc), params, partner)
    return abs(energy_splitting(pair))


def truncation_convergence(
    params: KpoParams,
    observable: str,
    n_trunc: int,
    partner: int | None = None,
    step: int = 10,
) -> tuple[float, bool]:
    """Recompute an observable at n_trunc and n_trunc + step.

    Converged iff the change is within 1e-6 relative, with a 1e-9
    absolute floor for near-zero values.  Observables: "splitting"
    (requires partner) and "steady_photon".  A truncation so tight that
    the degenerate pair cannot even be identified (partner state at the
    boundary) counts as not converged.
    """
    if observable == "splitting":
        if partner is None:
            raise ValueError("splitting convergence requires the partner index")
        if partner >= n_trunc:
            raise ValueError(f"partner {partner} does not fit in n_trunc={n_trunc}")
        try:
            v1 = _splitting_at_truncation(params, partner, n_trunc)
        except DegenerateMatchError:
            v1 = None
        v2 = _splitting_at_truncation(params, partner, n_trunc + step)
        if v1 is None:
            return v2, False
    elif observable == "steady_photon":
        from . import steady

        v1 = steady.steady_photon_number(steady.steady_state(FockSpace(n_trunc), params))
        v2 = steady.steady_photon_number(steady.steady_state(FockSpace(n_trunc + step), params))
    else:
        raise ValueError(f"unknown observable {observable!r}")
    converged = abs(v1 - v2) <= max(1e-6 * abs(v1), 1e-9)
    return v1, bool(converged)
