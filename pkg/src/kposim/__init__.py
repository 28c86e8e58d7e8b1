"""kposim: truncated Fock-space simulator of a Kerr parametric oscillator.

Covers exact spectra and multiphoton-degeneracy Rabi splittings,
Schroedinger and single-photon-loss Lindblad time evolution, steady
states via the Liouvillian null space, and (detuning x drive)
spectroscopy sweeps, with a CLI for reproducing the associated data
sets.
"""

__version__ = "0.1.0"

from .fock import (  # noqa: F401
    FockSpace,
    KpoParams,
    MatrixOperator,
    QuantumState,
    annihilation,
    build_h0,
    build_hamiltonian,
    build_v,
    creation,
    fock_state,
    lab_frame_hamiltonian,
    number_operator,
    plus_minus_superposition,
)
from .spectral import (  # noqa: F401
    DegeneratePair,
    EigenDecomposition,
    degeneracy_detuning,
    degenerate_pair_at,
    diagonalize,
    energy_splitting,
    match_degenerate_pair,
    perturbative_rabi_angular_frequency,
    scaling_exponent_fit,
    truncation_convergence,
)
from .dynamics import (  # noqa: F401
    EvolveSpec,
    Trajectory,
    first_return_period,
    fringe_contrast,
    lindblad_evolve,
    schrodinger_evolve,
    snapshot_photon_numbers,
)
from .steady import (  # noqa: F401
    Liouvillian,
    build_liouvillian,
    output_power,
    steady_photon_number,
    steady_state,
)
from .sweep import (  # noqa: F401
    Axis,
    SweepResult,
    SweepSpec,
    detect_pr_peaks,
    extract_delta_cut,
    run_snapshot_sweeps,
    run_sweep,
)
