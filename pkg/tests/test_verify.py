"""The invariant suite must catch real corruption, not just pass when healthy."""

import numpy as np
import pytest

from kposim import FockSpace, KpoParams, build_liouvillian
from kposim.verify import (
    check_degeneracy_condition,
    check_drive_parity,
    check_h0_diagonal,
    check_liouvillian_trace,
    check_truncation_convergence,
    check_two_photon_splitting_law,
    check_vacuum_steady_state,
)


def test_healthy_checks_pass():
    assert check_h0_diagonal().passed
    assert check_drive_parity().passed
    assert check_degeneracy_condition().passed
    assert check_vacuum_steady_state().passed
    assert check_liouvillian_trace().passed
    assert check_two_photon_splitting_law().passed


def test_trace_check_catches_sign_corruption():
    # flip the sign of the quantum-jump block: trace preservation breaks
    params = KpoParams.from_mhz(18.729, -28.0935, 0.5, kappa_e_over_2pi_mhz=0.3)
    n = 10
    good = build_liouvillian(FockSpace(n), params).matrix
    from conftest import ref_ladder

    a = ref_ladder(n)
    corrupted = good - 2.0 * params.kappa * np.kron(a.conj(), a)
    assert check_liouvillian_trace(lmat=corrupted).passed is False
    assert check_liouvillian_trace(lmat=good).passed is True


def test_convergence_check_fails_at_boundary_truncation():
    result = check_truncation_convergence(n_trunc=13, partner=12)
    assert not result.passed


def test_convergence_check_fails_when_partner_does_not_fit():
    result = check_truncation_convergence(n_trunc=12, partner=12)
    assert not result.passed
    assert "does not fit" in result.detail
