"""Adaptive Dormand-Prince 5(4) stepper for the single-photon-loss master
equation, specialized to the KPO Hamiltonian's banded structure.

The generator

    d rho / dt = -i [H, rho] + kappa (a rho a+ - (1/2){a+ a, rho})

is applied entrywise in O(n^2): H is pentadiagonal (diagonal energies
``e_diag`` plus two-photon couplings ``p * s2``, where s2[k] =
sqrt(k(k-1)) sits two off the diagonal) and the loss term only mixes
rho[i, j] with rho[i+1, j+1].  Because the update is a real-linear
combination of applications of this generator, Hermiticity of rho is
preserved to rounding at every step.

Error control is the standard embedded 5(4) pair with a PI controller;
output samples are produced by the quartic dense-output interpolant, so
step sizes are never constrained by the output grid.

The hot loop is compiled with numba when available (a plain-Python
fallback keeps everything importable without it, just much slower).
"""

from __future__ import annotations

import numpy as np

__all__ = ["gksl_apply", "integrate_lindblad", "NUMBA_COMPILED"]

# Dormand-Prince 5(4) tableau.
DP_A = np.zeros((7, 7))
DP_A[1, 0] = 1 / 5
DP_A[2, :2] = [3 / 40, 9 / 40]
DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Quartic dense-output coefficients (columns: powers theta^1..theta^4).
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


def _gksl_apply(e_diag, s2, p, kappa, rho, out):
    """out = GKSL generator applied to rho, using the banded structure."""
    n = rho.shape[0]
    for i in range(n):
        for j in range(n):
            acc = (e_diag[i] - e_diag[j]) * rho[i, j]
            if i >= 2:
                acc += p * s2[i] * rho[i - 2, j]
            if i + 2 < n:
                acc += p * s2[i + 2] * rho[i + 2, j]
            if j >= 2:
                acc -= p * s2[j] * rho[i, j - 2]
            if j + 2 < n:
                acc -= p * s2[j + 2] * rho[i, j + 2]
            val = -1j * acc
            if kappa > 0.0:
                val -= 0.5 * kappa * (i + j) * rho[i, j]
                if i + 1 < n and j + 1 < n:
                    val += kappa * np.sqrt((i + 1.0) * (j + 1.0)) * rho[i + 1, j + 1]
            out[i, j] = val
    return out


def _integrate_core(e_diag, s2, p, kappa, rho0, t_out, rtol, atol, max_steps,
                    h_stab, A, B, E, P):
    """Integrate from t=0 through t_out[-1]; sample at every t_out.

    ``h_stab`` caps the step inside the stability region of the pair,
    so quiescent stretches cannot ride the stability boundary and
    amplify roundoff.  The state is re-projected onto the Hermitian
    subspace after every accepted step.  Returns (samples, n_steps,
    t_reached, ok); ok is False when the controller underflows the step
    size or the step budget is exhausted.
    """
    n = rho0.shape[0]
    n_out = t_out.shape[0]
    out = np.zeros((n_out, n, n), dtype=np.complex128)
    t = 0.0
    t_end = t_out[n_out - 1]
    rho = rho0.copy()
    work = np.zeros((n, n), dtype=np.complex128)
    k = np.zeros((7, n, n), dtype=np.complex128)
    _gksl_apply(e_diag, s2, p, kappa, rho, k[0])

    iout = 0
    while iout < n_out and t_out[iout] <= t:
        out[iout] = rho
        iout += 1

    # Conservative initial step from the first derivative scale.
    d1 = 0.0
    for i in range(n):
        for j in range(n):
            d1 = max(d1, abs(k[0][i, j]))
    h = 1e-6 if d1 <= 1e-300 else 0.01 / d1
    h = min(h, t_end if t_end > 0.0 else 1e-6)
    h = min(h, h_stab)
    h_floor = 1e-14 * max(t_end, 1.0)

    err_prev = 1.0
    steps = 0
    ok = True
    while t < t_end:
        if steps >= max_steps or h < h_floor:
            ok = False
            break
        steps += 1
        if t + h > t_end:
            h = t_end - t
        for i in range(1, 7):
            for r in range(n):
                for c in range(n):
                    acc = rho[r, c]
                    for j in range(i):
                        if A[i, j] != 0.0:
                            acc += (h * A[i, j]) * k[j, r, c]
                    work[r, c] = acc
            _gksl_apply(e_diag, s2, p, kappa, work, k[i])
        err_sq = 0.0
        for r in range(n):
            for c in range(n):
                ynew = rho[r, c]
                errv = 0.0 + 0.0j
                for i in range(7):
                    if B[i] != 0.0:
                        ynew += (h * B[i]) * k[i, r, c]
                    if E[i] != 0.0:
                        errv += (h * E[i]) * k[i, r, c]
                work[r, c] = ynew
                sc = atol + rtol * max(abs(rho[r, c]), abs(ynew))
                q = abs(errv) / sc
                err_sq += q * q
        err_norm = np.sqrt(err_sq / (n * n))
        if err_norm <= 1.0:
            while iout < n_out and t_out[iout] <= t + h:
                th = (t_out[iout] - t) / h
                for r in range(n):
                    for c in range(n):
                        acc = rho[r, c]
                        for i in range(7):
                            w = th * (P[i, 0] + th * (P[i, 1] + th * (P[i, 2] + th * P[i, 3])))
                            if w != 0.0:
                                acc += (h * w) * k[i, r, c]
                        out[iout, r, c] = acc
                iout += 1
            t += h
            tmp = rho
            rho = work
            work = tmp
            # Hermitian projection: kills eps-level asymmetries so they
            # can never seed growth.
            for r in range(n):
                rho[r, r] = complex(rho[r, r].real, 0.0)
                for c in range(r + 1, n):
                    avg = 0.5 * (rho[r, c] + np.conj(rho[c, r]))
                    rho[r, c] = avg
                    rho[c, r] = np.conj(avg)
            k[0] = k[6]
            err_clamped = max(err_norm, 1e-10)
            fac = 0.9 * err_clamped**-0.14 * err_prev**0.08
            h *= min(5.0, max(0.2, fac))
            h = min(h, h_stab)
            err_prev = err_clamped
        else:
            h *= max(0.2, 0.9 * err_norm ** -0.2)
    return out, steps, t, ok


NUMBA_COMPILED = False
_gksl_apply_py = _gksl_apply
_integrate_core_py = _integrate_core
gksl_apply = _gksl_apply
_integrate_impl = _integrate_core

try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    gksl_apply = njit(cache=True)(_gksl_apply)
    # Rebind the global the core references so the compiled version is used.
    _integrate_core.__globals__["_gksl_apply"] = gksl_apply
    _integrate_impl = njit(cache=True)(_integrate_core)
    NUMBA_COMPILED = True
except ImportError:  # pragma: no cover
    pass


def stability_step_cap(e_diag: np.ndarray, s2: np.ndarray, p: float, kappa: float) -> float:
    """Step bound keeping the pair inside its linear stability region.

    The generator's eigenvalues have imaginary parts bounded by the
    unperturbed level spread plus the drive couplings, and real parts
    bounded by the loss rates; the Dormand-Prince 5(4) stability region
    covers roughly |z| <= 3 along the imaginary axis, of which a margin
    is kept.
    """
    n = e_diag.shape[0]
    spread = float(e_diag.max() - e_diag.min())
    drive = 4.0 * abs(p) * float(s2.max()) if s2.size else 0.0
    loss = kappa * n
    lam = spread + drive + loss
    if lam <= 0.0:
        return np.inf
    return 2.5 / lam


def integrate_lindblad(
    e_diag: np.ndarray,
    s2: np.ndarray,
    p: float,
    kappa: float,
    rho0: np.ndarray,
    t_out: np.ndarray,
    rtol: float,
    atol: float,
    max_steps: int = 50_000_000,
):
    """Run the adaptive stepper; see ``_integrate_core`` for the contract."""
    e_diag = np.ascontiguousarray(e_diag, dtype=np.float64)
    s2 = np.ascontiguousarray(s2, dtype=np.float64)
    return _integrate_impl(
        e_diag,
        s2,
        float(p),
        float(kappa),
        np.ascontiguousarray(rho0, dtype=np.complex128),
        np.ascontiguousarray(t_out, dtype=np.float64),
        float(rtol),
        float(atol),
        int(max_steps),
        stability_step_cap(e_diag, s2, float(p), float(kappa)),
        DP_A,
        DP_B,
        DP_E,
        DP_P,
    )
