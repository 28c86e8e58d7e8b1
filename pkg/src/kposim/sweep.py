"""Detuning/drive grid sweeps producing 2-D spectroscopy maps.

Each grid point is an independent task: steady-state photon number (or
its output-power conversion) via the Liouvillian null-space solve, or a
fixed-time snapshot of <a+ a> evolved from the vacuum.  Points are
written into preallocated slots by index, so single-worker and
multi-worker runs produce identical grids.  Fixed-detuning line cuts are
rows of the grid (see ``extract_delta_cut``).
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .dynamics import snapshot_photon_numbers
from .fock import FockSpace, KpoParams
from .steady import output_power, steady_photon_number, steady_state_with_residual
from .units import angular_to_mhz, mhz_to_angular

__all__ = [
    "Axis",
    "SweepSpec",
    "SweepResult",
    "SweepPointError",
    "run_sweep",
    "run_snapshot_sweeps",
    "detect_pr_peaks",
    "extract_delta_cut",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_sweep_sidecar",
]

OBSERVABLES = ("steady_photon", "snapshot_photon", "output_power_steady")


class SweepPointError(RuntimeError):
    """A grid point failed; carries its (delta, p) coordinates in MHz."""

    def __init__(self, delta_over_2pi_mhz: float, p_over_2pi_mhz: float, cause: Exception):
        super().__init__(
            f"sweep point failed at delta/2pi = {delta_over_2pi_mhz:.6g} MHz, "
            f"p/2pi = {p_over_2pi_mhz:.6g} MHz: {cause}"
        )
        self.delta_over_2pi_mhz = delta_over_2pi_mhz
        self.p_over_2pi_mhz = p_over_2pi_mhz


@dataclass(frozen=True)
class Axis:
    """Uniform grid over [min, max] with count points."""

    min: float
    max: float
    count: int

    def __post_init__(self) -> None:
        if self.count < 2:
            raise ValueError(f"axis count must be >= 2, got {self.count}")
        if not (self.min < self.max):
            raise ValueError(f"axis requires min < max, got [{self.min}, {self.max}]")
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError("axis bounds must be finite")

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """One sweep task.

    ``delta_axis`` is in (value/2pi) MHz.  ``p_axis`` is in (value/2pi)
    MHz when ``p_axis_unit`` is "mhz", or in units of p/chi when it is
    "p_over_chi" (the drive is then value * chi, which must come out
    nonnegative).  ``params_base`` supplies chi and the dissipation
    rates; its delta and p are overridden point by point.
    """

    params_base: KpoParams
    delta_axis: Axis
    p_axis: Axis
    observable: str
    n_trunc: int
    p_axis_unit: str = "mhz"
    snapshot_time_us: float | None = None
    rtol: float = 1e-8
    atol: float = 1e-10

    def __post_init__(self) -> None:
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {OBSERVABLES}, got {self.observable!r}")
        if self.p_axis_unit not in ("mhz", "p_over_chi"):
            raise ValueError(f"p_axis_unit must be 'mhz' or 'p_over_chi', got {self.p_axis_unit!r}")
        if self.n_trunc < 2:
            raise ValueError(f"n_trunc must be >= 2, got {self.n_trunc}")
        if self.observable == "snapshot_photon":
            if self.snapshot_time_us is None or not self.snapshot_time_us > 0.0:
                raise ValueError("snapshot_photon requires a positive snapshot_time_us")
        if self.observable == "output_power_steady" and self.params_base.omega_r is None:
            raise ValueError("output_power_steady requires omega_r in params_base")
        # Validate that the p axis maps to nonnegative drives.
        self.p_values_mhz()

    def delta_values_mhz(self) -> np.ndarray:
        return self.delta_axis.values()

    def p_values_mhz(self) -> np.ndarray:
        raw = self.p_axis.values()
        if self.p_axis_unit == "mhz":
            p_mhz = raw
        else:
            p_mhz = raw * angular_to_mhz(self.params_base.chi)
        if np.any(p_mhz < 0.0):
            raise ValueError("p axis maps to negative drive amplitudes")
        return p_mhz


@dataclass(frozen=True)
class SweepResult:
    """Grid of observable values indexed [delta_index][p_index]."""

    spec: SweepSpec
    grid: np.ndarray = field(repr=False)
    metadata: dict

    def __post_init__(self) -> None:
        expected = (self.spec.delta_axis.count, self.spec.p_axis.count)
        grid = np.asarray(self.grid, dtype=float)
        if grid.shape != expected:
            raise ValueError(f"grid shape {grid.shape}, expected {expected}")
        if not np.all(np.isfinite(grid)):
            raise ValueError("grid contains non-finite entries")
        object.__setattr__(self, "grid", grid)


def _point_params(spec: SweepSpec, delta_mhz: float, p_mhz: float) -> KpoParams:
    return replace(
        spec.params_base, delta=mhz_to_angular(delta_mhz), p=mhz_to_angular(p_mhz)
    )


def _eval_steady_point(spec: SweepSpec, delta_mhz: float, p_mhz: float):
    params = _point_params(spec, delta_mhz, p_mhz)
    state, residual = steady_state_with_residual(FockSpace(spec.n_trunc), params)
    value = steady_photon_number(state)
    if spec.observable == "output_power_steady":
        value = output_power(value, params)
    return value, residual


def _eval_snapshot_point(spec: SweepSpec, delta_mhz: float, p_mhz: float, times):
    params = _point_params(spec, delta_mhz, p_mhz)
    values = snapshot_photon_numbers(
        params, FockSpace(spec.n_trunc), np.asarray(times, dtype=float), spec.rtol, spec.atol
    )
    return values, 0.0


def _eval_chunk(args):
    """Evaluate a contiguous chunk of flat grid indices (worker entry)."""
    spec, flat_indices, times = args
    deltas = spec.delta_values_mhz()
    ps = spec.p_values_mhz()
    n_p = ps.size
    results = []
    for flat in flat_indices:
        i, j = divmod(flat, n_p)
        try:
            if spec.observable == "snapshot_photon":
                values, residual = _eval_snapshot_point(spec, deltas[i], ps[j], times)
            else:
                value, residual = _eval_steady_point(spec, deltas[i], ps[j])
                values = np.array([value])
            results.append((flat, values, residual))
        except Exception as exc:  # noqa: BLE001 - repackaged with coordinates
            raise SweepPointError(float(deltas[i]), float(ps[j]), exc) from exc
    return results


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("KPO_WORKERS")
        if env is not None:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def _run_grid(spec: SweepSpec, times, workers: int | None):
    """Evaluate all points; returns (values array [n_pts, n_times], residual max)."""
    n_delta = spec.delta_axis.count
    n_p = spec.p_axis.count
    n_times = len(times) if times is not None else 1
    flat_count = n_delta * n_p
    values = np.empty((flat_count, n_times))
    workers = _resolve_workers(workers)

    all_indices = list(range(flat_count))
    residual_max = 0.0
    if workers == 1 or flat_count == 1:
        for flat, vals, residual in _eval_chunk((spec, all_indices, times)):
            values[flat] = vals
            residual_max = max(residual_max, residual)
    else:
        n_chunks = min(workers * 4, flat_count)
        chunks = [
            (spec, all_indices[k::n_chunks], times) for k in range(n_chunks)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk_result in pool.map(_eval_chunk, chunks):
                for flat, vals, residual in chunk_result:
                    values[flat] = vals
                    residual_max = max(residual_max, residual)
    return values.reshape(n_delta, n_p, n_times), residual_max


def _base_metadata(spec: SweepSpec, residual_max: float, wall: float) -> dict:
    return {
        "artifact_version": __version__,
        "n_trunc": spec.n_trunc,
        "solver_residual_max": residual_max,
        "wall_time_s": wall,
    }


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate the observable at every (delta, p) grid point.

    Deterministic for a fixed spec; a failing point aborts the sweep with
    its coordinates (no silent gaps).
    """
    t0 = time.perf_counter()
    times = [spec.snapshot_time_us] if spec.observable == "snapshot_photon" else None
    cube, residual_max = _run_grid(spec, times, workers)
    wall = time.perf_counter() - t0
    return SweepResult(spec, cube[:, :, 0], _base_metadata(spec, residual_max, wall))


def run_snapshot_sweeps(
    spec: SweepSpec, times_us, workers: int | None = None
) -> list[SweepResult]:
    """Snapshot maps at several times, one trajectory per grid point.

    Much cheaper than one run_sweep per time: the evolution from the
    vacuum is integrated once per (delta, p) and sampled at every
    requested time.  Returns one SweepResult per time, in input order.
    """
    times = [float(t) for t in times_us]
    if not times or any(t <= 0.0 for t in times):
        raise ValueError("snapshot times must be a nonempty list of positive values")
    base = replace(spec, observable="snapshot_photon", snapshot_time_us=times[0])
    t0 = time.perf_counter()
    cube, residual_max = _run_grid(base, times, workers)
    wall = time.perf_counter() - t0
    results = []
    for k, t in enumerate(times):
        spec_k = replace(spec, observable="snapshot_photon", snapshot_time_us=t)
        results.append(
            SweepResult(spec_k, cube[:, :, k], _base_metadata(spec_k, residual_max, wall))
        )
    return results


def detect_pr_peaks(result: SweepResult, p_index: int) -> list[tuple[float, float]]:
    """Strict local maxima along the detuning axis at one drive row.

    Returns (delta/2pi MHz, value) pairs.  Needs at least 3 detuning
    points; flat ridges do not count as peaks (strict neighbor
    comparison).
    """
    grid = result.grid
    if grid.shape[0] < 3:
        raise ValueError(f"need at least 3 detuning points, got {grid.shape[0]}")
    if not 0 <= p_index < grid.shape[1]:
        raise IndexError(f"p_index {p_index} out of range [0, {grid.shape[1]})")
    deltas = result.spec.delta_values_mhz()
    row = grid[:, p_index]
    peaks = []
    for i in range(1, row.size - 1):
        if row[i] > row[i - 1] and row[i] > row[i + 1]:
            peaks.append((float(deltas[i]), float(row[i])))
    return peaks


def extract_delta_cut(result: SweepResult, delta_over_2pi_mhz: float):
    """Fixed-detuning line cut: the grid row nearest the requested detuning.

    Returns (delta actually used, p values in MHz, row of observables).
    """
    deltas = result.spec.delta_values_mhz()
    i = int(np.argmin(np.abs(deltas - delta_over_2pi_mhz)))
    return float(deltas[i]), result.spec.p_values_mhz(), result.grid[i].copy()


def write_sweep_csv(result: SweepResult, path) -> None:
    """Long format: delta_over_2pi_mhz, p_over_2pi_mhz, value; delta-major."""
    deltas = result.spec.delta_values_mhz()
    ps = result.spec.p_values_mhz()
    with open(path, "w", newline="\n") as fh:
        fh.write("delta_over_2pi_mhz,p_over_2pi_mhz,value\n")
        for i, d in enumerate(deltas):
            for j, p in enumerate(ps):
                fh.write(f"{d:.17g},{p:.17g},{result.grid[i, j]:.17g}\n")


def read_sweep_csv(path):
    """Read a long-format sweep CSV back; returns (deltas, ps, grid)."""
    deltas, ps, values = [], [], []
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != "delta_over_2pi_mhz,p_over_2pi_mhz,value":
            raise ValueError(f"unexpected sweep CSV header: {header!r}")
        for line in fh:
            d, p, v = line.strip().split(",")
            deltas.append(float(d))
            ps.append(float(p))
            values.append(float(v))
    delta_ax = np.array(sorted(set(deltas)))
    p_ax = np.array(sorted(set(ps)))
    grid = np.array(values).reshape(delta_ax.size, p_ax.size)
    return delta_ax, p_ax, grid


def spec_as_dict(spec: SweepSpec) -> dict:
    """JSON-friendly echo of a sweep spec (internal rates in rad/us)."""
    d = asdict(spec)
    d["params_base"] = asdict(spec.params_base)
    return d


def write_sweep_sidecar(
    result: SweepResult, path, extra: dict | None = None
) -> None:
    """JSON sidecar: spec echo, residuals, version, timestamps."""
    payload = {
        "artifact": "kposim",
        "version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "spec": spec_as_dict(result.spec),
        "metadata": result.metadata,
    }
    if extra:
        payload.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
