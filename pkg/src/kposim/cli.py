"""Command-line interface.

Subcommands: spectrum | evolve | steady | sweep | verify.  Every command
reads a YAML config (except verify), writes CSV data plus a JSON sidecar
carrying the artifact version and the resolved configuration, and uses
stable exit codes: 0 success, 2 config validation error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .dynamics import EvolveSpec, IntegrationError, lindblad_evolve, schrodinger_evolve
from .fock import FockSpace, fock_state, plus_minus_superposition
from .spectral import (
    DegenerateMatchError,
    degeneracy_detuning,
    degenerate_pair_at,
    energy_splitting,
    scaling_exponent_fit,
)
from .steady import SteadyStateError, output_power, steady_photon_number, steady_state_with_residual
from .sweep import SweepPointError, detect_pr_peaks, run_snapshot_sweeps, run_sweep, write_sweep_csv, write_sweep_sidecar
from .units import angular_to_mhz
from .verify import run_all_checks

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (IntegrationError, SteadyStateError, SweepPointError, DegenerateMatchError)


def _write_sidecar(path, command: str, config: RunConfig | None, metadata: dict) -> None:
    payload = {
        "artifact": "kposim",
        "version": __version__,
        "command": command,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": None if config is None else config.raw,
        "metadata": metadata,
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_spectrum(args) -> int:
    config = load_config(args.config)
    if config.spectrum is None:
        raise ConfigError("missing required section 'spectrum'")
    n_trunc = args.n_trunc or config.numerics.n_trunc
    sc = config.spectrum
    if sc.n_partner >= n_trunc:
        raise ConfigError(
            f"key 'n_partner' in section 'spectrum' must be below n_trunc={n_trunc}"
        )
    space = FockSpace(n_trunc)
    rows = []
    for p_mhz in sc.p_over_2pi_mhz:
        params = config.physics.params(p_over_2pi_mhz=p_mhz)
        pair = degenerate_pair_at(space, params, sc.n_partner)
        split = energy_splitting(pair)
        rows.append(
            (
                p_mhz,
                angular_to_mhz(pair.e_plus),
                angular_to_mhz(pair.e_minus),
                angular_to_mhz(split),
                pair.fid_plus,
                pair.fid_minus,
            )
        )

    out = _out_dir(args)
    csv_path = os.path.join(out, "spectrum.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(
            "p_over_2pi_mhz,e_plus_over_2pi_mhz,e_minus_over_2pi_mhz,"
            "splitting_over_2pi_mhz,fid_plus,fid_minus\n"
        )
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    metadata = {
        "n_trunc": n_trunc,
        "n_partner": sc.n_partner,
        "delta_star_over_2pi_mhz": angular_to_mhz(
            degeneracy_detuning(config.physics.params().chi, sc.n_partner)
        ),
    }
    fit_points = [(p, abs(s)) for p, _, _, s, _, _ in rows if p > 0.0 and abs(s) > 0.0]
    if len(fit_points) >= 4:
        metadata["scaling_exponent"] = scaling_exponent_fit(fit_points)
    _write_sidecar(os.path.join(out, "spectrum.json"), "spectrum", config, metadata)
    print(f"wrote {csv_path}")
    return EXIT_OK


def _initial_state(label: str, space: FockSpace):
    if label == "vacuum":
        return fock_state(space, 0)
    kind, _, arg = label.partition(":")
    index = int(arg)
    if index >= space.n_trunc:
        raise ConfigError(
            f"key 'initial' in section 'evolve' needs index < n_trunc={space.n_trunc}"
        )
    if kind == "fock":
        return fock_state(space, index)
    return plus_minus_superposition(space, index, "+" if kind == "plus" else "-")


def cmd_evolve(args) -> int:
    config = load_config(args.config)
    if config.evolve is None:
        raise ConfigError("missing required section 'evolve'")
    ec = config.evolve
    n_trunc = args.n_trunc or config.numerics.n_trunc
    space = FockSpace(n_trunc)
    params = config.physics.params(
        delta_over_2pi_mhz=ec.delta_over_2pi_mhz, p_over_2pi_mhz=ec.p_over_2pi_mhz
    )
    spec = EvolveSpec(
        params=params,
        initial=_initial_state(ec.initial, space),
        t_final=ec.t_final_us,
        dt_out=ec.dt_out_us,
        mode=ec.mode,
        rtol=config.numerics.rtol,
        atol=config.numerics.atol,
    )
    traj = schrodinger_evolve(spec) if ec.mode == "closed" else lindblad_evolve(spec)

    out = _out_dir(args)
    csv_path = os.path.join(out, "trajectory.csv")
    traj.write_csv(csv_path)
    metadata = {
        "n_trunc": n_trunc,
        "mode": ec.mode,
        "samples": int(traj.times.size),
        "final_photon_number": float(traj.photon_number[-1]),
    }
    _write_sidecar(os.path.join(out, "trajectory.json"), "evolve", config, metadata)
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_steady(args) -> int:
    config = load_config(args.config)
    if config.steady is None:
        raise ConfigError("missing required section 'steady'")
    sc = config.steady
    n_trunc = args.n_trunc or config.numerics.n_trunc
    params = config.physics.params(
        delta_over_2pi_mhz=sc.delta_over_2pi_mhz, p_over_2pi_mhz=sc.p_over_2pi_mhz
    )
    if sc.output_power and params.omega_r is None:
        raise ConfigError(
            "output power requested but key 'omega_r_over_2pi_ghz' is missing in section 'physics'"
        )
    state, residual = steady_state_with_residual(FockSpace(n_trunc), params)
    photon = steady_photon_number(state)
    print(f"steady photon number <a+a> = {photon:.12g}")
    power = None
    if sc.output_power:
        power = output_power(photon, params)
        print(f"output power = {power:.12g} W")

    out = _out_dir(args)
    csv_path = os.path.join(out, "steady.csv")
    with open(csv_path, "w", newline="\n") as fh:
        header = "delta_over_2pi_mhz,p_over_2pi_mhz,photon_number"
        row = f"{sc.delta_over_2pi_mhz:.17g},{sc.p_over_2pi_mhz:.17g},{photon:.17g}"
        if power is not None:
            header += ",output_power_w"
            row += f",{power:.17g}"
        fh.write(header + "\n" + row + "\n")
    _write_sidecar(
        os.path.join(out, "steady.json"),
        "steady",
        config,
        {"n_trunc": n_trunc, "solver_residual": residual},
    )
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    try:
        spec = config.sweep_spec(n_trunc_override=args.n_trunc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sw = config.sweep
    out = _out_dir(args)

    times = sw.snapshot_times_us
    if spec.observable == "snapshot_photon" and len(times) > 1:
        results = run_snapshot_sweeps(spec, times, workers=args.workers)
        labels = [f"sweep_t{t:g}us" for t in times]
    else:
        results = [run_sweep(spec, workers=args.workers)]
        labels = ["sweep"]

    for label, result in zip(labels, results):
        csv_path = os.path.join(out, f"{label}.csv")
        write_sweep_csv(result, csv_path)
        extra = {"command": "sweep", "config": config.raw}
        if sw.peak_report_p_index is not None:
            peaks = detect_pr_peaks(result, sw.peak_report_p_index)
            extra["peak_report"] = {
                "p_index": sw.peak_report_p_index,
                "peaks": [{"delta_over_2pi_mhz": d, "value": v} for d, v in peaks],
            }
        write_sweep_sidecar(result, os.path.join(out, f"{label}.json"), extra=extra)
        print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    n_trunc = args.n_trunc or 30
    results = run_all_checks(n_trunc=n_trunc)
    failed = 0
    for res in results:
        tag = "PASS" if res.passed else "FAIL"
        print(f"[{tag}] {res.name}: {res.detail}")
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed}/{len(results)} checks failed")
        return EXIT_NUMERICAL
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kposim",
        description="Kerr parametric oscillator simulator on a truncated Fock space",
    )
    parser.add_argument("--version", action="version", version=f"kposim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--n-trunc", type=int, default=None, help="override numerics.n_trunc")

    p_spectrum = sub.add_parser("spectrum", help="degenerate-pair energies and fidelities vs drive")
    add_common(p_spectrum)
    p_spectrum.set_defaults(func=cmd_spectrum)

    p_evolve = sub.add_parser("evolve", help="time evolution (closed or open)")
    add_common(p_evolve)
    p_evolve.set_defaults(func=cmd_evolve)

    p_steady = sub.add_parser("steady", help="steady-state photon number at one point")
    add_common(p_steady)
    p_steady.set_defaults(func=cmd_steady)

    p_sweep = sub.add_parser("sweep", help="(detuning x drive) observable maps")
    add_common(p_sweep)
    p_sweep.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker processes (default: KPO_WORKERS env or CPU count)",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the built-in invariant suite")
    p_verify.add_argument("--n-trunc", type=int, default=None, help="override default truncation")
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
