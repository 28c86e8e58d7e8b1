"""Run-configuration parsing with strict validation.

Configs are YAML documents with a ``physics`` section, an optional
``numerics`` section, and one block per task (``spectrum``, ``evolve``,
``steady``, ``sweep``).  Every value at the boundary is a cyclic
frequency (value/2pi) in MHz (omega_r in GHz, time in us); conversion to
internal angular units happens once, here.  Unknown keys are rejected by
name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .fock import KpoParams
from .sweep import Axis, SweepSpec
from .units import mhz_to_angular

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


def _require_mapping(obj, where: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(f"section '{where}' must be a mapping")
    return obj


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{name}' in section '{where}'")


def _get_number(section: dict, key: str, where: str, required: bool = True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{key}' in section '{where}'")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{key}' in section '{where}' must be a number")
    if not math.isfinite(float(value)):
        raise ConfigError(f"key '{key}' in section '{where}' must be finite")
    return float(value)


def _get_int(section: dict, key: str, where: str, required: bool = True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{key}' in section '{where}'")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"key '{key}' in section '{where}' must be an integer")
    return int(value)


def _get_str(section: dict, key: str, where: str, required: bool = True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{key}' in section '{where}'")
        return default
    value = section[key]
    if not isinstance(value, str):
        raise ConfigError(f"key '{key}' in section '{where}' must be a string")
    return value


@dataclass(frozen=True)
class PhysicsConfig:
    chi_over_2pi_mhz: float
    kappa_e_over_2pi_mhz: float = 0.0
    kappa_i_over_2pi_mhz: float = 0.0
    omega_r_over_2pi_ghz: float | None = None

    def params(self, delta_over_2pi_mhz: float = 0.0, p_over_2pi_mhz: float = 0.0) -> KpoParams:
        return KpoParams.from_mhz(
            chi_over_2pi_mhz=self.chi_over_2pi_mhz,
            delta_over_2pi_mhz=delta_over_2pi_mhz,
            p_over_2pi_mhz=p_over_2pi_mhz,
            kappa_e_over_2pi_mhz=self.kappa_e_over_2pi_mhz,
            kappa_i_over_2pi_mhz=self.kappa_i_over_2pi_mhz,
            omega_r_over_2pi_ghz=self.omega_r_over_2pi_ghz,
        )


@dataclass(frozen=True)
class NumericsConfig:
    n_trunc: int = 30
    rtol: float = 1e-8
    atol: float = 1e-10


@dataclass(frozen=True)
class SpectrumConfig:
    n_partner: int
    p_over_2pi_mhz: tuple[float, ...]


@dataclass(frozen=True)
class EvolveConfig:
    mode: str
    delta_over_2pi_mhz: float
    p_over_2pi_mhz: float
    t_final_us: float
    dt_out_us: float
    initial: str = "vacuum"


@dataclass(frozen=True)
class SteadyConfig:
    delta_over_2pi_mhz: float
    p_over_2pi_mhz: float
    output_power: bool = False


@dataclass(frozen=True)
class SweepConfig:
    observable: str
    delta_min_over_2pi_mhz: float
    delta_max_over_2pi_mhz: float
    delta_count: int
    p_count: int
    p_min_over_2pi_mhz: float | None = None
    p_max_over_2pi_mhz: float | None = None
    p_min_over_chi: float | None = None
    p_max_over_chi: float | None = None
    snapshot_times_us: tuple[float, ...] = ()
    peak_report_p_index: int | None = None


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsConfig
    numerics: NumericsConfig
    spectrum: SpectrumConfig | None = None
    evolve: EvolveConfig | None = None
    steady: SteadyConfig | None = None
    sweep: SweepConfig | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def sweep_spec(self, n_trunc_override: int | None = None) -> SweepSpec:
        if self.sweep is None:
            raise ConfigError("missing required section 'sweep'")
        sw = self.sweep
        if sw.p_min_over_2pi_mhz is not None:
            p_axis = Axis(sw.p_min_over_2pi_mhz, sw.p_max_over_2pi_mhz, sw.p_count)
            unit = "mhz"
        else:
            p_axis = Axis(sw.p_min_over_chi, sw.p_max_over_chi, sw.p_count)
            unit = "p_over_chi"
        snapshot_time = sw.snapshot_times_us[0] if sw.snapshot_times_us else None
        return SweepSpec(
            params_base=self.physics.params(),
            delta_axis=Axis(sw.delta_min_over_2pi_mhz, sw.delta_max_over_2pi_mhz, sw.delta_count),
            p_axis=p_axis,
            p_axis_unit=unit,
            observable=sw.observable,
            snapshot_time_us=snapshot_time,
            n_trunc=n_trunc_override or self.numerics.n_trunc,
            rtol=self.numerics.rtol,
            atol=self.numerics.atol,
        )


def _parse_physics(section: dict) -> PhysicsConfig:
    where = "physics"
    _check_keys(
        section,
        {"chi_over_2pi_mhz", "kappa_e_over_2pi_mhz", "kappa_i_over_2pi_mhz", "omega_r_over_2pi_ghz"},
        where,
    )
    return PhysicsConfig(
        chi_over_2pi_mhz=_get_number(section, "chi_over_2pi_mhz", where),
        kappa_e_over_2pi_mhz=_get_number(section, "kappa_e_over_2pi_mhz", where, False, 0.0),
        kappa_i_over_2pi_mhz=_get_number(section, "kappa_i_over_2pi_mhz", where, False, 0.0),
        omega_r_over_2pi_ghz=_get_number(section, "omega_r_over_2pi_ghz", where, False, None),
    )


def _parse_numerics(section: dict) -> NumericsConfig:
    where = "numerics"
    _check_keys(section, {"n_trunc", "rtol", "atol"}, where)
    n_trunc = _get_int(section, "n_trunc", where, False, 30)
    if n_trunc < 2:
        raise ConfigError("key 'n_trunc' in section 'numerics' must be >= 2")
    rtol = _get_number(section, "rtol", where, False, 1e-8)
    atol = _get_number(section, "atol", where, False, 1e-10)
    if rtol <= 0.0 or atol <= 0.0:
        raise ConfigError("keys 'rtol'/'atol' in section 'numerics' must be positive")
    return NumericsConfig(n_trunc=n_trunc, rtol=rtol, atol=atol)


def _parse_spectrum(section: dict) -> SpectrumConfig:
    where = "spectrum"
    _check_keys(section, {"n_partner", "p_over_2pi_mhz"}, where)
    n_partner = _get_int(section, "n_partner", where)
    if n_partner < 2 or n_partner % 2 != 0:
        raise ConfigError("key 'n_partner' in section 'spectrum' must be an even integer >= 2")
    raw = section.get("p_over_2pi_mhz")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("key 'p_over_2pi_mhz' in section 'spectrum' must be a nonempty list")
    values = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            raise ConfigError("key 'p_over_2pi_mhz' in section 'spectrum' must hold finite numbers")
        if v < 0:
            raise ConfigError("key 'p_over_2pi_mhz' in section 'spectrum' must be nonnegative")
        values.append(float(v))
    return SpectrumConfig(n_partner=n_partner, p_over_2pi_mhz=tuple(values))


def _parse_evolve(section: dict) -> EvolveConfig:
    where = "evolve"
    _check_keys(
        section,
        {"mode", "delta_over_2pi_mhz", "p_over_2pi_mhz", "t_final_us", "dt_out_us", "initial"},
        where,
    )
    mode = _get_str(section, "mode", where)
    if mode not in ("closed", "open"):
        raise ConfigError("key 'mode' in section 'evolve' must be 'closed' or 'open'")
    cfg = EvolveConfig(
        mode=mode,
        delta_over_2pi_mhz=_get_number(section, "delta_over_2pi_mhz", where),
        p_over_2pi_mhz=_get_number(section, "p_over_2pi_mhz", where),
        t_final_us=_get_number(section, "t_final_us", where),
        dt_out_us=_get_number(section, "dt_out_us", where),
        initial=_get_str(section, "initial", where, False, "vacuum"),
    )
    if cfg.t_final_us <= 0.0:
        raise ConfigError("key 't_final_us' in section 'evolve' must be positive")
    if not (0.0 < cfg.dt_out_us <= cfg.t_final_us):
        raise ConfigError("key 'dt_out_us' in section 'evolve' must satisfy 0 < dt_out <= t_final")
    if cfg.p_over_2pi_mhz < 0.0:
        raise ConfigError("key 'p_over_2pi_mhz' in section 'evolve' must be nonnegative")
    _validate_initial(cfg.initial)
    return cfg


def _validate_initial(label: str) -> None:
    if label == "vacuum":
        return
    kind, _, arg = label.partition(":")
    if kind in ("fock", "plus", "minus") and arg.isdigit():
        return
    raise ConfigError(
        f"key 'initial' in section 'evolve' must be 'vacuum', 'fock:N', 'plus:N' or 'minus:N', got {label!r}"
    )


def _parse_steady(section: dict) -> SteadyConfig:
    where = "steady"
    _check_keys(section, {"delta_over_2pi_mhz", "p_over_2pi_mhz", "output_power"}, where)
    out_power = section.get("output_power", False)
    if not isinstance(out_power, bool):
        raise ConfigError("key 'output_power' in section 'steady' must be a boolean")
    cfg = SteadyConfig(
        delta_over_2pi_mhz=_get_number(section, "delta_over_2pi_mhz", where),
        p_over_2pi_mhz=_get_number(section, "p_over_2pi_mhz", where),
        output_power=out_power,
    )
    if cfg.p_over_2pi_mhz < 0.0:
        raise ConfigError("key 'p_over_2pi_mhz' in section 'steady' must be nonnegative")
    return cfg


def _parse_sweep(section: dict) -> SweepConfig:
    where = "sweep"
    _check_keys(
        section,
        {
            "observable",
            "delta_min_over_2pi_mhz",
            "delta_max_over_2pi_mhz",
            "delta_count",
            "p_min_over_2pi_mhz",
            "p_max_over_2pi_mhz",
            "p_min_over_chi",
            "p_max_over_chi",
            "p_count",
            "snapshot_times_us",
            "peak_report_p_index",
        },
        where,
    )
    observable = _get_str(section, "observable", where)
    if observable not in ("steady_photon", "snapshot_photon", "output_power_steady"):
        raise ConfigError(f"key 'observable' in section 'sweep' has unsupported value {observable!r}")

    has_mhz = "p_min_over_2pi_mhz" in section or "p_max_over_2pi_mhz" in section
    has_chi = "p_min_over_chi" in section or "p_max_over_chi" in section
    if has_mhz and has_chi:
        raise ConfigError(
            "conflicting p-axis conventions in section 'sweep': give either "
            "p_*_over_2pi_mhz or p_*_over_chi, not both"
        )
    if not has_mhz and not has_chi:
        raise ConfigError("section 'sweep' needs a p axis (p_*_over_2pi_mhz or p_*_over_chi)")

    times = section.get("snapshot_times_us", [])
    if not isinstance(times, list):
        raise ConfigError("key 'snapshot_times_us' in section 'sweep' must be a list")
    parsed_times = []
    for t in times:
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not float(t) > 0.0:
            raise ConfigError("key 'snapshot_times_us' in section 'sweep' must hold positive numbers")
        parsed_times.append(float(t))
    if observable == "snapshot_photon" and not parsed_times:
        raise ConfigError("observable 'snapshot_photon' requires snapshot_times_us")

    peak_idx = _get_int(section, "peak_report_p_index", where, False, None)

    kwargs = dict(
        observable=observable,
        delta_min_over_2pi_mhz=_get_number(section, "delta_min_over_2pi_mhz", where),
        delta_max_over_2pi_mhz=_get_number(section, "delta_max_over_2pi_mhz", where),
        delta_count=_get_int(section, "delta_count", where),
        p_count=_get_int(section, "p_count", where),
        snapshot_times_us=tuple(parsed_times),
        peak_report_p_index=peak_idx,
    )
    if has_mhz:
        kwargs["p_min_over_2pi_mhz"] = _get_number(section, "p_min_over_2pi_mhz", where)
        kwargs["p_max_over_2pi_mhz"] = _get_number(section, "p_max_over_2pi_mhz", where)
    else:
        kwargs["p_min_over_chi"] = _get_number(section, "p_min_over_chi", where)
        kwargs["p_max_over_chi"] = _get_number(section, "p_max_over_chi", where)
    return SweepConfig(**kwargs)


def parse_config(document: dict) -> RunConfig:
    """Validate a parsed YAML mapping into a RunConfig."""
    document = _require_mapping(document, "<root>")
    _check_keys(document, {"physics", "numerics", "spectrum", "evolve", "steady", "sweep"}, "<root>")
    if "physics" not in document:
        raise ConfigError("missing required section 'physics'")
    physics = _parse_physics(_require_mapping(document.get("physics"), "physics"))
    numerics = _parse_numerics(_require_mapping(document.get("numerics"), "numerics"))
    spectrum = evolve = steady = sweep = None
    if "spectrum" in document:
        spectrum = _parse_spectrum(_require_mapping(document["spectrum"], "spectrum"))
    if "evolve" in document:
        evolve = _parse_evolve(_require_mapping(document["evolve"], "evolve"))
    if "steady" in document:
        steady = _parse_steady(_require_mapping(document["steady"], "steady"))
    if "sweep" in document:
        sweep = _parse_sweep(_require_mapping(document["sweep"], "sweep"))
    return RunConfig(
        physics=physics,
        numerics=numerics,
        spectrum=spectrum,
        evolve=evolve,
        steady=steady,
        sweep=sweep,
        raw=document,
    )


def load_config(path) -> RunConfig:
    """Read and validate a YAML config file."""
    with open(path, "r") as fh:
        try:
            document = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_config(document)
