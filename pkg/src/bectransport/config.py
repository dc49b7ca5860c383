"""Experiment configuration files.

A config is a TOML document with these tables (all quantities SI)::

    output_dir = "runs/poly20"        # optional

    [trap]
    omega0 = 314.1592653589793        # rad/s; or frequency_hz = 50.0
    g1_over_hbar = 0.05               # m/s;   or g1 = <J m>
    mass = 1.44316060e-25             # kg, optional (87Rb)

    [protocol]                        # needed by design / verify
    kind = "polynomial"               # direct | polynomial | compensating
                                      # | bangbang_displacement | bangbang_range
    d = 1.6e-3
    t_f = 0.02                        # direct / polynomial / compensating
    # delta = 1.62e-4                 # bangbang_displacement
    # q_lo = 0.0, q_hi = 1.6e-3       # bangbang_range
    # quintic = true                  # compensating: quintic or cubic ramp

    [numerics]                        # all optional
    dt = 3.183e-6                     # s, default 1e-3 / omega0
    grid_points = 1024
    grid_extent = 12.0                # half-width in max(a0, TF radius)
    snapshot_stride = 100
    frame = "comoving"                # or "lab"
    check_convergence = true          # rerun at dt/2 and report the change
    write_snapshots = false

    [noise]                           # needed by noise-sweep
    lambdas = [0.0, 1e-7, 2e-7]
    lambda_unit = "m"                 # or "a0"
    g1_over_hbar = [0.05, 0.1, 0.2]   # default: the trap's coupling
    t_f = [0.01, 0.02]
    n = 2000
    master_seed = 0
    dt_scaled = 1e-3
    workers = 1

Unknown keys anywhere are rejected.
"""
from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import RB87_MASS, TrapConfig
from .io import dumps
from .protocols import KINDS, ProtocolConfigError, ProtocolSpec


class ConfigError(ValueError):
    pass


_TOP = {"output_dir", "trap", "protocol", "numerics", "noise"}
_TRAP = {"omega0", "frequency_hz", "g1_over_hbar", "g1", "mass"}
_PROTOCOL = {"kind", "d", "t_f", "delta", "q_lo", "q_hi", "quintic"}
_NUMERICS = {"dt", "grid_points", "grid_extent", "snapshot_stride", "frame", "check_convergence",
             "write_snapshots"}
_NOISE = {"lambdas", "lambda_unit", "g1_over_hbar", "t_f", "n", "master_seed", "dt_scaled", "workers"}


@dataclass(frozen=True)
class NumericsConfig:
    dt: Optional[float] = None
    grid_points: int = 1024
    grid_extent: float = 12.0
    snapshot_stride: int = 100
    frame: str = "comoving"
    check_convergence: bool = True
    write_snapshots: bool = False


@dataclass(frozen=True)
class NoiseConfig:
    lambdas: tuple  # m
    g1_over_hbar: tuple  # m/s, empty means the trap's value
    t_f: tuple
    n: int = 2000
    master_seed: int = 0
    dt_scaled: float = 1e-3
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    trap: TrapConfig
    protocol: Optional[ProtocolSpec] = None
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    noise: Optional[NoiseConfig] = None
    output_dir: Optional[str] = None

    def echo(self) -> dict:
        """Plain-dict form of the resolved config, without ``output_dir``; the digest is taken over this."""
        out = {
            "trap": {"mass": self.trap.mass, "omega0": self.trap.omega0,
                     "g1_over_hbar": self.trap.g1_over_hbar},
            "numerics": {k: v for k, v in vars(self.numerics).items() if v is not None},
        }
        if self.protocol is not None:
            out["protocol"] = self.protocol.as_dict()
        if self.noise is not None:
            nz = vars(self.noise).copy()
            for key in ("lambdas", "g1_over_hbar", "t_f"):
                nz[key] = list(nz[key])
            out["noise"] = nz
        return out

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.echo()).encode()).hexdigest()


def _check_keys(table: dict, allowed: set, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _num(table, key, where, default=None, positive=False, allow_zero=True):
    if key not in table:
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number, got {v!r}")
    v = float(v)
    if positive and not (v > 0 or (allow_zero and v == 0)):
        raise ConfigError(f"{where}.{key} must be {'>= 0' if allow_zero else '> 0'}, got {v}")
    return v


def _int(table, key, where, default, minimum):
    if key not in table:
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"{where}.{key} must be an integer >= {minimum}, got {v!r}")
    return v


def _bool(table, key, where, default):
    if key not in table:
        return default
    v = table[key]
    if not isinstance(v, bool):
        raise ConfigError(f"{where}.{key} must be true or false")
    return v


def _num_list(table, key, where, positive=False):
    if key not in table:
        return ()
    v = table[key]
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}.{key} must be a non-empty list of numbers")
    return tuple(_num({key: x}, key, where, positive=positive) for x in v)


def _parse_trap(t: dict) -> TrapConfig:
    _check_keys(t, _TRAP, "trap")
    if "omega0" in t and "frequency_hz" in t:
        raise ConfigError("give trap.omega0 or trap.frequency_hz, not both")
    if "g1" in t and "g1_over_hbar" in t:
        raise ConfigError("give trap.g1 or trap.g1_over_hbar, not both")
    omega0 = _num(t, "omega0", "trap", 2 * math.pi * 50, positive=True, allow_zero=False)
    if "frequency_hz" in t:
        omega0 = 2 * math.pi * _num(t, "frequency_hz", "trap", positive=True, allow_zero=False)
    mass = _num(t, "mass", "trap", RB87_MASS, positive=True, allow_zero=False)
    try:
        if "g1" in t:
            return TrapConfig(mass=mass, omega0=omega0, g1=_num(t, "g1", "trap", positive=True))
        return TrapConfig.from_g1_over_hbar(_num(t, "g1_over_hbar", "trap", 0.05, positive=True),
                                            mass=mass, omega0=omega0)
    except ValueError as exc:
        raise ConfigError(f"trap: {exc}") from exc


def _parse_protocol(p: dict) -> ProtocolSpec:
    _check_keys(p, _PROTOCOL, "protocol")
    kind = p.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"protocol.kind must be one of {', '.join(KINDS)}, got {kind!r}")
    if "d" not in p:
        raise ConfigError("protocol.d is required")
    values = {key: _num(p, key, "protocol") for key in ("d", "t_f", "delta", "q_lo", "q_hi")}
    try:
        return ProtocolSpec(kind=kind, quintic=_bool(p, "quintic", "protocol", True),
                            **{k: v for k, v in values.items() if v is not None})
    except ProtocolConfigError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_numerics(n: dict) -> NumericsConfig:
    _check_keys(n, _NUMERICS, "numerics")
    grid_points = _int(n, "grid_points", "numerics", 1024, 16)
    if grid_points & (grid_points - 1):
        raise ConfigError(f"numerics.grid_points must be a power of two, got {grid_points}")
    frame = n.get("frame", "comoving")
    if frame not in ("comoving", "lab"):
        raise ConfigError(f"numerics.frame must be 'comoving' or 'lab', got {frame!r}")
    return NumericsConfig(
        dt=_num(n, "dt", "numerics", None, positive=True, allow_zero=False),
        grid_points=grid_points,
        grid_extent=_num(n, "grid_extent", "numerics", 12.0, positive=True, allow_zero=False),
        snapshot_stride=_int(n, "snapshot_stride", "numerics", 100, 1),
        frame=frame,
        check_convergence=_bool(n, "check_convergence", "numerics", True),
        write_snapshots=_bool(n, "write_snapshots", "numerics", False),
    )


def _parse_noise(z: dict, trap: TrapConfig) -> NoiseConfig:
    _check_keys(z, _NOISE, "noise")
    if "lambdas" not in z or "t_f" not in z:
        raise ConfigError("noise needs 'lambdas' and 't_f'")
    unit = z.get("lambda_unit", "m")
    if unit not in ("m", "a0"):
        raise ConfigError(f"noise.lambda_unit must be 'm' or 'a0', got {unit!r}")
    scale = trap.oscillator_length if unit == "a0" else 1.0
    lambdas = tuple(v * scale for v in _num_list(z, "lambdas", "noise", positive=True))
    t_fs = _num_list(z, "t_f", "noise", positive=True)
    if any(t == 0 for t in t_fs):
        raise ConfigError("noise.t_f values must be > 0")
    couplings = _num_list(z, "g1_over_hbar", "noise", positive=True) or (trap.g1_over_hbar,)
    seed = _int(z, "master_seed", "noise", 0, 0)
    if seed >= 2 ** 64:
        raise ConfigError("noise.master_seed must fit in 64 bits")
    return NoiseConfig(
        lambdas=lambdas, g1_over_hbar=couplings, t_f=t_fs,
        n=_int(z, "n", "noise", 2000, 1), master_seed=seed,
        dt_scaled=_num(z, "dt_scaled", "noise", 1e-3, positive=True, allow_zero=False),
        workers=_int(z, "workers", "noise", 1, 1),
    )


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc, _TOP, "top level")
    trap = _parse_trap(doc.get("trap", {}))
    protocol = _parse_protocol(doc["protocol"]) if "protocol" in doc else None
    numerics = _parse_numerics(doc.get("numerics", {}))
    noise = _parse_noise(doc["noise"], trap) if "noise" in doc else None
    out = doc.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_dir must be a string")
    return ExperimentConfig(trap, protocol, numerics, noise, out)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)


def with_overrides(cfg: ExperimentConfig, *, out=None, seed=None, dt=None,
                   grid_points=None) -> ExperimentConfig:
    """Apply command-line overrides, validating them like config values."""
    numerics = cfg.numerics
    if dt is not None:
        if not dt > 0:
            raise ConfigError(f"--dt must be positive, got {dt}")
        numerics = replace(numerics, dt=float(dt))
    if grid_points is not None:
        if grid_points < 16 or grid_points & (grid_points - 1):
            raise ConfigError(f"--grid-points must be a power of two >= 16, got {grid_points}")
        numerics = replace(numerics, grid_points=int(grid_points))
    noise = cfg.noise
    if seed is not None:
        if not 0 <= seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if noise is None:
            raise ConfigError("--seed needs a [noise] block")
        noise = replace(noise, master_seed=int(seed))
    return replace(cfg, numerics=numerics, noise=noise,
                   output_dir=out if out is not None else cfg.output_dir)
