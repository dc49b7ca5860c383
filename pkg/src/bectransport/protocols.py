"""Uniform access to the five transport protocols."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .control import solve_displacement_bounded, solve_range_bounded
from .core import Trajectory, TrapConfig
from .design import (DirectProtocol, classical_response, compensating_force, direct_final_excursion,
                     direct_trap_trajectory, polynomial_inverse)

KINDS = ("direct", "polynomial", "compensating", "bangbang_displacement", "bangbang_range")

_REQUIRED = {
    "direct": ("t_f",),
    "polynomial": ("t_f",),
    "compensating": ("t_f",),
    "bangbang_displacement": ("delta",),
    "bangbang_range": ("q_lo", "q_hi"),
}


class ProtocolConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolSpec:
    """One transport protocol and its parameters (SI).

    ``t_f`` is an input for the first three kinds and an output of the
    bang-bang designs.
    """

    kind: str
    d: float
    t_f: Optional[float] = None
    delta: Optional[float] = None
    q_lo: Optional[float] = None
    q_hi: Optional[float] = None
    quintic: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProtocolConfigError(f"unknown protocol kind {self.kind!r}; choose from {KINDS}")
        for name in _REQUIRED[self.kind]:
            if getattr(self, name) is None:
                raise ProtocolConfigError(f"protocol {self.kind!r} needs {name!r}")
        allowed = set(_REQUIRED[self.kind]) | {"kind", "d", "quintic"}
        for name in ("t_f", "delta", "q_lo", "q_hi"):
            if name not in allowed and getattr(self, name) is not None:
                raise ProtocolConfigError(f"{name!r} does not apply to protocol {self.kind!r}")
        if self.t_f is not None and not self.t_f > 0:
            raise ProtocolConfigError(f"t_f must be positive, got {self.t_f}")
        if not self.d >= 0:
            raise ProtocolConfigError(f"d must be >= 0, got {self.d}")

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True, eq=False)
class TransportDesign:
    spec: ProtocolSpec
    q0: Trajectory
    q_c: Trajectory
    force: Optional[Trajectory] = None  # extra acceleration, m/s^2
    info: dict = field(default_factory=dict)

    @property
    def t_f(self) -> float:
        return self.q0.t_f

    @property
    def jump_times(self) -> tuple:
        """Times at which q0 is discontinuous (bang-bang switches and end jumps)."""
        if self.spec.kind.startswith("bangbang") and self.t_f > 0:
            return (0.0,) + tuple(self.q0.breakpoints) + (self.t_f,)
        return ()

    def max_displacement(self) -> float:
        """max |q_c - q0| over the open interval, on a fine time grid."""
        if self.t_f == 0:
            return 0.0
        t = np.linspace(0, self.t_f, 8193)[1:-1]
        return float(np.max(np.abs(self.q_c.position(t) - self.q0.position(t))))


def design_protocol(spec: ProtocolSpec, cfg: TrapConfig) -> TransportDesign:
    w = cfg.omega0
    d = spec.d
    if spec.kind == "direct":
        p = DirectProtocol(d, spec.t_f)
        q0 = direct_trap_trajectory(p)
        q_c = classical_response(q0, w)
        dq, dv = direct_final_excursion(d, spec.t_f, w)
        return TransportDesign(spec, q0, q_c, info={"v_m": p.v_m, "final_excursion": dq,
                                                    "final_velocity_mismatch": dv})
    if spec.kind == "polynomial":
        q_c, q0 = polynomial_inverse(d, spec.t_f, w)
        return TransportDesign(spec, q0, q_c)
    if spec.kind == "compensating":
        q0, force, max_accel = compensating_force(d, spec.t_f, cfg.mass, spec.quintic)
        # the compensating force keeps the condensate centred on the trap
        return TransportDesign(spec, q0, q0, force=force.scaled(1.0, cfg.mass),
                               info={"max_accel": max_accel})
    if spec.kind == "bangbang_displacement":
        sol = solve_displacement_bounded(d, spec.delta, w)
        return TransportDesign(spec, sol.q0, sol.q_c, info={"t_1": sol.t_1, "t_f": sol.t_f})
    sol = solve_range_bounded(d, spec.q_lo, spec.q_hi, w)
    return TransportDesign(spec, sol.q0, sol.q_c, info={"t_1": sol.t_1, "t_f": sol.t_f})
