"""Minimum-time bang-bang transport in closed form.

Two constraint families are covered: a bound |q_c - q0| <= delta on the
condensate displacement from the trap centre, and a bound
q_lo <= q0 <= q_hi on the trap position itself. Both solutions switch once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Trajectory
from .design import DEFAULT_RESPONSE_STEPS, classical_response


class InfeasibleConstraintError(ValueError):
    """The requested constraint set admits no single-switch transport."""

    def __init__(self, message: str, bound: str):
        super().__init__(message)
        self.bound = bound


@dataclass(frozen=True, eq=False)
class DisplacementConstrainedSolution:
    d: float
    delta: float
    omega0: float
    t_1: float
    t_f: float
    q0: Trajectory
    q_c: Trajectory

    def control(self, t):
        """u(t) = q_c - q0: 0 at the ends, -delta then +delta."""
        t = np.asarray(t, dtype=float)
        u = np.where(t < self.t_1, -self.delta, self.delta)
        return np.where((t <= 0) | (t >= self.t_f), 0.0, u)


@dataclass(frozen=True, eq=False)
class RangeConstrainedSolution:
    d: float
    q_lo: float
    q_hi: float
    omega0: float
    t_1: float
    t_f: float
    q0: Trajectory
    q_c: Trajectory


def solve_displacement_bounded(d: float, delta: float, omega0: float,
                               n_samples: int = 4097) -> DisplacementConstrainedSolution:
    if not delta > 0:
        raise InfeasibleConstraintError(f"delta must be positive, got {delta}", "delta")
    if not d >= 0:
        raise ValueError(f"d must be >= 0, got {d}")
    if not omega0 > 0:
        raise ValueError("omega0 must be positive")
    t_f = 2 * math.sqrt(d / delta) / omega0
    t_1 = t_f / 2
    w2 = omega0 * omega0

    def q0_func(t, side="right"):
        t = np.asarray(t, dtype=float)
        first = t <= t_1 if side == "left" else t < t_1
        q = np.where(first, (1 + w2 * t * t / 2) * delta, d - (w2 * (t - t_f) ** 2 / 2 + 1) * delta)
        qd = np.where(first, w2 * t * delta, -w2 * (t - t_f) * delta)
        qdd = np.where(first, w2 * delta, -w2 * delta)
        return q, qd, qdd

    def qc_func(t, side="right"):
        t = np.asarray(t, dtype=float)
        first = t <= t_1 if side == "left" else t < t_1
        q = np.where(first, w2 * delta * t * t / 2, d - w2 * delta * (t - t_f) ** 2 / 2)
        qd = np.where(first, w2 * delta * t, -w2 * delta * (t - t_f))
        qdd = np.where(first, w2 * delta, -w2 * delta)
        return q, qd, qdd

    bps = (t_1,) if t_f > 0 else ()
    q0 = Trajectory.from_function(q0_func, t_f, n_samples, breakpoints=bps, endpoints=(0.0, d))
    q_c = Trajectory.from_function(qc_func, t_f, n_samples, breakpoints=bps)
    return DisplacementConstrainedSolution(d, delta, omega0, t_1, t_f, q0, q_c)


def range_switch_arguments(d: float, q_lo: float, q_hi: float):
    """The two arccos arguments fixing omega0 t_1 and omega0 (t_f - t_1)."""
    if q_hi == 0 or q_lo == q_hi or q_lo == d:
        raise InfeasibleConstraintError("degenerate range: need q_hi != 0, q_lo != q_hi, q_lo != d",
                                        "q_lo<q_hi")
    c = q_lo * d - d * d / 2
    first = 1 - c / (q_hi * (q_lo - q_hi))
    second = (c - q_lo * (q_lo - q_hi)) / ((d - q_lo) * (q_lo - q_hi))
    return first, second


def _range_half_gaps(d: float, q_lo: float, q_hi: float):
    """(1 - a, 1 + a) for both arccos arguments a, in factored form.

    Factoring avoids the cancellation that makes arccos lose about half
    the digits when an argument sits at +-1 (e.g. q_hi = d/2).
    """
    den1 = q_hi * (q_lo - q_hi)
    den2 = (d - q_lo) * (q_lo - q_hi)
    first = (d * (q_lo - d / 2) / den1, (2 * q_hi - d) * (q_lo - q_hi - d / 2) / den1)
    second = (d * (d / 2 - q_hi) / den2, (2 * q_lo - d) * (q_hi - q_lo + d / 2) / den2)
    return first, second


def _arccos_from_gaps(one_minus: float, one_plus: float) -> float:
    return 2 * math.atan2(math.sqrt(one_minus), math.sqrt(one_plus))


def solve_range_bounded(d: float, q_lo: float, q_hi: float, omega0: float,
                        n_samples: int = 4097) -> RangeConstrainedSolution:
    if not q_lo < q_hi:
        raise InfeasibleConstraintError(f"need q_lo < q_hi, got [{q_lo}, {q_hi}]", "q_lo<q_hi")
    if not q_hi > 0:
        raise InfeasibleConstraintError(f"need q_hi > 0, got {q_hi}", "q_hi")
    if not d - q_lo > 0:
        raise InfeasibleConstraintError(f"need q_lo < d, got q_lo={q_lo}, d={d}", "q_lo")
    gaps = _range_half_gaps(d, q_lo, q_hi)
    args = range_switch_arguments(d, q_lo, q_hi)
    for name, (minus, plus), arg in zip(("t_1", "t_f"), gaps, args):
        if minus < 0 or plus < 0:
            bound = "q_hi" if name == "t_1" else "q_lo"
            raise InfeasibleConstraintError(
                f"arccos argument for {name} is {arg:.6g}, outside [-1, 1]; "
                f"range [{q_lo}, {q_hi}] cannot reach d={d} with one switch", bound)
    t_1 = _arccos_from_gaps(*gaps[0]) / omega0
    t_f = t_1 + _arccos_from_gaps(*gaps[1]) / omega0
    w = omega0

    def q0_func(t, side="right"):
        t = np.asarray(t, dtype=float)
        first_arc = t <= t_1 if side == "left" else t < t_1
        q = np.where(first_arc, q_hi, q_lo)
        zero = np.zeros_like(t)
        return q, zero, zero

    # condensate path: q_hi (1 - cos w t), then free oscillation about q_lo
    x1 = q_hi * (1 - math.cos(w * t_1)) - q_lo
    v1 = q_hi * w * math.sin(w * t_1)

    def qc_func(t, side="right"):
        t = np.asarray(t, dtype=float)
        first_arc = t <= t_1 if side == "left" else t < t_1
        tau = t - t_1
        q = np.where(first_arc, q_hi * (1 - np.cos(w * t)),
                     q_lo + x1 * np.cos(w * tau) + v1 / w * np.sin(w * tau))
        qd = np.where(first_arc, q_hi * w * np.sin(w * t),
                      -x1 * w * np.sin(w * tau) + v1 * np.cos(w * tau))
        qdd = np.where(first_arc, w * w * (q_hi - q), w * w * (q_lo - q))
        return q, qd, qdd

    q0 = Trajectory.from_function(q0_func, t_f, n_samples, breakpoints=(t_1,), endpoints=(0.0, d))
    q_c = Trajectory.from_function(qc_func, t_f, n_samples, breakpoints=(t_1,))
    return RangeConstrainedSolution(d, q_lo, q_hi, omega0, t_1, t_f, q0, q_c)


@dataclass(frozen=True)
class BoundaryResiduals:
    x1_start: float
    x2_start: float
    x1_end: float
    x2_end: float

    @property
    def max_position(self) -> float:
        return max(abs(self.x1_start), abs(self.x1_end))

    @property
    def max_velocity(self) -> float:
        return max(abs(self.x2_start), abs(self.x2_end))


def verify_boundary(sol, omega0: float = None, n_steps: int = DEFAULT_RESPONSE_STEPS):
    """Integrate the oscillator ODE under ``sol.q0`` and report boundary residuals.

    Residuals are state minus target, {x1(0), x2(0), x1(t_f), x2(t_f)} minus {0, 0, d, 0}.
    """
    omega0 = sol.omega0 if omega0 is None else omega0
    if sol.t_f == 0:
        return BoundaryResiduals(0.0, 0.0, 0.0, 0.0)
    qc = classical_response(sol.q0, omega0, n_steps)
    return BoundaryResiduals(float(qc.q[0]), float(qc.q_dot[0]),
                             float(qc.q[-1] - sol.d), float(qc.q_dot[-1]))
