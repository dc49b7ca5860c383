"""Trap and condensate trajectories for harmonic and compensated transport.

Units are whatever the caller uses consistently (SI at the public API);
nothing here depends on hbar or the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Trajectory, segment_times

DEFAULT_RESPONSE_STEPS = 4096

# d * (10 s^3 - 15 s^4 + 6 s^5), lowest to highest power of s = t / t_f
QUINTIC = np.array([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
# d * (3 s^2 - 2 s^3)
CUBIC = np.array([0.0, 0.0, 3.0, -2.0])


class InvalidProtocolError(ValueError):
    pass


def _require_positive(**values):
    for name, v in values.items():
        if not v > 0:
            raise InvalidProtocolError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class DirectProtocol:
    """Trapezoidal trap-velocity profile: ramp over d/4, cruise over d/2, ramp down."""

    d: float
    t_f: float

    def __post_init__(self):
        _require_positive(d=self.d, t_f=self.t_f)

    @property
    def v_m(self) -> float:
        return 3 * self.d / (2 * self.t_f)


@dataclass(frozen=True)
class PolynomialProtocol:
    d: float
    t_f: float
    omega0: float

    def __post_init__(self):
        _require_positive(t_f=self.t_f, omega0=self.omega0)

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients of q_c in powers of s = t/t_f (length units)."""
        return self.d * QUINTIC


@dataclass(frozen=True)
class CompensatingProtocol:
    d: float
    t_f: float
    mass: float
    quintic: bool = True

    def __post_init__(self):
        _require_positive(t_f=self.t_f, mass=self.mass)

    @property
    def coefficients(self) -> np.ndarray:
        return self.d * (QUINTIC if self.quintic else CUBIC)


def _poly_func(coeffs: np.ndarray, t_f: float):
    """(q, q', q'') of sum c_n (t/t_f)^n."""
    p = np.polynomial.Polynomial(coeffs)
    dp, ddp = p.deriv(1), p.deriv(2)

    def func(t, side="right"):
        s = np.asarray(t) / t_f
        return p(s), dp(s) / t_f, ddp(s) / t_f ** 2

    return func


# --------------------------------------------------------------------------
# direct protocol
# --------------------------------------------------------------------------

def direct_trap_trajectory(p: DirectProtocol, n_samples: int = 4097) -> Trajectory:
    d, t_f, v = p.d, p.t_f, p.v_m
    t1, t2 = d / (2 * v), d / v
    acc = 2 * v * v / d
    dec = v / (d / v - t_f)

    def func(t, side="right"):
        t = np.asarray(t, dtype=float)
        if side == "left":
            first, last = t <= t1, t > t2
        else:
            first, last = t < t1, t >= t2
        mid = ~first & ~last
        q = np.where(first, v * v * t ** 2 / d,
                     np.where(mid, v * t - d / 4, 0.5 * dec * (t - t_f) ** 2 + d))
        qd = np.where(first, acc * t, np.where(mid, v, dec * (t - t_f)))
        qdd = np.where(first, acc, np.where(mid, 0.0, dec))
        return q, qd, qdd

    return Trajectory.from_function(func, t_f, n_samples, breakpoints=(t1, t2))


def direct_final_excursion(d: float, t_f: float, omega0: float):
    """Closed-form (q_c - q0, q_c' - q0') at t_f for the direct protocol."""
    if not t_f > 0:
        raise InvalidProtocolError("t_f must be positive")
    phi = omega0 * t_f / 3
    dq = 9 * d * (1 - 2 * math.cos(phi)) * math.sin(phi) ** 2 / (omega0 * t_f) ** 2
    dv = 9 * d / (2 * omega0 * t_f ** 2) * (math.sin(phi) + math.sin(2 * phi) - math.sin(3 * phi))
    return dq, dv


def direct_resonant_times(omega0: float, count: int = 3):
    """Final times 3(2N+1)pi/omega0 at which the direct protocol leaves no excitation."""
    return [3 * (2 * n + 1) * math.pi / omega0 for n in range(count)]


# --------------------------------------------------------------------------
# classical response of the condensate centre
# --------------------------------------------------------------------------

def _check_drive(q0: Trajectory):
    if not q0.t_f > 0:
        raise InvalidProtocolError("trajectory must have t_f > 0")


def classical_response(q0: Trajectory, omega0: float, n_steps: int = DEFAULT_RESPONSE_STEPS,
                       force: Optional[Trajectory] = None, initial=(0.0, 0.0)) -> Trajectory:
    """Integrate q'' + omega0^2 (q - q0) = a(t) from rest with classical RK4.

    ``force`` is an optional extra uniform acceleration a(t), read from the
    position column of a trajectory (see :func:`compensating_force`, whose
    force profile divided by the mass is such an acceleration).
    Steps never straddle a breakpoint of the drive, and the drive is
    evaluated with one-sided limits at step ends.
    """
    _check_drive(q0)
    t_f = q0.t_f
    bps = set(q0.breakpoints) | set(force.breakpoints if force is not None else ())
    times = segment_times(t_f, bps, t_f / n_steps)
    w2 = omega0 * omega0
    steps = np.diff(times)

    # the ODE is linear, so the drive at every RK stage can be tabulated up front
    def drive(t, side):
        a = w2 * q0.position(t, side)
        if force is not None:
            a = a + force.position(t, side)
        return a

    d_start = drive(times[:-1], "right")
    d_mid = drive(times[:-1] + steps / 2, "right")
    d_end = drive(times[1:], "left")

    q = np.empty_like(times)
    v = np.empty_like(times)
    q[0], v[0] = initial
    for i, h in enumerate(steps.tolist()):
        x, u = q[i], v[i]
        k1x, k1v = u, d_start[i] - w2 * x
        k2x, k2v = u + h / 2 * k1v, d_mid[i] - w2 * (x + h / 2 * k1x)
        k3x, k3v = u + h / 2 * k2v, d_mid[i] - w2 * (x + h / 2 * k2x)
        k4x, k4v = u + h * k3v, d_end[i] - w2 * (x + h * k3x)
        q[i + 1] = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v[i + 1] = u + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    qdd = w2 * (q0.position(times) - q)
    if force is not None:
        qdd += force.position(times)
    return Trajectory(times, q, v, qdd, breakpoints=sorted(bps))


def duhamel_response(q0: Trajectory, omega0: float, n_steps: int = DEFAULT_RESPONSE_STEPS,
                     force: Optional[Trajectory] = None, nodes: int = 4) -> Trajectory:
    """Same response as :func:`classical_response`, by convolution with the
    oscillator Green's function

        q_c(t) = (1/omega0) int_0^t a(t') sin(omega0 (t - t')) dt',
        a = omega0^2 q0 + force,

    using Gauss-Legendre quadrature on each cell of the same time grid.
    """
    _check_drive(q0)
    t_f = q0.t_f
    bps = set(q0.breakpoints) | set(force.breakpoints if force is not None else ())
    times = segment_times(t_f, bps, t_f / n_steps)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    a, b = times[:-1, None], times[1:, None]
    tn = 0.5 * (b - a) * xg + 0.5 * (a + b)
    wn = 0.5 * (b - a) * wg
    drive = omega0 ** 2 * q0.position(tn.ravel()).reshape(tn.shape)
    if force is not None:
        drive = drive + force.position(tn.ravel()).reshape(tn.shape)
    c = np.concatenate([[0.0], np.cumsum(np.sum(wn * drive * np.cos(omega0 * tn), axis=1))])
    s = np.concatenate([[0.0], np.cumsum(np.sum(wn * drive * np.sin(omega0 * tn), axis=1))])
    sin_t, cos_t = np.sin(omega0 * times), np.cos(omega0 * times)
    q = (sin_t * c - cos_t * s) / omega0
    v = cos_t * c + sin_t * s
    qdd = omega0 ** 2 * (q0.position(times) - q)
    if force is not None:
        qdd += force.position(times)
    return Trajectory(times, q, v, qdd, breakpoints=sorted(bps))


def oscillator_residual(q_c: Trajectory, q0: Trajectory, omega0: float, times=None) -> np.ndarray:
    """q_c'' + omega0^2 (q_c - q0) on the given (or q_c's own) sample times."""
    t = q_c.t if times is None else np.asarray(times)
    q, _, qdd = q_c.evaluate(t)
    return qdd + omega0 ** 2 * (q - q0.position(t))


# --------------------------------------------------------------------------
# inverse engineering with a quintic condensate path
# --------------------------------------------------------------------------

def polynomial_inverse(d: float, t_f: float, omega0: float, n_samples: int = 4097):
    """Quintic q_c meeting rest-to-rest conditions and the trap path q0 = q_c + q_c''/omega0^2."""
    p = PolynomialProtocol(d, t_f, omega0)
    qc_func = _poly_func(p.coefficients, t_f)
    qc = np.polynomial.Polynomial(p.coefficients)
    # q0 = q_c + q_c''/omega0^2 is again a polynomial in s
    q0_func = _poly_func((qc + qc.deriv(2) / (omega0 * t_f) ** 2).coef, t_f)

    q_c = Trajectory.from_function(qc_func, t_f, n_samples)
    q0 = Trajectory.from_function(q0_func, t_f, n_samples)
    return q_c, q0


def polynomial_interval_check(d: float, t_f: float, omega0: float):
    """Extrema of the polynomial trap path and whether it stays inside [0, d].

    The trap path is itself a polynomial in s, so extrema come from the real
    roots of its derivative on [0, 1].
    """
    p = PolynomialProtocol(d, t_f, omega0)
    qc = np.polynomial.Polynomial(p.coefficients)
    q0 = qc + qc.deriv(2) / (omega0 * t_f) ** 2
    crit = [0.0, 1.0]
    for r in q0.deriv().roots():
        if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0:
            crit.append(r.real)
    vals = q0(np.array(crit))
    lo, hi = float(vals.min()), float(vals.max())
    # endpoint values are 0 and d up to rounding; only interior excursions count
    slack = 1e-12 * max(abs(d), 1e-300)
    return lo, hi, bool(lo >= -slack and hi <= d + slack)


def polynomial_interval_threshold(d: float, omega0: float, lo: float, hi: float,
                                  rtol: float = 1e-12) -> float:
    """Bisect the smallest t_f in [lo, hi] for which the trap stays inside [0, d]."""
    inside_hi = polynomial_interval_check(d, hi, omega0)[2]
    inside_lo = polynomial_interval_check(d, lo, omega0)[2]
    if inside_lo or not inside_hi:
        raise ValueError("bracket must have the flag false at lo and true at hi")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if polynomial_interval_check(d, mid, omega0)[2]:
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# anharmonic transport with a compensating force
# --------------------------------------------------------------------------

def compensating_force(d: float, t_f: float, mass: float, quintic: bool = True,
                       n_samples: int = 4097):
    """Trap path q0 for a rigidly moving trap of any shape, and the force m q0''.

    Returns ``(q0, force, max_accel)``. ``force`` is a :class:`Trajectory`
    whose position column holds F(t) (in N) so it can be evaluated like
    any other protocol quantity.
    """
    p = CompensatingProtocol(d, t_f, mass, quintic)
    func = _poly_func(p.coefficients, t_f)
    q0 = Trajectory.from_function(func, t_f, n_samples)
    acc_poly = np.polynomial.Polynomial(p.coefficients).deriv(2)
    jerk_poly = acc_poly.deriv()
    snap_poly = jerk_poly.deriv()

    def force_func(t, side="right"):
        s = np.asarray(t) / t_f
        return (mass * acc_poly(s) / t_f ** 2, mass * jerk_poly(s) / t_f ** 3,
                mass * snap_poly(s) / t_f ** 4)

    force = Trajectory.from_function(force_func, t_f, n_samples)
    crit = [0.0, 1.0] + [r.real for r in jerk_poly.roots()
                         if abs(r.imag) < 1e-12 and 0 <= r.real <= 1]
    max_accel = float(np.max(np.abs(acc_poly(np.array(crit))))) / t_f ** 2
    return q0, force, max_accel
