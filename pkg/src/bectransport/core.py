"""Physical parameters, oscillator units, grids, wavefunctions and trajectories.

All heavy numerics in the package work in harmonic-oscillator units: lengths
in a0 = sqrt(hbar / (m omega0)), times in 1/omega0, energies in hbar omega0.
SI values only appear in the public constructors and at file boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

HBAR = 1.054571817e-34  # J s, CODATA 2018 exact
RB87_MASS = 1.44316060e-25  # kg


class DegenerateInputError(ValueError):
    """Raised when a wavefunction has zero norm."""


class GridMismatchError(ValueError):
    """Raised when two wavefunctions live on different grids."""


@dataclass(frozen=True)
class TrapConfig:
    """Trap and condensate parameters in SI units.

    ``g1`` is the 1D coupling in J m. Use :meth:`from_g1_over_hbar` to
    give it as g1/hbar in m/s.
    """

    mass: float = RB87_MASS
    omega0: float = 2 * math.pi * 50.0
    g1: float = 0.0
    d: float = 1.6e-3
    hbar: float = HBAR

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if not self.d >= 0:
            raise ValueError(f"transport distance must be >= 0, got {self.d}")
        if not self.g1 >= 0:
            raise ValueError(f"g1 must be >= 0, got {self.g1}")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @classmethod
    def from_g1_over_hbar(cls, g1_over_hbar: float, **kwargs) -> "TrapConfig":
        hbar = kwargs.get("hbar", HBAR)
        return cls(g1=g1_over_hbar * hbar, **kwargs)

    @property
    def oscillator_length(self) -> float:
        return math.sqrt(self.hbar / (self.mass * self.omega0))

    @property
    def g1_over_hbar(self) -> float:
        return self.g1 / self.hbar

    @property
    def g_dimensionless(self) -> float:
        """g1 / (hbar omega0 a0)."""
        return self.g1 / (self.hbar * self.omega0 * self.oscillator_length)

    def with_(self, **changes) -> "TrapConfig":
        values = dict(mass=self.mass, omega0=self.omega0, g1=self.g1, d=self.d, hbar=self.hbar)
        if "g1_over_hbar" in changes:
            changes["g1"] = changes.pop("g1_over_hbar") * changes.get("hbar", self.hbar)
        values.update(changes)
        return TrapConfig(**values)


def _unit_scales(cfg: TrapConfig) -> dict:
    a0 = cfg.oscillator_length
    w = cfg.omega0
    energy = cfg.hbar * w
    return {
        "length": a0,
        "time": 1.0 / w,
        "frequency": w,
        "energy": energy,
        "velocity": a0 * w,
        "acceleration": a0 * w * w,
        "momentum": cfg.hbar / a0,
        "force": energy / a0,
        "coupling": energy * a0,
        "coupling_over_hbar": w * a0,
    }


UNIT_TAGS = tuple(_unit_scales(TrapConfig()).keys())


def _scale(cfg: TrapConfig, unit: str) -> float:
    scales = _unit_scales(cfg)
    try:
        return scales[unit]
    except KeyError:
        raise ValueError(f"unknown unit tag {unit!r}; expected one of {sorted(scales)}") from None


def to_dimensionless(cfg: TrapConfig, value, unit: str):
    """Convert an SI quantity tagged with ``unit`` to oscillator units."""
    return value / _scale(cfg, unit)


def from_dimensionless(cfg: TrapConfig, value, unit: str):
    return value * _scale(cfg, unit)


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid x_j = x_min + j dx, j = 0..n_points-1."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        n = int(self.n_points)
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 2, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        object.__setattr__(self, "n_points", n)

    @classmethod
    def symmetric(cls, half_width: float, n_points: int) -> "Grid1D":
        return cls(-half_width, half_width, n_points)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points, self.dx)

    def compatible(self, other: "Grid1D") -> bool:
        return (
            self.n_points == other.n_points
            and math.isclose(self.dx, other.dx, rel_tol=1e-12)
            and math.isclose(self.x_min, other.x_min, rel_tol=1e-12, abs_tol=1e-12 * self.length)
        )


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex field on a grid, optionally translated and boosted.

    The represented state is
    ``psi(x) = exp(i phase) exp(i momentum (x - offset)) amplitudes(x - offset)``,
    so a condensate far from the grid window is stored compactly as a
    local profile plus a frame position and momentum.
    """

    grid: Grid1D
    amplitudes: np.ndarray
    offset: float = 0.0
    momentum: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} amplitudes, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def x(self) -> np.ndarray:
        """Positions of the amplitudes in the represented coordinate."""
        return self.grid.x + self.offset

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def mean_position(self) -> float:
        rho = self.density()
        return float(np.sum(self.grid.x * rho) / np.sum(rho)) + self.offset

    def replace(self, **changes) -> "WaveFunction":
        values = dict(grid=self.grid, amplitudes=self.amplitudes, offset=self.offset,
                      momentum=self.momentum, phase=self.phase)
        values.update(changes)
        return WaveFunction(**values)


def normalize(psi: WaveFunction) -> WaveFunction:
    n2 = psi.norm2()
    if not n2 > 0:
        raise DegenerateInputError("cannot normalize a wavefunction with zero norm")
    if abs(n2 - 1.0) < 1e-14:
        return psi
    return psi.replace(amplitudes=psi.amplitudes / math.sqrt(n2))


def shifted_samples(values: np.ndarray, grid: Grid1D, shift: float) -> np.ndarray:
    """Return f(x_j + shift) for the band-limited f sampled as ``values``.

    ``f`` is treated as zero outside the grid window; the fractional part of
    the shift is applied spectrally on a zero-padded copy so nothing wraps.
    """
    n = grid.n_points
    whole = int(round(shift / grid.dx))
    frac = shift - whole * grid.dx
    if abs(whole) >= n:
        return np.zeros(n, dtype=complex)
    if frac != 0.0:
        padded = np.zeros(2 * n, dtype=complex)
        padded[:n] = values
        k = 2 * np.pi * np.fft.fftfreq(2 * n, grid.dx)
        moved = np.fft.ifft(np.fft.fft(padded) * np.exp(1j * k * frac))[:n]
    else:
        moved = np.asarray(values, dtype=complex)
    out = np.zeros(n, dtype=complex)
    if whole >= 0:
        out[: n - whole] = moved[whole:]
    else:
        out[-whole:] = moved[: n + whole]
    return out


def overlap(a: WaveFunction, b: WaveFunction) -> complex:
    """<a|b> up to a global phase convention, for framed states on one grid."""
    if not a.grid.compatible(b.grid):
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")
    shift = b.offset - a.offset
    kick = b.momentum - a.momentum
    a_here = shifted_samples(a.amplitudes, a.grid, shift)
    y = b.grid.x
    return complex(np.sum(np.conj(a_here) * np.exp(1j * kick * y) * b.amplitudes) * b.grid.dx)


def spectral_interpolate(psi: WaveFunction, x: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``psi`` at represented positions ``x``.

    Points outside the grid window are returned as zero. Cost is
    O(len(x) * n_points), intended for transferring a compact profile onto a
    wide grid.
    """
    x = np.asarray(x, dtype=float)
    grid = psi.grid
    y = x - psi.offset
    out = np.zeros(x.shape, dtype=complex)
    inside = (y >= grid.x_min) & (y < grid.x_max)
    if not inside.any():
        return out
    n = grid.n_points
    coeffs = np.fft.fft(psi.amplitudes) / n
    k = grid.k
    yy = y[inside] - grid.x_min
    vals = np.zeros(yy.shape, dtype=complex)
    for start in range(0, yy.size, 4096):
        chunk = yy[start:start + 4096]
        basis = np.exp(1j * np.outer(chunk, k))
        # Nyquist mode as a cosine so real data stays real between nodes
        basis[:, n // 2] = np.cos(k[n // 2] * chunk)
        vals[start:start + 4096] = basis @ coeffs
    out[inside] = vals * np.exp(1j * psi.momentum * y[inside] + 1j * psi.phase)
    return out


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------

TrajectoryFunc = Callable[[np.ndarray, str], tuple]


class Trajectory:
    """Path q(t) on [0, t_f] with first and second derivatives.

    Either backed by an analytic ``func(t, side) -> (q, q_dot, q_ddot)``
    where ``side`` is ``"left"`` or ``"right"`` and picks the branch at a
    breakpoint, or by samples interpolated with cubic Hermite splines.

    ``endpoints`` optionally overrides the position at exactly t = 0 and
    t = t_f. The bang-bang protocols use this for their boundary jumps,
    which carry no dynamical weight but are part of the protocol.
    """

    def __init__(self, t, q, q_dot, q_ddot, func: Optional[TrajectoryFunc] = None,
                 breakpoints: Sequence[float] = (), endpoints: Optional[tuple] = None):
        self.t = np.asarray(t, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.q_dot = np.asarray(q_dot, dtype=float)
        self.q_ddot = np.asarray(q_ddot, dtype=float)
        if self.t.ndim != 1 or self.t.size < 1:
            raise ValueError("trajectory needs at least one sample")
        if not (self.q.shape == self.q_dot.shape == self.q_ddot.shape == self.t.shape):
            raise ValueError("sample arrays must share a shape")
        if self.t[0] != 0.0:
            raise ValueError("samples must start at t = 0")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        self.func = func
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints if 0 < b < self.t[-1]))
        self.endpoints = endpoints
        self._splines = None
        for arr in (self.t, self.q, self.q_dot, self.q_ddot):
            arr.setflags(write=False)

    @classmethod
    def from_function(cls, func: TrajectoryFunc, t_f: float, n_samples: int = 4097,
                      breakpoints: Sequence[float] = (), endpoints: Optional[tuple] = None):
        if t_f < 0:
            raise ValueError("t_f must be non-negative")
        if t_f == 0:
            t = np.zeros(1)
        else:
            t = np.linspace(0.0, t_f, n_samples)
            t[-1] = t_f
        proto = cls(t, np.zeros_like(t), np.zeros_like(t), np.zeros_like(t), func=func,
                    breakpoints=breakpoints, endpoints=endpoints)
        q, qd, qdd = proto.evaluate(t)
        return cls(t, q, qd, qdd, func=func, breakpoints=breakpoints, endpoints=endpoints)

    @property
    def t_f(self) -> float:
        return float(self.t[-1])

    @property
    def analytic(self) -> bool:
        return self.func is not None

    def _spline_eval(self, t):
        if self._splines is None:
            if self.t.size == 1:
                self._splines = "constant"
            else:
                self._splines = (
                    CubicHermiteSpline(self.t, self.q, self.q_dot),
                    CubicHermiteSpline(self.t, self.q_dot, self.q_ddot),
                )
        if self._splines == "constant":
            return (np.full_like(t, self.q[0]), np.full_like(t, self.q_dot[0]),
                    np.full_like(t, self.q_ddot[0]))
        sq, sv = self._splines
        q, qd, qdd = sq(t), sv(t), sv(t, 1)
        # exact samples at knots
        idx = np.searchsorted(self.t, t)
        idx = np.clip(idx, 0, self.t.size - 1)
        hit = self.t[idx] == t
        q[hit] = self.q[idx[hit]]
        qd[hit] = self.q_dot[idx[hit]]
        qdd[hit] = self.q_ddot[idx[hit]]
        return q, qd, qdd

    def evaluate(self, t, side: Optional[str] = None):
        """Return (q, q_dot, q_ddot) at times ``t``.

        ``side=None`` gives the protocol value, including endpoint overrides;
        ``"left"``/``"right"`` give one-sided limits at breakpoints and ends.
        """
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        if self.func is not None:
            q, qd, qdd = (np.array(np.broadcast_to(v, tt.shape), dtype=float)
                          for v in self.func(tt, side or "right"))
        else:
            q, qd, qdd = self._spline_eval(tt)
        if side is None and self.endpoints is not None:
            start, end = self.endpoints
            if start is not None:
                q[tt == 0.0] = start
            if end is not None:
                q[tt == self.t_f] = end
        if scalar:
            return float(q[0]), float(qd[0]), float(qdd[0])
        return q, qd, qdd

    __call__ = evaluate

    def position(self, t, side: Optional[str] = None):
        return self.evaluate(t, side)[0]

    def scaled(self, time_unit: float, length_unit: float) -> "Trajectory":
        """Express the trajectory with t in ``time_unit`` and q in ``length_unit``."""
        T, L = time_unit, length_unit

        func = None
        if self.func is not None:
            inner = self.func

            def func(t, side):
                q, qd, qdd = inner(np.asarray(t) * T, side)
                return np.asarray(q) / L, np.asarray(qd) * T / L, np.asarray(qdd) * T * T / L

        endpoints = None
        if self.endpoints is not None:
            endpoints = tuple(None if e is None else e / L for e in self.endpoints)
        return Trajectory(self.t / T, self.q / L, self.q_dot * T / L, self.q_ddot * T * T / L,
                          func=func, breakpoints=[b / T for b in self.breakpoints],
                          endpoints=endpoints)

    def sampled(self) -> "Trajectory":
        """Drop the analytic rule and keep only the samples."""
        return Trajectory(self.t, self.q, self.q_dot, self.q_ddot,
                          breakpoints=self.breakpoints, endpoints=self.endpoints)

    def __repr__(self):
        kind = "analytic" if self.func is not None else "sampled"
        return f"Trajectory({kind}, t_f={self.t_f:.6g}, n={self.t.size})"


def segment_times(t_f: float, breakpoints: Sequence[float], step: float) -> np.ndarray:
    """Time grid on [0, t_f] hitting every breakpoint, steps no longer than ``step``."""
    edges = [0.0] + sorted({float(b) for b in breakpoints if 0 < b < t_f}) + [t_f]
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, int(math.ceil((b - a) / step - 1e-9)))
        seg = np.linspace(a, b, n + 1)
        pieces.append(seg[:-1])
    pieces.append(np.array([t_f]))
    return np.concatenate(pieces)
