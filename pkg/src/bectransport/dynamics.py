"""Time-dependent GPE propagation in a moving harmonic trap.

The propagator is Strang split-step Fourier. In the default ``"comoving"``
mode the state is stored as ``exp(i P (x - X)) phi(x - X)``: a compact
profile ``phi`` on a small grid plus a frame position X and momentum P.
Each half kick of the trap potential 1/2 (x - q0)^2 splits exactly into
1/2 y^2 acting on ``phi`` and a linear part that only changes P, and each
kinetic drift moves X by P dt. This is algebraically the same scheme as
lab-frame split-step on an unbounded grid, but the grid only has to hold
the condensate, not the 1.6 mm path or the large transport momenta.

``frame="lab"`` runs the same scheme literally on a wide lab grid and is
kept as an independent check of that rewriting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .core import (Grid1D, Trajectory, TrapConfig, WaveFunction, GridMismatchError, normalize,
                   overlap, segment_times, spectral_interpolate)
from .groundstate import StationaryState, default_grid, energy_decomposition, solve_ground_state


class PropagationError(RuntimeError):
    pass


class FrameEscapeError(PropagationError):
    pass


class InstabilityError(PropagationError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite wavefunction at step {step} (t = {t:.6g} s)")
        self.step = step
        self.t = t


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float  # s
    psi: WaveFunction  # oscillator units, frame in offset/momentum
    frame_offset: float  # m


@dataclass(frozen=True, eq=False)
class PropagationResult:
    snapshots: list
    final_state: WaveFunction
    final_fidelity: float
    com_track: tuple  # (t in s, <q> in m)
    norm_drift: float
    frame: str
    n_steps: int

    @property
    def final_com(self) -> float:
        return float(self.com_track[1][-1])


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    """|<a|b>| for normalised states on the same grid, clipped to [0, 1]."""
    if not a.grid.compatible(b.grid):
        raise GridMismatchError(f"cannot compare states on {a.grid} and {b.grid}")
    return min(1.0, abs(overlap(a, b)))


def gp_energy(psi: WaveFunction, cfg: TrapConfig, trap_center: float = 0.0) -> float:
    """GP energy functional in hbar omega0; ``trap_center`` in a0."""
    return sum(energy_decomposition(psi, cfg, trap_center))


def excitation_energy(psi: WaveFunction, cfg: TrapConfig, trap_center: float,
                      ground: Optional[StationaryState] = None) -> float:
    """Energy above the ground state of a trap centred at ``trap_center`` (m), in J."""
    if ground is None:
        ground = solve_ground_state(cfg, psi.grid)
    center = trap_center / cfg.oscillator_length
    e = gp_energy(psi, cfg, center) - ground.energy
    return e * cfg.hbar * cfg.omega0


def place(ground: StationaryState, position: float, momentum: float = 0.0) -> WaveFunction:
    """Ground profile translated so its centre sits at ``position`` (a0)."""
    return ground.chi.replace(offset=position - ground.center, momentum=momentum, phase=0.0)


# --------------------------------------------------------------------------
# analytic transport mode
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransportMode:
    """Stationary profile carried rigidly along the classical path q_c."""

    chi: StationaryState
    q_c: Trajectory  # SI
    q0: Trajectory  # SI
    cfg: TrapConfig

    def _scaled(self):
        a0, w = self.cfg.oscillator_length, self.cfg.omega0
        return self.q_c.scaled(1 / w, a0), self.q0.scaled(1 / w, a0)

    def action(self, t: float) -> float:
        """int_0^t [1/2 (q_c'^2 - q_c^2) + 1/2 q0^2] in oscillator units."""
        qc, q0 = self._scaled()
        tau = t * self.cfg.omega0
        if tau <= 0:
            return 0.0

        def integrand(s):
            q, v, _ = qc.evaluate(s)
            return 0.5 * (v * v - q * q) + 0.5 * q0.position(s, "right") ** 2

        pts = [b for b in set(qc.breakpoints) | set(q0.breakpoints) if 0 < b < tau]
        val, _ = quad(integrand, 0.0, tau, points=pts or None, limit=200,
                      epsabs=1e-10, epsrel=1e-10)
        return val


def transport_mode_state(mode: TransportMode, t: float) -> WaveFunction:
    """Transport-mode wavefunction at time ``t`` (s) as a framed state in oscillator units."""
    a0, w = mode.cfg.oscillator_length, mode.cfg.omega0
    q, v, _ = mode.q_c.evaluate(t)
    pos, mom = q / a0, v / (a0 * w)
    phase = -mode.chi.mu * t * w + mom * pos - mode.action(t)
    return place(mode.chi, pos, mom).replace(phase=phase)


# --------------------------------------------------------------------------
# propagation
# --------------------------------------------------------------------------

def lab_grid(cfg: TrapConfig, q_c: Trajectory, compact: Optional[Grid1D] = None) -> Grid1D:
    """Lab grid wide enough for the whole path and fine enough for its top speed."""
    compact = default_grid(cfg) if compact is None else compact
    a0, w = cfg.oscillator_length, cfg.omega0
    q, v = q_c.q / a0, q_c.q_dot / (a0 * w)
    margin = compact.length / 2
    lo, hi = q.min() - margin, q.max() + margin
    k_needed = np.max(np.abs(v)) + math.pi / compact.dx
    n = 2 ** int(math.ceil(math.log2((hi - lo) * k_needed / math.pi)))
    return Grid1D(lo, lo + n * ((hi - lo) / n), n)


def to_grid(psi: WaveFunction, grid: Grid1D) -> WaveFunction:
    """Resample a framed state onto a plain grid (frame folded into the amplitudes)."""
    return normalize(WaveFunction(grid, spectral_interpolate(psi, grid.x)))


def _edge_density(values) -> float:
    return float(max(abs(values[0]) ** 2, abs(values[1]) ** 2,
                     abs(values[-1]) ** 2, abs(values[-2]) ** 2))


def propagate(cfg: TrapConfig, q0: Trajectory, psi0: WaveFunction, dt: float,
              snapshot_stride: int = 100, *, force: Optional[Trajectory] = None,
              trap_shift: Optional[Callable[[np.ndarray], np.ndarray]] = None,
              extra_potential: Optional[Callable[[np.ndarray], np.ndarray]] = None,
              ground: Optional[StationaryState] = None, frame: str = "comoving",
              extra_breakpoints: Sequence[float] = (),
              escape_threshold: float = 1e-6) -> PropagationResult:
    """Evolve ``psi0`` under the trap path ``q0`` (SI) with step ``dt`` (s).

    Optional inputs, all SI:

    * ``force``: extra uniform acceleration a(t) in its position column;
    * ``trap_shift(t)``: displacement added to the trap centre, held constant
      over each step (evaluated at the step midpoint);
    * ``extra_potential(y)``: anharmonic correction, y in a0 from the trap
      centre, in hbar omega0.

    ``psi0`` is in oscillator units. The final fidelity is the overlap with
    ``ground`` (solved on ``psi0``'s grid if not given) placed at q0(t_f).
    """
    if frame not in ("comoving", "lab"):
        raise ValueError(f"unknown frame {frame!r}")
    a0, w = cfg.oscillator_length, cfg.omega0
    g = cfg.g_dimensionless
    h_max = dt * w
    if not 0 < h_max < 0.05:
        raise ValueError(f"dt * omega0 must be in (0, 0.05), got {h_max:.3g}")
    if abs(psi0.norm2() - 1) > 1e-10:
        raise ValueError("psi0 must be normalised")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")

    trap = q0.scaled(1 / w, a0)
    push = force.scaled(1 / w, a0 * w * w) if force is not None else None
    breaks = set(trap.breakpoints) | {b * w for b in extra_breakpoints}
    if push is not None:
        breaks |= set(push.breakpoints)
    T = trap.t_f
    times = segment_times(T, breaks, h_max) if T > 0 else np.zeros(1)
    steps = np.diff(times)
    n_steps = steps.size

    # trap centre and force at both ends of every step, with one-sided limits
    c_start = trap.position(times[:-1], "right")
    c_end = trap.position(times[1:], "left")
    if trap_shift is not None:
        mids = 0.5 * (times[:-1] + times[1:]) / w
        shift = np.asarray(trap_shift(mids), dtype=float) / a0
        c_start = c_start + shift
        c_end = c_end + shift
    if push is not None:
        f_start = push.position(times[:-1], "right")
        f_end = push.position(times[1:], "left")
    else:
        f_start = f_end = np.zeros(n_steps)

    grid = psi0.grid
    y, k, dx = grid.x, grid.k, grid.dx
    if frame == "comoving":
        phi = np.array(psi0.amplitudes)
        X, P = psi0.offset, psi0.momentum
        # an initial overall phase is irrelevant; fold initial frame into (X, P)
    else:
        if psi0.offset or psi0.momentum:
            psi0 = to_grid(psi0, grid)
        phi = np.array(psi0.amplitudes)
        X = P = 0.0

    kin_cache, harm_cache = {}, {}

    def kinetic(hh):
        key = round(hh, 15)
        if key not in kin_cache:
            kin_cache[key] = np.exp(-0.5j * k * k * hh)
        return kin_cache[key]

    def harmonic_half(hh):
        key = round(hh, 15)
        if key not in harm_cache:
            harm_cache[key] = np.exp(-0.25j * y * y * hh)
        return harm_cache[key]

    com_t = np.empty(n_steps + 1)
    com_q = np.empty(n_steps + 1)
    norm_drift = 0.0
    snapshots = []

    def frame_state():
        return WaveFunction(grid, phi, offset=X, momentum=P)

    def record(i, t):
        rho = np.abs(phi) ** 2
        total = float(np.sum(rho))
        com_t[i] = t / w
        com_q[i] = (float(np.sum(y * rho)) / total + X) * a0
        return total * dx

    def check_edges(i):
        rho = np.abs(phi) ** 2
        if _edge_density(phi) > escape_threshold * float(rho.max()):
            raise FrameEscapeError(
                f"density at the grid edge exceeds {escape_threshold:g} of the peak at step {i} "
                f"(t = {times[i] / w:.6g} s); widen the grid")

    record(0, 0.0)
    snapshots.append(Snapshot(0.0, frame_state(), X * a0))
    check_edges(0)

    for i in range(n_steps):
        hh = steps[i]
        if frame == "comoving":
            P += (f_start[i] - (X - c_start[i])) * hh / 2
            pot = harmonic_half(hh) * np.exp(-0.5j * g * hh * np.abs(phi) ** 2)
            if extra_potential is not None:
                pot = pot * np.exp(-0.5j * hh * extra_potential(y + X - c_start[i]))
            phi = np.fft.ifft(kinetic(hh) * np.fft.fft(phi * pot))
            X += P * hh
            pot = harmonic_half(hh) * np.exp(-0.5j * g * hh * np.abs(phi) ** 2)
            if extra_potential is not None:
                pot = pot * np.exp(-0.5j * hh * extra_potential(y + X - c_end[i]))
            phi = phi * pot
            P += (f_end[i] - (X - c_end[i])) * hh / 2
        else:
            lin = c_start[i] + f_start[i]
            pot = np.exp(-0.5j * hh * (0.5 * y * y - lin * y + g * np.abs(phi) ** 2))
            if extra_potential is not None:
                pot = pot * np.exp(-0.5j * hh * extra_potential(y - c_start[i]))
            phi = np.fft.ifft(kinetic(hh) * np.fft.fft(phi * pot))
            lin = c_end[i] + f_end[i]
            pot = np.exp(-0.5j * hh * (0.5 * y * y - lin * y + g * np.abs(phi) ** 2))
            if extra_potential is not None:
                pot = pot * np.exp(-0.5j * hh * extra_potential(y - c_end[i]))
            phi = phi * pot

        n2 = record(i + 1, times[i + 1])
        if not math.isfinite(n2):
            raise InstabilityError(i + 1, times[i + 1] / w)
        norm_drift = max(norm_drift, abs(n2 - 1.0))
        if (i + 1) % 16 == 0 or i + 1 == n_steps:
            check_edges(i + 1)
        if (i + 1) % snapshot_stride == 0 or i + 1 == n_steps:
            snapshots.append(Snapshot(times[i + 1] / w, frame_state(), X * a0))

    final = frame_state()
    if ground is None:
        ground = solve_ground_state(cfg, psi0.grid if frame == "comoving" else default_grid(cfg))
    target_center = trap.position(T)
    target = place(ground, target_center)
    if frame == "lab":
        target = WaveFunction(grid, spectral_interpolate(target, grid.x))
    fid = fidelity(target, final)
    return PropagationResult(snapshots, final, fid, (com_t, com_q), norm_drift, frame, n_steps)


def write_snapshots(path, result: PropagationResult, cfg: TrapConfig):
    """Columnar dump of all snapshots: t (s), q (m), Re psi, Im psi.

    The lab-frame phase factor exp(i P (x - X)) is folded into the values.
    """
    from .io import write_columns

    a0 = cfg.oscillator_length
    ts, qs, re, im = [], [], [], []
    for snap in result.snapshots:
        psi = snap.psi
        vals = psi.amplitudes * np.exp(1j * psi.momentum * psi.grid.x + 1j * psi.phase)
        vals = vals / math.sqrt(a0)
        ts.append(np.full(vals.size, snap.t))
        qs.append(psi.x * a0)
        re.append(vals.real)
        im.append(vals.imag)
    write_columns(path, ["t", "q", "re_psi", "im_psi"],
                  [np.concatenate(ts), np.concatenate(qs), np.concatenate(re), np.concatenate(im)],
                  {"frame": result.frame, "units": "SI, psi in m^-1/2"})
