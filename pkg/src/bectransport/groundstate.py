"""Stationary ground state of the 1D GPE in a harmonic trap.

Works in oscillator units. Relaxation is split-step imaginary-time
evolution with a shrinking step; the result is then polished by Newton
iteration on the discretised stationary equation (with the chemical
potential as an extra unknown) until the residual certifies it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Grid1D, TrapConfig, WaveFunction

MAX_DENSE_POINTS = 4096


class GroundStateError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class GridTooSmallError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StationaryState:
    """Ground mode chi with chemical potential and energy split, all in hbar omega0."""

    chi: WaveFunction
    mu: float
    kinetic: float
    potential: float
    interaction: float
    g: float
    center: float = 0.0
    residual: float = float("nan")
    history: tuple = field(default=(), repr=False)

    @property
    def energy(self) -> float:
        return self.kinetic + self.potential + self.interaction

    def mu_si(self, cfg: TrapConfig) -> float:
        return self.mu * cfg.hbar * cfg.omega0


def thomas_fermi_mu(g: float) -> float:
    """Thomas-Fermi chemical potential for dimensionless coupling g."""
    return (3 * g / 4) ** (2 / 3) / 2 ** (1 / 3)


def default_grid(cfg: TrapConfig, n_points: int = 1024, extent: float = 12.0) -> Grid1D:
    """Symmetric grid of +-extent * max(a0, Thomas-Fermi radius), in units of a0."""
    g = cfg.g_dimensionless
    radius = math.sqrt(2 * thomas_fermi_mu(g)) if g > 0 else 0.0
    return Grid1D.symmetric(extent * max(1.0, radius), n_points)


def _kinetic_apply(values, k):
    return np.fft.ifft(0.5 * k * k * np.fft.fft(values))


def energy_terms(values: np.ndarray, grid: Grid1D, g: float, potential: np.ndarray):
    """(kinetic, potential, interaction) for amplitudes on ``grid``."""
    dx = grid.dx
    spec = np.fft.fft(values)
    kin = 0.5 * float(np.sum(grid.k ** 2 * np.abs(spec) ** 2)) * dx / grid.n_points
    rho = np.abs(values) ** 2
    pot = float(np.sum(potential * rho) * dx)
    inter = 0.5 * g * float(np.sum(rho * rho) * dx)
    return kin, pot, inter


def energy_decomposition(chi: WaveFunction, cfg: TrapConfig, center: float = 0.0):
    """Kinetic, trap and mean-field energy of ``chi`` in units of hbar omega0.

    ``center`` is the trap centre in the coordinate ``chi`` represents
    (oscillator units); frame offset and momentum of ``chi`` are included.
    """
    grid = chi.grid
    y = grid.x
    values = chi.amplitudes
    kin, _, inter = energy_terms(values, grid, cfg.g_dimensionless, np.zeros_like(y))
    rho = np.abs(values) ** 2
    dx = grid.dx
    if chi.momentum:
        spec = np.fft.fft(values)
        mean_k = float(np.sum(grid.k * np.abs(spec) ** 2)) * dx / grid.n_points
        kin += chi.momentum * mean_k + 0.5 * chi.momentum ** 2 * float(np.sum(rho) * dx)
    pot = 0.5 * float(np.sum((y + chi.offset - center) ** 2 * rho) * dx)
    return kin, pot, inter


def _residual(chi, k, V, g, dx):
    Hc = np.real(_kinetic_apply(chi, k)) + V * chi + g * chi ** 3
    mu = float(np.sum(chi * Hc) * dx)
    r = Hc - mu * chi
    return math.sqrt(float(np.sum(r * r) * dx) / float(np.sum(chi * chi) * dx)), mu


def solve_ground_state(cfg: TrapConfig, grid: Optional[Grid1D] = None, tol: float = 1e-10,
                       center: float = 0.0,
                       extra_potential: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                       max_relax_steps: int = 20000, max_newton: int = 30) -> StationaryState:
    """Ground state chi and chemical potential mu for ``cfg`` on ``grid``.

    ``grid`` and ``center`` are in units of a0; ``extra_potential(y)`` adds a
    trap correction as a function of the distance y from the centre.
    Convergence is judged by ||(H - mu) chi|| / ||chi|| < tol.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = default_grid(cfg) if grid is None else grid
    if grid.n_points > MAX_DENSE_POINTS:
        raise ValueError(f"ground-state grids are limited to {MAX_DENSE_POINTS} points; "
                         "solve on a compact grid and interpolate")
    g = cfg.g_dimensionless
    x, k, dx = grid.x, grid.k, grid.dx
    y = x - center
    V = 0.5 * y * y
    if extra_potential is not None:
        V = V + extra_potential(y)

    width = max(1.0, math.sqrt(2 * thomas_fermi_mu(g)) / math.sqrt(5)) if g > 0 else 1.0
    psi = np.exp(-y * y / (2 * width * width)).astype(complex)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * dx)

    # Relaxation: imaginary-time split steps, rejecting any step that raises the
    # energy and halving dt instead, so the energy history is non-increasing.
    energy_scale = max(1.0, thomas_fermi_mu(g))
    dt = 0.5 / energy_scale
    dt_min = dt / 256
    switch = 1e-2 * energy_scale
    energy = sum(energy_terms(psi, grid, g, V))
    history = [energy]
    residual = float("inf")
    for step in range(1, max_relax_steps + 1):
        kin_half = np.exp(-0.25 * k * k * dt)
        trial = np.fft.ifft(kin_half * np.fft.fft(psi))
        trial *= np.exp(-(V + g * np.abs(trial) ** 2) * dt)
        trial = np.fft.ifft(kin_half * np.fft.fft(trial))
        trial /= math.sqrt(np.sum(np.abs(trial) ** 2) * dx)
        trial_energy = sum(energy_terms(trial, grid, g, V))
        if trial_energy > energy:
            dt /= 2
            if dt < dt_min:
                break
            continue
        psi, energy = trial, trial_energy
        history.append(energy)
        if step % 25 == 0:
            residual, _ = _residual(psi.real, k, V, g, dx)
            if residual < switch:
                break

    chi = psi.real.copy()
    n = grid.n_points
    kin_matrix = np.real(np.fft.ifft(0.5 * (k ** 2)[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0))
    kin_matrix = 0.5 * (kin_matrix + kin_matrix.T)
    residual, mu = _residual(chi, k, V, g, dx)
    jac = np.empty((n + 1, n + 1))
    for _ in range(max_newton):
        if residual < tol:
            break
        Hc = kin_matrix @ chi + V * chi + g * chi ** 3
        F = np.concatenate([Hc - mu * chi, [np.sum(chi * chi) * dx - 1.0]])
        jac[:n, :n] = kin_matrix
        jac[np.arange(n), np.arange(n)] += V + 3 * g * chi ** 2 - mu
        jac[:n, n] = -chi
        jac[n, :n] = 2 * chi * dx
        jac[n, n] = 0.0
        step = np.linalg.solve(jac, -F)
        chi = chi + step[:n]
        chi /= math.sqrt(np.sum(chi * chi) * dx)
        residual, mu = _residual(chi, k, V, g, dx)
    if not residual < tol:
        raise GroundStateError("ground state did not converge", residual)

    if chi[np.argmax(np.abs(chi))] < 0:
        chi = -chi
    peak = np.max(np.abs(chi))
    edge = max(abs(chi[0]), abs(chi[-1]), abs(chi[1]), abs(chi[-2]))
    if edge > 1e-8 * peak:
        raise GridTooSmallError(f"|chi| at the grid edge is {edge / peak:.2e} of its peak; widen the grid")

    kin, pot, inter = energy_terms(chi, grid, g, V)
    wf = WaveFunction(grid, chi)
    return StationaryState(wf, mu, kin, pot, inter, g, center, residual, tuple(history))


def write_state(path, state: StationaryState, cfg: Optional[TrapConfig] = None):
    """Columnar dump: q (a0), Re chi, Im chi, with mu in the header."""
    from .io import write_columns

    meta = {"mu": state.mu, "g": state.g, "center": state.center,
            "units": "oscillator (lengths in a0, energies in hbar*omega0)"}
    if cfg is not None:
        meta["oscillator_length_m"] = cfg.oscillator_length
    chi = state.chi
    write_columns(path, ["q", "re_chi", "im_chi"],
                  [chi.x, chi.amplitudes.real, chi.amplitudes.imag], meta)


def read_state(path, cfg: TrapConfig) -> StationaryState:
    from .io import read_columns

    cols, meta = read_columns(path)
    q = cols["q"]
    n = q.size
    dx = (q[-1] - q[0]) / (n - 1)
    grid = Grid1D(q[0], q[0] + n * dx, n)
    chi = WaveFunction(grid, cols["re_chi"] + 1j * cols["im_chi"])
    center = float(meta.get("center", 0.0))
    y = grid.x - center
    kin, pot, inter = energy_terms(chi.amplitudes, grid, cfg.g_dimensionless, 0.5 * y * y)
    return StationaryState(chi, float(meta["mu"]), kin, pot, inter, cfg.g_dimensionless, center)
