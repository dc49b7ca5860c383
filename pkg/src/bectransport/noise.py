"""White-noise jitter of the trap centre and the resulting transport fidelity.

The trap centre is displaced by lambda * zeta(t), with zeta unit-intensity
white noise in the scaled time tau = omega0 t, so lambda is a length and
the response factors beta, beta_dot below are dimensionless. On a grid of
cells of width dtau, zeta is piecewise constant with N(0, 1/dtau) values.
The condensate centre picks up lambda * beta(t) with

    beta(t)     = int_0^{omega0 t} zeta(tau) sin(omega0 t - tau) dtau
    beta_dot(t) = int_0^{omega0 t} zeta(tau) cos(omega0 t - tau) dtau

(the physical velocity is lambda * omega0 * beta_dot). For piecewise
constant zeta both integrals are done exactly cell by cell.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .core import Trajectory, TrapConfig, shifted_samples
from .dynamics import propagate
from .groundstate import StationaryState, solve_ground_state

DEFAULT_DT_SCALED = 1e-3
DEFAULT_REALIZATIONS = 2000


class CoverageError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    seed: int
    dt_scaled: float
    samples: np.ndarray

    @property
    def duration_scaled(self) -> float:
        return self.samples.size * self.dt_scaled

    def value_at(self, tau):
        """zeta at scaled times ``tau`` (piecewise constant, right-open cells)."""
        idx = np.floor(np.asarray(tau) / self.dt_scaled).astype(int)
        return self.samples[np.clip(idx, 0, self.samples.size - 1)]


@dataclass(frozen=True)
class BetaPair:
    beta: float
    beta_dot: float  # cosine integral, without the omega0 prefactor
    t_F: float


@dataclass(frozen=True)
class FidelityRecord:
    lam: float  # m
    g1: float  # J m
    t_f: float
    n_realizations: int
    mean_fidelity: float
    std_error: float
    seed: int

    def g1_over_hbar(self, hbar: float) -> float:
        return self.g1 / hbar


def realization_seed(master_seed: int, index: int) -> int:
    """64-bit seed of realization ``index``; independent of evaluation order."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _cell_count(t_F: float, omega0: float, dt_scaled: float) -> int:
    if not dt_scaled > 0:
        raise ValueError("dt_scaled must be positive")
    return max(1, int(math.ceil(omega0 * t_F / dt_scaled - 1e-9)))


def sample_noise(seed: int, t_F: float, omega0: float, dt_scaled: float = DEFAULT_DT_SCALED
                 ) -> NoiseRealization:
    """White-noise samples covering [0, omega0 t_F].

    The cell width is ``dt_scaled`` shrunk slightly so an integer number of
    cells ends exactly at omega0 t_F.
    """
    n = _cell_count(t_F, omega0, dt_scaled)
    dt_eff = omega0 * t_F / n if t_F > 0 else dt_scaled
    rng = np.random.default_rng(int(seed))
    samples = rng.standard_normal(n) / math.sqrt(dt_eff)
    samples.setflags(write=False)
    return NoiseRealization(int(seed), dt_eff, samples)


def beta_weights(n_cells: int, dt_scaled: float, T: float):
    """Per-cell weights (w_sin, w_cos) so that beta = zeta . w_sin, beta_dot = zeta . w_cos."""
    edges = np.minimum(np.arange(n_cells + 1) * dt_scaled, T)
    lo, hi = edges[:-1], edges[1:]
    w_sin = np.cos(T - hi) - np.cos(T - lo)
    w_cos = np.sin(T - lo) - np.sin(T - hi)
    return w_sin, w_cos


def beta_integrals(zeta: NoiseRealization, omega0: float, t_F: float) -> BetaPair:
    T = omega0 * t_F
    if T > zeta.duration_scaled * (1 + 1e-12):
        raise CoverageError(f"realization covers tau <= {zeta.duration_scaled:.6g}, need {T:.6g}")
    w_sin, w_cos = beta_weights(zeta.samples.size, zeta.dt_scaled, T)
    return BetaPair(float(zeta.samples @ w_sin), float(zeta.samples @ w_cos), t_F)


def _beta_chunk(args):
    master_seed, start, stop, t_F, omega0, dt_scaled = args
    out = np.empty((stop - start, 2))
    w = None
    for j, i in enumerate(range(start, stop)):
        z = sample_noise(realization_seed(master_seed, i), t_F, omega0, dt_scaled)
        if w is None:
            w = beta_weights(z.samples.size, z.dt_scaled, omega0 * t_F)
        out[j] = z.samples @ w[0], z.samples @ w[1]
    return out


@lru_cache(maxsize=32)
def beta_ensemble(t_F: float, omega0: float, n: int, master_seed: int,
                  dt_scaled: float = DEFAULT_DT_SCALED, workers: int = 1) -> np.ndarray:
    """(n, 2) array of (beta, beta_dot) for realizations 0..n-1 of ``master_seed``.

    Chunks may run in worker processes; they are stitched back in index
    order, so the result does not depend on ``workers``.
    """
    bounds = np.linspace(0, n, max(1, min(workers * 4, n)) + 1).astype(int)
    jobs = [(master_seed, int(a), int(b), t_F, omega0, dt_scaled)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_beta_chunk, jobs))
    else:
        parts = [_beta_chunk(j) for j in jobs]
    out = np.concatenate(parts) if parts else np.empty((0, 2))
    out.setflags(write=False)
    return out


def _shifted_overlap(chi: StationaryState, shift: float, kick: float) -> float:
    grid = chi.chi.grid
    a = chi.chi.amplitudes
    moved = shifted_samples(a, grid, shift)
    return abs(np.sum(np.exp(1j * kick * grid.x) * np.conj(moved) * a) * grid.dx)


def semianalytic_fidelity(chi: StationaryState, pair: BetaPair, lam: float, cfg: TrapConfig) -> float:
    """|int dq exp(i m lam omega0 beta_dot q / hbar) chi*(q + lam beta) chi(q)|."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    a0 = cfg.oscillator_length
    shift = lam * pair.beta / a0
    kick = lam * pair.beta_dot / a0
    half = chi.chi.grid.length / 2
    if abs(shift) > half:
        raise CoverageError(f"displacement {shift:.3g} a0 exceeds the grid half-width {half:.3g} a0")
    return min(1.0, float(_shifted_overlap(chi, shift, kick)))


def average_fidelity(cfg: TrapConfig, t_f: float, lam: float, n: int = DEFAULT_REALIZATIONS,
                     master_seed: int = 0, dt_scaled: float = DEFAULT_DT_SCALED,
                     ground: Optional[StationaryState] = None, workers: int = 1) -> FidelityRecord:
    """Monte Carlo mean of the semi-analytic fidelity over ``n`` realizations."""
    if n < 1:
        raise ValueError("need at least one realization")
    if ground is None:
        ground = solve_ground_state(cfg)
    if lam == 0:
        return FidelityRecord(lam, cfg.g1, t_f, n, 1.0, 0.0, int(master_seed))
    betas = beta_ensemble(float(t_f), float(cfg.omega0), int(n), int(master_seed),
                          float(dt_scaled), int(workers))
    fids = np.array([semianalytic_fidelity(ground, BetaPair(b, bd, t_f), lam, cfg)
                     for b, bd in betas])
    err = float(fids.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return FidelityRecord(lam, cfg.g1, t_f, n, float(fids.mean()), err, int(master_seed))


def noisy_propagation_crosscheck(cfg: TrapConfig, q0: Trajectory, zeta: NoiseRealization, lam: float,
                                 dt: Optional[float] = None, ground: Optional[StationaryState] = None):
    """(semi-analytic F, full-GPE F) for one realization on the protocol ``q0``.

    The full propagation moves the trap centre to q0(t) + lam * zeta(t), with
    steps aligned to the noise cells.
    """
    w = cfg.omega0
    t_F = q0.t_f
    if ground is None:
        ground = solve_ground_state(cfg)
    pair = beta_integrals(zeta, w, t_F)
    f_semi = semianalytic_fidelity(ground, pair, lam, cfg)
    dt = zeta.dt_scaled / w if dt is None else dt
    edges = np.arange(1, zeta.samples.size) * zeta.dt_scaled / w

    def shift(t):
        return lam * zeta.value_at(np.asarray(t) * w)

    result = propagate(cfg, q0, ground.chi, dt, snapshot_stride=10 ** 9, trap_shift=shift,
                       ground=ground, extra_breakpoints=edges)
    return f_semi, result.final_fidelity


def noise_sweep(cfg: TrapConfig, lambdas: Sequence[float], g1_over_hbar: Sequence[float],
                t_fs: Sequence[float], n: int = DEFAULT_REALIZATIONS, master_seed: int = 0,
                dt_scaled: float = DEFAULT_DT_SCALED, workers: int = 1):
    """FidelityRecords for every (g1/hbar, t_f, lambda), in that nesting order.

    All combinations share the same noise realizations.
    """
    records = []
    for gh in g1_over_hbar:
        c = cfg.with_(g1_over_hbar=gh)
        ground = solve_ground_state(c)
        for t_f in t_fs:
            for lam in lambdas:
                records.append(average_fidelity(c, t_f, lam, n, master_seed, dt_scaled, ground, workers))
    return records
