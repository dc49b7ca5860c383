import math

import numpy as np
import pytest

from bectransport.core import Grid1D, GridMismatchError, Trajectory, WaveFunction, normalize
from bectransport.design import classical_response
from bectransport.dynamics import (FrameEscapeError, InstabilityError, TransportMode,
                                   excitation_energy, fidelity, gp_energy, lab_grid, place,
                                   propagate, to_grid, transport_mode_state, write_snapshots)
from bectransport.io import read_columns
from bectransport.protocols import ProtocolSpec, design_protocol

from conftest import D

DT = 1e-3  # in units of 1/omega0


def still(t_f):
    return Trajectory.from_function(lambda t, side="right": (0 * t, 0 * t, 0 * t), t_f)


@pytest.fixture(scope="module")
def poly(cfg):
    return design_protocol(ProtocolSpec("polynomial", D, t_f=0.02), cfg)


@pytest.fixture(scope="module")
def poly_run(cfg, ground, poly):
    return propagate(cfg, poly.q0, ground.chi, DT / cfg.omega0, snapshot_stride=128, ground=ground)


def gaussian(grid, center):
    return normalize(WaveFunction(grid, np.exp(-(grid.x - center) ** 2 / 2)))


# -- fidelity and energies ---------------------------------------------------

def test_fidelity_basics(ground):
    psi = ground.chi
    assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(psi, psi.replace(phase=1.234)) == pytest.approx(1.0, abs=1e-12)
    rotated = psi.replace(amplitudes=np.exp(0.7j) * psi.amplitudes)
    assert fidelity(psi, rotated) == pytest.approx(1.0, abs=1e-12)
    other = psi.replace(offset=1.3, momentum=-0.4)
    assert fidelity(psi, other) == pytest.approx(fidelity(other, psi), abs=1e-12)
    assert 0.0 <= fidelity(psi, other) <= 1.0


def test_fidelity_displaced_gaussians():
    grid = Grid1D.symmetric(20.0, 512)
    a = gaussian(grid, 0.0)
    for delta in (0.25, 1.0, 3.0):
        assert fidelity(a, gaussian(grid, delta)) == pytest.approx(math.exp(-delta ** 2 / 4), abs=1e-8)


def test_fidelity_grid_mismatch():
    with pytest.raises(GridMismatchError):
        fidelity(gaussian(Grid1D.symmetric(20.0, 256), 0), gaussian(Grid1D.symmetric(25.0, 256), 0))


def test_excitation_energy_ground_and_displaced(ideal_cfg, ideal_ground, cfg, ground):
    hw = cfg.hbar * cfg.omega0
    assert abs(excitation_energy(ground.chi, cfg, 0.0, ground)) < 1e-8 * hw
    a0 = ideal_cfg.oscillator_length
    for dq in (0.5 * a0, 3 * a0):
        psi = place(ideal_ground, dq / a0)
        expected = 0.5 * ideal_cfg.mass * ideal_cfg.omega0 ** 2 * dq ** 2
        assert excitation_energy(psi, ideal_cfg, 0.0, ideal_ground) == pytest.approx(expected, rel=1e-6)


# -- transport mode ----------------------------------------------------------

def test_transport_mode_matches_ground_at_ends(cfg, ground, poly):
    mode = TransportMode(ground, poly.q_c, poly.q0, cfg)
    assert fidelity(transport_mode_state(mode, 0.0), ground.chi) == pytest.approx(1.0, abs=1e-10)
    end = transport_mode_state(mode, poly.t_f)
    assert fidelity(end, place(ground, D / cfg.oscillator_length)) == pytest.approx(1.0, abs=1e-10)
    # |psi| is the ground profile carried along q_c
    mid = transport_mode_state(mode, poly.t_f / 3)
    assert mid.offset == pytest.approx(poly.q_c.position(poly.t_f / 3) / cfg.oscillator_length)
    np.testing.assert_array_equal(np.abs(mid.amplitudes), np.abs(ground.chi.amplitudes))


def test_transport_mode_action_is_additive(cfg, ground, poly):
    mode = TransportMode(ground, poly.q_c, poly.q0, cfg)
    # d/dt action = 1/2 (v^2 - q_c^2) + 1/2 q0^2 in oscillator units
    t, h = 0.007, 1e-6
    a0, w = cfg.oscillator_length, cfg.omega0
    rate = (mode.action(t + h) - mode.action(t - h)) / (2 * h * w)
    q, v, _ = poly.q_c.evaluate(t)
    q, v = q / a0, v / (a0 * w)
    expected = 0.5 * (v * v - q * q) + 0.5 * (poly.q0.position(t) / a0) ** 2
    assert rate == pytest.approx(expected, rel=1e-6)


# -- propagation -------------------------------------------------------------

def test_stationary_state_stays_put(cfg, ground):
    res = propagate(cfg, still(0.01), ground.chi, DT / cfg.omega0, ground=ground)
    assert res.final_fidelity == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(res.com_track[1])) < 1e-12 * cfg.oscillator_length
    assert res.norm_drift < 1e-9


def test_polynomial_transport(cfg, poly, poly_run):
    assert poly_run.final_fidelity >= 0.999
    assert poly_run.norm_drift < 1e-9
    assert 0.0 <= poly_run.final_fidelity <= 1.0
    assert poly_run.final_com == pytest.approx(D, abs=5e-3 * cfg.oscillator_length)


def test_polynomial_shape_invariance(cfg, ground, poly, poly_run):
    mode = TransportMode(ground, poly.q_c, poly.q0, cfg)
    worst = min(fidelity(transport_mode_state(mode, s.t), s.psi) for s in poly_run.snapshots)
    assert worst >= 0.999


def test_ehrenfest_track(cfg, poly, poly_run):
    t, com = poly_run.com_track
    assert np.max(np.abs(com - poly.q_c.position(t))) < 5e-3 * cfg.oscillator_length


def test_time_step_convergence(cfg, ground, poly, poly_run):
    half = propagate(cfg, poly.q0, ground.chi, DT / 2 / cfg.omega0, snapshot_stride=10 ** 6,
                     ground=ground)
    assert abs(half.final_fidelity - poly_run.final_fidelity) < 1e-6


def test_energy_conserved_in_static_trap(cfg, ground):
    w = cfg.omega0
    psi0 = place(ground, 2.0)  # start off-centre: the dipole mode oscillates
    steps_per_period = int(round(2 * math.pi / DT))
    periods = 3
    # choose dt so whole periods land exactly on snapshots
    dt = 2 * math.pi / steps_per_period / w
    res = propagate(cfg, still(periods * 2 * math.pi / w), psi0, dt,
                    snapshot_stride=steps_per_period, ground=ground)
    energies = np.array([gp_energy(s.psi, cfg, 0.0) for s in res.snapshots])
    assert len(energies) == periods + 1
    # secular drift, period to period; the splitting's O(dt^2) wobble inside a period returns
    assert np.max(np.abs(np.diff(energies))) < 1e-8


def test_direct_protocol_excitation(cfg, ground):
    des = design_protocol(ProtocolSpec("direct", D, t_f=0.02), cfg)
    res = propagate(cfg, des.q0, ground.chi, DT / cfg.omega0, snapshot_stride=10 ** 6, ground=ground)
    assert res.final_fidelity < 0.1
    dq = des.info["final_excursion"]
    expected = 0.5 * cfg.mass * cfg.omega0 ** 2 * dq ** 2
    e = excitation_energy(res.final_state, cfg, D, ground)
    assert e == pytest.approx(expected, rel=1e-3)
    assert e >= -1e-9 * cfg.hbar * cfg.omega0


@pytest.mark.parametrize("kind,params", [
    ("bangbang_displacement", {"delta": 0.162e-3}),
    ("bangbang_range", {"q_lo": 0.0, "q_hi": D}),
])
def test_bang_bang_shape_invariance(cfg, ground, kind, params):
    des = design_protocol(ProtocolSpec(kind, D, **params), cfg)
    res = propagate(cfg, des.q0, ground.chi, DT / cfg.omega0, snapshot_stride=64, ground=ground)
    mode = TransportMode(ground, des.q_c, des.q0, cfg)
    worst = min(fidelity(transport_mode_state(mode, s.t), s.psi) for s in res.snapshots)
    assert worst >= 0.999
    assert res.final_fidelity >= 0.999


def test_lab_frame_agrees_on_short_transport(cfg, ground):
    a0 = cfg.oscillator_length
    spec = ProtocolSpec("polynomial", 40 * a0, t_f=0.01)
    des = design_protocol(spec, cfg)
    dt = DT / cfg.omega0
    co = propagate(cfg, des.q0, ground.chi, dt, snapshot_stride=10 ** 6, ground=ground)
    grid = lab_grid(cfg, des.q_c, ground.chi.grid)
    lab = propagate(cfg, des.q0, to_grid(ground.chi, grid), dt, snapshot_stride=10 ** 6,
                    ground=ground, frame="lab")
    assert lab.final_fidelity == pytest.approx(co.final_fidelity, abs=1e-9)
    np.testing.assert_allclose(lab.com_track[1], co.com_track[1], atol=1e-9 * a0)


def test_compensating_force_in_anharmonic_trap(cfg, ground):
    # quartic correction: the compensating force keeps the cloud at the trap centre
    quartic = lambda y: 1e-3 * y ** 4  # noqa: E731
    from bectransport.groundstate import solve_ground_state
    gs = solve_ground_state(cfg, ground.chi.grid, extra_potential=quartic)
    des = design_protocol(ProtocolSpec("compensating", D, t_f=0.02), cfg)
    res = propagate(cfg, des.q0, gs.chi, DT / cfg.omega0, snapshot_stride=10 ** 6, force=des.force,
                    extra_potential=quartic, ground=gs)
    assert res.final_fidelity >= 0.999
    t, com = res.com_track
    assert np.max(np.abs(com - des.q0.position(t))) < 5e-3 * cfg.oscillator_length


def test_propagate_argument_checks(cfg, ground):
    with pytest.raises(ValueError):
        propagate(cfg, still(0.01), ground.chi, 0.1 / cfg.omega0)
    with pytest.raises(ValueError):
        propagate(cfg, still(0.01), ground.chi.replace(amplitudes=2 * ground.chi.amplitudes),
                  DT / cfg.omega0)
    with pytest.raises(ValueError):
        propagate(cfg, still(0.01), ground.chi, DT / cfg.omega0, frame="rotating")


def test_frame_escape(cfg, ground):
    # a lab grid sized for a 40 a0 transport cannot hold a 250 a0 one at similar speed
    a0 = cfg.oscillator_length
    short = design_protocol(ProtocolSpec("polynomial", 40 * a0, t_f=0.01), cfg)
    grid = lab_grid(cfg, short.q_c, ground.chi.grid)
    far = design_protocol(ProtocolSpec("polynomial", 250 * a0, t_f=0.06), cfg)
    with pytest.raises(FrameEscapeError):
        propagate(cfg, far.q0, to_grid(ground.chi, grid), DT / cfg.omega0, frame="lab", ground=ground)


def test_instability_reports_step(cfg, ground):
    def poison(y):
        return np.full_like(y, np.nan)

    with pytest.raises(InstabilityError) as info:
        propagate(cfg, still(0.001), ground.chi, DT / cfg.omega0, extra_potential=poison)
    assert info.value.step == 1


def test_snapshot_file(tmp_path, cfg, ground):
    res = propagate(cfg, still(0.001), ground.chi, DT / cfg.omega0, snapshot_stride=100, ground=ground)
    path = tmp_path / "snap.txt"
    write_snapshots(path, res, cfg)
    cols, meta = read_columns(path)
    assert meta["frame"] == "comoving"
    n = ground.chi.grid.n_points
    assert cols["t"].size == n * len(res.snapshots)
    dens = (cols["re_psi"][:n] ** 2 + cols["im_psi"][:n] ** 2)
    dq = cols["q"][1] - cols["q"][0]
    assert np.sum(dens) * dq == pytest.approx(1.0, rel=1e-10)
