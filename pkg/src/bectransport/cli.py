"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
failure (non-convergence, frame escape, instability, coverage), 4 any
other internal error. On failure a one-line JSON error record goes to
stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config, with_overrides
from .control import InfeasibleConstraintError
from .design import InvalidProtocolError
from .dynamics import PropagationError, excitation_energy, propagate, write_snapshots
from .groundstate import GridTooSmallError, GroundStateError, default_grid, solve_ground_state
from .io import default_output_dir, write_columns, write_json
from .noise import CoverageError, noise_sweep
from .protocols import ProtocolConfigError, TransportDesign, design_protocol

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INTERNAL = 0, 2, 3, 4
DESIGN_SAMPLES = 2001
SWEEP_COLUMNS = ["lambda", "g1_over_hbar", "t_f", "mean_fidelity", "std_error", "n", "seed"]


def _out_dir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.output_dir) if cfg.output_dir else default_output_dir()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require_protocol(cfg: ExperimentConfig):
    if cfg.protocol is None:
        raise ConfigError("this command needs a [protocol] table")
    return cfg.protocol


def design_table(des: TransportDesign, n: int = DESIGN_SAMPLES) -> dict:
    """Rows (t, q0, q_c, q_c - q0, q_c_dot, jump) with both sides of every jump.

    Rows with ``jump = 1`` come in pairs at a jump time: the value just
    before and just after it (at t = 0 and t_f, the protocol endpoint value
    is the outer one).
    """
    t_f = des.t_f
    base = np.linspace(0.0, t_f, n) if t_f > 0 else np.zeros(1)
    jumps = des.jump_times
    times = np.unique(np.concatenate([base, np.asarray(jumps, dtype=float)]))
    rows_t, rows_q0, rows_qc, rows_v, rows_jump = [], [], [], [], []
    for t in times:
        if t in jumps:
            if t == 0.0:
                sides = (None, "right")
            elif t == t_f:
                sides = ("left", None)
            else:
                sides = ("left", "right")
        else:
            sides = (None,)
        for side in sides:
            q0 = des.q0.position(t, side)
            qc, vc, _ = des.q_c.evaluate(t, side)
            rows_t.append(t)
            rows_q0.append(q0)
            rows_qc.append(qc)
            rows_v.append(vc)
            rows_jump.append(1.0 if len(sides) == 2 else 0.0)
    q0 = np.array(rows_q0)
    qc = np.array(rows_qc)
    return {"t": np.array(rows_t), "q0": q0, "q_c": qc, "q_c_minus_q0": qc - q0,
            "q_c_dot": np.array(rows_v), "jump": np.array(rows_jump)}


def cmd_design(cfg: ExperimentConfig) -> Path:
    spec = _require_protocol(cfg)
    des = design_protocol(spec, cfg.trap)
    table = design_table(des)
    meta = {"protocol": spec.as_dict(), "t_f": des.t_f, "jump_times": list(des.jump_times),
            "info": des.info, "config_digest": cfg.digest(), "version": __version__}
    path = _out_dir(cfg) / f"design_{spec.kind}.txt"
    write_columns(path, list(table), list(table.values()), meta)
    return path


def cmd_verify(cfg: ExperimentConfig) -> dict:
    start = time.perf_counter()
    spec = _require_protocol(cfg)
    trap = cfg.trap
    num = cfg.numerics
    des = design_protocol(spec, trap)
    grid = default_grid(trap, num.grid_points, num.grid_extent)
    ground = solve_ground_state(trap, grid)
    dt = num.dt if num.dt is not None else 1e-3 / trap.omega0
    if not dt * trap.omega0 < 0.05:
        raise ConfigError(f"dt * omega0 = {dt * trap.omega0:.3g}; the propagator needs < 0.05")
    if num.frame == "lab":
        from .dynamics import lab_grid, to_grid
        psi0 = to_grid(ground.chi, lab_grid(trap, des.q_c, grid))
    else:
        psi0 = ground.chi

    def run(step):
        return propagate(trap, des.q0, psi0, step, num.snapshot_stride, force=des.force,
                         ground=ground, frame=num.frame)

    result = run(dt)
    t_f = des.t_f
    target = des.q0.position(t_f)
    e_exc = excitation_energy(result.final_state, trap, target, ground)
    hw = trap.hbar * trap.omega0
    summary = {
        "command": "verify",
        "config": cfg.echo(),
        "config_digest": cfg.digest(),
        "version": __version__,
        "protocol": spec.kind,
        "t_f": t_f,
        "dt": dt,
        "n_steps": result.n_steps,
        "final_fidelity": result.final_fidelity,
        "excitation_energy": e_exc,
        "excitation_energy_hbar_omega0": e_exc / hw,
        "max_displacement": des.max_displacement(),
        "final_com": result.final_com,
        "target_position": target,
        "norm_drift": result.norm_drift,
        "mu_hbar_omega0": ground.mu,
        "info": des.info,
    }
    if num.check_convergence:
        half = run(dt / 2)
        summary["final_fidelity_half_dt"] = half.final_fidelity
        summary["dt_convergence_change"] = abs(half.final_fidelity - result.final_fidelity)
    out = _out_dir(cfg)
    com_t, com_q = result.com_track
    qc_t = des.q_c.position(np.clip(com_t, 0, t_f))
    write_columns(out / f"com_{spec.kind}.txt", ["t", "com", "q_c"], [com_t, com_q, qc_t],
                  {"config_digest": cfg.digest()})
    if num.write_snapshots:
        write_snapshots(out / f"snapshots_{spec.kind}.txt", result, trap)
    summary["wall_time"] = time.perf_counter() - start
    write_json(out / f"summary_{spec.kind}.json", summary)
    return summary


def cmd_noise_sweep(cfg: ExperimentConfig) -> Path:
    nz = cfg.noise
    if nz is None:
        raise ConfigError("noise-sweep needs a [noise] table")
    records = noise_sweep(cfg.trap, nz.lambdas, nz.g1_over_hbar, nz.t_f, nz.n, nz.master_seed,
                          nz.dt_scaled, nz.workers)
    hbar = cfg.trap.hbar
    cols = [[r.lam for r in records], [r.g1_over_hbar(hbar) for r in records],
            [r.t_f for r in records], [r.mean_fidelity for r in records],
            [r.std_error for r in records], [r.n_realizations for r in records],
            [r.seed for r in records]]
    meta = {"config_digest": cfg.digest(), "version": __version__, "dt_scaled": nz.dt_scaled,
            "oscillator_length": cfg.trap.oscillator_length, "lambda_units": "m"}
    path = _out_dir(cfg) / "noise_sweep.txt"
    write_columns(path, SWEEP_COLUMNS, cols, meta)
    return path


def selftest() -> list:
    """Fast sanity checks: (name, passed, detail) tuples."""
    from .control import solve_displacement_bounded, solve_range_bounded, verify_boundary
    from .core import TrapConfig
    from .design import (classical_response, direct_final_excursion, direct_trap_trajectory,
                         DirectProtocol, polynomial_interval_threshold)
    from .noise import beta_ensemble

    cfg = TrapConfig.from_g1_over_hbar(0.0)
    w = cfg.omega0
    checks = []

    gs = solve_ground_state(cfg)
    checks.append(("harmonic ground state mu = 1/2", abs(gs.mu - 0.5) < 1e-8, f"mu = {gs.mu:.12f}"))

    p = DirectProtocol(1.6e-3, 0.02)
    q_c = classical_response(direct_trap_trajectory(p), w)
    dq, _ = direct_final_excursion(p.d, p.t_f, w)
    err = abs((q_c.q[-1] - p.d) - dq)
    checks.append(("direct excursion RK4 vs closed form", err < 1e-8 * p.d, f"diff = {err:.3e} m"))

    sol = solve_displacement_bounded(1.6e-3, 0.162e-3, w)
    res = verify_boundary(sol)
    checks.append(("bang-bang boundary residuals", max(res.max_position, res.max_velocity) < 1e-8,
                   f"{res}"))
    rng = solve_range_bounded(1.6e-3, 0.0, 1.6e-3, w)
    ok = abs(w * rng.t_1 - math.pi / 3) < 1e-10 and abs(w * rng.t_f - 2 * math.pi / 3) < 1e-10
    checks.append(("range-bounded switch times", ok, f"w t1 = {w * rng.t_1:.12f}"))

    thr = w * polynomial_interval_threshold(1.6e-3, w, 1.0 / w, 5.0 / w)
    checks.append(("polynomial interval threshold", abs(thr / 2.505 - 1) < 5e-3,
                   f"omega0 t_f = {thr:.6f}"))

    betas = beta_ensemble(2 * math.pi / w, w, 20000, 0, 0.05)
    var = float(np.var(betas[:, 0]))
    checks.append(("beta variance at one period", abs(var / math.pi - 1) < 0.05, f"{var:.4f}"))
    return checks


def _emit_error(kind: str, exc: BaseException, code: int):
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bectransport", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("design", "write trap and condensate paths"),
                        ("verify", "propagate the GPE along a protocol and summarise"),
                        ("noise-sweep", "Monte Carlo fidelity under trap-position noise")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", help="output directory (default: $BECTRANSPORT_OUT or ./bectransport-out)")
        p.add_argument("--seed", type=int, help="master seed for noise sweeps")
        p.add_argument("--dt", type=float, help="propagation time step in seconds")
        p.add_argument("--grid-points", type=int, help="grid size (power of two)")
    sub.add_parser("selftest", help="run quick internal consistency checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        if args.command == "selftest":
            checks = selftest()
            for name, ok, detail in checks:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
            return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_NUMERIC
        cfg = with_overrides(load_config(args.config), out=args.out, seed=args.seed, dt=args.dt,
                             grid_points=args.grid_points)
        if args.command == "design":
            print(cmd_design(cfg))
        elif args.command == "verify":
            summary = cmd_verify(cfg)
            print(json.dumps({k: summary[k] for k in ("protocol", "final_fidelity",
                                                      "excitation_energy", "max_displacement",
                                                      "norm_drift", "wall_time")}))
        else:
            print(cmd_noise_sweep(cfg))
    except (ConfigError, ProtocolConfigError, InvalidProtocolError, InfeasibleConstraintError) as exc:
        return _emit_error("config", exc, EXIT_CONFIG)
    except (PropagationError, GroundStateError, GridTooSmallError, CoverageError, ValueError) as exc:
        return _emit_error("numeric", exc, EXIT_NUMERIC)
    except Exception as exc:  # noqa: BLE001 - reported as a structured record
        return _emit_error("internal", exc, EXIT_INTERNAL)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
