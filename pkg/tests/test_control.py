import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bectransport.control import (InfeasibleConstraintError, solve_displacement_bounded,
                                  solve_range_bounded, verify_boundary)
from bectransport.design import classical_response, polynomial_inverse

from conftest import D, OMEGA0


def test_displacement_bounded_paper_parameters():
    sol = solve_displacement_bounded(D, 0.162e-3, OMEGA0)
    assert sol.t_f == pytest.approx(0.020, rel=5e-3)
    assert sol.t_1 == sol.t_f / 2
    assert sol.t_f == pytest.approx(2 * math.sqrt(D / 0.162e-3) / OMEGA0, rel=1e-12)
    res = verify_boundary(sol)
    assert res.max_position < 1e-8 * D
    assert res.max_velocity < 1e-8 * D * OMEGA0


def test_displacement_bounded_unit_ratio():
    sol = solve_displacement_bounded(D, D, OMEGA0)
    assert sol.t_f == pytest.approx(2 / OMEGA0, rel=1e-12)


def test_displacement_bounded_trap_path():
    delta = 0.162e-3
    sol = solve_displacement_bounded(D, delta, OMEGA0)
    t_1, t_f = sol.t_1, sol.t_f
    t = np.linspace(0, t_f, 1001)[1:-1]
    first = t < t_1
    expected = np.where(first, (1 + OMEGA0 ** 2 * t ** 2 / 2) * delta,
                        -(OMEGA0 ** 2 * (t - t_f) ** 2 / 2 + 1) * delta + D)
    np.testing.assert_allclose(sol.q0.position(t), expected, rtol=1e-13)
    assert sol.q0.position(0.0) == 0.0 and sol.q0.position(t_f) == D
    u = sol.control(np.linspace(0, t_f, 1001))
    assert np.max(np.abs(u)) <= delta
    assert u[0] == 0 and u[-1] == 0


def test_control_reconstructed_from_integration():
    delta = 0.162e-3
    sol = solve_displacement_bounded(D, delta, OMEGA0)
    x = classical_response(sol.q0, OMEGA0)
    inner = (x.t > 0) & (x.t < sol.t_f)
    u = x.q[inner] - sol.q0.position(x.t[inner], "right")
    # at the switch itself the right-hand branch applies
    expected = np.where(x.t[inner] < sol.t_1, -delta, delta)
    np.testing.assert_allclose(u, expected, atol=1e-8 * delta)


def test_invalid_delta():
    for delta in (0.0, -1e-4):
        with pytest.raises(InfeasibleConstraintError) as info:
            solve_displacement_bounded(D, delta, OMEGA0)
        assert info.value.bound == "delta"


def test_zero_distance():
    sol = solve_displacement_bounded(0.0, 0.162e-3, OMEGA0)
    assert sol.t_f == 0.0
    res = verify_boundary(sol)
    assert (res.x1_start, res.x2_start, res.x1_end, res.x2_end) == (0.0, 0.0, 0.0, 0.0)


@given(d=st.floats(1e-5, 1e-2), ratio=st.floats(1e-3, 10.0), k=st.floats(1e-3, 1e3))
def test_displacement_bounded_scaling(d, ratio, k):
    delta = d * ratio
    a = solve_displacement_bounded(d, delta, OMEGA0).t_f
    b = solve_displacement_bounded(k * d, k * delta, OMEGA0).t_f
    assert b == pytest.approx(a, rel=1e-12)


def _polynomial_min_time(d, delta):
    """Shortest quintic protocol with max |q_c - q0| <= delta, found by bisection."""
    def peak(t_f):
        q_c, q0 = polynomial_inverse(d, t_f, OMEGA0, n_samples=2)
        t = np.linspace(0, t_f, 4001)
        return np.max(np.abs(q_c.position(t) - q0.position(t)))

    lo, hi = 1e-6, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if peak(mid) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def test_bang_bang_is_faster_than_polynomial():
    rng = np.random.default_rng(3)
    for d, ratio in zip(rng.uniform(1e-4, 5e-3, 20), rng.uniform(0.02, 1.0, 20)):
        delta = d * ratio
        bb = solve_displacement_bounded(d, delta, OMEGA0).t_f
        assert _polynomial_min_time(d, delta) >= bb


def test_range_bounded_full_range():
    sol = solve_range_bounded(D, 0.0, D, OMEGA0)
    assert OMEGA0 * sol.t_1 == pytest.approx(math.pi / 3, abs=1e-10)
    assert OMEGA0 * sol.t_f == pytest.approx(2 * math.pi / 3, abs=1e-10)
    assert sol.t_1 == pytest.approx(3.333e-3, rel=1e-3)
    assert sol.t_f == pytest.approx(6.667e-3, rel=1e-3)
    res = verify_boundary(sol)
    assert res.max_position < 1e-8 * D
    assert res.max_velocity < 1e-8 * D * OMEGA0
    # piecewise closed form: d (1 - cos w t), then d cos(w (t - t_1) - pi / 3)
    t = np.linspace(0, sol.t_f, 2001)
    expected = np.where(t < sol.t_1, D * (1 - np.cos(OMEGA0 * t)),
                        D * np.cos(OMEGA0 * (t - sol.t_1) - math.pi / 3))
    np.testing.assert_allclose(sol.q_c.position(t), expected, atol=1e-12 * D)
    x = classical_response(sol.q0, OMEGA0)
    np.testing.assert_allclose(x.q, sol.q_c.position(x.t), atol=1e-8 * D)


def test_range_bounded_degenerate_range():
    with pytest.raises(InfeasibleConstraintError):
        solve_range_bounded(D, D / 2, D / 2, OMEGA0)


def test_range_bounded_infeasible_names_bound():
    with pytest.raises(InfeasibleConstraintError) as info:
        solve_range_bounded(D, 0.0, 0.3 * D, OMEGA0)
    assert info.value.bound in ("q_hi", "q_lo")
    with pytest.raises(InfeasibleConstraintError) as info:
        solve_range_bounded(D, -D, 0.0, OMEGA0)
    assert info.value.bound == "q_hi"
    with pytest.raises(InfeasibleConstraintError) as info:
        solve_range_bounded(D, 1.2 * D, 2 * D, OMEGA0)
    assert info.value.bound == "q_lo"


@settings(max_examples=40, deadline=None)
@given(lo=st.floats(-1.0, 0.9), hi=st.floats(0.5, 3.0))
def test_range_bounded_boundary_property(lo, hi):
    try:
        sol = solve_range_bounded(D, lo * D, hi * D, OMEGA0)
    except InfeasibleConstraintError:
        assume(False)
    res = verify_boundary(sol)
    assert res.max_position < 1e-8 * D
    assert res.max_velocity < 1e-8 * D * OMEGA0


def test_range_bounded_half_distance_high_bound():
    # q_hi = d/2: the first arc is exactly half a period, where plain arccos is ill-conditioned
    sol = solve_range_bounded(D, 0.3 * D, 0.5 * D, OMEGA0)
    assert OMEGA0 * sol.t_1 == pytest.approx(math.pi, abs=1e-14)
    res = verify_boundary(sol)
    assert res.max_velocity < 1e-8 * D * OMEGA0


@given(lo=st.floats(-1.0, 0.9), hi=st.floats(0.6, 3.0))
def test_range_switch_times_match_arccos(lo, hi):
    from bectransport.control import range_switch_arguments
    assume(lo < hi)
    a, b = range_switch_arguments(D, lo * D, hi * D)
    assume(-0.999 < a < 0.999 and -0.999 < b < 0.999)
    sol = solve_range_bounded(D, lo * D, hi * D, OMEGA0)
    assert OMEGA0 * sol.t_1 == pytest.approx(math.acos(a), abs=1e-12)
    assert OMEGA0 * (sol.t_f - sol.t_1) == pytest.approx(math.acos(b), abs=1e-12)
