import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from fishsim._backend import KERNELS
from fishsim.coefficients import Constant, DelaySpec, HistorySpec, Sinusoid, Table
from fishsim.dde_engine import (
    IntegrationError,
    StepControl,
    breakpoints,
    default_step,
    dense_eval,
    integrate,
    integrate_linear,
)
from fishsim.fishery_model import ModelParams


def test_equilibrium_history_is_invariant():
    p = ModelParams.constant(2, 1, 1, 1, 1.0)
    traj = integrate(p, HistorySpec.constant(1.0), 50.0)
    assert np.max(np.abs(traj.values - 1.0)) < 1e-9


def test_no_delay_matches_ode_oracle():
    # N' = N (2/(1+N) - 1) = N (1-N)/(1+N)
    p = ModelParams.constant(2, 1, 1, 1, 0.0)
    traj = integrate(p, HistorySpec.constant(0.5), 15.0, StepControl(0.01))
    sol = solve_ivp(lambda t, y: y * (1 - y) / (1 + y), (0, 15), [0.5],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    for t in (1.0, 5.0, 10.0, 15.0):
        assert traj(t) == pytest.approx(sol.sol(t)[0], abs=1e-9)
    assert abs(traj(15.0) - 1.0) < 1e-3


def test_decay_when_b_exceeds_a():
    p = ModelParams.constant(1, 2, 1, 1, 0.7)
    traj = integrate(p, HistorySpec(Sinusoid(1.0, 0.5, 0.3), 1.0), 20.0)
    assert np.all(np.diff(traj.values) <= 0)


def test_linear_zero_history_stays_zero():
    traj = integrate_linear(Constant(1.0), DelaySpec.constant(1.0), HistorySpec.constant(0.0), 10.0)
    assert np.all(traj.values == 0.0)


def test_linear_first_interval_closed_form():
    traj = integrate_linear(Constant(1.0), DelaySpec.constant(1.0), HistorySpec.constant(1.0), 2.0)
    assert abs(traj(1.0)) < 5e-10
    # x' = -(2 - t) on [1, 2], so x = -(t-1) + (t-1)^2/2
    assert traj(1.5) == pytest.approx(-0.375, abs=1e-12)
    assert traj(2.0) == pytest.approx(-0.5, abs=1e-12)


def test_linear_decays_under_three_halves():
    traj = integrate_linear(Constant(1.0), DelaySpec.constant(1.0), HistorySpec.constant(1.0), 60.0)
    fine = integrate_linear(Constant(1.0), DelaySpec.constant(1.0), HistorySpec.constant(1.0), 60.0,
                            StepControl(0.001))
    assert abs(traj(60.0)) < 1e-3
    assert traj(60.0) == pytest.approx(fine(60.0), abs=1e-10)


def test_dense_output_mesh_history_and_range():
    h = HistorySpec(Table((-1.0, 0.0), (3.0, 1.0)), 1.0)
    traj = integrate(ModelParams.constant(2, 1, 1, 1, 1.0), h, 5.0)
    k = len(traj) // 2
    assert traj(traj.t[k]) == traj.values[k]
    assert traj(-0.5) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        traj(5.0 + 1e-9)
    np.testing.assert_array_equal(dense_eval(traj, traj.t), traj.values)


def test_dense_output_fourth_order_midpoints():
    # x' = -x(t) with zero lag is x = exp(-t)
    errs = []
    for h in (0.1, 0.05):
        traj = integrate_linear(Constant(1.0), DelaySpec.constant(0.0), HistorySpec.constant(1.0),
                                4.0, StepControl(h))
        mids = 0.5 * (traj.t[:-1] + traj.t[1:])
        errs.append(np.max(np.abs(traj(mids) - np.exp(-mids))))
    assert errs[0] < 1e-6
    assert errs[0] / errs[1] > 12


def test_overflow_reports_time():
    p = ModelParams.constant(1000, 1, 2, 1, 2.0)
    with pytest.raises(IntegrationError, match="blow-up/extinction") as info:
        integrate(p, HistorySpec.constant(1.0), 10.0)
    assert 1.0 < info.value.time < 2.0


def test_invalid_inputs_are_rejected():
    with pytest.raises(ValueError, match="b\\(t\\) >= b > 0"):
        integrate(ModelParams.constant(2, 0, 1, 1, 1.0), HistorySpec.constant(1.0), 1.0)
    with pytest.raises(ValueError):
        integrate(ModelParams.constant(2, 1, 1, 1, 1.0), HistorySpec.constant(1.0), 0.0)
    with pytest.raises(ValueError):
        StepControl(step=-1.0)


def test_deterministic():
    p = ModelParams(1.5, Sinusoid(2, 0.5, 1), 1.0, 2.0, DelaySpec.varying(Sinusoid(0.6, 0.3, 1)))
    a = integrate(p, HistorySpec.constant(0.7), 20.0)
    b = integrate(p, HistorySpec.constant(0.7), 20.0)
    np.testing.assert_array_equal(a.t, b.t)
    np.testing.assert_array_equal(a.y, b.y)


@pytest.mark.skipif("cython" not in KERNELS, reason="compiled kernel not built")
def test_kernel_parity():
    p = ModelParams(1.5, Sinusoid(2, 0.5, 1), 1.0, 2.0, DelaySpec.varying(Sinusoid(0.5, 0.5, 1)))
    h = HistorySpec(Sinusoid(1.0, 0.2, 0.7), 1.0)
    a = integrate(p, h, 10.0, kernel=KERNELS["python"])
    b = integrate(p, h, 10.0, kernel=KERNELS["cython"])
    np.testing.assert_array_equal(a.t, b.t)
    np.testing.assert_allclose(a.y, b.y, rtol=0, atol=1e-13)


def test_breakpoints_constant_and_varying():
    assert breakpoints(DelaySpec.constant(0.4), 10.0, 3, 0.01) == [0.0, 0.4, 2 * 0.4, 3 * 0.4]
    assert breakpoints(DelaySpec.constant(4.0), 10.0, 3, 0.01) == [0.0, 4.0, 8.0]
    assert breakpoints(DelaySpec.constant(0.0), 10.0, 3, 0.01) == [0.0]
    d = DelaySpec.varying(Sinusoid(1.0, 0.5, 2.0))
    pts = breakpoints(d, 20.0, 3, 0.01)
    assert len(pts) == 4
    for prev, nxt in zip(pts, pts[1:]):
        assert abs(d.theta(nxt) - prev) < 1e-11


def test_breakpoints_in_mesh():
    d = DelaySpec.varying(Sinusoid(1.0, 0.5, 2.0))
    p = ModelParams(1.0, 2.0, 1.0, 1.0, d)
    traj = integrate(p, HistorySpec.constant(0.5), 5.0)
    for bp in breakpoints(d, 5.0, 3, default_step(d, 2.0)):
        assert np.min(np.abs(traj.t - bp)) < 1e-12


def test_vanishing_lag_converges_with_step():
    # lag touches zero once per period
    d = DelaySpec.varying(Sinusoid(0.25, 0.25, 1.0))
    p = ModelParams(1.0, 2.0, 1.0, 1.0, d)
    h = HistorySpec.constant(0.5)
    coarse = integrate(p, h, 5.0, StepControl(0.01))
    fine = integrate(p, h, 5.0, StepControl(0.001))
    assert coarse(5.0) == pytest.approx(fine(5.0), abs=1e-7)


def test_default_step():
    assert default_step(DelaySpec.constant(1.0), None) == pytest.approx(0.025)
    assert default_step(DelaySpec.constant(0.0), None) == 0.05
    assert default_step(DelaySpec.constant(1e-6), None) == 1e-4
    assert default_step(DelaySpec.constant(4.0), 0.4) == pytest.approx(0.01)


def test_window_and_sample():
    traj = integrate(ModelParams.constant(2, 1, 2, 1, 0.5), HistorySpec.constant(0.5), 10.0)
    w = traj.window(5.0, 6.0)
    assert w.start == 5.0 and w.end == 6.0
    assert w(4.5) == pytest.approx(traj(4.5))
    ts, ns = traj.sample(11, 0.0, 10.0)
    assert len(ts) == 11 and ns[0] == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.1, 5), b=st.floats(0.1, 5), K=st.floats(0.1, 5),
       gamma=st.floats(0.2, 6), tau=st.floats(0.0, 2.0), n0=st.floats(0.01, 10))
def test_positive_and_finite(a, b, K, gamma, tau, n0):
    p = ModelParams.constant(a, b, K, gamma, tau)
    traj = integrate(p, HistorySpec.constant(n0), 20.0)
    assert np.all(traj.values > 0) and np.all(np.isfinite(traj.values))


def test_fallback_backend_selected_by_environment():
    import os
    import subprocess
    import sys
    env = dict(os.environ, FISHSIM_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import fishsim; print(fishsim.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_python_kernel_end_to_end():
    p = ModelParams.constant(2, 1, 1, 1, 1.0)
    traj = integrate(p, HistorySpec.constant(1.0), 10.0, kernel=KERNELS["python"])
    assert np.max(np.abs(traj.values - 1.0)) < 1e-9
