import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fishsim._backend import KERNELS
from fishsim.coefficients import (
    Constant,
    DelaySpec,
    Fourier,
    HistorySpec,
    PiecewiseLinear,
    Sinusoid,
    Table,
    coefficient_from_dict,
    common_period,
)

SPECS = [
    Constant(1.7),
    Sinusoid(2.0, 0.5, 1.0),
    Sinusoid(1.0, -0.3, 2.5, 0.7),
    Fourier(3.0, cos=(1.0, 0.2, -0.1), sin=(0.4, 0.05)),
    PiecewiseLinear(2.0, (0.0, 0.5, 1.5), (1.0, 3.0, 2.0)),
    Table((-2.0, -1.0, 0.0), (0.5, 1.5, 1.0)),
]


def test_sinusoid_quarter_period():
    spec = coefficient_from_dict({"kind": "sinusoid", "mean": 2, "amplitude": 0.5,
                                  "period": 1, "phase": 0})
    assert spec(0.25) == pytest.approx(2.5, abs=1e-15)


def test_constant_scalar_and_array():
    c = Constant(3.0)
    assert c(1.0) == 3.0
    np.testing.assert_array_equal(c(np.zeros(4)), np.full(4, 3.0))
    assert c.is_constant and c.period is None


def test_fourier_matches_direct_series():
    f = Fourier(3.0, cos=(1.0, 0.2, -0.1), sin=(0.4, 0.05))
    t = 0.77
    w = 2 * math.pi * t / 3.0
    expected = 1.0 + 0.2 * math.cos(w) - 0.1 * math.cos(2 * w) + 0.4 * math.sin(w) \
        + 0.05 * math.sin(2 * w)
    assert f(t) == pytest.approx(expected, abs=1e-14)


def test_piecewise_is_periodic_and_wraps():
    p = PiecewiseLinear(2.0, (0.0, 0.5, 1.5), (1.0, 3.0, 2.0))
    assert p(0.25) == pytest.approx(2.0)
    # between last knot (1.5 -> 2) and first knot of next period (2.0 -> 1)
    assert p(1.75) == pytest.approx(1.5)
    assert p(-0.25) == pytest.approx(p(1.75))
    assert p(4.25) == pytest.approx(p(0.25))


def test_table_is_clamped():
    t = Table((-2.0, -1.0, 0.0), (0.5, 1.5, 1.0))
    assert t(-5.0) == 0.5
    assert t(-1.5) == pytest.approx(1.0)
    assert t.period is None


def test_scaled():
    for spec in SPECS:
        ts = np.linspace(-3, 3, 41)
        np.testing.assert_allclose(spec.scaled(2.5)(ts), 2.5 * spec(ts), rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
@pytest.mark.parametrize("backend", sorted(KERNELS))
def test_kernel_evaluation_matches_numpy(spec, backend):
    enc = spec.encode()
    for t in np.linspace(-7.3, 7.3, 97):
        assert KERNELS[backend].eval_coefficient(enc, float(t)) == pytest.approx(
            spec(float(t)), rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: type(s).__name__)
def test_dict_round_trip(spec):
    assert coefficient_from_dict(spec.to_dict()) == spec


def test_from_dict_errors():
    assert coefficient_from_dict(2) == Constant(2.0)
    with pytest.raises(ValueError):
        coefficient_from_dict({"kind": "square"})
    with pytest.raises(KeyError, match="amplitude"):
        coefficient_from_dict({"kind": "sinusoid", "mean": 1, "period": 1})
    with pytest.raises(KeyError, match="bogus"):
        coefficient_from_dict({"kind": "constant", "value": 1, "bogus": 2})
    with pytest.raises(ValueError):
        coefficient_from_dict("2")
    with pytest.raises(ValueError):
        Sinusoid(1, 1, 0)
    with pytest.raises(ValueError):
        PiecewiseLinear(1.0, (0.0, 1.0), (1.0, 2.0))
    with pytest.raises(ValueError):
        Table((0.0, 0.0), (1.0, 2.0))


def test_common_period():
    assert common_period([None, None]) is None
    assert common_period([1.0, None]) == 1.0
    assert common_period([1.0, 0.5]) == 1.0
    assert common_period([2.0, 3.0]) == pytest.approx(6.0)
    assert common_period([0.4, 0.6]) == pytest.approx(1.2)
    with pytest.raises(ValueError, match="incommensurate"):
        common_period([1.0, math.pi])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.integers(1, 6), st.integers(1, 6))
def test_common_period_is_a_multiple(base, m, n):
    T = common_period([base * m, base * n])
    for p in (base * m, base * n):
        ratio = T / p
        assert abs(ratio - round(ratio)) < 1e-9


def test_delay_and_history():
    d = DelaySpec.constant(0.5)
    assert d.is_constant and d.theta(2.0) == 1.5
    v = DelaySpec.varying(Sinusoid(1.0, 0.5, 2.0))
    assert not v.is_constant and v.period == 2.0
    h = HistorySpec.constant(3.0)
    assert h.n0 == 3.0 and h(-1.0) == 3.0
    assert HistorySpec.constant(3.0, 1.0).n0 == 1.0
