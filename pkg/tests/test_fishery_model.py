import math

import pytest

from fishsim.coefficients import Constant, DelaySpec, HistorySpec, Sinusoid
from fishsim.fishery_model import (
    DomainError,
    ModelParams,
    NoEquilibriumError,
    ProportionalParams,
    as_proportional,
    equilibrium,
    hill_fecundity,
    linearized_rhs,
    rhs,
    rhs_log,
    validate,
)
from fishsim.report import Verdict


@pytest.mark.parametrize("a,n,k,g,expected", [
    (2, 0, 1, 1, 2.0),
    (2, 1, 1, 7, 1.0),
    (3, 2, 1, 2, 0.6),
])
def test_hill_fecundity(a, n, k, g, expected):
    assert hill_fecundity(a, n, k, g) == pytest.approx(expected, rel=1e-15)


def test_hill_fecundity_domain():
    with pytest.raises(DomainError):
        hill_fecundity(2, 1, 0, 1)
    with pytest.raises(DomainError):
        hill_fecundity(2, 1, 1, 0)
    with pytest.raises(DomainError):
        hill_fecundity(2, -1, 1, 1)


def test_rhs_examples():
    p = ModelParams.constant(2, 1, 1, 1, 0)
    assert rhs(0.0, 1.0, 1.0, p) == 0.0
    assert rhs(0.0, 1.0, 0.0, p) == 1.0
    q = ModelParams.constant(1, 2, 1, 1, 0)
    assert rhs(0.0, 1.0, 1.0, q) == -1.5
    assert rhs_log(0.0, None, 0.0, p) == 1.0


@pytest.mark.parametrize("a,b,K,g,expected", [
    (2, 1, 1, 1, 1.0),
    (2, 1, 5, 2, 5.0),
    (3, 1, 2, 2, 2 * math.sqrt(2)),
])
def test_equilibrium(a, b, K, g, expected):
    assert equilibrium(ModelParams.constant(a, b, K, g, 0.3)) == pytest.approx(expected, rel=1e-15)
    assert equilibrium(ProportionalParams(a, b, g, K)) == pytest.approx(expected, rel=1e-15)


def test_equilibrium_annihilates_rhs():
    p = ModelParams.constant(3.3, 1.2, 1.7, 2.4, 1.0)
    n = equilibrium(p)
    assert abs(rhs(0.0, n, n, p)) < 1e-14


def test_equilibrium_errors():
    with pytest.raises(NoEquilibriumError, match="no positive equilibrium"):
        equilibrium(ModelParams.constant(1, 2, 1, 1, 0))
    with pytest.raises(DomainError):
        equilibrium(ModelParams(1.0, Sinusoid(2, 0.5, 1), 1.0, 1.0, 0.0))


def test_linearized_rhs():
    p = ProportionalParams(2, 1, 1, 1)
    assert linearized_rhs(0.0, 0.0, p) == 0.0
    assert linearized_rhs(0.0, 1.0, p) == -0.5
    with pytest.raises(NoEquilibriumError):
        linearized_rhs(0.0, 1.0, ProportionalParams(1, 2, 1, 1))


def test_proportional_view():
    p = ProportionalParams(2, 1, 1, 2, Sinusoid(1.0, 0.5, 1.0), DelaySpec.constant(0.2))
    m = p.to_model()
    assert m.a(0.25) == pytest.approx(3.0) and m.b(0.25) == pytest.approx(1.5)
    assert m.K(0.3) == 2.0 and p.period == 1.0
    view = as_proportional(ModelParams.constant(2, 1, 2, 1, 0.5))
    assert view.r == Constant(1.0) and view.a == 2.0
    assert as_proportional(m) is None


def test_params_domain():
    with pytest.raises(DomainError):
        ModelParams.constant(2, 1, 1, 0, 0)
    with pytest.raises(DomainError):
        ProportionalParams(2, 1, 1, -1)


def test_period_resolution():
    p = ModelParams(1.0, Sinusoid(2, 0.5, 1.0), Sinusoid(1, 0.1, 1.5), 1.0, 0.1)
    assert p.period == pytest.approx(3.0)
    with pytest.raises(ValueError):
        ModelParams(1.0, Sinusoid(2, 0.5, 1.0), 1.0, 1.0, 0.1, common_period=1.5).period
    bad = ModelParams(1.0, Sinusoid(2, 0.5, 1.0), Sinusoid(1, 0.1, math.e), 1.0, 0.1)
    with pytest.raises(ValueError):
        bad.period


def test_validate_all_pass():
    r = validate(ModelParams.constant(2, 1, 1, 1, 1.0), HistorySpec.constant(0.5))
    assert r.verdict is Verdict.HOLDS


def test_validate_b_zero_fails():
    r = validate(ModelParams.constant(2, 0, 1, 1, 1.0), HistorySpec.constant(0.5))
    assert r["b(t) >= b > 0"].verdict is Verdict.FAILS


def test_validate_negative_lag_fails():
    p = ModelParams(1.0, 2.0, 1.0, 1.0, DelaySpec.varying(Sinusoid(0.0, 1.0, 2 * math.pi)))
    r = validate(p, HistorySpec.constant(1.0))
    assert r["theta(t) <= t"].verdict is Verdict.FAILS


def test_validate_history_checks():
    p = ModelParams.constant(2, 1, 1, 1, 1.0)
    assert validate(p, HistorySpec.constant(-1.0, 1.0))["phi(t) >= 0"].verdict is Verdict.FAILS
    assert validate(p, HistorySpec.constant(1.0, 0.0))["N0 > 0"].verdict is Verdict.FAILS


def test_validate_incommensurate_reports_not_raises():
    p = ModelParams(1.0, Sinusoid(2, 0.5, 1.0), Sinusoid(1, 0.1, math.e), 1.0, 0.1)
    r = validate(p, HistorySpec.constant(1.0))
    assert r.verdict is Verdict.FAILS and r.notes
