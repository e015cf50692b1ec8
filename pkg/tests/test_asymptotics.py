import math

import numpy as np
import pytest

from gelfand_radial import (
    DomainError,
    InsufficientRange,
    LimitKind,
    classify_limit,
    decay_ratio,
    euclidean,
    hyperbolic,
    integrate_ivp,
    log_rate,
    polyexp,
)
from gelfand_radial.asymptotics import extrapolate_rates, tail_probes


@pytest.fixture(scope="module")
def h3():
    return integrate_ivp(hyperbolic(), 3, 0.0, 50.0)


@pytest.fixture(scope="module")
def h2():
    return integrate_ivp(hyperbolic(), 2, 0.0, 50.0)


def test_finite_limit_for_fast_growth():
    sol = integrate_ivp(polyexp(2.0), 3, 0.0, 12.0)
    rep = classify_limit(sol)
    assert rep.limit_kind is LimitKind.FINITE
    assert -math.inf < rep.limit_value < 0.0
    assert 0.0 <= rep.tail_bound < 1e-2
    # the limit is approached from above
    assert rep.limit_value < float(sol.u(6.0)[0])


def test_finite_limit_needs_flat_tail():
    with pytest.raises(InsufficientRange):
        classify_limit(integrate_ivp(polyexp(2.0), 3, 0.0, 3.0))


@pytest.mark.parametrize("profile, N, alpha", [(hyperbolic(), 3, 0.0), (polyexp(0.75), 4, 1.0)])
def test_log_divergence(profile, N, alpha):
    rep = classify_limit(integrate_ivp(profile, N, alpha, 50.0))
    assert rep.limit_kind is LimitKind.LOG_DIVERGENCE
    assert rep.limit_value is None and rep.decay_ratio_tail and rep.log_rate_tail


def test_decay_ratio_h3_within_ten_percent(h3):
    assert decay_ratio(h3, hyperbolic(), 40.0) == pytest.approx(0.5, rel=0.10)


def test_decay_ratio_improves_with_radius(h3, h2):
    for sol, target in ((h3, 0.5), (h2, 1.0)):
        near = abs(decay_ratio(sol, hyperbolic(), 10.0) - target)
        far = abs(decay_ratio(sol, hyperbolic(), 40.0) - target)
        assert far < near


def test_decay_ratio_in_log_space_matches_direct_formula(h3):
    r = 20.0
    direct = math.exp(-h3.u(r)[0]) / math.log(math.cosh(r))
    assert decay_ratio(h3, hyperbolic(), r) == pytest.approx(direct, rel=1e-11)


def test_log_rate_improves_on_long_range():
    sol = integrate_ivp(hyperbolic(), 3, 0.0, 1e3)
    a = log_rate(sol, hyperbolic(), 1e2).rate
    b = log_rate(sol, hyperbolic(), 1e3).rate
    assert abs(b + 1) < abs(a + 1)


def test_log_rate_reports_logr_for_finite_lambda(h3):
    lr = log_rate(h3, hyperbolic(), 40.0)
    assert lr.rate_logr == pytest.approx(h3.u(40.0)[0] / math.log(40.0))


def test_euclidean_rate_against_log_r():
    sol = integrate_ivp(euclidean(), 3, 0.0, 1e4)
    assert log_rate(sol, euclidean(), 1e4).rate_logr == pytest.approx(-2.0, rel=0.10)


def test_decay_quantities_undefined_for_finite_limit():
    sol = integrate_ivp(polyexp(2.0), 3, 0.0, 12.0)
    with pytest.raises(DomainError):
        decay_ratio(sol, polyexp(2.0), 5.0)


def test_log_rate_needs_large_integral(h3):
    with pytest.raises(DomainError):
        log_rate(h3, hyperbolic(), 0.5)


def test_extrapolation_moves_toward_limits(h3):
    ext = extrapolate_rates(h3, hyperbolic(), 20.0, 40.0)
    raw = log_rate(h3, hyperbolic(), 40.0).rate
    assert abs(ext.rate + 1) < abs(raw + 1)
    assert "heuristic" in ext.label


def test_tail_probes_cover_last_quarter():
    p = tail_probes(40.0)
    assert p[0] == pytest.approx(30.0) and p[-1] == pytest.approx(40.0)
    assert np.all(np.diff(p) > 0)


def test_report_csv(h3):
    rep = classify_limit(h3, extrapolate=True)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "r,ratio,rate,rate_logr"
    assert len([l for l in lines if not l.startswith("#")]) == len(rep.decay_ratio_tail) + 1
