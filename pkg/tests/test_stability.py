import math

import numpy as np
import pytest
from scipy import integrate

from gelfand_radial import (
    BracketError,
    SupportError,
    TangencyWarning,
    ball_eigenvalue,
    bottom_of_spectrum,
    euclidean,
    first_zero,
    hyperbolic,
    integrate_ivp,
    integrate_linearized,
    quadratic_form,
    stability_test,
    threshold_eta,
    weighted_ball_eigenvalue,
)
from gelfand_radial.stability import VERDICT_HEADER, StableUpTo, UnstableAt, _check_tangency, verdicts_monotone


def test_euclidean_unstable_with_small_certificate():
    v = stability_test(euclidean(), 3, 0.0)
    assert isinstance(v.decision, UnstableAt)
    assert 0 < v.decision.r_star < 100
    assert abs(v.decision.certificate) <= 1e-8


@pytest.mark.parametrize("profile, N, alpha", [(hyperbolic(), 10, 0.0), (hyperbolic(), 3, -5.0), (hyperbolic(), 2, -3.0)])
def test_stable_cases(profile, N, alpha):
    v = stability_test(profile, N, alpha, r_max=50.0)
    assert isinstance(v.decision, StableUpTo) and v.decision.r_max == 50.0
    assert first_zero(v.linearized) is None


def test_large_height_unstable_on_h3():
    assert isinstance(stability_test(hyperbolic(), 3, 5.0).decision, UnstableAt)


def test_first_zero_is_a_sign_change():
    lin = integrate_linearized(integrate_ivp(euclidean(), 3, 0.0, 100.0))
    r = first_zero(lin)
    assert lin.v(r * (1 - 1e-6))[0] > 0 > lin.v(r * (1 + 1e-6))[0]


def test_tangency_warning():
    r = np.linspace(0, 2, 5)
    with pytest.warns(TangencyWarning):
        _check_tangency(r, np.array([1.0, 0.5, 1e-14, 0.5, 1.0]))


def test_quadratic_form_zero_function():
    base = integrate_ivp(hyperbolic(), 3, 0.0, 5.0)
    assert quadratic_form(hyperbolic(), base, [0.0, 1.0, 2.0], [0.0, 0.0, 0.0]) == 0.0


def test_quadratic_form_positive_on_tiny_support():
    base = integrate_ivp(hyperbolic(), 3, 0.0, 5.0)
    r = np.linspace(0.0, 0.1, 201)
    tent = np.minimum(r, 0.1 - r)
    assert quadratic_form(hyperbolic(), base, r, tent) > 0


def test_quadratic_form_against_quadrature():
    # chi = sin(pi r)/r on the unit ball in R^3: gradient term is pi^2 int chi^2 r^2
    base = integrate_ivp(euclidean(), 3, 0.5, 2.0, 1e-12)
    r = np.linspace(1e-9, 1.0, 400)
    chi = np.sin(np.pi * r) / r
    chi1 = (np.pi * r * np.cos(np.pi * r) - np.sin(np.pi * r)) / r**2
    got = quadratic_form(euclidean(), base, r, chi, chi1)
    mass = integrate.quad(lambda s: math.sin(math.pi * s) ** 2, 0, 1, epsabs=1e-14)[0]
    pot = integrate.quad(lambda s: math.exp(base.u(s)[0]) * math.sin(math.pi * s) ** 2, 0, 1, epsabs=1e-14)[0]
    assert got == pytest.approx(math.pi**2 * mass - pot, rel=1e-8)


def test_quadratic_form_support_check():
    base = integrate_ivp(hyperbolic(), 3, 0.0, 5.0)
    with pytest.raises(SupportError):
        quadratic_form(hyperbolic(), base, [0.0, 6.0], [1.0, 0.0])


def test_unit_ball_eigenvalue():
    assert ball_eigenvalue(euclidean(), 3, 1.0) == pytest.approx(math.pi**2, abs=1e-6)


@pytest.mark.parametrize("R", [1.0, 5.0, 20.0])
def test_hyperbolic_ball_eigenvalue_closed_form(R):
    # on H^3 the radial Dirichlet eigenfunction is sin(k r)/sinh r
    assert ball_eigenvalue(hyperbolic(), 3, R) == pytest.approx(1 + math.pi**2 / R**2, rel=1e-9)


def test_eigenvalue_blows_up_on_small_balls():
    h = hyperbolic()
    a, b, c = (ball_eigenvalue(h, 3, R) for R in (0.1, 1.0, 10.0))
    assert a > b > c and a > 100 * c


def test_bottom_of_spectrum_hyperbolic():
    for N, target in ((3, 1.0), (2, 0.25)):
        est = bottom_of_spectrum(hyperbolic(), N)
        assert est.value == pytest.approx(target, rel=0.02)
        assert all(b < a for a, b in zip(est.ball_values, est.ball_values[1:]))


def test_weighted_eigenvalue_sides():
    h = hyperbolic()
    assert weighted_ball_eigenvalue(h, 3, -5.0, 30.0) > 1
    v = stability_test(euclidean(), 3, 0.0)
    r2 = 2 * v.decision.r_star
    assert weighted_ball_eigenvalue(euclidean(), 3, 0.0, r2) < 1


def test_frozen_weight_rescaling():
    h = hyperbolic()
    mu = weighted_ball_eigenvalue(h, 3, 0.7, 4.0, frozen_weight=True)
    assert mu == pytest.approx(ball_eigenvalue(h, 3, 4.0) * math.exp(-0.7), rel=1e-8)


def test_cross_check_agreement():
    v = stability_test(hyperbolic(), 3, 3.0, r_max=20.0, cross_check=True)
    assert v.method_agreement is True and v.weighted_eig[0] == 20.0


def test_verdict_csv_row():
    v = stability_test(hyperbolic(), 3, -1.0, r_max=10.0)
    row = v.csv_row()
    assert len(row) == len(VERDICT_HEADER) and row[1] == "StableUpTo" and row[2] == 10.0


def test_threshold_h3(eta_h3):
    assert eta_h3.eta_hat > 0
    assert isinstance(eta_h3.stable_witness.decision, StableUpTo)
    assert isinstance(eta_h3.unstable_witness.decision, UnstableAt)


def test_threshold_h2(eta_h2):
    assert eta_h2.eta_hat > math.log(0.25)


def test_threshold_tolerance_refinement(eta_h3, spectrum_h3):
    fine = threshold_eta(hyperbolic(), 3, tol_alpha=1e-6, log_lambda1=spectrum_h3.log_value)
    assert abs(fine.eta_hat - eta_h3.eta_hat) <= 1e-3


def test_threshold_bad_bracket():
    with pytest.raises(BracketError):
        threshold_eta(hyperbolic(), 3, alpha_lo=3.0, alpha_hi=5.0, log_lambda1=0.0)


def test_threshold_rejects_high_dimension():
    with pytest.raises(ValueError):
        threshold_eta(hyperbolic(), 10)


def test_alpha_grid_is_monotone():
    verdicts = [stability_test(hyperbolic(), 3, a) for a in np.arange(-3.0, 3.01, 0.5)]
    assert verdicts_monotone(verdicts)
    assert verdicts[0].stable and not verdicts[-1].stable
