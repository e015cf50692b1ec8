import numpy as np
import pytest

from gelfand_radial import RangeMismatch, euclidean, find_intersections, hyperbolic, integrate_ivp


@pytest.fixture(scope="module")
def flat3():
    e = euclidean()
    return {a: integrate_ivp(e, 3, a, 1e6) for a in (0.0, 1.0)}


def test_flat_n3_crosses_repeatedly(flat3):
    rep = find_intersections(flat3[1.0], flat3[0.0])
    assert rep.count >= 3
    assert list(rep.crossings) == sorted(rep.crossings)


def test_crossings_are_sign_changes(flat3):
    a, b = flat3[1.0], flat3[0.0]
    for r in find_intersections(a, b, 1e3).crossings:
        d = a.reduced(np.array([r * (1 - 1e-7), r * (1 + 1e-7)])) - b.reduced(np.array([r * (1 - 1e-7), r * (1 + 1e-7)]))
        assert d[0] * d[1] < 0


def test_argument_order_irrelevant(flat3):
    x = find_intersections(flat3[1.0], flat3[0.0], 1e3)
    y = find_intersections(flat3[0.0], flat3[1.0], 1e3)
    assert x.crossings == y.crossings and (y.alpha, y.beta) == (1.0, 0.0)


def test_flat_n10_ordered():
    e = euclidean()
    rep = find_intersections(integrate_ivp(e, 10, 1.0, 1e6), integrate_ivp(e, 10, 0.0, 1e6))
    assert rep.count == 0 and rep.min_gap > 0 and rep.ordered


def test_flat_n2_single_crossing():
    e = euclidean()
    rep = find_intersections(integrate_ivp(e, 2, 1.0, 1e4), integrate_ivp(e, 2, 0.0, 1e4))
    assert rep.count == 1


def test_hyperbolic_below_and_above_threshold(eta_h3):
    h, eta = hyperbolic(), eta_h3.eta_hat
    low = find_intersections(integrate_ivp(h, 3, eta - 0.3, 50.0), integrate_ivp(h, 3, eta - 1.5, 50.0))
    high = find_intersections(integrate_ivp(h, 3, eta + 1.5, 50.0), integrate_ivp(h, 3, eta + 0.3, 50.0))
    assert low.count == 0 and high.count >= 1


@pytest.mark.parametrize("N", [10, 11])
def test_hyperbolic_high_dimension_ordered(N):
    h = hyperbolic()
    rep = find_intersections(integrate_ivp(h, N, 4.0, 50.0), integrate_ivp(h, N, 1.0, 50.0))
    assert rep.ordered


def test_first_crossing_order():
    e = euclidean()
    s = {a: integrate_ivp(e, 3, a, 1e3) for a in (3.0, 2.0, 1.0, 0.0)}
    assert find_intersections(s[3.0], s[2.0]).crossings[0] <= find_intersections(s[1.0], s[0.0]).crossings[0]


def test_rejects_equal_heights():
    sol = integrate_ivp(hyperbolic(), 3, 0.0, 5.0)
    with pytest.raises(ValueError):
        find_intersections(sol, sol)


def test_rejects_mismatched_runs():
    h = hyperbolic()
    with pytest.raises(ValueError):
        find_intersections(integrate_ivp(h, 3, 1.0, 5.0), integrate_ivp(h, 4, 0.0, 5.0))
    with pytest.raises(RangeMismatch):
        find_intersections(integrate_ivp(h, 3, 1.0, 5.0), integrate_ivp(h, 3, 0.0, 5.0), r_max=10.0)


def test_csv_summary_line(flat3):
    text = find_intersections(flat3[1.0], flat3[0.0], 1e3).to_csv()
    lines = text.splitlines()
    assert lines[0] == "alpha,beta,k,crossing_r"
    assert lines[-1].startswith("# summary: crossings=")
