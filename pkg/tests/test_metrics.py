import math
from functools import lru_cache

import numpy as np
import pytest
from conftest import system
from hypothesis import given, settings
from hypothesis import strategies as st

from trimlump.assembly import field_evaluator, l2_project
from trimlump.dynamics import Trajectory
from trimlump.eigen import solve_gevp
from trimlump.metrics import (BoundResult, ErrorSeries, ModalPair, error_series, l2_error, max_sine_gap,
                              modal_bound_elliptic, modal_bound_hyperbolic, modal_pair)
from trimlump.problems import exact_modes_1d


@pytest.mark.parametrize("eps", [1e-2, 1e-6])
def test_projection_of_member_has_zero_error(eps):
    _, space, _, M = system("ex1d", 3, 64, eps)
    cubic = lambda x: x[:, 0] ** 3 - 0.5 * x[:, 0]  # noqa: E731
    c = l2_project(space, cubic, M)
    assert l2_error(space, c, cubic) <= 1e-10


def test_zero_at_initial_time():
    prob, space, K, _ = system("ex1d", 3, 256, 1e-6)
    assert l2_error(space, np.zeros(K.shape[0]), prob.u, t=0.0) == 0.0
    # relative error falls back to absolute when the reference vanishes
    assert l2_error(space, np.zeros(K.shape[0]), prob.u, t=0.0, relative=True) == 0.0


def test_relative_error():
    prob, space, K, _ = system("ex1d", 3, 64, 1e-2)
    ev = field_evaluator(space)
    t = 0.1
    ref = math.sqrt(ev.weights @ prob.u(ev.points, t) ** 2)
    assert l2_error(space, np.zeros(K.shape[0]), prob.u, t, relative=True, evaluator=ev) == pytest.approx(1.0)
    assert l2_error(space, np.zeros(K.shape[0]), prob.u, t, evaluator=ev) == pytest.approx(ref)


def test_error_series_and_csv(tmp_path):
    prob, space, K, M = system("ex1d", 3, 256, 1e-2)
    ev = field_evaluator(space)
    ts = np.array([0.0, 0.25, 0.5])
    coeffs = np.array([l2_project(space, lambda x, t=t: prob.u(x, t), M) for t in ts])
    es = error_series(ev, Trajectory(ts, coeffs), prob.u)
    assert np.all(es.values >= 0) and es.values[0] == 0.0
    # u = w(x) sin(omega t): the projection error carries the same time factor
    base = l2_error(space, l2_project(space, prob.profile, M), lambda x: prob.profile(x), evaluator=ev)
    assert np.allclose(es.values, base * np.abs(np.sin(prob.omega * ts)), rtol=1e-8)
    assert es.max == es.values.max()
    es.to_csv(tmp_path / "e.csv")
    text = (tmp_path / "e.csv").read_text().splitlines()
    assert text[0] == "t,l2_error" and len(text) == 4
    assert np.array_equal(np.loadtxt(tmp_path / "e.csv", delimiter=",", skiprows=1)[:, 1], es.values)
    with pytest.raises(ValueError):
        ErrorSeries([0.0, 1.0], [0.1, -1e-3])


# -- modal bounds ----------------------------------------------------------------------


@lru_cache(maxsize=None)
def consistent_setup():
    prob, space, K, M = system("ex1d", 3, 256, 1e-6)
    dec = solve_gevp(K, M)
    lam, modes = exact_modes_1d(prob.domain.measure, 12)
    return prob, dec, lam, modes, field_evaluator(space)


def pair(j):
    _, dec, lam, modes, ev = consistent_setup()
    return modal_pair(j, lam, modes, dec, ev)


def test_modal_pair_alignment_and_range():
    p = pair(3)
    assert p.weights @ (p.exact * p.discrete) > 0
    assert p.mode_error < 1e-3
    assert p.lam <= p.lam_h
    with pytest.raises(IndexError):
        pair(13)
    with pytest.raises(IndexError):
        pair(0)


def test_zero_data_zero_bound():
    zero = lambda x: np.zeros(len(x))  # noqa: E731
    res = modal_bound_hyperbolic(pair(1), zero, zero, None, 1.0)
    assert res.bound == 0.0 and res.measured == 0.0 and res.holds


def test_hyperbolic_bound_example():
    prob = consistent_setup()[0]
    res = modal_bound_hyperbolic(pair(1), prob.u0, prob.v0, prob.forcing_profile, 1.0,
                                 f_time=lambda t: math.sin(prob.omega * t))
    assert res.holds and res.measured > 0
    # the separable and general forcing paths agree
    gen = modal_bound_hyperbolic(pair(1), prob.u0, prob.v0, prob.f, 1.0)
    assert gen.measured == pytest.approx(res.measured, rel=1e-8)
    assert gen.bound == pytest.approx(res.bound, rel=1e-8)


@settings(max_examples=10)
@given(s1=st.floats(0.0, 10.0), s2=st.floats(0.0, 10.0))
def test_bound_monotone_in_velocity(s1, s2):
    prob = consistent_setup()[0]
    s1, s2 = sorted((s1, s2))
    b = [modal_bound_hyperbolic(pair(2), prob.u0, lambda x, s=s: s * prob.v0(x), None, 0.8).bound
         for s in (s1, s2)]
    assert b[0] <= b[1] * (1 + 1e-12)


def test_max_sine_gap():
    assert max_sine_gap(1.0, 1.0, 5.0) == 0.0
    assert max_sine_gap(2.0, 1.0, 0.0) == 0.0
    t = np.linspace(0, 4, 400_001)
    ref = np.abs(np.sin(2.1 * t) - np.sin(2.0 * t)).max()
    assert max_sine_gap(2.1, 2.0, 4.0) == pytest.approx(ref, abs=1e-9)


def test_elliptic_identical_pairs():
    x = np.linspace(0, 1, 50)[:, None]
    w = np.full(50, 1 / 50)
    u = np.sin(x[:, 0])
    p = ModalPair(1, 2.0, 2.0, u, u.copy(), x, w)
    res = modal_bound_elliptic(p, lambda y: np.cos(y[:, 0]))
    assert res.bound == 0.0 and res.measured == 0.0


@pytest.mark.parametrize("j", [1, 4, 7])
def test_elliptic_orthogonal_forcing(j):
    _, _, lam, modes, _ = consistent_setup()
    i = j + 1
    f = lambda x: modes(x)[:, i - 1]  # noqa: E731
    res = modal_bound_elliptic(pair(j), f)
    assert res.holds
    # f_j ~ 0: only the discrete cross-term remains
    p = pair(j)
    fj, fjh = p.inner(f(p.points))
    assert abs(fj) < 1e-8
    assert res.measured == pytest.approx(abs(fjh) / p.lam_h * math.sqrt(p.weights @ p.discrete ** 2), rel=1e-4)


def test_elliptic_homogeneous_in_f():
    prob = consistent_setup()[0]
    a = modal_bound_elliptic(pair(2), prob.forcing_profile)
    b = modal_bound_elliptic(pair(2), lambda x: -3.0 * prob.forcing_profile(x))
    assert b.bound == pytest.approx(3 * a.bound) and b.measured == pytest.approx(3 * a.measured)


def test_bound_result_slack():
    assert BoundResult(1.0, 1.0 + 1e-9).holds
    assert not BoundResult(1.0, 1.0 + 1e-6).holds
