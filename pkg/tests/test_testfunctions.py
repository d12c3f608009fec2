"""Probe catalog: derivative oracles against finite differences, envelopes
against grid suprema, support and metadata contracts."""

import math

import numpy as np
import pytest

from levygen import testfunctions as T
from levygen.errors import ContractError


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (float(np.asarray(f(x + e)).ravel()[0])
                - float(np.asarray(f(x - e)).ravel()[0])) / (2 * h)
    return g


def fd_hess(g, x, h=1e-5):
    x = np.asarray(x, float)
    d = len(x)
    H = np.zeros((d, d))
    for i in range(d):
        e = np.zeros_like(x)
        e[i] = h
        H[:, i] = (np.asarray(g(x + e), float).ravel()
                   - np.asarray(g(x - e), float).ravel()) / (2 * h)
    return 0.5 * (H + H.T)


CASES = [
    (T.gaussian(1), [0.3]),
    (T.gaussian(2), [0.4, -0.7]),
    (T.bump(1, 2.0), [0.5]),
    (T.bump(2, 3.0), [0.8, -1.1]),
    (T.power_envelope(1.5, 1), [0.6]),
    (T.cosine(1.3, 1), [0.2]),
    (T.cosine([1.0, 0.5], 2), [0.2, -0.4]),
    (T.quadratic_cutoff(1), [2.5]),
    (T.quadratic_cutoff(2), [1.7, 1.4]),
    (T.linear_combination(2.0, T.gaussian(1), -0.5, T.cosine(2.0, 1)), [0.3]),
]


@pytest.mark.parametrize("tf,x", CASES, ids=[c[0].name for c in CASES])
def test_gradient_matches_finite_differences(tf, x):
    x = np.asarray(x, float)
    ga = np.asarray(tf.g(x), float).ravel()
    gn = fd_grad(tf.f, x)
    tol = np.maximum(1e-6, 1e-4 * np.abs(ga))
    assert np.all(np.abs(ga - gn) <= tol)


@pytest.mark.parametrize(
    "tf,x",
    [(tf, x) for tf, x in CASES if tf.h is not None],
    ids=[tf.name for tf, x in CASES if tf.h is not None],
)
def test_hessian_matches_fd_of_gradient(tf, x):
    x = np.asarray(x, float)
    Ha = np.atleast_2d(np.asarray(tf.h(x), float))
    Hn = fd_hess(tf.g, x)
    assert np.allclose(Ha, Ha.T)
    assert np.max(np.abs(Ha - Hn)) < 2e-5


@pytest.mark.parametrize(
    "tf",
    [T.gaussian(1), T.bump(1, 2.0), T.power_envelope(0.8, 1),
     T.power_envelope(1.5, 1), T.quadratic_cutoff(1)],
    ids=["gaussian", "bump", "power0.8", "power1.5", "qcut"],
)
def test_envelope_dominates_tail_sup(tf):
    ys = np.linspace(-60, 60, 20001).reshape(-1, 1)
    fv = np.abs(np.asarray(tf.f(ys), float).ravel())
    rr = np.abs(ys.ravel())
    for r in (0.0, 0.3, 0.7, 1.0, 2.0, 3.0, 5.0, 10.0):
        sup = fv[rr >= r].max()
        assert tf.envelope(r) >= sup - 1e-12


def test_bump_support_and_center():
    b = T.bump(1, 2.0)
    assert float(np.asarray(b.f(np.array([[2.1]]))).ravel()[0]) == 0.0
    assert float(np.asarray(b.f(np.array([[5.0]]))).ravel()[0]) == 0.0
    assert float(np.asarray(b.f(np.array([[0.0]]))).ravel()[0]) == pytest.approx(1.0)
    # gradient vanishes at and beyond the support edge
    assert np.allclose(np.asarray(b.g(np.array([2.0])), float), 0.0)
    assert np.allclose(np.asarray(b.g(np.array([3.0])), float), 0.0)


def test_quadratic_cutoff_matches_square_inside():
    q = T.quadratic_cutoff(1, flat_radius=2.0, support_radius=3.0)
    for x in (0.0, 0.7, -1.5, 1.99):
        assert float(np.asarray(q.f(np.array([[x]]))).ravel()[0]) == pytest.approx(x * x)
        assert np.asarray(q.g(np.array([x])), float).ravel()[0] == pytest.approx(2 * x)
    assert float(np.asarray(q.f(np.array([[3.5]]))).ravel()[0]) == 0.0


def test_power_envelope_metadata():
    tf = T.power_envelope(0.8, 1)
    assert tf.g is None
    assert tf.holder_order(np.zeros(1)) == pytest.approx(0.8)
    assert tf.holder_constant == pytest.approx(1.0)
    assert np.all(tf.holder_anchor == 0.0)
    # |f(y) - f(0)| <= |y|^0.8 near the anchor
    ys = np.geomspace(1e-6, 0.5, 64)
    fv = np.asarray(tf.f(ys.reshape(-1, 1)), float).ravel()
    assert np.all(np.abs(fv) <= ys ** 0.8 + 1e-15)
    with pytest.raises(ContractError):
        T.power_envelope(0.0, 1)


def test_cosine_metadata_and_values():
    tf = T.cosine(2.5, 1)
    assert tf.osc_freq == pytest.approx(2.5)
    assert not tf.vanishes
    assert float(np.asarray(tf.f(np.array([[0.0]]))).ravel()[0]) == pytest.approx(1.0)
    x = np.array([0.4])
    assert float(np.asarray(tf.f(x[None, :])).ravel()[0]) == pytest.approx(math.cos(1.0))
    tf2 = T.cosine([3.0, 4.0], 2)
    assert tf2.osc_freq == pytest.approx(5.0)


def test_from_expression_roundtrip():
    tf = T.from_expression("exp(-r**2) * x1", 1, vanishes=True)
    pts = np.array([[0.5], [-1.0]])
    got = np.asarray(tf.f(pts), float).ravel()
    want = np.exp(-pts.ravel() ** 2) * pts.ravel()
    assert np.allclose(got, want)
    assert tf.g is None and tf.h is None and tf.vanishes


def test_linear_combination_combines_metadata():
    lc = T.linear_combination(1.0, T.gaussian(1), 1.0, T.cosine(2.0, 1))
    assert lc.osc_freq == pytest.approx(2.0)
    assert not lc.vanishes  # cosine does not vanish at infinity
    x = np.array([0.25])
    want = (np.asarray(T.gaussian(1).g(x), float)
            + np.asarray(T.cosine(2.0, 1).g(x), float))
    assert np.allclose(np.asarray(lc.g(x), float), want)
    assert lc.envelope(1.0) >= math.exp(-1.0) + 1.0 - 1e-12


def test_dimension_mismatch_rejected():
    with pytest.raises(ContractError):
        T.gaussian(0)
