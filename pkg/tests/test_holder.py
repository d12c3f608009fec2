"""Seminorm estimators against closed-form ratios, membership region
checks, and the certificate ladder."""

import json
import math

import numpy as np
import pytest

from levygen import testfunctions as T
from levygen.errors import ContractError, DomainError
from levygen.holder import (
    NOT_CERTIFIED,
    ROUTE_CONSTANT,
    ROUTE_VARIABLE_C1,
    ROUTE_VARIABLE_ZERO,
    VariableOrderFn,
    domain_verdict,
    first_order_remainder_seminorm,
    local_holder_seminorm,
    membership_check,
)
from levygen.measures import Density, IsotropicPower, c_alpha
from levygen.symbols import LevyTriplet, StableLikeSymbol, StateTriplet


# ------------------------------------------------------------------ seminorms

def test_abs_value_ratio_is_one():
    s = local_holder_seminorm(lambda p: np.abs(p).ravel(), [0.0], 1.0)
    assert s == pytest.approx(1.0, abs=1e-12)


def test_power_probe_approaches_one_at_smallest_radius():
    # ratio = e^{-r^2}, sup approached as r -> 0
    s = local_holder_seminorm(T.power_envelope(0.8, 1), [0.0], 0.8)
    assert s == pytest.approx(1.0, abs=1e-6)
    assert s < 1.0


def test_smooth_function_vanishing_slope():
    # |f(y) - f(0)| = O(y^2), so the order-1 ratio dies with the radii
    s = local_holder_seminorm(T.gaussian(1), [0.0], 1.0,
                              radii=np.geomspace(1e-3, 0.1, 24))
    assert s <= 0.1


def test_seminorm_nondecreasing_in_order():
    # on radii <= 1 the weight |y|^-alpha grows with alpha
    tf = T.power_envelope(0.8, 1)
    vals = [local_holder_seminorm(tf, [0.0], a) for a in (0.3, 0.5, 0.7, 0.8)]
    assert all(vals[i] <= vals[i + 1] + 1e-12 for i in range(len(vals) - 1))


def test_catalog_constant_window():
    # declared exact constant 1: grid estimate lands in [C/2, C]
    tf = T.power_envelope(0.8, 1)
    s = local_holder_seminorm(tf, tf.holder_anchor, 0.8)
    assert 0.5 * tf.holder_constant <= s <= tf.holder_constant + 1e-12


def test_probe_radii_validated():
    with pytest.raises(ContractError):
        local_holder_seminorm(T.gaussian(1), [0.0], 1.0, radii=[0.5, 1.5])
    with pytest.raises(ContractError):
        local_holder_seminorm(T.gaussian(1), [0.0], 1.0, radii=[])


def test_remainder_quadratic_cutoff():
    # remainder = y^2 on the flat region, ratio r^{0.5} maximal at r = 1
    q = T.quadratic_cutoff(1, flat_radius=2.0, support_radius=3.0)
    s = first_order_remainder_seminorm(q, [0.0], 1.5)
    assert s == pytest.approx(1.0, abs=1e-12)


def test_remainder_linear_function_zero():
    lin = T.TestFunction(lambda p: np.asarray(p).reshape(-1),
                         lambda x: np.ones(1), None, False, "linear", 1)
    assert first_order_remainder_seminorm(lin, [0.0], 1.5) == pytest.approx(0.0, abs=1e-14)


def test_remainder_gaussian_near_two():
    s = first_order_remainder_seminorm(T.gaussian(1), [0.0], 1.99)
    assert s <= 1.05


def test_remainder_requires_gradient_and_range():
    with pytest.raises(ContractError):
        first_order_remainder_seminorm(T.power_envelope(0.8, 1), [0.0], 1.5)
    with pytest.raises(DomainError):
        first_order_remainder_seminorm(T.gaussian(1), [0.0], 0.9)
    with pytest.raises(DomainError):
        first_order_remainder_seminorm(T.gaussian(1), [0.0], 2.0)


# ------------------------------------------------------------- order function

def test_order_function_range_enforced():
    afn = VariableOrderFn("2.5 + 0*x1")
    with pytest.raises(DomainError):
        afn([0.0])


def test_order_function_lower_bound():
    afn = VariableOrderFn(0.2, lower_bound=0.5)
    with pytest.raises(ContractError):
        afn.validate([[0.0]])


def test_order_function_modulus_violation():
    afn = VariableOrderFn("1.0 + 0.5*sin(3*x1)", modulus=lambda t: 0.01 * t)
    with pytest.raises(ContractError):
        afn.validate([[0.0], [1.0]])


def test_order_function_analytic_vs_sampled():
    states = [[0.0], [1.0]]
    analytic = VariableOrderFn("1.0 + 0.1*sin(x1)", modulus=lambda t: 0.1 * t)
    rep = analytic.validate(states)
    assert rep.passed and "analytic" in rep.detail
    sampled = VariableOrderFn("1.0 + 0.1*sin(x1)")
    rep = sampled.validate(states)
    assert rep.passed and "heuristic" in rep.detail


def test_eps_gap_positive():
    with pytest.raises(ContractError):
        VariableOrderFn(0.8, eps_gap=0.0)


# ----------------------------------------------------------------- membership

def test_membership_c1_smooth():
    rep = membership_check(T.gaussian(1), VariableOrderFn(0.8),
                           np.linspace(-2, 2, 5).reshape(-1, 1))
    assert rep.passed
    assert rep.worst["C1"].passed


def test_membership_c2_checked_via_remainder():
    rep = membership_check(T.gaussian(1), VariableOrderFn(1.5), [[0.0], [1.0]])
    assert rep.passed
    assert "remainder" in rep.worst["C2"].detail


def test_membership_c2_missing_gradient():
    rep = membership_check(T.power_envelope(0.8, 1), VariableOrderFn(1.5), [[0.5]])
    assert not rep.passed
    assert rep.worst["C2"].detail == "C2 requires gradient oracle"


def test_membership_c3_missing_hessian():
    rep = membership_check(T.power_envelope(1.5, 1), VariableOrderFn(2.0), [[0.0]])
    assert not rep.passed
    assert rep.worst["C3"].detail == "C3 requires Hessian oracle"


def test_membership_c3_with_hessian():
    rep = membership_check(T.gaussian(1), VariableOrderFn(2.0), [[0.3]])
    assert rep.passed


def test_membership_empty_grid():
    with pytest.raises(ContractError):
        membership_check(T.gaussian(1), VariableOrderFn(0.8), np.zeros((0, 1)))


# -------------------------------------------------------------------- verdicts

def stable_levy(alpha):
    return LevyTriplet(measure=IsotropicPower(c_alpha(alpha, 1), alpha, 1), d=1)


def test_constant_route_holder_probe():
    v = domain_verdict(stable_levy(0.5), T.power_envelope(0.8, 1), 0.8)
    assert v.status == ROUTE_CONSTANT
    assert all(r.passed and r.margin > 0 for r in v.reasons)


def test_constant_route_smooth_probe_uses_oracles():
    v = domain_verdict(stable_levy(1.5), T.gaussian(1), 0.8)
    assert v.status == ROUTE_CONSTANT
    assert any(r.condition == "twice-differentiable" for r in v.reasons)


def test_variable_zero_route():
    sym = StableLikeSymbol("0.6 + 0.2*sin(x1)", 1)
    afn = VariableOrderFn("0.75 + 0.2*sin(x1)", eps_gap=0.1,
                          modulus=lambda t: 0.2 * t)
    v = domain_verdict(sym, T.gaussian(1), afn)
    assert v.status == ROUTE_VARIABLE_ZERO
    assert all(r.passed and r.margin > 0 for r in v.reasons)
    conds = {r.condition for r in v.reasons}
    assert {"drift-compatibility", "small-jump-moment",
            "sector-or-index-gap", "C1"} <= conds


def test_variable_zero_route_requires_drift_match():
    # same order profile but a foreign drift: the zero-order route is barred
    dens = IsotropicPower(c_alpha(0.6, 1), 0.6, 1)
    model = StateTriplet(b=lambda x: 0.3, measure=lambda x: dens, d=1,
                         bounded_coefficients=2.0)
    afn = VariableOrderFn(0.8, eps_gap=0.1)
    v = domain_verdict(model, T.power_envelope(0.8, 1), afn,
                       grid=[[-1.0], [1.0]])
    assert v.status == NOT_CERTIFIED
    drift = [r for r in v.reasons if r.condition == "drift-compatibility"]
    assert drift and not drift[0].passed


def test_under_order_moment_divergence():
    sym = StableLikeSymbol("0.6 + 0.2*sin(x1)", 1)
    afn = VariableOrderFn("0.55 + 0.2*sin(x1)", eps_gap=0.1,
                          modulus=lambda t: 0.2 * t)
    v = domain_verdict(sym, T.gaussian(1), afn)
    assert v.status == NOT_CERTIFIED
    fails = [r for r in v.reasons if not r.passed]
    assert any(r.detail.startswith("moment condition diverges at x=")
               for r in fails)


def test_variable_c1_route_crossing_one():
    sym = StableLikeSymbol("1.2 + 0.2*sin(x1)", 1)
    afn = VariableOrderFn("1.45 + 0.2*sin(x1)", eps_gap=0.1,
                          modulus=lambda t: 0.2 * t)
    v = domain_verdict(sym, T.gaussian(1), afn)
    assert v.status == ROUTE_VARIABLE_C1
    assert all(r.passed and r.margin > 0 for r in v.reasons)


@pytest.mark.slow
def test_indeterminate_band_status():
    dens = Density(
        lambda y: np.where(np.asarray(y) > 0,
                           np.exp(-np.clip(y, 0.0, None))
                           * np.power(np.clip(np.abs(y), 1e-300, None), -1.5),
                           0.0),
        sing_exponent=0.5, tail=("exponential",), d=1, symmetric=False)
    model = StateTriplet(b=lambda x: 1.0, measure=lambda x: dens, d=1,
                         bounded_coefficients=4.0)
    v = domain_verdict(model, T.gaussian(1),
                       VariableOrderFn(1.11, eps_gap=0.1), grid=[[0.0], [1.0]])
    assert v.status == "not-certified (indeterminate band)"


def test_verdict_monotone_easier_parameters():
    # shrinking eps and raising the probe's declared order never lose a
    # certificate
    sym = StableLikeSymbol("0.6 + 0.2*sin(x1)", 1)

    def verdict(eps, order):
        afn = VariableOrderFn("0.75 + 0.2*sin(x1)", eps_gap=eps,
                              modulus=lambda t: 0.2 * t)
        return domain_verdict(sym, T.power_envelope(order, 1), afn)

    base = verdict(0.1, 0.95)
    assert base.status == ROUTE_VARIABLE_ZERO
    assert verdict(0.05, 0.95).status == ROUTE_VARIABLE_ZERO
    assert verdict(0.1, 0.99).status == ROUTE_VARIABLE_ZERO


def test_bounded_coefficients_flag_required():
    model = StateTriplet(measure=lambda x: IsotropicPower(c_alpha(0.6, 1), 0.6, 1),
                         d=1)
    with pytest.raises(ContractError):
        domain_verdict(model, T.gaussian(1), 0.8, grid=[[0.0]])


def test_verdict_json_serialization():
    v = domain_verdict(stable_levy(0.5), T.power_envelope(0.8, 1), 0.8)
    data = json.loads(v.to_json())
    assert data["status"] == ROUTE_CONSTANT
    assert all({"route", "condition", "passed", "margin", "detail"}
               <= set(r.keys()) for r in data["reasons"])
    assert all(math.isfinite(r["margin"]) for r in data["reasons"])
