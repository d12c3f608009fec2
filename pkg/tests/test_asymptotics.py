"""Limit-experiment checks.

References are frozen from closed forms or verified against independent
quadrature; Monte Carlo comparisons run on pinned seed contexts with the
discrepancy convention (3 stderr + 5% model allowance).
"""

import math

import numpy as np
import pytest

from levygen.asymptotics import (
    DEFAULT_T_GRID,
    LimitExperiment,
    generator_reference,
    limit_study,
    maximal_inequality_experiment,
    moment_tail_bound_experiment,
    small_time_generalized_moment,
    sup_step_diagnostic,
    uniform_limit_sweep,
    vague_convergence_experiment,
)
from levygen.errors import ContractError
from levygen.holder import ROUTE_VARIABLE_ZERO, VariableOrderFn, domain_verdict
from levygen.measures import Atoms, GrowthFunction, IsotropicPower, c_alpha
from levygen.simulate import (
    CompoundPoissonModel,
    LevyModel,
    RelativisticModel,
    SDEModel,
    SeedPolicy,
    StableLikeModel,
)
from levygen.symbols import LevyTriplet, StableLikeSymbol
import levygen.testfunctions as T

POL = SeedPolicy(0xA5)


def quadratic_probe():
    # y^2 with derivative oracles, following the catalog batch convention
    def f(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 2:
            return np.sum(arr * arr, axis=1)
        if arr.ndim == 1 and arr.shape[0] != 1:
            return arr * arr
        return float(np.sum(arr * arr))

    return T.TestFunction(
        f, lambda x: 2.0 * np.atleast_1d(np.asarray(x, dtype=float)),
        lambda x: np.array([[2.0]]), False, "y^2", 1)


def sine_probe():
    return T.TestFunction(np.sin, np.cos, lambda x: -np.sin(x), False,
                          "sin", 1, envelope=lambda r: 1.0)


def one_stable():
    return LevyModel(LevyTriplet(measure=IsotropicPower(1 / math.pi, 1.0, 1)))


def half_stable():
    c = c_alpha(0.5, 1)
    return LevyModel(LevyTriplet(measure=IsotropicPower(c, 0.5, 1)))


def two_delta_one():
    return CompoundPoissonModel(Atoms([[1.0]], [2.0]))


def truncated_stable():
    return LevyModel(LevyTriplet(measure=IsotropicPower(1.0, 0.8, 1, r_max=1.0)))


# ---------------------------------------------------------------------------
# experiment plumbing


def test_default_grid_shape():
    assert len(DEFAULT_T_GRID) == 8
    assert DEFAULT_T_GRID[0] == pytest.approx(1e-1)
    assert DEFAULT_T_GRID[-1] == pytest.approx(1e-4)
    assert all(a > b for a, b in zip(DEFAULT_T_GRID, DEFAULT_T_GRID[1:]))
    assert np.allclose(DEFAULT_T_GRID, np.geomspace(1e-1, 1e-4, 8))


def test_experiment_validation():
    with pytest.raises(ContractError):
        LimitExperiment(t_grid=(1e-4, 1e-1))
    with pytest.raises(ContractError):
        LimitExperiment(t_grid=(1e-1, 1e-1))
    with pytest.raises(ContractError):
        LimitExperiment(n=999)
    with pytest.raises(ContractError):
        LimitExperiment(estimator="spline")
    with pytest.raises(ContractError):
        LimitExperiment(seeds=42)


def test_discrepancy_formula():
    rep = limit_study(LimitExperiment(n=1000, seeds=POL),
                      LevyModel(LevyTriplet(b=[1.0])), sine_probe(), 0.0)
    expected = abs(rep.extrapolated - rep.reference) / (
        3.0 * rep.extrapolated_stderr + 0.05 * abs(rep.reference) + 1e-6)
    assert rep.discrepancy == pytest.approx(expected)
    assert rep.noise_term == 3.0 * rep.extrapolated_stderr
    assert rep.allowance_term == 0.05 * abs(rep.reference)


# ---------------------------------------------------------------------------
# generalized moments


def test_drift_model_is_exact():
    # deterministic paths: zero stderr and the analytic difference quotient
    model = LevyModel(LevyTriplet(b=[1.0]))
    exp = LimitExperiment(n=1000, seeds=POL)
    rep = limit_study(exp, model, sine_probe(), 0.0)
    assert rep.passed and rep.discrepancy < 1e-6
    assert rep.extrapolated_stderr == 0.0
    for est, t in zip(rep.table, exp.t_grid):
        assert est.stderr == 0.0
        assert est.mean == math.sin(t) / t


def test_richardson_estimator():
    rep = limit_study(LimitExperiment(n=1000, estimator="richardson", seeds=POL),
                      LevyModel(LevyTriplet(b=[1.0])), sine_probe(), 0.0)
    assert rep.estimator == "richardson"
    assert abs(rep.extrapolated - 1.0) < 1e-6


def test_compound_poisson_reference_is_exact():
    ref = generator_reference(two_delta_one(), T.gaussian(1), 0.0)
    assert ref.exact
    assert ref.value == pytest.approx(2.0 * (math.exp(-1.0) - 1.0), abs=1e-15)


def test_compound_poisson_limit_study():
    rep = limit_study(LimitExperiment(n=100_000, seeds=POL),
                      two_delta_one(), T.gaussian(1), 0.0, ctx=(1,))
    assert rep.passed
    assert rep.discrepancy < 1.0


def test_half_stable_zero_order_reference():
    # frozen from an independent scipy quadrature of 2 c int f(y) y^{-1.5} dy
    ref = generator_reference(half_stable(), T.power_envelope(0.8, 1), 0.0)
    assert ref.value == pytest.approx(1.2407649225444142, rel=1e-9)


def test_half_stable_limit_study():
    rep = limit_study(LimitExperiment(n=200_000, seeds=POL),
                      half_stable(), T.power_envelope(0.8, 1), 0.0, ctx=(2,))
    assert rep.passed


def test_unbounded_probe_needs_certificate():
    with pytest.raises(ContractError, match="There exist a compact set"):
        small_time_generalized_moment(truncated_stable(), quadratic_probe(),
                                      0.0, 1e-2, 1000, POL)


def test_growth_certificate_admits_unbounded_probe():
    # jumps are capped at radius 1, so any polynomial growth integral is zero
    est = small_time_generalized_moment(
        truncated_stable(), quadratic_probe(), 0.0, 1e-3, 200_000, POL,
        ctx=(20,), growth=GrowthFunction(poly_p=2.0))
    m2 = 2.0 / 1.2  # second small-jump moment of the truncated spec
    assert abs(est.mean - m2) < 3.5 * est.stderr + 0.05 * m2


def test_growth_certificate_divergent_integral_rejected():
    with pytest.raises(ContractError, match="diverges"):
        small_time_generalized_moment(half_stable(), quadratic_probe(),
                                      0.0, 1e-2, 1000, POL,
                                      growth=GrowthFunction(poly_p=2.0))


def test_stopped_quadratic_matches_second_moment():
    est = small_time_generalized_moment(
        truncated_stable(), quadratic_probe(), 0.0, 1e-3, 200_000, POL,
        ctx=(3,), stopped_in=(0.0, 100.0))
    ref = generator_reference(truncated_stable(), quadratic_probe(), 0.0)
    assert ref.value == pytest.approx(2.0 / 1.2, rel=1e-8)
    assert abs(est.mean - ref.value) < 3.5 * est.stderr


def test_explicit_reference_wins():
    rep = limit_study(LimitExperiment(n=1000, seeds=POL),
                      LevyModel(LevyTriplet(b=[1.0])), sine_probe(), 0.0,
                      reference=(2.0, 0.1))
    assert rep.reference == 2.0 and rep.reference_error == 0.1
    assert not rep.passed


def test_sde_reference_is_shifted_difference():
    # constant sigma pushes the atom: L f(x) = lambda (f(x + 2) - f(x))
    sde = SDEModel(np.array([[2.0]]), two_delta_one())
    ref = generator_reference(sde, T.gaussian(1), 0.0)
    assert ref.value == pytest.approx(2.0 * (math.exp(-4.0) - 1.0), abs=1e-14)


def test_sde_limit_study():
    sde = SDEModel(np.array([[2.0]]), two_delta_one())
    rep = limit_study(LimitExperiment(n=200_000, seeds=POL), sde,
                      T.gaussian(1), 0.0, ctx=(17,))
    assert rep.passed


def test_sde_symmetric_levy_pushforward_reference():
    sde = SDEModel(np.array([[2.0]]), one_stable())
    ref = generator_reference(sde, T.gaussian(1), 0.0)
    scaled = LevyModel(LevyTriplet(measure=IsotropicPower(2 / math.pi, 1.0, 1)))
    direct = generator_reference(scaled, T.gaussian(1), 0.0)
    assert ref.value == pytest.approx(direct.value, rel=1e-6)


def test_models_without_reference_route():
    rel = RelativisticModel(1.0, 1.0, d=1)
    with pytest.raises(ContractError, match="reference"):
        generator_reference(rel, T.gaussian(1), 0.0)
    sde = SDEModel(lambda x: np.array([[1.0]]), two_delta_one(), d=1,
                   sigma_bound=1.0, sigma_lipschitz=0.0)
    with pytest.raises(ContractError, match="reference"):
        generator_reference(sde, T.gaussian(1), 0.0)


# ---------------------------------------------------------------------------
# vague convergence


def test_vague_one_stable_interval():
    rep = vague_convergence_experiment(
        one_stable(), 0.0, ("interval", 1.0, 2.0),
        t_grid=np.geomspace(1e-1, 1e-3, 8), n=1_000_000, seeds=POL, ctx=(4,))
    assert rep.reference == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-8)
    assert rep.passed


def test_vague_compound_poisson():
    rep = vague_convergence_experiment(
        two_delta_one(), 0.0, ("interval", 0.5, 1.5),
        t_grid=np.geomspace(1e-1, 1e-3, 8), n=200_000, seeds=POL, ctx=(5,))
    assert rep.reference == 2.0
    assert rep.passed


def test_vague_truncated_far_set_is_exact_zero():
    rep = vague_convergence_experiment(truncated_stable(), 0.0,
                                       ("interval", 10.0, 11.0),
                                       n=10_000, seeds=POL, ctx=(6,))
    assert rep.reference == 0.0
    assert rep.extrapolated == 0.0
    assert rep.discrepancy == 0.0 and rep.passed


def test_vague_boundary_atom_rejected():
    with pytest.raises(ContractError, match="boundary"):
        vague_convergence_experiment(two_delta_one(), 0.0,
                                     ("interval", 0.5, 1.0), n=1000, seeds=POL)
    with pytest.raises(ContractError, match="boundary"):
        vague_convergence_experiment(two_delta_one(), 0.0,
                                     ("annulus", 1.0, 2.0), n=1000, seeds=POL)


def test_vague_box_regions():
    rep = vague_convergence_experiment(
        two_delta_one(), 0.0, ("box", [0.5], [1.5]),
        t_grid=(1e-2, 1e-3), n=50_000, seeds=POL, ctx=(7,))
    assert rep.reference == 2.0
    with pytest.raises(ContractError, match="boundary"):
        vague_convergence_experiment(two_delta_one(), 0.0,
                                     ("box", [1.0], [2.0]), n=1000, seeds=POL)
    with pytest.raises(ContractError, match="box"):
        vague_convergence_experiment(one_stable(), 0.0, ("box", [1.0], [2.0]),
                                     n=1000, seeds=POL)


# ---------------------------------------------------------------------------
# maximal inequality


def test_maximal_inequality_one_stable():
    rep = maximal_inequality_experiment(one_stable(), 0.0, n=50_000,
                                        seeds=POL, ctx=(8,))
    assert rep.bound_slope == pytest.approx(-1.0, abs=1e-9)
    assert abs(rep.slope - rep.bound_slope) <= 0.15
    assert rep.max_ratio <= 50.0
    assert rep.checks() == {"slope_ok": True, "ratio_ok": True}
    assert rep.rates.shape == (len(rep.r_grid), len(rep.t_grid))
    assert np.all(rep.rates >= 0)
    # limsup proxy is the max over the three smallest t
    assert np.allclose(rep.estimates, rep.rates[:, -3:].max(axis=1))


def test_maximal_inequality_compound_poisson_split():
    rep = maximal_inequality_experiment(two_delta_one(), 0.0,
                                        r_grid=[0.5, 1.5], n=50_000,
                                        seeds=POL, ctx=(9,))
    # one unit jump crosses r = 0.5; r = 1.5 needs two jumps and vanishes
    assert abs(rep.estimates[0] - 2.0) < 1.0
    assert rep.estimates[1] < 0.1
    assert np.all(np.isfinite(rep.bounds))


def test_maximal_inequality_brownian_rates_vanish():
    bm = LevyModel(LevyTriplet(Q=[[1.0]]))
    rep = maximal_inequality_experiment(bm, 0.0, r_grid=[1.0, 2.0],
                                        t_grid=np.geomspace(1e-2, 1e-4, 4),
                                        n=20_000, seeds=POL, ctx=(10,))
    assert np.all(rep.estimates == 0.0)
    assert math.isnan(rep.slope)
    assert rep.checks()["slope_ok"] and rep.checks()["ratio_ok"]


def test_maximal_inequality_rejects_bad_r():
    with pytest.raises(ContractError):
        maximal_inequality_experiment(one_stable(), 0.0, r_grid=[0.0, 1.0],
                                      n=1000, seeds=POL)


def test_step_halving_diagnostic():
    d = sup_step_diagnostic(one_stable(), 0.0, 1.0, 1e-2, 50_000, POL, ctx=(11,))
    assert d["resolved"]
    assert d["rate"] > 0 and d["refined_rate"] > 0


# ---------------------------------------------------------------------------
# tail-moment bound


def test_tail_bound_half_stable():
    rep = moment_tail_bound_experiment(half_stable(), 0.0, 0.3, 1.0,
                                       n=500_000, seeds=POL, ctx=(12,))
    assert rep.reference == pytest.approx(10.0 * c_alpha(0.5, 1), rel=1e-6)
    assert not rep.reference_diverged
    assert rep.margin > 0
    assert rep.passed


def test_tail_bound_compound_poisson_exact_reference():
    rep = moment_tail_bound_experiment(two_delta_one(), 0.0, 1.0, 0.5,
                                       n=200_000, seeds=POL, ctx=(13,))
    assert rep.reference == 2.0
    assert rep.tail_term == pytest.approx(0.5 * 2.0)
    assert rep.passed


def test_tail_bound_truncated_reference_zero():
    rep = moment_tail_bound_experiment(truncated_stable(), 0.0, 0.5, 2.0,
                                       n=10_000, seeds=POL, ctx=(14,))
    assert rep.reference == 0.0
    assert rep.passed


def test_tail_bound_divergent_reference_flagged():
    # order equal to the stability index: the tail integral log-diverges
    rep = moment_tail_bound_experiment(half_stable(), 0.0, 0.5, 1.0,
                                       n=10_000, seeds=POL, ctx=(15,))
    assert rep.reference_diverged
    assert rep.passed is None
    assert len(rep.table) == len(rep.t_grid)


def test_tail_bound_validation():
    with pytest.raises(ContractError):
        moment_tail_bound_experiment(half_stable(), 0.0, 0.0, 1.0, n=1000,
                                     seeds=POL)
    with pytest.raises(ContractError):
        moment_tail_bound_experiment(half_stable(), 0.0, 0.3, -1.0, n=1000,
                                     seeds=POL)


# ---------------------------------------------------------------------------
# uniform sweeps


def variable_order_setup():
    model = StableLikeModel("0.6 + 0.2*sin(x1)", d=1)
    afn = VariableOrderFn("0.75 + 0.2*sin(x1)", eps_gap=0.1,
                          modulus=lambda t: 0.2 * t)
    return model, afn


def test_uniform_sweep_certifies_and_passes():
    model, afn = variable_order_setup()
    rep = uniform_limit_sweep(model, T.holder_pair(0.95, 1),
                              np.linspace(-4, 4, 5).reshape(-1, 1),
                              alphafn=afn, n=20_000, seeds=POL, ctx=(16,))
    assert rep.verdict.status == ROUTE_VARIABLE_ZERO
    assert rep.passed
    assert rep.sup_curve.shape == (len(rep.t_grid),)
    assert np.all(rep.noise_floor >= 0)


def test_uniform_sweep_zero_probe_identically_zero():
    def zf(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 2 or (arr.ndim == 1 and arr.shape[0] != 1):
            return np.zeros(arr.shape[0])
        return 0.0

    zero = T.TestFunction(zf, lambda x: np.zeros(1), lambda x: np.zeros((1, 1)),
                          True, "zero", 1, envelope=lambda r: 0.0)
    model, afn = variable_order_setup()
    rep = uniform_limit_sweep(model, zero, np.linspace(-1, 1, 3).reshape(-1, 1),
                              alphafn=afn, n=1000, seeds=POL, ctx=(18,))
    assert np.all(rep.sup_curve == 0.0)
    assert rep.passed


def test_uniform_sweep_requires_certificate():
    model = StableLikeModel("0.6 + 0.2*sin(x1)", d=1)
    low = VariableOrderFn("0.55 + 0.2*sin(x1)", eps_gap=0.1,
                          modulus=lambda t: 0.2 * t)
    with pytest.raises(ContractError, match="verdict"):
        uniform_limit_sweep(model, T.gaussian(1),
                            np.linspace(-2, 2, 3).reshape(-1, 1),
                            alphafn=low, n=1000, seeds=POL)


def test_uniform_sweep_accepts_precomputed_verdict():
    model, afn = variable_order_setup()
    states = np.linspace(-1, 1, 3).reshape(-1, 1)
    v = domain_verdict(StableLikeSymbol(model.gamma, 1), T.gaussian(1), afn,
                       grid=states)
    rep = uniform_limit_sweep(model, T.gaussian(1), states, alphafn=afn,
                              t_grid=(1e-2, 1e-3, 1e-4), n=2000, seeds=POL,
                              ctx=(19,), verdict=v)
    assert rep.verdict is v
