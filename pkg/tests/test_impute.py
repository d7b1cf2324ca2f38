"""Imputation tests: the four-value reference column with hand-checked
masses, saturation limits, quadrature cross-checks, distribution telescoping
on fitted models, monotonicity, support bounds, and interpolation accuracy
against the exact mean."""

import numpy as np
import pytest

from _support import planted
from gcfactor.fit import fit_xpca
from gcfactor.gaussian import FactorModel, fit_coca
from gcfactor.impute import (
    EntryDistribution,
    MeanCurve,
    build_mean_curve,
    default_q,
    entry_distribution,
    impute,
    impute_mean,
    impute_mean_interp,
    impute_median,
)
from gcfactor.marginals import fit_edf, global_epsilon
from gcfactor.normals import std_normal_pdf, std_normal_quantile


def reference_column():
    return np.repeat([1.0, 2.0, 3.0, 4.0], [70, 301, 430, 199])


def theta_model(thetas, column, sigma=1.0):
    """Single-column model whose latent means are exactly `thetas`."""
    edf = fit_edf(column)
    U = np.asarray(thetas, dtype=float).reshape(-1, 1)
    V = np.ones((1, 1))
    return FactorModel("xpca", U, V, sigma, [edf],
                       epsilon=global_epsilon([edf]))


def test_entry_distribution_matches_reference_masses():
    model = theta_model([0.0], reference_column())
    dist = entry_distribution(model, 0, 0)
    assert np.array_equal(dist.support, [1.0, 2.0, 3.0, 4.0])
    ref = np.array([0.070, 0.301, 0.430, 0.199])
    assert np.max(np.abs(dist.probs - ref)) <= 5e-16
    assert not dist.renormalized
    assert abs(dist.probs.sum() - 1.0) <= 1e-10


def test_distribution_saturates_to_extreme_atom():
    model = theta_model([10.0, -10.0], reference_column())
    hi = entry_distribution(model, 0, 0)
    lo = entry_distribution(model, 1, 0)
    assert hi.probs[-1] >= 1.0 - 1e-12
    assert lo.probs[0] >= 1.0 - 1e-12


def test_binary_probability_against_quadrature():
    column = np.repeat([0.0, 1.0], [70, 30])
    theta = std_normal_quantile(0.3)
    model = theta_model([theta], column)
    dist = entry_distribution(model, 0, 0)
    assert 0.0 < dist.probs[0] < 1.0
    cut = std_normal_quantile(0.7)
    t = np.linspace(theta - 14.0, cut, 400001)
    quad = np.trapezoid(std_normal_pdf(t - theta), t)
    assert abs(dist.probs[0] - quad) <= 1e-8 * quad


def test_fitted_model_distributions_telescope():
    data, _ = planted(40, 12, 2, 0.5, seed=3, missing=0.2, kinds="trinary")
    model = fit_xpca(data, rank=2)
    worst = 0.0
    for i in range(model.m):
        for j in range(model.n):
            dist = entry_distribution(model, i, j)
            assert not dist.renormalized
            worst = max(worst, abs(dist.probs.sum() - 1.0))
    assert worst <= 1e-10


def test_median_follows_quantile_convention():
    model = theta_model([0.0, 10.0, -10.0], reference_column())
    est = impute_median(model)
    assert est[0, 0] == 2.0
    assert est[1, 0] == 4.0
    assert est[2, 0] == 1.0


def test_mean_reference_value():
    model = theta_model([0.0], reference_column())
    est = impute_mean(model)
    assert abs(est[0, 0] - 2.758) <= 1e-12


def test_mean_saturates_to_support_limits():
    model = theta_model([12.0, -12.0], reference_column())
    est = impute_mean(model)
    assert abs(est[0, 0] - 4.0) <= 1e-12
    assert abs(est[1, 0] - 1.0) <= 1e-12


def test_mean_and_median_nondecreasing_in_theta():
    grid = np.linspace(-6.0, 6.0, 301)
    model = theta_model(grid, reference_column())
    med = impute_median(model)[:, 0]
    mu = impute_mean(model)[:, 0]
    assert np.all(np.diff(med) >= 0.0)
    assert np.all(np.diff(mu) >= -1e-12)


def test_binary_mean_is_probability_of_one():
    column = np.repeat([0.0, 1.0], [60, 40])
    model = theta_model([0.3], column)
    dist = entry_distribution(model, 0, 0)
    est = impute_mean(model)
    assert abs(est[0, 0] - dist.probs[1]) <= 1e-15
    assert 0.0 <= est[0, 0] <= 1.0


def test_estimates_stay_inside_support():
    data, _ = planted(50, 9, 2, 0.5, seed=7, missing=0.3, kinds="trinary")
    model = fit_xpca(data, rank=2)
    for est in (impute_median(model), impute_mean(model),
                impute_mean_interp(model)):
        for j, edf in enumerate(model.marginals):
            col = est[:, j]
            assert np.all(col >= edf.distinct[0] - 1e-12)
            assert np.all(col <= edf.distinct[-1] + 1e-12)


def test_mean_curve_shape_and_anchors():
    model = theta_model([0.0], reference_column())
    curve = build_mean_curve(model, 0, 3)
    assert np.all(np.diff(curve.grid) > 0.0)
    assert np.any(curve.grid == 0.0)
    assert curve.values[0] == 1.0
    assert curve.values[-1] == 4.0
    assert np.all(np.diff(curve.values) >= 0.0)
    with pytest.raises(ValueError):
        build_mean_curve(model, 0, 2)


def test_mean_curve_nodes_carry_exact_means():
    model = theta_model([0.0], reference_column(), sigma=0.7)
    curve = build_mean_curve(model, 0, 12)
    inner = curve.grid[1:-1]
    exact = impute_mean(theta_model(inner, reference_column(), sigma=0.7))[:, 0]
    assert np.max(np.abs(curve(inner) - exact)) <= 1e-12


def test_mean_curve_clamps_beyond_anchors():
    model = theta_model([0.0], reference_column())
    curve = build_mean_curve(model, 0, 8)
    assert curve(curve.grid[0] - 5.0) == 1.0
    assert curve(curve.grid[-1] + 5.0) == 4.0


def test_interpolated_mean_tracks_exact_mean():
    data, _ = planted(200, 12, 3, 0.5, seed=11, missing=0.2, kinds="trinary")
    model = fit_xpca(data, rank=3)
    exact = impute_mean(model)
    approx = impute_mean_interp(model, q=30)
    sds = np.array([np.std(data.column_observed(j)) for j in range(data.n)])
    err = np.max(np.abs(approx - exact) / sds, axis=0)
    assert float(err.max()) < 0.01


def test_default_q_floor_and_scaling():
    assert default_q(50) == 30
    assert default_q(299) == 30
    assert default_q(1000) == 100


def test_scope_restricts_output():
    data, _ = planted(20, 6, 2, 0.5, seed=13)
    model = fit_xpca(data, rank=2)
    scope = np.zeros((20, 6), dtype=bool)
    scope[3, 2] = True
    est = impute_mean(model, scope=scope)
    assert np.isfinite(est[3, 2])
    assert np.isnan(est[0, 0])
    assert np.count_nonzero(np.isfinite(est)) == 1


def test_dispatch_covers_every_method():
    data, _ = planted(25, 8, 2, 0.5, seed=17)
    xp = fit_xpca(data, rank=2)
    co = fit_coca(data, 2)
    for name in ("median", "mean", "mean-interp"):
        est = impute(xp, name)
        assert est.shape == (25, 8)
        assert np.all(np.isfinite(est))
    assert np.allclose(impute(co), impute(co, "median"))
    with pytest.raises(ValueError):
        impute(xp, "mode")
    with pytest.raises(ValueError):
        impute_mean(co)


def test_distribution_validation():
    with pytest.raises(ValueError):
        EntryDistribution([1.0, 2.0], [0.5, -0.5])
    d = EntryDistribution([1.0, 2.0], [0.25, 0.25])
    assert d.renormalized
    assert abs(d.probs.sum() - 1.0) <= 1e-15
    with pytest.raises(ValueError):
        MeanCurve([0.0, 1.0, 0.5], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        MeanCurve([0.0, 1.0, 2.0], [1.0, 0.5, 3.0])
