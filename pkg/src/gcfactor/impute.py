"""Data-space estimates from a fitted interval-censored model: median and
mean imputation, per-entry distributions over the column support, and a
per-column interpolation curve that trades exact means for O(dq + m) cost.

Every estimator works on the latent means theta = U V^T and maps them back
through the column's empirical distribution, so estimates always live inside
the observed support."""

import numpy as np

from .gaussian import coca_impute, pca_impute
from .marginals import EdfVariant, edf_inverse
from .normals import std_normal_cdf, std_normal_quantile

# anchors sit this many sigma beyond the outermost cut: the top/bottom atom
# then holds all but ~1e-19 of the mass, so pinning the anchor value to the
# support limit is exact at double precision
_ANCHOR_SIGMAS = 9.0
# chord cap (in sigma units): quantile-grid gaps wider than this are
# subdivided, and the gap between the grid and each anchor is filled at the
# same spacing, so no linear segment spans a strongly bent region
_MAX_GAP = 0.1


def _require_xpca(model):
    if model.method != "xpca":
        raise ValueError("model was not fitted by xpca")


def _scope_mask(model, scope):
    if scope is None:
        return np.ones((model.m, model.n), dtype=bool)
    scope = np.asarray(scope, dtype=bool)
    if scope.shape != (model.m, model.n):
        raise ValueError("scope mask shape must match the model")
    return scope


class EntryDistribution:
    """Distribution of one entry over its column's observed support."""

    def __init__(self, support, probs):
        support = np.asarray(support, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if support.shape != probs.shape or support.ndim != 1:
            raise ValueError("support and probs must be matching vectors")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        total = float(probs.sum())
        self.renormalized = abs(total - 1.0) > 1e-10
        if self.renormalized:
            probs = probs / total
        self.support = support
        self.probs = probs

    def mean(self):
        return float(self.probs @ self.support)

    def __len__(self):
        return self.support.size


def _column_probs(theta_col, edf, sigma):
    # tiling intervals share endpoints, so the CDF differences telescope to
    # ndtr(+inf) - ndtr(-inf) = 1 with no renormalization
    zs = (edf.z_cuts[None, :] - np.asarray(theta_col, dtype=float)[:, None])
    zs = zs / sigma
    zs[:, 0] = -np.inf
    zs[:, -1] = np.inf
    return np.diff(std_normal_cdf(zs), axis=1)


def entry_distribution(model, i, j):
    """Probability of each support value for entry (i, j)."""
    _require_xpca(model)
    edf = model.marginals[j]
    theta = model.theta()[i, j]
    probs = _column_probs([theta], edf, model.sigma)[0]
    return EntryDistribution(edf.distinct, probs)


def _column_means(theta_col, edf, sigma):
    probs = _column_probs(theta_col, edf, sigma)
    mu = probs @ edf.distinct
    return np.clip(mu, edf.distinct[0], edf.distinct[-1])


def impute_median(model, scope=None):
    """Median estimates: the empirical quantile of Phi(theta) per entry.

    Uses the max-rank EDF with the literal largest-value-not-exceeding
    inverse, so every estimate is an observed value of its column."""
    _require_xpca(model)
    mask = _scope_mask(model, scope)
    theta = model.theta()
    out = np.full(theta.shape, np.nan)
    for j, edf in enumerate(model.marginals):
        rows = mask[:, j]
        if not rows.any():
            continue
        u = std_normal_cdf(theta[rows, j])
        out[rows, j] = edf_inverse(edf, u, EdfVariant.MAX_RANK)
    return out


def impute_mean(model, scope=None):
    """Exact means: support-weighted expectation of each entry distribution,
    clipped to the column support against summation roundoff."""
    _require_xpca(model)
    mask = _scope_mask(model, scope)
    theta = model.theta()
    out = np.full(theta.shape, np.nan)
    for j, edf in enumerate(model.marginals):
        rows = mask[:, j]
        if not rows.any():
            continue
        out[rows, j] = _column_means(theta[rows, j], edf, model.sigma)
    return out


class MeanCurve:
    """Piecewise-linear stand-in for one column's exact mean function.

    grid holds increasing theta nodes; values the exact means there, with
    the end nodes pinned to the support limits. Evaluation clamps beyond
    the grid, matching the saturation of the exact mean."""

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 3:
            raise ValueError("grid and values must be matching vectors (>= 3)")
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(values) < 0.0):
            raise ValueError("curve values must be nondecreasing")
        self.grid = grid
        self.values = values

    def __call__(self, theta):
        return np.interp(theta, self.grid, self.values)


def default_q(m):
    """Interpolation node count: a tenth of the rows, floored at 30."""
    return max(30, int(m) // 10)


def build_mean_curve(model, j, q):
    """Mean-curve nodes for column j: q-point standard-normal quantile grid,
    every gap wider than _MAX_GAP*sigma subdivided (the curve bends on the
    sigma scale around each cut, so chords must stay short relative to it),
    and exact-limit anchors _ANCHOR_SIGMAS*sigma beyond the outermost cuts
    where the curve has flattened onto min/max."""
    _require_xpca(model)
    if q < 3:
        raise ValueError("q must be at least 3")
    edf = model.marginals[j]
    sigma = model.sigma
    cuts = edf.z_cuts
    lo_anchor = cuts[1] - _ANCHOR_SIGMAS * sigma
    hi_anchor = cuts[-2] + _ANCHOR_SIGMAS * sigma

    ell = np.arange(2, q)
    interior = std_normal_quantile((ell - 1.0) / (q - 1.0))
    interior = interior[(interior > lo_anchor) & (interior < hi_anchor)]
    step = _MAX_GAP * sigma
    base = np.concatenate([[lo_anchor], interior, [hi_anchor]])
    fills = [interior]
    for a, b in zip(base[:-1], base[1:]):
        # cap keeps the grid finite when sigma sits near its floor (curve is
        # then a near-step function no interp grid can chase anyway)
        extra = min(int(np.ceil((b - a) / step)) - 1, 512)
        if extra > 0:
            fills.append(np.linspace(a, b, extra + 2)[1:-1])
    inner = np.unique(np.concatenate(fills))

    grid = np.concatenate([[lo_anchor], inner, [hi_anchor]])
    values = np.empty_like(grid)
    values[1:-1] = _column_means(inner, edf, sigma)
    values[0] = edf.distinct[0]
    values[-1] = edf.distinct[-1]
    # exact means are nondecreasing in theta; undo any last-ulp inversions
    values = np.maximum.accumulate(values)
    return MeanCurve(grid, values)


def impute_mean_interp(model, curves=None, q=None, scope=None):
    """Mean estimates via per-column interpolation curves.

    curves, when given, must come from build_mean_curve on this model;
    otherwise they are built with q nodes (default max(30, m/10))."""
    _require_xpca(model)
    if curves is None:
        if q is None:
            q = default_q(model.m)
        curves = [build_mean_curve(model, j, q) for j in range(model.n)]
    if len(curves) != model.n:
        raise ValueError("need one curve per column")
    mask = _scope_mask(model, scope)
    theta = model.theta()
    out = np.full(theta.shape, np.nan)
    for j, curve in enumerate(curves):
        rows = mask[:, j]
        if rows.any():
            out[rows, j] = curve(theta[rows, j])
    return out


def impute(model, estimator="mean-interp", q=None, scope=None):
    """Method-appropriate estimates on the original scale.

    PCA and COCA models each have a single estimator (column-destandardized
    theta; empirical quantile of Phi(theta)); the estimator argument selects
    among the xpca flavors."""
    if model.method == "pca":
        return pca_impute(model)
    if model.method == "coca":
        return coca_impute(model)
    if estimator == "median":
        return impute_median(model, scope=scope)
    if estimator == "mean":
        return impute_mean(model, scope=scope)
    if estimator == "mean-interp":
        return impute_mean_interp(model, q=q, scope=scope)
    raise ValueError("estimator must be median, mean, or mean-interp")
