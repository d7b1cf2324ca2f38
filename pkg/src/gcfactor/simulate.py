"""Synthetic Gaussian-copula data, the method benchmark, and the COCA
tie-handling comparison."""

import collections
import csv

import numpy as np
from scipy.special import log_ndtr

from .data import ObservedMatrix, mask_random, split_folds, standardized_mse
from .fit import fit_xpca
from .gaussian import coca_impute, fit_coca, fit_pca, pca_impute
from .impute import impute
from .normals import std_normal_cdf, std_normal_quantile

# quadrature rule for marginal means without a closed form; the weights die
# off like exp(-x^2), so 80 nodes saturates double precision
_HERM_X, _HERM_W = np.polynomial.hermite.hermgauss(80)


class GaussianStd:
    """Standard normal marginal: the copula scale is the data scale."""

    def push(self, z):
        return np.array(z, dtype=float)

    def conditional_mean(self, theta, sigma):
        return np.array(theta, dtype=float)

    def __repr__(self):
        return "GaussianStd()"


class Exponential:
    """Exponential marginal with the given rate."""

    def __init__(self, rate=1.0):
        self.rate = float(rate)
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def push(self, z):
        # quantile at Phi(z) is -log(1 - Phi(z))/rate; the survival factor is
        # evaluated in log space so deep upper tails stay finite
        return -log_ndtr(-np.asarray(z, dtype=float)) / self.rate

    def conditional_mean(self, theta, sigma):
        zs = np.asarray(theta, dtype=float)[..., None] \
            + sigma * np.sqrt(2.0) * _HERM_X
        return (self.push(zs) @ _HERM_W) / np.sqrt(np.pi)

    def __repr__(self):
        return "Exponential(rate=%g)" % self.rate


class Binary:
    """Bernoulli marginal: 1 with probability p, a threshold on the z scale."""

    def __init__(self, p=0.5):
        self.p = float(p)
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")
        self.cut = std_normal_quantile(1.0 - self.p)

    def push(self, z):
        return (np.asarray(z, dtype=float) > self.cut).astype(float)

    def conditional_mean(self, theta, sigma):
        return std_normal_cdf((np.asarray(theta, dtype=float) - self.cut) / sigma)

    def __repr__(self):
        return "Binary(p=%g)" % self.p


class MarginalSpec:
    """Column marginals as a cyclic pattern, so one spec covers any width."""

    def __init__(self, pattern):
        self.pattern = list(pattern)
        if not self.pattern:
            raise ValueError("pattern must hold at least one marginal")

    def column(self, j):
        return self.pattern[j % len(self.pattern)]

    def columns(self, n):
        return [self.column(j) for j in range(n)]

    def __repr__(self):
        return "MarginalSpec(%r)" % (self.pattern,)


def named_spec(name):
    """The three benchmark specs: all Gaussian, all exponential, or an even
    mix of Gaussian and fair-coin binary columns."""
    key = str(name).lower()
    if key == "gaussian":
        return MarginalSpec([GaussianStd()])
    if key == "exponential":
        return MarginalSpec([Exponential(1.0)])
    if key == "mixed":
        return MarginalSpec([GaussianStd(), Binary(0.5)])
    raise ValueError("unknown spec %r (gaussian, exponential, mixed)" % name)


def generate(m, n, rank, sigma2, spec, seed):
    """Draw one complete matrix from the low-rank copula model.

    Z = U V^T + sigma*noise with factor entries scaled so the low-rank part
    carries a 1 - sigma2 share of the unit total variance; each column of X
    is its marginal quantile applied to Phi(Z). Returns (data, theta, z)
    where theta = U V^T is kept for underlying-mean scoring.
    """
    m, n, rank = int(m), int(n), int(rank)
    if not 1 <= rank <= min(m, n):
        raise ValueError("rank must lie in [1, min(m, n)]")
    sigma2 = float(sigma2)
    if not 0.0 < sigma2 < 1.0:
        raise ValueError("sigma2 must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((m, rank)) * np.sqrt((1.0 - sigma2) / rank)
    V = rng.standard_normal((n, rank))
    theta = U @ V.T
    z = theta + np.sqrt(sigma2) * rng.standard_normal((m, n))
    x = np.empty_like(z)
    for j in range(n):
        x[:, j] = spec.column(j).push(z[:, j])
    return ObservedMatrix(x), theta, z


def underlying_means(spec, theta, sigma):
    """Data-space conditional means E[X | theta], column by column."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    for j in range(theta.shape[1]):
        out[:, j] = spec.column(j).conditional_mean(theta[:, j], sigma)
    return out


ScenarioRow = collections.namedtuple(
    "ScenarioRow", ["size", "rep", "method", "metric", "split", "mse"])


class ScenarioResult:
    """Flat benchmark table plus run metadata.

    rows hold one ScenarioRow per (size, rep, method, metric, split); a
    failed fit leaves NaN in its rows and an entry in failures instead of
    aborting the run.
    """

    COLUMNS = ScenarioRow._fields

    def __init__(self, rows, reps, seed, failures=None):
        self.rows = [ScenarioRow(*r) for r in rows]
        for row in self.rows:
            if np.isfinite(row.mse) and row.mse < 0:
                raise ValueError("negative mse in %r" % (row,))
        self.reps = int(reps)
        self.seed = seed
        self.failures = list(failures or [])

    def mean_mse(self, method, metric, split, size=None):
        vals = [r.mse for r in self.rows
                if r.method == method and r.metric == metric
                and r.split == split and (size is None or r.size == size)]
        if not vals:
            raise KeyError((method, metric, split, size))
        return float(np.mean(vals))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in self.rows:
                writer.writerow([row.size, row.rep, row.method, row.metric,
                                 row.split, repr(float(row.mse))])

    def __repr__(self):
        return "ScenarioResult(%d rows, reps=%d)" % (len(self.rows), self.reps)


def _fit_and_impute(method, train, rank):
    if method == "pca":
        return pca_impute(fit_pca(train, rank))
    if method == "coca":
        return coca_impute(fit_coca(train, rank))
    if method == "xpca":
        return impute(fit_xpca(train, rank=rank))
    raise ValueError("unknown method %r" % method)


def _draw_instance(size, rank, sigma2, spec, holdout_frac, seed, rep):
    # a draw is rejected when masking leaves some training column with fewer
    # than two distinct values; redrawing keeps the kept masks MCAR among
    # usable ones
    for attempt in range(50):
        key = (seed, size, rep, attempt)
        try:
            data, theta, _ = generate(size, size, rank, sigma2, spec,
                                      seed=key + (0,))
            train, holdout = mask_random(data, holdout_frac, seed=key + (1,))
        except ValueError:
            continue
        return data, theta, train, holdout
    raise RuntimeError(
        "no usable draw for size %d, rep %d after 50 attempts" % (size, rep))


def run_scenario(sizes, spec, holdout_frac=0.5, reps=8, rank=3,
                 methods=("pca", "coca", "xpca"), sigma2=0.25, seed=0):
    """Benchmark the methods on synthetic data.

    For each size and replication: draw a complete square matrix, hold out
    holdout_frac of the entries at random, fit every method at the given
    rank, and score standardized MSE against both the observed data and the
    underlying means, separately on the training and held-out entries.
    Residuals are scaled by the training columns' standard deviations.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 2:
        raise ValueError("sizes must all be at least 2")
    if int(reps) < 1:
        raise ValueError("reps must be at least 1")
    reps = int(reps)
    methods = [str(name).lower() for name in methods]
    if not methods:
        raise ValueError("need at least one method")
    for name in methods:
        if name not in ("pca", "coca", "xpca"):
            raise ValueError("unknown method %r" % name)
    rank = int(rank)
    if rank < 1 or not 0.0 < float(sigma2) < 1.0:
        raise ValueError("rank must be positive and sigma2 in (0, 1)")

    rows = []
    failures = []
    for size in sizes:
        for rep in range(reps):
            data, theta, train, holdout = _draw_instance(
                size, rank, sigma2, spec, holdout_frac, seed, rep)
            means = underlying_means(spec, theta, np.sqrt(sigma2))
            scales = np.array([np.std(train.column_observed(j))
                               for j in range(train.n)])
            for method in methods:
                try:
                    est = _fit_and_impute(method, train, rank)
                except Exception as exc:
                    est = None
                    failures.append((size, rep, method, repr(exc)))
                for metric, reference in (("observed", data.values),
                                          ("mean", means)):
                    for split, scope in (("train", train.mask),
                                         ("holdout", holdout)):
                        if est is None:
                            mse = float("nan")
                        else:
                            mse = standardized_mse(est, reference, scope,
                                                   scales)
                        rows.append((size, rep, method, metric, split, mse))
    return ScenarioResult(rows, reps, seed, failures)


def tie_method_experiment(seed=0, n_folds=20):
    """Holdout MSE of COCA under the two tie conventions, on one mixed
    binary/Gaussian instance (m = n = 100, rank 3, sigma2 = 0.25).

    Observed entries are split into n_folds groups; each group is predicted
    by a model fitted on the rest, once per convention. Returns
    (mse_midpoint, mse_max), pooled over all entries in raw data units, the
    scale the two conventions are conventionally compared on.
    """
    data, _, _ = generate(100, 100, 3, 0.25, named_spec("mixed"),
                          seed=(seed, 0))
    folds = split_folds(data, n_folds, seed=(seed, 1))
    out = {}
    for ties in ("midpoint", "max"):
        sq_sum = 0.0
        count = 0
        for k in range(folds.n_folds):
            hold = folds.holdout_mask(k)
            train = ObservedMatrix(data.values, data.mask & ~hold,
                                   column_names=data.column_names)
            est = coca_impute(fit_coca(train, 3, ties=ties))
            resid = est - data.values
            sq_sum += float(np.sum(resid[hold] ** 2))
            count += int(hold.sum())
        out[ties] = sq_sum / count
    return out["midpoint"], out["max"]
