"""Shared low-rank Gaussian machinery: column transforms, masked SSE
minimization, orthogonalization, and the PCA/COCA imputers."""

import numpy as np

from .data import ObservedMatrix
from .marginals import EdfVariant, edf_inverse, fit_edf
from .normals import std_normal_cdf, std_normal_quantile


class ZMatrix:
    """Latent-scale values on observed entries (NaN elsewhere), mask shared
    with the source data."""

    def __init__(self, values, mask):
        values = np.asarray(values, dtype=float)
        mask = np.asarray(mask, dtype=bool)
        if values.shape != mask.shape:
            raise ValueError("values and mask shapes must match")
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("observed z values must be finite")
        self.values = np.where(mask, values, np.nan)
        self.mask = mask

    @property
    def shape(self):
        return self.values.shape


class FactorModel:
    """Fitted low-rank factorization of the latent Gaussian matrix.

    U is m×k (scores), V is n×k (components), theta = U Vᵀ estimates the
    latent means, sigma the residual scale. marginals carries what the
    method needs to map back to data space: (mean, stddev) pairs for pca,
    per-column empirical distributions for coca/xpca. epsilon is the
    censoring offset (xpca only). info collects fit diagnostics.
    """

    def __init__(self, method, U, V, sigma, marginals, epsilon=None,
                 column_names=None, info=None):
        method = str(method).lower()
        if method not in ("pca", "coca", "xpca"):
            raise ValueError("unknown method %r" % method)
        self.method = method
        self.U = np.asarray(U, dtype=float)
        self.V = np.asarray(V, dtype=float)
        if self.U.ndim != 2 or self.V.ndim != 2 or self.U.shape[1] != self.V.shape[1]:
            raise ValueError("U and V must be 2-d with a shared rank")
        self.sigma = float(sigma)
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        self.marginals = list(marginals)
        if len(self.marginals) != self.V.shape[0]:
            raise ValueError("need one marginal per column")
        self.epsilon = None if epsilon is None else float(epsilon)
        if column_names is None:
            column_names = ["col%d" % j for j in range(self.V.shape[0])]
        self.column_names = list(column_names)
        self.info = dict(info or {})

    @property
    def m(self):
        return self.U.shape[0]

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def rank(self):
        return self.U.shape[1]

    def theta(self):
        return self.U @ self.V.T

    def __repr__(self):
        return "FactorModel(%s, %dx%d, rank=%d, sigma=%.4g)" % (
            self.method, self.m, self.n, self.rank, self.sigma)


def standardize(data):
    """Center and scale each column by its observed mean and population
    stddev. Returns (ZMatrix, list of (mean, stddev))."""
    stats = []
    z = np.array(data.values, dtype=float)
    for j in range(data.n):
        col = data.column_observed(j)
        mu = float(np.mean(col))
        sd = float(np.sqrt(np.mean((col - mu) ** 2)))
        if sd == 0.0:
            raise ValueError("column %d has zero standard deviation" % j)
        z[:, j] = (z[:, j] - mu) / sd
        stats.append((mu, sd))
    return ZMatrix(np.where(data.mask, z, 0.0), data.mask), stats


def coca_transform(data, ties="midpoint"):
    """Map observed values through their empirical CDF to normal scores.

    The midpoint-rank convention keeps every score strictly finite. ties="max"
    ranks tied values at their maximum rank over the same m+1 denominator
    (finite as well, but heavily skewed for discrete columns); it exists for
    comparing tie-handling strategies.
    """
    if ties not in ("midpoint", "max"):
        raise ValueError("ties must be 'midpoint' or 'max'")
    edfs = [fit_edf(data.column_observed(j)) for j in range(data.n)]
    z = np.zeros_like(data.values)
    for j, edf in enumerate(edfs):
        obs = data.mask[:, j]
        idx = np.searchsorted(edf.distinct, data.values[obs, j])
        if ties == "midpoint":
            u = edf.cum_mid[idx]
        else:
            u = np.cumsum(edf.counts)[idx] / (edf.m_obs + 1.0)
        z[obs, j] = std_normal_quantile(u)
    return ZMatrix(z, data.mask), edfs


def _solve_rows(W, Z0, basis, ridge):
    # one normal-equation solve per row of the updated factor:
    # H_i = basisᵀ diag(w_i) basis + ridge I, g_i = basisᵀ (w_i ⊙ z_i)
    k = basis.shape[1]
    H = np.einsum("ij,jk,jl->ikl", W, basis, basis, optimize=True)
    H[:, np.arange(k), np.arange(k)] += ridge
    g = (W * Z0) @ basis
    return np.linalg.solve(H, g[:, :, None])[:, :, 0]


def _masked_sse(Z0, W, U, V):
    R = (Z0 - U @ V.T) * W
    return float(np.sum(R * R))


def fit_gaussian(z, rank, max_sweeps=500, tol=1e-9, ridge=1e-8):
    """Minimize the observed-entry SSE with a rank-`rank` factorization.

    Complete data goes straight through the truncated SVD. With missing
    entries, alternating least squares (exact block solves with a small
    ridge) starts from the SVD of the zero-filled matrix and stops when the
    relative SSE change drops below tol.

    Returns (U, V, sigma, info) where sigma is the residual-scale MLE
    sqrt(SSE / #observed) and info records sweeps, convergence, and SSE.
    """
    values, mask = z.values, z.mask
    m, n = values.shape
    if not 1 <= rank <= min(m, n):
        raise ValueError("rank must lie in [1, min(m, n)]")
    W = mask.astype(float)
    Z0 = np.where(mask, values, 0.0)
    n_obs = int(mask.sum())

    Us, s, Vt = np.linalg.svd(Z0, full_matrices=False)
    U = Us[:, :rank] * s[:rank]
    V = Vt[:rank].T

    if mask.all():
        sse = float(np.sum(s[rank:] ** 2))
        sigma = np.sqrt(sse / n_obs)
        info = {"sweeps": 0, "converged": True, "sse": sse}
        return U, V, sigma, info

    sse = _masked_sse(Z0, W, U, V)
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        U = _solve_rows(W, Z0, V, ridge)
        V = _solve_rows(W.T, Z0.T, U, ridge)
        new_sse = _masked_sse(Z0, W, U, V)
        rel = abs(sse - new_sse) / max(sse, new_sse, 1e-300)
        sse = new_sse
        if rel < tol:
            converged = True
            break
    sigma = np.sqrt(sse / n_obs)
    info = {"sweeps": sweeps, "converged": converged, "sse": sse}
    return U, V, sigma, info


def orthogonalize(U, V):
    """Rotate factors so V has orthonormal columns and U absorbs the
    singular values (columns ordered by nonincreasing norm). The product
    U Vᵀ is unchanged up to roundoff."""
    Qu, Ru = np.linalg.qr(U)
    Qv, Rv = np.linalg.qr(V)
    P, s, Wt = np.linalg.svd(Ru @ Rv.T)
    return (Qu @ P) * s, Qv @ Wt.T


def fit_pca(data, rank, **opts):
    """Standardize columns, factorize, canonicalize."""
    z, stats = standardize(data)
    U, V, sigma, info = fit_gaussian(z, rank, **opts)
    U, V = orthogonalize(U, V)
    return FactorModel("pca", U, V, sigma, stats,
                       column_names=data.column_names, info=info)


def fit_coca(data, rank, ties="midpoint", **opts):
    """Rank-transform columns to normal scores, factorize, canonicalize."""
    z, edfs = coca_transform(data, ties=ties)
    U, V, sigma, info = fit_gaussian(z, rank, **opts)
    U, V = orthogonalize(U, V)
    info["ties"] = ties
    return FactorModel("coca", U, V, sigma, edfs,
                       column_names=data.column_names, info=info)


def pca_impute(model):
    """Estimates on the original scale: theta restored by column stats."""
    if model.method != "pca":
        raise ValueError("model was not fitted by pca")
    theta = model.theta()
    mu = np.array([m0 for m0, _ in model.marginals])
    sd = np.array([s0 for _, s0 in model.marginals])
    return theta * sd + mu


def coca_impute(model):
    """Estimates pulled back through each column's empirical quantile
    function, under the same tie convention the model was fitted with;
    every estimate is an observed value of its column."""
    if model.method != "coca":
        raise ValueError("model was not fitted by coca")
    ties = model.info.get("ties", "midpoint")
    theta = model.theta()
    out = np.empty_like(theta)
    for j, edf in enumerate(model.marginals):
        u = std_normal_cdf(theta[:, j])
        if ties == "max":
            # the max-rank scores live on the over-(m+1) staircase, which
            # tops out at m/(m+1); rescale so the inverse walks the same
            # steps the transform used (the clip cannot change the result)
            u = np.minimum(u * (edf.m_obs + 1.0) / edf.m_obs, 1.0)
            out[:, j] = edf_inverse(edf, u, EdfVariant.MAX_RANK)
        else:
            out[:, j] = edf_inverse(edf, u, EdfVariant.MID_RANK)
    return out
