"""Interval-censored Gaussian likelihood: value and analytic derivatives.

Each observed entry contributes -log P(l < Z <= r) with Z ~ N(theta_ij,
sigma^2). Everything reduces to three ratios per entry, with x = (l-theta)/s,
y = (r-theta)/s, p = Phi(y) - Phi(x):

    t1 = (phi(y) - phi(x)) / p
    t2 = (y phi(y) - x phi(x)) / p
    t3 = (y^3 phi(y) - x^3 phi(x)) / p

    d(entry loss)/dtheta      = t1 / sigma
    d2(entry loss)/dtheta2    = (t1^2 + t2) / sigma^2
    d(total loss)/dsigma      = sum t2 / sigma
    d2(total loss)/dsigma2    = sum (t2^2 + t3 - 2 t2) / sigma^2

When both endpoints sit in the same tail the direct CDF difference cancels
catastrophically, so p and every ratio are evaluated in log space there.
Terms like y*phi(y) at infinite endpoints take their analytic limit 0.
"""

import numpy as np
from scipy.special import log_ndtr, ndtr

from .marginals import _value_indices
from .normals import IntervalUnderflowError

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

# same-tail switch: beyond this standardized distance the direct CDF
# difference starts losing digits, well before it underflows
_SIDE = 2.0


class BoundsMatrix:
    """Latent censoring intervals per observed entry (NaN where unobserved)."""

    def __init__(self, lower, upper, mask):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)
        if not (self.lower.shape == self.upper.shape == self.mask.shape):
            raise ValueError("lower, upper, mask shapes must match")
        if np.any(~(self.lower[self.mask] < self.upper[self.mask])):
            raise ValueError("bounds must satisfy lower < upper on observed entries")

    @property
    def shape(self):
        return self.mask.shape


def build_bounds(data, edfs, eps):
    """Censoring interval for every observed entry from its column's
    empirical distribution."""
    m, n = data.values.shape
    lower = np.full((m, n), np.nan)
    upper = np.full((m, n), np.nan)
    for j, edf in enumerate(edfs):
        obs = data.mask[:, j]
        if not obs.any():
            continue
        idx = _value_indices(edf, data.values[obs, j])
        cuts = edf.z_cuts
        # eps only participates through its contract: below every value gap,
        # so the backward evaluation lands exactly one cut down
        if not 0.0 < eps < float(np.min(np.diff(edf.distinct))):
            raise ValueError("eps must be positive and below the smallest value gap")
        lower[obs, j] = cuts[idx]
        upper[obs, j] = cuts[idx + 1]
    return BoundsMatrix(lower, upper, data.mask)


class DerivativeWorkspace:
    """Entry-wise pieces of the censored likelihood at one (theta, sigma).

    Arrays are m×n with zeros at unobserved entries: logp (log interval
    probability), A (d loss / d theta), D2 (d2 loss / d theta2), T2/T3
    (scale-derivative ratios).
    """

    __slots__ = ("logp", "A", "D2", "T2", "T3", "sigma", "mask")

    def __init__(self, logp, A, D2, T2, T3, sigma, mask):
        self.logp = logp
        self.A = A
        self.D2 = D2
        self.T2 = T2
        self.T3 = T3
        self.sigma = sigma
        self.mask = mask

    def nll(self):
        return -float(np.sum(self.logp))

    def row_nll(self):
        return -np.sum(self.logp, axis=1)

    def col_nll(self):
        return -np.sum(self.logp, axis=0)


def _log_phi(x):
    # log density; -inf at +-inf
    out = np.full_like(x, -np.inf)
    finite = np.isfinite(x)
    out[finite] = -0.5 * x[finite] ** 2 - _LOG_SQRT_2PI
    return out


def _log_xkphi(x, k):
    # log(x^k * phi(x)) for x > 0, with the x = +inf limit 0 mapped to -inf
    out = np.full_like(x, -np.inf)
    finite = np.isfinite(x)
    xf = x[finite]
    out[finite] = k * np.log(xf) - 0.5 * xf ** 2 - _LOG_SQRT_2PI
    return out


def _log_diff(hi, lo):
    # log(exp(hi) - exp(lo)) elementwise, hi >= lo; equal args give -inf
    with np.errstate(invalid="ignore"):
        d = lo - hi
    d = np.where(np.isneginf(lo), -np.inf, d)
    with np.errstate(divide="ignore"):
        return hi + np.log1p(-np.exp(d))


def _phi(x):
    out = np.zeros_like(x)
    finite = np.isfinite(x)
    out[finite] = np.exp(-0.5 * x[finite] ** 2 - _LOG_SQRT_2PI)
    return out


def _xkphi(x, k):
    # x^k * phi(x) with the limit 0 at infinite endpoints; past |x|=40 the
    # density is a hard zero, so cap the polynomial factor to dodge inf*0
    out = np.zeros_like(x)
    finite = np.isfinite(x)
    xf = np.clip(x[finite], -40.0, 40.0)
    out[finite] = xf ** k * np.exp(-0.5 * xf ** 2 - _LOG_SQRT_2PI)
    return out


def compute_workspace(theta, sigma, bounds, derivs=True, on_underflow="raise"):
    """Evaluate logp (and, with derivs, the t-ratios) on every observed entry.

    Raises IntervalUnderflowError, naming an offending entry, if any interval
    probability is flush zero even in log space. With on_underflow="inf" the
    workspace comes back with logp = -inf at the bad entries instead, so a
    line search can treat the point as a rejected step.
    """
    sigma = float(sigma)
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    theta = np.asarray(theta, dtype=float)
    mask = bounds.mask
    if theta.shape != bounds.shape:
        raise ValueError("theta shape must match bounds")

    with np.errstate(invalid="ignore"):
        x = (bounds.lower - theta) / sigma
        y = (bounds.upper - theta) / sigma
    x = np.where(np.isneginf(bounds.lower), -np.inf, x)
    y = np.where(np.isposinf(bounds.upper), np.inf, y)
    # unobserved entries: park on a harmless interval
    x = np.where(mask, x, -1.0)
    y = np.where(mask, y, 1.0)

    upper_tail = x >= _SIDE
    lower_tail = y <= -_SIDE
    tail = upper_tail | lower_tail
    body = ~tail

    logp = np.zeros(bounds.shape)
    A = np.zeros(bounds.shape)
    D2 = np.zeros(bounds.shape)
    T2 = np.zeros(bounds.shape)
    T3 = np.zeros(bounds.shape)

    if np.any(body):
        xb, yb = x[body], y[body]
        p = ndtr(yb) - ndtr(xb)
        with np.errstate(divide="ignore"):
            logp[body] = np.log(p)
        if derivs:
            good = p > 0
            pd = np.where(good, p, 1.0)
            t1 = (_phi(yb) - _phi(xb)) / pd
            t2 = (_xkphi(yb, 1) - _xkphi(xb, 1)) / pd
            t3 = (_xkphi(yb, 3) - _xkphi(xb, 3)) / pd
            A[body] = t1 / sigma
            D2[body] = (t1 * t1 + t2) / sigma ** 2
            T2[body] = t2
            T3[body] = t3

    if np.any(tail):
        xt = np.where(upper_tail[tail], x[tail], -y[tail])
        yt = np.where(upper_tail[tail], y[tail], -x[tail])
        sign = np.where(upper_tail[tail], -1.0, 1.0)
        lp = _log_diff(log_ndtr(-xt), log_ndtr(-yt))
        logp[tail] = lp
        if derivs:
            t1 = sign * np.exp(_log_diff(_log_phi(xt), _log_phi(yt)) - lp)
            t2 = -np.exp(_log_diff(_log_xkphi(xt, 1), _log_xkphi(yt, 1)) - lp)
            t3 = -np.exp(_log_diff(_log_xkphi(xt, 3), _log_xkphi(yt, 3)) - lp)
            A[tail] = t1 / sigma
            D2[tail] = (t1 * t1 + t2) / sigma ** 2
            T2[tail] = t2
            T3[tail] = t3

    bad = mask & (np.isneginf(logp) | np.isnan(logp))
    if np.any(bad):
        if on_underflow == "inf":
            logp[bad] = -np.inf
            if derivs:
                for arr in (A, D2, T2, T3):
                    arr[bad] = 0.0
        else:
            i, j = np.argwhere(bad)[0]
            raise IntervalUnderflowError(
                "interval probability underflowed at entry (%d, %d)" % (i, j)
            )

    zero = ~mask
    for arr in (logp, A, D2, T2, T3):
        arr[zero] = 0.0
    return DerivativeWorkspace(logp, A, D2, T2, T3, sigma, mask)


def nll(theta, sigma, bounds):
    """Total negative log-likelihood over observed entries."""
    return compute_workspace(theta, sigma, bounds, derivs=False).nll()


def _scalar_bounds(lower, upper):
    return BoundsMatrix(np.array([[lower]]), np.array([[upper]]),
                        np.ones((1, 1), dtype=bool))


def entry_dtheta(iv, theta, sigma):
    """d/dtheta of one entry's loss -log P(l < Z <= r)."""
    ws = compute_workspace(np.array([[float(theta)]]), sigma,
                           _scalar_bounds(iv[0], iv[1]))
    return float(ws.A[0, 0])


def entry_d2theta(iv, theta, sigma):
    """Second theta-derivative of one entry's loss."""
    ws = compute_workspace(np.array([[float(theta)]]), sigma,
                           _scalar_bounds(iv[0], iv[1]))
    return float(ws.D2[0, 0])


def grad_sigma(theta, sigma, bounds, workspace=None):
    ws = workspace or compute_workspace(theta, sigma, bounds)
    return float(np.sum(ws.T2)) / ws.sigma


def hess_sigma(theta, sigma, bounds, workspace=None):
    ws = workspace or compute_workspace(theta, sigma, bounds)
    return float(np.sum(ws.T2 * ws.T2 + ws.T3 - 2.0 * ws.T2)) / ws.sigma ** 2


def grad_factors(U, V, sigma, bounds, workspace=None):
    """(d NLL/dU, d NLL/dV) = (A V, A^T U); unobserved entries contribute 0."""
    ws = workspace or compute_workspace(U @ V.T, sigma, bounds)
    return ws.A @ V, ws.A.T @ U


def row_hessian_u(V, workspace, i):
    """Hessian of the loss in U's row i: V^T diag(D2 row) V."""
    d = workspace.D2[i]
    return (V * d[:, None]).T @ V


def row_hessian_v(U, workspace, j):
    """Hessian of the loss in V's row j: U^T diag(D2 column) U."""
    d = workspace.D2[:, j]
    return (U * d[:, None]).T @ U


def batched_row_hessians(basis, D2, axis):
    """All row Hessians at once: stacked k×k matrices.

    axis=0 treats each row of D2 against basis=V (U-rows); axis=1 uses the
    columns of D2 against basis=U (V-rows).
    """
    D = D2 if axis == 0 else D2.T
    return np.einsum("ij,jk,jl->ikl", D, basis, basis, optimize=True)
