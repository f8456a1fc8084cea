"""Gaussian-process surrogate core.

Covariance model: Sigma = alpha * V(theta) with the anisotropic squared
exponential

    v_ij = exp( - sum_k (x_ik - x_jk)^2 / exp(theta_k)^2 )

where theta_k are per-dimension log range parameters.  The mean is a linear
model X beta (constant by default).  Four negative log likelihoods over
theta are provided: profile, REML, ridge-regularized REML, and the Bayesian
integrated likelihood with a Normal prior on the theta_k.

All linear algebra goes through Cholesky factors; explicit inverses are
never formed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

__all__ = [
    "GpDesign",
    "GpFit",
    "covariance_matrix",
    "cholesky_with_nugget",
    "gls_beta",
    "nll_profile",
    "nll_reml",
    "nll_reml_regularized",
    "nll_bayes",
    "bayes_log_posterior",
    "fit_reml",
    "hessian_nu_estimate",
]

NUGGET_START = 1e-8
NUGGET_MAX = 1e-4
THETA_BOUNDS = (-10.0, 10.0)


class FactorizationError(RuntimeError):
    """Covariance matrix not factorizable even after nugget escalation."""


@dataclass(frozen=True)
class GpDesign:
    """Input design, mean-model design matrix, and outputs.

    ``standardize`` rescales each input column to zero mean / unit variance
    before distance computation; the transform is stored so predictions at
    new points use the same coordinates.
    """

    S: np.ndarray  # (n, K) input locations
    Z: np.ndarray  # (n,) outputs
    X: np.ndarray | None = None  # (n, q) mean design, defaults to ones
    standardize: bool = False

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        Z = np.asarray(self.Z, dtype=float).ravel()
        n = S.shape[0]
        if Z.size != n:
            raise ValueError(f"design has {n} rows but {Z.size} outputs")
        X = self.X
        if X is None:
            X = np.ones((n, 1))
        else:
            X = np.asarray(X, dtype=float)
            if X.ndim == 1:
                X = X[:, None]
        if X.shape[0] != n:
            raise ValueError("mean design matrix row count mismatch")
        # n == q is allowed for pure prediction; the likelihoods need n > q
        if n < X.shape[1]:
            raise ValueError(f"need n >= q (got n={n}, q={X.shape[1]})")
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise ValueError("mean design matrix is rank deficient")
        if len(np.unique(S, axis=0)) < n:
            raise ValueError("input design rows must be distinct")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "X", X)
        if self.standardize:
            mu = S.mean(axis=0)
            sd = S.std(axis=0)
            sd = np.where(sd > 0, sd, 1.0)
        else:
            mu = np.zeros(S.shape[1])
            sd = np.ones(S.shape[1])
        object.__setattr__(self, "_mu", mu)
        object.__setattr__(self, "_sd", sd)

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def K(self) -> int:
        return self.S.shape[1]

    @property
    def q(self) -> int:
        return self.X.shape[1]

    @property
    def coords(self) -> np.ndarray:
        """Input locations in the (possibly standardized) distance coordinates."""
        return (self.S - self._mu) / self._sd

    def transform(self, pts: np.ndarray) -> np.ndarray:
        """Map new input points into the training distance coordinates."""
        return (np.atleast_2d(np.asarray(pts, dtype=float)) - self._mu) / self._sd

    def drop_row(self, i: int) -> "GpDesign":
        keep = np.arange(self.n) != i
        d = GpDesign(S=self.S[keep], Z=self.Z[keep], X=self.X[keep], standardize=False)
        # inherit the parent's coordinate transform so folds share distances
        object.__setattr__(d, "_mu", self._mu)
        object.__setattr__(d, "_sd", self._sd)
        return d


def covariance_matrix(S: np.ndarray, theta: np.ndarray, nugget: float = 0.0) -> np.ndarray:
    """Anisotropic squared-exponential correlation matrix plus nugget*I."""
    if nugget < 0:
        raise ValueError("nugget must be >= 0")
    S = np.atleast_2d(np.asarray(S, dtype=float))
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != S.shape[1]:
        raise ValueError(f"theta has {theta.size} entries for {S.shape[1]} input dimensions")
    W = S / np.exp(theta)  # scale each column by its range
    sq = np.sum(W**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (W @ W.T)
    np.maximum(d2, 0.0, out=d2)
    V = np.exp(-d2)
    # enforce exact symmetry and unit pre-nugget diagonal
    V = 0.5 * (V + V.T)
    np.fill_diagonal(V, 1.0 + nugget)
    return V


def cross_covariance(S: np.ndarray, S_new: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Correlations between training rows and new points, shape (n, m)."""
    theta = np.asarray(theta, dtype=float).ravel()
    scale = np.exp(theta)
    W = np.atleast_2d(S) / scale
    W0 = np.atleast_2d(S_new) / scale
    d2 = (
        np.sum(W**2, axis=1)[:, None]
        + np.sum(W0**2, axis=1)[None, :]
        - 2.0 * (W @ W0.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2)


def cholesky_with_nugget(
    S: np.ndarray, theta: np.ndarray, nugget: float = NUGGET_START
) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of V(theta) + nugget*I, escalating the nugget
    by factors of 10 up to NUGGET_MAX on failure."""
    while True:
        V = covariance_matrix(S, theta, nugget)
        try:
            return np.linalg.cholesky(V), nugget
        except np.linalg.LinAlgError:
            if nugget == 0.0:
                nugget = NUGGET_START
            elif nugget < NUGGET_MAX:
                nugget = min(nugget * 10.0, NUGGET_MAX)
            else:
                raise FactorizationError(
                    f"Cholesky failed at theta={theta} even with nugget={nugget}"
                )


class GpWork:
    """Shared GLS quantities at a fixed theta, computed once from the Cholesky
    factor of V: beta_hat, G^2, log|V|, and log|X^T V^-1 X|."""

    def __init__(self, design: GpDesign, theta, nugget: float = NUGGET_START):
        theta = np.asarray(theta, dtype=float).ravel()
        self.design = design
        self.theta = theta
        self.L, self.nugget = cholesky_with_nugget(design.coords, theta, nugget)
        self.logdet_V = 2.0 * float(np.sum(np.log(np.diag(self.L))))
        # whitened design and outputs: L a = X, L b = Z
        self.Xw = linalg.solve_triangular(self.L, design.X, lower=True)
        self.Zw = linalg.solve_triangular(self.L, design.Z, lower=True)
        xtvx = self.Xw.T @ self.Xw
        try:
            self.L_xtvx = np.linalg.cholesky(xtvx)
        except np.linalg.LinAlgError:
            raise FactorizationError("X^T V^-1 X is singular")
        self.logdet_xtvx = 2.0 * float(np.sum(np.log(np.diag(self.L_xtvx))))
        rhs = self.Xw.T @ self.Zw
        self.beta_hat = linalg.cho_solve((self.L_xtvx, True), rhs)
        resid_w = self.Zw - self.Xw @ self.beta_hat
        self.G_sq = float(resid_w @ resid_w)


def gls_beta(design: GpDesign, theta, nugget: float = NUGGET_START):
    """GLS coefficients beta_hat(theta) and the residual quadratic form
    G^2 = (Z - X beta_hat)^T V^-1 (Z - X beta_hat) = Z^T H Z."""
    w = GpWork(design, theta, nugget)
    return w.beta_hat, w.G_sq


def nll_profile(design: GpDesign, theta, nugget: float = NUGGET_START) -> float:
    """Profile negative log likelihood with beta and alpha concentrated out."""
    w = GpWork(design, theta, nugget)
    n = design.n
    if w.G_sq <= 0:
        raise ValueError("degenerate data: zero GLS residual, profile NLL is -inf")
    return 0.5 * n * math.log(2 * math.pi) + 0.5 * n * math.log(w.G_sq / n) + 0.5 * w.logdet_V + 0.5 * n


def _nll_reml_from_work(w: GpWork) -> float:
    design = w.design
    n, q = design.n, design.q
    if w.G_sq <= 0:
        raise ValueError("degenerate data: zero GLS residual, REML NLL is -inf")
    sign, logdet_xtx = np.linalg.slogdet(design.X.T @ design.X)
    return (
        0.5 * (n - q) * math.log(2 * math.pi)
        + 0.5 * (n - q) * math.log(w.G_sq / (n - q))
        - 0.5 * logdet_xtx
        + 0.5 * w.logdet_xtvx
        + 0.5 * w.logdet_V
        + 0.5 * (n - q)
    )


def nll_reml(design: GpDesign, theta, nugget: float = NUGGET_START) -> float:
    """Restricted (contrast) negative log likelihood in its simplified form."""
    return _nll_reml_from_work(GpWork(design, theta, nugget))


def nll_reml_regularized(
    design: GpDesign, theta, lam: float, nugget: float = NUGGET_START
) -> float:
    """REML NLL plus the ridge penalty lam * sum_k (theta_k - mean(theta))^2."""
    if lam < 0:
        raise ValueError("penalty lam must be >= 0")
    theta = np.asarray(theta, dtype=float).ravel()
    penalty = lam * float(np.sum((theta - theta.mean()) ** 2))
    return nll_reml(design, theta, nugget) + penalty


def nll_bayes(
    design: GpDesign, theta, tau: float, nu_sq: float, nugget: float = NUGGET_START
) -> float:
    """Negative log of the theta posterior with beta and alpha integrated out
    under the prior pi(theta)/alpha, pi(theta) = prod_k N(theta_k | tau, nu^2)."""
    if nu_sq <= 0:
        raise ValueError("prior variance nu_sq must be positive")
    theta = np.asarray(theta, dtype=float).ravel()
    w = GpWork(design, theta, nugget)
    n, q = design.n, design.q
    if w.G_sq <= 0:
        raise ValueError("degenerate data: zero GLS residual")
    K = theta.size
    log_prior = (
        -0.5 * K * math.log(2 * math.pi * nu_sq)
        - 0.5 * float(np.sum((theta - tau) ** 2)) / nu_sq
    )
    return (
        -log_prior
        + 0.5 * w.logdet_V
        + 0.5 * (n - q) * math.log(w.G_sq)
        + 0.5 * w.logdet_xtvx
    )


def bayes_log_posterior(
    design: GpDesign, tau: float, nu_sq: float, nugget: float = NUGGET_START
):
    """Log-target callable over theta for MCMC sampling of the range
    parameters; returns -inf where the likelihood cannot be evaluated."""

    def log_target(theta: np.ndarray) -> float:
        theta = np.asarray(theta, dtype=float).ravel()
        if np.any(theta < THETA_BOUNDS[0]) or np.any(theta > THETA_BOUNDS[1]):
            return -math.inf
        try:
            return -nll_bayes(design, theta, tau, nu_sq, nugget)
        except (FactorizationError, ValueError):
            return -math.inf

    return log_target


@dataclass(frozen=True)
class GpFit:
    """Fitted range parameters and derived GLS quantities."""

    theta: np.ndarray
    beta_hat: np.ndarray
    alpha_reml: float  # G^2 / (n - q)
    alpha_profile: float  # G^2 / n
    objective: float
    hessian: np.ndarray
    nugget: float
    lam: float
    at_bounds: bool

    def scale(self, which: str = "reml") -> float:
        if which == "reml":
            return self.alpha_reml
        if which == "profile":
            return self.alpha_profile
        raise ValueError("scale must be 'reml' or 'profile'")


def _objective_hessian(f, theta: np.ndarray) -> np.ndarray:
    """Central finite-difference Hessian with step 0.2 * max(1, |theta_k|).

    The wide step reads the curvature of the objective's quadratic envelope
    rather than the factorization-level roughness a tiny step would amplify;
    Wald intervals from a much smaller step are badly anti-conservative.
    """
    k = theta.size
    h = 0.2 * np.maximum(1.0, np.abs(theta))
    hess = np.empty((k, k))
    f0 = f(theta)
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            if i == j:
                val = (f(theta + ei) - 2 * f0 + f(theta - ei)) / h[i] ** 2
            else:
                val = (
                    f(theta + ei + ej)
                    - f(theta + ei - ej)
                    - f(theta - ei + ej)
                    + f(theta - ei - ej)
                ) / (4 * h[i] * h[j])
            hess[i, j] = val
            hess[j, i] = val
    return hess


def fit_reml(
    design: GpDesign,
    lam: float = 0.0,
    restarts: int = 8,
    rng: np.random.Generator | None = None,
    nugget: float = NUGGET_START,
) -> GpFit:
    """Minimize the regularized REML objective over theta in [-10, 10]^K.

    Multi-start quasi-Newton (L-BFGS-B with finite-difference gradients)
    with a Nelder-Mead fallback per start; ties across starts break by
    lowest objective, then lexicographically smallest theta.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if design.n <= design.q:
        raise ValueError("need n > q observations to estimate the covariance")
    rng = rng if rng is not None else np.random.default_rng(0)
    K = design.K

    # outputs exactly in the mean-model column space: every theta is optimal,
    # the surrogate reproduces the data with zero scale
    coef, *_ = np.linalg.lstsq(design.X, design.Z, rcond=None)
    exact_resid = design.Z - design.X @ coef
    if np.max(np.abs(exact_resid)) <= 1e-12 * max(1.0, float(np.max(np.abs(design.Z)))):
        w0 = GpWork(design, np.zeros(K), nugget)
        return GpFit(
            theta=np.zeros(K),
            beta_hat=coef,
            alpha_reml=0.0,
            alpha_profile=0.0,
            objective=-math.inf,
            hessian=np.zeros((K, K)),
            nugget=w0.nugget,
            lam=lam,
            at_bounds=False,
        )

    def objective(theta):
        try:
            return nll_reml_regularized(design, theta, lam, nugget)
        except (FactorizationError, ValueError):
            return 1e300

    bounds = [THETA_BOUNDS] * K
    results = []
    for _ in range(restarts):
        x0 = np.clip(rng.normal(0.0, 2.0, size=K), *THETA_BOUNDS)
        res = optimize.minimize(objective, x0, method="L-BFGS-B", bounds=bounds)
        if not res.success or res.fun >= 1e299:
            res = optimize.minimize(
                objective,
                x0,
                method="Nelder-Mead",
                options={"maxiter": 4000, "xatol": 1e-8, "fatol": 1e-10},
            )
        if math.isfinite(res.fun) and res.fun < 1e299:
            results.append((float(res.fun), np.clip(res.x, *THETA_BOUNDS)))
    if not results:
        raise RuntimeError("all optimizer starts failed")
    results.sort(key=lambda r: (r[0], tuple(r[1])))
    best_val, best_theta = results[0]

    w = GpWork(design, best_theta, nugget)
    n, q = design.n, design.q
    hess = _objective_hessian(objective, best_theta)
    at_bounds = bool(
        np.any(np.isclose(best_theta, THETA_BOUNDS[0])) or np.any(np.isclose(best_theta, THETA_BOUNDS[1]))
    )
    return GpFit(
        theta=best_theta,
        beta_hat=w.beta_hat,
        alpha_reml=w.G_sq / (n - q),
        alpha_profile=w.G_sq / n,
        objective=best_val,
        hessian=hess,
        nugget=w.nugget,
        lam=lam,
        at_bounds=at_bounds,
    )


def hessian_nu_estimate(fit: GpFit) -> tuple[float, float]:
    """Empirical-Bayes prior hyperparameters from a REML fit:
    tau_hat = mean(theta), nu_sq_hat = mean of diag(H^-1)."""
    theta = fit.theta
    tau_hat = float(np.mean(theta))
    try:
        np.linalg.cholesky(fit.hessian)
        h_inv = np.linalg.inv(fit.hessian)
    except np.linalg.LinAlgError:
        warnings.warn("objective Hessian is not SPD; using pseudo-inverse", RuntimeWarning)
        h_inv = np.linalg.pinv(fit.hessian)
    nu_sq_hat = float(np.mean(np.diag(h_inv)))
    return tau_hat, nu_sq_hat
