"""Ordinary/universal kriging prediction and mean-squared prediction error.

The predictor is the best linear unbiased predictor under the fitted GP:
solving the constrained minimization of E[(z0 - gamma^T Z)^2] subject to
gamma^T X = x0^T gives

    z_hat0 = x0^T beta_hat + phi^T Sigma^-1 (Z - X beta_hat)
    MSPE   = sigma0^2 - phi^T Sigma^-1 phi
             + (x0 - X^T Sigma^-1 phi)^T (X^T Sigma^-1 X)^-1 (x0 - X^T Sigma^-1 phi)

with phi the cross-covariance vector to the training outputs and
sigma0^2 = alpha * (1 + nugget).  The fitted scale alpha cancels from the
predictor and factors out of the MSPE, so all solves run on the correlation
matrix and reuse a single Cholesky factorization per theta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from reliagp.gp import GpDesign, GpFit, GpWork, cross_covariance

__all__ = ["KrigingPrediction", "KrigingModel", "predict", "loo_predictions", "loo_diagnostics"]

MSPE_WARN_FLOOR = -1e-8


@dataclass(frozen=True)
class KrigingPrediction:
    """Predictive mean and root-MSPE at one new input point."""

    z_hat: float
    S0: float
    inputs: np.ndarray
    min_design_distance: float
    mspe_raw: float  # before clamping at zero


class KrigingModel:
    """Predictor at a fixed theta; one Cholesky factorization, O(n^2) per point."""

    def __init__(
        self,
        design: GpDesign,
        theta,
        alpha: float | None = None,
        scale: str = "reml",
        nugget: float | None = None,
    ):
        w = GpWork(design, theta, nugget if nugget is not None else 0.0)
        self.design = design
        self.theta = w.theta
        self.work = w
        self.nugget = w.nugget
        if alpha is not None:
            self.alpha = float(alpha)
        else:
            n, q = design.n, design.q
            if scale == "reml":
                if n <= q:
                    raise ValueError("cannot estimate the scale with n <= q; pass alpha")
                self.alpha = w.G_sq / (n - q)
            else:
                self.alpha = w.G_sq / n
        resid_w = w.Zw - w.Xw @ w.beta_hat
        # Sigma^-1 (Z - X beta_hat), in correlation units
        self._c_inv_resid = linalg.solve_triangular(w.L, resid_w, lower=True, trans="T")
        self._coords = design.coords

    @classmethod
    def from_fit(cls, fit: GpFit, design: GpDesign, scale: str = "reml") -> "KrigingModel":
        return cls(design, fit.theta, alpha=fit.scale(scale), nugget=fit.nugget)

    def predict_batch(self, pts, x0=None):
        """Predict at many points at once.

        Returns (z_hat, S0, mspe_raw, min_dist) as arrays over the rows of
        ``pts``.  ``x0`` is the mean-model covariate vector of the new points
        (all-ones for the default constant mean).
        """
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        m = pts.shape[0]
        w = self.work
        q = self.design.q
        if x0 is None:
            if not np.allclose(self.design.X, 1.0):
                raise ValueError("x0 required for a non-constant mean design")
            x0 = np.ones((m, q))
        else:
            x0 = np.atleast_2d(np.asarray(x0, dtype=float))
            if x0.shape != (m, q):
                raise ValueError(f"x0 has shape {x0.shape}, expected ({m}, {q})")

        coords_new = self.design.transform(pts)
        v0 = cross_covariance(self._coords, coords_new, self.theta)  # (n, m)
        z_hat = x0 @ w.beta_hat + v0.T @ self._c_inv_resid

        v0w = linalg.solve_triangular(w.L, v0, lower=True)  # (n, m)
        quad_v = np.sum(v0w**2, axis=0)
        u0 = x0.T - w.Xw.T @ v0w  # (q, m)
        t = linalg.solve_triangular(w.L_xtvx, u0, lower=True)
        quad_u = np.sum(t**2, axis=0)
        mspe = self.alpha * ((1.0 + self.nugget) - quad_v + quad_u)

        # minimum distance to the design, for extrapolation diagnostics
        diff2 = (
            np.sum(self._coords**2, axis=1)[:, None]
            + np.sum(coords_new**2, axis=1)[None, :]
            - 2.0 * self._coords @ coords_new.T
        )
        min_dist = np.sqrt(np.maximum(diff2.min(axis=0), 0.0))

        s0 = np.sqrt(np.maximum(mspe, 0.0))
        return z_hat, s0, mspe, min_dist

    def predict(self, s0, x0=None) -> KrigingPrediction:
        s0 = np.asarray(s0, dtype=float).ravel()
        if s0.size != self.design.K:
            raise ValueError(f"s0 has {s0.size} coordinates, design has {self.design.K}")
        x0_arr = None if x0 is None else np.atleast_2d(np.asarray(x0, dtype=float))
        z, s, mspe, dist = self.predict_batch(s0[None, :], x0_arr)
        if mspe[0] < MSPE_WARN_FLOOR:
            import warnings

            warnings.warn(
                f"MSPE clamped from {mspe[0]:.3e}; numerical health suspect", RuntimeWarning
            )
        return KrigingPrediction(
            z_hat=float(z[0]),
            S0=float(s[0]),
            inputs=s0,
            min_design_distance=float(dist[0]),
            mspe_raw=float(mspe[0]),
        )


def predict(fit: GpFit, design: GpDesign, s0, x0=None, scale: str = "reml") -> KrigingPrediction:
    """One-shot prediction at a new point from a REML fit."""
    return KrigingModel.from_fit(fit, design, scale=scale).predict(s0, x0)


def loo_predictions(design: GpDesign, theta_source, scale: str = "reml", nugget: float = 0.0):
    """Leave-one-out predictions at fixed theta or over posterior theta draws.

    ``theta_source`` is either a K-vector (fixed-theta path: one prediction
    per held-out row) or a (T, K) matrix of posterior draws (one prediction
    per draw per row).  Returns (z_hat, s0) arrays of shape (n,) or (n, T).
    """
    if design.n < 3:
        raise ValueError("need n >= 3 for leave-one-out")
    theta_source = np.asarray(theta_source, dtype=float)
    fixed = theta_source.ndim == 1
    draws = theta_source[None, :] if fixed else theta_source
    T = draws.shape[0]
    n = design.n
    z_hat = np.empty((n, T))
    s0 = np.empty((n, T))
    for i in range(n):
        reduced = design.drop_row(i)
        x0 = design.X[i][None, :]
        pt = design.S[i][None, :]
        for j in range(T):
            model = KrigingModel(reduced, draws[j], scale=scale, nugget=nugget)
            z, s, _, _ = model.predict_batch(pt, x0)
            z_hat[i, j] = z[0]
            s0[i, j] = s[0]
    if fixed:
        return z_hat[:, 0], s0[:, 0]
    return z_hat, s0


def loo_diagnostics(observed: np.ndarray, predicted: np.ndarray) -> dict:
    """Observed-vs-expected summary: correlation and signal-to-noise ratio
    (variance of predictions over variance of prediction residuals)."""
    observed = np.asarray(observed, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    resid = observed - predicted
    corr = float(np.corrcoef(observed, predicted)[0, 1]) if observed.size > 1 else float("nan")
    var_resid = float(np.var(resid))
    snr = float(np.var(predicted) / var_resid) if var_resid > 0 else float("inf")
    return {"correlation": corr, "signal_to_noise": snr, "sse": float(np.sum(resid**2))}
