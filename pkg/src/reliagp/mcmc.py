"""Adaptive Metropolis sampler and chain diagnostics.

The sampler follows Haario, Saksman and Tamminen (2001): a random-walk
Metropolis whose Gaussian proposal covariance is the empirical covariance of
the whole chain history, scaled by s_d = 2.4^2/d and regularized by eps*I.
Adaptation starts after an initial non-adaptive period t0 and the proposal
covariance is refreshed every t1 steps; every t2-th state is retained as
output, so a run of t steps yields t/t2 draws.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "AmSettings",
    "PosteriorChain",
    "am_sample",
    "remove_burn_in",
    "geweke",
    "running_average",
    "trace_export",
    "default_init_cov",
    "save_chain",
    "load_chain",
]


@dataclass(frozen=True)
class AmSettings:
    """Adaptive Metropolis run settings."""

    d: int
    t: int = 100_000
    epsilon: float = 1e-4
    t0: int = 10_000
    t1: int = 10
    t2: int = 100

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension d must be >= 1")
        if self.t % self.t2 != 0:
            raise ValueError(f"t={self.t} must be a multiple of t2={self.t2}")
        if not (0 <= self.t0 < self.t):
            raise ValueError("t0 must satisfy 0 <= t0 < t")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.t1 < 1 or self.t2 < 1:
            raise ValueError("t1 and t2 must be >= 1")

    @property
    def s_d(self) -> float:
        return 2.4**2 / self.d

    @property
    def n_retained(self) -> int:
        return self.t // self.t2


@dataclass(frozen=True)
class PosteriorChain:
    """Retained MCMC draws plus run metadata."""

    draws: np.ndarray  # (rows, d)
    acceptance_rate: float
    settings: AmSettings | None = None
    burn_in_fraction: float = 0.0
    geweke_z: np.ndarray | None = None

    @property
    def rows(self) -> int:
        return self.draws.shape[0]

    @property
    def d(self) -> int:
        return self.draws.shape[1]


def default_init_cov(log_target, init: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Inverse finite-difference Hessian of -log_target at init, if SPD.

    Falls back to 0.1*I when the Hessian is not positive definite or the
    target is not finite in the probed neighborhood.
    """
    init = np.asarray(init, dtype=float)
    d = init.size
    fallback = 0.1 * np.eye(d)
    try:
        hess = _fd_hessian(lambda x: -log_target(x), init, step)
        if not np.all(np.isfinite(hess)):
            return fallback
        cov = np.linalg.inv(hess)
        np.linalg.cholesky(cov)
        return cov
    except np.linalg.LinAlgError:
        return fallback


def _fd_hessian(f, x: np.ndarray, step: float) -> np.ndarray:
    d = x.size
    h = step * np.maximum(1.0, np.abs(x))
    hess = np.empty((d, d))
    f0 = f(x)
    for i in range(d):
        for j in range(i, d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i] = h[i]
            ej[j] = h[j]
            if i == j:
                val = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
            else:
                val = (
                    f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
                ) / (4 * h[i] * h[j])
            hess[i, j] = val
            hess[j, i] = val
    return hess


def am_sample(
    log_target,
    init,
    init_cov,
    settings: AmSettings,
    rng: np.random.Generator,
) -> PosteriorChain:
    """Run the adaptive Metropolis sampler.

    The proposal is Gaussian centered at the current state with covariance
    s_d*init_cov during the first t0 steps and
    s_d*Cov(history) + s_d*eps*I afterwards, refreshed every t1 steps.
    Symmetric accept/reject with probability min(1, exp(delta log-target)).
    """
    init = np.asarray(init, dtype=float)
    d = settings.d
    if init.shape != (d,):
        raise ValueError(f"init has shape {init.shape}, expected ({d},)")
    lp = float(log_target(init))
    if not math.isfinite(lp):
        raise ValueError("log_target(init) must be finite")
    init_cov = np.asarray(init_cov, dtype=float)
    chol = np.linalg.cholesky(settings.s_d * init_cov)

    x = init.copy()
    # running first/second moments over the full history (init included)
    count = 1
    s1 = init.copy()
    s2 = np.outer(init, init)
    eps_eye = settings.epsilon * np.eye(d)

    retained = np.empty((settings.n_retained, d))
    n_accept = 0
    out = 0
    for step in range(1, settings.t + 1):
        prop = x + chol @ rng.standard_normal(d)
        lp_prop = float(log_target(prop))
        log_u = math.log(max(rng.uniform(), 1e-300))
        if lp_prop - lp > log_u:
            x = prop
            lp = lp_prop
            n_accept += 1
        count += 1
        s1 += x
        s2 += np.outer(x, x)
        if step > settings.t0 and step % settings.t1 == 0:
            cov = (s2 - np.outer(s1, s1) / count) / (count - 1)
            try:
                chol = np.linalg.cholesky(settings.s_d * (cov + eps_eye))
            except np.linalg.LinAlgError:
                raise RuntimeError(
                    "proposal covariance lost positive definiteness despite regularization"
                )
        if step % settings.t2 == 0:
            retained[out] = x
            out += 1

    chain = PosteriorChain(
        draws=retained,
        acceptance_rate=n_accept / settings.t,
        settings=settings,
    )
    return chain


def remove_burn_in(chain: PosteriorChain, fraction: float = 0.2) -> PosteriorChain:
    """Drop the first floor(fraction*rows) retained draws."""
    if not (0 <= fraction < 1):
        raise ValueError(f"burn-in fraction must be in [0, 1), got {fraction}")
    drop = int(math.floor(fraction * chain.rows))
    return replace(chain, draws=chain.draws[drop:], burn_in_fraction=fraction)


def _window_variance(x: np.ndarray, method: str) -> float:
    """Variance of the window mean: sample variance / length, or a tapered
    spectral-density-at-zero estimate divided by length."""
    n = x.size
    if method == "sample":
        return float(np.var(x, ddof=1) / n)
    if method == "spectral":
        # 4% lag window with Bartlett taper
        lags = max(1, int(0.04 * n))
        xc = x - x.mean()
        s0 = float(np.dot(xc, xc) / n)
        for k in range(1, lags + 1):
            w = 1.0 - k / (lags + 1)
            s0 += 2.0 * w * float(np.dot(xc[k:], xc[:-k]) / n)
        return max(s0, 0.0) / n
    raise ValueError(f"unknown variance method {method!r}")


def geweke(
    chain: PosteriorChain,
    first_frac: float = 0.1,
    last_frac: float = 0.5,
    variance: str = "sample",
) -> np.ndarray:
    """Geweke z-scores comparing early and late window means, per coordinate."""
    rows = chain.rows
    n_a = int(first_frac * rows)
    n_b = int(last_frac * rows)
    if n_a < 10 or n_b < 10:
        raise ValueError(f"windows too short ({n_a} and {n_b} draws); need >= 10 each")
    z = np.empty(chain.d)
    for j in range(chain.d):
        a = chain.draws[:n_a, j]
        b = chain.draws[rows - n_b :, j]
        var = _window_variance(a, variance) + _window_variance(b, variance)
        if var <= 0:
            raise ValueError(f"coordinate {j}: zero variance, Geweke z undefined")
        z[j] = (a.mean() - b.mean()) / math.sqrt(var)
    return z


def running_average(chain: PosteriorChain) -> np.ndarray:
    """Cumulative means per coordinate, for running-average plots."""
    csum = np.cumsum(chain.draws, axis=0)
    return csum / np.arange(1, chain.rows + 1)[:, None]


def trace_export(chain: PosteriorChain) -> list[dict]:
    """Thinned states with their output index, as plot-ready records."""
    return [
        {"index": i, **{f"coord_{j}": float(v) for j, v in enumerate(row)}}
        for i, row in enumerate(chain.draws)
    ]


def save_chain(chain: PosteriorChain, csv_path, json_path=None, names=None) -> None:
    """CSV of retained draws plus a JSON sidecar with run metadata."""
    csv_path = Path(csv_path)
    d = chain.d
    names = list(names) if names is not None else [f"coord_{j}" for j in range(d)]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in chain.draws:
            writer.writerow([repr(float(v)) for v in row])
    if json_path is None:
        json_path = csv_path.with_suffix(".json")
    meta = {
        "columns": names,
        "rows": chain.rows,
        "acceptance_rate": chain.acceptance_rate,
        "burn_in_fraction": chain.burn_in_fraction,
        "geweke_z": None if chain.geweke_z is None else [float(z) for z in chain.geweke_z],
        "settings": None
        if chain.settings is None
        else {
            "d": chain.settings.d,
            "t": chain.settings.t,
            "epsilon": chain.settings.epsilon,
            "t0": chain.settings.t0,
            "t1": chain.settings.t1,
            "t2": chain.settings.t2,
        },
    }
    Path(json_path).write_text(json.dumps(meta, indent=2))


def load_chain(csv_path, json_path=None) -> PosteriorChain:
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)  # header
        draws = np.array([[float(v) for v in row] for row in reader])
    if json_path is None:
        json_path = csv_path.with_suffix(".json")
    meta = json.loads(Path(json_path).read_text())
    settings = None
    if meta.get("settings"):
        settings = AmSettings(**meta["settings"])
    return PosteriorChain(
        draws=draws,
        acceptance_rate=meta.get("acceptance_rate", float("nan")),
        settings=settings,
        burn_in_fraction=meta.get("burn_in_fraction", 0.0),
        geweke_z=None if meta.get("geweke_z") is None else np.asarray(meta["geweke_z"]),
    )
