"""Normal and Weibull input variables: densities, MLE, priors, posteriors.

Each uncertain simulator input is described by an :class:`InputVariableSpec`
holding a small sample of laboratory observations.  Parameters are either
fitted by maximum likelihood or given a posterior distribution by combining
the likelihood with one of three priors (flat, Jeffreys, conjugate).

Weibull convention throughout: scale ``alpha`` and shape ``beta`` with
density f(x) = (beta/alpha) (x/alpha)^(beta-1) exp(-(x/alpha)^beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from scipy import optimize
from scipy.special import gammaln

__all__ = [
    "Family",
    "PriorKind",
    "InputVariableSpec",
    "NormalParams",
    "WeibullParams",
    "PriorSpec",
    "log_density",
    "mle_fit",
    "log_prior",
    "log_posterior_unnorm",
    "sample",
]

NEG_INF = float("-inf")

# sqrt(det Fisher) constants, evaluated once
_EULER = np.euler_gamma
_WEIBULL_JEFFREYS_CONST = 0.5 * math.log(math.pi**2 / 6.0)


class Family(str, Enum):
    NORMAL = "normal"
    WEIBULL = "weibull"


class PriorKind(str, Enum):
    FLAT = "flat"
    JEFFREYS = "jeffreys"
    CONJUGATE = "conjugate"


class DegenerateDataError(ValueError):
    """All observations equal; the Weibull shape MLE diverges."""


@dataclass(frozen=True)
class InputVariableSpec:
    """One uncertain simulator input with its raw observations."""

    name: str
    family: Family
    observations: np.ndarray

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 1 or obs.size == 0:
            raise ValueError(f"{self.name}: observations must be a non-empty vector")
        if not np.all(np.isfinite(obs)):
            raise ValueError(f"{self.name}: observations contain NaN/inf")
        if self.family == Family.WEIBULL and np.any(obs <= 0):
            raise ValueError(f"{self.name}: Weibull observations must be strictly positive")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.size


@dataclass(frozen=True)
class NormalParams:
    """Normal location/variance pair (mu, sigma2)."""

    mu: float
    sigma2: float

    family = Family.NORMAL

    def valid(self) -> bool:
        return math.isfinite(self.mu) and math.isfinite(self.sigma2) and self.sigma2 > 0

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.sigma2])


@dataclass(frozen=True)
class WeibullParams:
    """Weibull scale/shape pair (alpha, beta)."""

    alpha: float
    beta: float

    family = Family.WEIBULL

    def valid(self) -> bool:
        return (
            math.isfinite(self.alpha)
            and math.isfinite(self.beta)
            and self.alpha > 0
            and self.beta > 0
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


ParamVector = Union[NormalParams, WeibullParams]


def params_from_array(family: Family, values) -> ParamVector:
    v = np.asarray(values, dtype=float)
    if family == Family.NORMAL:
        return NormalParams(mu=float(v[0]), sigma2=float(v[1]))
    return WeibullParams(alpha=float(v[0]), beta=float(v[1]))


@dataclass(frozen=True)
class PriorSpec:
    """Prior choice for a parameter pair.

    Conjugate hyperparameters:

    * Normal: Normal-Inverse-Gamma (m, kappa, a, b) on (mu, sigma2).
    * Weibull: Inverse-Gamma (a, b) on lam = alpha**beta0 with the shape
      fixed at beta0 (conjugacy needs a known shape).

    ``jeffreys_normal_variant`` selects the joint Jeffreys prior for the
    Normal (proportional to sigma^-3, the default) or the independence
    variant (sigma^-2).
    """

    kind: PriorKind
    nig: tuple | None = None  # (m, kappa, a, b)
    ig: tuple | None = None  # (a, b)
    beta0: float | None = None
    jeffreys_normal_variant: str = "joint"  # "joint" (sigma^-3) or "independence" (sigma^-2)

    def __post_init__(self):
        if self.kind == PriorKind.CONJUGATE:
            if self.nig is not None:
                m, kappa, a, b = self.nig
                if kappa <= 0 or a <= 0 or b <= 0:
                    raise ValueError("NIG hyperparameters must be positive")
            if self.ig is not None:
                a, b = self.ig
                if a <= 0 or b <= 0:
                    raise ValueError("Inverse-Gamma hyperparameters must be positive")
                if self.beta0 is None or self.beta0 <= 0:
                    raise ValueError("Conjugate Weibull prior needs a positive fixed shape beta0")
        if self.jeffreys_normal_variant not in ("joint", "independence"):
            raise ValueError("jeffreys_normal_variant must be 'joint' or 'independence'")

    @staticmethod
    def flat() -> "PriorSpec":
        return PriorSpec(kind=PriorKind.FLAT)

    @staticmethod
    def jeffreys(variant: str = "joint") -> "PriorSpec":
        return PriorSpec(kind=PriorKind.JEFFREYS, jeffreys_normal_variant=variant)

    @staticmethod
    def conjugate_for(spec: InputVariableSpec) -> "PriorSpec":
        """Weakly informative conjugate prior centered on the data."""
        obs = spec.observations
        if spec.family == Family.NORMAL:
            m = float(np.mean(obs))
            b = float(np.var(obs)) if obs.size > 1 else 1.0
            return PriorSpec(kind=PriorKind.CONJUGATE, nig=(m, 1.0, 2.0, max(b, 1e-12)))
        beta0 = mle_fit(spec).beta
        rate = float(np.mean(obs**beta0))
        return PriorSpec(kind=PriorKind.CONJUGATE, ig=(2.0, rate), beta0=beta0)


def log_density(x: float, params: ParamVector) -> float:
    """Log density of one observation under the given parameter pair."""
    if not params.valid():
        raise ValueError(f"invalid parameters: {params}")
    if params.family == Family.NORMAL:
        z = (x - params.mu) ** 2 / params.sigma2
        return -0.5 * (math.log(2 * math.pi * params.sigma2) + z)
    if x <= 0:
        raise ValueError(f"Weibull support is x > 0, got {x}")
    a, b = params.alpha, params.beta
    t = x / a
    return math.log(b / a) + (b - 1) * math.log(t) - t**b


def _log_likelihood(obs: np.ndarray, params: ParamVector) -> float:
    """Vectorized sum of log densities; -inf outside support or invalid params."""
    if not params.valid():
        return NEG_INF
    if params.family == Family.NORMAL:
        mu, s2 = params.mu, params.sigma2
        return float(
            -0.5 * obs.size * math.log(2 * math.pi * s2) - 0.5 * np.sum((obs - mu) ** 2) / s2
        )
    if np.any(obs <= 0):
        return NEG_INF
    a, b = params.alpha, params.beta
    lt = np.log(obs) - math.log(a)
    return float(obs.size * math.log(b / a) + (b - 1) * np.sum(lt) - np.sum(np.exp(b * lt)))


def _weibull_profile_score(beta: float, logs: np.ndarray) -> float:
    # d/dbeta of the profile log-likelihood (scale concentrated out):
    # sum(x^b log x)/sum(x^b) - 1/b - mean(log x)
    # weights shifted by the max log to avoid overflow at large shapes
    w = np.exp(beta * (logs - logs.max()))
    return float(np.dot(w, logs) / np.sum(w) - 1.0 / beta - np.mean(logs))


def mle_fit(spec: InputVariableSpec) -> ParamVector:
    """Maximum-likelihood parameter estimates.

    Normal: closed-form moments (variance divided by n, not n-1).
    Weibull: the shape is profiled and solved by bracketed root finding on
    the score equation; the scale then follows in closed form.
    """
    obs = spec.observations
    if obs.size < 2:
        raise ValueError(f"{spec.name}: need at least 2 observations")
    if spec.family == Family.NORMAL:
        return NormalParams(mu=float(np.mean(obs)), sigma2=float(np.var(obs)))

    if np.all(obs == obs[0]):
        raise DegenerateDataError(f"{spec.name}: all observations equal; Weibull MLE diverges")
    logs = np.log(obs)
    lo, hi = 1e-3, 1e3
    f_lo = _weibull_profile_score(lo, logs)
    f_hi = _weibull_profile_score(hi, logs)
    if f_lo * f_hi > 0:
        raise RuntimeError(f"{spec.name}: Weibull shape score has no sign change in [{lo}, {hi}]")
    beta = optimize.brentq(_weibull_profile_score, lo, hi, args=(logs,), xtol=1e-13, rtol=1e-15)
    alpha = float(np.mean(obs**beta) ** (1.0 / beta))
    # score at the solution must be numerically zero
    if abs(_weibull_profile_score(beta, logs)) > 1e-8:
        raise RuntimeError(f"{spec.name}: Weibull MLE did not converge")
    return WeibullParams(alpha=alpha, beta=float(beta))


def _weibull_fisher(alpha: float, beta: float) -> np.ndarray:
    """Per-observation Fisher information of the (scale, shape) Weibull."""
    g = _EULER
    i_aa = (beta / alpha) ** 2
    i_ab = -(1.0 - g) / alpha
    i_bb = ((1.0 - g) ** 2 + math.pi**2 / 6.0) / beta**2
    return np.array([[i_aa, i_ab], [i_ab, i_bb]])


def log_prior(params: ParamVector, prior: PriorSpec) -> float:
    """Log prior density, up to an additive constant for improper priors."""
    if not params.valid():
        raise ValueError(f"invalid parameters: {params}")
    if prior.kind == PriorKind.FLAT:
        return 0.0

    if prior.kind == PriorKind.JEFFREYS:
        if params.family == Family.NORMAL:
            power = 3.0 if prior.jeffreys_normal_variant == "joint" else 2.0
            return -0.5 * power * math.log(params.sigma2)
        # 0.5*log det Fisher = 0.5*log(pi^2/6) - log(alpha); the determinant
        # is free of the shape in this parameterization
        return _WEIBULL_JEFFREYS_CONST - math.log(params.alpha)

    # conjugate
    if params.family == Family.NORMAL:
        if prior.nig is None:
            raise ValueError("conjugate Normal prior requires NIG hyperparameters")
        m, kappa, a, b = prior.nig
        mu, s2 = params.mu, params.sigma2
        lp_s2 = a * math.log(b) - gammaln(a) - (a + 1) * math.log(s2) - b / s2
        lp_mu = -0.5 * math.log(2 * math.pi * s2 / kappa) - 0.5 * kappa * (mu - m) ** 2 / s2
        return lp_s2 + lp_mu
    if prior.ig is None or prior.beta0 is None:
        raise ValueError("conjugate Weibull prior requires IG hyperparameters and beta0")
    if not math.isclose(params.beta, prior.beta0, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(
            f"conjugate Weibull prior fixes the shape at {prior.beta0}, got {params.beta}"
        )
    a, b = prior.ig
    beta0 = prior.beta0
    lam = params.alpha**beta0
    lp_lam = a * math.log(b) - gammaln(a) - (a + 1) * math.log(lam) - b / lam
    # change of variables lam = alpha^beta0 so this is a density in alpha
    jac = math.log(beta0) + (beta0 - 1) * math.log(params.alpha)
    return lp_lam + jac


def log_posterior_unnorm(
    params: ParamVector, spec: InputVariableSpec, prior: PriorSpec
) -> float:
    """Unnormalized log posterior; -inf when the parameters violate support."""
    if not params.valid():
        return NEG_INF
    if prior.kind == PriorKind.CONJUGATE and params.family == Family.WEIBULL:
        # out-of-support rather than an error inside MCMC: the shape is fixed
        if prior.beta0 is not None and not math.isclose(
            params.beta, prior.beta0, rel_tol=1e-12, abs_tol=0.0
        ):
            return NEG_INF
    ll = _log_likelihood(spec.observations, params)
    if ll == NEG_INF:
        return NEG_INF
    return log_prior(params, prior) + ll


def sample(params: ParamVector, rng: np.random.Generator, size=None):
    """Draw variates; Weibull by inverse CDF, Normal via the generator."""
    if not params.valid():
        raise ValueError(f"invalid parameters: {params}")
    if params.family == Family.NORMAL:
        return rng.normal(params.mu, math.sqrt(params.sigma2), size=size)
    u = rng.uniform(size=size)
    return params.alpha * (-np.log1p(-u)) ** (1.0 / params.beta)


def ppf(params: ParamVector, u):
    """Quantile function, used by the Latin-hypercube transform."""
    u = np.asarray(u, dtype=float)
    if params.family == Family.NORMAL:
        from scipy.special import ndtri

        return params.mu + math.sqrt(params.sigma2) * ndtri(u)
    return params.alpha * (-np.log1p(-u)) ** (1.0 / params.beta)


def conjugate_normal_posterior(spec: InputVariableSpec, prior: PriorSpec) -> tuple:
    """Closed-form NIG posterior hyperparameters (m, kappa, a, b).

    Exposed for validation of MCMC output against the analytic update.
    """
    if spec.family != Family.NORMAL or prior.nig is None:
        raise ValueError("requires a Normal variable with an NIG prior")
    m0, k0, a0, b0 = prior.nig
    obs = spec.observations
    n = obs.size
    xbar = float(np.mean(obs))
    ss = float(np.sum((obs - xbar) ** 2))
    kn = k0 + n
    mn = (k0 * m0 + n * xbar) / kn
    an = a0 + n / 2.0
    bn = b0 + 0.5 * ss + 0.5 * k0 * n * (xbar - m0) ** 2 / kn
    return (mn, kn, an, bn)
