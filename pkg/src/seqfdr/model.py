"""Two-groups mixture model with a covariate-dependent signal prior.

A test statistic ``z`` with covariates ``x`` is modelled as

    z ~ c(x) * f1(z) + (1 - c(x)) * f0(z)

where ``f0`` is a Gaussian null, ``f1`` a Gaussian mixture alternative and
``c(x) = sigmoid(beta0 + sum_j beta_j x_j)`` the prior probability that the
statistic is a signal.  These densities are the building blocks for
particle weighting, the online mixture updates and the final signal/null
calls.  Everything is available in log space: products of thousands of
likelihoods are denormal otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

__all__ = [
    "NullModel",
    "MixtureComponent",
    "AlternativeModel",
    "TestRecord",
    "linear_predictor",
    "logistic_prior",
    "signal_prior_logs",
    "normal_logpdf",
    "null_density",
    "null_logpdf",
    "alt_density",
    "alt_logpdf",
    "marginal_likelihood",
    "log_marginal_likelihood",
    "posterior_signal_prob",
    "posterior_signal_probs",
]

LOG_TWO_PI = math.log(2.0 * math.pi)

# Saturation clamps for the signal prior.  A prior of exactly 0 or 1 would
# divide by zero in the posterior; these bounds keep every log finite.
PRIOR_FLOOR = 1e-300
PRIOR_CEIL = 1.0 - 1e-16
_LOG_PRIOR_FLOOR = math.log(PRIOR_FLOOR)
_LOG_PRIOR_CEIL = math.log1p(-1e-16)
_LOG_COMPLEMENT_FLOOR = math.log(1e-16)


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class NullModel:
    """Gaussian law of the statistic under the null hypothesis."""

    mu0: float
    sigma0: float

    def __post_init__(self) -> None:
        _require_finite("mu0", self.mu0)
        _require_finite("sigma0", self.sigma0)
        if self.sigma0 <= 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")


@dataclass(frozen=True)
class MixtureComponent:
    """One Gaussian component of the alternative mixture."""

    w: float
    mu: float
    sigma: float

    def __post_init__(self) -> None:
        _require_finite("w", self.w)
        _require_finite("mu", self.mu)
        _require_finite("sigma", self.sigma)
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"component weight must lie in [0, 1], got {self.w}")
        if self.sigma <= 0:
            raise ValueError(f"component sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class AlternativeModel:
    """Gaussian mixture law of the statistic under the alternative."""

    components: tuple[MixtureComponent, ...]

    def __post_init__(self) -> None:
        components = tuple(self.components)
        object.__setattr__(self, "components", components)
        if len(components) < 1:
            raise ValueError("alternative mixture needs at least one component")
        total = math.fsum(c.w for c in components)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights must sum to 1, got {total!r}")

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.w for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mu for c in self.components])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([c.sigma for c in self.components])


@dataclass(frozen=True)
class TestRecord:
    """One observation: index, statistic, covariates, optional truth label."""

    __test__ = False  # domain type, not a pytest case

    index: int
    z: float
    x: np.ndarray
    truth: int | None = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"record index must be nonnegative, got {self.index}")
        _require_finite("z", self.z)
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1:
            raise ValueError("covariates must form a 1-D vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates must be finite")
        object.__setattr__(self, "x", x)
        if self.truth is not None and self.truth not in (0, 1):
            raise ValueError(f"truth label must be 0, 1 or None, got {self.truth}")


def linear_predictor(beta: np.ndarray, x: np.ndarray) -> float:
    """Return ``beta0 + sum_j beta_j x_j`` after checking dimensions."""
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    if beta.ndim != 1 or x.ndim != 1 or beta.shape[0] != x.shape[0] + 1:
        raise ValueError(
            f"dimension mismatch: {beta.shape[0]} coefficients for "
            f"{x.shape[0]} covariates (need one more coefficient than covariates)"
        )
    s = beta[0]
    for j in range(x.shape[0]):
        s = s + beta[j + 1] * x[j]
    return float(s)


def logistic_prior(beta: np.ndarray, x: np.ndarray) -> float:
    """Prior signal probability ``1 / (1 + exp(-s(x)))``, saturation-clamped.

    Stable for arbitrarily large ``|s|``; the output is strictly inside
    (0, 1) so downstream posterior ratios never divide by zero.
    """
    s = linear_predictor(beta, x)
    return float(np.clip(expit(s), PRIOR_FLOOR, PRIOR_CEIL))


def signal_prior_logs(s):
    """Return ``(log c, log(1 - c))`` for linear predictor(s) ``s``.

    Works elementwise on arrays.  Both logs are computed directly from the
    predictor (never by exponentiating), then clamped to the saturation
    bounds so they stay finite.
    """
    s = np.asarray(s, dtype=float)
    log_c = -np.logaddexp(0.0, -s)
    log_1mc = -np.logaddexp(0.0, s)
    log_c = np.clip(log_c, _LOG_PRIOR_FLOOR, _LOG_PRIOR_CEIL)
    log_1mc = np.clip(log_1mc, _LOG_COMPLEMENT_FLOOR, 0.0)
    return log_c, log_1mc


def normal_logpdf(z, mu, sigma):
    """Gaussian log density; broadcasts over any mix of scalars and arrays.

    Statistics so extreme that the squared deviation overflows map to a log
    density of -inf rather than warning.
    """
    u = (np.asarray(z, dtype=float) - mu) / sigma
    with np.errstate(over="ignore"):
        return -0.5 * u * u - np.log(sigma) - 0.5 * LOG_TWO_PI


def null_logpdf(null: NullModel, z):
    return normal_logpdf(z, null.mu0, null.sigma0)


def null_density(null: NullModel, z):
    """Density of the null law at ``z``."""
    return np.exp(null_logpdf(null, z))


def alt_logpdf(alt: AlternativeModel, null: NullModel, z, *, convolve: bool = False):
    """Log density of the alternative mixture at ``z``.

    With ``convolve=False`` the components describe the statistic directly:
    ``sum_k w_k N(z | mu_k, sigma_k^2)``.  With ``convolve=True`` they
    describe a shift added to the null, marginalised exactly:
    ``sum_k w_k N(z | mu0 + mu_k, sigma0^2 + sigma_k^2)``.
    """
    w = alt.weights
    mu = alt.means
    sigma = alt.sigmas
    if convolve:
        mu = null.mu0 + mu
        sigma = np.sqrt(null.sigma0**2 + sigma**2)
    z = np.asarray(z, dtype=float)
    comp = normal_logpdf(z[..., None], mu, sigma)
    with np.errstate(divide="ignore"):
        comp = comp + np.log(w)
    out = logsumexp(comp, axis=-1)
    return out if out.ndim else float(out)


def alt_density(alt: AlternativeModel, null: NullModel, z, *, convolve: bool = False):
    """Density of the alternative mixture at ``z``."""
    return np.exp(alt_logpdf(alt, null, z, convolve=convolve))


def log_marginal_likelihood(params, rec: TestRecord, *, convolve: bool = False) -> float:
    """Log of ``c(x) f1(z) + (1 - c(x)) f0(z)`` for one record.

    ``params`` is anything carrying ``beta``, ``null`` and ``alt``
    attributes (a particle, a generator spec, ...).
    """
    s = linear_predictor(params.beta, rec.x)
    log_c, log_1mc = signal_prior_logs(s)
    log_f0 = null_logpdf(params.null, rec.z)
    log_f1 = alt_logpdf(params.alt, params.null, rec.z, convolve=convolve)
    return float(np.logaddexp(log_c + log_f1, log_1mc + log_f0))


def marginal_likelihood(params, rec: TestRecord, *, convolve: bool = False) -> float:
    """Marginal density of one record under the two-groups model."""
    return math.exp(log_marginal_likelihood(params, rec, convolve=convolve))


def posterior_signal_prob(params, rec: TestRecord, *, convolve: bool = False) -> float:
    """Posterior probability that the record is a signal.

    Computed in log space; if both mixture branches underflow to zero the
    prior ``c(x)`` is returned (the limit for ``f0 == f1``), never NaN.
    """
    s = linear_predictor(params.beta, rec.x)
    log_c, log_1mc = signal_prior_logs(s)
    log_f0 = null_logpdf(params.null, rec.z)
    log_f1 = alt_logpdf(params.alt, params.null, rec.z, convolve=convolve)
    log_num = log_c + log_f1
    log_den = np.logaddexp(log_num, log_1mc + log_f0)
    if not np.isfinite(log_den):
        return float(np.exp(log_c))
    return float(np.exp(log_num - log_den))


def posterior_signal_probs(
    params, z: np.ndarray, x: np.ndarray, *, convolve: bool = False
) -> np.ndarray:
    """Vectorised :func:`posterior_signal_prob` over ``n`` records.

    ``z`` has shape ``(n,)`` and ``x`` shape ``(n, J)``.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or z.shape[0] != x.shape[0]:
        raise ValueError("z must be (n,) and x (n, J)")
    beta = np.asarray(params.beta, dtype=float)
    if beta.shape[0] != x.shape[1] + 1:
        raise ValueError(
            f"dimension mismatch: {beta.shape[0]} coefficients for {x.shape[1]} covariates"
        )
    s = np.full(z.shape[0], beta[0])
    for j in range(x.shape[1]):
        s += beta[j + 1] * x[:, j]
    log_c, log_1mc = signal_prior_logs(s)
    log_f0 = null_logpdf(params.null, z)
    log_f1 = alt_logpdf(params.alt, params.null, z, convolve=convolve)
    log_num = log_c + log_f1
    log_den = np.logaddexp(log_num, log_1mc + log_f0)
    out = np.exp(log_num - np.where(np.isfinite(log_den), log_den, 0.0))
    bad = ~np.isfinite(log_den)
    if np.any(bad):
        out[bad] = np.exp(log_c[bad])
    return out
