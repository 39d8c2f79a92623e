"""Particle rejuvenation: online model updates and coefficient refresh.

After resampling, each particle absorbs the new statistic into either its
null model or its alternative mixture (an online K-means-style update with
decaying learning rates), and the regression coefficients of the whole
population are refreshed by a variance-preserving Gaussian kernel draw.

The scalar functions (:func:`allocate`, :func:`update_null`,
:func:`update_alternative`) operate on single particles and define the
update semantics; the ``*_inplace`` functions apply the same arithmetic
across the whole population and are cross-checked against the scalar path
in the test suite.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import AlternativeModel, MixtureComponent, NullModel
from .particles import PAD_SIGMA, SIGMA_FLOOR, ParticleSystem

__all__ = [
    "Allocation",
    "RejuvenationConfig",
    "allocate",
    "update_null",
    "update_alternative",
    "kernel_bandwidth",
    "kernel_refresh",
    "update_nulls_inplace",
    "update_alternatives_inplace",
]

#: Signal-prior threshold at which a statistic is allocated to the
#: alternative model (the boundary itself goes to the alternative).
ALLOCATION_THRESHOLD = 0.5


class Allocation(enum.Enum):
    NULL = 0
    ALTERNATIVE = 1


@dataclass(frozen=True)
class RejuvenationConfig:
    """Tunables of the online mixture update.

    ``match_threshold`` is the half-width, in component standard
    deviations, inside which a statistic matches an existing component.
    ``new_component_sigma`` is the scale given to a freshly spawned
    component.  ``prune_threshold`` drops components whose weight falls
    below it after renormalisation (0 disables pruning and leaves the
    component count unbounded).  ``variance_update_uses_old_mean`` selects
    the pre-update mean in the variance innovation term instead of the
    just-updated one.
    """

    match_threshold: float = 2.5
    new_component_sigma: float = math.sqrt(20.0)
    prune_threshold: float = 1e-6
    variance_update_uses_old_mean: bool = False

    def __post_init__(self) -> None:
        if self.match_threshold <= 0:
            raise ValueError("match_threshold must be positive")
        if self.new_component_sigma <= 0:
            raise ValueError("new_component_sigma must be positive")
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be nonnegative")


def allocate(beta: np.ndarray, x: np.ndarray) -> Allocation:
    """Allocate a record by its prior signal probability.

    Depends only on the coefficients and the covariates, never on the
    statistic itself: below 1/2 goes to the null, at or above 1/2 to the
    alternative.  Decided on the linear predictor so saturation cannot
    flip the boundary.
    """
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    if beta.shape[0] != x.shape[0] + 1:
        raise ValueError(
            f"dimension mismatch: {beta.shape[0]} coefficients for {x.shape[0]} covariates"
        )
    s = beta[0]
    for j in range(x.shape[0]):
        s = s + beta[j + 1] * x[j]
    return Allocation.ALTERNATIVE if s >= 0.0 else Allocation.NULL


def update_null(null: NullModel, n0: float, z: float, *,
                update_mean: bool = True,
                use_old_mean: bool = False) -> tuple[NullModel, float]:
    """Absorb a null-allocated statistic into the null model.

    The learning rate is ``1 / (1 + n0)`` so each statistic's influence
    decays as the allocation count grows.  The mean is updated first and
    the variance innovation uses the updated mean (set ``use_old_mean`` to
    read the update the other way; set ``update_mean=False`` to keep the
    null location fixed and adapt only the scale).
    """
    alpha = 1.0 / (1.0 + n0)
    mu_old = null.mu0
    mu_new = (1.0 - alpha) * mu_old + alpha * z if update_mean else mu_old
    mu_used = mu_old if use_old_mean else mu_new
    var = (1.0 - alpha) * null.sigma0**2 + alpha * (z - mu_used) ** 2
    sigma = max(math.sqrt(var), SIGMA_FLOOR)
    return NullModel(mu0=mu_new, sigma0=sigma), n0 + 1.0


def update_alternative(alt: AlternativeModel, n1: float, z: float,
                       cfg: RejuvenationConfig) -> tuple[AlternativeModel, float]:
    """Absorb an alternative-allocated statistic into the mixture.

    Components are scanned in storage order; the first one whose mean lies
    within ``match_threshold`` standard deviations of ``z`` is the match.
    On a match, weights move toward the match indicator, then the matched
    component's mean and variance move toward the statistic with rate
    ``alpha / (alpha + w_match)`` (the weight taken after the indicator
    update, before renormalisation).  Without a match a new component is
    spawned at ``z`` with weight ``alpha`` and the existing weights are
    scaled by ``1 - alpha``.
    """
    w = alt.weights
    mu = alt.means
    sigma = alt.sigmas
    alpha = 1.0 / (1.0 + n1)

    matches = np.abs(z - mu) <= cfg.match_threshold * sigma
    if matches.any():
        k = int(np.argmax(matches))
        w = (1.0 - alpha) * w
        w[k] += alpha
        rho = alpha / (alpha + w[k])
        mu_old = mu[k]
        mu_new = (1.0 - rho) * mu_old + rho * z
        mu_used = mu_old if cfg.variance_update_uses_old_mean else mu_new
        var = (1.0 - rho) * sigma[k] ** 2 + rho * (z - mu_used) ** 2
        mu = mu.copy()
        sigma = sigma.copy()
        mu[k] = mu_new
        sigma[k] = max(math.sqrt(var), SIGMA_FLOOR)
    else:
        w = np.append((1.0 - alpha) * w, alpha)
        mu = np.append(mu, z)
        sigma = np.append(sigma, cfg.new_component_sigma)
    w = w / w.sum()

    if cfg.prune_threshold > 0:
        keep = w >= cfg.prune_threshold
        if not keep.all():
            w = w[keep]
            mu = mu[keep]
            sigma = sigma[keep]
            w = w / w.sum()

    comps = tuple(
        MixtureComponent(w=float(w[j]), mu=float(mu[j]), sigma=float(sigma[j]))
        for j in range(w.shape[0])
    )
    return AlternativeModel(components=comps), n1 + 1.0


# ----------------------------------------------------------------------
# vectorised population updates
# ----------------------------------------------------------------------
def update_nulls_inplace(ps: ParticleSystem, z: float, mask: np.ndarray, *,
                         update_mean: bool = True,
                         use_old_mean: bool = False) -> None:
    """Apply :func:`update_null` to every particle selected by ``mask``."""
    idx = np.where(mask)[0]
    if idx.size == 0:
        return
    alpha = 1.0 / (1.0 + ps.n0[idx])
    mu_old = ps.mu0[idx]
    mu_new = (1.0 - alpha) * mu_old + alpha * z if update_mean else mu_old
    mu_used = mu_old if use_old_mean else mu_new
    var = (1.0 - alpha) * ps.sigma0[idx] ** 2 + alpha * (z - mu_used) ** 2
    ps.mu0[idx] = mu_new
    ps.sigma0[idx] = np.maximum(np.sqrt(var), SIGMA_FLOOR)
    ps.n0[idx] += 1.0


def update_alternatives_inplace(ps: ParticleSystem, z: float, mask: np.ndarray,
                                cfg: RejuvenationConfig) -> None:
    """Apply :func:`update_alternative` to every particle selected by ``mask``."""
    idx = np.where(mask)[0]
    if idx.size == 0:
        return
    k_count = ps.n_comp[idx].copy()
    need_slots = int(k_count.max()) + 1
    if need_slots > ps.k_max:
        ps.grow_padding(need_slots)
    w = ps.comp_w[idx]
    mu = ps.comp_mu[idx]
    sigma = ps.comp_sigma[idx]
    k_max = w.shape[1]
    cols = np.arange(k_max)[None, :]
    active = cols < k_count[:, None]
    alpha = 1.0 / (1.0 + ps.n1[idx])

    matches = active & (np.abs(z - mu) <= cfg.match_threshold * sigma)
    has_match = matches.any(axis=1)
    first = np.argmax(matches, axis=1)

    rows_m = np.where(has_match)[0]
    if rows_m.size:
        am = alpha[rows_m]
        w[rows_m] *= (1.0 - am)[:, None]
        k = first[rows_m]
        wk = w[rows_m, k] + am
        w[rows_m, k] = wk
        rho = am / (am + wk)
        mu_old = mu[rows_m, k]
        mu_new = (1.0 - rho) * mu_old + rho * z
        mu_used = mu_old if cfg.variance_update_uses_old_mean else mu_new
        var = (1.0 - rho) * sigma[rows_m, k] ** 2 + rho * (z - mu_used) ** 2
        mu[rows_m, k] = mu_new
        sigma[rows_m, k] = np.maximum(np.sqrt(var), SIGMA_FLOOR)
        w[rows_m] /= w[rows_m].sum(axis=1, keepdims=True)

    rows_s = np.where(~has_match)[0]
    if rows_s.size:
        a_s = alpha[rows_s]
        slot = k_count[rows_s]
        w[rows_s] *= (1.0 - a_s)[:, None]
        w[rows_s, slot] = a_s
        mu[rows_s, slot] = z
        sigma[rows_s, slot] = cfg.new_component_sigma
        k_count[rows_s] += 1
        w[rows_s] /= w[rows_s].sum(axis=1, keepdims=True)

    if cfg.prune_threshold > 0:
        active = cols < k_count[:, None]
        keep = active & (w >= cfg.prune_threshold)
        pruned = np.where((active & ~keep).any(axis=1))[0]
        if pruned.size:
            # Stable left-compaction: kept components slide forward in
            # storage order, inert padding fills the tail.
            order = np.argsort(~keep[pruned], axis=1, kind="stable")
            wp = np.take_along_axis(w[pruned], order, axis=1)
            mup = np.take_along_axis(mu[pruned], order, axis=1)
            sigmap = np.take_along_axis(sigma[pruned], order, axis=1)
            new_k = keep[pruned].sum(axis=1)
            tail = cols >= new_k[:, None]
            wp[tail] = 0.0
            mup[tail] = 0.0
            sigmap[tail] = PAD_SIGMA
            wp /= wp.sum(axis=1, keepdims=True)
            w[pruned] = wp
            mu[pruned] = mup
            sigma[pruned] = sigmap
            k_count[pruned] = new_k

    ps.comp_w[idx] = w
    ps.comp_mu[idx] = mu
    ps.comp_sigma[idx] = sigma
    ps.n_comp[idx] = k_count
    ps.n1[idx] += 1.0


# ----------------------------------------------------------------------
# coefficient refresh
# ----------------------------------------------------------------------
def kernel_bandwidth(d: int, m: int) -> tuple[float, float]:
    """Shrinkage factor ``a`` and kernel bandwidth ``b`` for ``m`` draws in
    ``d`` dimensions: ``b = (4 / ((d + 2) m))^(1 / (d + 4))``,
    ``a = sqrt(1 - b^2)``, so the refresh preserves the population
    covariance (``a^2 Q + b^2 Q = Q``).
    """
    b = (4.0 / ((d + 2) * m)) ** (1.0 / (d + 4))
    a = math.sqrt(1.0 - b * b)
    return a, b


def _population_moments(beta: np.ndarray, weights: np.ndarray | None):
    m, d = beta.shape
    if weights is None:
        mean = beta.mean(axis=0)
        dev = beta - mean
        denom = m - 1
        q = np.empty((d, d))
        for i in range(d):
            for j in range(i + 1):
                # Explicit pairwise sums keep the reduction independent of
                # BLAS threading, preserving bit-level reproducibility.
                q[i, j] = q[j, i] = np.sum(dev[:, i] * dev[:, j]) / denom
    else:
        mean = np.empty(d)
        for i in range(d):
            mean[i] = np.sum(weights * beta[:, i])
        dev = beta - mean
        q = np.empty((d, d))
        for i in range(d):
            for j in range(i + 1):
                q[i, j] = q[j, i] = np.sum(weights * dev[:, i] * dev[:, j])
    return mean, q


def kernel_refresh(ps: ParticleSystem, rng: np.random.Generator, *,
                   weighted: bool = False) -> None:
    """Redraw every particle's coefficients from a shrunk Gaussian kernel.

    Each vector is pulled toward the population mean by the shrinkage
    factor, then perturbed with covariance ``b^2 Q``; in expectation the
    population mean and covariance are unchanged.  ``weighted`` switches
    the moment estimates to importance-weighted ones (used when a step
    skipped resampling).
    """
    beta = ps.beta
    m, d = beta.shape
    mean, q = _population_moments(beta, ps.weights() if weighted else None)
    a, b = kernel_bandwidth(d, m)
    shrunk = a * beta + (1.0 - a) * mean
    trace = float(np.trace(q))
    if not np.isfinite(trace) or trace <= 0.0:
        # Zero population spread: the kernel is a point mass at each vector.
        ps.beta = shrunk
        return
    try:
        chol = np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        ridge = 1e-10 * trace / d
        chol = np.linalg.cholesky(q + ridge * np.eye(d))
    noise = rng.standard_normal((m, d))
    ps.beta = shrunk + (b * noise) @ chol.T
