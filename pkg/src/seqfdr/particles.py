"""Weighted particle population over the two-groups model parameters.

Each particle carries one full hypothesis: regression coefficients, a null
model, an alternative mixture and the two allocation counters.  The
population is stored struct-of-arrays so that weighting, resampling and
rejuvenation are vectorised across particles; mixture components are padded
to a shared width and entries at or beyond a particle's component count are
inert (weight zero).

Weights are kept as normalised log weights; normalisation uses the
max-shift so extreme likelihood ratios survive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AlternativeModel, MixtureComponent, NullModel, signal_prior_logs

__all__ = [
    "Particle",
    "EssReport",
    "ParticleSystem",
    "Likelihood",
    "DegenerateSystemError",
    "compute_likelihood",
    "reweight",
    "ess",
    "residual_resample_counts",
    "residual_resample",
]

_LOG_TWO_PI = float(np.log(2.0 * np.pi))

# Placeholder scale for inert component slots; keeps density formulas NaN-free.
PAD_SIGMA = 1.0
# Lower clamp applied to every adapted scale parameter.
SIGMA_FLOOR = 1e-6

#: Number of particles processed per task when a worker pool is used.  Fixed
#: (never derived from the worker count) so results are identical for any
#: level of parallelism.
LIKELIHOOD_BLOCK = 4096


class DegenerateSystemError(RuntimeError):
    """Every particle assigned zero likelihood to the incoming statistic."""


def logsumexp_rows(a: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp with max shift; all-(-inf) rows map to -inf."""
    m = np.max(a, axis=1)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return m_safe + np.log(np.exp(a - m_safe[:, None]).sum(axis=1))


@dataclass(frozen=True)
class Particle:
    """A single hypothesis over all model parameters."""

    beta: np.ndarray
    null: NullModel
    alt: AlternativeModel
    n0: float
    n1: float

    def __post_init__(self) -> None:
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite 1-D vector")
        object.__setattr__(self, "beta", beta)
        if self.n0 < 0 or self.n1 < 0:
            raise ValueError("allocation counters must be nonnegative")


@dataclass(frozen=True)
class EssReport:
    """Effective sample size and its normalised form ``ess / M``."""

    ess: float
    ness: float


class ParticleSystem:
    """M weighted particles stored as parallel arrays.

    Attributes
    ----------
    beta : (M, d) regression coefficients
    mu0, sigma0 : (M,) null parameters
    n0, n1 : (M,) allocation counters
    n_comp : (M,) active component counts
    comp_w, comp_mu, comp_sigma : (M, k_max) padded mixture parameters
    log_w : (M,) normalised log weights
    """

    def __init__(self, beta, mu0, sigma0, n0, n1, n_comp, comp_w, comp_mu, comp_sigma, log_w):
        self.beta = np.asarray(beta, dtype=float)
        self.mu0 = np.asarray(mu0, dtype=float)
        self.sigma0 = np.asarray(sigma0, dtype=float)
        self.n0 = np.asarray(n0, dtype=float)
        self.n1 = np.asarray(n1, dtype=float)
        self.n_comp = np.asarray(n_comp, dtype=np.int64)
        self.comp_w = np.asarray(comp_w, dtype=float)
        self.comp_mu = np.asarray(comp_mu, dtype=float)
        self.comp_sigma = np.asarray(comp_sigma, dtype=float)
        self.log_w = np.asarray(log_w, dtype=float)
        m = self.beta.shape[0]
        if m < 2:
            raise ValueError("a particle system needs at least two particles")
        for name in ("mu0", "sigma0", "n0", "n1", "n_comp", "log_w"):
            if getattr(self, name).shape != (m,):
                raise ValueError(f"{name} must have shape ({m},)")
        if not (self.comp_w.shape == self.comp_mu.shape == self.comp_sigma.shape):
            raise ValueError("component arrays must share one shape")
        if self.comp_w.shape[0] != m:
            raise ValueError("component arrays must have one row per particle")

    # ------------------------------------------------------------------
    # basic views
    # ------------------------------------------------------------------
    @property
    def m(self) -> int:
        return self.beta.shape[0]

    @property
    def d(self) -> int:
        return self.beta.shape[1]

    @property
    def k_max(self) -> int:
        return self.comp_w.shape[1]

    def weights(self) -> np.ndarray:
        return np.exp(self.log_w)

    def active_mask(self) -> np.ndarray:
        return np.arange(self.k_max)[None, :] < self.n_comp[:, None]

    def particle(self, i: int) -> Particle:
        k = int(self.n_comp[i])
        w = self.comp_w[i, :k]
        total = w.sum()
        comps = tuple(
            MixtureComponent(w=float(w[j] / total), mu=float(self.comp_mu[i, j]),
                             sigma=float(self.comp_sigma[i, j]))
            for j in range(k)
        )
        return Particle(
            beta=self.beta[i].copy(),
            null=NullModel(mu0=float(self.mu0[i]), sigma0=float(self.sigma0[i])),
            alt=AlternativeModel(components=comps),
            n0=float(self.n0[i]),
            n1=float(self.n1[i]),
        )

    def particles_list(self) -> list[Particle]:
        return [self.particle(i) for i in range(self.m)]

    @classmethod
    def from_particles(cls, particles, weights=None) -> "ParticleSystem":
        m = len(particles)
        if m < 2:
            raise ValueError("a particle system needs at least two particles")
        d = particles[0].beta.shape[0]
        k_max = max(p.alt.k for p in particles)
        beta = np.stack([np.asarray(p.beta, dtype=float) for p in particles])
        if beta.shape != (m, d):
            raise ValueError("all particles must share one beta dimension")
        mu0 = np.array([p.null.mu0 for p in particles])
        sigma0 = np.array([p.null.sigma0 for p in particles])
        n0 = np.array([p.n0 for p in particles], dtype=float)
        n1 = np.array([p.n1 for p in particles], dtype=float)
        n_comp = np.array([p.alt.k for p in particles], dtype=np.int64)
        comp_w = np.zeros((m, k_max))
        comp_mu = np.zeros((m, k_max))
        comp_sigma = np.full((m, k_max), PAD_SIGMA)
        for i, p in enumerate(particles):
            k = p.alt.k
            comp_w[i, :k] = p.alt.weights
            comp_mu[i, :k] = p.alt.means
            comp_sigma[i, :k] = p.alt.sigmas
        if weights is None:
            log_w = np.full(m, -np.log(m))
        else:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (m,) or np.any(weights < 0):
                raise ValueError("weights must be a nonnegative length-M vector")
            with np.errstate(divide="ignore"):
                log_w = np.log(weights / weights.sum())
        return cls(beta, mu0, sigma0, n0, n1, n_comp, comp_w, comp_mu, comp_sigma, log_w)

    def copy(self) -> "ParticleSystem":
        return ParticleSystem(
            self.beta.copy(), self.mu0.copy(), self.sigma0.copy(), self.n0.copy(),
            self.n1.copy(), self.n_comp.copy(), self.comp_w.copy(), self.comp_mu.copy(),
            self.comp_sigma.copy(), self.log_w.copy(),
        )

    # ------------------------------------------------------------------
    # layout maintenance
    # ------------------------------------------------------------------
    def gather(self, idx: np.ndarray) -> None:
        """Reindex all state arrays (not the weights) by ``idx``, in place."""
        self.beta = self.beta[idx]
        self.mu0 = self.mu0[idx]
        self.sigma0 = self.sigma0[idx]
        self.n0 = self.n0[idx]
        self.n1 = self.n1[idx]
        self.n_comp = self.n_comp[idx]
        self.comp_w = self.comp_w[idx]
        self.comp_mu = self.comp_mu[idx]
        self.comp_sigma = self.comp_sigma[idx]

    def grow_padding(self, k_new: int) -> None:
        """Widen the component arrays to at least ``k_new`` slots."""
        k_old = self.k_max
        if k_new <= k_old:
            return
        pad = k_new - k_old
        self.comp_w = np.pad(self.comp_w, ((0, 0), (0, pad)))
        self.comp_mu = np.pad(self.comp_mu, ((0, 0), (0, pad)))
        self.comp_sigma = np.pad(self.comp_sigma, ((0, 0), (0, pad)), constant_values=PAD_SIGMA)

    def shrink_padding(self) -> None:
        """Drop trailing all-inert component columns (after resampling)."""
        k_used = max(int(self.n_comp.max()), 1)
        if k_used < self.k_max:
            self.comp_w = self.comp_w[:, :k_used].copy()
            self.comp_mu = self.comp_mu[:, :k_used].copy()
            self.comp_sigma = self.comp_sigma[:, :k_used].copy()

    def map_index(self) -> int:
        """Index of the highest-weighted particle (ties: lowest index)."""
        return int(np.argmax(self.log_w))


# ----------------------------------------------------------------------
# likelihood evaluation
# ----------------------------------------------------------------------
@dataclass
class Likelihood:
    """Per-particle log quantities for one record.

    ``s`` is the linear predictor; the rest are log densities.  All arrays
    have shape (M,).  Kept around so the rejuvenation step can reuse them
    (gathered through the resampling index) without re-evaluating.
    """

    s: np.ndarray
    log_c: np.ndarray
    log_1mc: np.ndarray
    log_f0: np.ndarray
    log_f1: np.ndarray
    log_marginal: np.ndarray

    def gather(self, idx: np.ndarray) -> "Likelihood":
        return Likelihood(
            self.s[idx], self.log_c[idx], self.log_1mc[idx],
            self.log_f0[idx], self.log_f1[idx], self.log_marginal[idx],
        )

    def signal_allocation(self, rule: str) -> np.ndarray:
        """Boolean mask: allocate the record to the alternative model.

        ``"prior"`` compares the prior signal probability with 1/2 (the
        boundary goes to the alternative); ``"posterior"`` compares the
        posterior signal probability with 1/2.
        """
        if rule == "prior":
            return self.s >= 0.0
        if rule == "posterior":
            num = self.log_c + self.log_f1
            den = self.log_1mc + self.log_f0
            out = num >= den
            # Both branches underflown: posterior degenerates to the prior.
            both_dead = np.isneginf(num) & np.isneginf(den)
            if np.any(both_dead):
                out[both_dead] = self.s[both_dead] >= 0.0
            return out
        raise ValueError(f"unknown allocation rule: {rule!r}")


def _likelihood_block(ps: ParticleSystem, z: float, x: np.ndarray, lo: int, hi: int,
                      convolve: bool, out: Likelihood) -> None:
    beta = ps.beta[lo:hi]
    s = beta[:, 0].copy()
    for j in range(x.shape[0]):
        s += beta[:, j + 1] * x[j]
    log_c, log_1mc = signal_prior_logs(s)

    sigma0 = ps.sigma0[lo:hi]
    u0 = (z - ps.mu0[lo:hi]) / sigma0
    with np.errstate(over="ignore"):  # absurd tails map to -inf log density
        log_f0 = -0.5 * u0 * u0 - np.log(sigma0) - 0.5 * _LOG_TWO_PI

    w = ps.comp_w[lo:hi]
    mu = ps.comp_mu[lo:hi]
    sigma = ps.comp_sigma[lo:hi]
    if convolve:
        mu = mu + ps.mu0[lo:hi, None]
        sigma = np.sqrt(sigma**2 + sigma0[:, None] ** 2)
    u1 = (z - mu) / sigma
    with np.errstate(divide="ignore", over="ignore"):
        comp = -0.5 * u1 * u1 - np.log(sigma) - 0.5 * _LOG_TWO_PI + np.log(w)
    log_f1 = logsumexp_rows(comp)

    out.s[lo:hi] = s
    out.log_c[lo:hi] = log_c
    out.log_1mc[lo:hi] = log_1mc
    out.log_f0[lo:hi] = log_f0
    out.log_f1[lo:hi] = log_f1
    out.log_marginal[lo:hi] = np.logaddexp(log_c + log_f1, log_1mc + log_f0)


def compute_likelihood(ps: ParticleSystem, z: float, x: np.ndarray, *,
                       convolve: bool = False, pool=None) -> Likelihood:
    """Evaluate the two-groups log marginal for one record, per particle.

    ``pool`` is an optional executor; the particle range is split into
    fixed-size blocks so the result is identical with or without it.
    """
    m = ps.m
    x = np.asarray(x, dtype=float)
    if x.shape[0] + 1 != ps.d:
        raise ValueError(
            f"dimension mismatch: system expects {ps.d - 1} covariates, got {x.shape[0]}"
        )
    out = Likelihood(*(np.empty(m) for _ in range(6)))
    if pool is None or m <= LIKELIHOOD_BLOCK:
        _likelihood_block(ps, z, x, 0, m, convolve, out)
        return out
    edges = list(range(0, m, LIKELIHOOD_BLOCK)) + [m]
    futures = [
        pool.submit(_likelihood_block, ps, z, x, lo, hi, convolve, out)
        for lo, hi in zip(edges[:-1], edges[1:])
    ]
    for f in futures:
        f.result()
    return out


def _normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    shift = log_w.max()
    if not np.isfinite(shift):
        raise DegenerateSystemError(
            "all particles assign zero likelihood; the system cannot be reweighted"
        )
    return log_w - (shift + np.log(np.exp(log_w - shift).sum()))


def reweight(ps: ParticleSystem, rec, *, convolve: bool = False, pool=None) -> Likelihood:
    """Multiply weights by the record's marginal likelihood and renormalise.

    Operates fully in log space.  Raises :class:`DegenerateSystemError`
    when every particle's likelihood underflows even there.
    """
    lik = compute_likelihood(ps, float(rec.z), rec.x, convolve=convolve, pool=pool)
    ps.log_w = _normalize_log_weights(ps.log_w + lik.log_marginal)
    return lik


def ess(ps: ParticleSystem) -> EssReport:
    """Effective sample size ``1 / sum(w^2)`` of the normalised weights."""
    w = np.exp(ps.log_w)
    value = float(1.0 / np.sum(w * w))
    value = min(max(value, 1.0), float(ps.m))
    return EssReport(ess=value, ness=value / ps.m)


def residual_resample_counts(weights: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Unbiased residual-resampling copy counts.

    Particle ``i`` is copied ``floor(size * w_i)`` times deterministically;
    the remaining slots are filled multinomially with probabilities
    proportional to the residuals, so ``E[count_i] = size * w_i`` exactly.
    """
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    scaled = size * weights
    counts = np.floor(scaled).astype(np.int64)
    r = size - int(counts.sum())
    if r > 0:
        resid = scaled - counts
        total = resid.sum()
        if total <= 0:  # only reachable through floating-point drift
            counts[np.argsort(-weights, kind="stable")[:r]] += 1
        else:
            counts += rng.multinomial(r, resid / total)
    return counts


def residual_resample(ps: ParticleSystem, rng: np.random.Generator) -> np.ndarray:
    """Resample the system in place; returns the ancestor index of each slot."""
    counts = residual_resample_counts(ps.weights(), ps.m, rng)
    idx = np.repeat(np.arange(ps.m), counts)
    ps.gather(idx)
    ps.log_w = np.full(ps.m, -np.log(ps.m))
    ps.shrink_padding()
    return idx
