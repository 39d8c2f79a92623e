"""Synthetic data generation and ingestion transforms.

Records are drawn from the same two-groups law the engine fits: covariates
from a configurable distribution, a Bernoulli signal indicator with the
logistic prior, then the statistic from the null or the alternative.  The
default spec reproduces the reference synthetic experiment (two standard
normal covariates, coefficients (-3.5, sqrt(2)/2, sqrt(2)/2), unit normal
null, alternative N(3, 0.5^2)).

:func:`fisher_transform` turns correlation coefficients into approximately
unit-variance Gaussian statistics so correlation screens can feed the same
engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import rng as rng_mod
from .model import AlternativeModel, MixtureComponent, NullModel, TestRecord

__all__ = [
    "GeneratorSpec",
    "default_generator_spec",
    "generate",
    "generate_arrays",
    "fisher_transform",
    "spec_to_dict",
    "spec_from_dict",
]

COVARIATE_DISTRIBUTIONS = ("normal", "uniform")

GENERATOR_SCHEMA = "seqfdr.generator/1"


@dataclass(frozen=True)
class GeneratorSpec:
    """Full description of a synthetic stream.

    ``convolve=False`` draws alternative statistics directly from the
    mixture; ``convolve=True`` draws a shift from the mixture and adds
    null-scale noise (the hierarchical reading).  ``covariate_dist`` is
    ``"normal"`` (iid standard normal) or ``"uniform"`` over
    ``[cov_low, cov_high]`` per coordinate.
    """

    n: int
    beta: np.ndarray
    null: NullModel
    alt: AlternativeModel
    convolve: bool = False
    covariate_dist: str = "normal"
    cov_low: float = -1.0
    cov_high: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.shape[0] < 2 or not np.all(np.isfinite(beta)):
            raise ValueError("beta must be a finite vector with an intercept and >= 1 slope")
        object.__setattr__(self, "beta", beta)
        if self.covariate_dist not in COVARIATE_DISTRIBUTIONS:
            raise ValueError(f"covariate_dist must be one of {COVARIATE_DISTRIBUTIONS}")
        if self.covariate_dist == "uniform" and not self.cov_low < self.cov_high:
            raise ValueError("cov_low must be below cov_high")

    @property
    def n_covariates(self) -> int:
        return self.beta.shape[0] - 1


def default_generator_spec(n: int = 10000, seed: int = 0, *,
                           n_covariates: int = 2,
                           covariate_dist: str = "normal",
                           cov_low: float = -1.0, cov_high: float = 1.0,
                           convolve: bool = False) -> GeneratorSpec:
    """Reference synthetic stream; the slope is sqrt(2)/2 per covariate."""
    beta = np.concatenate([[-3.5], np.full(n_covariates, math.sqrt(2.0) / 2.0)])
    return GeneratorSpec(
        n=n,
        beta=beta,
        null=NullModel(mu0=0.0, sigma0=1.0),
        alt=AlternativeModel(components=(MixtureComponent(w=1.0, mu=3.0, sigma=0.5),)),
        convolve=convolve,
        covariate_dist=covariate_dist,
        cov_low=cov_low,
        cov_high=cov_high,
        seed=seed,
    )


def generate_arrays(spec: GeneratorSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw the stream as arrays ``(z, x, truth)``; reproducible per seed."""
    gen = rng_mod.stream(spec.seed, 0, rng_mod.TAG_GENERATE)
    n = spec.n
    j = spec.n_covariates
    if spec.covariate_dist == "normal":
        x = gen.standard_normal((n, j))
    else:
        x = gen.uniform(spec.cov_low, spec.cov_high, size=(n, j))
    s = np.full(n, spec.beta[0])
    for jj in range(j):
        s += spec.beta[jj + 1] * x[:, jj]
    c = expit(s)
    h = (gen.random(n) < c).astype(np.int64)

    z = spec.null.mu0 + spec.null.sigma0 * gen.standard_normal(n)
    alt_rows = np.where(h == 1)[0]
    if alt_rows.size:
        w = spec.alt.weights
        pick = gen.choice(w.shape[0], size=alt_rows.size, p=w / w.sum())
        mu = spec.alt.means[pick]
        sigma = spec.alt.sigmas[pick]
        if spec.convolve:
            shift = mu + sigma * gen.standard_normal(alt_rows.size)
            z_alt = spec.null.mu0 + shift + spec.null.sigma0 * gen.standard_normal(alt_rows.size)
        else:
            z_alt = mu + sigma * gen.standard_normal(alt_rows.size)
        z[alt_rows] = z_alt
    return z, x, h


def generate(spec: GeneratorSpec) -> list[TestRecord]:
    """Draw the stream as :class:`TestRecord` objects with truth labels."""
    z, x, h = generate_arrays(spec)
    return [
        TestRecord(index=i, z=float(z[i]), x=x[i], truth=int(h[i]))
        for i in range(spec.n)
    ]


def fisher_transform(r: float, n_trials: int, *, standardize: bool = True) -> float:
    """Map a correlation to an approximately Gaussian statistic.

    Returns ``atanh(r) * sqrt(n_trials - 3)``; with ``standardize=False``
    the raw ``atanh(r)`` is returned instead.  The scaling makes null
    correlations approximately standard normal, matching the engine's
    Gaussian null.
    """
    if not abs(r) < 1.0:
        raise ValueError(f"correlation must lie strictly inside (-1, 1), got {r}")
    if n_trials <= 3:
        raise ValueError(f"need more than 3 trials, got {n_trials}")
    value = math.atanh(r)
    if standardize:
        value *= math.sqrt(n_trials - 3)
    return value


# ----------------------------------------------------------------------
# serialisation (consumed by the CLI and the figure renderer)
# ----------------------------------------------------------------------
def spec_to_dict(spec: GeneratorSpec) -> dict:
    return {
        "schema": GENERATOR_SCHEMA,
        "n": spec.n,
        "beta": [float(v) for v in spec.beta],
        "null": {"mu0": spec.null.mu0, "sigma0": spec.null.sigma0},
        "alt": [[c.w, c.mu, c.sigma] for c in spec.alt.components],
        "convolve": spec.convolve,
        "covariate_dist": spec.covariate_dist,
        "cov_low": spec.cov_low,
        "cov_high": spec.cov_high,
        "seed": spec.seed,
    }


def spec_from_dict(data: dict) -> GeneratorSpec:
    if data.get("schema") != GENERATOR_SCHEMA:
        raise ValueError(f"unsupported generator schema: {data.get('schema')!r}")
    return GeneratorSpec(
        n=int(data["n"]),
        beta=np.asarray(data["beta"], dtype=float),
        null=NullModel(mu0=float(data["null"]["mu0"]), sigma0=float(data["null"]["sigma0"])),
        alt=AlternativeModel(components=tuple(
            MixtureComponent(w=float(w), mu=float(mu), sigma=float(sigma))
            for w, mu, sigma in data["alt"]
        )),
        convolve=bool(data["convolve"]),
        covariate_dist=str(data["covariate_dist"]),
        cov_low=float(data["cov_low"]),
        cov_high=float(data["cov_high"]),
        seed=int(data["seed"]),
    )
