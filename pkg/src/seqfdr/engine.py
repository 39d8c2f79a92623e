"""Single-pass streaming engine: weight, resample, rejuvenate, decide.

The engine consumes each test record exactly once.  Per record it
reweights the particle population by the record's marginal likelihood,
resamples, lets every particle absorb the record into its null or
alternative model, and refreshes the regression coefficients.  When the
normalised effective sample size collapses below a threshold the
population is re-initialised from the prior and the triggering record is
re-processed, so no information is skipped.

Decisions are made at the end from the highest-weighted particle of the
final weighting (the weights produced by the last record, before the last
resampling pass made them uniform).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from . import rng as rng_mod
from .model import TestRecord, posterior_signal_probs
from .particles import (
    PAD_SIGMA,
    DegenerateSystemError,
    Likelihood,
    Particle,
    ParticleSystem,
    ess,
    residual_resample,
    reweight,
)
from .rejuvenation import (
    RejuvenationConfig,
    kernel_refresh,
    update_alternatives_inplace,
    update_nulls_inplace,
)

__all__ = [
    "EngineConfig",
    "StepTrace",
    "DecisionRecord",
    "ConfusionTable",
    "Engine",
    "confusion",
    "SNAPSHOT_SCHEMA",
]

SNAPSHOT_SCHEMA = "seqfdr.snapshot/1"

RESAMPLE_MODES = ("every_step", "ess_triggered")
ALLOCATION_RULES = ("posterior", "prior")


@dataclass
class EngineConfig:
    """All engine tunables.

    Defaults reproduce the reference synthetic experiment: ten thousand
    particles, a single wide alternative component at 3 with scale
    sqrt(20), null scale 1.5, allocation pseudo-counts 9 (null) and 1
    (alternative), a uniform coefficient prior on [-10, 10] per coordinate,
    re-initialisation when the normalised effective sample size drops below
    0.1, and signal calls at posterior probability 0.5.

    ``signal_allocation`` selects which probability routes a record into a
    particle's null or alternative model during rejuvenation: the posterior
    signal probability (default) or the covariate-only prior.  The prior
    rule reads the model update literally but starves the alternative
    mixture whenever high-prior covariates are rare; see the README.
    """

    n_particles: int = 10000
    seed: int = 0
    n0_init: float = 9.0
    n1_init: float = 1.0
    k_init: int = 1
    mu1_init: float = 3.0
    sigma1_init: float = math.sqrt(20.0)
    sigma0_init: float = 1.5
    mu0: float = 0.0
    beta_low: float = -10.0
    beta_high: float = 10.0
    ness_reinit_threshold: float = 0.1
    decision_threshold: float = 0.5
    resample_mode: str = "every_step"
    resample_ess_threshold: float = 0.5
    match_threshold: float = 2.5
    new_component_sigma: float = math.sqrt(20.0)
    prune_threshold: float = 1e-6
    variance_update_uses_old_mean: bool = False
    update_null_mean: bool = False
    signal_allocation: str = "posterior"
    adapt_null: bool = True
    adapt_alt: bool = True
    convolve: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if self.k_init < 1:
            raise ValueError("k_init must be at least 1")
        if self.n0_init < 0 or self.n1_init < 0:
            raise ValueError("allocation pseudo-counts must be nonnegative")
        if self.sigma0_init <= 0 or self.sigma1_init <= 0:
            raise ValueError("initial scales must be positive")
        if not self.beta_low < self.beta_high:
            raise ValueError("beta_low must be below beta_high")
        if not 0.0 < self.ness_reinit_threshold < 1.0:
            raise ValueError("ness_reinit_threshold must lie in (0, 1)")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must lie in (0, 1)")
        if self.resample_mode not in RESAMPLE_MODES:
            raise ValueError(f"resample_mode must be one of {RESAMPLE_MODES}")
        if not 0.0 < self.resample_ess_threshold <= 1.0:
            raise ValueError("resample_ess_threshold must lie in (0, 1]")
        if self.signal_allocation not in ALLOCATION_RULES:
            raise ValueError(f"signal_allocation must be one of {ALLOCATION_RULES}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        # Delegates range checks for the mixture-update fields.
        self.rejuvenation_config()

    def rejuvenation_config(self) -> RejuvenationConfig:
        return RejuvenationConfig(
            match_threshold=self.match_threshold,
            new_component_sigma=self.new_component_sigma,
            prune_threshold=self.prune_threshold,
            variance_update_uses_old_mean=self.variance_update_uses_old_mean,
        )

    def to_flat_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_flat_dict(cls, values: dict) -> "EngineConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown config key: {key!r}")
            kwargs[key] = _coerce(key, raw)
        return cls(**kwargs)


_FIELD_TYPES = {
    "n_particles": int, "seed": int, "k_init": int, "workers": int,
    "resample_mode": str, "signal_allocation": str,
    "variance_update_uses_old_mean": bool, "update_null_mean": bool,
    "adapt_null": bool, "adapt_alt": bool, "convolve": bool,
}


def _coerce(key: str, raw):
    target = _FIELD_TYPES.get(key, float)
    if isinstance(raw, str):
        raw = raw.strip()
        if target is bool:
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(f"config key {key!r} expects a boolean, got {raw!r}")
        return target(raw)
    if target is bool:
        return bool(raw)
    return target(raw)


@dataclass(frozen=True)
class StepTrace:
    """Per-record diagnostics: step index, NESS, MAP summary, reinit flag.

    ``ness`` is the normalised effective sample size of the post-weighting
    weights, except on re-initialised steps where it is 1.0 (the uniform
    weights of the fresh population, measured before re-weighting).
    """

    t: int
    ness: float
    map_beta: tuple[float, ...]
    map_k: int
    map_sigma0: float
    reinit: bool


@dataclass(frozen=True)
class DecisionRecord:
    """Final call for one record: posterior signal probability and label."""

    index: int
    posterior_prob: float
    declared: int


@dataclass(frozen=True)
class ConfusionTable:
    """Counts of declared vs. true hypotheses plus the realised FDR."""

    true_null_declared_null: int
    true_null_declared_alt: int
    true_alt_declared_null: int
    true_alt_declared_alt: int

    @property
    def total(self) -> int:
        return (self.true_null_declared_null + self.true_null_declared_alt
                + self.true_alt_declared_null + self.true_alt_declared_alt)

    @property
    def declared_alt(self) -> int:
        return self.true_null_declared_alt + self.true_alt_declared_alt

    @property
    def fdr(self) -> float:
        fp = self.true_null_declared_alt
        tp = self.true_alt_declared_alt
        return fp / max(1, fp + tp)

    @property
    def power(self) -> float:
        alt = self.true_alt_declared_null + self.true_alt_declared_alt
        return self.true_alt_declared_alt / max(1, alt)


def confusion(decisions: Sequence[DecisionRecord], truths: Sequence[int]) -> ConfusionTable:
    """Tabulate decisions against ground-truth labels."""
    if len(decisions) != len(truths):
        raise ValueError(
            f"length mismatch: {len(decisions)} decisions vs {len(truths)} truth labels"
        )
    declared = np.array([d.declared for d in decisions], dtype=int)
    truth = np.asarray(truths, dtype=float)
    if np.any(np.isnan(truth)):
        raise ValueError("every decision needs a truth label")
    truth = truth.astype(int)
    return ConfusionTable(
        true_null_declared_null=int(np.sum((truth == 0) & (declared == 0))),
        true_null_declared_alt=int(np.sum((truth == 0) & (declared == 1))),
        true_alt_declared_null=int(np.sum((truth == 1) & (declared == 0))),
        true_alt_declared_alt=int(np.sum((truth == 1) & (declared == 1))),
    )


class _ColumnBuffer:
    """Append-only per-record storage in flat arrays.

    Avoids retaining one Python object per processed record; with streams
    of 10^4..10^6 records, per-record objects make cyclic-GC sweeps grow
    with the stream and break the linear single-pass cost.
    """

    def __init__(self, n_covariates: int, d: int):
        self.n = 0
        self._cap = 1024
        self.rec_index = np.empty(self._cap, dtype=np.int64)
        self.rec_z = np.empty(self._cap)
        self.rec_x = np.empty((self._cap, n_covariates))
        self.ness = np.empty(self._cap)
        self.map_beta = np.empty((self._cap, d))
        self.map_k = np.empty(self._cap, dtype=np.int64)
        self.map_sigma0 = np.empty(self._cap)
        self.reinit = np.empty(self._cap, dtype=bool)

    def _grow(self) -> None:
        cap = self._cap * 2
        for name in ("rec_index", "rec_z", "rec_x", "ness", "map_beta",
                     "map_k", "map_sigma0", "reinit"):
            old = getattr(self, name)
            new = np.empty((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)
        self._cap = cap

    def append(self, rec_index, z, x, ness, map_beta, map_k, map_sigma0, reinit) -> None:
        if self.n == self._cap:
            self._grow()
        i = self.n
        self.rec_index[i] = rec_index
        self.rec_z[i] = z
        self.rec_x[i] = x
        self.ness[i] = ness
        self.map_beta[i] = map_beta
        self.map_k[i] = map_k
        self.map_sigma0[i] = map_sigma0
        self.reinit[i] = reinit
        self.n = i + 1


class Engine:
    """Runs the streaming loop over records and issues final decisions."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config if config is not None else EngineConfig()
        self.system: ParticleSystem | None = None
        self.t = 0
        self._columns: _ColumnBuffer | None = None
        self._map_particle: Particle | None = None
        self._beta_mean: np.ndarray | None = None
        self._pool = None
        if self.config.workers > 1:
            self._pool = ThreadPoolExecutor(max_workers=self.config.workers)

    # ------------------------------------------------------------------
    # lifecycle
    # ------------------------------------------------------------------
    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # ------------------------------------------------------------------
    # initialisation
    # ------------------------------------------------------------------
    def initialize(self, n_covariates: int, warm_start: dict | None = None) -> ParticleSystem:
        """Build the initial population.

        Without a warm start, coefficients are drawn uniformly from the
        configured box and every particle gets the configured null and
        single-component alternative.  With a warm start (a snapshot
        dictionary), particles are resampled with replacement from the
        snapshot cloud and the allocation counters are carried over.
        """
        if n_covariates < 1:
            raise ValueError("need at least one covariate")
        if warm_start is not None:
            self.system = self._system_from_snapshot(warm_start, n_covariates)
        else:
            self.system = self._fresh_system(n_covariates, step=0)
        return self.system

    def _fresh_system(self, n_covariates: int, step: int) -> ParticleSystem:
        cfg = self.config
        m = cfg.n_particles
        d = n_covariates + 1
        gen = rng_mod.stream(cfg.seed, step, rng_mod.TAG_INIT)
        beta = gen.uniform(cfg.beta_low, cfg.beta_high, size=(m, d))
        k = cfg.k_init
        return ParticleSystem(
            beta=beta,
            mu0=np.full(m, cfg.mu0),
            sigma0=np.full(m, cfg.sigma0_init),
            n0=np.full(m, cfg.n0_init),
            n1=np.full(m, cfg.n1_init),
            n_comp=np.full(m, k, dtype=np.int64),
            comp_w=np.full((m, k), 1.0 / k),
            comp_mu=np.full((m, k), cfg.mu1_init),
            comp_sigma=np.full((m, k), cfg.sigma1_init),
            log_w=np.full(m, -math.log(m)),
        )

    def _system_from_snapshot(self, snapshot: dict, n_covariates: int) -> ParticleSystem:
        if snapshot.get("schema") != SNAPSHOT_SCHEMA:
            raise ValueError(f"unsupported snapshot schema: {snapshot.get('schema')!r}")
        if snapshot["d"] != n_covariates + 1:
            raise ValueError(
                f"snapshot covers {snapshot['d'] - 1} covariates, data has {n_covariates}"
            )
        cfg = self.config
        rows = snapshot["particles"]
        weights = np.asarray(snapshot["weights"], dtype=float)
        if weights.shape[0] != len(rows) or np.any(weights < 0):
            raise ValueError("snapshot weights must be nonnegative, one per particle")
        gen = rng_mod.stream(cfg.seed, 0, rng_mod.TAG_WARM_START)
        picks = gen.choice(len(rows), size=cfg.n_particles, p=weights / weights.sum())
        m = cfg.n_particles
        k_max = max(max(len(r["components"]) for r in rows), 1)
        d = n_covariates + 1
        beta = np.empty((m, d))
        mu0 = np.empty(m)
        sigma0 = np.empty(m)
        n0 = np.empty(m)
        n1 = np.empty(m)
        n_comp = np.empty(m, dtype=np.int64)
        comp_w = np.zeros((m, k_max))
        comp_mu = np.zeros((m, k_max))
        comp_sigma = np.full((m, k_max), PAD_SIGMA)
        for slot, pick in enumerate(picks):
            row = rows[int(pick)]
            beta[slot] = row["beta"]
            mu0[slot] = row["mu0"]
            sigma0[slot] = row["sigma0"]
            n0[slot] = row["n0"]
            n1[slot] = row["n1"]
            comps = row["components"]
            n_comp[slot] = len(comps)
            for j, (w, mu, sigma) in enumerate(comps):
                comp_w[slot, j] = w
                comp_mu[slot, j] = mu
                comp_sigma[slot, j] = sigma
        log_w = np.full(m, -math.log(m))
        return ParticleSystem(beta, mu0, sigma0, n0, n1, n_comp,
                              comp_w, comp_mu, comp_sigma, log_w)

    # ------------------------------------------------------------------
    # streaming
    # ------------------------------------------------------------------
    def step(self, rec: TestRecord) -> StepTrace:
        """Consume one record: weight, maybe re-initialise, resample, rejuvenate."""
        cfg = self.config
        if self.system is None:
            self.initialize(rec.x.shape[0])
        system = self.system
        if rec.x.shape[0] + 1 != system.d:
            raise ValueError(
                f"record {rec.index} has {rec.x.shape[0]} covariates, "
                f"the run expects {system.d - 1}"
            )
        self.t += 1

        reinit = False
        lik: Likelihood | None = None
        report = None
        try:
            lik = reweight(system, rec, convolve=cfg.convolve, pool=self._pool)
            report = ess(system)
            if report.ness < cfg.ness_reinit_threshold:
                reinit = True
        except DegenerateSystemError:
            reinit = True
        if reinit:
            # Fresh prior population; the triggering record is re-processed
            # so its information is not lost.  A second collapse on the
            # fresh population is unrecoverable.
            system = self._fresh_system(system.d - 1, step=self.t)
            self.system = system
            lik = reweight(system, rec, convolve=cfg.convolve, pool=self._pool)
            report = ess(system)

        ness_recorded = 1.0 if reinit else report.ness
        map_particle = system.particle(system.map_index())
        self._map_particle = map_particle
        weights = system.weights()
        mean = np.empty(system.d)
        for j in range(system.d):
            mean[j] = np.sum(weights * system.beta[:, j])
        self._beta_mean = mean

        if cfg.resample_mode == "every_step" or report.ness < cfg.resample_ess_threshold:
            idx = residual_resample(system, rng_mod.stream(cfg.seed, self.t, rng_mod.TAG_RESAMPLE))
            lik = lik.gather(idx)
            resampled = True
        else:
            resampled = False

        alloc_alt = lik.signal_allocation(cfg.signal_allocation)
        if cfg.adapt_null:
            update_nulls_inplace(
                system, float(rec.z), ~alloc_alt,
                update_mean=cfg.update_null_mean,
                use_old_mean=cfg.variance_update_uses_old_mean,
            )
        if cfg.adapt_alt:
            update_alternatives_inplace(
                system, float(rec.z), alloc_alt, cfg.rejuvenation_config()
            )
        kernel_refresh(system, rng_mod.stream(cfg.seed, self.t, rng_mod.TAG_REFRESH),
                       weighted=not resampled)

        if self._columns is None:
            self._columns = _ColumnBuffer(system.d - 1, system.d)
        self._columns.append(rec.index, float(rec.z), rec.x, float(ness_recorded),
                             map_particle.beta, map_particle.alt.k,
                             float(map_particle.null.sigma0), reinit)
        return StepTrace(
            t=self.t,
            ness=float(ness_recorded),
            map_beta=tuple(float(v) for v in map_particle.beta),
            map_k=map_particle.alt.k,
            map_sigma0=float(map_particle.null.sigma0),
            reinit=reinit,
        )

    def run(self, records: Iterable[TestRecord]) -> list[StepTrace]:
        """Stream every record through :meth:`step`; returns the full trace."""
        for rec in records:
            self.step(rec)
        return self.trace

    # ------------------------------------------------------------------
    # results
    # ------------------------------------------------------------------
    @property
    def trace(self) -> list[StepTrace]:
        """Per-record diagnostics, one entry per processed record."""
        cols = self._columns
        if cols is None:
            return []
        return [
            StepTrace(
                t=i + 1,
                ness=float(cols.ness[i]),
                map_beta=tuple(float(v) for v in cols.map_beta[i]),
                map_k=int(cols.map_k[i]),
                map_sigma0=float(cols.map_sigma0[i]),
                reinit=bool(cols.reinit[i]),
            )
            for i in range(cols.n)
        ]

    @property
    def map_particle(self) -> Particle:
        """Highest-weighted particle of the most recent weighting."""
        if self._map_particle is None:
            raise RuntimeError("no records processed yet")
        return self._map_particle

    @property
    def posterior_beta_mean(self) -> np.ndarray:
        """Weight-averaged coefficients from the most recent weighting."""
        if self._beta_mean is None:
            raise RuntimeError("no records processed yet")
        return self._beta_mean.copy()

    def finalize_decisions(self) -> tuple[list[DecisionRecord], Particle]:
        """Score every buffered record under the MAP particle.

        The MAP particle is the one produced by the final weighting step
        (before the final resampling made the weights uniform).  Returns
        the decisions in input order together with that particle.
        """
        phi = self.map_particle
        cfg = self.config
        cols = self._columns
        n = cols.n
        z = cols.rec_z[:n]
        x = cols.rec_x[:n]
        probs = posterior_signal_probs(phi, z, x, convolve=cfg.convolve)
        decisions = [
            DecisionRecord(index=int(idx), posterior_prob=float(p),
                           declared=int(p > cfg.decision_threshold))
            for idx, p in zip(cols.rec_index[:n], probs)
        ]
        return decisions, phi

    def provisional_decision(self, rec: TestRecord) -> DecisionRecord:
        """Score one record under the current MAP particle (streaming mode)."""
        phi = self.map_particle
        probs = posterior_signal_probs(
            phi, np.array([rec.z]), rec.x[None, :], convolve=self.config.convolve
        )
        p = float(probs[0])
        return DecisionRecord(index=rec.index, posterior_prob=p,
                              declared=int(p > self.config.decision_threshold))

    # ------------------------------------------------------------------
    # snapshots
    # ------------------------------------------------------------------
    def to_snapshot(self) -> dict:
        """Serialisable posterior snapshot (loss-free float values)."""
        if self.system is None:
            raise RuntimeError("engine not initialised")
        system = self.system
        particles = []
        for i in range(system.m):
            k = int(system.n_comp[i])
            particles.append({
                "beta": [float(v) for v in system.beta[i]],
                "mu0": float(system.mu0[i]),
                "sigma0": float(system.sigma0[i]),
                "n0": float(system.n0[i]),
                "n1": float(system.n1[i]),
                "components": [
                    [float(system.comp_w[i, j]), float(system.comp_mu[i, j]),
                     float(system.comp_sigma[i, j])]
                    for j in range(k)
                ],
            })
        return {
            "schema": SNAPSHOT_SCHEMA,
            "t": self.t,
            "d": system.d,
            "config": self.config.to_flat_dict(),
            "weights": [float(w) for w in system.weights()],
            "particles": particles,
        }
