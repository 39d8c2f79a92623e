"""Scikit-learn style front end for the streaming tester.

``TwoGroupsSMC`` follows the unsupervised-estimator conventions: ``X`` is a
matrix whose first column holds the test statistics and whose remaining
columns hold the covariates (the same ordering as the CSV schema, minus the
id column).  ``fit`` streams the rows once and stores in-sample decisions;
``predict``/``predict_proba`` score arbitrary rows under the fitted MAP
parameters, and ``get_params``/``set_params``/``clone`` work as usual.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .engine import Engine, EngineConfig
from .model import TestRecord, posterior_signal_probs
from .validation import split_statistic_matrix

__all__ = ["TwoGroupsSMC"]


class TwoGroupsSMC(BaseEstimator):
    """Streaming Bayesian multiple tester with covariate-dependent priors.

    Parameters mirror :class:`~seqfdr.engine.EngineConfig`; see there for
    semantics.  All are stored verbatim so the estimator clones cleanly.

    Attributes (after ``fit``)
    --------------------------
    labels_ : (n,) int array of in-sample signal calls (1 = signal)
    posterior_prob_ : (n,) posterior signal probabilities
    map_particle_ : the highest-weighted parameter hypothesis
    engine_ : the underlying :class:`~seqfdr.engine.Engine`
    trace_ : per-record diagnostics (NESS, MAP summary, reinit flags)
    n_features_in_ : number of input columns (statistic + covariates)
    """

    def __init__(self, n_particles=10000, seed=0, n0_init=9.0, n1_init=1.0,
                 k_init=1, mu1_init=3.0, sigma1_init=math.sqrt(20.0),
                 sigma0_init=1.5, mu0=0.0, beta_low=-10.0, beta_high=10.0,
                 ness_reinit_threshold=0.1, decision_threshold=0.5,
                 resample_mode="every_step", resample_ess_threshold=0.5,
                 match_threshold=2.5, new_component_sigma=math.sqrt(20.0),
                 prune_threshold=1e-6, variance_update_uses_old_mean=False,
                 update_null_mean=False, signal_allocation="posterior",
                 adapt_null=True, adapt_alt=True, convolve=False, workers=1):
        self.n_particles = n_particles
        self.seed = seed
        self.n0_init = n0_init
        self.n1_init = n1_init
        self.k_init = k_init
        self.mu1_init = mu1_init
        self.sigma1_init = sigma1_init
        self.sigma0_init = sigma0_init
        self.mu0 = mu0
        self.beta_low = beta_low
        self.beta_high = beta_high
        self.ness_reinit_threshold = ness_reinit_threshold
        self.decision_threshold = decision_threshold
        self.resample_mode = resample_mode
        self.resample_ess_threshold = resample_ess_threshold
        self.match_threshold = match_threshold
        self.new_component_sigma = new_component_sigma
        self.prune_threshold = prune_threshold
        self.variance_update_uses_old_mean = variance_update_uses_old_mean
        self.update_null_mean = update_null_mean
        self.signal_allocation = signal_allocation
        self.adapt_null = adapt_null
        self.adapt_alt = adapt_alt
        self.convolve = convolve
        self.workers = workers

    def _engine_config(self) -> EngineConfig:
        return EngineConfig(**{k: getattr(self, k) for k in EngineConfig().to_flat_dict()})

    def _check_fitted(self) -> None:
        if not hasattr(self, "engine_"):
            raise RuntimeError("this estimator has not been fitted yet")

    def fit(self, X, y=None):
        """Stream the rows of ``X`` once and store in-sample decisions."""
        X = np.asarray(X, dtype=float)
        self.engine_ = Engine(self._engine_config())
        self._n_seen = 0
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Continue the stream with more rows (same column layout)."""
        z, covariates = split_statistic_matrix(X)
        if not hasattr(self, "engine_"):
            self.engine_ = Engine(self._engine_config())
            self._n_seen = 0
        if hasattr(self, "n_features_in_") and X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"column count changed: fitted with {self.n_features_in_}, got {X.shape[1]}"
            )
        self.n_features_in_ = X.shape[1]
        for i in range(z.shape[0]):
            self.engine_.step(TestRecord(index=self._n_seen + i, z=float(z[i]), x=covariates[i]))
        self._n_seen += z.shape[0]
        decisions, phi = self.engine_.finalize_decisions()
        self.map_particle_ = phi
        self.posterior_prob_ = np.array([d.posterior_prob for d in decisions])
        self.labels_ = np.array([d.declared for d in decisions], dtype=int)
        self.trace_ = list(self.engine_.trace)
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Posterior signal probability of each row under the MAP parameters."""
        self._check_fitted()
        z, covariates = split_statistic_matrix(X)
        return posterior_signal_probs(self.map_particle_, z, covariates,
                                      convolve=self.convolve)

    def predict(self, X) -> np.ndarray:
        """Signal/null call (1/0) for each row under the MAP parameters."""
        probs = self.predict_proba(X)
        return (probs > self.decision_threshold).astype(int)

    def fit_predict(self, X, y=None) -> np.ndarray:
        """Fit on ``X`` and return the in-sample decisions."""
        return self.fit(X).labels_

    def score(self, X, y=None) -> float:
        """Mean log marginal likelihood of rows under the MAP parameters."""
        self._check_fitted()
        z, covariates = split_statistic_matrix(X)
        phi = self.map_particle_
        from .model import alt_logpdf, null_logpdf, signal_prior_logs

        s = np.full(z.shape[0], phi.beta[0])
        for j in range(covariates.shape[1]):
            s += phi.beta[j + 1] * covariates[:, j]
        log_c, log_1mc = signal_prior_logs(s)
        log_f0 = null_logpdf(phi.null, z)
        log_f1 = alt_logpdf(phi.alt, phi.null, z, convolve=self.convolve)
        return float(np.mean(np.logaddexp(log_c + log_f1, log_1mc + log_f0)))
