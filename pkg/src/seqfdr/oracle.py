"""Brute-force verification oracles.

Two independent reference computations back the test suite: decisions made
with the exact generating parameters, and a dense-grid evaluation of the
coefficient posterior for tiny streams.  Both are deliberately simple and
share no update logic with the streaming engine they check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .datagen import GeneratorSpec
from .engine import DecisionRecord
from .model import (
    AlternativeModel,
    NullModel,
    TestRecord,
    alt_logpdf,
    null_logpdf,
    posterior_signal_probs,
    signal_prior_logs,
)

__all__ = ["true_param_decisions", "GridPosterior", "grid_posterior_beta"]

MAX_GRID_CELLS = 10_000_000
_GRID_BLOCK = 200_000


def true_param_decisions(records: Sequence[TestRecord], spec: GeneratorSpec,
                         threshold: float = 0.5) -> list[DecisionRecord]:
    """Decisions under the exact generating parameters.

    The posterior signal probability is evaluated with the generator's own
    parameters and sampling semantics, then thresholded like the engine's
    final pass.
    """
    z = np.array([r.z for r in records])
    x = np.stack([r.x for r in records]) if records else np.empty((0, 0))
    probs = posterior_signal_probs(spec, z, x, convolve=spec.convolve)
    return [
        DecisionRecord(index=r.index, posterior_prob=float(p), declared=int(p > threshold))
        for r, p in zip(records, probs)
    ]


@dataclass(frozen=True)
class GridPosterior:
    """Normalised posterior over coefficients on a regular grid."""

    axes: tuple[np.ndarray, ...]
    log_post: np.ndarray  # flat, length prod(len(axis))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_post).reshape(self.shape)

    def mean(self) -> np.ndarray:
        p = np.exp(self.log_post)
        grid = _grid_matrix(self.axes)
        return np.array([float(np.sum(p * grid[:, j])) for j in range(grid.shape[1])])

    def marginal(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (axis values, marginal pmf) for one coefficient."""
        p = self.probabilities()
        other = tuple(i for i in range(p.ndim) if i != dim)
        return self.axes[dim], p.sum(axis=other)


def _grid_matrix(axes: tuple[np.ndarray, ...]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_posterior_beta(records: Sequence[TestRecord], null: NullModel,
                        alt: AlternativeModel, *, convolve: bool = False,
                        low: float = -10.0, high: float = 10.0,
                        resolution: int = 101) -> GridPosterior:
    """Exhaustive coefficient posterior with the two densities held fixed.

    Evaluates the product of two-groups marginals times a flat prior on a
    regular box grid and normalises it.  Only the coefficients vary, so the
    result is the exact (up to grid resolution) posterior the streaming
    engine targets when model adaptation is disabled.
    """
    if not records:
        d = 2
    else:
        d = records[0].x.shape[0] + 1
    cells = resolution**d
    if cells > MAX_GRID_CELLS:
        raise ValueError(
            f"grid of {cells} cells exceeds the {MAX_GRID_CELLS} cell limit; "
            "reduce the resolution or the covariate count"
        )
    axes = tuple(np.linspace(low, high, resolution) for _ in range(d))
    grid = _grid_matrix(axes)

    if not records:
        log_post = np.full(cells, -np.log(cells))
        return GridPosterior(axes=axes, log_post=log_post)

    z = np.array([r.z for r in records])
    x = np.stack([r.x for r in records])
    log_f0 = null_logpdf(null, z)
    log_f1 = alt_logpdf(alt, null, z, convolve=convolve)

    loglik = np.empty(cells)
    for lo in range(0, cells, _GRID_BLOCK):
        hi = min(lo + _GRID_BLOCK, cells)
        block = grid[lo:hi]
        # (n, g): one linear predictor per record per grid point
        s = block[:, 0][None, :] + x @ block[:, 1:].T
        log_c, log_1mc = signal_prior_logs(s)
        terms = np.logaddexp(log_c + log_f1[:, None], log_1mc + log_f0[:, None])
        loglik[lo:hi] = terms.sum(axis=0)
    log_post = loglik - logsumexp(loglik)
    return GridPosterior(axes=axes, log_post=log_post)
