"""Streaming sequential Monte Carlo for covariate-informed multiple testing.

The package fits a two-groups mixture model (Gaussian null, adaptive
Gaussian-mixture alternative, logistic covariate-dependent signal prior)
with a single pass over the test statistics, maintaining a weighted
particle population over all model parameters and emitting signal/null
decisions at the end.

Typical use::

    from seqfdr import Engine, EngineConfig
    from seqfdr.datagen import default_generator_spec, generate

    records = generate(default_generator_spec(n=10000, seed=1))
    engine = Engine(EngineConfig(seed=1))
    engine.run(records)
    decisions, map_particle = engine.finalize_decisions()

or, scikit-learn style (first column of ``X`` is the statistic)::

    from seqfdr import TwoGroupsSMC
    labels = TwoGroupsSMC(seed=1).fit_predict(X)
"""

from .engine import (
    ConfusionTable,
    DecisionRecord,
    Engine,
    EngineConfig,
    StepTrace,
    confusion,
)
from .model import (
    AlternativeModel,
    MixtureComponent,
    NullModel,
    TestRecord,
    alt_density,
    logistic_prior,
    marginal_likelihood,
    null_density,
    posterior_signal_prob,
)
from .particles import (
    DegenerateSystemError,
    EssReport,
    Particle,
    ParticleSystem,
    ess,
    residual_resample,
    reweight,
)

__version__ = "0.1.0"

__all__ = [
    "AlternativeModel",
    "ConfusionTable",
    "DecisionRecord",
    "DegenerateSystemError",
    "Engine",
    "EngineConfig",
    "EssReport",
    "MixtureComponent",
    "NullModel",
    "Particle",
    "ParticleSystem",
    "StepTrace",
    "TestRecord",
    "TwoGroupsSMC",
    "alt_density",
    "confusion",
    "ess",
    "logistic_prior",
    "marginal_likelihood",
    "null_density",
    "posterior_signal_prob",
    "residual_resample",
    "reweight",
    "__version__",
]


def __getattr__(name: str):
    # The estimator pulls in scikit-learn; import it only when asked for.
    if name == "TwoGroupsSMC":
        from .estimator import TwoGroupsSMC

        return TwoGroupsSMC
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
