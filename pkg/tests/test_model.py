"""Density and posterior checks against independently computed values.

Reference numbers were produced by direct scalar evaluation of the Gaussian
and logistic formulas (quad precision not needed; all are well-conditioned).
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from seqfdr.model import (
    AlternativeModel,
    MixtureComponent,
    NullModel,
    TestRecord,
    alt_density,
    alt_logpdf,
    linear_predictor,
    logistic_prior,
    marginal_likelihood,
    null_density,
    posterior_signal_prob,
    posterior_signal_probs,
    signal_prior_logs,
)

ROOT2_HALF = math.sqrt(2.0) / 2.0
BETA_REF = np.array([-3.5, ROOT2_HALF, ROOT2_HALF])
C_REF = 0.02931223075135632  # 1 / (1 + e^3.5)

NULL_STD = NullModel(0.0, 1.0)
ALT_REF = AlternativeModel((MixtureComponent(1.0, 3.0, 0.5),))


class Params:
    """Anything with beta/null/alt works as particle parameters."""

    def __init__(self, beta, null, alt):
        self.beta = np.asarray(beta, dtype=float)
        self.null = null
        self.alt = alt


class TestLogisticPrior:
    def test_zero_predictor(self):
        assert logistic_prior(np.zeros(3), np.array([17.3, -2.1])) == 0.5

    def test_reference_point(self):
        c = logistic_prior(BETA_REF, np.zeros(2))
        assert c == pytest.approx(C_REF, rel=1e-12)

    def test_balanced_covariates(self):
        x = np.array([2.4748737, 2.4748737])
        assert logistic_prior(BETA_REF, x) == pytest.approx(0.5, abs=1e-7)

    def test_large_predictors_saturate_without_nan(self):
        for s in (700.0, -700.0):
            c = logistic_prior(np.array([s, 0.0]), np.zeros(1))
            assert 0.0 < c < 1.0
            assert math.isfinite(c)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            beta = rng.normal(0, 5, size=3)
            x = rng.normal(0, 3, size=2)
            total = logistic_prior(beta, x) + logistic_prior(-beta, x)
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_covariates(self):
        beta = np.array([0.5, 1.0, 2.0])
        values = [logistic_prior(beta, np.array([v, 0.0])) for v in np.linspace(-3, 3, 25)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            logistic_prior(np.zeros(2), np.zeros(2))

    def test_prior_logs_match_clamps(self):
        log_c, log_1mc = signal_prior_logs(np.array([-800.0, 0.0, 800.0]))
        assert log_c[0] >= math.log(1e-300)
        assert log_c[1] == pytest.approx(math.log(0.5), rel=1e-12)
        assert log_1mc[2] >= math.log(1e-16)
        assert np.all(np.isfinite(log_c)) and np.all(np.isfinite(log_1mc))


class TestDensities:
    def test_standard_normal_mode(self):
        assert null_density(NULL_STD, 0.0) == pytest.approx(0.3989422804014327, rel=1e-12)

    def test_standard_normal_tail(self):
        assert null_density(NULL_STD, 3.0) == pytest.approx(0.0044318484119380075, rel=1e-12)

    def test_narrow_null_mode(self):
        assert null_density(NullModel(3.0, 0.5), 3.0) == pytest.approx(
            0.7978845608028654, rel=1e-12
        )

    def test_invalid_scale(self):
        with pytest.raises(ValueError):
            NullModel(0.0, 0.0)

    def test_single_component_mixture(self):
        alt = AlternativeModel((MixtureComponent(1.0, 3.0, 0.5),))
        assert alt_density(alt, NULL_STD, 3.0) == pytest.approx(0.7978845608028654, rel=1e-12)

    def test_zero_sigma_component_rejected(self):
        with pytest.raises(ValueError):
            MixtureComponent(1.0, 3.0, 0.0)

    def test_two_component_mixture(self):
        alt = AlternativeModel((
            MixtureComponent(0.5, -1.0, 1.0),
            MixtureComponent(0.5, 1.0, 1.0),
        ))
        assert alt_density(alt, NULL_STD, 0.0) == pytest.approx(0.24197072451914337, rel=1e-12)

    def test_weights_must_normalise(self):
        with pytest.raises(ValueError):
            AlternativeModel((MixtureComponent(0.5, 0.0, 1.0),))

    def test_convolve_marginalises_exactly(self):
        alt = AlternativeModel((MixtureComponent(1.0, 3.0, 0.5),))
        null = NullModel(0.5, 1.0)
        # exact marginalisation: N(z | mu0 + mu, sigma0^2 + sigma^2)
        for z in (-1.0, 0.0, 2.0, 3.5):
            want = math.exp(-0.5 * (z - 3.5) ** 2 / 1.25) / math.sqrt(2 * math.pi * 1.25)
            assert alt_density(alt, null, z, convolve=True) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("convolve", [False, True])
    def test_mixture_integrates_to_one(self, convolve):
        alt = AlternativeModel((
            MixtureComponent(0.3, -2.0, 0.7),
            MixtureComponent(0.5, 1.0, 1.4),
            MixtureComponent(0.2, 4.0, 2.2),
        ))
        null = NullModel(0.4, 1.2)
        lo = min(alt.means) - 10 * (max(alt.sigmas) + null.sigma0)
        hi = max(alt.means) + 10 * (max(alt.sigmas) + null.sigma0)
        total, _ = quad(lambda z: alt_density(alt, null, z, convolve=convolve), lo, hi)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_null_integrates_to_one(self):
        null = NullModel(1.3, 0.8)
        total, _ = quad(lambda z: null_density(null, z), 1.3 - 10 * 0.8, 1.3 + 10 * 0.8)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_alt_logpdf_vectorises(self):
        alt = AlternativeModel((MixtureComponent(1.0, 3.0, 0.5),))
        z = np.array([-1.0, 0.0, 3.0])
        out = alt_logpdf(alt, NULL_STD, z)
        assert out.shape == (3,)
        assert out[2] == pytest.approx(math.log(0.7978845608028654), rel=1e-12)


class TestMarginalLikelihood:
    def test_identical_densities_collapse(self):
        params = Params(BETA_REF, NULL_STD, AlternativeModel((MixtureComponent(1.0, 0.0, 1.0),)))
        for z in (-2.0, 0.0, 1.7):
            assert marginal_likelihood(params, TestRecord(0, z, np.zeros(2))) == pytest.approx(
                null_density(NULL_STD, z), rel=1e-12
            )

    def test_reference_value(self):
        params = Params(BETA_REF, NULL_STD, ALT_REF)
        rec = TestRecord(0, 3.0, np.zeros(2))
        assert marginal_likelihood(params, rec) == pytest.approx(
            0.027689717407830428, rel=1e-9
        )

    def test_saturated_prior_gives_alternative_density(self):
        params = Params(np.array([50.0, 0.0]), NULL_STD, ALT_REF)
        rec = TestRecord(0, 3.0, np.zeros(1))
        assert marginal_likelihood(params, rec) == pytest.approx(
            alt_density(ALT_REF, NULL_STD, 3.0), rel=1e-9
        )

    def test_recomposition(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            beta = rng.normal(0, 2, 3)
            null = NullModel(float(rng.normal()), float(rng.uniform(0.5, 2)))
            alt = AlternativeModel((MixtureComponent(1.0, float(rng.normal(2, 1)),
                                                     float(rng.uniform(0.3, 3))),))
            params = Params(beta, null, alt)
            x = rng.normal(0, 1, 2)
            z = float(rng.normal(0, 3))
            rec = TestRecord(0, z, x)
            c = logistic_prior(beta, x)
            direct = c * alt_density(alt, null, z) + (1 - c) * null_density(null, z)
            assert marginal_likelihood(params, rec) == pytest.approx(direct, rel=1e-12)


class TestPosteriorSignalProb:
    def test_identical_densities_return_prior(self):
        alt = AlternativeModel((MixtureComponent(1.0, 0.0, 1.0),))
        params = Params(BETA_REF, NULL_STD, alt)
        rec = TestRecord(0, 1.2, np.array([0.3, -0.4]))
        c = logistic_prior(BETA_REF, rec.x)
        assert posterior_signal_prob(params, rec) == pytest.approx(c, rel=1e-9)

    def test_reference_value(self):
        params = Params(BETA_REF, NULL_STD, ALT_REF)
        rec = TestRecord(0, 3.0, np.zeros(2))
        assert posterior_signal_prob(params, rec) == pytest.approx(
            0.8446375965030364, rel=1e-9
        )

    def test_vanishing_prior(self):
        params = Params(np.array([-720.0, 0.0]), NULL_STD, ALT_REF)
        rec = TestRecord(0, 3.0, np.zeros(1))
        assert posterior_signal_prob(params, rec) < 1e-100

    def test_extreme_statistic_never_nan(self):
        params = Params(BETA_REF, NULL_STD, ALT_REF)
        rec = TestRecord(0, 1e200, np.zeros(2))
        p = posterior_signal_prob(params, rec)
        assert math.isfinite(p)
        assert p == pytest.approx(C_REF, rel=1e-9)

    def test_monotone_in_prior(self):
        rec = TestRecord(0, 2.0, np.zeros(2))
        values = []
        for b0 in np.linspace(-6, 6, 30):
            params = Params(np.array([b0, 0.0, 0.0]), NULL_STD, ALT_REF)
            values.append(posterior_signal_prob(params, rec))
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_monotone_in_likelihood_ratio(self):
        # For N(3, 0.25) vs N(0, 1) the ratio is increasing on [0, 3].
        params = Params(BETA_REF, NULL_STD, ALT_REF)
        values = [
            posterior_signal_prob(params, TestRecord(0, z, np.zeros(2)))
            for z in np.linspace(0, 3, 25)
        ]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_vectorised_matches_scalar(self):
        params = Params(BETA_REF, NULL_STD, ALT_REF)
        rng = np.random.default_rng(3)
        z = rng.normal(1, 2, 50)
        x = rng.normal(0, 1, (50, 2))
        batch = posterior_signal_probs(params, z, x)
        for i in range(50):
            single = posterior_signal_prob(params, TestRecord(i, float(z[i]), x[i]))
            assert batch[i] == pytest.approx(single, rel=1e-12)


class TestRecordValidation:
    def test_rejects_nonfinite_statistic(self):
        with pytest.raises(ValueError):
            TestRecord(0, math.nan, np.zeros(2))

    def test_rejects_negative_index(self):
        with pytest.raises(ValueError):
            TestRecord(-1, 0.0, np.zeros(2))

    def test_rejects_bad_truth(self):
        with pytest.raises(ValueError):
            TestRecord(0, 0.0, np.zeros(2), truth=2)

    def test_linear_predictor_value(self):
        assert linear_predictor(BETA_REF, np.array([5.0, 5.0])) == pytest.approx(
            3.5710678118654755, rel=1e-12
        )
