"""Online model updates and the coefficient kernel refresh."""

import math

import numpy as np
import pytest

from seqfdr.model import AlternativeModel, MixtureComponent, NullModel
from seqfdr.particles import Likelihood, Particle, ParticleSystem
from seqfdr.rejuvenation import (
    Allocation,
    RejuvenationConfig,
    allocate,
    kernel_bandwidth,
    kernel_refresh,
    update_alternative,
    update_alternatives_inplace,
    update_null,
    update_nulls_inplace,
)
from seqfdr.rng import stream

ROOT2_HALF = math.sqrt(2.0) / 2.0
BETA_REF = np.array([-3.5, ROOT2_HALF, ROOT2_HALF])


def make_alt(*comps):
    return AlternativeModel(tuple(MixtureComponent(*c) for c in comps))


class TestAllocate:
    def test_boundary_goes_to_alternative(self):
        assert allocate(np.zeros(3), np.array([4.0, -17.0])) is Allocation.ALTERNATIVE

    def test_low_prior_goes_to_null(self):
        assert allocate(BETA_REF, np.zeros(2)) is Allocation.NULL

    def test_high_prior_goes_to_alternative(self):
        assert allocate(BETA_REF, np.array([5.0, 5.0])) is Allocation.ALTERNATIVE

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            allocate(np.zeros(2), np.zeros(2))

    def test_prior_rule_ignores_densities(self):
        # The prior allocation mask depends only on the linear predictor.
        s = np.array([-1.0, 0.0, 2.0])
        rng = np.random.default_rng(0)
        for _ in range(5):
            lik = Likelihood(
                s=s, log_c=rng.normal(size=3), log_1mc=rng.normal(size=3),
                log_f0=rng.normal(size=3), log_f1=rng.normal(size=3),
                log_marginal=rng.normal(size=3),
            )
            np.testing.assert_array_equal(
                lik.signal_allocation("prior"), np.array([False, True, True])
            )


class TestUpdateNull:
    def test_reference_update(self):
        null, n0 = update_null(NullModel(0.0, 1.0), 9.0, 1.0)
        assert null.mu0 == pytest.approx(0.1, rel=1e-12)
        assert null.sigma0 == pytest.approx(0.9904544411531506, rel=1e-12)
        assert n0 == 10.0

    def test_old_mean_variant(self):
        null, _ = update_null(NullModel(0.0, 1.0), 9.0, 1.0, use_old_mean=True)
        assert null.mu0 == pytest.approx(0.1, rel=1e-12)
        assert null.sigma0 == pytest.approx(1.0, rel=1e-12)

    def test_fixed_mean_variant(self):
        null, _ = update_null(NullModel(0.0, 1.0), 9.0, 1.0, update_mean=False)
        assert null.mu0 == 0.0
        assert null.sigma0 == pytest.approx(math.sqrt(0.9 * 1.0 + 0.1 * 1.0), rel=1e-12)

    def test_vanishing_learning_rate(self):
        null, _ = update_null(NullModel(0.2, 1.3), 1e12, 50.0)
        assert null.mu0 == pytest.approx(0.2, abs=1e-9)
        assert null.sigma0 == pytest.approx(1.3, abs=1e-6)

    def test_zero_innovation_shrinks_scale(self):
        for n0 in (0.0, 4.0, 99.0):
            alpha = 1.0 / (1.0 + n0)
            null, _ = update_null(NullModel(0.5, 2.0), n0, 0.5)
            assert null.mu0 == 0.5
            want = max(math.sqrt(1 - alpha) * 2.0, 1e-6)  # scale floor applies
            assert null.sigma0 == pytest.approx(want, rel=1e-12)

    def test_learning_rate_schedule(self):
        # After T statistics the step size is 1 / (1 + n0_init + T - 1).
        null = NullModel(0.0, 1.5)
        n0 = 9.0
        for t in range(1, 60):
            assert 1.0 / (1.0 + n0) == pytest.approx(1.0 / (9.0 + t), rel=1e-12)
            null, n0 = update_null(null, n0, 0.3)


class TestUpdateAlternative:
    def test_match_update_reference(self):
        alt, n1 = update_alternative(make_alt((1.0, 3.0, 0.5)), 1.0, 4.2,
                                     RejuvenationConfig())
        assert n1 == 2.0
        assert alt.k == 1
        comp = alt.components[0]
        assert comp.w == pytest.approx(1.0, rel=1e-12)
        assert comp.mu == pytest.approx(3.4, rel=1e-12)
        assert comp.sigma == pytest.approx(math.sqrt(0.38), rel=1e-12)

    def test_no_match_spawns_component(self):
        cfg = RejuvenationConfig()
        alt, n1 = update_alternative(make_alt((1.0, 3.0, 0.5)), 1.0, 4.3, cfg)
        assert n1 == 2.0
        assert alt.k == 2
        assert alt.components[1].mu == 4.3
        assert alt.components[1].sigma == pytest.approx(math.sqrt(20.0), rel=1e-12)
        np.testing.assert_allclose(alt.weights, [0.5, 0.5], rtol=1e-12)

    def test_weight_adjustment_reference(self):
        # alpha = 0.1 via n1 = 9; z matches only the first component.
        alt, _ = update_alternative(make_alt((0.7, 0.0, 1.0), (0.3, 50.0, 1.0)),
                                    9.0, 0.5, RejuvenationConfig())
        np.testing.assert_allclose(alt.weights, [0.73, 0.27], rtol=1e-12)

    def test_first_match_in_storage_order_wins(self):
        # Both components cover z; only the first may move.
        alt, _ = update_alternative(make_alt((0.5, 0.0, 2.0), (0.5, 1.0, 2.0)),
                                    4.0, 0.5, RejuvenationConfig())
        assert alt.components[1].mu == 1.0
        assert alt.components[0].mu != 0.0

    def test_old_mean_variance_variant(self):
        cfg = RejuvenationConfig(variance_update_uses_old_mean=True)
        alt, _ = update_alternative(make_alt((1.0, 3.0, 0.5)), 1.0, 4.2, cfg)
        # rho = 1/3; variance innovation measured from the pre-update mean 3.
        want = math.sqrt((2 / 3) * 0.25 + (1 / 3) * 1.44)
        assert alt.components[0].sigma == pytest.approx(want, rel=1e-12)

    def test_pruning_drops_tiny_components(self):
        cfg = RejuvenationConfig(prune_threshold=1e-3)
        alt = make_alt((1.0 - 5e-4, 0.0, 1.0), (5e-4, 40.0, 1.0))
        out, _ = update_alternative(alt, 99.0, 0.1, cfg)
        assert out.k == 1
        assert out.components[0].w == pytest.approx(1.0, rel=1e-12)

    def test_prune_disabled_keeps_everything(self):
        cfg = RejuvenationConfig(prune_threshold=0.0)
        alt = make_alt((1.0 - 1e-9, 0.0, 1.0), (1e-9, 40.0, 1.0))
        out, _ = update_alternative(alt, 99.0, 0.1, cfg)
        assert out.k == 2

    def test_weights_normalised_along_random_sequences(self):
        rng = np.random.default_rng(21)
        for prune in (1e-6, 0.0):
            cfg = RejuvenationConfig(prune_threshold=prune)
            alt = make_alt((1.0, 3.0, math.sqrt(20.0)))
            n1 = 1.0
            for _ in range(300):
                k_before = alt.k
                alt, n1 = update_alternative(alt, n1, float(rng.normal(0, 6)), cfg)
                assert abs(sum(c.w for c in alt.components) - 1.0) <= 1e-9
                assert alt.k - k_before in (0, 1) or prune > 0


class TestVectorisedAgreement:
    def test_population_updates_match_scalar_path(self):
        rng = np.random.default_rng(2)
        cfg = RejuvenationConfig()
        particles = []
        for _ in range(30):
            k = int(rng.integers(1, 4))
            w = rng.dirichlet(np.ones(k))
            comps = tuple(MixtureComponent(float(w[j]), float(rng.normal(0, 4)),
                                           float(rng.uniform(0.3, 5))) for j in range(k))
            particles.append(Particle(
                beta=rng.normal(0, 2, 3),
                null=NullModel(float(rng.normal()), float(rng.uniform(0.5, 2))),
                alt=AlternativeModel(comps),
                n0=float(rng.integers(0, 30)), n1=float(rng.integers(0, 30)),
            ))
        ps = ParticleSystem.from_particles(particles)
        state = particles[:]
        for z in rng.normal(0, 4, 40):
            mask = rng.random(30) < 0.5
            update_nulls_inplace(ps, float(z), ~mask, update_mean=True)
            update_alternatives_inplace(ps, float(z), mask, cfg)
            new_state = []
            for i, p in enumerate(state):
                if mask[i]:
                    alt, n1 = update_alternative(p.alt, p.n1, float(z), cfg)
                    new_state.append(Particle(p.beta, p.null, alt, p.n0, n1))
                else:
                    null, n0 = update_null(p.null, p.n0, float(z), update_mean=True)
                    new_state.append(Particle(p.beta, null, p.alt, n0, p.n1))
            state = new_state
        for i, p in enumerate(state):
            q = ps.particle(i)
            assert p.alt.k == q.alt.k
            assert (p.n0, p.n1) == (q.n0, q.n1)
            np.testing.assert_allclose(q.null.mu0, p.null.mu0, rtol=1e-12)
            np.testing.assert_allclose(q.null.sigma0, p.null.sigma0, rtol=1e-12)
            np.testing.assert_allclose(q.alt.weights, p.alt.weights, rtol=1e-9, atol=1e-12)
            np.testing.assert_allclose(q.alt.means, p.alt.means, rtol=1e-12)
            np.testing.assert_allclose(q.alt.sigmas, p.alt.sigmas, rtol=1e-12)

    def test_counters_grow_by_one_per_record(self):
        rng = np.random.default_rng(4)
        ps = ParticleSystem.from_particles([
            Particle(beta=rng.normal(0, 1, 2), null=NullModel(0.0, 1.0),
                     alt=make_alt((1.0, 3.0, 2.0)), n0=9.0, n1=1.0)
            for _ in range(8)
        ])
        cfg = RejuvenationConfig()
        for step, z in enumerate(rng.normal(0, 3, 25), start=1):
            mask = rng.random(8) < 0.5
            update_nulls_inplace(ps, float(z), ~mask)
            update_alternatives_inplace(ps, float(z), mask, cfg)
            np.testing.assert_allclose(ps.n0 + ps.n1, 10.0 + step)


class TestKernelRefresh:
    def test_bandwidth_reference_values(self):
        a, b = kernel_bandwidth(3, 10_000)
        assert b == pytest.approx(0.2598526445218819, rel=1e-12)
        assert a == pytest.approx(0.9656482812779115, rel=1e-12)
        # five significant digits, as hand-derived
        assert round(b, 5) == 0.25985
        assert round(a, 5) == 0.96565

    def test_identity_a2_plus_b2(self):
        for d in (1, 2, 3, 5, 8):
            for m in (10, 100, 10_000, 1_000_000):
                a, b = kernel_bandwidth(d, m)
                assert a * a + b * b == pytest.approx(1.0, abs=1e-12)

    def _system_with_betas(self, betas):
        m = betas.shape[0]
        particles = [
            Particle(beta=betas[i], null=NullModel(0.0, 1.0),
                     alt=make_alt((1.0, 3.0, 1.0)), n0=1.0, n1=1.0)
            for i in range(m)
        ]
        return ParticleSystem.from_particles(particles)

    def test_identical_betas_stay_fixed(self):
        betas = np.tile(np.array([1.5, -2.0, 0.25]), (20, 1))
        ps = self._system_with_betas(betas)
        kernel_refresh(ps, stream(3, 1, 98))
        np.testing.assert_array_equal(ps.beta, betas)

    def test_moments_preserved_at_scale(self):
        m = 10_000
        gen = np.random.default_rng(42)
        betas = gen.standard_normal((m, 3))
        ps = self._system_with_betas(betas)
        kernel_refresh(ps, stream(7, 1, 98))
        mean = ps.beta.mean(axis=0)
        assert np.all(np.abs(mean) <= 4.0 / math.sqrt(m) + np.abs(betas.mean(axis=0)))
        cov = np.cov(ps.beta, rowvar=False)
        ref = np.cov(betas, rowvar=False)
        assert np.linalg.norm(cov - ref, ord="fro") <= 0.1 * np.linalg.norm(
            np.eye(3), ord="fro"
        )

    def test_near_singular_covariance_uses_ridge(self):
        gen = np.random.default_rng(5)
        direction = np.array([1.0, 2.0, -1.0])
        betas = np.outer(gen.standard_normal(50), direction)
        ps = self._system_with_betas(betas)
        kernel_refresh(ps, stream(11, 1, 98))
        assert np.all(np.isfinite(ps.beta))

    def test_weighted_moments_path(self):
        gen = np.random.default_rng(6)
        betas = gen.standard_normal((200, 2)) + np.array([3.0, -1.0])
        particles = [
            Particle(beta=betas[i], null=NullModel(0.0, 1.0),
                     alt=make_alt((1.0, 3.0, 1.0)), n0=1.0, n1=1.0)
            for i in range(200)
        ]
        ps = ParticleSystem.from_particles(particles)
        lw = gen.normal(0, 1, 200)
        ps.log_w = lw - (lw.max() + math.log(np.exp(lw - lw.max()).sum()))
        w = ps.weights()
        target = np.array([np.sum(w * betas[:, j]) for j in range(2)])
        kernel_refresh(ps, stream(12, 1, 98), weighted=True)
        refreshed = np.array([np.sum(w * ps.beta[:, j]) for j in range(2)])
        assert np.all(np.abs(refreshed - target) < 0.5)
