import math

import numpy as np
import pytest

from certopt.environments import (
    BumpParams,
    Environment,
    StochasticSampler,
    bump_value,
    make_bump,
    perturbed_objective,
)
from certopt.geometry import SearchDomain
from certopt.objectives import check_lipschitz, make_builtin


def cone_objective(lo=-1.0, hi=1.0, dim=1, L=None):
    dom = SearchDomain([(lo, hi)] * dim)
    return make_builtin("cone", {}, dom, L_declared=L)


class TestDeterministicRespond:
    def test_noiseless(self):
        obj = cone_objective()
        env = Environment("noiseless", obj)
        assert env.respond(1, (0.4,), 0.1) == pytest.approx(0.6)

    def test_pessimistic(self):
        obj = cone_objective()
        env = Environment("pessimistic", obj)
        assert env.respond(1, (0.4,), 0.1) == pytest.approx(0.5)

    def test_optimistic(self):
        obj = cone_objective()
        env = Environment("optimistic", obj)
        assert env.respond(1, (0.4,), 0.1) == pytest.approx(0.7)

    def test_alpha_must_be_positive(self):
        env = Environment("noiseless", cone_objective())
        with pytest.raises(ValueError):
            env.respond(1, (0.4,), 0.0)

    def test_collaborative_two_queries(self):
        obj = make_builtin("constant", {"c0": 0.0}, SearchDomain([(0.0, 1.0)]))
        env = Environment("collaborative", obj)
        assert env.respond(1, (0.3,), 0.2) == pytest.approx(-0.2)
        assert env.respond(2, (0.3,), 0.2) == pytest.approx(0.2)

    def test_collaborative_midpoint_reveals_value(self):
        obj = cone_objective()
        env = Environment("collaborative", obj)
        x = (0.37,)
        y1 = env.respond(1, x, 0.5)
        y2 = env.respond(2, x, 0.5)
        assert (y1 + y2) / 2.0 == pytest.approx(obj.value(x), abs=1e-12)

    def test_collaborative_distinguishes_points(self):
        obj = cone_objective()
        env = Environment("collaborative", obj)
        y1 = env.respond(1, (0.3,), 0.2)
        y2 = env.respond(2, (0.30000001,), 0.2)  # different point: first visit again
        assert y1 == pytest.approx(obj.value((0.3,)) - 0.2)
        assert y2 == pytest.approx(obj.value((0.30000001,)) - 0.2)

    def test_bounded_error_contract(self):
        rng = np.random.default_rng(0)
        obj = cone_objective()
        for kind in ("noiseless", "pessimistic", "optimistic", "collaborative"):
            env = Environment(kind, obj)
            for t in range(1, 50):
                x = (float(rng.uniform(-1, 1)),)
                alpha = float(rng.uniform(0.01, 1.0))
                env.respond(t, x, alpha)
            assert env.audit() == []


class TestBump:
    def test_value_at_center(self):
        obj = cone_objective(L=2.0)
        bump = make_bump(obj, center=(0.5,), scale=0.1)
        assert bump_value(bump, (0.5,)) == pytest.approx(0.8)

    def test_value_at_support_boundary(self):
        obj = cone_objective(L=2.0)
        bump = make_bump(obj, center=(0.5,), scale=0.1)
        r = bump.support_radius  # k_lb * scale / (2 L)
        assert bump_value(bump, (0.5 + r,)) == pytest.approx(0.0, abs=1e-12)

    def test_formula_example(self):
        # L = 1, lip = 0.5 -> k_lb = 32; scale 0.1, distance 1.6 -> height 0
        bump = BumpParams(center=(0.0,), scale=0.1, sign=1, L=1.0, lip=0.5, norm="sup")
        assert bump.k_lb == pytest.approx(32.0)
        assert bump_value(bump, (1.6,)) == pytest.approx(0.0, abs=1e-12)
        assert bump_value(bump, (0.8,)) == pytest.approx(0.4)

    def test_requires_slack_in_declared_bound(self):
        obj = cone_objective(L=1.0)  # L = lip: no room for a spike
        with pytest.raises(ValueError):
            make_bump(obj, center=(0.0,), scale=0.1)

    def test_perturbed_function_stays_declared_lipschitz(self):
        # f +- spike is L-Lipschitz since the spike slope is L - lip
        obj = cone_objective(L=2.0)
        for sign in (1, -1):
            bump = make_bump(obj, center=(0.3,), scale=0.05, sign=sign)
            g = perturbed_objective(obj, bump)
            assert check_lipschitz(g, n_pairs=4000, seed=0).ok

    def test_bump_env_honest_for_hidden_function(self):
        obj = cone_objective(L=2.0)
        bump = make_bump(obj, center=(0.3,), scale=0.05)
        env = Environment("bump", obj, bump=bump)
        g = perturbed_objective(obj, bump)
        rng = np.random.default_rng(1)
        for t in range(1, 100):
            x = (float(rng.uniform(-1, 1)),)
            alpha = float(rng.uniform(0.001, 0.5))
            y = env.respond(t, x, alpha)
            assert y == pytest.approx(g.value(x), abs=1e-12)
        # responses inside the spike with small alpha violate the contract
        # for the base objective and are flagged
        y = env.respond(100, (0.3,), 0.01)
        assert abs(y - obj.value((0.3,))) > 0.01
        assert 100 in env.adversarial_rows
        assert env.audit()  # the audit sees the adversarial rows


class TestStochasticSampler:
    def test_degenerate_noise(self):
        obj = cone_objective()
        sampler = StochasticSampler(obj, 0.0, seed=0)
        batch = sampler.sample_batch((0, 0), (0.4,), 5)
        assert np.all(batch == obj.value((0.4,)))

    def test_replay_identical(self):
        obj = cone_objective()
        a = StochasticSampler(obj, 1.0, seed=42).sample_batch((3, 5), (0.4,), 4)
        b = StochasticSampler(obj, 1.0, seed=42).sample_batch((3, 5), (0.4,), 4)
        assert np.array_equal(a, b)

    def test_nodes_get_independent_streams(self):
        obj = cone_objective()
        sampler = StochasticSampler(obj, 1.0, seed=42)
        a = sampler.sample_batch((3, 5), (0.4,), 4)
        b = sampler.sample_batch((3, 6), (0.4,), 4)
        assert not np.array_equal(a, b)

    def test_default_seed_mean(self):
        # CLT scale: 3 sigma / sqrt(m) = 0.03 for v = 1, m = 10^4
        obj = make_builtin("constant", {"c0": 0.0}, SearchDomain([(0.0, 1.0)]))
        sampler = StochasticSampler(obj, 1.0, seed=0)
        batch = sampler.sample_batch((0, 0), (0.5,), 10**4)
        assert abs(float(batch.mean())) < 0.05

    def test_empirical_variance(self):
        obj = make_builtin("constant", {"c0": 0.0}, SearchDomain([(0.0, 1.0)]))
        sampler = StochasticSampler(obj, 0.7, seed=1)
        batch = sampler.sample_batch((0, 0), (0.5,), 10**5)
        assert float(np.var(batch)) == pytest.approx(0.7, rel=0.1)

    def test_uniform_noise_bounded(self):
        obj = make_builtin("constant", {"c0": 0.0}, SearchDomain([(0.0, 1.0)]))
        sampler = StochasticSampler(obj, 0.09, seed=2, dist="uniform")
        batch = sampler.sample_batch((0, 0), (0.5,), 10**4)
        assert np.all(np.abs(batch) <= math.sqrt(0.09))
