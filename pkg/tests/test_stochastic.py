import math

import numpy as np
import pytest

from certopt.costs import ConstantCost
from certopt.environments import Environment
from certopt.geometry import dyadic_sup_partition
from certopt.objectives import make_builtin
from certopt.search import certificate_validity_check, run_search
from certopt.stochastic import (
    batch_size,
    monte_carlo,
    risk_weight,
    run_stochastic,
    sampling_cost,
)

# pinned regression: cone on [0,1], L=R=1, delta=1/2, gamma=0.1, v=0.01,
# eps=0.25, seed 0 (exact replay contract)
GOLDEN_TOTAL_SAMPLES = 125


def cone_setup(L=1.0):
    part = dyadic_sup_partition(1)
    obj = make_builtin("cone", {}, part.domain, L_declared=L)
    return part, obj


class TestRiskWeights:
    def test_root_weight(self):
        assert risk_weight(0, 0, 0.1, 2) == pytest.approx(0.05)

    def test_depth_one_weight(self):
        assert risk_weight(1, 0, 0.1, 2) == pytest.approx(0.1 / 12.0)

    def test_weights_sum_to_gamma(self):
        # sum over all nodes telescopes: sum_h 1/((h+1)(h+2)) -> 1
        gamma, K = 0.3, 3
        total = sum(
            K**h * risk_weight(h, 0, gamma, K) for h in range(31)
        )
        assert total <= gamma + 1e-12
        assert total == pytest.approx(gamma * (1.0 - 1.0 / 32.0))

    def test_index_range_checked(self):
        with pytest.raises(IndexError):
            risk_weight(1, 5, 0.1, 2)


class TestBatchSize:
    def test_example(self):
        # ceil(8 * ln 40) = 30
        assert batch_size(0.5, 1.0, 0.05) == 30

    def test_degenerate_noise(self):
        assert batch_size(0.5, 0.0, 0.05) == 1

    def test_matches_accuracy_cost_on_depth_grid(self):
        # the accuracy-only cost evaluates the same formula through the
        # real-valued depth h(alpha); they agree whenever alpha = L R delta^h
        v, gamma, K, L, R, delta = 1.0, 0.1, 2, 1.0, 1.0, 0.5
        for h in range(11):
            alpha = L * R * delta**h
            m = batch_size(alpha, v, risk_weight(h, 0, gamma, K))
            c = sampling_cost(alpha, v, gamma, K, L, R, delta)
            assert m == c


class TestSamplingCost:
    def test_example_value(self):
        # h(0.25) = 2: ceil(32 * ln 960) = 220
        assert sampling_cost(0.25, 1.0, 0.1, 2, 1.0, 1.0, 0.5) == 220

    def test_root_accuracy_matches_init_batch(self):
        v, gamma = 0.5, 0.2
        expected = math.ceil(2.0 * v / 1.0 * math.log(4.0 / gamma))
        assert sampling_cost(1.0, v, gamma, 2, 1.0, 1.0, 0.5) == expected

    def test_nonincreasing_in_alpha(self):
        alphas = np.linspace(0.01, 1.0, 50)
        costs = [sampling_cost(a, 1.0, 0.1, 2, 1.0, 1.0, 0.5) for a in alphas]
        assert costs == sorted(costs, reverse=True)

    def test_rejects_alpha_above_LR(self):
        with pytest.raises(ValueError):
            sampling_cost(1.5, 1.0, 0.1, 2, 1.0, 1.0, 0.5)


class TestRunStochastic:
    def test_zero_variance_reduces_to_deterministic(self):
        # with v = 0 the query sequence, recommendations, and certificates
        # coincide step for step with the noiseless deterministic run
        part, obj = cone_setup()
        det_out, det_rows = run_search(
            part, Environment("noiseless", obj), 1.0, cost=ConstantCost(), eps=0.25
        )
        sto, sto_rows = run_stochastic(
            part, obj, 1.0, gamma=0.1, variance=0.0, eps=0.25, seed=0
        )
        assert sto_rows == det_rows
        assert all(m == 1 for m in sto.batch_sizes)
        # with unit costs, sigma equals the evaluation count tau
        assert det_out.sigma == det_out.tau == sto.outcome.tau

    def test_replay_bit_identical(self):
        part, obj = cone_setup()
        _, rows_a = run_stochastic(part, obj, 1.0, gamma=0.1, variance=0.01, eps=0.25, seed=7)
        _, rows_b = run_stochastic(part, obj, 1.0, gamma=0.1, variance=0.01, eps=0.25, seed=7)
        assert rows_a == rows_b

    def test_golden_total_samples(self):
        part, obj = cone_setup()
        sto, _ = run_stochastic(part, obj, 1.0, gamma=0.1, variance=0.01, eps=0.25, seed=0)
        assert sto.outcome.stop_reason == "certified"
        assert sto.total_samples == GOLDEN_TOTAL_SAMPLES

    def test_step_cost_equals_batch_size(self):
        part, obj = cone_setup()
        sto, rows = run_stochastic(part, obj, 1.0, gamma=0.1, variance=0.01, eps=0.25, seed=3)
        for row, m in zip(rows, sto.batch_sizes):
            assert row.step_cost == m
            expected = batch_size(
                row.alpha, 0.01, risk_weight(row.depth, row.index, 0.1, part.arity)
            )
            assert m == expected
        assert sto.total_samples == sum(sto.batch_sizes)

    def test_gamma_validated(self):
        part, obj = cone_setup()
        with pytest.raises(ValueError):
            run_stochastic(part, obj, 1.0, gamma=1.5, variance=0.01, eps=0.25)


class TestConcentration:
    def test_batch_means_stay_within_alpha(self):
        # over N seeds, the fraction of runs where some batch mean misses
        # f(x) by alpha or more is at most gamma (here: expect zero)
        part, obj = cone_setup()
        gamma = 0.1
        n_bad = 0
        for seed in range(60):
            _, rows = run_stochastic(
                part, obj, 1.0, gamma=gamma, variance=0.01, eps=0.25, seed=seed
            )
            for row in rows:
                if abs(row.y - obj.value(row.x)) >= row.alpha:
                    n_bad += 1
                    break
        assert n_bad / 60 <= gamma

    def test_monte_carlo_summary(self):
        part, obj = cone_setup()
        summary = monte_carlo(
            part, obj, 1.0, gamma=0.1, variance=0.01, eps=0.25, seeds=list(range(20))
        )
        assert summary["n_runs"] == 20
        assert summary["violations"] <= 2
        assert summary["max_total_samples"] >= GOLDEN_TOTAL_SAMPLES * 0.2
        assert set(summary["quantiles"]) == {"q50", "q90", "q100"}
