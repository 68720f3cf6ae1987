"""Mini-batch variant of the certified search for noisy evaluations.

Instead of requesting an accuracy alpha directly, each query at a node
(h, i) draws a mini-batch of m i.i.d. noisy evaluations and uses the batch
mean as the observed value.  The batch size

    m = ceil((2 v / alpha^2) * ln(2 / w_{h,i})),
    w_{h,i} = gamma / ((h+1) (h+2) K^h),

makes |mean - f(x)| < alpha simultaneously for every queried node with
probability at least 1 - gamma (the per-node risk weights w_{h,i} sum to
gamma over the whole tree).  The per-step cost is exactly m, so a run's
total cost is its total number of evaluations.

With v = 0 every batch has size 1 and zero noise, and the run coincides
step for step with the deterministic search against the noiseless
environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .costs import SamplingCost
from .environments import StochasticSampler
from .geometry import NodeId, Partition
from .objectives import Objective
from .search import RunOutcome, TraceRow, run_engine


def risk_weight(depth: int, index: int, gamma: float, arity: int) -> float:
    """Per-node share gamma / ((h+1)(h+2)K^h) of the total risk budget.

    Depends on the depth only; the index is kept in the signature because
    the weight is charged once per queried node.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    NodeId(depth, index).validate(arity)
    return gamma / ((depth + 1) * (depth + 2) * arity**depth)


def batch_size(alpha: float, variance: float, weight: float) -> int:
    """ceil((2 v / alpha^2) * ln(2 / weight)), at least one sample."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.0 < weight < 1.0:
        raise ValueError(f"risk weight must be in (0, 1), got {weight}")
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    return max(1, math.ceil(2.0 * variance / alpha**2 * math.log(2.0 / weight)))


def sampling_cost(
    alpha: float,
    variance: float,
    gamma: float,
    arity: int,
    L: float,
    R: float,
    delta: float,
) -> int:
    """Batch size implied by the accuracy alone, via the real-valued depth.

    Evaluates ceil((2v/alpha^2) ln(2 (h+1)(h+2) K^h / gamma)) with
    h = ln(LR/alpha)/ln(1/delta); matches the in-run batch sizes whenever
    alpha = L R delta^h for an integer depth h.
    """
    return SamplingCost(
        variance=variance, gamma=gamma, arity=arity, L=L, R=R, delta=delta
    )(alpha)


@dataclass
class StochasticOutcome:
    outcome: RunOutcome
    total_samples: int
    batch_sizes: list[int]

    def to_dict(self) -> dict:
        d = self.outcome.to_dict()
        d["total_samples"] = self.total_samples
        d["certified"] = self.outcome.stop_reason == "certified"
        return d


def run_stochastic(
    partition: Partition,
    objective: Objective,
    L: float,
    gamma: float,
    variance: float,
    eps: float,
    seed: int = 0,
    budget: float = math.inf,
    max_depth: int = 40,
    dist: str = "gaussian",
) -> tuple[StochasticOutcome, list[TraceRow]]:
    """Run the mini-batch certified search; cost of a step is its batch size."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    sampler = StochasticSampler(objective, variance, seed=seed, dist=dist)
    arity = partition.arity
    batches: list[int] = []

    def step_cost(node: NodeId, alpha: float) -> int:
        return batch_size(alpha, variance, risk_weight(node.depth, node.index, gamma, arity))

    def observe(t: int, node: NodeId, x: tuple, alpha: float) -> float:
        m = step_cost(node, alpha)
        samples = sampler.sample_batch((node.depth, node.index), x, m)
        batches.append(m)
        return float(np.sum(samples) / m)

    outcome, rows = run_engine(
        partition, L, step_cost, observe, eps=eps, budget=budget, max_depth=max_depth
    )
    total = int(round(rows[-1].cum_cost))
    return StochasticOutcome(outcome=outcome, total_samples=total, batch_sizes=batches), rows


def monte_carlo(
    partition: Partition,
    objective: Objective,
    L: float,
    gamma: float,
    variance: float,
    eps: float,
    seeds: list[int],
    budget: float = math.inf,
    max_depth: int = 40,
    dist: str = "gaussian",
    sample_bound: Optional[float] = None,
    tol: float = 1e-9,
) -> dict:
    """Independent-seed study of certificate validity and total sample count.

    A seed counts as a violation if any certificate undershoots the true
    optimization error, or if the total sample count exceeds
    ``sample_bound`` (when given).
    """
    from .search import certificate_validity_check

    totals = []
    violations = 0
    for seed in seeds:
        sto, rows = run_stochastic(
            partition, objective, L, gamma, variance, eps,
            seed=seed, budget=budget, max_depth=max_depth, dist=dist,
        )
        bad = certificate_validity_check(rows, objective, tol=tol)
        over = sample_bound is not None and sto.total_samples > sample_bound
        if bad or over:
            violations += 1
        totals.append(sto.total_samples)
    totals_arr = np.array(totals)
    return {
        "n_runs": len(seeds),
        "gamma": gamma,
        "violations": violations,
        "max_total_samples": int(totals_arr.max()),
        "quantiles": {
            "q50": float(np.quantile(totals_arr, 0.5)),
            "q90": float(np.quantile(totals_arr, 0.9)),
            "q100": float(totals_arr.max()),
        },
    }
