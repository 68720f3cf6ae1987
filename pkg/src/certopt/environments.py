"""Evaluation environments: bounded-error responders and noisy samplers.

A deterministic environment answers a query (x, alpha) with a value y
satisfying |y - f(x)| <= alpha.  The shipped kinds are

* noiseless     y = f(x)
* pessimistic   y = f(x) - alpha
* optimistic    y = f(x) + alpha
* collaborative alternates f(x) - alpha / f(x) + alpha on repeated queries
                of the bitwise-same point, so two queries reveal f(x) exactly
* bump          answers honestly for a hidden function g = f + sign * spike,
                which may break the bounded-error contract relative to f;
                such responses are flagged, not clipped (that is the point
                of the construction, g is the true hidden function)

The stochastic sampler returns mini-batches f(x) + noise with i.i.d.
mean-zero noise of variance v, generated per (node, sample index) from a
counter-based RNG so replays are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import grid_points, norms_of_rows, vector_norm
from .objectives import Objective

DETERMINISTIC_KINDS = ("noiseless", "pessimistic", "optimistic", "collaborative", "bump")


@dataclass(frozen=True)
class BumpParams:
    """Spike added to f in the adversarial construction.

    The spike max{8*scale - 16*(L/k_lb)*|x - center|, 0} has height 8*scale,
    support radius k_lb*scale/(2L), and Lipschitz constant 16L/k_lb = L - lip,
    so f +- spike stays L-Lipschitz whenever L > lip.
    """

    center: tuple
    scale: float
    sign: int
    L: float
    lip: float
    norm: str = "sup"

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ValueError("bump scale must be positive")
        if self.sign not in (1, -1):
            raise ValueError("bump sign must be +1 or -1")
        if not self.L > self.lip:
            raise ValueError("bump needs L_declared > lip_true (finite spike slope)")

    @property
    def k_lb(self) -> float:
        return 16.0 * self.L / (self.L - self.lip)

    @property
    def support_radius(self) -> float:
        return self.k_lb * self.scale / (2.0 * self.L)


def make_bump(objective: Objective, center, scale: float, sign: int = 1) -> BumpParams:
    params = BumpParams(
        center=tuple(float(c) for c in center),
        scale=float(scale),
        sign=int(sign),
        L=objective.L_declared,
        lip=objective.lip_true,
        norm=objective.domain.norm,
    )
    if params.support_radius > objective.domain.diameter + 1e-12:
        raise ValueError(
            f"bump support radius {params.support_radius:.6g} exceeds the domain "
            f"diameter {objective.domain.diameter:.6g}"
        )
    return params


def bump_value(params: BumpParams, x, L: Optional[float] = None) -> float:
    """Spike height max{8*scale - 16*(L/k_lb)*|x - center|, 0} at x."""
    if L is None:
        L = params.L
    dist = vector_norm(
        np.asarray(x, dtype=float) - np.asarray(params.center, dtype=float),
        params.norm,
    )
    return max(8.0 * params.scale - 16.0 * (L / params.k_lb) * dist, 0.0)


def perturbed_objective(objective: Objective, bump: BumpParams) -> Objective:
    """The hidden function g = f + sign * spike, with recomputed metadata.

    g is L_declared-Lipschitz by construction.  max(g) is exact for the
    + sign when the bump center is feasible (f(center) + 8*scale dominates
    every other value by the spike geometry only if f is flat there, so it
    is estimated by grid scan and flagged approximate in general).
    """
    sgn = float(bump.sign)

    def value(x):
        return objective.value(x) + sgn * bump_value(bump, x)

    def values(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        diff = pts - np.asarray(bump.center)
        spike = np.maximum(
            8.0 * bump.scale - 16.0 * (bump.L / bump.k_lb) * norms_of_rows(diff, bump.norm),
            0.0,
        )
        return objective.values(pts) + sgn * spike

    step = max(objective.domain.diameter / 400.0, 1e-6)
    pts = grid_points(objective.domain, step)
    vals = values(pts)
    k = int(np.argmax(vals))
    center_val = value(bump.center) if objective.domain.contains(np.asarray(bump.center)) else -np.inf
    f_max = max(float(vals[k]), objective.f_max if sgn < 0 else -np.inf, center_val)
    hint = tuple(pts[k]) if f_max == float(vals[k]) else (
        tuple(bump.center) if f_max == center_val else objective.maximizer_hint
    )
    return Objective(
        name=f"{objective.name}{'+' if sgn > 0 else '-'}bump",
        domain=objective.domain,
        value=value,
        values=values,
        lip_true=min(objective.lip_true + (bump.L - bump.lip), bump.L),
        L_declared=objective.L_declared,
        f_max=f_max,
        maximizer_hint=hint,
        exact_max=False,
    )


@dataclass
class QueryRecord:
    t: int
    x: tuple
    alpha: float
    y: float


class Environment:
    """Stateful bounded-error responder, owned by a single run."""

    def __init__(self, kind: str, objective: Objective, bump: Optional[BumpParams] = None):
        if kind not in DETERMINISTIC_KINDS:
            raise ValueError(f"unknown environment kind {kind!r}")
        if kind == "bump" and bump is None:
            raise ValueError("bump environment needs BumpParams")
        self.kind = kind
        self.objective = objective
        self.bump = bump
        self.log: list[QueryRecord] = []
        self.adversarial_rows: list[int] = []
        self._visits: dict[tuple, int] = {}

    def respond(self, t: int, x, alpha: float) -> float:
        if alpha <= 0.0:
            raise ValueError(f"accuracy alpha must be positive, got {alpha}")
        if not isinstance(x, tuple):
            x = tuple(float(c) for c in np.atleast_1d(np.asarray(x, dtype=float)))
        fx = self.objective.value(x)
        if self.kind == "noiseless":
            y = fx
        elif self.kind == "pessimistic":
            y = fx - alpha
        elif self.kind == "optimistic":
            y = fx + alpha
        elif self.kind == "collaborative":
            n = self._visits.get(x, 0)
            y = fx - alpha if n % 2 == 0 else fx + alpha
            self._visits[x] = n + 1
        else:  # bump: honest for the hidden g = f + sign*spike
            spike = bump_value(self.bump, x)
            y = fx + self.bump.sign * spike
            if spike > alpha:
                self.adversarial_rows.append(t)
        self.log.append(QueryRecord(t=t, x=x, alpha=alpha, y=y))
        return y

    def audit(self, tol: float = 1e-12) -> list[QueryRecord]:
        """Recorded responses violating |y - f(x)| <= alpha relative to f."""
        bad = []
        for rec in self.log:
            if abs(rec.y - self.objective.value(rec.x)) > rec.alpha + tol:
                bad.append(rec)
        return bad


class StochasticSampler:
    """Mini-batch sampler y = f(x) + noise, noise i.i.d. mean zero, variance v.

    Noise is keyed by (seed, node) through a SeedSequence, so a replay with
    the same seed reproduces every batch bit-for-bit and the v = 0 case
    degenerates to exact evaluations.
    """

    def __init__(self, objective: Objective, variance: float, seed: int = 0, dist: str = "gaussian"):
        if variance < 0.0:
            raise ValueError("noise variance must be nonnegative")
        if dist not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise distribution {dist!r}")
        self.objective = objective
        self.variance = float(variance)
        self.seed = int(seed)
        self.dist = dist
        self.log: list[tuple[int, tuple, int]] = []

    def _rng(self, key: tuple[int, int]) -> np.random.Generator:
        h, i = key
        digits = []
        i = int(i)
        while True:
            i, rem = divmod(i, 2**32)
            digits.append(rem)
            if i == 0:
                break
        ss = np.random.SeedSequence([self.seed, int(h)] + digits)
        return np.random.Generator(np.random.PCG64(ss))

    def sample_batch(self, key: tuple[int, int], x, m: int) -> np.ndarray:
        """m draws at x, keyed by the queried node (depth, index)."""
        if m < 1:
            raise ValueError("batch size must be >= 1")
        fx = self.objective.value(x)
        if self.variance == 0.0:
            samples = np.full(m, fx)
        else:
            rng = self._rng(key)
            if self.dist == "gaussian":
                noise = rng.normal(0.0, np.sqrt(self.variance), size=m)
            else:
                half = np.sqrt(self.variance)
                noise = rng.uniform(-half, half, size=m)
            samples = fx + noise
        self.log.append((len(self.log) + 1, tuple(np.atleast_1d(x)), m))
        return samples
