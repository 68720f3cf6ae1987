"""Complexity calculator: layer packings, cost sums, and bound predictors.

The central quantity is the packing-times-cost sum over optimality layers

    S = N(X_eps, eps/L) c(beta*eps) + sum_k N(X_(eps_k, eps_{k-1}], eps_k/L) c(beta*eps_k)

where X_eps is the set of eps-optimal points, the layers stratify the
suboptimality gap by the dyadic schedule eps_k, and N(., r) is the packing
number at separation r.  All set quantities are grid-discretized: each
result records the grid step used, and greedy packings (above the exact
brute-force threshold) are lower bounds on the true packing numbers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import SearchDomain, grid_points, norms_of_rows, packing_number
from .objectives import Objective
from .search import TraceRow

LOWER_BOUND_BASE = 65.0  # per-dimension constant of the worst-environment bound


@dataclass(frozen=True)
class EpsSchedule:
    """Dyadic schedule eps_0 = L*diam > eps_1 > ... > eps_m = eps."""

    eps0: float
    m: int
    values: tuple[float, ...]  # values[k-1] = eps_k, k = 1..m

    def __post_init__(self):
        assert all(a > b for a, b in zip((self.eps0,) + self.values, self.values))


def eps_schedule(L: float, diam: float, eps: float) -> EpsSchedule:
    """Intermediate target errors eps_k = eps0 * 2^-k, ending exactly at eps."""
    eps0 = L * diam
    if not 0.0 < eps < eps0:
        raise ValueError(f"eps must be in (0, {eps0}), got {eps}")
    m = max(1, math.ceil(math.log2(eps0 / eps) - 1e-12))
    values = tuple(eps0 * 2.0**-k for k in range(1, m)) + (eps,)
    return EpsSchedule(eps0=eps0, m=m, values=values)


def layer_packing(
    objective: Objective,
    a: Optional[float],
    b: float,
    r: float,
    grid_step: float,
) -> int:
    """Packing number of one gap layer at separation r, on grid candidates.

    The layer keeps grid points with suboptimality gap in (a, b]; passing
    a = None keeps the whole sublevel set gap <= b (the b-optimal points).
    """
    pts = grid_points(objective.domain, grid_step)
    gaps = objective.f_max - objective.values(pts)
    if a is None:
        mask = gaps <= b
    else:
        mask = (gaps > a) & (gaps <= b)
    candidates = pts[mask]
    if len(candidates) == 0:
        return 0
    return packing_number(candidates, r, norm=objective.domain.norm)


@dataclass
class ComplexityProfile:
    schedule: EpsSchedule
    beta: float
    base_packing: int
    base_term: float
    layer_packings: tuple[int, ...]
    layer_terms: tuple[float, ...]
    S: float
    grid_step: float

    def to_dict(self) -> dict:
        per_layer = []
        eps_prev = self.schedule.eps0
        for k, (pack, term) in enumerate(zip(self.layer_packings, self.layer_terms), start=1):
            per_layer.append(
                {
                    "k": k,
                    "eps_k": self.schedule.values[k - 1],
                    "eps_prev": eps_prev,
                    "packing": pack,
                    "cost_term": term,
                }
            )
            eps_prev = self.schedule.values[k - 1]
        return {
            "eps_schedule": {
                "eps0": self.schedule.eps0,
                "m": self.schedule.m,
                "values": list(self.schedule.values),
            },
            "beta": self.beta,
            "base_packing": self.base_packing,
            "base_term": self.base_term,
            "per_layer": per_layer,
            "S": self.S,
            "grid_resolution": self.grid_step,
        }


def packing_cost_sum(
    objective: Objective,
    L: float,
    eps: float,
    beta: float,
    cost,
    grid_step: float,
) -> tuple[float, ComplexityProfile]:
    """The layered packing-times-cost sum S with a per-term breakdown.

    Uses eps0 = L * diam(domain); the grid step bounds the discretization
    error of every layer by L * grid_step in gap units.
    """
    domain = objective.domain
    schedule = eps_schedule(L, domain.diameter, eps)
    pts = grid_points(domain, grid_step)
    gaps = objective.f_max - objective.values(pts)
    norm = domain.norm

    base_mask = gaps <= eps
    base_candidates = pts[base_mask]
    base_pack = (
        packing_number(base_candidates, eps / L, norm=norm) if len(base_candidates) else 0
    )
    base_term = base_pack * cost(beta * eps)

    layer_packs = []
    layer_terms = []
    eps_prev = schedule.eps0
    for eps_k in schedule.values:
        mask = (gaps > eps_k) & (gaps <= eps_prev)
        candidates = pts[mask]
        pack = packing_number(candidates, eps_k / L, norm=norm) if len(candidates) else 0
        layer_packs.append(pack)
        layer_terms.append(pack * cost(beta * eps_k))
        eps_prev = eps_k

    S = base_term + float(sum(layer_terms))
    profile = ComplexityProfile(
        schedule=schedule,
        beta=beta,
        base_packing=base_pack,
        base_term=base_term,
        layer_packings=tuple(layer_packs),
        layer_terms=tuple(layer_terms),
        S=S,
        grid_step=grid_step,
    )
    return S, profile


def expansion_constant(arity: int, nu: float, R: float, d: int) -> float:
    """Multiplier in the worst-case cost bound: K if nu >= 3R, else K(1+6R/nu)^d."""
    if nu >= 3.0 * R:
        return float(arity)
    return float(arity) * (1.0 + 6.0 * R / nu) ** d


def upper_bound_prediction(
    profile: ComplexityProfile,
    cost,
    arity: int,
    nu: float,
    R: float,
    delta: float,
    L: float,
    d: int,
) -> float:
    """Predicted worst-case cost: a * S + c(LR), with S taken at beta = delta/3."""
    if abs(profile.beta - delta / 3.0) > 1e-9 * max(1.0, delta):
        raise ValueError(
            f"profile was computed at beta={profile.beta}, expected delta/3={delta / 3.0}"
        )
    a = expansion_constant(arity, nu, R, d)
    return a * profile.S + cost(L * R)


def lower_bound_prediction(
    objective: Objective,
    L: float,
    eps: float,
    cost,
    grid_step: float,
) -> float:
    """Worst-environment cost floor for any certified algorithm.

    (1/65^d) (1 - lip/L)^d / (1 + m_eps) * S computed at beta = 16.  The
    factor vanishes when L <= lip(f); a warning is emitted and 0 returned.
    """
    d = objective.domain.dim
    if objective.lip_true >= L:
        warnings.warn(
            "lower bound vanishes: declared L does not exceed the true Lipschitz constant",
            stacklevel=2,
        )
        return 0.0
    S, profile = packing_cost_sum(objective, L, eps, beta=16.0, cost=cost, grid_step=grid_step)
    factor = (1.0 - objective.lip_true / L) ** d
    return factor / LOWER_BOUND_BASE**d / (1.0 + profile.schedule.m) * S


# ---------------------------------------------------------------------------
# envelope oracle


@dataclass
class OracleResult:
    err: float
    upper_max: float
    lower_at_rec: float
    inconsistent: list[int]
    grid_step: float


def best_certificate_oracle(
    observations: list[tuple[tuple, float, float]],
    rec: tuple,
    L: float,
    domain: SearchDomain,
    grid_step: float,
) -> OracleResult:
    """Best certificate any algorithm could output given the observations.

    Observations are (x_t, alpha_t, y_t) triples.  With the envelopes

        U(x)    = min_t (y_t + alpha_t + L ||x - x_t||)   (upper)
        Lo(z)   = max_t (y_t - alpha_t - L ||z - x_t||)   (lower)

    the extremal consistent function g(x) = min(U(x), Lo(rec) + L||x - rec||)
    is L-Lipschitz, honors every observation window, and attains the
    supremum of max(g) - g(rec): the oracle value is max_grid g - Lo(rec),
    exact at grid points (so within L * grid_step of the true value).

    Observation triples with U(x_t) < y_t - alpha_t are mutually
    inconsistent (no L-Lipschitz function fits); they are reported, not
    clipped.
    """
    if not observations:
        raise ValueError("need at least one observation")
    xs = np.array([list(x) for x, _, _ in observations], dtype=float)
    alphas = np.array([a for _, a, _ in observations], dtype=float)
    ys = np.array([y for _, _, y in observations], dtype=float)
    norm = domain.norm
    rec_arr = np.asarray(rec, dtype=float)

    grid = grid_points(domain, grid_step)
    # distances grid x observations
    dist = norms_of_rows(grid[:, None, :] - xs[None, :, :], norm)
    upper = np.min(ys[None, :] + alphas[None, :] + L * dist, axis=1)

    dist_rec = norms_of_rows(rec_arr[None, :] - xs, norm)
    lower_at_rec = float(np.max(ys - alphas - L * dist_rec))

    cone = lower_at_rec + L * norms_of_rows(grid - rec_arr, norm)
    extremal = np.minimum(upper, cone)
    err = float(np.max(extremal)) - lower_at_rec

    # consistency of the observation set itself
    dist_obs = norms_of_rows(xs[:, None, :] - xs[None, :, :], norm)
    upper_at_obs = np.min(ys[None, :] + alphas[None, :] + L * dist_obs, axis=1)
    inconsistent = [
        t + 1 for t in range(len(observations)) if upper_at_obs[t] < ys[t] - alphas[t] - 1e-12
    ]
    return OracleResult(
        err=err,
        upper_max=float(np.max(upper)),
        lower_at_rec=lower_at_rec,
        inconsistent=inconsistent,
        grid_step=grid_step,
    )


def dominance_violations(
    rows: list[TraceRow],
    domain: SearchDomain,
    L: float,
    grid_step: float,
) -> list[int]:
    """Rows where the recorded certificate undercuts the oracle.

    Checks certificate_t >= oracle(rows up to t) - L * grid_step at every
    prefix; returns the violating t values.  The envelopes are accumulated
    incrementally, so the sweep costs O(n_rows * grid) overall.
    """
    grid = grid_points(domain, grid_step)
    norm = domain.norm
    xs = np.array([list(r.x) for r in rows], dtype=float)
    upper = np.full(len(grid), np.inf)
    bad = []
    for k, row in enumerate(rows):
        d_k = norms_of_rows(grid - xs[k], norm)
        upper = np.minimum(upper, row.y + row.alpha + L * d_k)
        rec_arr = np.asarray(row.rec, dtype=float)
        d_rec = norms_of_rows(rec_arr[None, :] - xs[: k + 1], norm)
        lower_at_rec = float(
            np.max(np.array([r.y - r.alpha for r in rows[: k + 1]]) - L * d_rec)
        )
        cone = lower_at_rec + L * norms_of_rows(grid - rec_arr, norm)
        err = float(np.max(np.minimum(upper, cone))) - lower_at_rec
        if row.certificate < err - L * grid_step - 1e-12:
            bad.append(row.t)
    return bad


def integral_approximation(
    objective: Objective,
    L: float,
    eps: float,
    cost,
    b: float,
    grid_step: float,
) -> float:
    """Midpoint quadrature of integral_X c(b*(gap(x)+eps)) / (gap(x)+eps)^d dx."""
    if eps <= 0.0 or b <= 0.0:
        raise ValueError("eps and b must be positive")
    domain = objective.domain
    d = domain.dim
    axes = []
    weights = 1.0
    for lo, hi in domain.box:
        n = max(1, round((hi - lo) / grid_step))
        step = (hi - lo) / n
        axes.append(lo + (np.arange(n) + 0.5) * step)
        weights *= step
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    if domain.membership is not None:
        pts = pts[domain.contains_many(pts)]
    gaps = objective.f_max - objective.values(pts)
    shifted = gaps + eps
    costs = np.array([cost(b * s) for s in shifted])
    return float(np.sum(costs / shifted**d) * weights)
