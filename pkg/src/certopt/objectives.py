"""Lipschitz test objectives with known constants.

Every objective carries its true Lipschitz constant ``lip_true`` (w.r.t.
the domain norm), a declared bound ``L_declared >= lip_true`` that the
search algorithms are run with, and the known maximum ``f_max`` over the
domain.  ``L_declared`` is stored separately so experiments can inflate it
deliberately; the default is 2 * lip_true, which keeps the lower-bound
factor (1 - lip/L)^d at 2^{-d}.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import SearchDomain, norms_of_rows, vector_norm

BUILTIN_NAMES = ("constant", "cone", "power", "plateau-cone")

# sup norm-equivalence constants: ratio[(from, to)] = sup |w|_to / |w|_from
# over R^d, as a function of d.
_NORM_RATIO: dict[tuple[str, str], Callable[[int], float]] = {
    ("sup", "sup"): lambda d: 1.0,
    ("sup", "l1"): lambda d: float(d),
    ("sup", "l2"): lambda d: math.sqrt(d),
    ("l1", "sup"): lambda d: 1.0,
    ("l1", "l1"): lambda d: 1.0,
    ("l1", "l2"): lambda d: 1.0,
    ("l2", "sup"): lambda d: 1.0,
    ("l2", "l1"): lambda d: math.sqrt(d),
    ("l2", "l2"): lambda d: 1.0,
}


def norm_ratio(from_norm: str, to_norm: str, dim: int) -> float:
    """Smallest C with |w|_to <= C * |w|_from for all w in R^d."""
    return _NORM_RATIO[(from_norm, to_norm)](dim)


@dataclass
class Objective:
    """A test function together with its optimization metadata.

    ``value`` evaluates one point (tuple or 1-d array); ``values``
    evaluates an (n, d) array in one vectorized call.  ``exact_max`` is
    False when f_max was estimated by grid search, in which case validity
    checks should budget a tolerance of L * (grid step).
    """

    name: str
    domain: SearchDomain
    value: Callable[[tuple], float]
    values: Callable[[np.ndarray], np.ndarray]
    lip_true: float
    L_declared: float
    f_max: float
    maximizer_hint: Optional[tuple] = None
    exact_max: bool = True

    def __post_init__(self):
        if self.L_declared < self.lip_true - 1e-12:
            raise ValueError(
                f"L_declared={self.L_declared} below true Lipschitz constant {self.lip_true}"
            )


def _default_L(lip_true: float) -> float:
    return 2.0 * lip_true if lip_true > 0.0 else 1.0


def make_builtin(
    name: str,
    params: Optional[dict] = None,
    domain: Optional[SearchDomain] = None,
    L_declared: Optional[float] = None,
) -> Objective:
    """Construct one of the builtin objectives on the given domain.

    constant      f(x) = c0                        (params: c0)
    cone          f(x) = 1 - |x - center|          (params: norm, center)
    power         f(x) = 1 - |x - center|^p, p > 1 (params: power_exponent, norm, center)
    plateau-cone  f(x) = 1 - max(|x - center| - plateau_radius, 0)

    The shape norm |.| defaults to the domain norm; lip_true accounts for
    the norm-equivalence constant when they differ.
    """
    params = dict(params or {})
    if domain is None:
        domain = SearchDomain([(0.0, 1.0)])
    d = domain.dim

    if name == "constant":
        c0 = float(params.get("c0", 0.0))
        lip = 0.0
        L = L_declared if L_declared is not None else _default_L(lip)
        return Objective(
            name="constant",
            domain=domain,
            value=lambda x: c0,
            values=lambda pts: np.full(len(np.atleast_2d(pts)), c0),
            lip_true=lip,
            L_declared=L,
            f_max=c0,
            maximizer_hint=tuple((lo + hi) / 2.0 for lo, hi in domain.box),
        )

    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin objective {name!r}")

    shape_norm = params.get("norm", domain.norm)
    center = np.asarray(params.get("center", np.zeros(d)), dtype=float)
    if center.shape != (d,):
        raise ValueError(f"center must have {d} coordinates")
    if not domain.contains(center):
        raise ValueError("objective center must lie in the domain")
    ratio = norm_ratio(domain.norm, shape_norm, d)
    center_t = tuple(float(c) for c in center)

    def radial(pts: np.ndarray) -> np.ndarray:
        return norms_of_rows(np.atleast_2d(np.asarray(pts, dtype=float)) - center, shape_norm)

    # scalar fast path in plain python: the engine evaluates point by point
    if shape_norm == "sup":
        def radial_one(x) -> float:
            return max(abs(a - c) for a, c in zip(x, center_t))
    elif shape_norm == "l1":
        def radial_one(x) -> float:
            return sum(abs(a - c) for a, c in zip(x, center_t))
    else:
        def radial_one(x) -> float:
            return math.sqrt(sum((a - c) ** 2 for a, c in zip(x, center_t)))

    if name == "cone":
        lip = ratio
        L = L_declared if L_declared is not None else _default_L(lip)
        return Objective(
            name="cone",
            domain=domain,
            value=lambda x: 1.0 - radial_one(x),
            values=lambda pts: 1.0 - radial(pts),
            lip_true=lip,
            L_declared=L,
            f_max=1.0,
            maximizer_hint=tuple(center),
        )

    if name == "power":
        p = float(params.get("power_exponent", 2.0))
        if p <= 1.0:
            raise ValueError(f"power_exponent must be > 1, got {p}")
        corners_r = _max_corner_radius(domain, center, shape_norm)
        lip = p * corners_r ** (p - 1.0) * ratio
        L = L_declared if L_declared is not None else _default_L(lip)
        return Objective(
            name="power",
            domain=domain,
            value=lambda x: 1.0 - radial_one(x) ** p,
            values=lambda pts: 1.0 - radial(pts) ** p,
            lip_true=lip,
            L_declared=L,
            f_max=1.0,
            maximizer_hint=tuple(center),
        )

    # plateau-cone
    rho = float(params.get("plateau_radius", 0.25))
    if rho <= 0.0:
        raise ValueError(f"plateau_radius must be positive, got {rho}")
    lip = ratio
    L = L_declared if L_declared is not None else _default_L(lip)
    return Objective(
        name="plateau-cone",
        domain=domain,
        value=lambda x: 1.0 - max(radial_one(x) - rho, 0.0),
        values=lambda pts: 1.0 - np.maximum(radial(pts) - rho, 0.0),
        lip_true=lip,
        L_declared=L,
        f_max=1.0,
        maximizer_hint=tuple(center),
    )


def _max_corner_radius(domain: SearchDomain, center: np.ndarray, shape_norm: str) -> float:
    """max_x |x - center| over the box; attained at a corner (convexity)."""
    import itertools

    best = 0.0
    for corner in itertools.product(*domain.box):
        best = max(best, vector_norm(np.asarray(corner) - center, shape_norm))
    return best


@dataclass
class LipschitzReport:
    max_ratio: float
    ok: bool


def check_lipschitz(
    objective: Objective,
    n_pairs: int = 2000,
    seed: int = 0,
    tol: float = 1e-9,
) -> LipschitzReport:
    """Sampled Lipschitz audit: max |f(u)-f(v)| / ||u-v|| vs L_declared."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    lo = np.array([l for l, _ in objective.domain.box])
    hi = np.array([h for _, h in objective.domain.box])
    d = objective.domain.dim

    def draw(n):
        pts = lo + rng.random((n, d)) * (hi - lo)
        if objective.domain.membership is not None:
            pts = pts[objective.domain.contains_many(pts)]
        return pts

    max_ratio = 0.0
    got = 0
    while got < n_pairs:
        want = n_pairs - got
        u = draw(want * 2)
        v = draw(want * 2)
        n = min(len(u), len(v))
        if n == 0:
            continue
        u, v = u[:n], v[:n]
        dist = norms_of_rows(u - v, objective.domain.norm)
        keep = dist > 0
        u, v, dist = u[keep], v[keep], dist[keep]
        if len(u) == 0:
            continue
        ratios = np.abs(objective.values(u) - objective.values(v)) / dist
        if len(ratios):
            max_ratio = max(max_ratio, float(np.max(ratios)))
        got += len(u)
    return LipschitzReport(max_ratio=max_ratio, ok=max_ratio <= objective.L_declared + tol)


def suboptimality_gap(objective: Objective, x) -> float:
    """f_max - f(x); nonnegative on the domain."""
    return objective.f_max - objective.value(x)


def load_table(
    path: str,
    norm: str = "sup",
    L_declared: Optional[float] = None,
    membership=None,
) -> Objective:
    """Tabulated objective from a CSV of grid points (x_1..x_d, value).

    Rows must cover a full regular grid.  Values are extended by multilinear
    interpolation, which preserves the per-axis Lipschitz bounds of the
    table; the stored lip_true is the sum of per-axis difference quotients
    (an upper bound under the sup norm).  f_max is the table maximum and is
    flagged approximate.
    """
    from scipy.interpolate import RegularGridInterpolator

    with open(path, newline="") as fh:
        rows = [[float(c) for c in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"empty objective table {path}")
    data = np.asarray(rows, dtype=float)
    d = data.shape[1] - 1
    if d < 1:
        raise ValueError("table needs at least one coordinate column plus a value column")
    axes = [np.unique(data[:, j]) for j in range(d)]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != len(data):
        raise ValueError("table rows do not form a full regular grid")
    grid_vals = np.full(shape, np.nan)
    index_of = [{v: k for k, v in enumerate(a)} for a in axes]
    for row in data:
        idx = tuple(index_of[j][row[j]] for j in range(d))
        grid_vals[idx] = row[d]
    if np.any(np.isnan(grid_vals)):
        raise ValueError("table has duplicate or missing grid points")

    interp = RegularGridInterpolator(axes, grid_vals, method="linear")
    box = [(float(a[0]), float(a[-1])) for a in axes]
    domain = SearchDomain(box, norm=norm, membership=membership)

    lip = 0.0
    for j in range(d):
        diffs = np.abs(np.diff(grid_vals, axis=j))
        steps = np.diff(axes[j]).reshape([-1 if k == j else 1 for k in range(d)])
        if diffs.size:
            lip += float(np.max(diffs / steps))
    L = L_declared if L_declared is not None else _default_L(lip)

    flat_max = float(np.max(grid_vals))
    argmax = np.unravel_index(int(np.argmax(grid_vals)), shape)
    hint = tuple(float(axes[j][argmax[j]]) for j in range(d))
    return Objective(
        name="table",
        domain=domain,
        value=lambda x: float(interp(np.asarray(x, dtype=float))[0]),
        values=lambda pts: np.asarray(interp(np.atleast_2d(pts)), dtype=float),
        lip_true=lip,
        L_declared=L,
        f_max=flat_max,
        maximizer_hint=hint,
        exact_max=False,
    )
