"""Search domains, hierarchical partitions, and packing numbers.

A search domain is a compact axis-aligned box in R^d, optionally restricted
by a membership predicate, endowed with one of the sup / l1 / l2 norms.
A hierarchical partition splits the bounding box into K-ary trees of cells
X_{h,i} (depth h, index i) and carries the geometry constants (K, delta, R,
nu) that the search engine relies on:

* every pair of points in a depth-h cell is within R * delta^h;
* representatives of distinct cells are at least nu * delta^{max(h,h')}
  apart.

Both constants can be checked empirically with :func:`verify_assumptions`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

NORMS = ("sup", "l1", "l2")


def vector_norm(v: np.ndarray, norm: str) -> float:
    """Norm of a single vector under one of the supported norms."""
    v = np.asarray(v, dtype=float)
    if norm == "sup":
        return float(np.max(np.abs(v)))
    if norm == "l1":
        return float(np.sum(np.abs(v)))
    if norm == "l2":
        return float(math.sqrt(np.sum(v * v)))
    raise ValueError(f"unknown norm {norm!r}")


def norms_of_rows(pts: np.ndarray, norm: str) -> np.ndarray:
    """Vectorized norm along the last axis."""
    pts = np.asarray(pts, dtype=float)
    if norm == "sup":
        return np.max(np.abs(pts), axis=-1)
    if norm == "l1":
        return np.sum(np.abs(pts), axis=-1)
    if norm == "l2":
        return np.sqrt(np.sum(pts * pts, axis=-1))
    raise ValueError(f"unknown norm {norm!r}")


def distance(u, v, norm: str = "sup") -> float:
    return vector_norm(np.asarray(u, dtype=float) - np.asarray(v, dtype=float), norm)


class SearchDomain:
    """Compact box domain with an optional membership predicate.

    The membership predicate restricts the box; it must accept a 1-d numpy
    array and return a bool.  The domain must contain at least one point of
    a coarse scan grid, checked at construction.
    """

    def __init__(
        self,
        box: Sequence[Sequence[float]],
        norm: str = "sup",
        membership: Optional[Callable[[np.ndarray], bool]] = None,
        feasibility_scan: int = 3,
    ):
        box_arr = [(float(lo), float(hi)) for lo, hi in box]
        if not box_arr:
            raise ValueError("box must have at least one interval")
        for j, (lo, hi) in enumerate(box_arr):
            if not lo < hi:
                raise ValueError(f"box interval {j} is empty: [{lo}, {hi}]")
        if norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
        self.box = tuple(box_arr)
        self.norm = norm
        self.membership = membership
        self.dim = len(box_arr)
        widths = np.array([hi - lo for lo, hi in box_arr])
        self.diameter = vector_norm(widths, norm)
        if membership is not None and not self._scan_feasible(feasibility_scan):
            raise ValueError("membership predicate rejects every scanned point of the box")

    def _scan_feasible(self, per_axis: int) -> bool:
        axes = [
            lo + (np.arange(per_axis) + 0.5) * (hi - lo) / per_axis
            for lo, hi in self.box
        ]
        for combo in itertools.product(*axes):
            if self.contains(np.array(combo)):
                return True
        return False

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dim},)")
        for xj, (lo, hi) in zip(x, self.box):
            if not (lo <= xj <= hi):
                return False
        if self.membership is not None:
            return bool(self.membership(x))
        return True

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        """Boolean mask of feasible rows of an (n, d) array."""
        pts = np.asarray(pts, dtype=float)
        lo = np.array([l for l, _ in self.box])
        hi = np.array([h for _, h in self.box])
        mask = np.all((pts >= lo) & (pts <= hi), axis=1)
        if self.membership is not None:
            idx = np.nonzero(mask)[0]
            for k in idx:
                if not self.membership(pts[k]):
                    mask[k] = False
        return mask

    def __repr__(self):
        return f"SearchDomain(box={self.box}, norm={self.norm!r})"


@dataclass(frozen=True)
class NodeId:
    """Address (depth, index) of one cell; 0 <= index < K^depth."""

    depth: int
    index: int

    def validate(self, arity: int) -> None:
        if self.depth < 0 or not 0 <= self.index < arity**self.depth:
            raise IndexError(f"node {self} out of range for arity {arity}")


class Partition:
    """K-ary hierarchical partition of a box domain.

    Cells are addressed in closed form by the base-K digits of the index:
    each digit selects one of the K sub-boxes of the current box, splitting
    every axis into ``m`` equal parts with row-major digit order (axis 0 is
    the most significant).  K must therefore be a d-th power m^d.
    """

    def __init__(
        self,
        domain: SearchDomain,
        arity: int,
        delta: float,
        R: float,
        nu: float,
        scan_per_axis: int = 3,
    ):
        d = domain.dim
        m = round(arity ** (1.0 / d))
        if m < 2 or m**d != arity:
            raise ValueError(f"arity {arity} is not m^d for split factor m >= 2, d={d}")
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {delta}")
        if R <= 0.0:
            raise ValueError(f"R must be positive, got {R}")
        if nu <= 0.0:
            raise ValueError(f"nu must be positive, got {nu}")
        self.domain = domain
        self.arity = arity
        self.split = m
        self.delta = float(delta)
        self.R = float(R)
        self.nu = float(nu)
        self.scan_per_axis = scan_per_axis

    def cell(self, node: NodeId) -> tuple[tuple[float, float], ...]:
        """Axis-aligned box of the node's cell; depth 0 is the bounding box."""
        node.validate(self.arity)
        d = self.domain.dim
        m = self.split
        lo = [l for l, _ in self.domain.box]
        width = [h - l for l, h in self.domain.box]
        digits = self._level_digits(node)
        for digit in digits:
            for axis in range(d - 1, -1, -1):
                digit, sub = divmod(digit, m)
                width[axis] /= m
                lo[axis] += sub * width[axis]
        return tuple((lo[a], lo[a] + width[a]) for a in range(d))

    def _level_digits(self, node: NodeId) -> list[int]:
        # base-K digits of the index, most significant digit = first split
        digits = []
        i = node.index
        for _ in range(node.depth):
            i, rem = divmod(i, self.arity)
            digits.append(rem)
        return digits[::-1]

    def children(self, node: NodeId) -> list[NodeId]:
        node.validate(self.arity)
        base = self.arity * node.index
        return [NodeId(node.depth + 1, base + j) for j in range(self.arity)]

    def representative(self, node: NodeId) -> Optional[tuple[float, ...]]:
        """Feasible point of the cell, or None if the scan finds none.

        The cell center is used whenever feasible; otherwise the cell is
        scanned on an interior grid (scan_per_axis points per axis) and the
        first feasible point in row-major order is returned.
        """
        box = self.cell(node)
        center = tuple((lo + hi) / 2.0 for lo, hi in box)
        if self.domain.contains(np.array(center)):
            return center
        n = self.scan_per_axis
        axes = [
            [lo + (k + 0.5) * (hi - lo) / n for k in range(n)]
            for lo, hi in box
        ]
        for combo in itertools.product(*axes):
            if self.domain.contains(np.array(combo)):
                return tuple(combo)
        return None

    def max_alpha(self, L: float) -> float:
        """Accuracy used at the root: L * R."""
        return L * self.R

    def __repr__(self):
        return (
            f"Partition(arity={self.arity}, delta={self.delta}, "
            f"R={self.R}, nu={self.nu}, domain={self.domain!r})"
        )


def dyadic_sup_partition(
    dim: int,
    box: Optional[Sequence[Sequence[float]]] = None,
    membership: Optional[Callable[[np.ndarray], bool]] = None,
) -> Partition:
    """The standard preset: dyadic split of a hypercube under the sup norm.

    For a cube of side w this satisfies the cell-diameter bound with
    R = w, delta = 1/2 and the separation bound with nu = w/2.
    """
    if box is None:
        box = [(0.0, 1.0)] * dim
    widths = {float(hi) - float(lo) for lo, hi in box}
    if len(widths) != 1:
        raise ValueError("dyadic-sup preset requires a hypercube (equal side lengths)")
    w = widths.pop()
    domain = SearchDomain(box, norm="sup", membership=membership)
    return Partition(domain, arity=2**dim, delta=0.5, R=w, nu=w / 2.0)


# ---------------------------------------------------------------------------
# packing numbers


def _pairwise_distances(points: np.ndarray, norm: str) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return norms_of_rows(diff, norm)


def _exact_packing(points: np.ndarray, r: float, norm: str) -> int:
    """Maximum number of pairwise (> r)-separated points, by branch and bound."""
    n = len(points)
    dist = _pairwise_distances(points, norm)
    compat = []
    for v in range(n):
        mask = 0
        for u in range(n):
            if u != v and dist[u, v] > r:
                mask |= 1 << u
        compat.append(mask)

    best = 0

    def rec(mask: int, count: int) -> None:
        nonlocal best
        if count + mask.bit_count() <= best:
            return
        if mask == 0:
            if count > best:
                best = count
            return
        v = (mask & -mask).bit_length() - 1
        rec(mask & compat[v], count + 1)
        rec(mask & ~(1 << v), count)

    rec((1 << n) - 1, 0)
    return best


_MINKOWSKI = {"sup": np.inf, "l1": 1.0, "l2": 2.0}


def _greedy_packing(points: np.ndarray, r: float, norm: str) -> int:
    """First-fit maximal packing over candidates in lexicographic order.

    A maximal packing is a lower bound on the true packing number.  Each
    accepted point eliminates every candidate within distance r via one
    KD-tree ball query, so the sweep runs in near-linear time.
    """
    from scipy.spatial import cKDTree

    order = np.lexsort(points.T[::-1])  # row-major lexicographic
    pts = points[order]
    tree = cKDTree(pts)
    p = _MINKOWSKI[norm]
    alive = np.ones(len(pts), dtype=bool)
    count = 0
    ptr = 0
    while ptr < len(pts):
        if alive[ptr]:
            count += 1
            kill = tree.query_ball_point(pts[ptr], r, p=p)
            alive[kill] = False
        ptr += 1
    return count


def packing_number(
    points,
    r: float,
    norm: str = "sup",
    exact_threshold: int = 20,
) -> int:
    """Largest number of pairwise (> r)-separated points among the candidates.

    Exact (branch and bound) for at most ``exact_threshold`` candidates;
    beyond that a deterministic greedy maximal packing is returned, which is
    a lower bound on the true packing number.
    """
    if r <= 0.0:
        raise ValueError(f"separation r must be positive, got {r}")
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return 0
    if points.ndim == 1:
        points = points[:, None]
    if len(points) <= exact_threshold:
        return _exact_packing(points, r, norm)
    return _greedy_packing(points, r, norm)


def grid_points(domain: SearchDomain, step: float) -> np.ndarray:
    """Feasible grid candidates of the domain, lexicographically ordered.

    The grid includes both box endpoints along every axis (step permitting).
    """
    if step <= 0.0:
        raise ValueError(f"grid step must be positive, got {step}")
    axes = []
    for lo, hi in domain.box:
        n = int(math.floor((hi - lo) / step + 1e-6)) + 1
        axes.append(lo + step * np.arange(n))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)
    if domain.membership is not None:
        pts = pts[domain.contains_many(pts)]
    return pts


# ---------------------------------------------------------------------------
# assumption checking


@dataclass
class AssumptionReport:
    R_observed: float
    nu_observed: float
    ok: bool
    violation: Optional[str] = None


def verify_assumptions(
    partition: Partition,
    max_depth: int,
    samples_per_cell: int = 0,
    seed: int = 0,
    tol: float = 1e-12,
) -> AssumptionReport:
    """Empirical check of the declared (R, nu, delta) constants.

    The cell-diameter bound is checked on the opposite-corner pair of every
    cell (the exact diameter of a box) plus optional random point pairs; the
    separation bound is checked on all pairs of feasible representatives up
    to ``max_depth``.  Cost grows as arity^(2 * max_depth).
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    rng = np.random.default_rng(seed)
    norm = partition.domain.norm
    delta, R, nu = partition.delta, partition.R, partition.nu

    R_obs = 0.0
    r_violation = None
    reps: list[tuple[int, int, np.ndarray]] = []
    for h in range(max_depth + 1):
        for i in range(partition.arity**h):
            node = NodeId(h, i)
            box = partition.cell(node)
            lo = np.array([l for l, _ in box])
            hi = np.array([u for _, u in box])
            diam = vector_norm(hi - lo, norm)
            if samples_per_cell > 0:
                u = lo + rng.random((samples_per_cell, len(lo))) * (hi - lo)
                v = lo + rng.random((samples_per_cell, len(lo))) * (hi - lo)
                sampled = float(np.max(norms_of_rows(u - v, norm)))
                diam = max(diam, sampled)
            ratio = diam / delta**h
            if ratio > R_obs:
                R_obs = ratio
            if diam > R * delta**h + tol and r_violation is None:
                r_violation = (
                    f"cell ({h},{i}): corner pair at distance {diam:.6g} "
                    f"> R*delta^h = {R * delta ** h:.6g}"
                )
            rep = partition.representative(node)
            if rep is not None:
                reps.append((h, i, np.asarray(rep)))

    nu_obs = math.inf
    nu_violation = None
    for a in range(len(reps)):
        ha, ia, xa = reps[a]
        for b in range(a + 1, len(reps)):
            hb, ib, xb = reps[b]
            dist_ab = vector_norm(xa - xb, norm)
            scale = delta ** max(ha, hb)
            ratio = dist_ab / scale
            if ratio < nu_obs:
                nu_obs = ratio
            if dist_ab < nu * scale - tol and nu_violation is None:
                nu_violation = (
                    f"representatives of ({ha},{ia}) and ({hb},{ib}) at distance "
                    f"{dist_ab:.6g} < nu*delta^max(h,h') = {nu * scale:.6g}"
                )

    violation = r_violation or nu_violation
    return AssumptionReport(
        R_observed=R_obs,
        nu_observed=nu_obs if math.isfinite(nu_obs) else 0.0,
        ok=violation is None,
        violation=violation,
    )


def find_unit_step(
    domain: SearchDomain,
    x,
    eps: float,
    n_random: int = 64,
    seed: int = 0,
) -> Optional[np.ndarray]:
    """Unit direction v (in the domain norm) with x + eps*v still feasible.

    Scans axis directions, diagonal sign patterns, and seeded random
    directions.  For a compact connected domain and eps <= diameter/2 such a
    direction always exists; the scan may miss it for exotic memberships.
    """
    x = np.asarray(x, dtype=float)
    d = domain.dim
    candidates: list[np.ndarray] = []
    for a in range(d):
        for s in (1.0, -1.0):
            e = np.zeros(d)
            e[a] = s
            candidates.append(e)
    if d > 1:
        for signs in itertools.product((1.0, -1.0), repeat=d):
            candidates.append(np.array(signs))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        v = rng.standard_normal(d)
        if np.any(v != 0.0):
            candidates.append(v)
    for v in candidates:
        nv = vector_norm(v, domain.norm)
        if nv == 0.0:
            continue
        v = v / nv
        if domain.contains(x + eps * v):
            return v
    return None
