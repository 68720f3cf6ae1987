"""Certified optimistic search over a hierarchical partition.

The engine maintains a leaf set covering the domain.  Each queried leaf
(h, i) stores an observed value y within alpha = L*R*delta^h of f at its
representative; its priority y + L*R*delta^h + alpha is a guaranteed upper
bound on f over the whole cell.  One iteration queries all feasible
children of the current head leaf (the priority argmax), then re-selects
the head.  After every evaluation the engine outputs

* the recommendation: the query point with the best guaranteed lower bound
  max_s (y_s - alpha_s), earliest index on ties;
* the certificate: head priority minus that lower bound, a data-driven
  upper bound on max f - f(recommendation), valid for every L-Lipschitz f
  consistent with the responses.

A run stops the first time a certificate reaches the target eps (realized
cost sigma = cumulative cost at that row; stopping is allowed both at the
per-evaluation certificate and at its update after the head re-selection),
or when the next query would exceed the budget, or when the head reaches
max_depth.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

from .costs import ConstantCost
from .environments import Environment
from .geometry import NodeId, Partition
from .objectives import Objective

# step_cost(node, alpha) -> cost of the query; observe(t, node, x, alpha) -> y
StepCostFn = Callable[[NodeId, float], float]
ObserveFn = Callable[[int, NodeId, tuple, float], float]


class TraceRow(NamedTuple):
    t: int
    depth: int
    index: int
    x: tuple
    alpha: float
    y: float
    step_cost: float
    cum_cost: float
    rec: tuple
    certificate: float


@dataclass
class RunOutcome:
    sigma: Optional[float]  # realized cost complexity; None if not certified
    tau: Optional[int]
    stop_reason: str  # certified | budget | depth-limit
    final_xi: float
    final_rec: tuple
    n_evals: int
    total_cost: float

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "tau": self.tau,
            "stop_reason": self.stop_reason,
            "final_xi": self.final_xi,
            "final_rec": list(self.final_rec),
            "n_evals": self.n_evals,
            "total_cost": self.total_cost,
        }


class Engine:
    """Single-owner sequential engine; one instance per run."""

    def __init__(self, partition: Partition, L: float, step_cost: StepCostFn, observe: ObserveFn):
        self.partition = partition
        self.L = float(L)
        self.step_cost = step_cost
        self.observe = observe
        self.delta = partition.delta
        self.R = partition.R
        self.rows: list[TraceRow] = []
        self.heap: list[tuple[float, int, int, float, tuple]] = []
        self.t = 0
        self.cum_cost = 0.0
        self.best_lower = -math.inf
        self.best_x: tuple = ()
        self.head: Optional[tuple[int, int, float, tuple]] = None  # (h, i, y, x)

    def _bonus(self, depth: int) -> float:
        return self.L * self.R * self.delta**depth

    def _head_priority(self) -> float:
        h, _, y, _ = self.head
        return y + 2.0 * self._bonus(h)

    def _append_row(self, node: NodeId, x: tuple, alpha: float, y: float,
                    step_cost: float, certificate: float) -> None:
        self.rows.append(
            TraceRow(
                t=self.t,
                depth=node.depth,
                index=node.index,
                x=x,
                alpha=alpha,
                y=y,
                step_cost=step_cost,
                cum_cost=self.cum_cost,
                rec=self.best_x,
                certificate=certificate,
            )
        )

    def init_root(self) -> None:
        """Query the root representative at accuracy L*R; certificate L*R."""
        root = NodeId(0, 0)
        x_root = self.partition.representative(root)
        if x_root is None:
            raise ValueError("root cell is infeasible: the domain has no scannable point")
        alpha = self._bonus(0)
        cost = self.step_cost(root, alpha)
        self.t = 1
        y = self.observe(1, root, x_root, alpha)
        self.cum_cost = cost
        self.best_lower = y - alpha
        self.best_x = x_root
        self.head = (0, 0, y, x_root)
        self._append_row(root, x_root, alpha, y, cost, self.L * self.R)

    def leaf_nodes(self) -> list[NodeId]:
        """Current leaf set (head included); cells tile a superset of the box."""
        leaves = [NodeId(h, i) for _, h, i, _, _ in self.heap]
        if self.head is not None:
            leaves.append(NodeId(self.head[0], self.head[1]))
        return leaves

    def expand_step(self, eps: float = 0.0, budget: float = math.inf) -> Optional[str]:
        """One iteration of the search; returns "certified", "budget", or None.

        Queries all feasible children of the head (stopping early if a
        certificate reaches eps or the budget would be exceeded), removes
        the head from the leaf set, re-selects it as the priority argmax
        (ties: smaller depth, then smaller index), and rewrites the final
        certificate with the new head.
        """
        h_star, i_star, _, _ = self.head
        head_node = NodeId(h_star, i_star)
        child_alpha = self._bonus(h_star + 1)
        for child in self.partition.children(head_node):
            rep = self.partition.representative(child)
            if rep is None:
                continue
            cost = self.step_cost(child, child_alpha)
            if self.cum_cost + cost > budget:
                return "budget"
            self.t += 1
            y = self.observe(self.t, child, rep, child_alpha)
            self.cum_cost += cost
            lower = y - child_alpha
            if lower > self.best_lower:
                self.best_lower = lower
                self.best_x = rep
            xi = self._head_priority() - self.best_lower
            self._append_row(child, rep, child_alpha, y, cost, xi)
            priority = y + 2.0 * self._bonus(child.depth)
            heapq.heappush(self.heap, (-priority, child.depth, child.index, y, rep))
            if xi <= eps:
                return "certified"
        if not self.heap:
            raise RuntimeError("leaf set exhausted; all cells infeasible below the root")
        _, h_new, i_new, y_new, x_new = heapq.heappop(self.heap)
        self.head = (h_new, i_new, y_new, x_new)
        xi = self._head_priority() - self.best_lower
        self.rows[-1] = self.rows[-1]._replace(certificate=xi)
        if xi <= eps:
            return "certified"
        return None


def run_engine(
    partition: Partition,
    L: float,
    step_cost: StepCostFn,
    observe: ObserveFn,
    eps: float,
    budget: float = math.inf,
    max_depth: int = 40,
) -> tuple[RunOutcome, list[TraceRow]]:
    if eps <= 0.0:
        raise ValueError(f"target eps must be positive, got {eps}")
    if budget <= 0.0:
        raise ValueError(f"budget must be positive, got {budget}")
    engine = Engine(partition, L, step_cost, observe)
    engine.init_root()
    stop_reason = None
    if engine.rows[-1].certificate <= eps:
        stop_reason = "certified"
    while stop_reason is None:
        if engine.head[0] >= max_depth:
            stop_reason = "depth-limit"
            break
        stop_reason = engine.expand_step(eps=eps, budget=budget)
    rows = engine.rows
    last = rows[-1]
    if stop_reason == "certified":
        outcome = RunOutcome(
            sigma=last.cum_cost,
            tau=last.t,
            stop_reason="certified",
            final_xi=last.certificate,
            final_rec=last.rec,
            n_evals=len(rows),
            total_cost=last.cum_cost,
        )
    else:
        outcome = RunOutcome(
            sigma=None,
            tau=None,
            stop_reason=stop_reason,
            final_xi=last.certificate,
            final_rec=last.rec,
            n_evals=len(rows),
            total_cost=last.cum_cost,
        )
    return outcome, rows


def run_search(
    partition: Partition,
    environment: Environment,
    L: float,
    cost=None,
    eps: float = 0.25,
    budget: float = math.inf,
    max_depth: int = 40,
) -> tuple[RunOutcome, list[TraceRow]]:
    """Run the certified search against a bounded-error environment.

    Intended for eps in (0, L*diam); any eps >= L*R certifies immediately
    at the root since the first certificate equals L*R.
    """
    if cost is None:
        cost = ConstantCost()
    return run_engine(
        partition,
        L,
        step_cost=lambda node, alpha: cost(alpha),
        observe=lambda t, node, x, alpha: environment.respond(t, x, alpha),
        eps=eps,
        budget=budget,
        max_depth=max_depth,
    )


def certificate_validity_check(
    rows: list[TraceRow],
    objective: Objective,
    tol: float = 1e-9,
) -> list[int]:
    """Trace rows whose certificate undershoots the true optimization error.

    Returns all t with certificate_t < f_max - f(rec_t) - tol; empty for
    any environment that honors the bounded-error contract for
    ``objective``.
    """
    bad = []
    value_cache: dict[tuple, float] = {}
    for row in rows:
        fx = value_cache.get(row.rec)
        if fx is None:
            fx = objective.value(row.rec)
            value_cache[row.rec] = fx
        gap = objective.f_max - fx
        if row.certificate < gap - tol:
            bad.append(row.t)
    return bad


def trace_columns(dim: int, extra: tuple[str, ...] = ()) -> list[str]:
    cols = ["t", "h", "i"]
    cols += [f"x_{j + 1}" for j in range(dim)]
    cols += ["alpha", "y", "step_cost", "cum_cost"]
    cols += [f"rec_x_{j + 1}" for j in range(dim)]
    cols.append("xi")
    cols.extend(extra)
    return cols


def write_trace_csv(
    path: str,
    rows: list[TraceRow],
    dim: int,
    extra_columns: tuple[str, ...] = (),
    extra_values: Optional[list[tuple]] = None,
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_columns(dim, extra_columns))
        for k, row in enumerate(rows):
            record = [row.t, row.depth, row.index]
            record += [repr(c) for c in row.x]
            record += [repr(row.alpha), repr(row.y), repr(row.step_cost), repr(row.cum_cost)]
            record += [repr(c) for c in row.rec]
            record.append(repr(row.certificate))
            if extra_values is not None:
                record.extend(extra_values[k])
            writer.writerow(record)
