"""Evaluation cost functions c(alpha), nonincreasing in the accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class ConstantCost:
    kind = "constant"
    c0: float = 1.0

    def __call__(self, alpha: float) -> float:
        return self.c0


@dataclass(frozen=True)
class PowerLawCost:
    """c(alpha) = c0 * alpha^(-p), the usual fidelity-cost family."""

    p: float
    c0: float = 1.0
    kind = "power-law"

    def __call__(self, alpha: float) -> float:
        return self.c0 * alpha ** (-self.p)


class TabulatedCost:
    """Right-continuous step cost from (alpha, cost) breakpoints.

    c(alpha) = cost of the largest breakpoint alpha_j <= alpha; queries
    below the smallest breakpoint pay the most expensive entry.
    """

    kind = "tabulated"

    def __init__(self, table: Sequence[tuple[float, float]]):
        rows = sorted(((float(a), float(c)) for a, c in table), reverse=True)
        if not rows:
            raise ValueError("tabulated cost needs at least one (alpha, cost) row")
        for (a1, c1), (a2, c2) in zip(rows, rows[1:]):
            if c2 < c1:
                raise ValueError("tabulated cost must be nonincreasing in alpha")
        if any(c < 0 for _, c in rows):
            raise ValueError("costs must be nonnegative")
        self.rows = rows

    def __call__(self, alpha: float) -> float:
        for a, c in self.rows:
            if alpha >= a:
                return c
        return self.rows[-1][1]

    def __repr__(self):
        return f"TabulatedCost({self.rows})"


@dataclass(frozen=True)
class SamplingCost:
    """Implied cost of mini-batch sampling at accuracy alpha.

    ceil((2v / alpha^2) * ln(2 (h+1)(h+2) K^h / gamma)) with the real-valued
    depth h = ln(LR/alpha) / ln(1/delta).  Defined for 0 < alpha <= LR.
    """

    variance: float
    gamma: float
    arity: int
    L: float
    R: float
    delta: float
    kind = "sampling"

    def __call__(self, alpha: float) -> int:
        LR = self.L * self.R
        if alpha > LR * (1 + 1e-12) or alpha <= 0.0:
            raise ValueError(f"sampling cost needs 0 < alpha <= LR, got {alpha}")
        h = max(math.log(LR / alpha) / math.log(1.0 / self.delta), 0.0)
        log_term = (
            math.log(2.0 * (h + 1.0) * (h + 2.0) / self.gamma)
            + h * math.log(self.arity)
        )
        return max(1, math.ceil(2.0 * self.variance / alpha**2 * log_term))


def build_cost(kind: str, **kwargs):
    if kind == "constant":
        return ConstantCost(c0=float(kwargs.get("c0", 1.0)))
    if kind == "power-law":
        return PowerLawCost(p=float(kwargs["p"]), c0=float(kwargs.get("c0", 1.0)))
    if kind == "tabulated":
        return TabulatedCost(kwargs["table"])
    raise ValueError(f"unknown cost kind {kind!r}")
