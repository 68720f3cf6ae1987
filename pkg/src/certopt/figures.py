"""Matplotlib rendering of the report outputs, saved next to the CSV/JSON."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_sweep_figure(records: list[dict], path: str) -> None:
    """Log-log plot of realized cost vs target error, with a slope fit."""
    pts = [(r["eps"], r["sigma"]) for r in records if r.get("sigma") is not None]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if pts:
        eps = np.array([p[0] for p in pts])
        sigma = np.array([p[1] for p in pts])
        order = np.argsort(eps)
        eps, sigma = eps[order], sigma[order]
        ax.loglog(eps, sigma, "o-", base=2, label="realized cost")
        if len(eps) >= 2 and np.all(sigma > 0):
            x = np.log2(1.0 / eps)
            slope, intercept = np.polyfit(x, np.log2(sigma), 1)
            fit = 2.0 ** (intercept + slope * x)
            ax.loglog(eps, fit, "--", base=2, label=f"slope {slope:.2f}")
        ax.legend()
    ax.set_xlabel("target error eps")
    ax.set_ylabel("cost to certify")
    ax.invert_xaxis()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_complexity_figure(report: dict, path: str) -> None:
    """Per-layer packing-times-cost terms, base term, and bound predictions."""
    per_layer = report.get("per_layer", [])
    labels = ["base"] + [f"k={row['k']}" for row in per_layer]
    terms = [report.get("base_term", 0.0)] + [row["cost_term"] for row in per_layer]
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.bar(labels, terms, color="tab:blue", alpha=0.8)
    if any(t > 0 for t in terms):
        ax.set_yscale("log")
    for key, color in (("S", "tab:green"), ("upper_pred", "tab:red"), ("lower_pred", "tab:orange")):
        val = report.get(key)
        if val and val > 0 and math.isfinite(val):
            ax.axhline(val, color=color, linestyle="--", linewidth=1, label=key)
    ax.set_ylabel("cost contribution")
    ax.set_xlabel("optimality layer")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_certificate_figure(traces: dict[str, list], path: str) -> None:
    """Certificate decay vs cumulative cost, one curve per run."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for label, rows in traces.items():
        cum = [row.cum_cost for row in rows]
        xi = [row.certificate for row in rows]
        ax.plot(cum, xi, label=label, linewidth=1)
    ax.set_xlabel("cumulative cost")
    ax.set_ylabel("certificate")
    ax.set_yscale("log")
    if np.any([len(rows) for rows in traces.values()]):
        ax.set_xscale("log")
    if len(traces) <= 10:
        ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
