"""Closed-form evaluation of plans.

Two independent single-drone forms are provided: one sums over the
transmissions of the plan, the other sums ``w_v * P(D_v)`` over vertices,
where ``D_v`` is the event that the information of ``v`` reaches the base.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence, Union

import numpy as np

from .mission import Mission, MultiPlan, Plan, validate_plan


class PlanError(ValueError):
    """Raised when a plan violates its invariants for the given mission."""


@dataclass(frozen=True)
class EvalBreakdown:
    expected_value: float
    survival: float
    per_vertex_delivery: np.ndarray


def _check(m: Mission, plan: Plan) -> None:
    problem = validate_plan(m, plan)
    if problem is not None:
        raise PlanError(problem)


def survival_probability(m: Mission, plan: Plan) -> float:
    _check(m, plan)
    route, send = plan.route, plan.send
    prob = 1.0
    for a, b in zip(route, route[1:]):
        prob *= m.q[a, b]
    for v, s in zip(route, send):
        if s:
            prob *= m.p[v]
    return float(prob)


def transmission_value(m: Mission, plan: Plan) -> float:
    """Expected information summed transmission by transmission.

    Each transmission at step ``s`` delivers the weight first observed since
    the previous transmission, scaled by the probability of surviving every
    crossing up to ``s`` and every transmission up to and including ``s``.
    """
    _check(m, plan)
    route, send = plan.route, plan.send
    seen = set()
    crossing = 1.0
    sends = 1.0
    pending = 0.0
    total = 0.0
    for j, v in enumerate(route):
        if j:
            crossing *= m.q[route[j - 1], v]
        if v not in seen:
            seen.add(v)
            pending += m.w[v]
        if send[j]:
            sends *= m.p[v]
            total += crossing * sends * pending
            pending = 0.0
    return float(total)


def delivery_probabilities(m: Mission, plan: Plan) -> np.ndarray:
    """Probability that each vertex's information is transmitted; 0 for unvisited vertices."""
    _check(m, plan)
    return _deliveries(m, plan.route, plan.send)


def _deliveries(m: Mission, route: Sequence[int], send: Sequence[int]) -> np.ndarray:
    n = m.n
    first = {}
    for j, v in enumerate(route):
        first.setdefault(v, j)
    # survival up to and including the send at each step
    surv = np.empty(len(route))
    prob = 1.0
    for j, v in enumerate(route):
        if j:
            prob *= m.q[route[j - 1], v]
        if send[j]:
            prob *= m.p[v]
        surv[j] = prob
    next_send = np.empty(len(route), dtype=int)
    nxt = -1
    for j in range(len(route) - 1, -1, -1):
        if send[j]:
            nxt = j
        next_send[j] = nxt
    out = np.zeros(n)
    for v, f in first.items():
        s = next_send[f]
        if s >= 0:
            out[v] = surv[s]
    return out


def expected_value_single(m: Mission, plan: Plan) -> EvalBreakdown:
    value = transmission_value(m, plan)
    return EvalBreakdown(
        expected_value=value,
        survival=survival_probability(m, plan),
        per_vertex_delivery=_deliveries(m, plan.route, plan.send),
    )


def union_probability(probs: np.ndarray, method: str = "complement") -> np.ndarray:
    """P(at least one event) for independent events, per column.

    ``probs`` has one row per drone. ``"inclusion_exclusion"`` evaluates the
    signed sum over all non-empty drone subsets; ``"complement"`` uses
    ``1 - prod(1 - P)``.
    """
    probs = np.atleast_2d(probs)
    if method == "complement":
        return 1.0 - np.prod(1.0 - probs, axis=0)
    if method == "inclusion_exclusion":
        total = np.zeros(probs.shape[1])
        ell = probs.shape[0]
        for size in range(1, ell + 1):
            sign = 1.0 if size % 2 else -1.0
            for subset in combinations(range(ell), size):
                total += sign * np.prod(probs[list(subset)], axis=0)
        return total
    raise ValueError(f"unknown method {method!r}")


def expected_value_multi(
    m: Mission, plans: Union[MultiPlan, Sequence[Plan]], method: str = "complement"
) -> float:
    plans = list(plans)
    if not plans:
        raise PlanError("at least one drone is required")
    if len(plans) == 1:
        return transmission_value(m, plans[0])
    deliveries = np.array([delivery_probabilities(m, plan) for plan in plans])
    return float(m.w @ union_probability(deliveries, method))
