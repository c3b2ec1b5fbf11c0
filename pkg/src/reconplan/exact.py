"""Exact single-drone solvers for small missions.

``solve_exact`` is a bounded-horizon dynamic program over
(remaining crossings, position, observed set, carried set). Each non-base
vertex is in one of three states, so a state's sets are packed into a
base-3 code: 0 = unobserved, 1 = observed, 2 = observed and carried.

``brute_force_enumerate`` is an independent exhaustive search used to check
the dynamic program.
"""
from __future__ import annotations

import numpy as np

from .evaluate import expected_value_single
from .mission import Mission, Plan, validate_mission

MAX_DP_STATES = 60_000_000

UNOBSERVED, OBSERVED, CARRIED = 0, 1, 2
TERMINATE = 0
INFEASIBLE = -1


class CapacityError(RuntimeError):
    """The requested problem is too large for the exact methods."""


def default_horizon(n: int) -> int:
    # an optimal plan never needs more than n^2 - 1 crossings
    return n * n - 1


def dp_state_count(n: int, horizon: int) -> int:
    return n * 3 ** (n - 1) * (horizon + 1)


class _CodeTables:
    """Transition tables over all base-3 codes of the non-base vertices."""

    def __init__(self, m: Mission):
        k = m.n - 1
        self.size = 3**k
        codes = np.arange(self.size)
        self.powers = 3 ** np.arange(k)
        digits = (codes[:, None] // self.powers[None, :]) % 3 if k else np.zeros((1, 0), dtype=int)
        w = m.w[1:]
        self.initial = 0
        self.carried_weight = (digits == CARRIED).astype(float) @ w if k else np.zeros(1)
        self.clear = codes - (digits == CARRIED).astype(int) @ self.powers if k else codes
        # observe[j]: code after arriving at vertex j
        self.observe = [codes]
        for j in range(1, m.n):
            new_digit = CARRIED if m.w[j] > 0 else OBSERVED
            unobserved = digits[:, j - 1] == UNOBSERVED
            self.observe.append(codes + unobserved * new_digit * self.powers[j - 1])


def solve_exact(m: Mission, horizon: int | None = None) -> tuple[Plan, float]:
    """Optimal plan among all plans with at most ``horizon`` crossings.

    Ties prefer terminating over moving, then the lower neighbour id, then
    not sending over sending.
    """
    problem = validate_mission(m)
    if problem is not None:
        raise ValueError(problem)
    n = m.n
    if horizon is None:
        horizon = default_horizon(n)
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    states = dp_state_count(n, horizon)
    if states > MAX_DP_STATES:
        raise CapacityError(f"{states} states exceed the limit of {MAX_DP_STATES}")

    tables = _CodeTables(m)
    size = tables.size
    wc = tables.carried_weight
    value = np.full((n, size), -np.inf)
    value[0] = wc
    # actions[t-1, pos, code]: TERMINATE, INFEASIBLE, or 1 + 2*j + send
    actions = np.full((horizon, n, size), INFEASIBLE, dtype=np.int16)

    for t in range(1, horizon + 1):
        # best continuation after arriving at j, shared by all predecessors
        arrive = []
        arrive_send = []
        for j in range(n):
            nxt = tables.observe[j]
            stay = value[j][nxt]
            after = value[j][tables.clear[nxt]]
            # a failed send still has to be a walk that ends at the base
            sent = np.full(size, -np.inf)
            ok = np.isfinite(after)
            sent[ok] = m.p[j] * (wc[nxt][ok] + after[ok])
            use_send = sent > stay
            arrive.append(np.where(use_send, sent, stay))
            arrive_send.append(use_send)
        new_value = np.full((n, size), -np.inf)
        act = actions[t - 1]
        new_value[0] = wc
        act[0] = TERMINATE
        for pos in range(n):
            for j in m.neighbors(pos):
                cand = m.q[pos, j] * arrive[j]
                better = cand > new_value[pos]
                new_value[pos] = np.where(better, cand, new_value[pos])
                act[pos] = np.where(better, 1 + 2 * j + arrive_send[j], act[pos])
        value = new_value

    plan = _reconstruct(m, tables, actions, horizon)
    return plan, float(value[0, tables.initial])


def _reconstruct(m: Mission, tables: _CodeTables, actions: np.ndarray, horizon: int) -> Plan:
    route, send = [0], [0]
    pos, code = 0, tables.initial
    for t in range(horizon, 0, -1):
        a = int(actions[t - 1, pos, code])
        if a == TERMINATE:
            break
        j, s = divmod(a - 1, 2)
        code = tables.observe[j][code]
        if s:
            code = tables.clear[code]
        route.append(j)
        send.append(s)
        pos = j
    send[-1] = 1
    return Plan(tuple(route), tuple(send))


# ------------------------------------------------------------ oracle

BRUTE_MAX_N = 6
BRUTE_MAX_LEN = 35


def brute_force_enumerate(m: Mission, max_len: int) -> tuple[Plan, float]:
    """Exhaustive search over walks of at most ``max_len`` crossings and their send vectors.

    Two dominance rules keep the search finite in practice without losing an
    optimum: a walk never returns to a vertex it has visited since the last
    event (first observation or transmission), and empty transmissions are
    skipped. A branch is also cut when even delivering all carried and
    unobserved information at the current survival probability cannot beat
    the incumbent.
    """
    if m.n > BRUTE_MAX_N or max_len > BRUTE_MAX_LEN:
        raise CapacityError(f"brute force limited to n <= {BRUTE_MAX_N}, max_len <= {BRUTE_MAX_LEN}")
    problem = validate_mission(m)
    if problem is not None:
        raise ValueError(problem)
    q, p, w = m.q, m.p, m.w
    best_value = -1.0
    best = ((0,), (1,))
    route, send = [0], [0]
    seen = {0}

    def search(since, pending, unobserved, survival, value):
        nonlocal best_value, best
        v = route[-1]
        if v == 0:
            total = value + survival * pending
            if total > best_value:
                best_value = total
                best = (tuple(route), tuple(send[:-1]) + (1,))
        if len(route) > max_len:
            return
        if value + survival * (pending + unobserved) <= best_value:
            return
        for j in m.neighbors(v):
            if j in since:
                continue
            new = j not in seen
            gain = w[j] if new else 0.0
            reach = survival * q[v, j]
            route.append(j)
            if new:
                seen.add(j)
            send.append(0)
            search({j} if new else since | {j}, pending + gain, unobserved - gain, reach, value)
            if pending + gain > 0:
                send[-1] = 1
                delivered = reach * p[j]
                search({j}, 0.0, unobserved - gain, delivered, value + delivered * (pending + gain))
            send.pop()
            if new:
                seen.discard(j)
            route.pop()

    search({0}, 0.0, float(w.sum()), 1.0, 0.0)
    plan = Plan(*best)
    return plan, expected_value_single(m, plan).expected_value
