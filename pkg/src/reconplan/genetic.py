"""Genetic algorithm for single- and multi-drone planning.

An individual holds one (route, send) pair per drone. Each generation is
ranked by expected value; the elite fraction is copied unchanged, the worst
fraction is excluded from parenthood, and the rest of the next generation is
filled with crossover children that may receive at most one mutation.

Randomness comes from a single ``random.Random`` stream seeded by
``GaConfig.seed``. Per generation it is consumed in this order: for each
child, parent draws (and crossover choices), then the mutation trials and the
chosen mutation's draws.
"""
from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import networkx as nx
import numpy as np

from .evaluate import expected_value_multi
from .mission import Mission, MultiPlan, Plan

IMPROVE_TOL = 1e-12
MAX_PARENT_DRAWS = 50


@dataclass(frozen=True)
class GaConfig:
    population: int = 1000
    generations: int = 150
    elite_fraction: float = 0.10
    discard_fraction: float = 0.075
    l_min: Optional[int] = None  # default n - 1
    l_max: Optional[int] = None  # default n + 100
    p_send_init: float = 1 / 3
    p_added_walk: Optional[float] = None  # default 0.01, or 2 / population with several drones
    p_vertex_flip: float = 0.2
    p_send_flip: float = 0.1
    p_reversed: float = 0.2
    drones: int = 1
    seed: int = 0
    return_path_metric: str = "hops"  # or "survival": most reliable path, weights -ln q

    def resolved(self, n: int) -> "GaConfig":
        """Fill in the instance-dependent defaults."""
        cfg = self
        if cfg.l_min is None:
            cfg = replace(cfg, l_min=max(n - 1, 0))
        if cfg.l_max is None:
            cfg = replace(cfg, l_max=n + 100)
        if cfg.p_added_walk is None:
            cfg = replace(cfg, p_added_walk=0.01 if cfg.drones == 1 else 2 / cfg.population)
        return cfg

    def validate(self) -> None:
        if self.population < 2 or self.generations < 0 or self.drones < 1:
            raise ValueError("population >= 2, generations >= 0 and drones >= 1 are required")
        if not (0 <= self.elite_fraction and 0 <= self.discard_fraction
                and self.elite_fraction + self.discard_fraction < 1):
            raise ValueError("elite and discard fractions must be non-negative and sum below 1")
        probs = [self.p_send_init, self.p_vertex_flip, self.p_send_flip, self.p_reversed]
        if self.p_added_walk is not None:
            probs.append(self.p_added_walk)
        if any(not 0 <= x <= 1 for x in probs):
            raise ValueError("probabilities must lie in [0, 1]")
        if self.l_min is not None and self.l_max is not None and not 0 <= self.l_min <= self.l_max:
            raise ValueError("route length bounds need 0 <= l_min <= l_max")
        if self.return_path_metric not in ("survival", "hops"):
            raise ValueError(f"unknown return path metric {self.return_path_metric!r}")


# mutation presets matching the ablation grid
ABLATIONS = {
    "none": dict(p_added_walk=0.0, p_vertex_flip=0.0, p_send_flip=0.0),
    "send_flip": dict(p_added_walk=0.0, p_vertex_flip=0.0),
    "vertex_flip": dict(p_added_walk=0.0, p_send_flip=0.0),
    "added_walk": dict(p_vertex_flip=0.0, p_send_flip=0.0),
    "combination": dict(),
}


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best: float
    mean: float
    best_plan: MultiPlan


@dataclass
class EvolutionTrace:
    records: list = field(default_factory=list)

    def best_values(self) -> list[float]:
        return [r.best for r in self.records]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["generation", "best", "mean"])
            for r in self.records:
                out.writerow([r.generation, repr(r.best), repr(r.mean)])


@dataclass
class GaResult:
    best: MultiPlan
    value: float
    trace: EvolutionTrace


# ------------------------------------------------------------------ context

class _Context:
    """Per-mission lookup tables shared by all operators."""

    def __init__(self, m: Mission, metric: str = "hops"):
        n = self.n = m.n
        self.mission = m
        step = m.q.copy()
        np.fill_diagonal(step, 1.0)
        self.step = step.tolist()
        self.p = m.p.tolist()
        self.w = m.w.tolist()
        self.p_arr = m.p
        self.w_arr = m.w
        self.q_arr = step
        self.neighbors = [list(m.neighbors(i)) for i in range(n)]
        nbr_sets = [set(nb) for nb in self.neighbors]
        self.common = [[sorted(nbr_sets[a] & nbr_sets[b]) for b in range(n)] for a in range(n)]
        g = m.graph()
        if metric == "survival":
            for a, b, data in g.edges(data=True):
                data["cost"] = -math.log(data["q"])
            paths = dict(nx.all_pairs_dijkstra_path(g, weight="cost"))
        else:
            paths = dict(nx.all_pairs_shortest_path(g))
        self.paths = [[paths[a][b] for b in range(n)] for a in range(n)]

    # single drone value, transmission by transmission
    def value_single(self, route, send) -> float:
        step, p, w = self.step, self.p, self.w
        seen = [False] * self.n
        prob = 1.0
        total = 0.0
        pending = 0.0
        prev = 0
        for v, s in zip(route, send):
            prob *= step[prev][v]
            prev = v
            if not seen[v]:
                seen[v] = True
                pending += w[v]
            if s:
                prob *= p[v]
                total += prob * pending
                pending = 0.0
        return total

    def deliveries(self, route, send) -> list[float]:
        step, p = self.step, self.p
        d = [0.0] * self.n
        seen = [False] * self.n
        pending = []
        prob = 1.0
        prev = 0
        for v, s in zip(route, send):
            prob *= step[prev][v]
            prev = v
            if not seen[v]:
                seen[v] = True
                pending.append(v)
            if s:
                prob *= p[v]
                for u in pending:
                    d[u] = prob
                pending.clear()
        return d

    def value_multi(self, routes, sends) -> float:
        if len(routes) == 1:
            return self.value_single(routes[0], sends[0])
        miss = [1.0] * self.n
        for route, send in zip(routes, sends):
            for v, dv in enumerate(self.deliveries(route, send)):
                miss[v] *= 1.0 - dv
        return sum(wv * (1.0 - mv) for wv, mv in zip(self.w, miss))

    def flip_values(self, route, send, miss_others=None) -> np.ndarray:
        """Objective after flipping each interior send bit, one row per position 1..k-2.

        ``miss_others[v]`` is the probability that no other drone delivers
        ``v``; ``None`` means a single drone.
        """
        # With the other drones fixed the union objective is linear in this
        # drone's deliveries: const + sum_v w_v * miss_v * D_v.
        if miss_others is None:
            weights, const = self.w_arr, 0.0
        else:
            miss = np.asarray(miss_others)
            weights, const = self.w_arr * miss, float(self.w_arr @ (1.0 - miss))
        k = len(route)
        r = np.asarray(route)
        s = np.asarray(send, dtype=bool)
        first_pos, first_vtx = _first_visits(route)
        fw = np.zeros(k)
        fw[first_pos] = weights[first_vtx]
        F = np.cumsum(fw)
        C = np.empty(k)
        C[0] = 1.0
        C[1:] = np.cumprod(self.q_arr[r[:-1], r[1:]])
        pv = self.p_arr[r]

        # sends at positions sig[0] < ... < sig[m-1] = k-1
        sig = np.flatnonzero(s)
        m = len(sig)
        F_prev = np.concatenate(([0.0], F[sig[:-1]]))
        W = F[sig] - F_prev
        P = np.cumprod(pv[sig])
        P_prev = np.concatenate(([1.0], P[:-1]))
        term = C[sig] * P * W
        head = np.concatenate(([0.0], np.cumsum(term)))
        # tail[i]: value of sends i.. with their own transmission factors only
        tail = np.zeros(m + 2)
        ps, cs = pv[sig].tolist(), (C[sig] * W).tolist()
        acc = 0.0
        for i in range(m - 1, -1, -1):
            acc = ps[i] * (cs[i] + acc)
            tail[i] = acc

        out = np.empty(k - 2)
        pos = np.arange(1, k - 1)
        add = pos[~s[1:-1]]
        i = np.searchsorted(sig, add)
        nxt = sig[i]
        out[add - 1] = head[i] + P_prev[i] * pv[add] * (
            C[add] * (F[add] - F_prev[i])
            + pv[nxt] * (C[nxt] * (F[nxt] - F[add]) + tail[i + 1])
        )
        drop = pos[s[1:-1]]
        i = np.searchsorted(sig, drop)
        nxt = sig[i + 1]
        out[drop - 1] = head[i] + P_prev[i] * pv[nxt] * (C[nxt] * (W[i] + W[i + 1]) + tail[i + 2])
        return const + out


def _first_visits(route):
    seen = {}
    for j, v in enumerate(route):
        if v not in seen:
            seen[v] = j
    verts = np.fromiter(seen.keys(), dtype=int)
    pos = np.fromiter(seen.values(), dtype=int)
    return pos, verts


def _as_rng(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    return random.Random(rng)


# ---------------------------------------------------------------- operators

def _random_walk(ctx: _Context, rng: random.Random, start: int, l_min: int, l_max: int) -> list[int]:
    length = rng.randint(l_min, l_max)
    walk = [start]
    v = start
    for _ in range(length):
        nb = ctx.neighbors[v]
        v = nb[rng.randrange(len(nb))]
        walk.append(v)
    return walk


def _random_route(ctx: _Context, rng: random.Random, l_min: int, l_max: int) -> list[int]:
    walk = _random_walk(ctx, rng, 0, l_min, l_max)
    if walk[-1] != 0:
        walk += ctx.paths[walk[-1]][0][1:]
    return walk


def random_walk_route(m: Mission, rng, l_min: int, l_max: int, metric: str = "hops") -> list[int]:
    """Random walk from the base of uniformly drawn length, closed by a shortest path home.

    ``metric`` is ``"hops"`` (fewest crossings) or ``"survival"`` (most reliable path).
    """
    return _random_route(_Context(m, metric), _as_rng(rng), l_min, l_max)


def _initial_send(rng: random.Random, k: int, pi: float) -> list[int]:
    if k == 1:
        return [1]
    return [0] + [1 if rng.random() < pi else 0 for _ in range(k - 2)] + [1]


def _local_search(ctx: _Context, routes, sends) -> tuple[list, float, int]:
    """Best-improvement hill climbing over single send-bit flips of all drones."""
    sends = [list(s) for s in sends]
    value = ctx.value_multi(routes, sends)
    iterations = 0
    while True:
        best_gain, best_move = IMPROVE_TOL, None
        if len(routes) == 1:
            deliveries = None
        else:
            deliveries = [ctx.deliveries(r, s) for r, s in zip(routes, sends)]
        for d, route in enumerate(routes):
            if len(route) < 3:
                continue
            miss = None
            if deliveries is not None:
                miss = np.ones(ctx.n)
                for other, dv in enumerate(deliveries):
                    if other != d:
                        miss *= 1.0 - np.asarray(dv)
            vals = ctx.flip_values(route, sends[d], miss)
            j = int(np.argmax(vals))
            if vals[j] - value > best_gain:
                best_gain, best_move = vals[j] - value, (d, j + 1)
        if best_move is None:
            return sends, value, iterations
        d, pos = best_move
        sends[d][pos] ^= 1
        value = ctx.value_multi(routes, sends)
        iterations += 1


def local_search_send(
    m: Mission, routes: Sequence[Sequence[int]], rng, pi: float = 1 / 3,
    initial: Optional[Sequence[Sequence[int]]] = None,
) -> tuple[list[tuple[int, ...]], float, int]:
    """Send strategies at a local maximum for fixed routes.

    Starts from ``initial`` or from random sends (each interior bit set with
    probability ``pi``) and repeatedly applies the best strictly improving
    single-bit flip across all drones; ties go to the lowest (drone, position).
    Returns the sends, their objective and the number of flips applied.
    """
    ctx = _Context(m)
    rng = _as_rng(rng)
    routes = [list(r) for r in routes]
    if initial is None:
        initial = [_initial_send(rng, len(r), pi) for r in routes]
    sends, value, iterations = _local_search(ctx, routes, initial)
    return [tuple(s) for s in sends], value, iterations


def _cross(a_route, a_send, b_route, b_send, rng: random.Random):
    common = sorted(set(a_route[1:-1]) & set(b_route[1:-1]))
    if not common:
        return None
    v = common[rng.randrange(len(common))]
    ia = a_route.index(v, 1)
    ib = b_route.index(v, 1)
    return a_route[:ia] + b_route[ib:], a_send[:ia] + b_send[ib:]


def crossover(parent_a: Plan, parent_b: Plan, rng) -> Optional[Plan]:
    """Splice ``a`` up to its first interior visit of a shared vertex onto ``b`` from its first.

    Returns ``None`` when the parents share no interior vertex.
    """
    child = _cross(list(parent_a.route), list(parent_a.send),
                   list(parent_b.route), list(parent_b.send), _as_rng(rng))
    return None if child is None else Plan(tuple(child[0]), tuple(child[1]))


def _added_walk(ctx, rng, cfg, route):
    k = len(route)
    i = rng.randrange(max(k - 1, 1))
    nxt = route[i + 1] if i + 1 < k else 0
    walk = _random_walk(ctx, rng, route[i], cfg.l_min, cfg.l_max)
    return route[:i + 1] + walk[1:] + ctx.paths[walk[-1]][nxt][1:] + route[i + 2:]


def _vertex_flip(ctx, rng, route):
    k = len(route)
    if k < 3:
        return route
    j = rng.randrange(1, k - 1)
    options = [c for c in ctx.common[route[j - 1]][route[j + 1]] if c != route[j]]
    if not options:
        return route
    out = list(route)
    out[j] = options[rng.randrange(len(options))]
    return out


def _send_flip(rng, send):
    k = len(send)
    if k < 3:
        return send
    j = rng.randrange(1, k - 1)
    out = list(send)
    out[j] ^= 1
    return out


def _reverse(route, send):
    route = route[::-1]
    send = send[::-1]
    if len(send) > 1:
        send[0], send[-1] = 0, 1
    return route, send


def _mutate(ctx, rng, cfg, routes, sends):
    """Apply at most one mutation; returns (routes, sends, needs_local_search, changed)."""
    multi = len(routes) > 1
    if rng.random() < cfg.p_added_walk:
        d = rng.randrange(len(routes))
        routes = list(routes)
        sends = list(sends)
        routes[d] = _added_walk(ctx, rng, cfg, routes[d])
        sends[d] = _initial_send(rng, len(routes[d]), cfg.p_send_init)
        return routes, sends, True, True
    if multi and rng.random() < cfg.p_reversed:
        d = rng.randrange(len(routes))
        routes = list(routes)
        sends = list(sends)
        routes[d], sends[d] = _reverse(routes[d], sends[d])
        return routes, sends, False, True
    if rng.random() < cfg.p_vertex_flip:
        d = rng.randrange(len(routes))
        new = _vertex_flip(ctx, rng, routes[d])
        if new is routes[d]:
            return routes, sends, False, False
        routes = list(routes)
        routes[d] = new
        return routes, sends, False, True
    if rng.random() < cfg.p_send_flip:
        d = rng.randrange(len(routes))
        new = _send_flip(rng, sends[d])
        if new is sends[d]:
            return routes, sends, False, False
        sends = list(sends)
        sends[d] = new
        return routes, sends, False, True
    return routes, sends, False, False


def mutate(plan: Plan, m: Mission, rng, config: GaConfig) -> Plan:
    """At most one of added walk, vertex flip and send flip, tried in that order."""
    cfg = config.resolved(m.n)
    ctx = _Context(m, cfg.return_path_metric)
    rng = _as_rng(rng)
    routes, sends, search, _ = _mutate(ctx, rng, cfg, [list(plan.route)], [list(plan.send)])
    if search:
        sends, _, _ = _local_search(ctx, routes, sends)
    return Plan(tuple(routes[0]), tuple(sends[0]))


# ---------------------------------------------------------------- main loop

class _Individual:
    __slots__ = ("routes", "sends", "value")

    def __init__(self, routes, sends, value):
        self.routes, self.sends, self.value = routes, sends, value

    def to_multiplan(self) -> MultiPlan:
        return MultiPlan(tuple(Plan(tuple(r), tuple(s)) for r, s in zip(self.routes, self.sends)))


def _fresh(ctx, rng, cfg) -> _Individual:
    routes = [_random_route(ctx, rng, cfg.l_min, cfg.l_max) for _ in range(cfg.drones)]
    sends = [_initial_send(rng, len(r), cfg.p_send_init) for r in routes]
    sends, value, _ = _local_search(ctx, routes, sends)
    return _Individual(routes, sends, value)


def _child(ctx, rng, cfg, pool):
    """Crossover child as (routes, sends, value), ``value`` set when it repeats a parent."""
    if cfg.drones == 1:
        for _ in range(MAX_PARENT_DRAWS):
            a = pool[rng.randrange(len(pool))]
            b = pool[rng.randrange(len(pool))]
            ar, asd, br, bsd = a.routes[0], a.sends[0], b.routes[0], b.sends[0]
            child = _cross(ar, asd, br, bsd, rng)
            if child is None:
                continue
            route, send = child
            value = None
            if route == br and send == bsd:
                value = b.value
            elif route == ar and send == asd:
                value = a.value
            return [route], [send], value
        return None
    a = pool[rng.randrange(len(pool))]
    b = pool[rng.randrange(len(pool))]
    order = list(range(cfg.drones))
    rng.shuffle(order)
    routes, sends = [], []
    for d in range(cfg.drones):
        e = order[d]
        child = _cross(a.routes[d], a.sends[d], b.routes[e], b.sends[e], rng)
        if child is None:
            child = (a.routes[d], a.sends[d])
        routes.append(child[0])
        sends.append(child[1])
    same_a = all(r == ar and s == asd for r, s, ar, asd in zip(routes, sends, a.routes, a.sends))
    return routes, sends, a.value if same_a else None


def run_ga(m: Mission, config: GaConfig = GaConfig()) -> GaResult:
    """Evolve plans for ``config.drones`` drones; deterministic for a fixed seed."""
    config.validate()
    cfg = config.resolved(m.n)
    cfg.validate()
    ctx = _Context(m, cfg.return_path_metric)
    rng = random.Random(cfg.seed)

    population = [_fresh(ctx, rng, cfg) for _ in range(cfg.population)]
    n_elite = int(round(cfg.elite_fraction * cfg.population))
    n_keep = cfg.population - int(round(cfg.discard_fraction * cfg.population))
    trace = EvolutionTrace()

    def rank_and_record(generation):
        population.sort(key=lambda ind: -ind.value)
        mean = sum(ind.value for ind in population) / len(population)
        trace.records.append(GenerationRecord(generation, population[0].value, mean,
                                              population[0].to_multiplan()))

    rank_and_record(0)
    best = population[0]
    for generation in range(1, cfg.generations + 1):
        pool = population[:n_keep]
        nxt = population[:n_elite]
        while len(nxt) < cfg.population:
            child = _child(ctx, rng, cfg, pool)
            if child is None:
                nxt.append(_fresh(ctx, rng, cfg))
                continue
            routes, sends, known = child
            routes, sends, search, changed = _mutate(ctx, rng, cfg, routes, sends)
            if search:
                sends, value, _ = _local_search(ctx, routes, sends)
            elif known is not None and not changed:
                value = known
            else:
                value = ctx.value_multi(routes, sends)
            nxt.append(_Individual(routes, sends, value))
        population = nxt
        rank_and_record(generation)
        if population[0].value > best.value:
            best = population[0]

    plan = best.to_multiplan()
    return GaResult(best=plan, value=expected_value_multi(m, plan), trace=trace)


def success_rate(values: Sequence[float], reference: float, tol: float = 1e-6) -> int:
    """Number of runs reaching ``reference`` within ``tol``."""
    return sum(v >= reference - tol for v in values)
