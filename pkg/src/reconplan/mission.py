"""Mission instances, plans, file formats and special instance generators.

A mission is stored in the matrix form used throughout the package: the
diagonal holds transmission probabilities ``p`` and the off-diagonal entries
hold crossing probabilities ``q`` (0 means "no edge"). Vertex 0 is the base.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

import networkx as nx
import numpy as np

SYMMETRY_TOL = 1e-12


class MissionError(ValueError):
    """Raised when a mission or plan cannot be built or loaded."""


@dataclass(frozen=True, eq=False)
class Mission:
    q: np.ndarray
    p: np.ndarray
    w: np.ndarray
    _neighbors: tuple = field(init=False, repr=False)

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        p = np.array(self.p, dtype=float)
        w = np.array(self.w, dtype=float)
        n = len(p)
        if q.shape != (n, n) or w.shape != (n,) or n < 1:
            raise MissionError(f"inconsistent shapes q={q.shape} p={p.shape} w={w.shape}")
        for arr in (q, p, w):
            arr.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "w", w)
        nbrs = tuple(tuple(int(j) for j in np.flatnonzero(q[i] > 0) if j != i) for i in range(n))
        object.__setattr__(self, "_neighbors", nbrs)

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def edges(self) -> dict[tuple[int, int], float]:
        """Unordered edges ``(i, j)`` with ``i < j`` mapped to their crossing probability."""
        n = self.n
        return {(i, j): float(self.q[i, j]) for i in range(n) for j in range(i + 1, n) if self.q[i, j] > 0}

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def has_edge(self, i: int, j: int) -> bool:
        return i != j and self.q[i, j] > 0

    @property
    def total_weight(self) -> float:
        return float(self.w.sum())

    def matrix(self) -> np.ndarray:
        mat = self.q.copy()
        np.fill_diagonal(mat, self.p)
        return mat

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        for (i, j), qij in self.edges.items():
            g.add_edge(i, j, q=qij)
        return g

    @classmethod
    def from_matrix(cls, matrix, w) -> "Mission":
        mat = np.array(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise MissionError(f"matrix must be square, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.T), initial=0.0) > SYMMETRY_TOL:
            raise MissionError("matrix is not symmetric")
        p = np.diag(mat).copy()
        q = mat.copy()
        np.fill_diagonal(q, 0.0)
        return cls(q=q, p=p, w=np.asarray(w, dtype=float))

    @classmethod
    def from_edges(cls, n: int, edges: dict, p: Sequence[float], w: Sequence[float]) -> "Mission":
        """Build from ``{(i, j): q_ij}``; parallel edges and self-loops are rejected."""
        q = np.zeros((n, n))
        for (i, j), qij in edges.items():
            if i == j:
                raise MissionError(f"self-loop at vertex {i}")
            if q[i, j] != 0:
                raise MissionError(f"parallel edge {{{i},{j}}}")
            q[i, j] = q[j, i] = qij
        return cls(q=q, p=np.asarray(p, dtype=float), w=np.asarray(w, dtype=float))


@dataclass(frozen=True)
class Plan:
    route: tuple[int, ...]
    send: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(int(v) for v in self.route))
        object.__setattr__(self, "send", tuple(int(b) for b in self.send))

    def __len__(self) -> int:
        return len(self.route)

    @property
    def crossings(self) -> int:
        return max(len(self.route) - 1, 0)

    def to_dict(self) -> dict:
        return {"route": list(self.route), "send": list(self.send)}


@dataclass(frozen=True)
class MultiPlan:
    plans: tuple[Plan, ...]

    def __post_init__(self):
        object.__setattr__(self, "plans", tuple(self.plans))

    def __iter__(self) -> Iterator[Plan]:
        return iter(self.plans)

    def __len__(self) -> int:
        return len(self.plans)

    def __getitem__(self, i: int) -> Plan:
        return self.plans[i]


def validate_mission(m: Mission) -> Optional[str]:
    """Return the first violated mission invariant, or ``None`` when valid."""
    if np.any((m.p < 0) | (m.p > 1)):
        return "transmission probabilities must lie in [0, 1]"
    if np.any((m.q < 0) | (m.q > 1)):
        return "crossing probabilities must lie in [0, 1]"
    if np.any(m.w < 0) or not np.all(np.isfinite(m.w)):
        return "information values must be finite and non-negative"
    if m.p[0] != 1.0:
        return "base transmission probability must be 1"
    if m.w[0] != 0.0:
        return "base information value must be 0"
    if np.max(np.abs(m.q - m.q.T), initial=0.0) > SYMMETRY_TOL:
        return "crossing probabilities must be symmetric"
    if np.any(np.diag(m.q) != 0):
        return "self-loops are not allowed"
    if not nx.is_connected(m.graph()):
        return "graph not connected"
    return None


def validate_plan(m: Mission, plan: Plan) -> Optional[str]:
    """Return the first violated plan invariant, or ``None``. Repeated vertices are legal."""
    route, send = plan.route, plan.send
    if not route:
        return "route must not be empty"
    if len(send) != len(route):
        return "route and send must have equal length"
    if any(v < 0 or v >= m.n for v in route):
        return "route contains an unknown vertex"
    if route[0] != 0 or route[-1] != 0:
        return "route must start and end at the base"
    if any(b not in (0, 1) for b in send):
        return "send entries must be 0 or 1"
    for a, b in zip(route, route[1:]):
        if not m.has_edge(a, b):
            return f"no edge between {a} and {b}"
    if send[-1] != 1:
        return "final send must be 1"
    if len(route) > 1 and send[0] != 0:
        return "first send must be 0"
    return None


def make_path_instance(n: int) -> Mission:
    """Path 0-1-...-(n-1) with q = 1/sqrt(n), sends only possible at the base."""
    if n < 2:
        raise MissionError("path instance needs n >= 2")
    qv = 1.0 / math.sqrt(n)
    edges = {(i, i + 1): qv for i in range(n - 1)}
    p = [1.0] + [0.0] * (n - 1)
    w = [0.0] + [1.0] * (n - 1)
    return Mission.from_edges(n, edges, p, w)


def hardness_threshold(q: float, n: int) -> float:
    return (q - q**n) / (1 - q)


def make_hardness_instance(g: Union[nx.Graph, Iterable[tuple[int, int]]], q: float) -> tuple[Mission, float]:
    """Hamiltonian-path reduction: uniform crossing probability ``q``, free sends, unit weights.

    Returns the mission and the threshold ``r`` such that the optimum reaches
    ``r`` exactly when ``g`` has a Hamiltonian path starting at vertex 0.
    """
    if not 0 < q < 1:
        raise MissionError("q must lie strictly between 0 and 1")
    if not isinstance(g, nx.Graph):
        g = nx.Graph(list(g))
    if 0 not in g:
        raise MissionError("graph must contain vertex 0")
    n = g.number_of_nodes()
    if set(g.nodes) != set(range(n)):
        raise MissionError("vertices must be labelled 0..n-1")
    edges = {}
    for i, j in g.edges:
        if i == j:
            raise MissionError(f"self-loop at vertex {i}")
        edges[(min(i, j), max(i, j))] = q
    w = [0.0] + [1.0] * (n - 1)
    return Mission.from_edges(n, edges, [1.0] * n, w), hardness_threshold(q, n)


# ---------------------------------------------------------------- file formats

def mission_to_dict(m: Mission) -> dict:
    return {"n": m.n, "matrix": m.matrix().tolist(), "w": m.w.tolist()}


def mission_from_dict(data: dict) -> Mission:
    try:
        n = int(data["n"])
        matrix, w = data["matrix"], data["w"]
    except (KeyError, TypeError) as exc:
        raise MissionError(f"mission file missing field: {exc}") from exc
    if len(matrix) != n or any(len(row) != n for row in matrix) or len(w) != n:
        raise MissionError("mission dimensions do not match n")
    return Mission.from_matrix(matrix, w)


def load_mission(path: Union[str, Path]) -> Mission:
    return mission_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_mission(m: Mission, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(mission_to_dict(m), indent=1) + "\n", encoding="utf-8")


def plan_from_dict(data: dict) -> Plan:
    try:
        return Plan(tuple(data["route"]), tuple(data["send"]))
    except (KeyError, TypeError) as exc:
        raise MissionError(f"plan object missing field: {exc}") from exc


def load_plans(path: Union[str, Path]) -> MultiPlan:
    """Load a plan file (a single object) or a multi-plan file (an array of objects)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        return MultiPlan((plan_from_dict(data),))
    if isinstance(data, list) and data:
        return MultiPlan(tuple(plan_from_dict(d) for d in data))
    raise MissionError("plan file must hold an object or a non-empty array")


def save_plans(plans: Union[Plan, MultiPlan, Sequence[Plan]], path: Union[str, Path]) -> None:
    if isinstance(plans, Plan):
        data: Union[dict, list] = plans.to_dict()
    else:
        data = [p.to_dict() for p in plans]
    Path(path).write_text(json.dumps(data) + "\n", encoding="utf-8")
