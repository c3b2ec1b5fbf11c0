"""Mixed-integer linear model of the single-drone planning problem.

Each time period is move -> observe -> send. Products of a binary decision
and a continuous survival/value quantity are linearized with the usual
four-inequality envelope (``*_ub1``, ``*_ub2``, ``*_lb`` plus the variable
bounds). The model is exported as CPLEX-LP text for an external solver;
solver output is read back as ``name value`` lines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .evaluate import transmission_value
from .mission import Mission, Plan, validate_plan

BINARY_TOL = 1e-6
OBJECTIVE_TOL = 1e-5


class SolutionError(ValueError):
    """A solver assignment does not describe a valid walk."""


class ObjectiveMismatch(SolutionError):
    """The model objective and the evaluator disagree on an imported plan."""

    def __init__(self, plan: Plan, value: float, objective: float):
        super().__init__(f"model objective {objective!r} differs from plan value {value!r}")
        self.plan, self.value, self.objective = plan, value, objective


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # "binary" | "continuous"
    lb: float
    ub: float
    family: str
    index: tuple


@dataclass(frozen=True)
class Constraint:
    name: str
    family: str
    coeffs: dict
    sense: str  # "<=", ">=", "="
    rhs: float

    def activity(self, values: Mapping[str, float]) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.coeffs.items())

    def violation(self, values: Mapping[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(lhs - self.rhs, 0.0)
        if self.sense == ">=":
            return max(self.rhs - lhs, 0.0)
        return abs(lhs - self.rhs)


@dataclass
class MilpModel:
    n: int
    horizon: int
    big_m: float
    arcs: list  # directed (i, j) pairs, (0, 0) self-loop first
    arc_q: dict
    variables: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    literal_send_bounds: bool = False

    def add_var(self, name, kind, lb, ub, family, index):
        self.variables[name] = Variable(name, kind, lb, ub, family, index)

    def add(self, name, family, terms: Iterable[tuple[float, Optional[str]]], sense, rhs=0.0):
        """Add ``sum(terms) sense rhs``; a term with name ``None`` is a constant moved to the rhs."""
        coeffs: dict = {}
        for coef, var in terms:
            if var is None:
                rhs -= coef
            else:
                coeffs[var] = coeffs.get(var, 0.0) + coef
        self.constraints.append(Constraint(name, family, coeffs, sense, rhs))

    @property
    def binaries(self) -> list[str]:
        return [v.name for v in self.variables.values() if v.kind == "binary"]

    def family_counts(self) -> dict[str, int]:
        counts: dict = {}
        for c in self.constraints:
            counts[c.family] = counts.get(c.family, 0) + 1
        return counts

    def objective_value(self, values: Mapping[str, float]) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.objective.items())


# variable names
def x(i, j, t): return f"x_{i}_{j}_{t}"
def y(i, t): return f"y_{i}_{t}"
def z(i, t): return f"z_{i}_{t}"
def s_move(t): return f"sM_{t}"
def s_send(t): return f"sS_{t}"
def v_move(i, t): return f"vM_{i}_{t}"
def v_obs(i, t): return f"vO_{i}_{t}"
def v_send(i, t): return f"vS_{i}_{t}"
def alpha(i, j, t): return f"alpha_{i}_{j}_{t}"
def beta(i, t): return f"beta_{i}_{t}"
def gamma(j, i, t): return f"gamma_{j}_{i}_{t}"
def delta(i, t): return f"delta_{i}_{t}"
def eps(i, t): return f"eps_{i}_{t}"


def build_milp(m: Mission, t_max: int, literal_send_bounds: bool = False) -> MilpModel:
    """Build the full model for ``t_max`` time periods.

    ``literal_send_bounds`` bounds the post-send value by the post-move value
    and by the observation variable instead of the post-observation value and
    the send variable; it exists only for comparison.
    """
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    n = m.n
    big_m = float(m.w.sum())
    arcs = [(0, 0)] + [(i, j) for i in range(n) for j in m.neighbors(i)]
    arc_q = {(i, j): (1.0 if i == j else float(m.q[i, j])) for i, j in arcs}
    model = MilpModel(n, t_max, big_m, arcs, arc_q, literal_send_bounds=literal_send_bounds)
    T = range(1, t_max + 1)
    V = range(n)
    into = {i: [a for a in arcs if a[1] == i] for i in V}
    out_of = {i: [a for a in arcs if a[0] == i] for i in V}

    for t in T:
        for i, j in arcs:
            model.add_var(x(i, j, t), "binary", 0.0, 1.0, "x", (i, j, t))
        for i in V:
            model.add_var(y(i, t), "binary", 0.0, 1.0, "y", (i, t))
            model.add_var(z(i, t), "binary", 0.0, 1.0, "z", (i, t))
    for t in T:
        model.add_var(s_move(t), "continuous", 0.0, 1.0, "sM", (t,))
        model.add_var(s_send(t), "continuous", 0.0, 1.0, "sS", (t,))
        for i, j in arcs:
            model.add_var(alpha(i, j, t), "continuous", 0.0, 1.0, "alpha", (i, j, t))
            model.add_var(gamma(i, j, t), "continuous", 0.0, big_m, "gamma", (i, j, t))
        for i in V:
            model.add_var(v_move(i, t), "continuous", 0.0, big_m, "vM", (i, t))
            model.add_var(v_obs(i, t), "continuous", 0.0, big_m, "vO", (i, t))
            model.add_var(v_send(i, t), "continuous", 0.0, big_m, "vS", (i, t))
            model.add_var(beta(i, t), "continuous", 0.0, 1.0, "beta", (i, t))
            model.add_var(delta(i, t), "continuous", 0.0, 1.0, "delta", (i, t))
            model.add_var(eps(i, t), "continuous", 0.0, big_m, "eps", (i, t))

    # walk structure
    for t in T:
        model.add(f"move_onehot_t{t}", "move_onehot", [(1.0, x(i, j, t)) for i, j in arcs], "=", 1.0)
    model.add("start_base", "start_base", [(1.0, x(i, j, 1)) for i, j in out_of[0]], "=", 1.0)
    model.add("end_base", "end_base", [(1.0, x(i, j, t_max)) for i, j in into[0]], "=", 1.0)
    for t in T:
        if t == 1:
            continue
        for j in V:
            terms = [(1.0, x(a, b, t - 1)) for a, b in into[j]]
            terms += [(-1.0, x(a, b, t)) for a, b in out_of[j]]
            model.add(f"flow_j{j}_t{t}", "flow", terms, "=")

    # observing and sending happen where the drone arrives
    for i in V:
        model.add(f"observe_once_i{i}", "observe_once", [(1.0, y(i, t)) for t in T], "<=", 1.0)
    for t in T:
        for i in V:
            arrive = [(-1.0, x(a, b, t)) for a, b in into[i]]
            model.add(f"observe_at_i{i}_t{t}", "observe_at", [(1.0, y(i, t))] + arrive, "<=")
            model.add(f"send_at_i{i}_t{t}", "send_at", [(1.0, z(i, t))] + arrive, "<=")

    M = big_m
    for t in T:
        # survival before this period; sS_0 = 1 and vS_{i,0} = 0 enter as constants
        prev_s = (1.0, None) if t == 1 else (1.0, s_send(t - 1))

        def prev_v(j, coef=1.0):
            return (0.0, None) if t == 1 else (coef, v_send(j, t - 1))

        for i, j in arcs:
            a, xv = alpha(i, j, t), x(i, j, t)
            tag = f"i{i}_j{j}_t{t}"
            model.add(f"alpha_ub1_{tag}", "alpha_ub1", [(1.0, a), (-prev_s[0], prev_s[1])], "<=")
            model.add(f"alpha_ub2_{tag}", "alpha_ub2", [(1.0, a), (-1.0, xv)], "<=")
            model.add(f"alpha_lb_{tag}", "alpha_lb", [(1.0, a), (-prev_s[0], prev_s[1]), (-1.0, xv), (1.0, None)], ">=")
        model.add(f"survive_move_t{t}", "survive_move",
                  [(1.0, s_move(t))] + [(-model.arc_q[a], alpha(*a, t)) for a in arcs], "=")
        for i in V:
            b, zv = beta(i, t), z(i, t)
            tag = f"i{i}_t{t}"
            model.add(f"beta_ub1_{tag}", "beta_ub1", [(1.0, b), (-1.0, s_move(t))], "<=")
            model.add(f"beta_ub2_{tag}", "beta_ub2", [(1.0, b), (-1.0, zv)], "<=")
            model.add(f"beta_lb_{tag}", "beta_lb", [(1.0, b), (-1.0, s_move(t)), (-1.0, zv), (1.0, None)], ">=")
        model.add(f"survive_send_t{t}", "survive_send",
                  [(1.0, s_send(t)), (-1.0, s_move(t))] + [(1.0 - float(m.p[i]), beta(i, t)) for i in V], "=")

        for j, i in arcs:
            g, xv = gamma(j, i, t), x(j, i, t)
            tag = f"j{j}_i{i}_t{t}"
            pv = prev_v(j)
            neg_pv = (-pv[0], pv[1])
            model.add(f"gamma_ub1_{tag}", "gamma_ub1", [(1.0, g), neg_pv], "<=")
            model.add(f"gamma_ub2_{tag}", "gamma_ub2", [(1.0, g), (-M, xv)], "<=")
            model.add(f"gamma_lb_{tag}", "gamma_lb", [(1.0, g), neg_pv, (-M, xv), (M, None)], ">=")
        for i in V:
            tag = f"i{i}_t{t}"
            model.add(f"expect_move_{tag}", "expect_move",
                      [(1.0, v_move(i, t))] + [(-model.arc_q[(j, i)], gamma(j, i, t)) for j, _ in into[i]], "=")
            d, yv = delta(i, t), y(i, t)
            model.add(f"delta_ub1_{tag}", "delta_ub1", [(1.0, d), (-1.0, s_move(t))], "<=")
            model.add(f"delta_ub2_{tag}", "delta_ub2", [(1.0, d), (-1.0, yv)], "<=")
            model.add(f"delta_lb_{tag}", "delta_lb", [(1.0, d), (-1.0, s_move(t)), (-1.0, yv), (1.0, None)], ">=")
            model.add(f"expect_observe_{tag}", "expect_observe",
                      [(1.0, v_obs(i, t)), (-1.0, v_move(i, t)), (-float(m.w[i]), d)], "=")
            if literal_send_bounds:
                model.add(f"expect_send_ub1_{tag}", "expect_send_ub1", [(1.0, v_send(i, t)), (-1.0, v_move(i, t))], "<=")
                model.add(f"expect_send_ub2_{tag}", "expect_send_ub2", [(1.0, v_send(i, t)), (M, yv)], "<=", M)
            else:
                model.add(f"expect_send_ub1_{tag}", "expect_send_ub1", [(1.0, v_send(i, t)), (-1.0, v_obs(i, t))], "<=")
                model.add(f"expect_send_ub2_{tag}", "expect_send_ub2", [(1.0, v_send(i, t)), (M, z(i, t))], "<=", M)
            e, zv = eps(i, t), z(i, t)
            model.add(f"eps_ub1_{tag}", "eps_ub1", [(1.0, e), (-1.0, v_obs(i, t))], "<=")
            model.add(f"eps_ub2_{tag}", "eps_ub2", [(1.0, e), (-M, zv)], "<=")
            model.add(f"eps_lb_{tag}", "eps_lb", [(1.0, e), (-1.0, v_obs(i, t)), (-M, zv), (M, None)], ">=")

    for t in T:
        for i in V:
            model.objective[eps(i, t)] = float(m.p[i])
    return model


# ------------------------------------------------------------------ LP text

def _num(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _expr(coeffs: Mapping[str, float], per_line: int = 6) -> str:
    terms = [f"{'-' if c < 0 else '+'} {_num(abs(c))} {v}" for v, c in coeffs.items() if c != 0]
    if not terms:
        terms = ["0 " + next(iter(coeffs))] if coeffs else []
    lines = [" ".join(terms[k:k + per_line]) for k in range(0, len(terms), per_line)]
    return "\n   ".join(lines)


def export_lp(model: MilpModel) -> str:
    """Deterministic CPLEX-LP text of the model."""
    out = [
        f"\\ reconnaissance plan model: n={model.n} t_max={model.horizon} big_M={_num(model.big_m)}",
        "Maximize",
        " obj: " + _expr({v: c for v, c in model.objective.items() if c != 0}),
        "Subject To",
    ]
    sense = {"<=": "<=", ">=": ">=", "=": "="}
    for c in model.constraints:
        out.append(f" {c.name}: {_expr(c.coeffs)} {sense[c.sense]} {_num(c.rhs)}")
    out.append("Bounds")
    for v in model.variables.values():
        if v.kind != "binary":
            out.append(f" {_num(v.lb)} <= {v.name} <= {_num(v.ub)}")
    out.append("Binary")
    names = model.binaries
    for k in range(0, len(names), 8):
        out.append(" " + " ".join(names[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


def parse_solution(text: str) -> dict[str, float]:
    """Read ``name value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionError(f"line {lineno}: expected 'name value', got {line!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError as exc:
            raise SolutionError(f"line {lineno}: bad value {parts[1]!r}") from exc
    return values


def format_solution(values: Mapping[str, float]) -> str:
    return "".join(f"{k} {_num(v)}\n" for k, v in values.items())


# ------------------------------------------------------- assignments and plans

def check_assignment(model: MilpModel, values: Mapping[str, float], tol: float = 1e-9) -> list[str]:
    """Names of violated constraints, bounds and integrality requirements."""
    bad = [f"unknown variable {k}" for k in values if k not in model.variables]
    for var in model.variables.values():
        val = values.get(var.name, 0.0)
        if val < var.lb - tol or val > var.ub + tol:
            bad.append(f"bound {var.name}")
        if var.kind == "binary" and min(abs(val), abs(val - 1.0)) > tol:
            bad.append(f"integrality {var.name}")
    bad += [c.name for c in model.constraints if c.violation(values) > tol]
    return bad


def plan_to_assignment(m: Mission, model: MilpModel, plan: Plan) -> dict[str, float]:
    """Encode a plan as a full model assignment, padding with base self-loops."""
    problem = validate_plan(m, plan)
    if problem is not None:
        raise SolutionError(problem)
    T = model.horizon
    if plan.crossings > T:
        raise SolutionError(f"plan needs {plan.crossings} periods, model has {T}")
    route = list(plan.route) + [0] * (T + 1 - len(plan.route))
    send = list(plan.send) + [0] * (T + 1 - len(plan.send))
    values = {name: 0.0 for name in model.variables}
    M = model.big_m
    observed = {0}
    s_prev = 1.0
    v_prev = {i: 0.0 for i in range(model.n)}
    for t in range(1, T + 1):
        a, b = route[t - 1], route[t]
        values[x(a, b, t)] = 1.0
        values[alpha(a, b, t)] = s_prev
        sm = model.arc_q[(a, b)] * s_prev
        values[s_move(t)] = sm
        seen_now = b not in observed
        observed.add(b)
        values[y(b, t)] = 1.0 if seen_now else 0.0
        values[z(b, t)] = float(send[t])
        values[beta(b, t)] = sm * send[t]
        ss = sm - (1.0 - float(m.p[b])) * values[beta(b, t)]
        values[s_send(t)] = ss
        values[gamma(a, b, t)] = v_prev[a]
        vm = model.arc_q[(a, b)] * v_prev[a]
        values[v_move(b, t)] = vm
        values[delta(b, t)] = sm * values[y(b, t)]
        vo = vm + float(m.w[b]) * values[delta(b, t)]
        values[v_obs(b, t)] = vo
        if model.literal_send_bounds:
            vs = min(vm, M * (1.0 - values[y(b, t)]))
        else:
            vs = 0.0 if send[t] else vo
        values[v_send(b, t)] = vs
        values[eps(b, t)] = vo * send[t]
        v_prev = {i: 0.0 for i in range(model.n)}
        v_prev[b] = vs
        s_prev = ss
    return values


def import_solution(
    m: Mission, model: MilpModel, values: Mapping[str, float], tol: float = OBJECTIVE_TOL
) -> tuple[Plan, float, float]:
    """Rebuild the plan encoded by a solver assignment.

    Returns ``(plan, plan_value, model_objective)``. Base self-loops are
    dropped, merging their sends into the preceding base visit.
    """
    for name in model.binaries:
        val = values.get(name, 0.0)
        if min(abs(val), abs(val - 1.0)) > BINARY_TOL:
            raise SolutionError(f"binary variable {name} has fractional value {val!r}")
    rounded = {k: float(round(v)) if model.variables.get(k) and model.variables[k].kind == "binary" else v
               for k, v in values.items()}
    walk_families = {"move_onehot", "start_base", "end_base", "flow"}
    broken = [c.name for c in model.constraints if c.family in walk_families and c.violation(rounded) > BINARY_TOL]
    if broken:
        raise SolutionError(f"assignment is not a walk: {', '.join(broken[:5])}")

    route, send = [0], [0]
    for t in range(1, model.horizon + 1):
        a, b = next(arc for arc in model.arcs if rounded.get(x(*arc, t), 0.0) == 1.0)
        if a != route[-1]:
            raise SolutionError(f"period {t} departs from {a}, drone is at {route[-1]}")
        bit = int(rounded.get(z(b, t), 0.0))
        if a == b == 0:
            send[-1] |= bit
        else:
            route.append(b)
            send.append(bit)
    if len(route) > 1:
        send[0] = 0
    send[-1] = 1
    plan = Plan(tuple(route), tuple(send))
    value = transmission_value(m, plan)
    objective = model.objective_value(values)
    if not math.isclose(value, objective, rel_tol=0.0, abs_tol=tol):
        raise ObjectiveMismatch(plan, value, objective)
    return plan, value, objective
