"""Command line front end: scenario files in, JSON, JSONL or CSV reports out.

Exit codes: 0 success, 1 verification disagreement, 2 input error,
3 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .infconv import (
    CapExceededError,
    InapplicableError,
    InfConvError,
    InfConvResult,
    Witness,
    check_witness,
    gamma_general,
    infconv_abscont,
    infconv_chain,
    infconv_conditional,
    infconv_homogeneous,
    infconv_lvar_rho,
    infconv_lvar_rho_conditional,
    infconv_lvarplus_rho,
    infconv_lvarplus_step,
    infconv_var_conditional,
    pareto_check,
)
from .infconv.result import ext_json
from .instances import (
    Instance,
    RHO_KINDS,
    abscont_instance,
    conditional_instance,
    lvar_instance,
    lvar_rho_instance,
)
from .lambda_fn import DistortionFunction, LambdaError, StepLambda, UtilityFunction
from .oracle import OracleCapError, OracleConfig, brute_infconv
from .prob_core import (
    EPS,
    EventSet,
    FiniteSpace,
    ProbabilityError,
    conditional_measure,
    lift,
    radon_nikodym,
)
from .risk_measures import KINDS, MeasureSpec, MeasureSpecError, evaluate

EXIT_OK, EXIT_DISAGREE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
CAP_ENV = "LAMBDA_SHARD_CAP"
AGREE_TOL = 1e-9
METHODS = ("auto", "general", "homogeneous", "chain", "conditional", "abscont", "thone", "thfour", "step")
FAMILIES = ("general", "homogeneous", "conditional", "abscont", "thone", "thfour")
TOP_KEYS = ("atoms", "measures", "variables", "lambdas", "distortions", "utilities", "events", "agents", "x", "task")
PREF_KEYS = ("kind", "alpha", "lambda", "distortion", "utility", "event", "literal")

# what each engine computes, reported next to the value
ROUTES = {
    "single": "risk measure of the single agent",
    "general": "Lambda-VaR agents, arbitrary beliefs: least level whose tail can be shared",
    "homogeneous": "Lambda-VaR agents, common belief: Lambda-VaR of the aggregate Lambda",
    "chain": "Lambda-VaR agents, common belief: chained prefix search",
    "conditional": "Lambda-VaR agents, beliefs conditioned from one measure: aggregate on the common event",
    "var_conditional": "constant tolerances, conditioned beliefs: VaR on the common event",
    "abscont": "two Lambda-VaR agents, absolutely continuous beliefs: level curve search",
    "thone": "Lambda-VaR agent and a monotone functional: level and set search",
    "thone-conditional": "Lambda-VaR agent and a monotone functional, conditioned beliefs: explicit set",
    "thfour": "Lambda-VaR+ agent and a monotone functional: level and coupling search",
    "thfour-step": "two-level Lambda-VaR+ agent and a monotone functional: level and set-pair search",
}


class ScenarioError(ValueError):
    """Malformed scenario; ``pointer`` is a JSON pointer into the file."""

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer or "/"
        super().__init__(f"{self.pointer}: {message}")


@dataclass
class Scenario:
    space: FiniteSpace
    variables: dict[str, np.ndarray]
    lambdas: dict[str, StepLambda] = field(default_factory=dict)
    distortions: dict[str, DistortionFunction] = field(default_factory=dict)
    utilities: dict[str, UtilityFunction] = field(default_factory=dict)
    events: dict[str, EventSet] = field(default_factory=dict)
    agents: list[MeasureSpec] = field(default_factory=list)
    x: str = "X"
    # per agent: (base measure, event name) when the belief is a conditional
    given: list[tuple[str, str] | None] = field(default_factory=list)
    base_measures: tuple[str, ...] = ()
    task: dict = field(default_factory=dict)

    @property
    def X(self) -> np.ndarray:
        return self.variables[self.x]


# ---------------------------------------------------------------- loading


def _ptr(*parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def _number(obj, pointer: str, allow_inf: bool = False) -> float:
    if isinstance(obj, bool):
        raise ScenarioError(pointer, "expected a number, got a boolean")
    if isinstance(obj, (int, float)):
        val = float(obj)
    elif isinstance(obj, str):
        if obj in ("-inf", "inf") and allow_inf:
            return float(obj)
        try:
            val = float(Fraction(obj))
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(pointer, f"expected a number, got {obj!r}") from None
    else:
        raise ScenarioError(pointer, f"expected a number, got {type(obj).__name__}")
    if not math.isfinite(val):
        raise ScenarioError(pointer, "numbers must be finite")
    return val


def _vector(obj, n: int, pointer: str) -> np.ndarray:
    if not isinstance(obj, list):
        raise ScenarioError(pointer, "expected a list of numbers")
    if len(obj) != n:
        raise ScenarioError(pointer, f"expected {n} entries (one per atom), got {len(obj)}")
    return np.array([_number(v, f"{pointer}/{i}") for i, v in enumerate(obj)])


def _mapping(obj, pointer: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ScenarioError(pointer, "expected an object")
    return obj


def _parse_with(parser, obj, pointer: str):
    try:
        return parser(obj)
    except (LambdaError, ProbabilityError, MeasureSpecError) as exc:
        raise ScenarioError(pointer, str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(pointer, f"malformed entry ({exc})") from None


def _lambda(obj, pointer: str) -> StepLambda:
    if isinstance(obj, dict):
        obj = {
            "breakpoints": [_number(b, f"{pointer}/breakpoints/{i}") for i, b in enumerate(obj.get("breakpoints", []))],
            "values": [_number(v, f"{pointer}/values/{i}") for i, v in enumerate(_require(obj, "values", pointer))],
        }
    return _parse_with(StepLambda.from_json, obj, pointer)


def _require(obj: dict, key: str, pointer: str):
    if key not in obj:
        raise ScenarioError(pointer, f"missing key {key!r}")
    return obj[key]


def _resolve(ref, table: dict, kind: str, pointer: str, parse):
    if isinstance(ref, str):
        if ref not in table:
            raise ScenarioError(pointer, f"unknown {kind} {ref!r}")
        return table[ref]
    return parse(ref, pointer)


def _preference(obj, belief: str, sc: Scenario, pointer: str) -> MeasureSpec:
    obj = _mapping(obj, pointer)
    extra = set(obj) - set(PREF_KEYS)
    if extra:
        raise ScenarioError(pointer, f"unknown keys {sorted(extra)}")
    kind = _require(obj, "kind", pointer)
    if kind not in KINDS:
        raise ScenarioError(pointer + "/kind", f"unknown measure kind {kind!r}")
    n = sc.space.n
    args: dict[str, Any] = {}
    if "alpha" in obj:
        args["alpha"] = _number(obj["alpha"], pointer + "/alpha")
    if "lambda" in obj:
        args["lam"] = _resolve(obj["lambda"], sc.lambdas, "lambda", pointer + "/lambda", _lambda)
    if "distortion" in obj:
        args["g"] = _resolve(obj["distortion"], sc.distortions, "distortion", pointer + "/distortion",
                             lambda o, p: _parse_with(DistortionFunction.from_json, o, p))
    if "utility" in obj:
        args["u"] = _resolve(obj["utility"], sc.utilities, "utility", pointer + "/utility",
                             lambda o, p: _parse_with(UtilityFunction.from_json, o, p))
    if "event" in obj:
        args["event"] = _resolve(obj["event"], sc.events, "event", pointer + "/event",
                                 lambda o, p: _parse_with(EventSet, _vector(o, n, p), p))
    if "literal" in obj:
        if not isinstance(obj["literal"], bool):
            raise ScenarioError(pointer + "/literal", "expected true or false")
        args["literal"] = obj["literal"]
    try:
        return MeasureSpec(kind, belief, **args)
    except MeasureSpecError as exc:
        raise ScenarioError(pointer, str(exc)) from None


def parse_scenario(obj: Any) -> Scenario:
    """Validate a decoded scenario document and build the data model."""
    if not isinstance(obj, dict):
        raise ScenarioError("/", "a scenario is a JSON object")
    extra = set(obj) - set(TOP_KEYS)
    if extra:
        raise ScenarioError("/", f"unknown keys {sorted(extra)}")
    atoms = _require(obj, "atoms", "")
    if not isinstance(atoms, list) or not atoms:
        raise ScenarioError("/atoms", "expected a non-empty list")
    ids = []
    for i, a in enumerate(atoms):
        if not isinstance(a, dict) or not isinstance(a.get("id"), str):
            raise ScenarioError(_ptr("atoms", i), 'each atom is {"id": string}')
        ids.append(a["id"])
    if len(set(ids)) != len(ids):
        raise ScenarioError("/atoms", "atom ids must be unique")
    n = len(ids)
    measures = {}
    for name, w in _mapping(_require(obj, "measures", ""), "/measures").items():
        p = _ptr("measures", name)
        vec = _vector(w, n, p)
        if np.any(vec < 0):
            raise ScenarioError(p, f"measure {name!r} has a negative weight")
        if abs(vec.sum() - 1.0) > 1e-9:
            raise ScenarioError(p, f"measure {name!r} sums to {vec.sum()!r}, not 1")
        # renormalise only when needed so that save/load is stable
        measures[name] = vec if abs(vec.sum() - 1.0) <= EPS else vec / vec.sum()
    if not measures:
        raise ScenarioError("/measures", "at least one measure is needed")
    try:
        space = FiniteSpace(tuple(ids), measures)
    except ProbabilityError as exc:
        raise ScenarioError("/measures", str(exc)) from None
    variables = {}
    for name, v in _mapping(_require(obj, "variables", ""), "/variables").items():
        variables[name] = _vector(v, n, _ptr("variables", name))
    sc = Scenario(space, variables, base_measures=tuple(measures))
    for name, L in _mapping(obj.get("lambdas"), "/lambdas").items():
        sc.lambdas[name] = _lambda(L, _ptr("lambdas", name))
    for name, g in _mapping(obj.get("distortions"), "/distortions").items():
        sc.distortions[name] = _parse_with(DistortionFunction.from_json, g, _ptr("distortions", name))
    for name, u in _mapping(obj.get("utilities"), "/utilities").items():
        p = _ptr("utilities", name)
        if isinstance(u, dict) and "minus_infinity" in u:
            _number(u["minus_infinity"], p + "/minus_infinity", allow_inf=True)
        sc.utilities[name] = _parse_with(UtilityFunction.from_json, u, p)
    for name, e in _mapping(obj.get("events"), "/events").items():
        p = _ptr("events", name)
        sc.events[name] = _parse_with(EventSet, _vector(e, n, p), p)
    agents = _require(obj, "agents", "")
    if not isinstance(agents, list) or not agents:
        raise ScenarioError("/agents", "expected a non-empty list of agents")
    for i, a in enumerate(agents):
        p = _ptr("agents", i)
        a = _mapping(a, p)
        extra = set(a) - {"belief", "preference", "given"}
        if extra:
            raise ScenarioError(p, f"unknown keys {sorted(extra)}")
        belief = _require(a, "belief", p)
        if belief not in measures:
            raise ScenarioError(p + "/belief", f"unknown measure {belief!r}")
        given = None
        if "given" in a:
            ev = a["given"]
            if ev not in sc.events:
                raise ScenarioError(p + "/given", f"unknown event {ev!r}")
            try:
                sc.space, belief = conditional_measure(sc.space, belief, sc.events[ev], f"{belief}|{ev}")
            except ProbabilityError as exc:
                raise ScenarioError(p + "/given", str(exc)) from None
            given = (a["belief"], ev)
        sc.agents.append(_preference(_require(a, "preference", p), belief, sc, p + "/preference"))
        sc.given.append(given)
    x = _require(obj, "x", "")
    if x not in variables:
        raise ScenarioError("/x", f"unknown variable {x!r}")
    sc.x = x
    sc.task = _mapping(obj.get("task"), "/task")
    return sc


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError("/", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("/", f"not valid JSON ({exc})") from None
    return parse_scenario(obj)


def scenario_to_json(sc: Scenario) -> dict:
    """Inverse of ``parse_scenario``: named objects stay referenced by name."""
    names = {}
    for table in (sc.lambdas, sc.distortions, sc.utilities, sc.events):
        for name, obj in table.items():
            names[id(obj)] = name
    agents = []
    for a, g in zip(sc.agents, sc.given):
        pref = a.to_json(names)
        belief = pref.pop("belief")
        entry = {"belief": g[0] if g else belief, "preference": pref}
        if g:
            entry["given"] = g[1]
        agents.append(entry)
    out = {
        "atoms": [{"id": a} for a in sc.space.atoms],
        "measures": {m: sc.space.weights(m).tolist() for m in sc.base_measures},
        "variables": {k: v.tolist() for k, v in sc.variables.items()},
        "lambdas": {k: v.to_json() for k, v in sc.lambdas.items()},
        "distortions": {k: v.to_json() for k, v in sc.distortions.items()},
        "utilities": {k: v.to_json() for k, v in sc.utilities.items()},
        "events": {k: v.membership.tolist() for k, v in sc.events.items()},
        "agents": agents,
        "x": sc.x,
    }
    if sc.task:
        out["task"] = sc.task
    return out


def scenario_from_instance(inst: Instance, events: Sequence[EventSet] | None = None, base: str = "P") -> Scenario:
    """Wrap a generated instance; with ``events`` the beliefs are ``base`` conditioned on them."""
    sc = Scenario(inst.space, {"X": np.asarray(inst.X, dtype=float)}, agents=list(inst.agents))
    sc.base_measures = tuple(inst.space.measures)
    sc.given = [None] * len(inst.agents)
    if events is not None:
        for i, B in enumerate(events):
            sc.events[f"B{i + 1}"] = B
            sc.given[i] = (base, f"B{i + 1}")
        sc.base_measures = (base,)
        sc.space = FiniteSpace(inst.space.atoms, {base: inst.space.weights(base)})
        agents = []
        for i, a in enumerate(inst.agents):
            sc.space, q = conditional_measure(sc.space, base, events[i], f"{base}|B{i + 1}")
            agents.append(MeasureSpec(a.kind, q, alpha=a.alpha, lam=a.lam, g=a.g, u=a.u, event=a.event,
                                      literal=a.literal))
        sc.agents = agents
    return sc


# ---------------------------------------------------------------- engines


def resolve_cap(flag: int | None) -> int | None:
    if flag is not None:
        return flag
    env = os.environ.get(CAP_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ScenarioError("/", f"{CAP_ENV} must be an integer, got {env!r}") from None
    return None


def _capped(cap: int | None) -> dict:
    return {} if cap is None else {"cap": cap}


def _common_base(sc: Scenario) -> str | None:
    if all(g is not None for g in sc.given) and len({g[0] for g in sc.given}) == 1:
        return sc.given[0][0]
    return None


def _all(sc: Scenario, kind: str) -> bool:
    return all(a.kind == kind for a in sc.agents)


def _absolutely_continuous(space: FiniteSpace, num: str, den: str) -> bool:
    try:
        radon_nikodym(space, num, den)
    except ProbabilityError:
        return False
    return True


def _swapped(res: InfConvResult) -> InfConvResult:
    """Report an engine run on ``(agent 2, agent 1)`` in the caller's order."""
    if res.witness is not None:
        w = res.witness
        res.witness = Witness(w.space, tuple(reversed(w.allocation)), tuple(reversed(w.y_star)),
                              tuple(reversed(w.sets)))
    if res.agents:
        res.agents = tuple(reversed(res.agents))
    res.params["swapped"] = True
    return res


def _pair(sc: Scenario, kind: str) -> int:
    """Index of the single ``kind`` agent in a two-agent scenario."""
    if len(sc.agents) != 2:
        raise InapplicableError(f"needs exactly two agents, got {len(sc.agents)}")
    hits = [i for i, a in enumerate(sc.agents) if a.kind == kind]
    if not hits:
        raise InapplicableError(f"needs a {kind} agent")
    return hits[0]


def run_method(sc: Scenario, method: str, cap: int | None = None) -> InfConvResult:
    """Run one engine; raises ``InapplicableError`` naming the reason when it does not fit."""
    if method not in METHODS:
        raise InapplicableError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "auto":
        return run_method(sc, auto_method(sc), cap)
    space, agents, X = sc.space, sc.agents, sc.X
    if len(agents) == 1:
        val = evaluate(space, agents[0], X)
        wit = Witness(space, (np.asarray(X, dtype=float).copy(),), (), (EventSet.full(space.n),))
        return InfConvResult(val, "single", wit if math.isfinite(val) else None, {}, {})
    if method in ("general", "homogeneous", "chain", "conditional", "abscont") and not _all(sc, "lambda_var"):
        raise InapplicableError(f"{method} needs every agent to be lambda_var")
    if method == "general":
        return gamma_general(space, agents, X, **_capped(cap))
    if method in ("homogeneous", "chain"):
        beliefs = {a.belief for a in agents}
        if len(beliefs) != 1:
            raise InapplicableError(f"{method} needs a common belief, got {sorted(beliefs)}")
        engine = infconv_homogeneous if method == "homogeneous" else infconv_chain
        return engine(space, beliefs.pop(), agents, X)
    if method == "conditional":
        base = _common_base(sc)
        if base is None:
            raise InapplicableError("conditional needs every belief given as one measure conditioned on an event")
        Bs = [sc.events[g[1]] for g in sc.given]
        if all(a.lam.is_constant for a in agents):
            return infconv_var_conditional(space, base, Bs, [a.lam.values[0] for a in agents], X)
        return infconv_conditional(space, base, Bs, agents, X)
    if method == "abscont":
        if len(agents) != 2:
            raise InapplicableError("abscont needs exactly two agents")
        q1, q2 = agents[0].belief, agents[1].belief
        if _absolutely_continuous(space, q2, q1):
            return infconv_abscont(space, q1, q2, agents[0].lam, agents[1].lam, X)
        if _absolutely_continuous(space, q1, q2):
            res = infconv_abscont(space, q2, q1, agents[1].lam, agents[0].lam, X)
            return _swapped(res)
        raise InapplicableError("abscont needs one belief absolutely continuous w.r.t. the other")
    if method == "thone":
        i = _pair(sc, "lambda_var")
        first, second = agents[i], agents[1 - i]
        base = _common_base(sc)
        if base is not None:
            B1, B2 = sc.events[sc.given[i][1]], sc.events[sc.given[1 - i][1]]
            res = infconv_lvar_rho_conditional(space, base, B1, B2, first.lam, second, X)
        else:
            res = infconv_lvar_rho(space, first.belief, first.lam, second, X, **_capped(cap))
        return _swapped(res) if i == 1 else res
    # thfour and step
    i = _pair(sc, "lambda_var_plus")
    first, second = agents[i], agents[1 - i]
    engine = infconv_lvarplus_rho if method == "thfour" else infconv_lvarplus_step
    res = engine(space, first.belief, first.lam, second, X, **_capped(cap))
    return _swapped(res) if i == 1 else res


def auto_method(sc: Scenario) -> str:
    """The most specific engine that applies to the scenario's belief structure."""
    agents = sc.agents
    if len(agents) == 1:
        return "general"
    if _all(sc, "lambda_var"):
        if _common_base(sc) is not None:
            return "conditional"
        if len({a.belief for a in agents}) == 1:
            return "homogeneous"
        if len(agents) == 2 and (
            _absolutely_continuous(sc.space, agents[1].belief, agents[0].belief)
            or _absolutely_continuous(sc.space, agents[0].belief, agents[1].belief)
        ):
            return "abscont"
        return "general"
    if len(agents) == 2:
        kinds = [a.kind for a in agents]
        if "lambda_var_plus" in kinds:
            return "thfour"
        if "lambda_var" in kinds:
            return "thone"
    raise InapplicableError("no engine handles this mix of agents; the supported mixes are all "
                            "lambda_var, or two agents one of which is lambda_var or lambda_var_plus")


def result_report(sc: Scenario, res: InfConvResult) -> dict:
    out = res.to_json()
    out["route"] = ROUTES.get(res.method, res.method)
    out["agents"] = [a.to_json() for a in sc.agents]
    if res.value == -math.inf and res.certificate is None:
        out["certificate"] = {"kind": "none", "reason": "engine gave no certificate"}
    return out


# ---------------------------------------------------------------- commands


def cmd_evaluate(sc: Scenario) -> dict:
    rows = []
    for i, a in enumerate(sc.agents):
        row = {"agent": i, "kind": a.kind, "belief": a.belief, "value": ext_json(evaluate(sc.space, a, sc.X))}
        if a.kind in ("lambda_var", "lambda_var_plus"):
            row["side_by_side"] = {
                k: ext_json(evaluate(sc.space, MeasureSpec(k, a.belief, lam=a.lam), sc.X))
                for k in ("lambda_var", "lambda_var_plus")
            }
        rows.append(row)
    return {"x": sc.x, "agents": rows}


def cmd_infconv(sc: Scenario, method: str = "auto", cap: int | None = None) -> dict:
    return result_report(sc, run_method(sc, method, cap))


def _same(a: float, b: float) -> bool:
    if a == b:
        return True
    return math.isfinite(a) and math.isfinite(b) and abs(a - b) <= AGREE_TOL


def _oracle_supported(sc: Scenario) -> bool:
    kinds = [a.kind for a in sc.agents]
    if len(kinds) == 1 or all(k == "lambda_var" for k in kinds):
        return True
    return len(kinds) == 2 and kinds[0] in ("lambda_var", "lambda_var_plus")


def verify_scenario(sc: Scenario, cap: int | None = None, engines: dict | None = None) -> dict:
    """Run every applicable engine and the oracle on one scenario and compare.

    ``engines`` maps method names to callables ``(scenario, cap) -> result``
    and replaces the registry, which tests use to plant a faulty engine.
    """
    registry = engines or {m: (lambda s, c, m=m: run_method(s, m, c)) for m in METHODS if m != "auto"}
    values, skipped, witness, pareto, attained = {}, {}, {}, {}, {}
    X = sc.X
    for name, run in registry.items():
        try:
            res = run(sc, cap)
        except CapExceededError as exc:
            skipped[name] = f"cap: {exc}"
            continue
        except (InapplicableError, InfConvError, LambdaError, ProbabilityError) as exc:
            skipped[name] = f"inapplicable: {exc}"
            continue
        values[name] = res.value
        attained[name] = res.witness is not None or res.value == -math.inf or res.diagnostics.get("attained", True)
        if res.witness is not None:
            ok, msg = check_witness(res, sc.agents, X, sc.space)
            witness[name] = msg
            w = res.witness
            specs = res.agents or tuple(sc.agents)
            total = X if w.space is sc.space else lift(w.space, X)
            try:
                pareto[name], _ = pareto_check(w.space, specs, total, w.allocation)
            except InfConvError as exc:
                pareto[name] = False
                witness[name] = f"{msg}; {exc}"
    oracle = None
    if _oracle_supported(sc):
        config = OracleConfig() if cap is None else OracleConfig(max_partitions=cap)
        o_agents = sc.agents
        if len(o_agents) == 2 and o_agents[0].kind not in ("lambda_var", "lambda_var_plus"):
            o_agents = o_agents[::-1]
        try:
            oracle = brute_infconv(sc.space, o_agents, X, config).value
        except (OracleCapError, ValueError) as exc:
            skipped["oracle"] = f"cap: {exc}"
    exact = [v for k, v in values.items() if attained[k]]
    agree = all(_same(exact[0], v) for v in exact[1:]) if exact else True
    loose = [v for k, v in values.items() if not attained[k]]
    # an unattained infimum is exact, so it must match the attained engines too
    agree = agree and all(_same(v, exact[0]) for v in loose) if exact else agree
    if oracle is not None and values:
        ref = exact[0] if exact else min(values.values())
        if all(attained.values()):
            agree = agree and _same(ref, oracle)
        else:
            # the oracle only sees attained allocations on its grid
            agree = agree and (ref <= oracle + AGREE_TOL or _same(ref, oracle))
    wit_ok = all(m == "ok" for m in witness.values()) and all(pareto.values())
    return {
        "values": {k: ext_json(v) for k, v in values.items()},
        "oracle": None if oracle is None else ext_json(oracle),
        "agree": bool(agree),
        "witness": witness,
        "pareto": pareto,
        "skipped": skipped,
        "ok": bool(agree and wit_ok),
    }


def random_scenario(rng: np.random.Generator, family: str, max_atoms: int) -> Scenario:
    K = int(rng.integers(2, max(2, max_atoms) + 1))
    if family == "general":
        return scenario_from_instance(lvar_instance(rng, 2, K))
    if family == "homogeneous":
        n = int(rng.integers(2, 4))
        return scenario_from_instance(lvar_instance(rng, n, K, homogeneous=True))
    if family == "conditional":
        inst, events = conditional_instance(rng, 2, K, constants=rng.random() < 0.5)
        return scenario_from_instance(inst, events)
    if family == "abscont":
        return scenario_from_instance(abscont_instance(rng, K))
    if family == "thone":
        kind = RHO_KINDS[int(rng.integers(len(RHO_KINDS)))]
        return scenario_from_instance(lvar_rho_instance(rng, K, kind))
    if family == "thfour":
        kind = RHO_KINDS[int(rng.integers(len(RHO_KINDS)))]
        return scenario_from_instance(lvar_rho_instance(rng, min(K, 4), kind, plus=True, shared=True))
    raise ValueError(f"unknown family {family!r}")


def cmd_verify(sc: Scenario | None = None, random: int = 0, seed: int = 0, max_atoms: int = 5,
               cap: int | None = None, engines: dict | None = None) -> tuple[int, list[dict]]:
    """Verification records and the exit code (1 if any record disagrees)."""
    records = []
    if sc is not None:
        rec = verify_scenario(sc, cap, engines)
        rec.update({"index": 0, "family": "scenario"})
        records.append(rec)
    rng = np.random.default_rng(seed)
    for i in range(random):
        family = FAMILIES[i % len(FAMILIES)]
        inst = random_scenario(rng, family, max_atoms)
        rec = verify_scenario(inst, cap, engines)
        rec.update({"index": i, "family": family, "seed": seed, "atoms": inst.space.n})
        records.append(rec)
    code = EXIT_OK if all(r["ok"] for r in records) else EXIT_DISAGREE
    return code, records


def _parse_grid(text) -> list[float]:
    if isinstance(text, list):
        return [_number(t, f"/task/grid/{i}") for i, t in enumerate(text)]
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError("/", f"grid {text!r} is not start:stop:count")
        a, b, c = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(t) for t in np.linspace(a, b, c)]
    return [float(t) for t in text.split(",") if t.strip()]


def _with_overlap(sc: Scenario, t: float) -> Scenario:
    """Move base mass so the common event of the conditioning sets has mass ``t``."""
    base = _common_base(sc)
    Bs = [sc.events[g[1]] for g in sc.given]
    inside = np.prod([B.membership for B in Bs], axis=0)
    if not all(B.is_crisp for B in Bs):
        raise ScenarioError("/events", "overlap sweeps need crisp conditioning events")
    P = sc.space.weights(base)
    pin, pout = float(inside @ P), float((1 - inside) @ P)
    if pin <= 0 or (pout <= 0 and t < 1):
        raise ScenarioError("/measures/" + base, "the common event and its complement need mass to sweep")
    if not 0 < t <= 1:
        raise ScenarioError("/", f"overlap {t} outside (0, 1]")
    newP = np.where(inside > 0.5, P * t / pin, P * (1 - t) / pout if pout > 0 else 0.0)
    obj = scenario_to_json(sc)
    obj["measures"][base] = newP.tolist()
    return parse_scenario(obj)


def _with_lambda_plus(sc: Scenario, t: float) -> Scenario:
    """Scale every Lambda so the agents' sups add up to ``t``."""
    total = sum(a.lam.lam_plus for a in sc.agents)
    agents = []
    for a in sc.agents:
        L = StepLambda(a.lam.breakpoints, tuple(v * t / total for v in a.lam.values))
        if L.lam_plus >= 1:
            raise ScenarioError("/", f"sum of sups {t} pushes an agent's Lambda to 1 or above")
        agents.append(MeasureSpec(a.kind, a.belief, alpha=a.alpha, lam=L, g=a.g, u=a.u, event=a.event,
                                  literal=a.literal))
    return Scenario(sc.space, sc.variables, sc.lambdas, sc.distortions, sc.utilities, sc.events, agents,
                    sc.x, sc.given, sc.base_measures, sc.task)


def cmd_sweep(sc: Scenario, parameter: str, grid: Sequence[float], cap: int | None = None) -> list[list[str]]:
    """Rows ``(parameter, value, transition)``; the transition column marks a change of finiteness."""
    if parameter == "overlap":
        if _common_base(sc) is None:
            raise ScenarioError("/agents", "overlap sweeps need every belief given by one measure and an event")
        build = _with_overlap
    elif parameter == "lambda_plus":
        if not _all(sc, "lambda_var"):
            raise ScenarioError("/agents", "lambda_plus sweeps need lambda_var agents")
        build = _with_lambda_plus
    else:
        raise ScenarioError("/", f"unknown sweep parameter {parameter!r}")
    rows = [["parameter", "value", "transition"]]
    prev = None
    for t in grid:
        res = run_method(build(sc, t), "auto", cap)
        neg = res.value == -math.inf
        mark = ""
        if prev is not None and prev != neg:
            mark = "finite->-inf" if neg else "-inf->finite"
        prev = neg
        rows.append([repr(float(t)), "-inf" if neg else repr(float(res.value)), mark])
    return rows


def to_csv(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lambda-share", description="Risk sharing among Lambda-VaR agents.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_required=True):
        if scenario_required:
            sp.add_argument("scenario", help="scenario JSON file")
        else:
            sp.add_argument("scenario", nargs="?", help="scenario JSON file")
        sp.add_argument("--cap", type=int, default=None, help=f"enumeration cap (else ${CAP_ENV})")
        sp.add_argument("--out", default=None, help="write the report here instead of stdout")

    common(sub.add_parser("evaluate", help="each agent's risk measure of X"))
    sp = sub.add_parser("infconv", help="optimal risk sharing value and allocation")
    common(sp)
    sp.add_argument("--method", choices=METHODS, default="auto")
    sp = sub.add_parser("verify", help="engines against each other and the oracle (JSONL)")
    common(sp, scenario_required=False)
    sp.add_argument("--random", type=int, default=0, help="number of random instances")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-atoms", type=int, default=5)
    sp = sub.add_parser("sweep", help="value along an overlap or lambda_plus grid (CSV)")
    common(sp)
    sp.add_argument("--parameter", choices=("overlap", "lambda_plus"), default=None)
    sp.add_argument("--grid", default=None, help="start:stop:count or a comma list")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cap = resolve_cap(args.cap)
        sc = load_scenario(args.scenario) if args.scenario else None
        if args.command == "evaluate":
            _emit(json.dumps(cmd_evaluate(sc), indent=2) + "\n", args.out)
        elif args.command == "infconv":
            _emit(json.dumps(cmd_infconv(sc, args.method, cap), indent=2) + "\n", args.out)
        elif args.command == "verify":
            if sc is None and args.random <= 0:
                raise ScenarioError("/", "verify needs a scenario file or --random N")
            code, records = cmd_verify(sc, args.random, args.seed, args.max_atoms, cap)
            _emit("".join(json.dumps(r, sort_keys=True) + "\n" for r in records), args.out)
            return code
        else:
            task = sc.task.get("sweep", {}) if isinstance(sc.task.get("sweep", {}), dict) else {}
            parameter = args.parameter or task.get("parameter")
            grid = args.grid if args.grid is not None else task.get("grid")
            if parameter is None or grid is None:
                raise ScenarioError("/task/sweep", "sweep needs --parameter and --grid (or task.sweep)")
            _emit(to_csv(cmd_sweep(sc, parameter, _parse_grid(grid), cap)), args.out)
    except ScenarioError as exc:
        print(f"input error at {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapExceededError as exc:
        bounds = ""
        if exc.lower is not None or exc.upper is not None:
            bounds = f" (bounds: lower {ext_json(exc.lower)}, upper {ext_json(exc.upper)})"
        print(f"cap exceeded: {exc}{bounds}", file=sys.stderr)
        return EXIT_CAP
    except OracleCapError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InapplicableError, InfConvError, LambdaError, ProbabilityError, MeasureSpecError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


__all__ = [
    "EXIT_CAP",
    "EXIT_DISAGREE",
    "EXIT_INPUT",
    "EXIT_OK",
    "METHODS",
    "Scenario",
    "ScenarioError",
    "auto_method",
    "cmd_evaluate",
    "cmd_infconv",
    "cmd_sweep",
    "cmd_verify",
    "load_scenario",
    "main",
    "parse_scenario",
    "run_method",
    "scenario_from_instance",
    "scenario_to_json",
    "verify_scenario",
]
