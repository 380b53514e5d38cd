import math

import numpy as np
import pytest

from lambda_share import FiniteSpace, MeasureSpec, StepLambda, evaluate
from lambda_share.instances import RHO_KINDS, random_lambda, random_rho
from lambda_share.oracle import OracleConfig, brute_coupling, brute_infconv, definition_eval, plus_levels

X4 = np.array([1.0, 2.0, 3.0, 4.0])


def test_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(max_atoms=0)
    with pytest.raises(ValueError):
        OracleConfig(probe_scales=(1.0,))


def test_homogeneous_var_pair(uniform4):
    agents = [MeasureSpec("var", "P", alpha=0.25)] * 2
    lv = [MeasureSpec("lambda_var", "P", lam=StepLambda.constant(0.25))] * 2
    assert brute_infconv(uniform4, lv, X4).value == 2.0
    # VaR is Lambda-VaR with a constant Lambda, evaluated straight from the definition
    assert definition_eval(uniform4, "P", agents[0], X4) == 3.0


def test_single_agent(uniform4):
    a = MeasureSpec("es", "P", alpha=0.5)
    assert brute_infconv(uniform4, [a], X4).value == 3.5


def test_mutually_singular_descends():
    sp = FiniteSpace(("a", "b", "c"), {"P": [1 / 3] * 3, "Q1": [1, 0, 0], "Q2": [0, 0.5, 0.5]}, reference="P")
    agents = [MeasureSpec("lambda_var", q, lam=StepLambda.constant(0.2)) for q in ("Q1", "Q2")]
    o = brute_infconv(sp, agents, np.array([3.0, 1.0, 2.0]))
    assert o.value == -math.inf
    probes = o.detail["probes"]
    assert probes[1] < probes[0]


def test_coupling_single_level(uniform4):
    rho = MeasureSpec("es", "P", alpha=0.5)
    val, place = brute_coupling(uniform4, "P", [(1.5, 1.0)], rho, X4)
    assert val == definition_eval(uniform4, "P", rho, X4 - 1.5)
    assert all(p == [(1.5, 1.0)] for p in place.values())


def test_coupling_two_levels(uniform4):
    rho = MeasureSpec("var", "P", alpha=0.25)
    val, place = brute_coupling(uniform4, "P", [(0.0, 0.5), (2.0, 0.5)], rho, X4)
    # subtracting 2 from the middle outcomes leaves (1, 0, 1, 4), one atom above 1
    assert val == 1.0
    assert place[1] == [(2.0, 1.0)] and place[2] == [(2.0, 1.0)]


def test_coupling_rejects_bad_masses(uniform4):
    with pytest.raises(ValueError):
        brute_coupling(uniform4, "P", [(0.0, 0.5)], MeasureSpec("var", "P", alpha=0.25), X4)


def test_plus_levels():
    L = StepLambda((1.0, 2.0), (0.5, 0.3, 0.4))
    assert plus_levels(L, 0.0, 3.0) == [(0.0, 0.5), (1.0, 0.2), (3.0, 0.3)]
    assert plus_levels(StepLambda.constant(0.2), 0.0, 5.0) == [(0.0, 0.8), (5.0, 0.2)]


def test_definition_eval_matches_library(rng):
    for _ in range(200):
        K = int(rng.integers(1, 8))
        w = rng.dirichlet(np.ones(K))
        sp = FiniteSpace(tuple(f"w{k}" for k in range(K)), {"P": w})
        X = rng.integers(-5, 6, size=K).astype(float)
        kind = RHO_KINDS[int(rng.integers(len(RHO_KINDS)))]
        spec = random_rho(rng, kind, "P")
        assert abs(definition_eval(sp, "P", spec, X) - evaluate(sp, spec, X)) <= 1e-9 or (
            definition_eval(sp, "P", spec, X) == evaluate(sp, spec, X)
        )


def test_definition_eval_constants(uniform4, rng):
    for _ in range(20):
        L = random_lambda(rng, 12)
        assert definition_eval(uniform4, "P", MeasureSpec("lambda_var", "P", lam=L), np.full(4, 2.5)) == 2.5
    p = 0.25
    assert definition_eval(uniform4, "P", MeasureSpec("lambda_var", "P", lam=StepLambda.constant(p)), X4) == 3.0
