import math

import numpy as np
import pytest

from lambda_share import EventSet, FiniteSpace, MeasureSpec, StepLambda
from lambda_share.infconv import (
    CapExceededError,
    InfConvError,
    check_witness,
    finiteness_general,
    finiteness_monotone,
    gamma_general,
    infconv_chain,
    infconv_conditional,
    infconv_homogeneous,
    infconv_var_conditional,
)
from lambda_share.instances import conditional_instance, lvar_instance
from lambda_share.oracle import brute_infconv
from lambda_share.prob_core import conditional_measure
from lambda_share.risk_measures import var

X4 = np.array([1.0, 2.0, 3.0, 4.0])


def lv(q, L):
    return MeasureSpec("lambda_var", q, lam=L)


def with_conditionals(space, events):
    for name, B in events.items():
        space, _ = conditional_measure(space, "P", B, name)
    return space


def same(a, b, tol=1e-9):
    return a == b == -math.inf or abs(a - b) <= tol


def test_gamma_homogeneous_constants(uniform4):
    agents = [lv("P", StepLambda.constant(0.25))] * 2
    r = gamma_general(uniform4, agents, X4)
    assert r.value == 2.0 == var(uniform4, "P", X4, 0.5)
    assert check_witness(r, agents, X4, uniform4) == (True, "ok")


def test_gamma_mutually_singular():
    sp = FiniteSpace(("a", "b", "c"), {"P": [1 / 3] * 3, "Q1": [1, 0, 0], "Q2": [0, 0.5, 0.5]}, reference="P")
    agents = [lv("Q1", StepLambda.constant(0.1)), lv("Q2", StepLambda.constant(0.2))]
    r = gamma_general(sp, agents, np.array([5.0, 1.0, 2.0]))
    assert r.value == -math.inf
    assert r.certificate is not None


def test_gamma_constant_risk(uniform4):
    agents = [lv("P", StepLambda((2.0,), (0.3, 0.1))), lv("P", StepLambda.constant(0.2))]
    assert gamma_general(uniform4, agents, np.full(4, 6.5)).value == 6.5


def test_gamma_cap(uniform4):
    agents = [lv("P", StepLambda.constant(0.2))] * 3
    with pytest.raises(CapExceededError):
        gamma_general(uniform4, agents, X4, cap=4)


def test_gamma_bad_lambda(uniform4):
    with pytest.raises(Exception):
        gamma_general(uniform4, [lv("P", StepLambda.constant(0.0))] * 2, X4)


def test_finiteness_general_flags(uniform4):
    tolerant = [lv("P", StepLambda.constant(0.5)), lv("P", StepLambda.constant(0.6))]
    f = finiteness_general(uniform4, tolerant)
    assert f["neg_inf_certain"] and not f["finite_certain"]
    cautious = [lv("P", StepLambda.constant(0.2)), lv("P", StepLambda.constant(0.3))]
    f = finiteness_general(uniform4, cautious)
    assert f["finite_certain"] and not f["neg_inf_certain"]
    sp = FiniteSpace(("a", "b"), {"P": [0.5, 0.5], "Q1": [1, 0], "Q2": [0, 1]}, reference="P")
    f = finiteness_general(sp, [lv("Q1", StepLambda.constant(0.1)), lv("Q2", StepLambda.constant(0.1))])
    assert f["neg_inf_certain"]
    assert f["ratio"] == 0.0


def test_finiteness_monotone(uniform4):
    dec = [lv("P", StepLambda((1.0,), (0.6, 0.1))), lv("P", StepLambda((2.0,), (0.5, 0.2)))]
    assert finiteness_monotone(uniform4, dec, "decreasing")["neg_inf_certain"]
    dec_small = [lv("P", StepLambda((1.0,), (0.3, 0.1))), lv("P", StepLambda((2.0,), (0.4, 0.2)))]
    assert finiteness_monotone(uniform4, dec_small, "decreasing")["finite_certain"]
    inc = [lv("P", StepLambda((1.0,), (0.1, 0.8))), lv("P", StepLambda((2.0,), (0.3, 0.5)))]
    f = finiteness_monotone(uniform4, inc, "increasing")
    assert f["neg_inf_certain"]
    assert gamma_general(uniform4, inc, X4).value == -math.inf
    with pytest.raises(InfConvError):
        finiteness_monotone(uniform4, inc, "decreasing")


def test_homogeneous_two_constants(uniform4):
    agents = [lv("P", StepLambda.constant(0.25)), lv("P", StepLambda.constant(0.5))]
    r = infconv_homogeneous(uniform4, "P", agents, X4)
    assert r.value == var(uniform4, "P", X4, 0.75)
    assert check_witness(r, agents, X4, uniform4)[0]


def test_homogeneous_single_agent(uniform4):
    L = StepLambda((2.5,), (0.5, 0.25))
    r = infconv_homogeneous(uniform4, "P", [lv("P", L)], X4)
    assert r.value == 2.0


def test_homogeneous_mixed_shapes_uniform8():
    sp = FiniteSpace.uniform(8)
    X = np.array([3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0])
    agents = [lv("P", StepLambda((2.0, 5.0), (0.1, 0.25, 0.375))), lv("P", StepLambda((3.0,), (0.375, 0.125)))]
    h = infconv_homogeneous(sp, "P", agents, X)
    assert same(h.value, gamma_general(sp, agents, X).value)
    assert same(h.value, infconv_chain(sp, "P", agents, X).value)


def test_homogeneous_belief_mismatch():
    sp = FiniteSpace(("a", "b"), {"P": [0.5, 0.5], "Q": [0.25, 0.75]}, reference="P")
    with pytest.raises(InfConvError):
        infconv_homogeneous(sp, "P", [lv("P", StepLambda.constant(0.1)), lv("Q", StepLambda.constant(0.1))], [1, 2])


def test_chain_matches_var_sum(uniform4):
    agents = [lv("P", StepLambda.constant(0.25))] * 2
    assert infconv_chain(uniform4, "P", agents, X4).value == 2.0


def test_chain_three_agents_uniform6(rng):
    sp = FiniteSpace.uniform(6)
    for _ in range(5):
        inst = lvar_instance(rng, 3, 6, D=12, homogeneous=True)
        space = FiniteSpace(sp.atoms, {"P": sp.weights("P")})
        c = infconv_chain(space, "P", inst.agents, inst.X)
        g = gamma_general(space, inst.agents, inst.X)
        assert same(c.value, g.value)


def test_conditional_disjoint():
    sp = FiniteSpace.uniform(4)
    B1, B2 = EventSet.from_atoms(4, [0, 1]), EventSet.from_atoms(4, [2, 3])
    sp = with_conditionals(sp, {"Q1": B1, "Q2": B2})
    agents = [lv("Q1", StepLambda.constant(0.1)), lv("Q2", StepLambda.constant(0.1))]
    r = infconv_conditional(sp, "P", [B1, B2], agents, X4)
    assert r.value == -math.inf
    assert r.certificate["kind"] == "singular"


def test_conditional_full_events_reduce_to_homogeneous(uniform4):
    full = EventSet.full(4)
    sp = with_conditionals(uniform4, {"Q1": full, "Q2": full})
    agents = [lv("Q1", StepLambda((2.5,), (0.5, 0.2))), lv("Q2", StepLambda.constant(0.2))]
    r = infconv_conditional(sp, "P", [full, full], agents, X4)
    h = infconv_homogeneous(uniform4, "P", [lv("P", a.lam) for a in agents], X4)
    assert same(r.value, h.value)


def test_var_conditional_four_fifteenths():
    sp = FiniteSpace.uniform(10)
    X = np.arange(1.0, 11.0)
    B1, B2 = EventSet.from_atoms(10, range(0, 8)), EventSet.from_atoms(10, range(2, 10))
    r = infconv_var_conditional(sp, "P", [B1, B2], [0.1, 0.1], X)
    # level (0.1*0.8 + 0.1*0.8)/0.6 = 4/15 under P(. | atoms 3..8)
    Q = FiniteSpace(sp.atoms, {"Q": np.r_[0, 0, [1 / 6] * 6, 0, 0], "P": sp.weights("P")}, reference="P")
    assert abs(r.value - var(Q, "Q", X, 4 / 15)) < 1e-12
    assert r.value == 7.0
    sp2 = with_conditionals(sp, {"Q1": B1, "Q2": B2})
    agents = [lv("Q1", StepLambda.constant(0.1)), lv("Q2", StepLambda.constant(0.1))]
    assert same(r.value, gamma_general(sp2, agents, X).value)
    assert same(r.value, infconv_conditional(sp2, "P", [B1, B2], agents, X).value)


def test_var_conditional_edge_cases(uniform4):
    full = EventSet.full(4)
    assert infconv_var_conditional(uniform4, "P", [full, full], [0.25, 0.5], X4).value == 1.0
    assert infconv_var_conditional(uniform4, "P", [full, full], [0.5, 0.5], X4).value == -math.inf
    sp = FiniteSpace.uniform(10)
    B1, B2 = EventSet.from_atoms(10, range(0, 6)), EventSet.from_atoms(10, range(5, 10))
    # 0.2*0.6 + 0.2*0.5 over 0.1 is well above one
    assert infconv_var_conditional(sp, "P", [B1, B2], [0.2, 0.2], np.arange(10.0)).value == -math.inf


def test_conditional_random_against_oracle(rng):
    for _ in range(10):
        inst, events = conditional_instance(rng, 2, 5)
        r = infconv_conditional(inst.space, "P", events, inst.agents, inst.X)
        o = brute_infconv(inst.space, inst.agents, inst.X)
        assert same(r.value, o.value)
