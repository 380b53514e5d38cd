import math

import numpy as np
import pytest

from lambda_share.lambda_fn import (
    DistortionFunction,
    LambdaError,
    StepLambda,
    UtilityFunction,
    cdf_transform,
    check_bounds,
    generalized_inverse,
    lambda_bar,
    lambda_chain,
    lambda_diamond,
    lambda_star,
    running_inf,
)

STEP = StepLambda((2.0,), (0.5, 0.25))


def test_eval_is_right_continuous():
    assert StepLambda.constant(0.3)(17.0) == 0.3
    assert STEP(2.0) == 0.25
    assert STEP(1.999) == 0.5


def test_normalisation_drops_redundant_breakpoints():
    L = StepLambda((0.0, 1.0), (0.2, 0.2, 0.4))
    assert L.breakpoints == (1.0,)
    with pytest.raises(LambdaError):
        StepLambda((1.0, 0.0), (0.1, 0.2, 0.3))
    with pytest.raises(LambdaError):
        StepLambda((), (1.2,))


def test_running_inf():
    dec = StepLambda((0.0, 1.0), (0.4, 0.3, 0.1))
    r = running_inf(dec, -5.0)
    assert r.breakpoints == dec.breakpoints and r.values == dec.values
    inc = StepLambda((0.0,), (0.1, 0.3))
    assert running_inf(inc, -1.0).values == (0.1,)
    L = StepLambda((0.0, 1.0), (0.2, 0.6, 0.1))
    r = running_inf(L, -1.0)
    assert r.breakpoints == (1.0,) and r.values == (0.2, 0.1)


def test_cdf_transform_two_level_shape():
    lam1, lam2, x1 = 0.3, 0.7, 2.0
    L = StepLambda((x1,), (1 - lam1, 1 - lam2))
    F = cdf_transform(L, 0.0, 5.0)
    assert F(-0.1) == 0.0
    assert abs(F(0.0) - lam1) < 1e-12 and abs(F(1.9) - lam1) < 1e-12
    assert abs(F(2.0) - lam2) < 1e-12 and abs(F(4.9) - lam2) < 1e-12
    assert F(5.0) == 1.0
    assert generalized_inverse(F, lam1) == 0.0
    assert generalized_inverse(F, (lam1 + lam2) / 2) == 2.0
    assert generalized_inverse(F, lam2 + 1e-6) == 5.0


def test_cdf_transform_degenerate_and_increasing():
    F = cdf_transform(STEP, 1.0, 1.0)
    assert F(0.99) == 0.0 and F(1.0) == 1.0
    assert generalized_inverse(F, 0.4) == 1.0
    inc = StepLambda((0.0,), (0.1, 0.3))
    F = cdf_transform(inc, 1.0, 3.0)
    assert abs(F(1.0) - 0.7) < 1e-12 and abs(F(2.9) - 0.7) < 1e-12 and F(3.0) == 1.0
    with pytest.raises(LambdaError):
        cdf_transform(STEP, 2.0, 1.0)
    with pytest.raises(LambdaError):
        generalized_inverse(F, 1.0)


def test_lambda_star_examples():
    a = lambda_star([StepLambda.constant(0.2), StepLambda.constant(0.3)])
    assert a.function.values == (0.5,)
    a = lambda_star([StepLambda.constant(0.3), StepLambda((0.0,), (0.1, 0.2))])
    assert a.function.values == (0.5,)
    with pytest.raises(LambdaError):
        lambda_star([StepLambda.constant(0.0)])


def test_lambda_star_against_grid_sup():
    L1 = StepLambda((0.0, 2.0), (0.1, 0.2, 0.35))
    L2 = StepLambda((1.0,), (0.15, 0.3))
    agg = lambda_star([L1, L2])
    grid = np.arange(-6.0, 8.0, 0.25)
    for x in np.arange(-4.0, 6.0, 0.5):
        best = max(min(1.0, L1(y) + L2(x - y)) for y in grid)
        assert abs(agg(x) - best) < 1e-12
        y = agg.decompose(x)
        assert abs(sum(y) - x) < 1e-12
        assert abs(min(1.0, L1(y[0]) + L2(y[1])) - agg(x)) < 1e-12


def test_lambda_diamond():
    Ls = [StepLambda((0.0,), (0.1, 0.2)), StepLambda.constant(0.25)]
    assert lambda_diamond(Ls, [1, 1], 1).function == lambda_star(Ls).function
    d = lambda_diamond([StepLambda.constant(0.1)] * 2, [0.8, 0.8], 0.6)
    assert abs(d.function.values[0] - 4 / 15) < 1e-12
    with pytest.raises(LambdaError):
        lambda_diamond(Ls, [1, 1], 0.0)


def test_lambda_chain():
    L1, L2 = StepLambda.constant(0.3), StepLambda((0.0,), (0.1, 0.2))
    c = lambda_chain([L1, L2], [0.0])
    assert c.breakpoints == (0.0,) and np.allclose(c.values, (0.4, 0.5))
    c = lambda_chain([L1, L2], [1.0])
    assert c.breakpoints == (1.0,) and np.allclose(c.values, (0.4, 0.5))
    consts = [StepLambda.constant(v) for v in (0.1, 0.2, 0.3)]
    for pre in ([0, 0], [3, -2]):
        assert np.allclose(lambda_chain(consts, pre).values, (0.6,))


def test_lambda_bar():
    L, L1 = StepLambda.constant(0.1), StepLambda((0.0,), (0.2, 0.3))
    b = lambda_bar(L, L1, 1.0, 1, 1, 1)
    assert b.breakpoints == (1.0,) and np.allclose(b.values, (0.3, 0.4))
    b = lambda_bar(L, StepLambda.constant(0.1), 0.0, 0.8, 0.8, 0.6)
    assert np.allclose(b.values, (0.16 / 0.6,))
    with pytest.raises(LambdaError):
        lambda_bar(L, L1, 0.0, 1, 1, 0)


def test_check_bounds():
    check_bounds(STEP)
    for bad in (StepLambda.constant(0.0), StepLambda((0.0,), (0.5, 1.0))):
        with pytest.raises(LambdaError):
            check_bounds(bad)


def test_distortion_and_utility():
    g = DistortionFunction(((0, 0), (0.5, 0.8), (1, 1)))
    assert g.is_concave() and abs(g(0.25) - 0.4) < 1e-12
    assert not DistortionFunction(((0, 0), (0.5, 0.2), (1, 1))).is_concave()
    with pytest.raises(LambdaError):
        DistortionFunction(((0, 0), (1, 0.9)))
    u = UtilityFunction(((0, 0), (1, 2), (3, 3)), -1.0)
    assert u(-5) == -1.0 and u(0.5) == 1.0 and u(5) == 4.0
    v = UtilityFunction(((0, 0), (1, 2)), -math.inf)
    assert v(-1) == -2.0 and v(-math.inf) == -math.inf
    for obj in (g, u, v):
        assert type(obj).from_json(obj.to_json()) == obj
    for L in (STEP, StepLambda.constant(0.2)):
        assert StepLambda.from_json(L.to_json()) == L


def test_step_lambda_grid_invariants():
    L = StepLambda((-1.0, 0.5, 2.0), (0.3, 0.6, 0.2, 0.4))
    for x in (-3.0, 0.0, 1.0):
        r = running_inf(L, x)
        zs = np.linspace(x, 5.0, 40)
        vals = [r(z) for z in zs]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert all(r(z) <= L(z) + 1e-15 for z in zs)
        assert all(abs(r(z) - min(L(t) for t in np.append(zs[zs <= z], [x]))) < 1e-12 for z in zs)
