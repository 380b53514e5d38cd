import numpy as np
import pytest

from lambda_share.prob_core import (
    AbsoluteContinuityError,
    EventSet,
    FiniteSpace,
    ProbabilityError,
    UnknownMeasureError,
    ZeroMassError,
    cdf,
    conditional_measure,
    left_quantile,
    lift,
    radon_nikodym,
    refine,
    tail_event,
    uniform_transform,
)

X4 = np.array([1.0, 2.0, 3.0, 4.0])


def test_cdf_counts_mass_at_or_below(uniform4):
    assert cdf(uniform4, "P", X4, 2.0) == 0.5
    assert cdf(uniform4, "P", X4, -10.0) == 0.0
    assert cdf(uniform4, "P", X4, 10.0) == 1.0
    assert cdf(uniform4, "P", np.array([1.0, 1.0, 3.0, 4.0]), 1.0) == 0.5


def test_cdf_unknown_measure(uniform4):
    with pytest.raises(UnknownMeasureError):
        cdf(uniform4, "Q", X4, 0.0)


def test_left_quantile(uniform4):
    assert left_quantile(uniform4, "P", X4, 0.5) == 2.0
    assert left_quantile(uniform4, "P", X4, 1.0) == 4.0
    assert left_quantile(uniform4, "P", X4, 0.51) == 3.0
    for p in (0.0, 1.5):
        with pytest.raises(ProbabilityError):
            left_quantile(uniform4, "P", X4, p)


def test_conditional_measure(uniform4):
    sp, q = conditional_measure(uniform4, "P", EventSet.from_atoms(4, [0, 1]))
    np.testing.assert_allclose(sp.weights(q), [0.5, 0.5, 0, 0])
    sp, q = conditional_measure(uniform4, "P", EventSet.full(4))
    np.testing.assert_allclose(sp.weights(q), uniform4.weights("P"))
    sp, q = conditional_measure(uniform4, "P", EventSet(np.array([1, 0.5, 0, 0])))
    np.testing.assert_allclose(sp.weights(q), [2 / 3, 1 / 3, 0, 0])
    with pytest.raises(ZeroMassError):
        conditional_measure(uniform4, "P", EventSet.empty(4))


def test_radon_nikodym():
    sp = FiniteSpace(("a", "b", "c", "d"), {"P": [0.25] * 4, "Q": [0.5, 0.5, 0, 0]})
    np.testing.assert_allclose(radon_nikodym(sp, "P", "P").values, 1.0)
    np.testing.assert_allclose(radon_nikodym(sp, "Q", "P").values, [2, 2, 0, 0])
    bad = FiniteSpace(("a", "b", "c", "d"), {"D": [0, 0.5, 0.25, 0.25], "N": [0.1, 0.4, 0.25, 0.25],
                                             "R": [0.25] * 4})
    with pytest.raises(AbsoluteContinuityError) as err:
        radon_nikodym(bad, "N", "D")
    assert err.value.atom_index == 0


def test_uniform_transform_orders_by_value_then_index():
    sp = FiniteSpace.uniform(3)
    o = uniform_transform(sp, "P", np.array([3.0, 1.0, 2.0]))
    assert o.order == (1, 2, 0)
    np.testing.assert_allclose(o.lower, [2 / 3, 0, 1 / 3])
    np.testing.assert_allclose(o.upper, [1, 1 / 3, 2 / 3])
    assert uniform_transform(sp, "P", np.zeros(3)).order == (0, 1, 2)
    assert uniform_transform(sp, "P", np.array([1.0, 1.0, 2.0])).order[:2] == (0, 1)


def test_refine():
    sp = FiniteSpace.uniform(2)
    r = refine(sp, [0.25], "P")
    np.testing.assert_allclose(r.weights("P"), [0.25, 0.25, 0.5])
    assert refine(sp, [0.5], "P").n == 2
    sp4 = FiniteSpace(tuple("abcd"), {"P": [0.25] * 4, "Q": [0.1, 0.2, 0.3, 0.4]})
    r = refine(sp4, [1 / 3], "P")
    assert r.n == 5
    for m in ("P", "Q"):
        assert abs(r.weights(m).sum() - 1) < 1e-12


def test_refine_preserves_distributions(rng):
    sp = FiniteSpace(tuple("abcde"), {"P": [0.1, 0.2, 0.3, 0.15, 0.25], "Q": [0.3, 0.1, 0.2, 0.2, 0.2]})
    X = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    r = refine(sp, [0.05, 0.33, 0.71], "P", X)
    Xr = lift(r, X)
    for m in ("P", "Q"):
        for t in np.linspace(0, 6, 25):
            assert abs(cdf(sp, m, X, t) - cdf(r, m, Xr, t)) < 1e-12


def test_tail_event():
    sp = FiniteSpace.uniform(4)
    eta = np.array([1.0, 1.0, 2.0, 0.0])
    assert tail_event(sp, "P", X4, 1.5, 0.0, eta).membership.sum() == 0
    np.testing.assert_allclose(tail_event(sp, "P", X4, 1.5, 0.75, eta).membership, [0, 1, 1, 1])
    np.testing.assert_allclose(tail_event(sp, "P", X4, 1.5, 0.5, eta).membership, [0, 1, 0, 1])
    with pytest.raises(ProbabilityError):
        tail_event(sp, "P", X4, 1.5, 0.8, eta)


def test_space_invariants():
    with pytest.raises(ProbabilityError):
        FiniteSpace(("a", "b"), {"P": [0.5, 0.49]})
    with pytest.raises(ProbabilityError):
        FiniteSpace(("a", "b"), {"P": [1.5, -0.5]})
    with pytest.raises(ProbabilityError):
        FiniteSpace(("a", "b"), {"P": [1.0, 0.0]})
