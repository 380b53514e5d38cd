"""Acceptance criteria 1 to 10, each with its tolerance and time budget.

Every test records one PASS/FAIL line that pytest prints in an
"acceptance criteria" section at the end of the run.
"""

import math
import time
from collections import Counter

import numpy as np

from lambda_share import EventSet, FiniteSpace, MeasureSpec, StepLambda, evaluate
from lambda_share.cli import cmd_verify
from lambda_share.infconv import (
    check_witness,
    cor2_distortion,
    cor2_lvarplus,
    cor2_utility,
    cor3_es,
    cor3_utility,
    finiteness_general,
    finiteness_monotone,
    g_comonotone,
    g_countermonotone,
    g_curve,
    g_independent,
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
)
from lambda_share.infconv.result import is_descending
from lambda_share.infconv.thone import conditional_space, rebelieve
from lambda_share.instances import (
    RHO_KINDS,
    abscont_instance,
    composition,
    conditional_instance,
    lvar_instance,
    lvar_rho_instance,
    random_lambda,
    random_rho,
    step_instance,
)
from lambda_share.lambda_fn import DistortionFunction, UtilityFunction
from lambda_share.oracle import brute_infconv, definition_eval
from lambda_share.prob_core import conditional_measure, radon_nikodym

TOL = 1e-9
NEG = -math.inf


def same(a: float, b: float) -> bool:
    return a == b or (math.isfinite(a) and math.isfinite(b) and abs(a - b) <= TOL)


def verdict(record, number, failures, detail, seconds, limit):
    passed = not failures and seconds < limit
    record(number, passed, detail, seconds, limit)
    assert not failures, f"{len(failures)} disagreements, first: {failures[:3]}"
    assert seconds < limit, f"took {seconds:.1f} s, budget {limit} s"


def space_of(weights: dict) -> FiniteSpace:
    K = len(next(iter(weights.values())))
    return FiniteSpace(tuple(f"w{k}" for k in range(K)), weights)


def random_event(rng, K, p=0.75) -> EventSet:
    while True:
        m = (rng.random(K) < p).astype(float)
        if m.sum() > 0:
            return EventSet(m)


def random_utility(rng, floor_inf=0.3) -> UtilityFunction:
    """Increasing, piecewise linear, slopes between 1/4 and 3."""
    xs = np.sort(rng.choice(np.arange(-3, 8), size=3, replace=False)).astype(float)
    slopes = rng.integers(1, 13, size=2) / 4
    us = [0.0, slopes[0] * (xs[1] - xs[0])]
    us.append(us[1] + slopes[1] * (xs[2] - xs[1]))
    floor = -math.inf if rng.random() < floor_inf else -float(rng.integers(0, 3))
    return UtilityFunction(tuple(zip(xs, us)), floor)


def random_distortion(rng) -> DistortionFunction:
    if rng.random() < 0.4:
        return DistortionFunction.expected_shortfall(int(rng.integers(1, 13)) / 12)
    c = int(rng.integers(2, 12)) / 12
    a = c * rng.random()
    b = a + (1 - a) * rng.random() if rng.random() < 0.6 else a * rng.random()
    return DistortionFunction(((0.0, 0.0), (a, b), (c, 1.0), (1.0, 1.0)))


# ---------------------------------------------------------------- 1


def measure_case(rng):
    K = int(rng.integers(1, 11))
    if rng.random() < 0.5:
        w = composition(rng, 12 * K, K)
    else:
        w = rng.dirichlet(np.ones(K))
    sp = space_of({"P": w})
    X = rng.integers(-5, 10, size=K).astype(float)
    kind = ["var", "es", "les", "lambda_var", "lambda_var_plus", "distortion", "expected_utility",
            "co_var", "co_es", "co_lambda_var"][int(rng.integers(10))]
    alpha = int(rng.integers(1, 13)) / 12
    B = random_event(rng, K, 0.6) if kind.startswith("co_") else None
    if kind in ("var", "co_var"):
        spec = MeasureSpec(kind, "P", alpha=int(rng.integers(0, 13)) / 12, event=B)
    elif kind in ("es", "les", "co_es"):
        spec = MeasureSpec(kind, "P", alpha=alpha, event=B)
    elif kind in ("lambda_var", "lambda_var_plus", "co_lambda_var"):
        literal = kind == "co_lambda_var" and bool(rng.random() < 0.5)
        spec = MeasureSpec(kind, "P", lam=random_lambda(rng, 12, span=(-5, 9)), event=B, literal=literal)
    elif kind == "distortion":
        spec = MeasureSpec(kind, "P", g=random_distortion(rng))
    else:
        spec = MeasureSpec(kind, "P", u=random_utility(rng))
    return sp, spec, X


def test_criterion_01_definitions(record_criterion):
    rng = np.random.default_rng(101)
    failures, kinds = [], Counter()
    t0 = time.perf_counter()
    for i in range(1000):
        sp, spec, X = measure_case(rng)
        kinds[spec.kind] += 1
        a, b = evaluate(sp, spec, X), definition_eval(sp, "P", spec, X)
        if not same(a, b):
            failures.append((i, spec.kind, a, b))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 1, failures,
            f"library vs definitions on 1000 instances, {len(kinds)} kinds, {len(failures)} mismatches", dt, 10)


# ---------------------------------------------------------------- 2


def test_criterion_02_general_vs_oracle(record_criterion):
    rng = np.random.default_rng(202)
    failures, neg = [], 0
    t0 = time.perf_counter()
    for i, n in enumerate([2] * 200 + [3] * 50):
        inst = lvar_instance(rng, n, int(rng.integers(2, 9)))
        g = gamma_general(inst.space, inst.agents, inst.X)
        o = brute_infconv(inst.space, inst.agents, inst.X)
        neg += g.value == NEG
        if not same(g.value, o.value):
            failures.append((i, n, g.value, o.value))
        elif g.witness is not None and not check_witness(g, inst.agents, inst.X, inst.space)[0]:
            failures.append((i, n, "witness"))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 2, failures,
            f"general = oracle on 200 two-agent and 50 three-agent instances ({neg} at -inf)", dt, 60)


# ---------------------------------------------------------------- 3


def homogeneous_case(rng, i):
    K = int(rng.integers(2, 9))
    if i % 4 == 3:
        # one increasing and one decreasing Lambda on a shared belief
        sp = space_of({"P": composition(rng, 12, K)})
        agents = [MeasureSpec("lambda_var", "P", lam=random_lambda(rng, 12, pieces=3, shape=s, hi=4))
                  for s in ("increasing", "decreasing")]
        return sp, agents, rng.integers(0, 10, size=K).astype(float)
    shape = ("any", "increasing", "decreasing")[i % 4]
    inst = lvar_instance(rng, int(rng.integers(2, 4)), K, homogeneous=True, shape=shape)
    return inst.space, inst.agents, inst.X


def test_criterion_03_homogeneous(record_criterion):
    rng = np.random.default_rng(303)
    failures, neg = [], 0
    t0 = time.perf_counter()
    for i in range(200):
        sp, agents, X = homogeneous_case(rng, i)
        h = infconv_homogeneous(sp, "P", agents, X)
        c = infconv_chain(sp, "P", agents, X)
        g = gamma_general(sp, agents, X)
        neg += h.value == NEG
        if not (same(h.value, c.value) and same(h.value, g.value)):
            failures.append((i, h.value, c.value, g.value))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 3, failures,
            f"homogeneous = chain = general on 200 instances ({neg} at -inf)", dt, 30)


# ---------------------------------------------------------------- 4


def boundary_family(t: float):
    """Ten atoms with P(B1) = P(B2) = 1/2 and P(B1 and B2) = t."""
    P = np.r_[[t / 2] * 2, [(0.5 - t) / 3] * 6, [t / 2] * 2]
    sp = space_of({"P": P})
    B1, B2 = EventSet.from_atoms(10, [0, 1, 2, 3, 4]), EventSet.from_atoms(10, [0, 1, 5, 6, 7])
    sp, _ = conditional_measure(sp, "P", B1, "Q1")
    sp, _ = conditional_measure(sp, "P", B2, "Q2")
    return sp, [B1, B2]


def test_criterion_04_conditional(record_criterion):
    rng = np.random.default_rng(404)
    failures, neg = [], 0
    t0 = time.perf_counter()
    for i in range(100):
        inst, events = conditional_instance(rng, int(rng.integers(2, 4)), int(rng.integers(2, 9)))
        alphas = [a.lam.values[0] for a in inst.agents]
        v = infconv_var_conditional(inst.space, "P", events, alphas, inst.X)
        c = infconv_conditional(inst.space, "P", events, inst.agents, inst.X)
        g = gamma_general(inst.space, inst.agents, inst.X)
        neg += v.value == NEG
        if not (same(v.value, c.value) and same(v.value, g.value)):
            failures.append((i, v.value, c.value, g.value))
    # alpha_i = 1/8 each: the level (1/8 + 1/8) (1/2) / t reaches one exactly at t = 1/8
    X = np.array([3.0, 7, 1, 9, 4, 6, 2, 8, 5, 0])
    alpha = 0.125
    agents = [MeasureSpec("lambda_var", q, lam=StepLambda.constant(alpha)) for q in ("Q1", "Q2")]
    for t in (0.0625, 0.1, 0.125 - 1e-9, 0.125, 0.125 + 1e-9, 0.13, 0.25, 0.45):
        sp, Bs = boundary_family(t)
        vals = [infconv_var_conditional(sp, "P", Bs, [alpha, alpha], X).value,
                infconv_conditional(sp, "P", Bs, agents, X).value,
                gamma_general(sp, agents, X).value]
        expect_neg = t <= 0.125
        if any((v == NEG) != expect_neg for v in vals):
            failures.append(("boundary", t, vals))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 4, failures,
            f"closed form = conditional = general on 100 instances ({neg} at -inf); boundary at t = 1/8 exact",
            dt, 30)


# ---------------------------------------------------------------- 5


def coupled_space(rng, how: str):
    K = int(rng.integers(2, 7))
    q1 = composition(rng, 12, K)
    X = np.sort(rng.choice(np.arange(0, 20), size=K, replace=False)).astype(float)
    eta = np.sort(rng.integers(0, 6, size=K).astype(float))
    eta[-1] += 1.0
    if how == "countermonotone":
        eta = eta[::-1]
    q2 = eta * q1 / float(eta @ q1)
    return space_of({"Q1": q1, "Q2": q2}), X


def independent_space(rng):
    kx, ke = int(rng.integers(2, 4)), int(rng.integers(2, 4))
    px, pe = composition(rng, 12, kx), composition(rng, 12, ke)
    xv = np.sort(rng.choice(np.arange(0, 10), size=kx, replace=False)).astype(float)
    ev = rng.integers(0, 5, size=ke).astype(float) + np.eye(ke)[0]
    q1 = np.outer(px, pe).ravel()
    eta = np.tile(ev, kx)
    q2 = eta * q1 / float(eta @ q1)
    return space_of({"Q1": q1, "Q2": q2}), np.repeat(xv, ke)


def test_criterion_05_abscont(record_criterion):
    rng = np.random.default_rng(505)
    failures, neg = [], 0
    t0 = time.perf_counter()
    for i in range(100):
        inst = abscont_instance(rng, int(rng.integers(2, 7)))
        L1, L2 = inst.agents[0].lam, inst.agents[1].lam
        a = infconv_abscont(inst.space, "Q1", "Q2", L1, L2, inst.X)
        g = gamma_general(inst.space, inst.agents, inst.X)
        neg += a.value == NEG
        if not same(a.value, g.value):
            failures.append((i, a.value, g.value))
    checks = 0
    forms = {"comonotone": g_comonotone, "countermonotone": g_countermonotone, "independent": g_independent}
    for how, closed in forms.items():
        for _ in range(10):
            sp, X = independent_space(rng) if how == "independent" else coupled_space(rng, how)
            eta = radon_nikodym(sp, "Q2", "Q1").values
            for x in np.unique(X)[:-1]:
                top = float(sp.weights("Q1")[X > x].sum())
                for t in np.linspace(0.0, top, 7):
                    checks += 1
                    a, b = g_curve(sp, "Q1", eta, X, x, t), closed(sp, "Q1", eta, X, x, t)
                    if abs(a - b) > TOL:
                        failures.append((how, x, t, a, b))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 5, failures,
            f"abscont = general on 100 instances ({neg} at -inf); {checks} closed-form g checks", dt, 30)


# ---------------------------------------------------------------- 6


def conditional_pair(rng, need_overlap=True):
    while True:
        K = int(rng.integers(2, 8))
        P = composition(rng, 12, K)
        sp = space_of({"P": P})
        B1, B2 = random_event(rng, K), random_event(rng, K)
        if not need_overlap or float(B1.membership * B2.membership @ P) > 0:
            return sp, B1, B2, random_lambda(rng, 12, hi=5), rng.integers(0, 10, size=K).astype(float)


def exhaustive_conditional(sp, B1, B2, L, rho, X):
    sp2, q1, q2 = conditional_space(sp, "P", B1, B2)
    return infconv_lvar_rho(sp2, q1, L, rebelieve(rho, q2), X).value


def beta_of(diag) -> float:
    lam, p1, p2, p12 = diag["lambda_plus"], diag["p_b1"], diag["p_b2"], diag["p_b1b2"]
    return ((1 - lam) * p1 - (p1 - p12)) / p2


def density_pair(rng, i):
    K = int(rng.integers(2, 8))
    q1 = composition(rng, 12, K)
    q2 = q1 if i % 4 == 0 else composition(rng, 12, K, positive=False)
    return space_of({"Q1": q1, "Q2": q2}), random_lambda(rng, 12, hi=6), rng.integers(0, 10, size=K).astype(float)


def test_criterion_06_one_lambda_var_and_rho(record_criterion):
    rng = np.random.default_rng(606)
    failures, counts = [], Counter()
    t0 = time.perf_counter()

    def compare(branch, i, a, b):
        counts[branch] += 1
        counts[branch + " at -inf"] += b == NEG
        if not same(a, b):
            failures.append((branch, i, a, b))

    for i in range(100):
        inst = lvar_rho_instance(rng, int(rng.integers(2, 6)), RHO_KINDS[i % len(RHO_KINDS)])
        r = infconv_lvar_rho(inst.space, "Q1", inst.agents[0].lam, inst.agents[1], inst.X)
        compare("set search vs oracle", i, r.value, brute_infconv(inst.space, inst.agents, inst.X).value)
    for i in range(100):
        sp, B1, B2, L, X = conditional_pair(rng, need_overlap=False)
        rho = random_rho(rng, RHO_KINDS[i % len(RHO_KINDS)], "P")
        c = infconv_lvar_rho_conditional(sp, "P", B1, B2, L, rho, X)
        compare("conditional set", i, c.value, exhaustive_conditional(sp, B1, B2, L, rho, X))
    for i in range(100):
        sp, B1, B2, L, X = conditional_pair(rng)
        g = random_distortion(rng)
        c = cor2_distortion(sp, "P", B1, B2, L, g, X)
        reason = (c.certificate or {}).get("reason")
        counts["distortion: " + str(reason)] += 1
        if len(g.knots) == 3 and g.knots[1][0] > beta_of(c.diagnostics):
            counts["distortion: ES with alpha > beta"] += 1
        compare("distortion", i, c.value, exhaustive_conditional(sp, B1, B2, L, MeasureSpec("distortion", "P", g=g), X))
    for i in range(100):
        sp, B1, B2, L, X = conditional_pair(rng)
        u = random_utility(rng)
        c = cor2_utility(sp, "P", B1, B2, L, u, X)
        counts["utility: " + str((c.certificate or {}).get("reason"))] += 1
        compare("utility", i, c.value, exhaustive_conditional(sp, B1, B2, L, MeasureSpec("expected_utility", "P", u=u), X))
    for i in range(100):
        sp, B1, B2, L, X = conditional_pair(rng)
        L1 = random_lambda(rng, 12, hi=5)
        c = cor2_lvarplus(sp, "P", B1, B2, L, L1, X)
        counts["lambda_var_plus: " + str((c.certificate or {}).get("reason"))] += 1
        compare("lambda_var_plus", i, c.value,
                exhaustive_conditional(sp, B1, B2, L, MeasureSpec("lambda_var_plus", "P", lam=L1), X))
    for i in range(100):
        sp, L, X = density_pair(rng, i)
        alpha = int(rng.integers(1, 12)) / 12
        c = cor3_es(sp, "Q1", "Q2", L, alpha, X)
        compare("density ES", i, c.value, infconv_lvar_rho(sp, "Q1", L, MeasureSpec("es", "Q2", alpha=alpha), X).value)
    for i in range(100):
        sp, L, X = density_pair(rng, i)
        u = random_utility(rng)
        c = cor3_utility(sp, "Q1", "Q2", L, u, X)
        compare("density utility", i, c.value,
                infconv_lvar_rho(sp, "Q1", L, MeasureSpec("expected_utility", "Q2", u=u), X).value)
    dt = time.perf_counter() - t0
    needed = ["distortion: Q1(B2) <= lambda_plus", "distortion: g(beta) < 1", "distortion: ES with alpha > beta",
              "utility: Q1(B2) <= lambda_plus", "lambda_var_plus: Q1(B2) <= lambda_plus"]
    missing = [b for b in needed if counts[b] == 0]
    if missing:
        failures.append(("branches never reached", missing))
    by_branch = Counter(f[0] for f in failures)
    above = Counter(f[0] for f in failures if len(f) == 4 and f[2] > f[3])
    detail = "7 routes x 100 instances; -inf branches hit: " + ", ".join(
        f"{b} {counts[b]}" for b in needed) + "; mismatches " + (
        ", ".join(f"{k} {v} ({above[k]} with the closed form above)" for k, v in sorted(by_branch.items()))
        if by_branch else "none")
    verdict(record_criterion, 6, failures, detail, dt, 120)


# ---------------------------------------------------------------- 7


def test_criterion_07_lambda_var_plus(record_criterion):
    rng = np.random.default_rng(707)
    failures, neg, equal, redrawn = [], 0, 0, 0
    widest = {"coupling": 0, "step": 0}
    t0 = time.perf_counter()
    for i in range(100):
        while True:
            inst = step_instance(rng, int(rng.integers(2, 5)), RHO_KINDS[i % len(RHO_KINDS)])
            L, rho = inst.agents[0].lam, inst.agents[1]
            a = infconv_lvarplus_rho(inst.space, "Q1", L, rho, inst.X)
            # the coupling's refinement defines the instance size
            if a.witness is None or a.witness.space.n <= 6:
                break
            redrawn += 1
        b = infconv_lvarplus_step(inst.space, "Q1", L, rho, inst.X)
        o = brute_infconv(inst.space, inst.agents, inst.X)
        neg += a.value == NEG
        equal += same(a.value, o.value)
        for name, res in (("coupling", a), ("step", b)):
            if res.witness is not None:
                widest[name] = max(widest[name], res.witness.space.n)
        if not same(a.value, b.value):
            failures.append(("coupling vs step", i, a.value, b.value))
        if a.value > o.value + TOL or b.value > o.value + TOL:
            failures.append(("above an enumerated coupling", i, a.value, b.value, o.value))
    for i in range(100):
        inst = lvar_rho_instance(rng, int(rng.integers(2, 5)), RHO_KINDS[i % len(RHO_KINDS)], plus=True,
                                 shape="increasing")
        L, rho = inst.agents[0].lam, inst.agents[1]
        a = infconv_lvarplus_rho(inst.space, "Q1", L, rho, inst.X)
        t = infconv_lvar_rho(inst.space, "Q1", L, rho, inst.X)
        if not same(a.value, t.value):
            failures.append(("increasing", i, a.value, t.value))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 7, failures,
            f"coupling = step on 100 two-level instances (refined atoms up to {widest['coupling']} for the "
            f"coupling, {widest['step']} for the step witness, {redrawn} redrawn; {neg} at -inf, "
            f"{equal} equal to the oracle, none above it); increasing = set search on 100", dt, 120)


# ---------------------------------------------------------------- 8


def singular_construction(rng, i):
    K = int(rng.integers(2, 7))
    n = 2 if i % 2 or K < 3 else 3
    blocks = np.array_split(rng.permutation(K), n)
    measures = {"P": np.full(K, 1 / K)}
    for j, blk in enumerate(blocks):
        w = np.zeros(K)
        w[blk] = composition(rng, 12, len(blk)) if len(blk) <= 12 else 1 / len(blk)
        measures[f"Q{j + 1}"] = w
    sp = FiniteSpace(tuple(f"w{k}" for k in range(K)), measures, reference="P")
    X = rng.integers(0, 10, size=K).astype(float)
    if i % 4 < 2:
        agents = [MeasureSpec("lambda_var", f"Q{j + 1}", lam=random_lambda(rng, 12)) for j in range(n)]
        return gamma_general(sp, agents, X)
    kind = ("var", "es", "lambda_var", "distortion")[(i // 4) % 4]
    L = random_lambda(rng, 12)
    return infconv_lvar_rho(sp, "Q1", L, random_rho(rng, kind, "Q2"), X)


def certified(res) -> bool:
    cert = res.certificate
    if cert is None:
        return False
    probes = [(p["scale"], p["objective"]) for p in cert.get("probes", [])]
    if probes:
        return len(probes) >= 2 and is_descending(probes)
    return cert.get("kind") in ("singular", "finiteness")


def test_criterion_08_mutually_singular(record_criterion):
    rng = np.random.default_rng(808)
    failures = []
    t0 = time.perf_counter()
    for i in range(20):
        res = singular_construction(rng, i)
        if res.value != NEG or not certified(res):
            failures.append((i, res.method, res.value, res.certificate))
    dt = time.perf_counter() - t0
    verdict(record_criterion, 8, failures, "20 mutually singular constructions, all -inf with descent certificates",
            dt, 5)


# ---------------------------------------------------------------- 9


def test_criterion_09_finiteness_flags(record_criterion):
    rng = np.random.default_rng(909)
    failures, raised = [], Counter()
    t0 = time.perf_counter()
    for i in range(500):
        shape = ("any", "decreasing", "increasing")[i % 3]
        inst = lvar_instance(rng, int(rng.integers(2, 4)), int(rng.integers(2, 7)), shape=shape)
        value = gamma_general(inst.space, inst.agents, inst.X).value
        tests = {"general": finiteness_general(inst.space, inst.agents)}
        if shape != "any":
            tests[shape] = finiteness_monotone(inst.space, inst.agents, shape)
        for name, flags in tests.items():
            if flags["neg_inf_certain"]:
                raised[name + " -inf"] += 1
                if value != NEG:
                    failures.append((i, name, "claimed -inf", value))
            if flags["finite_certain"]:
                raised[name + " finite"] += 1
                if value == NEG:
                    failures.append((i, name, "claimed finite", value))
    dt = time.perf_counter() - t0
    detail = "500 instances, flags raised: " + ", ".join(f"{k} {v}" for k, v in sorted(raised.items()))
    verdict(record_criterion, 9, failures, detail + f"; {len(failures)} contradicted", dt, 60)


# ---------------------------------------------------------------- 10


def test_criterion_10_witnesses(record_criterion):
    t0 = time.perf_counter()
    code, records = cmd_verify(random=100, seed=7)
    dt = time.perf_counter() - t0
    failures = [r for r in records if not r["ok"]]
    if code != 0 or len(records) != 100:
        failures.append(("exit", code, len(records)))
    witnesses = sum(len(r["witness"]) for r in records)
    pareto = sum(len(r["pareto"]) for r in records)
    bad = [r for r in records for m in r["witness"].values() if m != "ok"]
    failures.extend(bad)
    verdict(record_criterion, 10, failures,
            f"verify --random 100 --seed 7 exit {code}; {witnesses} allocations checked, "
            f"{pareto} Pareto searches, none improved", dt, 600)
