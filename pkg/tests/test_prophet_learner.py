import math

import numpy as np
import pytest

from banditstop.concentration import dkw_radius
from banditstop.distributions import BoundedDistribution, EmpiricalCdf
from banditstop.environments import ProphetAction, ProphetEnv, ProphetInstance
from banditstop.oracle import one_round_regret, prophet_opt
from banditstop.prophet_learner import (
    CdfEstimates,
    ConfidenceIntervals,
    ProphetLearner,
    affine_cut,
    init2,
    init_general,
    isa2,
    isa_general,
)
from banditstop.trace import Session

U = BoundedDistribution.uniform()
TWO_POINT = BoundedDistribution.discrete([0.25, 0.75], [0.5, 0.5])
HALF = BoundedDistribution.atom(0.5)
T6 = 10**6


def _session(inst, seed=0, T=T6, budget=None):
    return Session(ProphetEnv(inst, seed=seed), T, budget, regret_fn=lambda a: one_round_regret(inst, a))


def test_affine_cut_cases():
    assert affine_cut(0.0, 0.01, 0.2, 0.8, 0.05, 0.05) == (0.2, 0.8, False)
    assert affine_cut(0.0, 0.2, 0.2, 0.8, 0.05, 0.05) == (0.2, 0.2, True)
    a, b, empty = affine_cut(1.0, -0.5, 0.0, 1.0, 0.1, 0.1)
    assert (a, b, empty) == (pytest.approx(0.4), pytest.approx(0.6), False)
    # the whole band lies left of the interval: collapse to the clamped crossing
    assert affine_cut(1.0, -0.1, 0.5, 0.9, 0.01, 0.01) == (0.5, 0.5, True)
    with pytest.raises(ValueError):
        affine_cut(-1.0, 0.0, 0.0, 1.0, 0.1, 0.1)


def test_intervals_helpers():
    iv = ConfidenceIntervals([0.2, 0.4], [0.6, 0.4])
    assert iv.midpoints() == [0.4, 0.4] and iv.widths() == [pytest.approx(0.4), 0.0]
    assert iv.contains([0.3, 0.5]) == [True, False]
    assert ConfidenceIntervals([0.3, 0.4], [0.5, 0.4]).within(iv)
    with pytest.raises(ValueError):
        ConfidenceIntervals([0.5], [0.4])


def test_init2_atom_second_value():
    for seed in range(10):
        s = _session(ProphetInstance((U, HALF)), seed)
        fhat, iv = init2(s, 4)
        assert iv.contains([0.5])[0]
        assert iv.widths()[0] <= T6**-0.25 + 1e-15
        assert s.rounds == 2 * math.ceil(4 * 1000 * math.log(T6))


def test_init2_cdf_error_within_dkw():
    inst = ProphetInstance((U, HALF))
    ok = 0
    for seed in range(100):
        s = _session(inst, seed, T=10**4)
        fhat, _ = init2(s, 4)
        xs = fhat.xs
        sup = max(np.max(np.abs(fhat.cdf(xs) - xs)), np.max(np.abs(fhat.cdf_left(xs) - xs)))
        ok += sup <= dkw_radius(fhat.n, 0.01)
    assert ok >= 99


def test_isa2_zero_slope_keeps_interval():
    s = _session(ProphetInstance((TWO_POINT, HALF)))
    f = EmpiricalCdf([0.25, 0.75])
    rep = isa2(s, ConfidenceIntervals([0.4], [0.6]), f, 0.05, 4)
    assert (rep.refined.lo, rep.refined.hi) == ([0.4], [0.6])
    assert rep.delta_hat[0][0] == 0.0 and rep.flags == []


def test_isa2_uniform_atom_refinement_has_small_regret():
    inst = ProphetInstance((U, HALF))
    s = _session(inst, seed=3)
    fhat, _ = init2(s, 4)
    # delta(tau) = tau - 1/2 on [0, 1], so the 5 eps band is about [0.25, 0.75]
    rep = isa2(s, ConfidenceIntervals([0.0], [1.0]), fhat, 0.05, 4)
    lo, hi = rep.refined.lo[0], rep.refined.hi[0]
    assert lo == pytest.approx(0.25, abs=0.02) and hi == pytest.approx(0.75, abs=0.02)
    for tau in np.linspace(lo, hi, 21):
        assert one_round_regret(inst, ProphetAction((tau,))) <= 10 * 0.05
    assert rep.rounds_used == 2 * math.ceil(4 * math.log(T6) / 0.05**2)


def test_isa2_bounding_function_is_nondecreasing():
    inst = ProphetInstance((TWO_POINT, U))
    s = _session(inst, seed=1)
    fhat, _ = init2(s, 4)
    for eps in (0.2, 0.1, 0.05):
        rep = isa2(s, ConfidenceIntervals([0.1], [0.9]), fhat, eps, 4)
        assert rep.delta_hat[0][0] >= 0
        assert rep.refined.within(ConfidenceIntervals([0.1], [0.9]))


def test_init_general_widths_and_atom_containment():
    inst = ProphetInstance(tuple(BoundedDistribution.atom(v) for v in (0.3, 0.6, 0.4)))
    opt, th = prophet_opt(inst)
    n, w = 3, T6**-0.25 / 30
    for seed in range(3):
        s = _session(inst, seed)
        est, iv = init_general(s, n, 4)
        assert all(iv.contains(th))
        for i, width in enumerate(iv.widths()):
            assert width == pytest.approx((2 * n - 2 * i - 2) * w, abs=1e-15)


def test_init_general_uniform_containment():
    inst = ProphetInstance((U, U, U))
    _, th = prophet_opt(inst)
    hits = sum(all(init_general(_session(inst, seed, T=10**4), 3, 4)[1].contains(th)) for seed in range(100))
    assert hits >= 95


def test_isa_general_atom_instance_keeps_optimum():
    inst = ProphetInstance(tuple(BoundedDistribution.atom(v) for v in (0.3, 0.6, 0.4)))
    _, th = prophet_opt(inst)
    s = _session(inst)
    est, _ = init_general(s, 3, 4)
    rep = isa_general(s, ConfidenceIntervals([0.2, 0.2], [0.9, 0.9]), est, 0.05, 4)
    assert all(rep.refined.contains(th))
    assert all(sl >= 0 for sl, _ in rep.delta_hat)


def test_isa_general_plays_inside_intervals_and_regret_small():
    inst = ProphetInstance((U, TWO_POINT, BoundedDistribution.uniform(0.1, 0.7)))
    _, th = prophet_opt(inst)
    iv = ConfidenceIntervals([0.45, 0.3], [0.85, 0.6])
    s = _session(inst, seed=5)
    est, _ = init_general(s, 3, 4)
    first = len(s.blocks)
    rep = isa_general(s, iv, est, 0.05, 4)
    for b in s.blocks[first:]:
        act = ProphetAction.from_key(b.action)
        assert all(iv.contains(act.thresholds))
    assert all(rep.refined.contains(th)) and rep.refined.within(iv)
    for t0 in np.linspace(rep.refined.lo[0], rep.refined.hi[0], 5):
        for t1 in np.linspace(rep.refined.lo[1], rep.refined.hi[1], 5):
            assert one_round_regret(inst, ProphetAction((t0, t1))) <= 2 * 9 * 0.05


def test_isa_general_matches_isa2_for_two_values():
    inst = ProphetInstance((U, HALF))
    iv = ConfidenceIntervals([0.2], [0.8])
    f = EmpiricalCdf(U.sample(np.random.default_rng(0), 20_000))
    a = isa2(_session(inst, 4), iv, f, 0.05, 4)
    b = isa_general(_session(inst, 4), iv, CdfEstimates([f, None]), 0.05, 4)
    # same plays, same bounding function; only the cut constants differ
    assert a.delta_hat[0] == pytest.approx(b.delta_hat[0], abs=1e-15)
    assert b.refined.within(a.refined)


def test_learner_fills_horizon_and_is_deterministic():
    inst = ProphetInstance((U, BoundedDistribution(atoms=((0.3, 0.5), (0.9, 0.5)))))
    runs = []
    for _ in range(2):
        s = _session(inst, seed=11, T=2**14, budget=-1)
        final = ProphetLearner(2).run(s)
        assert s.rounds == 2**14
        runs.append(s.total_regret())
    assert runs[0] == runs[1]
    assert final.contains(prophet_opt(inst)[1])[0]
    # initialization takes most of this short horizon
    assert 0 < runs[0] < 0.1 * 2**14


def test_learner_general_runs_and_short_horizon():
    inst = ProphetInstance((U, U, U))
    s = _session(inst, seed=2, T=2**12, budget=-1)
    assert ProphetLearner(3).run(s) is None  # initialization alone exceeds this horizon
    assert s.rounds == 2**12
    s = _session(inst, seed=2, T=2**24, budget=-1)
    final = ProphetLearner(3).run(s)
    assert s.rounds == 2**24
    assert all(final.contains(prophet_opt(inst)[1]))
