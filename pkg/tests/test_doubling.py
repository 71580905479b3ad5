import math

import pytest

from banditstop.distributions import BoundedDistribution
from banditstop.doubling import DoublingConfig, epsilon_floor, epsilon_schedule, run_doubling
from banditstop.environments import ProphetAction, ProphetEnv, ProphetInstance
from banditstop.trace import Session

INST = ProphetInstance((BoundedDistribution.uniform(), BoundedDistribution.uniform()))


def test_floor_and_schedule():
    assert epsilon_floor(10**6, 1, 0) == pytest.approx(0.0138155, abs=1e-6)
    assert epsilon_schedule(10**6, 1, 0) == [2.0**-k for k in range(7)]
    assert epsilon_floor(10**6, 3, 5) == pytest.approx(3**2.5 * math.log(10**6) / 1000)
    assert epsilon_schedule(100, 10, 7) == []


def _cfg(T, per_phase):
    def sub(session, state, eps):
        session.play(ProphetAction((0.5,)), per_phase(eps))
        return state + [eps]

    return DoublingConfig(T, 1, 0.0, sub, lambda st: ProphetAction((0.25,)))


def test_driver_fills_horizon_with_tail():
    T = 10_000
    s = Session(ProphetEnv(INST), T)
    state = run_doubling(_cfg(T, lambda e: 10), s, [])
    assert state == epsilon_schedule(T, 1, 0)
    assert s.rounds == T
    tail = s.blocks[-1]
    assert tail.flags == "tail" and tail.count == T - 10 * len(state) and math.isnan(tail.epsilon)
    assert [b.phase for b in s.blocks[:-1]] == list(range(1, len(state) + 1))


def test_driver_stops_at_budget_mid_phase():
    T = 600
    s = Session(ProphetEnv(INST), T)
    state = run_doubling(_cfg(T, lambda e: int(300 / e)), s, [])
    assert s.rounds == T
    assert s.flags("truncated")[0] == {"round": 600, "phase": 2, "kind": "truncated", "requested": 600, "played": 300}
    assert state == [1.0]
    assert all(b.flags != "tail" for b in s.blocks)


def test_driver_never_exceeds_horizon_across_seeds():
    for T in (500, 2000, 7000):
        for per in (1, 37, 400):
            s = Session(ProphetEnv(INST, seed=T + per), T)
            run_doubling(_cfg(T, lambda e, per=per: per), s, [])
            assert s.rounds == T
