"""Phase-doubling driver shared by every learner.

Phase k runs the learner's refinement step at accuracy 2^-(k-1) and stops
once the accuracy reaches n^(alpha/2) ln T / sqrt(T).  The remaining rounds
play a fixed action chosen from the final action set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .trace import HorizonExhausted


@dataclass
class DoublingConfig:
    horizon: int
    n: int
    alpha: float
    subroutine: Callable  # (session, state, eps) -> state
    tail_action: Callable  # state -> action

    @property
    def floor(self) -> float:
        return epsilon_floor(self.horizon, self.n, self.alpha)


def epsilon_floor(horizon: int, n: int, alpha: float) -> float:
    return n ** (alpha / 2) * math.log(horizon) / math.sqrt(horizon)


def epsilon_schedule(horizon: int, n: int, alpha: float) -> list[float]:
    """Accuracies 1, 1/2, 1/4, ... strictly above the floor."""
    floor, eps, out = epsilon_floor(horizon, n, alpha), 1.0, []
    while eps > floor:
        out.append(eps)
        eps /= 2
    return out


def run_doubling(cfg: DoublingConfig, session, state):
    """Run every phase, then the tail action for whatever budget is left.

    Returns the final state.  If the budget runs out mid-phase the partial
    phase is dropped and a ``truncated`` event is left on the session.
    """
    try:
        for k, eps in enumerate(epsilon_schedule(cfg.horizon, cfg.n, cfg.alpha), start=1):
            session.phase, session.epsilon = k, eps
            state = cfg.subroutine(session, state, eps)
        session.phase += 1
        session.epsilon = math.nan
        rest = session.remaining
        if math.isfinite(rest) and rest > 0:
            session.play(cfg.tail_action(state), int(rest), "tail")
    except HorizonExhausted:
        pass
    if session.budget is not None and session.rounds > session.budget:
        raise AssertionError("doubling driver exceeded the horizon")
    return state
