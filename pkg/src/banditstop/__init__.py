"""Bandit learning for threshold stopping rules: prophet inequality and Pandora's box."""

from .constraints import ConstraintGroup, InvariantViolation, canonical_policy, convert_policy, validate_policy
from .distributions import BoundedDistribution, EmpiricalCdf, parse_instance_text
from .doubling import DoublingConfig, run_doubling
from .environments import (
    ABOVE,
    AdversarialPandoraEnv,
    AdversarialProphetEnv,
    FeedbackModel,
    PandoraAction,
    PandoraEnv,
    PandoraInstance,
    ProphetAction,
    ProphetEnv,
    ProphetInstance,
)
from .harness import ExperimentConfig, run_experiment, sweep_and_fit
from .oracle import one_round_regret, prophet_expected_reward, prophet_opt, weitzman
from .pandora_learner import PandoraFixedOrderLearner, PandoraLearner
from .problem_a import ProblemAInstance, find_movebound, problem_a_approx, problem_a_exact
from .prophet_learner import ProphetLearner
from .trace import RegretTrace, Session

__version__ = "0.1.0"
