"""Reputation-driven online planning for networks of self-interested agents."""

from .estimation import (action_distribution_estimate, expected_total_impact, image_estimate,
                         image_update, reputation)
from .model import (AgentKnowledge, EpistemicState, Hyperparameters, ModelError,
                    SubjectiveTransitions, System, counterpart, global_transition,
                    subjective_probability, validate_system)
from .planner import (PlanResult, expectimax_oracle, leaf_heuristic, perceived_impact, plan,
                      q_value, successor_epistemic)
from .scenario import Scenario, ScenarioError, dump_scenario, load_scenario, parse_scenario
from .simulator import (Schedule, ScheduleEntry, Trace, derive_metrics, observe_and_learn,
                        run_episode, scripted_policy, step_environment)
from .traceio import emit_trace_csv

__version__ = "0.1.0"
