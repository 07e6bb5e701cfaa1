"""Delay-power transmission scheduling: exact MDP tools and average-reward learners."""

from .mdp import (InfeasibleActionError, ParameterError, QueueParams, TransitionModel,
                  build_transition_model, feasible_actions, immediate_reward, next_state,
                  transition_distribution, validate_params)
from .exact import (PolicyEval, SolveResult, TradeoffPoint, constraint_solve,
                    enumerate_monotone_policies, evaluate_policy, h_operator, policy_chain,
                    relative_value_iteration, stationary_distribution, sweep_lambda,
                    tradeoff_frontier)
from .learners import (ARLAgent, LearnerConfig, QGreedyUCBAgent, QLearningAgent, QTables, bonus,
                       extract_policy, make_agent, step_size)
from .sim import RunMetrics, alpha_sweep, env_step, multi_seed_compare, regret_series, run_experiment

__version__ = "0.1.0"
