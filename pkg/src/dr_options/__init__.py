"""Demand response through spot and call-option markets.

Solvers for a three-stage electricity procurement problem: a social-planner
benchmark, an intermediate spot market with state-contingent prices, and two
options markets (original and redesigned), plus Monte-Carlo validation.
"""

from .models import MarketInstance, build_case_study, instance_from_dict, load_instance, validate_assumptions
from .options import (OptionsEquilibrium, default_l_prime, exercise_policy, optimal_strike,
                      regime_boundaries, solve_original_ce, solve_redesigned_ce, strike_sweep,
                      welfare_report)
from .planner import PlannerSolution, second_stage_dr, solve_dr, solve_no_dr
from .simulate import monte_carlo, sample_scenario
from .spot import SpotEquilibrium, per_state_clearing, spot_equilibrium, verify_social_optimality

__version__ = "0.1.0"
