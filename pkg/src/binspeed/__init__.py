"""Growth rates of infinite-bin models and longest paths in random DAGs."""

__version__ = "0.1.0"

from .config import (ALTERNATIVE, CANONICAL, BinConfig, Tail, apply_move, ball_pos,
                     dominates, n_right, parse_config, shift)
from .distribution import Distribution, Geometric, parse_distribution
from .chain import build_chain, cp_bounds, speed, speed_exact, stationary
from .words import coeff_table, epsilon, series_speed
from .montecarlo import coupled_ibm_estimate, longest_path_dag, simulate_ibm, sweep_cp
from .brw import brw_params, predicted_speed_gap, simulate_nbrw, uniform_ibm_speed

__all__ = [
    "ALTERNATIVE", "CANONICAL", "BinConfig", "Tail", "apply_move", "ball_pos",
    "dominates", "n_right", "parse_config", "shift",
    "Distribution", "Geometric", "parse_distribution",
    "build_chain", "cp_bounds", "speed", "speed_exact", "stationary",
    "coeff_table", "epsilon", "series_speed",
    "coupled_ibm_estimate", "longest_path_dag", "simulate_ibm", "sweep_cp",
    "brw_params", "predicted_speed_gap", "simulate_nbrw", "uniform_ibm_speed",
]
