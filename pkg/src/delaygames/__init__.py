"""Learning automata in two-level stochastic games with delayed information."""

from .automata import LearningParams, SimConfig, run_ensemble, run_simulation
from .dynamics import find_equilibrium, integrate, observed_instability_delay
from .game_core import MultiLevelGame, StateVector, StochasticBimatrix, builtin_game
from .stability import instability_delay, linearize, predict, predict_table1

__version__ = "0.1.0"
