"""All-actions regret-minimising learners (Hedge, NeuRD, softmax policy
gradient), replicator dynamics, CFR and exact evaluation on small games."""

from .evaluation import EvalReport, best_response, expected_value, nashconv
from .games import GameTree, MatrixGame, load_game

__all__ = ["EvalReport", "GameTree", "MatrixGame", "best_response", "expected_value",
           "load_game", "nashconv"]
__version__ = "0.1.0"
