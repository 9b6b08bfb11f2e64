"""Decentralised trust engine: experience, reputation and trust aggregation."""

from .experience import (ConfigError, ExperienceParams, ExperienceState, FeedbackClass,
                         apply_decay_epochs, classify_feedback, update_experience)
from .graph import (GraphError, SplitMatrices, TrustGraph, build_transition_matrices,
                    split_experience)
from .ledger import FeedbackEvent, Ledger, LedgerError, Replayer, replay
from .reputation import (ReputationParams, ReputationVector, SolverError,
                         compute_reputation, rank, residual, solve)
from .trust import (Basis, TrustQuery, TrustScore, normalize_reputation,
                    rank_counterparts, trust)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExperienceParams", "ExperienceState", "FeedbackClass",
    "apply_decay_epochs", "classify_feedback", "update_experience",
    "GraphError", "SplitMatrices", "TrustGraph", "build_transition_matrices",
    "split_experience", "FeedbackEvent", "Ledger", "LedgerError", "Replayer", "replay",
    "ReputationParams", "ReputationVector", "SolverError", "compute_reputation",
    "rank", "residual", "solve", "Basis", "TrustQuery", "TrustScore",
    "normalize_reputation", "rank_counterparts", "trust",
]
