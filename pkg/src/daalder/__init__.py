"""Learning Moore machines from a disk-backed trace store by pulling in only informative traces."""

from .core import LabeledTrace, MooreMachine, equivalent, evaluate, minimize
from .edsm import edsm_learn
from .learner import LearnerConfig, learn
from .oracles import exact_equivalence, randomized_equivalence
from .store import TraceStore

__all__ = [
    "LabeledTrace",
    "LearnerConfig",
    "MooreMachine",
    "TraceStore",
    "edsm_learn",
    "equivalent",
    "evaluate",
    "exact_equivalence",
    "learn",
    "minimize",
    "randomized_equivalence",
]
