"""Active stream learning with cooperating siamese networks."""

from .evaluation import FadingGmean, RunLog, SlidingPmauc, aggregate_runs
from .harness import RunConfig, emit_results, parse_config, run_experiment
from .learners import (
    ActiQLearner,
    ActiSiameseLearner,
    BaselineLearner,
    Oracle,
    SiameseDuoLearner,
    make_learner,
)
from .streams import StreamSpec, load_delimited, make_stream

__all__ = [
    "ActiQLearner",
    "ActiSiameseLearner",
    "BaselineLearner",
    "FadingGmean",
    "Oracle",
    "RunConfig",
    "RunLog",
    "SiameseDuoLearner",
    "SlidingPmauc",
    "StreamSpec",
    "aggregate_runs",
    "emit_results",
    "load_delimited",
    "make_learner",
    "make_stream",
    "parse_config",
    "run_experiment",
]

__version__ = "0.1.0"
