"""Online label shift: track a drifting label marginal and adapt a classifier to it."""
from .errors import (
    DataExhaustedError,
    DegenerateReweightError,
    DegenerateWeightError,
    IncompleteStreamError,
    InsufficientHoldoutError,
    InvalidInputError,
    InvalidParameterError,
    LabelShiftError,
    SingularConfusionError,
    StreamParseError,
    TrainingDivergedError,
)
from .harness import ExperimentConfig, run_experiment
from .lpa import LowSwitchRegressor, LpaConfig
from .marginal import ConfusionMatrix, build_confusion, estimate_marginal
from .metrics import RoundRecord, RunMetrics, score_run
from .model import SoftmaxLinearModel, TrainerConfig, train_weighted
from .regression import FLHFTL, RunningAverage, WindowAverage
from .shifts import ShiftSchedule, make_schedule
from .simplex import clip_floor, project_simplex
from .sols import SolsConfig, run_sols
from .uols import RegressAndReweight, UolsConfig, run_uols

__version__ = "0.1.0"
