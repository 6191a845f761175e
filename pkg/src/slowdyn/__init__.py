"""Pseudo-spectral simulator and a-priori bound checker for a slow-limit
stratified flow model on the periodic box."""

from .errors import (CheckpointError, ConfigError, CorruptHeaderError, InputError,
                     NumericalBlowupError, PreconditionError, SlowDynError, StateError,
                     TruncatedPayloadError)
from .spectral import GridSpec
from .model import ModelState, PhysicalParams, StateTendency, tendency, velocity
from .timestepper import RunConfig, cfl_dt, integrate, rk4_step
from .diagnostics import (DiagnosticsRecord, Tolerances, check_apriori_bounds, compute_record,
                          continuous_dependence_distance, twin_experiment)

__version__ = "0.1.0"
