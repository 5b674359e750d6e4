"""Nested Mach-Zehnder interferometer with weakly vibrating mirrors."""
from .analytic import KAPPA, FirstOrderModel, predict_q
from .errors import (
    DegenerateSweep,
    FreqOutOfRange,
    InvalidNetwork,
    InvalidOverride,
    InvalidParamPath,
    PostSelectionSingular,
    RampUnresolved,
    UnknownScenario,
)
from .field import FieldFrame, Grid, TimeSeries, detector_frame, gaussian_mode, perturb, run_timeseries
from .optics import BeamSplitter, MirrorDrive, NetworkSpec, apply_beamsplitter, build_network
from .scenarios import RunReport, Scenario, build_scenario, run, sweep
from .spectra import SpectrumReport, fit_slope, power_spectrum, single_bin
from .state import PathState, backward_state, forward_state, joint_weak_value, weak_value

__version__ = "0.1.0"
