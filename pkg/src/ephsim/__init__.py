"""Discrete-mode linear-optics simulator for time-bin entangled photon holes."""

from .biphoton import Background, BiphotonAmplitudes, Normalization, Scenario, build_scenario, compute_amplitudes
from .fitting import SinusoidFit, fit_common_period
from .fock import (
    DEFAULT_GRID,
    FockBasisState,
    ModeLabel,
    Pol,
    StateVector,
    TimeGrid,
    inner_product,
    make_coherent_product,
    make_single_photon,
    project_onto,
)
from .franson import (
    BellVerdict,
    ExperimentConfig,
    analytic_coincidence_rate,
    bell_verdict,
    prepare_eq1_state,
    run_phase_scan,
)
from .optics import FransonAnalyzer, apply_element, apply_franson_analyzer
from .tpa import TpaChannel, apply_tpa

__version__ = "0.1.0"
