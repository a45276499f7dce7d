"""Nonlinear pi phase switch of a single two-level atom in a one-sided cavity."""
from .core import (
    BLOCH_SLACK,
    AtomParams,
    BlochState,
    CavityParams,
    DomainError,
    EffectiveGamma,
    InvalidParameterError,
    InvalidStateError,
    PulseCheck,
    ResponsePoint,
    SteadyStateSolution,
    effective_gamma,
    intensity_fractions,
    linear_response,
    noise_lower_bound,
    noise_power,
    output_amplitude,
    response_point,
    response_ratio,
    steady_response_ratio,
    steady_state,
    switching_intensity,
    two_photon_pulse_check,
)
from .dynamics import (
    DriveSignal,
    EnergyAudit,
    IntegrationError,
    IntegratorConfig,
    TrajectoryRecord,
    bloch_rhs,
    decay_closed_form,
    energy_audit,
    integrate,
)
from .sweep import BetaRow, Grid, SweepRow, beta_sweep, response_sweep

__version__ = "0.1.0"
