"""Spectral progressive diffusion sampling at desk scale.

Orthonormal 2D transforms, radially averaged power spectra, closed-form
resolution schedules with timestep alignment, spectral noise expansion, a
linear-Gaussian oracle for exact verification, progressive probability-flow
sampling, transformer FLOP accounting, stage-wise fine-tuning targets, and
frequency-based editing.
"""

from .cost import ArchSpec, CostReport, step_flops, trajectory_cost
from .expansion import FlowState, expand, passthrough_filter
from .oracle import GaussianModel, OracleVelocity, optimal_velocity, sample_clean, velocity_error
from .sampler import Trajectory, run_passthrough, sample_baseline, sample_progressive
from .schedule import Schedule, SolverGrid, activation_time, align, plan, transition_time
from .spectral import FrequencyGeometry, Spectrum, TransformKind, embed, extract, forward, inverse
from .spectrum import PowerLaw, RadialSpectrum, estimate_radial_spectrum, fit_power_law, snr
from .targets import StageSample, ToyNet, make_stage_sample, train_toy

__version__ = "0.1.0"

__all__ = [
    "ArchSpec",
    "CostReport",
    "FlowState",
    "FrequencyGeometry",
    "GaussianModel",
    "OracleVelocity",
    "PowerLaw",
    "RadialSpectrum",
    "Schedule",
    "SolverGrid",
    "Spectrum",
    "StageSample",
    "ToyNet",
    "Trajectory",
    "TransformKind",
    "activation_time",
    "align",
    "embed",
    "estimate_radial_spectrum",
    "expand",
    "extract",
    "fit_power_law",
    "forward",
    "inverse",
    "make_stage_sample",
    "optimal_velocity",
    "passthrough_filter",
    "plan",
    "run_passthrough",
    "sample_baseline",
    "sample_clean",
    "sample_progressive",
    "snr",
    "step_flops",
    "trajectory_cost",
    "train_toy",
    "transition_time",
    "velocity_error",
]
