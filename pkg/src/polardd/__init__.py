"""Polarization decoherence in a ring cavity and its suppression by bang-bang control."""

__version__ = "0.1.0"

from .analytic import ExpansionCoeffs, expansion_coeffs, predict, v_matrix
from .cavity import CavityConfig, Layout, axis_angle, round_trip_unitary, step_unitary
from .engine import (
    DecaySeries,
    EvolutionConfig,
    MonteCarlo,
    PhaseDistribution,
    Quadrature,
    evolve,
    sphere_average,
)
from .fitting import FitResult, NoiseFitter, fit_full, fit_sigma_phi
from .jones import density_from_bloch, bloch_from_density, fidelity_pure, named_state, purity
from .spectral import GaussianSpectrum, SpectralAmplitudes, purity_deficit, stokes
from .tomography import CountRecord, MLETomography, mle_reconstruct, simulate_counts, stokes_from_counts

__all__ = [
    "ExpansionCoeffs",
    "expansion_coeffs",
    "predict",
    "v_matrix",
    "CavityConfig",
    "Layout",
    "axis_angle",
    "round_trip_unitary",
    "step_unitary",
    "DecaySeries",
    "EvolutionConfig",
    "MonteCarlo",
    "PhaseDistribution",
    "Quadrature",
    "evolve",
    "sphere_average",
    "FitResult",
    "NoiseFitter",
    "fit_full",
    "fit_sigma_phi",
    "density_from_bloch",
    "bloch_from_density",
    "fidelity_pure",
    "named_state",
    "purity",
    "GaussianSpectrum",
    "SpectralAmplitudes",
    "purity_deficit",
    "stokes",
    "CountRecord",
    "MLETomography",
    "mle_reconstruct",
    "simulate_counts",
    "stokes_from_counts",
]
