"""Exact atom-photon wave functions for a solvable spontaneous-emission model.

The package evaluates closed-form joint states of a two-level emitter and of
V- and Lambda-type three-level emitters, projects them onto detector
measurement states, and cross-checks every closed form against a brute-force
integration of the discretized Schroedinger equation.
"""

from wavefront.amplitudes import (
    EmitterParams,
    Wavefront,
    excited_amplitude,
    lorentzian_density_k,
    negative_frequency_mass,
    photon_amplitude_k,
    photon_amplitude_r,
    photon_density_k,
    photon_density_r,
    survival_plus_field_norm,
)

__version__ = "0.1.0"

__all__ = [
    "EmitterParams",
    "Wavefront",
    "excited_amplitude",
    "lorentzian_density_k",
    "negative_frequency_mass",
    "photon_amplitude_k",
    "photon_amplitude_r",
    "photon_density_k",
    "photon_density_r",
    "survival_plus_field_norm",
]
