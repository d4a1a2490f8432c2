"""Closed-form two-level emission amplitudes.

A two-level emitter with transition frequency ``omega0`` is coupled locally to a
one-dimensional field with linear dispersion ``omega = k c``, extended to
negative ``k``.  Starting from the excited state and the field vacuum, the
excited amplitude decays exponentially and the emitted photon is a causal
wavefront that moves rigidly away from the emitter at speed ``c``.

All evaluators broadcast over numpy arrays.  Time must be non-negative; the
model is posed from an initial condition at ``t = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "EmitterParams",
    "Wavefront",
    "excited_amplitude",
    "photon_amplitude_k",
    "photon_density_k",
    "lorentzian_density_k",
    "photon_amplitude_r",
    "photon_density_r",
    "survival_plus_field_norm",
    "negative_frequency_mass",
]


@dataclass(frozen=True)
class EmitterParams:
    """Constants of the two-level model.

    Parameters
    ----------
    omega0 : float
        Transition angular frequency.
    gamma : float
        Decay rate of the excited-state population.
    c : float, default: 1.0
        Group velocity of the field.
    coupling_phase : float, default: 0.0
        Phase of the coupling constant ``g``.  No observable depends on it.
    """

    omega0: float
    gamma: float
    c: float = 1.0
    coupling_phase: float = 0.0

    def __post_init__(self):
        for name in ("omega0", "gamma", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def coupling(self) -> complex:
        """Coupling constant ``g`` with ``|g|**2 = gamma * c / (2 pi)``."""
        return math.sqrt(self.gamma * self.c / (2 * math.pi)) * complex(
            math.cos(self.coupling_phase), math.sin(self.coupling_phase)
        )

    @property
    def coupling_sq(self) -> float:
        return self.gamma * self.c / (2 * math.pi)

    @property
    def quality(self) -> float:
        """``omega0 / gamma``; the model is trustworthy only when this is large."""
        return self.omega0 / self.gamma

    @property
    def k0(self) -> float:
        """Resonant wavenumber."""
        return self.omega0 / self.c


@dataclass(frozen=True)
class Wavefront:
    """Real-space one-photon amplitude sampled at one instant.

    ``amplitude`` has units of 1/sqrt(length).
    """

    positions: np.ndarray
    time: float
    amplitude: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def crop(self, x_min: float, x_max: float) -> Wavefront:
        keep = (self.positions >= x_min) & (self.positions <= x_max)
        return Wavefront(self.positions[keep], self.time, self.amplitude[keep])


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("time must be finite and non-negative")
    return t


def _unwrap(value):
    return value[()] if isinstance(value, np.ndarray) and value.ndim == 0 else value


def excited_amplitude(p: EmitterParams, t):
    """Amplitude of the excited state with the field in vacuum.

    Returns ``exp(-i omega0 t - gamma t / 2)``.
    """
    t = _check_time(t)
    return _unwrap(np.exp((-1j * p.omega0 - p.gamma / 2) * t))


def photon_amplitude_k(p: EmitterParams, k, t):
    """One-photon amplitude in wavenumber space (units 1/sqrt(wavenumber)).

    ``g exp(-i k c t) (1 - exp(-gamma t/2) exp(i (k c - omega0) t)) / (k c - omega0 + i gamma/2)``

    The pole sits at ``k c = omega0 - i gamma/2``, off the real axis, so the
    expression is regular for every real ``k``, negative values included.
    """
    t = _check_time(t)
    k = np.asarray(k, dtype=float)
    detuning = k * p.c - p.omega0
    numerator = -np.expm1((1j * detuning - p.gamma / 2) * t)
    amp = p.coupling * np.exp(-1j * k * p.c * t) * numerator / (detuning + 0.5j * p.gamma)
    return _unwrap(amp)


def photon_density_k(p: EmitterParams, k, t):
    """Wavenumber-space photon probability density, written out in real form."""
    t = _check_time(t)
    k = np.asarray(k, dtype=float)
    detuning = k * p.c - p.omega0
    decay = np.exp(-p.gamma * t / 2)
    # (1 - d)^2 + 4 d sin^2(delta t / 2) avoids cancellation at small t
    numerator = np.expm1(-p.gamma * t / 2) ** 2 + 4 * decay * np.sin(detuning * t / 2) ** 2
    return _unwrap(p.coupling_sq * numerator / (detuning**2 + p.gamma**2 / 4))


def lorentzian_density_k(p: EmitterParams, k):
    """Stationary (``t -> infinity``) line shape ``|g|^2 / ((kc - omega0)^2 + gamma^2/4)``."""
    k = np.asarray(k, dtype=float)
    detuning = k * p.c - p.omega0
    return _unwrap(p.coupling_sq / (detuning**2 + p.gamma**2 / 4))


def photon_amplitude_r(p: EmitterParams, x, t):
    """Real-space one-photon amplitude (units 1/sqrt(length)).

    ``-i sqrt(gamma/c) exp((gamma/2 + i omega0)(x/c - t))`` on the open interval
    ``0 < x < c t`` and exactly zero elsewhere, endpoints included.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=float)
    x, t = np.broadcast_arrays(x, t)
    lag = x / p.c - t
    inside = (x > 0) & (lag < 0)
    phase = complex(math.cos(p.coupling_phase), math.sin(p.coupling_phase))
    amp = np.zeros(x.shape, dtype=complex)
    amp[inside] = -1j * phase * math.sqrt(p.gamma / p.c) * np.exp(
        (p.gamma / 2 + 1j * p.omega0) * lag[inside]
    )
    return _unwrap(amp)


def photon_density_r(p: EmitterParams, x, t):
    """``(gamma/c) exp(gamma (x/c - t))`` inside the light cone, zero outside."""
    t = _check_time(t)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), t)
    lag = x / p.c - t
    inside = (x > 0) & (lag < 0)
    density = np.zeros(x.shape)
    density[inside] = p.gamma / p.c * np.exp(p.gamma * lag[inside])
    return _unwrap(density)


def survival_plus_field_norm(p: EmitterParams, t: float) -> float:
    """Excited population plus the integrated real-space photon density.

    The photon part is integrated numerically over ``(0, c t)`` so that the
    result is an actual check of the wavefront's normalization.
    """
    t = float(_check_time(t))
    survival = abs(excited_amplitude(p, t)) ** 2
    if t == 0:
        return survival
    field, _ = integrate.quad(
        lambda x: photon_density_r(p, x, t), 0.0, p.c * t, epsabs=1e-13, epsrel=1e-13, limit=200
    )
    return survival + field


def negative_frequency_mass(p: EmitterParams, t: float) -> float:
    """Photon probability carried by modes with ``k <= 0``.

    With ``u = omega0 - k c`` the density is
    ``|g|^2 (1 + d^2 - 2 d cos(u t)) / (u^2 + gamma^2/4)`` over ``u >= omega0``,
    ``d = exp(-gamma t/2)``.  The smooth part is integrated in closed form and
    the oscillating part with a Fourier-weighted quadrature.
    """
    t = float(_check_time(t))
    if t == 0:
        return 0.0
    half = p.gamma / 2
    d = math.exp(-half * t)
    smooth = (math.pi / 2 - math.atan(p.omega0 / half)) / half
    oscillating, _ = integrate.quad(
        lambda u: 1 / (u * u + half * half), p.omega0, np.inf, weight="cos", wvar=t
    )
    return p.coupling_sq * ((1 + d * d) * smooth - 2 * d * oscillating) / p.c
