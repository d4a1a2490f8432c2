"""Closed-form joint states of three-level emitters.

Each decay channel behaves like an independent copy of the two-level model
with its own rate and frequency, because the dynamics are linear and every
excited sublevel couples to a single effective field mode per energy.

Basis conventions
-----------------
Two-component atomic and field vectors are indexed ``(m=+1, m=-1)`` in the
angular-momentum basis and ``(x, y)`` in the linear-dipole basis, with

    |x> = (|+1> + |-1>) / sqrt(2),    |y> = i (|+1> - |-1>) / sqrt(2)

for both the atomic P sublevels and the photon modes.  ``ROTATION`` maps
m-basis amplitudes to dipole-basis amplitudes.

The dipole-basis closed forms (``v_state_rotated``, ``lambda_state_rotated``)
are evaluated as written for the equal-rate case.  Rotating the m-basis states
with ``ROTATION`` instead reproduces the V photon amplitudes exactly but flips
the sign of the excited ``P_y`` component, and for the Lambda system gives the
joint amplitudes with ``delta_omega`` reversed (up to a global phase).  Every
density is unaffected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "ROTATION",
    "ChannelSpec",
    "ImpossibleOutcomeError",
    "field_vector",
    "TwoLevelState",
    "VSystemState",
    "RotatedVState",
    "LambdaSystemState",
    "RotatedLambdaState",
    "v_state",
    "v_state_rotated",
    "lambda_state",
    "lambda_state_rotated",
    "conditional_atomic_state",
    "angular_intensity",
]

_S = 1 / math.sqrt(2)
ROTATION = np.array([[_S, _S], [-1j * _S, 1j * _S]])

_FIELD_VECTORS = {
    "m+1": np.array([1, 0], dtype=complex),
    "m-1": np.array([0, 1], dtype=complex),
    "dx": np.conj(ROTATION[0]),
    "dy": np.conj(ROTATION[1]),
    "l>1": np.zeros(2, dtype=complex),
}


class ImpossibleOutcomeError(ValueError):
    """A conditional state was requested for an outcome of zero probability."""


def field_vector(channel) -> np.ndarray:
    """m-basis components of a photon polarization channel.

    ``channel`` is one of ``"m+1", "m-1", "dx", "dy"``, the higher-multipole
    sink ``"l>1"`` (no overlap with any emitted photon), or an explicit
    two-component vector.
    """
    if isinstance(channel, str):
        try:
            return _FIELD_VECTORS[channel]
        except KeyError:
            raise ValueError(f"unknown channel {channel!r}") from None
    vec = np.asarray(channel, dtype=complex)
    if vec.shape != (2,):
        raise ValueError("field vector must have two components")
    return vec


@dataclass(frozen=True)
class ChannelSpec:
    """A decay channel: photon angular-momentum label, frequency and rate."""

    m_label: int
    omega: float
    gamma: float

    def __post_init__(self):
        if self.m_label not in (-1, 0, 1):
            raise ValueError("m_label must be -1, 0 or +1")
        if not self.gamma >= 0:
            raise ValueError("channel rate must be non-negative")


def _check_t(t: float) -> float:
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError("time must be finite and non-negative")
    return t


def _wave(r, t, c, gamma, omega):
    """``-i sqrt(gamma/c) exp((gamma/2 + i omega)(r/c - t))`` on 0 < r < ct, else 0."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    lag = r / c - t
    inside = (r > 0) & (lag < 0)
    out = np.zeros(r.shape, dtype=complex)
    out[inside] = -1j * math.sqrt(gamma / c) * np.exp((gamma / 2 + 1j * omega) * lag[inside])
    return out, lag, inside


def _to_field_basis(amp: np.ndarray, basis: str) -> np.ndarray:
    """Rotate the field index (axis -2) of an m-basis array."""
    if basis == "m":
        return amp
    if basis == "xy":
        return np.einsum("gf,...fr->...gr", ROTATION, amp)
    raise ValueError(f"unknown basis {basis!r}")


class _JointState:
    """Shared measurement surface: amplitudes ``[atomic, field(m), r]``."""

    t: float
    c: float

    def joint(self, r, field_basis: str = "m") -> np.ndarray:
        return _to_field_basis(self._joint_m(r), field_basis)

    def field_amplitudes(self, r, channel) -> np.ndarray:
        """Overlap with a photon at ``r`` in ``channel``, per atomic basis state."""
        vec = field_vector(channel)
        return np.einsum("f,afr->ar", np.conj(vec), self._joint_m(r))

    def photon_norm(self) -> float:
        """One-photon probability by quadrature over ``(0, c t)``."""
        if self.t == 0:
            return 0.0

        def density(r):
            return float(np.sum(np.abs(self._joint_m(np.array([r]))) ** 2))

        val, _ = integrate.quad(density, 0.0, self.c * self.t, epsabs=1e-13, epsrel=1e-12, limit=400)
        return val


@dataclass(frozen=True)
class TwoLevelState(_JointState):
    """The two-level wavefront, with the photon assigned to one m channel."""

    omega0: float
    gamma: float
    t: float
    c: float = 1.0
    m_label: int = 1

    @property
    def atomic_labels(self):
        return ("G",)

    def excited(self) -> complex:
        return complex(np.exp((-1j * self.omega0 - self.gamma / 2) * self.t))

    def _joint_m(self, r):
        wave, _, _ = _wave(r, self.t, self.c, self.gamma, self.omega0)
        out = np.zeros((1, 2, wave.size), dtype=complex)
        out[0, 0 if self.m_label == 1 else 1] = wave
        return out


@dataclass(frozen=True)
class VSystemState(_JointState):
    """Quantum-beat scenario: two excited sublevels, one shared ground state."""

    plus: ChannelSpec
    minus: ChannelSpec
    t: float
    c: float = 1.0

    @property
    def atomic_labels(self):
        return ("S",)

    def excited(self, basis: str = "m") -> np.ndarray:
        amp = np.array(
            [_S * np.exp((-ch.gamma / 2 - 1j * ch.omega) * self.t) for ch in (self.plus, self.minus)]
        )
        if basis == "m":
            return amp
        if basis == "xy":
            return ROTATION @ amp
        raise ValueError(f"unknown basis {basis!r}")

    def photon(self, r, basis: str = "m") -> np.ndarray:
        """Photon amplitudes, shape (2, len(r)), rows in the chosen field basis."""
        return self.joint(r, basis)[0]

    def photon_density(self, r, basis: str = "m") -> np.ndarray:
        return np.abs(self.photon(r, basis)) ** 2

    def _joint_m(self, r):
        rows = [_S * _wave(r, self.t, self.c, ch.gamma, ch.omega)[0] for ch in (self.plus, self.minus)]
        return np.array(rows)[None]

    def norm(self) -> float:
        return float(np.sum(np.abs(self.excited()) ** 2)) + self.photon_norm()


def v_state(plus: ChannelSpec, minus: ChannelSpec, t: float, c: float = 1.0) -> VSystemState:
    """V system prepared in ``(|P,+1> + |P,-1>)/sqrt(2)`` with the field in vacuum."""
    if plus.m_label != 1 or minus.m_label != -1:
        raise ValueError("V system needs an m=+1 and an m=-1 channel")
    return VSystemState(plus, minus, _check_t(t), float(c))


def _beat_parameters(plus: ChannelSpec, minus: ChannelSpec):
    return 0.5 * (plus.omega + minus.omega), 0.5 * (plus.omega - minus.omega)


@dataclass(frozen=True)
class RotatedVState(_JointState):
    """Equal-rate V system written directly in the dipole bases.

    Excited: ``exp(-gamma t/2 - i wbar t) (cos(dw t), sin(dw t))`` over (P_x, P_y).
    Photon: ``-i sqrt(gamma/c) exp((gamma/2 + i wbar) s) (cos(dw s), sin(dw s))``
    over (d_x, d_y), with ``s = r/c - t``.
    """

    gamma: float
    omega_bar: float
    delta_omega: float
    t: float
    c: float = 1.0

    @property
    def atomic_labels(self):
        return ("S",)

    def excited(self) -> np.ndarray:
        env = np.exp((-self.gamma / 2 - 1j * self.omega_bar) * self.t)
        dw = self.delta_omega * self.t
        return env * np.array([math.cos(dw), math.sin(dw)])

    def photon(self, r) -> np.ndarray:
        wave, lag, inside = _wave(r, self.t, self.c, self.gamma, self.omega_bar)
        phase = self.delta_omega * lag
        return np.array([wave * np.cos(phase), wave * np.sin(phase)])

    def photon_density(self, r) -> np.ndarray:
        return np.abs(self.photon(r)) ** 2

    def _joint_m(self, r):
        return np.einsum("fg,gr->fr", ROTATION.conj().T, self.photon(r))[None]


def v_state_rotated(plus: ChannelSpec, minus: ChannelSpec, t: float, c: float = 1.0) -> RotatedVState:
    """Dipole-basis closed form; defined only for equal channel rates.

    For unequal rates rotate the m-basis state instead:
    ``v_state(...).photon(r, basis="xy")``.
    """
    if plus.gamma != minus.gamma:
        raise ValueError("closed dipole-basis form requires equal channel rates")
    wbar, dw = _beat_parameters(plus, minus)
    return RotatedVState(plus.gamma, wbar, dw, _check_t(t), float(c))


@dataclass(frozen=True)
class LambdaSystemState(_JointState):
    """One excited level decaying into two ground sublevels.

    An atom left in ``|P, +1>`` is paired with a photon in ``m = -1`` and vice
    versa.  Channel weights are ``gamma_pm / sqrt(gamma_+^2 + gamma_-^2)``.
    """

    omega0: float
    plus: ChannelSpec
    minus: ChannelSpec
    t: float
    c: float = 1.0

    @property
    def atomic_labels(self):
        return ("P+1", "P-1")

    @property
    def gamma(self) -> float:
        return self.plus.gamma + self.minus.gamma

    @property
    def weights(self) -> np.ndarray:
        rates = np.array([self.plus.gamma, self.minus.gamma])
        return rates / math.hypot(*rates)

    def excited(self) -> complex:
        return complex(np.exp(-(self.gamma / 2 + 1j * self.omega0) * self.t))

    def _joint_m(self, r):
        wave, lag, _ = _wave(r, self.t, self.c, self.gamma, self.omega0)
        out = np.zeros((2, 2, wave.size), dtype=complex)
        w_plus, w_minus = self.weights
        out[0, 1] = wave * w_plus * np.exp(1j * self.plus.omega * lag)
        out[1, 0] = wave * w_minus * np.exp(1j * self.minus.omega * lag)
        return out

    def joint(self, r, field_basis: str = "m", atom_basis: str = "m") -> np.ndarray:
        amp = super().joint(r, field_basis)
        if atom_basis == "xy":
            return np.einsum("ba,afr->bfr", ROTATION, amp)
        if atom_basis != "m":
            raise ValueError(f"unknown basis {atom_basis!r}")
        return amp

    def channel_norms(self) -> np.ndarray:
        """Photon probability in the (m=-1, atom +1) and (m=+1, atom -1) branches."""
        return self.weights**2 * (1 - math.exp(-self.gamma * self.t))

    def norm(self) -> float:
        return abs(self.excited()) ** 2 + self.photon_norm()

    def schmidt_rank(self, r, tol: float = 1e-10) -> int:
        """Rank of the atom-versus-field amplitude matrix sampled on ``r``."""
        amp = self.joint(r).reshape(2, -1)
        sv = np.linalg.svd(amp, compute_uv=False)
        return int(np.sum(sv > tol * sv[0])) if sv[0] > 0 else 0


def lambda_state(omega0: float, plus: ChannelSpec, minus: ChannelSpec, t: float, c: float = 1.0):
    if plus.gamma == 0 and minus.gamma == 0:
        raise ValueError("at least one channel rate must be positive")
    if plus.m_label != 1 or minus.m_label != -1:
        raise ValueError("Lambda system needs an m=+1 and an m=-1 ground sublevel")
    return LambdaSystemState(float(omega0), plus, minus, _check_t(t), float(c))


@dataclass(frozen=True)
class RotatedLambdaState(_JointState):
    """Equal-rate Lambda system written directly in the dipole bases.

    Joint amplitudes over (P_x, P_y) x (d_x, d_y):
    ``A(s) [[cos, sin], [-sin, cos]](dw s)`` with
    ``A(s) = -i sqrt(gamma/c) exp((gamma/2 + i omega0 + i wbar) s) / sqrt(2)``.
    """

    omega0: float
    gamma: float
    omega_bar: float
    delta_omega: float
    t: float
    c: float = 1.0

    @property
    def atomic_labels(self):
        return ("P_x", "P_y")

    def excited(self) -> complex:
        return complex(np.exp(-(self.gamma / 2 + 1j * self.omega0) * self.t))

    def dipole_amplitudes(self, r) -> np.ndarray:
        wave, lag, _ = _wave(r, self.t, self.c, self.gamma, self.omega0 + self.omega_bar)
        wave = wave * _S
        cos = wave * np.cos(self.delta_omega * lag)
        sin = wave * np.sin(self.delta_omega * lag)
        return np.array([[cos, sin], [-sin, cos]])

    def _joint_m(self, r):
        return np.einsum("gf,agr->afr", ROTATION.conj(), self.dipole_amplitudes(r))

    def joint(self, r, field_basis: str = "xy") -> np.ndarray:
        if field_basis == "xy":
            return self.dipole_amplitudes(r)
        return super().joint(r, field_basis)


def lambda_state_rotated(omega0: float, plus: ChannelSpec, minus: ChannelSpec, t: float, c: float = 1.0):
    if plus.gamma != minus.gamma:
        raise ValueError("closed dipole-basis form is only available for equal channel rates")
    if plus.gamma <= 0:
        raise ValueError("channel rates must be positive")
    wbar, dw = _beat_parameters(plus, minus)
    return RotatedLambdaState(float(omega0), plus.gamma + minus.gamma, wbar, dw, _check_t(t), float(c))


def conditional_atomic_state(state, r: float, channel):
    """Atomic state left behind after a photon is found at ``r`` in ``channel``.

    Returns ``(atomic_state, density)``: the renormalized atomic amplitudes in
    the state's own atomic basis and the detection probability density.
    """
    amp = state.field_amplitudes(np.array([float(r)]), channel)[:, 0]
    density = float(np.sum(np.abs(amp) ** 2))
    if density < 1e-300:
        raise ImpossibleOutcomeError(f"no photon can be found at r={r} in channel {channel!r}")
    return amp / math.sqrt(density), density


_POLARIZATIONS = {
    0: np.array([0, 0, 1], dtype=complex),
    1: np.array([1, 1j, 0]) * _S,
    -1: np.array([1, -1j, 0]) * _S,
}


def angular_intensity(m_label: int, theta, phi=0.0):
    """Normalized angular emission density (per steradian) of a dipole photon.

    The photon's polarization vector for label ``m`` is projected onto the two
    polarizations transverse to the emission direction ``(theta, phi)`` and the
    overlaps are summed; ``3 / (8 pi)`` normalizes over the sphere.
    """
    if m_label not in _POLARIZATIONS:
        raise ValueError("m_label must be -1, 0 or +1")
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_phi = np.stack([-sp, cp, np.zeros_like(phi)], axis=-1)
    eps = _POLARIZATIONS[m_label]
    overlap = np.abs(e_theta @ eps) ** 2 + np.abs(e_phi @ eps) ** 2
    out = 3 / (8 * math.pi) * overlap
    return out[()] if out.ndim == 0 else out
