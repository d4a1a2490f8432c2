"""Detector models as projection states on the field part of a joint state.

A detector is represented by the normalized field state it effectively
measures.  Point-supported projectors (a polarizer in front of a detector at
distance ``r``, interferometers combining a few path lengths) give probability
*densities* per unit length, because ``<r|psi>`` is a density amplitude.
Projectors with a square-integrable profile give genuine probabilities.

Any joint state exposing ``field_amplitudes(r, channel) -> (n_atomic, len(r))``
can be measured; the classes in :mod:`wavefront.multilevel` all do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from wavefront.multilevel import ImpossibleOutcomeError

__all__ = [
    "ProjectionState",
    "DetectorGeometry",
    "Detection",
    "SINK",
    "polarizer_projector",
    "finite_detector_projector",
    "michelson_projector",
    "fabry_perot_projector",
    "fabry_perot_terms",
    "continuous_projector",
    "coincidence_projector",
    "detect",
    "coincidence_density",
    "locate_maxima",
    "fringe_visibility",
    "normalized_fringe",
]

SINK = "l>1"
NORM_TOL = 1e-12


def _at(profile: Callable, r: float) -> complex:
    # profiles may return scalars or length-1 arrays
    return complex(np.ravel(profile(r))[0])


@dataclass(frozen=True)
class ProjectionState:
    """Normalized field state measured by a detector.

    For ``kind`` ``"point"`` or ``"superposition"`` the support is a list of
    ``(position, channel, weight)`` triples with ``sum |weight|**2 = 1``.  For
    ``"continuous"`` a single channel carries the profile ``profile(r)`` on
    ``[r_min, r_max]`` with unit L2 norm.
    """

    kind: str
    positions: tuple[float, ...] = ()
    channels: tuple = ()
    weights: tuple[complex, ...] = ()
    profile: Callable | None = None
    r_min: float = 0.0
    r_max: float = 0.0

    def __post_init__(self):
        if self.kind not in ("point", "superposition", "continuous"):
            raise ValueError(f"unknown projector kind {self.kind!r}")
        if any(p < 0 for p in self.positions):
            raise ValueError("positions must be non-negative")
        if self.kind != "continuous":
            if not (len(self.positions) == len(self.channels) == len(self.weights) > 0):
                raise ValueError("support lists must be non-empty and of equal length")
            total = sum(abs(w) ** 2 for w in self.weights)
            if abs(total - 1) > NORM_TOL:
                raise ValueError(f"projector weights not normalized (sum |w|^2 = {total})")

    @property
    def is_density(self) -> bool:
        """True when ``detect`` returns a density per unit length rather than a probability."""
        return self.kind != "continuous"

    @property
    def norm(self) -> float:
        if self.kind == "continuous":
            val, _ = integrate.quad(lambda r: abs(_at(self.profile, r)) ** 2, self.r_min, self.r_max, limit=200)
            return val
        return float(sum(abs(w) ** 2 for w in self.weights))


def _normalized(kind, positions, channels, weights) -> ProjectionState:
    weights = np.asarray(weights, dtype=complex)
    weights = weights / math.sqrt(float(np.sum(np.abs(weights) ** 2)))
    return ProjectionState(
        kind, tuple(float(p) for p in positions), tuple(channels), tuple(complex(w) for w in weights)
    )


@dataclass(frozen=True)
class DetectorGeometry:
    """Fraction ``sigma`` of the emission solid angle seen by the detector."""

    sigma: float

    def __post_init__(self):
        if not 0 <= self.sigma <= 1:
            raise ValueError("sigma must lie in [0, 1]")


@dataclass(frozen=True)
class Detection:
    """Outcome of ``detect``.

    ``atomic_state`` is the renormalized atomic remainder in the state's atomic
    basis, or ``None`` when the outcome has zero probability.
    """

    probability: float
    atomic_state: np.ndarray | None
    is_density: bool


def _check_r(r):
    if not r > 0:
        raise ValueError("detector distance must be positive")


def polarizer_projector(r: float, axis: str = "dx") -> ProjectionState:
    """Ideal polarizer along ``axis`` in front of a point detector at distance ``r``."""
    _check_r(r)
    if axis not in ("dx", "dy", "m+1", "m-1"):
        raise ValueError(f"unknown polarizer axis {axis!r}")
    return ProjectionState("point", (float(r),), (axis,), (1.0 + 0j,))


def finite_detector_projector(r: float, axis: str, geom: DetectorGeometry) -> ProjectionState:
    """Detector covering a fraction ``sigma`` of the emission.

    Weight ``sqrt(sigma)`` sits on the dipole mode and ``sqrt(1 - sigma)`` on a
    higher-multipole sink orthogonal to every emitted photon.
    """
    _check_r(r)
    return ProjectionState(
        "superposition",
        (float(r), float(r)),
        (axis, SINK),
        (complex(math.sqrt(geom.sigma)), complex(math.sqrt(1 - geom.sigma))),
    )


def michelson_projector(r1: float, r2: float, channel="dx") -> ProjectionState:
    """Equal-weight combination of two path lengths."""
    _check_r(r1)
    _check_r(r2)
    if r1 == r2:
        raise ValueError("Michelson arms must differ in length")
    return _normalized("superposition", (r1, r2), (channel, channel), (1.0, 1.0))


def fabry_perot_terms(reflectivity: float, tol: float = 1e-8) -> int:
    """Smallest ``n_max`` with ``reflectivity**(2 n_max) < tol``."""
    if not 0 < reflectivity < 1:
        raise ValueError("reflectivity must lie in (0, 1)")
    return max(1, math.floor(math.log(tol) / (2 * math.log(reflectivity))) + 1)


def fabry_perot_projector(
    reflectivity: float, spacing: float, n_max: int | None = None, channel="dx"
) -> ProjectionState:
    """Points ``r = n d`` (``n = 1..n_max``) weighted by ``R**(2n)``, renormalized to unit norm."""
    if spacing <= 0:
        raise ValueError("panel spacing must be positive")
    if n_max is None:
        n_max = fabry_perot_terms(reflectivity)
    elif not 0 < reflectivity < 1:
        raise ValueError("reflectivity must lie in (0, 1)")
    n = np.arange(1, n_max + 1)
    return _normalized("superposition", n * spacing, [channel] * n_max, reflectivity ** (2.0 * n))


def continuous_projector(profile: Callable, r_min: float, r_max: float, channel="dx") -> ProjectionState:
    """Square-integrable detector profile on ``[r_min, r_max]``, normalized numerically."""
    if not 0 <= r_min < r_max:
        raise ValueError("need 0 <= r_min < r_max")
    norm, _ = integrate.quad(lambda r: abs(_at(profile, r)) ** 2, r_min, r_max, epsabs=1e-14, epsrel=1e-13, limit=200)
    if norm <= 0:
        raise ValueError("profile has zero norm")
    scale = 1 / math.sqrt(norm)
    return ProjectionState(
        "continuous",
        channels=(channel,),
        profile=lambda r, f=profile: scale * f(r),
        r_min=float(r_min),
        r_max=float(r_max),
    )


def coincidence_projector(r0: float, tau: float, channels: Sequence = ("dx", "dx"), c: float = 1.0):
    """Point projectors at ``r0`` and ``r0 + c tau`` on the given pair of channels."""
    _check_r(r0)
    if tau < 0:
        raise ValueError("delay must be non-negative")
    first, second = channels
    if tau == 0 and first == second:
        raise ValueError("coincidence points coincide; use a single projector")
    return polarizer_projector(r0, first), polarizer_projector(r0 + c * tau, second)


def _overlap(state, proj: ProjectionState) -> np.ndarray:
    """``<proj|psi>`` as a vector over the state's atomic basis."""
    if proj.kind == "continuous":
        (channel,) = proj.channels
        lo, hi = proj.r_min, min(proj.r_max, state.c * state.t)
        n_atomic = state.field_amplitudes(np.array([0.0]), channel).shape[0]
        if hi <= lo:
            return np.zeros(n_atomic, dtype=complex)
        out = np.empty(n_atomic, dtype=complex)
        for a in range(n_atomic):
            def part(r, fn):
                return fn(np.conj(_at(proj.profile, r)) * state.field_amplitudes(np.array([r]), channel)[a, 0])

            re, _ = integrate.quad(part, lo, hi, args=(np.real,), epsabs=1e-13, epsrel=1e-12, limit=400)
            im, _ = integrate.quad(part, lo, hi, args=(np.imag,), epsabs=1e-13, epsrel=1e-12, limit=400)
            out[a] = re + 1j * im
        return out
    total = None
    for r, ch, w in zip(proj.positions, proj.channels, proj.weights):
        term = np.conj(w) * state.field_amplitudes(np.array([r]), ch)[:, 0]
        total = term if total is None else total + term
    return total


def detect(state, proj: ProjectionState, want_state: bool = False) -> Detection:
    """Project the field part of ``state`` onto ``proj``.

    Returns the detection probability (a density for point-supported
    projectors) and the renormalized atomic remainder.  With ``want_state``
    a zero-probability outcome raises :class:`ImpossibleOutcomeError` instead of
    returning ``atomic_state=None``.
    """
    amp = _overlap(state, proj)
    prob = float(np.sum(np.abs(amp) ** 2))
    if prob < 1e-300:
        if want_state:
            raise ImpossibleOutcomeError("projector has no overlap with the state")
        return Detection(0.0, None, proj.is_density)
    return Detection(prob, amp / math.sqrt(prob), proj.is_density)


def coincidence_density(state, proj: ProjectionState, atomic) -> float:
    """Joint density for finding the photon in ``proj`` and the atom in ``atomic``.

    ``atomic`` is an index into the state's atomic basis or an explicit vector.
    """
    amp = _overlap(state, proj)
    if isinstance(atomic, (int, np.integer)):
        value = amp[atomic]
    else:
        value = np.vdot(np.asarray(atomic, dtype=complex), amp)
    return float(abs(value) ** 2)


def locate_maxima(f: Callable[[float], float], grid: np.ndarray, xtol: float = 1e-12) -> np.ndarray:
    """Local maxima of a sampled curve, refined by bounded scalar minimization."""
    grid = np.asarray(grid, dtype=float)
    values = np.array([f(x) for x in grid])
    peaks = []
    for i in range(1, len(grid) - 1):
        if values[i] >= values[i - 1] and values[i] > values[i + 1]:
            res = optimize.minimize_scalar(
                lambda x: -f(x), bounds=(grid[i - 1], grid[i + 1]), method="bounded", options={"xatol": xtol}
            )
            peaks.append(res.x)
    return np.array(peaks)


def fringe_visibility(values: np.ndarray) -> float:
    """``(max - min) / (max + min)`` of a sampled fringe pattern."""
    hi, lo = float(np.max(values)), float(np.min(values))
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


def normalized_fringe(state, r1: float, r2: float, channel="dx") -> float:
    """Interference term of a Michelson detection divided by its envelope.

    ``(2 P12 - P1 - P2) / (2 sqrt(P1 P2))`` where ``P12`` is the Michelson
    density and ``P1``, ``P2`` the single-arm densities.  Equals the cosine of
    the relative phase of the two arms, free of the amplitude envelope.
    """
    both = detect(state, michelson_projector(r1, r2, channel)).probability
    p1 = detect(state, polarizer_projector(r1, channel)).probability
    p2 = detect(state, polarizer_projector(r2, channel)).probability
    if p1 == 0 or p2 == 0:
        raise ImpossibleOutcomeError("an interferometer arm lies outside the wavefront")
    return (2 * both - p1 - p2) / (2 * math.sqrt(p1 * p2))
