"""Brute-force integration of the emitter-field Schroedinger equations.

The continuum of field modes is replaced by a finite grid of wavenumber cells,
each coupled to its source level with strength ``g sqrt(dk)`` so that the sum
over cells reproduces the integral over ``k``.  Amplitudes are integrated in a
frame rotating at the source level's frequency, which removes the fast optical
carrier; the explicit step is then limited only by the detuning bandwidth
(``dt * max|kc - omega| <= 0.1``).  The stepper is classical fixed-step RK4.

Truncating the grid removes the far-detuned modes, and their absence is not
small: it shifts the decay rate by ``gamma / (pi W)`` for a window of half-width
``W``.  With ``tail_correction=True`` (the default) the modes outside the window
are kept as an asymptotic response.  Integrating their equations by parts in
``1/detuning`` gives a force on the source level that depends only on the level
amplitude, its initial value and initial slope, and the window edges (through
sine and cosine integrals).  The first neglected term is of order ``W**-3``.
The probability carried into those modes is accumulated per channel in
``GridState.leaked``.  Setting ``tail_correction=False`` integrates the closed,
strictly unitary truncated system.

A truncated grid of spacing ``dk`` recurs after ``2 pi / (c dk)``; keep runs well
short of that.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import sici

from wavefront.amplitudes import (
    EmitterParams,
    Wavefront,
    excited_amplitude,
    photon_density_k,
)

__all__ = [
    "ConfigurationError",
    "Level",
    "Channel",
    "DecaySystem",
    "GridSpec",
    "GridState",
    "ConvergenceRow",
    "default_grid",
    "integrate",
    "resume",
    "to_real_space",
    "convergence_report",
    "convergence_row",
    "save_state",
    "load_state",
]

STABILITY_LIMIT = 0.1


class ConfigurationError(ValueError):
    """Raised for a grid or system that cannot be integrated reliably."""


@dataclass(frozen=True)
class Level:
    """An excited level: its frequency and its amplitude at ``t = 0``."""

    omega: float
    amplitude: complex = 1.0


@dataclass(frozen=True)
class Channel:
    """A decay path from ``levels[source]`` into its own photon continuum.

    ``omega`` is the photon frequency at line centre; the channel's coupling is
    ``|g|**2 = gamma * c / (2 pi)``.
    """

    source: int
    gamma: float
    omega: float
    label: str = ""


@dataclass(frozen=True)
class DecaySystem:
    """Excited levels plus the photon channels they decay into.

    Every channel shares the grid's detuning axis: a grid cell at wavenumber
    ``k`` has detuning ``c k - reference_omega`` in every channel, measured from
    that channel's own line centre.
    """

    levels: tuple[Level, ...]
    channels: tuple[Channel, ...]
    c: float = 1.0
    reference_omega: float = 0.0

    def __post_init__(self):
        if not self.levels or not self.channels:
            raise ConfigurationError("need at least one level and one channel")
        if self.c <= 0:
            raise ConfigurationError("c must be positive")
        for ch in self.channels:
            if not 0 <= ch.source < len(self.levels):
                raise ConfigurationError(f"channel {ch.label!r} has no source level {ch.source}")
            if ch.gamma < 0:
                raise ConfigurationError("channel rates must be non-negative")
        if not any(ch.gamma > 0 for ch in self.channels):
            raise ConfigurationError("at least one channel needs a positive rate")

    @classmethod
    def two_level(cls, p: EmitterParams) -> DecaySystem:
        return cls(
            levels=(Level(p.omega0, 1.0),),
            channels=(Channel(0, p.gamma, p.omega0, "photon"),),
            c=p.c,
            reference_omega=p.omega0,
        )

    @classmethod
    def v_system(cls, plus, minus, c: float = 1.0) -> DecaySystem:
        """Two excited sublevels, each with its own channel, prepared in an equal superposition."""
        a = 1 / math.sqrt(2)
        return cls(
            levels=(Level(plus.omega, a), Level(minus.omega, a)),
            channels=(
                Channel(0, plus.gamma, plus.omega, "m+1"),
                Channel(1, minus.gamma, minus.omega, "m-1"),
            ),
            c=c,
            reference_omega=0.5 * (plus.omega + minus.omega),
        )

    @classmethod
    def lambda_system(cls, omega0: float, plus, minus, c: float = 1.0) -> DecaySystem:
        """One excited level decaying into two channels with couplings set by their rates.

        Both channels are centred on ``omega0``; the atomic phases of the
        final states do not enter any probability the oracle reports.
        """
        return cls(
            levels=(Level(omega0, 1.0),),
            channels=(
                Channel(0, plus.gamma, omega0, "m+1"),
                Channel(0, minus.gamma, omega0, "m-1"),
            ),
            c=c,
            reference_omega=omega0,
        )

    @property
    def labels(self) -> list[str]:
        return [ch.label for ch in self.channels]

    def level_rate(self, i: int) -> float:
        return sum(ch.gamma for ch in self.channels if ch.source == i)


@dataclass(frozen=True)
class GridSpec:
    """Wavenumber window ``[k_min, k_max]`` split into ``n_points`` equal cells."""

    k_min: float
    k_max: float
    n_points: int
    dt: float

    @classmethod
    def around(cls, k_center: float, span: float, n_points: int = 2**15, dt: float = 1e-3) -> GridSpec:
        """Window of half-width ``span`` centred on ``k_center``."""
        return cls(k_center - span, k_center + span, int(n_points), float(dt))

    @property
    def spacing(self) -> float:
        return (self.k_max - self.k_min) / self.n_points

    @property
    def wavenumbers(self) -> np.ndarray:
        """Cell centres."""
        return self.k_min + (np.arange(self.n_points) + 0.5) * self.spacing

    def detunings(self, c: float, omega_ref: float) -> np.ndarray:
        return c * self.wavenumbers - omega_ref

    def window_edges(self, c: float, omega_ref: float) -> tuple[float, float]:
        """Distances (lower, upper) from line centre to the window edges, in frequency."""
        return omega_ref - c * self.k_min, c * self.k_max - omega_ref

    def recurrence_time(self, c: float) -> float:
        return 2 * math.pi / (c * self.spacing)

    def covers(self, c: float, omega_ref: float, gamma: float, halfwidths: float = 20.0) -> bool:
        lo, hi = self.window_edges(c, omega_ref)
        return min(lo, hi) >= halfwidths * gamma

    def validate(self, c: float, omega_ref: float) -> None:
        if self.n_points < 2:
            raise ConfigurationError("n_points must be at least 2")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        lo, hi = self.window_edges(c, omega_ref)
        if not (lo > 0 and hi > 0):
            raise ConfigurationError(
                f"grid [{self.k_min}, {self.k_max}] does not bracket resonance k = {omega_ref / c}"
            )
        max_detuning = np.max(np.abs(self.detunings(c, omega_ref)))
        if self.dt * max_detuning > STABILITY_LIMIT:
            raise ConfigurationError(
                f"dt * max|detuning| = {self.dt * max_detuning:.3g} exceeds {STABILITY_LIMIT}"
            )


def default_grid(p: EmitterParams) -> GridSpec:
    """+-50 gamma/c around resonance, 2**15 cells, dt = 1e-3 / gamma."""
    return GridSpec.around(p.k0, 50 * p.gamma / p.c, 2**15, 1e-3 / p.gamma)


@dataclass
class GridState:
    """Oracle state at time ``t``.

    The arrays ``b`` and ``c`` hold rotating-frame amplitudes; ``c`` is scaled by
    ``sqrt(dk)`` so that ``sum |c|**2`` is a probability.  Use ``excited`` and
    ``photon`` for lab-frame values.
    """

    system: DecaySystem
    grid: GridSpec
    t: float
    b: np.ndarray
    c: np.ndarray
    leaked: np.ndarray
    b_initial: np.ndarray
    rate_initial: np.ndarray
    tail_correction: bool = True
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    history: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=complex))

    @property
    def level_omegas(self) -> np.ndarray:
        return np.array([lv.omega for lv in self.system.levels])

    @property
    def excited(self) -> np.ndarray:
        return self.b * np.exp(-1j * self.level_omegas * self.t)

    @property
    def excited_history(self) -> np.ndarray:
        """Lab-frame excited amplitudes at ``times``, shape (n_times, n_levels)."""
        return self.history * np.exp(-1j * np.outer(self.times, self.level_omegas))

    @property
    def detunings(self) -> np.ndarray:
        return self.grid.detunings(self.system.c, self.system.reference_omega)

    def wavenumbers(self, channel: int = 0) -> np.ndarray:
        ch = self.system.channels[channel]
        return (ch.omega + self.detunings) / self.system.c

    @property
    def photon(self) -> np.ndarray:
        """Lab-frame photon amplitude densities, shape (n_channels, n_points)."""
        src = [ch.source for ch in self.system.channels]
        carrier = np.exp(-1j * self.level_omegas[src] * self.t)
        return self.c * carrier[:, None] / math.sqrt(self.grid.spacing)

    def channel_norms(self, include_leaked: bool = True) -> np.ndarray:
        norms = np.sum(np.abs(self.c) ** 2, axis=1)
        return norms + self.leaked if include_leaked else norms

    @property
    def norm(self) -> float:
        """Total probability, including what has leaked to modes outside the grid."""
        return float(np.sum(np.abs(self.b) ** 2) + np.sum(self.channel_norms()))

    def amplitude_at(self, k, channel: int = 0):
        """Cubic-spline interpolation of the photon amplitude at off-grid ``k``.

        The free-propagation carrier ``exp(-i k c t)`` is divided out before
        interpolating and restored afterwards.
        """
        kk = self.wavenumbers(channel)
        carrier = np.exp(1j * kk * self.system.c * self.t)
        demod = self.photon[channel] * carrier
        re = CubicSpline(kk, demod.real)
        im = CubicSpline(kk, demod.imag)
        k = np.asarray(k, dtype=float)
        return (re(k) + 1j * im(k)) * np.exp(-1j * k * self.system.c * self.t)

    def negative_frequency_mass(self, channel: int = 0) -> float:
        kk = self.wavenumbers(channel)
        sel = kk * self.system.c <= 0
        return float(np.sum(np.abs(self.c[channel, sel]) ** 2))


def _tail_kernels(t: float, lo: float, hi: float):
    """Window-edge integrals for the far-detuned response at time ``t``.

    Returns ``(B, D)`` with ``B = int exp(-i d t)/(i d)`` and
    ``D = int exp(-i d t)/d**2`` over detunings ``d`` outside ``[-lo, hi]``.
    """
    if t == 0:
        return 1j * math.log(hi / lo) - math.pi, 1 / lo + 1 / hi
    si_hi, ci_hi = sici(hi * t)
    si_lo, ci_lo = sici(lo * t)
    rest_hi = math.pi / 2 - si_hi
    rest_lo = math.pi / 2 - si_lo
    B = 1j * (ci_hi - ci_lo) - rest_hi - rest_lo
    D = (
        np.exp(-1j * hi * t) / hi
        + 1j * t * ci_hi
        - t * rest_hi
        + np.exp(1j * lo * t) / lo
        - 1j * t * ci_lo
        - t * rest_lo
    )
    return B, D


class _Integrator:
    def __init__(self, system: DecaySystem, grid: GridSpec, tail_correction: bool):
        c = system.c
        grid.validate(c, system.reference_omega)
        self.detuning = grid.detunings(c, system.reference_omega)
        n_levels = len(system.levels)
        self.source = np.array([ch.source for ch in system.channels])
        g_sq = np.array([ch.gamma * c / (2 * math.pi) for ch in system.channels])
        self.gk = np.sqrt(g_sq * grid.spacing)
        self.incidence = np.zeros((n_levels, len(system.channels)))
        self.incidence[self.source, np.arange(len(system.channels))] = 1.0
        level_g_sq = self.incidence @ g_sq
        self.share = g_sq / level_g_sq[self.source]
        self.tail = tail_correction
        lo, hi = grid.window_edges(c, system.reference_omega)
        self.lo, self.hi = lo, hi
        self.gc = level_g_sq / c
        self.shift = -1j * math.log(lo / hi)
        self.slope = 1 / lo + 1 / hi

    def initial_rate(self, b0: np.ndarray) -> np.ndarray:
        # The grid force vanishes at t = 0; only the unresolved continuum acts.
        if not self.tail:
            return np.zeros_like(b0)
        return -math.pi * self.gc * b0

    def rhs(self, t, b, c, b0, db0):
        grid_force = self.incidence @ (-1j * self.gk * c.sum(axis=1))
        if self.tail:
            B, D = _tail_kernels(t, self.lo, self.hi)
            drive = grid_force - self.gc * (b * self.shift - b0 * B - db0 * D)
            db = drive / (1 + self.gc * self.slope)
            outflow = -2 * np.real(np.conj(b) * (db - grid_force))
            dleak = outflow[self.source] * self.share
        else:
            db = grid_force
            dleak = np.zeros(len(self.gk))
        dc = -1j * self.detuning[None, :] * c - 1j * (self.gk * b[self.source])[:, None]
        return db, dc, dleak

    def run(self, state: GridState, t_end: float) -> GridState:
        if t_end < state.t:
            raise ValueError("cannot integrate backwards")
        span = t_end - state.t
        n_steps = math.ceil(span / state.grid.dt - 1e-9) if span > 0 else 0
        h = span / n_steps if n_steps else 0.0
        b, c, leak = state.b.copy(), state.c.copy(), state.leaked.copy()
        b0, db0 = state.b_initial, state.rate_initial
        times = np.empty(n_steps)
        hist = np.empty((n_steps, len(b)), dtype=complex)
        t0 = state.t
        for n in range(n_steps):
            t = t0 + n * h
            k1 = self.rhs(t, b, c, b0, db0)
            k2 = self.rhs(t + h / 2, b + h / 2 * k1[0], c + h / 2 * k1[1], b0, db0)
            k3 = self.rhs(t + h / 2, b + h / 2 * k2[0], c + h / 2 * k2[1], b0, db0)
            k4 = self.rhs(t + h, b + h * k3[0], c + h * k3[1], b0, db0)
            b = b + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            c = c + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            leak = leak + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            times[n] = t0 + (n + 1) * h
            hist[n] = b
        return GridState(
            system=state.system,
            grid=state.grid,
            t=float(t_end) if n_steps else state.t,
            b=b,
            c=c,
            leaked=leak,
            b_initial=b0,
            rate_initial=db0,
            tail_correction=state.tail_correction,
            times=np.concatenate([state.times, times]),
            history=np.concatenate([state.history, hist]) if len(state.history) else hist,
        )


def _as_system(system) -> DecaySystem:
    if isinstance(system, EmitterParams):
        return DecaySystem.two_level(system)
    if isinstance(system, DecaySystem):
        return system
    raise TypeError(f"expected EmitterParams or DecaySystem, got {type(system).__name__}")


def integrate(
    system: EmitterParams | DecaySystem,
    grid: GridSpec,
    t_end: float,
    tail_correction: bool = True,
) -> GridState:
    """Integrate from the levels' initial amplitudes and an empty field to ``t_end``.

    Raises
    ------
    ConfigurationError
        If the grid does not bracket resonance or ``dt`` violates the
        stability bound; checked before any stepping.
    """
    system = _as_system(system)
    if t_end < 0:
        raise ValueError("t_end must be non-negative")
    worker = _Integrator(system, grid, tail_correction)
    b0 = np.array([complex(lv.amplitude) for lv in system.levels])
    n_ch = len(system.channels)
    start = GridState(
        system=system,
        grid=grid,
        t=0.0,
        b=b0.copy(),
        c=np.zeros((n_ch, grid.n_points), dtype=complex),
        leaked=np.zeros(n_ch),
        b_initial=b0,
        rate_initial=worker.initial_rate(b0),
        tail_correction=tail_correction,
        times=np.zeros(1),
        history=b0[None, :].copy(),
    )
    return worker.run(start, float(t_end))


def resume(state: GridState, t_end: float) -> GridState:
    """Continue an integration to a later time; history is extended."""
    worker = _Integrator(state.system, state.grid, state.tail_correction)
    return worker.run(state, float(t_end))


def to_real_space(
    state: GridState,
    channel: int = 0,
    smoothing: bool = False,
    filter_order: int = 4,
    filter_strength: float = 20.0,
) -> Wavefront:
    """Fourier transform one channel's grid amplitudes to position space.

    ``psi(x) = (2 pi)**-0.5 * sum_k dk psi(k) exp(i k x)`` on the periodic cell
    of length ``2 pi / dk`` that the grid resolves, sampled at spacing
    ``2 pi / (n dk)`` and placed so that ``x = 0`` is a sample near the middle.
    Without smoothing, ``sum dx |psi(x)|**2`` equals the grid photon norm
    (discrete Parseval).  ``smoothing`` multiplies the spectrum by
    ``exp(-strength * (|d| / W)**order)`` (``d`` the offset from the window
    centre, ``W`` the half-width) to suppress ringing from the wavefront's jumps;
    this costs exact Parseval.
    """
    n = state.grid.n_points
    dk = state.grid.spacing
    k = state.wavenumbers(channel)
    amp = state.photon[channel]
    if smoothing:
        mid = 0.5 * (k[0] + k[-1])
        half = 0.5 * (k[-1] - k[0] + dk)
        amp = amp * np.exp(-filter_strength * (np.abs(k - mid) / half) ** filter_order)
    dx = 2 * math.pi / (n * dk)
    x0 = -(n // 2) * dx
    idx = np.arange(n)
    positions = x0 + idx * dx
    summed = np.fft.ifft(amp * np.exp(1j * k * x0)) * n
    psi = summed * np.exp(1j * k[0] * idx * dx) * dk / math.sqrt(2 * math.pi)
    return Wavefront(positions, state.t, psi)


@dataclass(frozen=True)
class ConvergenceRow:
    grid: GridSpec
    survival_error: float
    density_error: float
    norm_drift: float


def convergence_report(
    p: EmitterParams,
    t_end: float,
    specs: Sequence[GridSpec],
    tail_correction: bool = True,
) -> list[ConvergenceRow]:
    """Oracle error against the closed forms for a sequence of grids.

    ``survival_error`` is the largest relative error of the excited population
    over the run; ``density_error`` the largest relative error of the photon
    density at ``t_end`` within 5 linewidths of resonance (over the whole grid
    if no cell falls there); ``norm_drift`` is ``|norm - 1| / (gamma t_end)``.
    """
    if len(specs) < 2:
        raise ValueError("need at least two grid specs")
    return [convergence_row(p, integrate(p, spec, t_end, tail_correction=tail_correction)) for spec in specs]


def convergence_row(p: EmitterParams, state: GridState) -> ConvergenceRow:
    """Errors of one two-level oracle run against the closed forms."""
    exact = np.abs(excited_amplitude(p, state.times)) ** 2
    got = np.abs(state.excited_history[:, 0]) ** 2
    survival_error = float(np.max(np.abs(got / exact - 1)))
    k = state.wavenumbers(0)
    window = np.abs(k * p.c - p.omega0) <= 5 * p.gamma
    if not window.any():
        window = np.ones_like(k, dtype=bool)
    ref = photon_density_k(p, k[window], state.t)
    num = np.abs(state.photon[0, window]) ** 2
    density_error = float(np.max(np.abs(num / ref - 1))) if state.t > 0 else 0.0
    drift = abs(state.norm - 1) / (p.gamma * state.t) if state.t > 0 else 0.0
    return ConvergenceRow(state.grid, survival_error, density_error, float(drift))


_MAGIC = b"WFGS"
_VERSION = 1


def save_state(path, state: GridState) -> None:
    """Write a versioned binary dump of ``state``.

    Layout: magic ``WFGS``, little-endian uint16 version, uint32 header length,
    UTF-8 JSON header, then complex arrays as little-endian float64
    (real, imag) pairs in the order b, c, b_initial, rate_initial.
    """
    sys_ = state.system
    header = {
        "grid": {
            "k_min": state.grid.k_min,
            "k_max": state.grid.k_max,
            "n_points": state.grid.n_points,
            "dt": state.grid.dt,
        },
        "levels": [[lv.omega, complex(lv.amplitude).real, complex(lv.amplitude).imag] for lv in sys_.levels],
        "channels": [[ch.source, ch.gamma, ch.omega, ch.label] for ch in sys_.channels],
        "labels": sys_.labels,
        "c": sys_.c,
        "reference_omega": sys_.reference_omega,
        "t": state.t,
        "tail_correction": state.tail_correction,
        "leaked": [float(v) for v in state.leaked],
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(Path(path), "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, len(blob)))
        fh.write(blob)
        for arr in (state.b, state.c, state.b_initial, state.rate_initial):
            fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def load_state(path) -> GridState:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError("not a grid-state dump")
    version, size = struct.unpack("<HI", data[4:10])
    if version != _VERSION:
        raise ValueError(f"unsupported dump version {version}")
    header = json.loads(data[10 : 10 + size])
    body = np.frombuffer(data[10 + size :], dtype="<c16")
    grid = GridSpec(**header["grid"])
    system = DecaySystem(
        levels=tuple(Level(w, complex(re, im)) for w, re, im in header["levels"]),
        channels=tuple(Channel(s, g, w, lab) for s, g, w, lab in header["channels"]),
        c=header["c"],
        reference_omega=header["reference_omega"],
    )
    n_lv, n_ch, n = len(system.levels), len(system.channels), grid.n_points
    sizes = [n_lv, n_ch * n, n_lv, n_lv]
    if body.size != sum(sizes):
        raise ValueError("truncated grid-state dump")
    parts = np.split(body.astype(complex), np.cumsum(sizes)[:-1])
    return GridState(
        system=system,
        grid=grid,
        t=header["t"],
        b=parts[0],
        c=parts[1].reshape(n_ch, n),
        leaked=np.array(header["leaked"]),
        b_initial=parts[2],
        rate_initial=parts[3],
        tail_correction=header["tail_correction"],
    )
