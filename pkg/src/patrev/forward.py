"""Synthetic measurement data for spherical sensor arrays.

The lossless wave propagation of a parametric source (balls and Gaussians)
is evaluated in closed form through spherical means, so boundary traces are
exact up to round-off.  Attenuated traces are produced by pushing the exact
traces through the attenuation operator on a frequency grid; with zero
attenuation that reduces to band limiting.

Units are nondimensional with sound speed 1: lengths and times share one
unit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from patrev import dispersion
from patrev.errors import NumericFailure, ParameterError, QuiescenceError
from patrev.models import KSB, AttenuationModel, ThermoViscous
from patrev.spectral import FrequencyGrid, TimeSignal, attenuation_kernels

#: Gaussians are treated as compactly supported at this many sigmas.
GAUSSIAN_SUPPORT_SIGMAS = 5.0

QUIESCENCE_TOL = 1e-6


@dataclass(frozen=True)
class Ball:
    """Uniform ball source: amplitude inside, zero outside."""

    center: tuple[float, float, float]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ParameterError(f"ball radius must be > 0, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def extent(self) -> float:
        return self.radius


@dataclass(frozen=True)
class Gaussian:
    """Gaussian source ``A * exp(-|x-c|^2 / (2 sigma^2))``."""

    center: tuple[float, float, float]
    sigma: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ParameterError(f"gaussian width must be > 0, got {self.sigma}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def extent(self) -> float:
        return GAUSSIAN_SUPPORT_SIGMAS * self.sigma


Component = Union[Ball, Gaussian]


@dataclass(frozen=True)
class Phantom:
    """Initial pressure distribution: a sum of parametric components."""

    components: tuple[Component, ...]
    support_radius: float = field(default=0.0)

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ParameterError("phantom needs at least one component")
        object.__setattr__(self, "components", comps)
        auto = max(_norm3(c.center) + c.extent for c in comps)
        if self.support_radius == 0.0:
            object.__setattr__(self, "support_radius", auto)
        elif self.support_radius < auto:
            raise ParameterError(
                f"declared support radius {self.support_radius} is smaller than "
                f"the component extent {auto:.6g}"
            )

    @classmethod
    def ball(cls, center=(0.0, 0.0, 0.0), radius=0.5, amplitude=1.0) -> "Phantom":
        return cls((Ball(tuple(center), radius, amplitude),))

    @classmethod
    def gaussian(cls, center=(0.0, 0.0, 0.0), sigma=0.2, amplitude=1.0) -> "Phantom":
        return cls((Gaussian(tuple(center), sigma, amplitude),))

    def value(self, points: np.ndarray) -> np.ndarray:
        """Source value at one or many 3-vectors."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for c in self.components:
            d = np.linalg.norm(pts - np.asarray(c.center), axis=1)
            if isinstance(c, Ball):
                out += c.amplitude * (d <= c.radius)
            else:
                out += c.amplitude * np.exp(-(d**2) / (2.0 * c.sigma**2))
        return out if np.ndim(points) > 1 else out[0] * np.ones(())


def _norm3(v) -> float:
    return math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)


# ---------------------------------------------------------------------------
# spherical means and free-space pressure


def _ball_mean(d: float, R: float, r: np.ndarray) -> np.ndarray:
    """Average of the unit ball indicator over spheres of radii ``r`` at
    distance ``d`` from the ball center."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    if d < 1e-14:
        return (r <= R).astype(float)
    full = r + d <= R
    out[full] = 1.0
    partial = (~full) & (np.abs(d - r) < R) & (r > 0)
    rp = r[partial]
    cos_theta = np.clip((d * d + rp * rp - R * R) / (2.0 * d * rp), -1.0, 1.0)
    out[partial] = 0.5 * (1.0 - cos_theta)
    out[r == 0] = 1.0 if d <= R else 0.0
    return out


def _gaussian_mean(d: float, sigma: float, r: np.ndarray) -> np.ndarray:
    """Average of a unit Gaussian over spheres of radii ``r`` (stable form)."""
    r = np.asarray(r, dtype=float)
    s2 = sigma * sigma
    z = d * r / s2
    small = z < 1e-6
    em = np.exp(-((d - r) ** 2) / (2.0 * s2))
    ep = np.exp(-((d + r) ** 2) / (2.0 * s2))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (em - ep) / (2.0 * z)
    # sinh(z)/z -> 1 + z^2/6 as z -> 0
    base = np.exp(-(d * d + r * r) / (2.0 * s2))
    out = np.where(small, base * (1.0 + z * z / 6.0), out)
    return out


def spherical_mean(phantom: Phantom, x, r) -> np.ndarray:
    """Average of the source over the sphere of radius ``r`` about ``x``.

    Closed form for every component; ``r`` may be an array.  ``r = 0``
    returns the source value at ``x``.
    """
    radii = np.asarray(r, dtype=float)
    scalar = radii.ndim == 0
    radii = np.atleast_1d(radii)
    if np.any(radii < 0):
        raise ParameterError("sphere radius must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(radii)
    for c in phantom.components:
        d = float(np.linalg.norm(x - np.asarray(c.center)))
        if isinstance(c, Ball):
            out += c.amplitude * _ball_mean(d, c.radius, radii)
        else:
            out += c.amplitude * _gaussian_mean(d, c.sigma, radii)
    return float(out[0]) if scalar else out


def _ball_pressure(d: float, R: float, t: np.ndarray) -> np.ndarray:
    """Free-space pressure of a unit ball at distance ``d``: flat top inside,
    then the classical N-wave ``(d - t) / (2 d)`` across the crossing window."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    if d < 1e-14:
        return (t < R).astype(float)
    inside = t + d <= R
    out[inside] = 1.0
    crossing = (~inside) & (np.abs(d - t) < R)
    out[crossing] = (d - t[crossing]) / (2.0 * d)
    return out


def _gaussian_pressure(d: float, sigma: float, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    s2 = sigma * sigma
    em = np.exp(-((d - t) ** 2) / (2.0 * s2))
    ep = np.exp(-((d + t) ** 2) / (2.0 * s2))
    if d < 1e-6 * sigma:
        return np.exp(-(t * t) / (2.0 * s2)) * (1.0 - t * t / s2)
    return 0.5 * ((1.0 - t / d) * em + (1.0 + t / d) * ep)


def freespace_pressure(phantom: Phantom, x, t) -> np.ndarray:
    """Lossless pressure trace at ``x``: the time derivative of ``t`` times
    the spherical mean, applied analytically to the closed forms.

    At ``t -> 0+`` this recovers the source value at ``x``; a ball trace
    vanishes identically beyond the sharp rear front.
    """
    times = np.asarray(t, dtype=float)
    scalar = times.ndim == 0
    times = np.atleast_1d(times)
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(times)
    for c in phantom.components:
        d = float(np.linalg.norm(x - np.asarray(c.center)))
        if isinstance(c, Ball):
            out += c.amplitude * _ball_pressure(d, c.radius, times)
        else:
            out += c.amplitude * _gaussian_pressure(d, c.sigma, times)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# sensors and data sets


@dataclass(frozen=True)
class SensorArray:
    """Quadrature nodes and weights on the measurement sphere."""

    points: np.ndarray
    weights: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or w.shape != (pts.shape[0],):
            raise ParameterError("sensor points must be (M, 3) with matching weights")
        radii = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(radii - self.radius)) > 1e-12 * max(self.radius, 1.0):
            raise ParameterError("sensor points must lie on the sphere")
        if np.any(w <= 0):
            raise ParameterError("sensor weights must be positive")
        area = 4.0 * math.pi * self.radius**2
        if abs(w.sum() - area) > 1e-9 * area:
            raise ParameterError("sensor weights must sum to the sphere area")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def fibonacci(cls, count: int, radius: float) -> "SensorArray":
        """Near-uniform Fibonacci-lattice nodes with equal weights."""
        if count < 1:
            raise ParameterError("need at least one sensor")
        m = np.arange(count)
        z = 1.0 - (2.0 * m + 1.0) / count
        phi = math.pi * (3.0 - math.sqrt(5.0)) * m
        s = np.sqrt(1.0 - z * z)
        pts = radius * np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
        w = np.full(count, 4.0 * math.pi * radius**2 / count)
        return cls(pts, w, radius)

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class DataSet:
    """Per-sensor boundary traces on a common time grid starting at 0."""

    sensors: SensorArray
    traces: np.ndarray
    dt: float
    model: AttenuationModel
    phantom: Phantom | None = None
    grid_rho: float = 0.0

    def __post_init__(self) -> None:
        tr = np.asarray(self.traces, dtype=float)
        if tr.ndim != 2 or tr.shape[0] != self.sensors.count:
            raise ParameterError("traces must be (sensor count, time samples)")
        object.__setattr__(self, "traces", tr)

    @property
    def n_time(self) -> int:
        return self.traces.shape[1]

    @property
    def final_time(self) -> float:
        return self.dt * (self.n_time - 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_time)

    def trace(self, index: int) -> TimeSignal:
        return TimeSignal(self.traces[index], 0.0, self.dt)


def default_final_time(model: AttenuationModel, phantom: Phantom, sensor_radius: float) -> float:
    """Latest arrival plus dissipation margin (attenuated tails are asymptotic)."""
    arrival = sensor_radius + phantom.support_radius
    return arrival + 5.0 * _attenuation_time_constant(model) + 1.0


def _attenuation_time_constant(model: AttenuationModel) -> float:
    if isinstance(model, ThermoViscous):
        return model.a
    if isinstance(model, KSB):
        return model.alpha0 * model.tau0
    return max(tau for tau, _ in model.pairs)


def front_arrival_time(model: AttenuationModel, phantom: Phantom, point) -> float:
    """Earliest time the wavefront can reach ``point`` (strongly causal models)."""
    dist = float(np.linalg.norm(np.asarray(point, dtype=float))) - phantom.support_radius
    if dist <= 0:
        return 0.0
    return dist * dispersion.front_slowness(model)


def synthesize_dataset(
    phantom: Phantom,
    sensors: SensorArray,
    model: AttenuationModel,
    grid: FrequencyGrid,
    final_time: float,
    n_time: int = 1025,
    threads: int = 1,
) -> DataSet:
    """Exact lossless traces pushed through the attenuation operator.

    Raises :class:`QuiescenceError` when the lossless traces have not
    settled at the final time (support still arriving); attenuated tails
    beyond that settle only asymptotically and are band limited by the grid.
    """
    if phantom.support_radius >= sensors.radius:
        raise ParameterError("phantom support must lie strictly inside the sensor sphere")
    times = np.linspace(0.0, final_time, n_time)
    dt = float(times[1] - times[0])
    free = np.vstack([freespace_pressure(phantom, y, times) for y in sensors.points])

    peak = float(np.max(np.abs(free)))
    if peak > 0.0:
        residual = float(np.max(np.abs(free[:, -1]))) / peak
        if residual > QUIESCENCE_TOL:
            raise QuiescenceError(
                f"final time {final_time} too small: lossless trace residual "
                f"{residual:.3e} exceeds {QUIESCENCE_TOL:.0e} of the trace maximum"
            )

    # Kernels are sensor-independent; each trace is an independent work item
    # with identical per-item arithmetic, so results do not depend on the
    # thread count.
    analysis, coeffs, synthesis = attenuation_kernels(model, grid, times, dt)

    def attenuate(row: np.ndarray) -> np.ndarray:
        vals = synthesis @ (coeffs * (analysis @ row))
        residue = float(np.max(np.abs(vals.imag)))
        if residue > 1e-8 * max(float(np.max(np.abs(row))), 1e-300):
            raise NumericFailure(f"attenuated trace not real: residue {residue:.3e}")
        return vals.real

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(attenuate, free))
    else:
        rows = [attenuate(row) for row in free]
    return DataSet(sensors, np.vstack(rows), dt, model, phantom, grid.rho)
