"""Frequency-domain signal operators.

Everything here works on uniformly sampled, compactly supported real time
signals and a symmetric frequency grid.  Integrals are composite trapezoid
sums implemented literally from their displayed forms, each with its own
normalization: the general-purpose transform :func:`fourier` carries the
``1/sqrt(2*pi)`` convention, while the attenuation and correction operators
carry a single ``1/(2*pi)`` outside an unnormalized inner integral.  Mixing
these with an FFT normalization is the classic source of 2*pi bugs, so no
FFT is used; direct quadrature also evaluates the transforms at complex
wavenumbers exactly.

Frequency integrals run over the symmetric grid, so conjugate pairs cancel
imaginary parts; outputs are checked to be real to round-off before the
imaginary part is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from patrev import dispersion
from patrev.errors import NumericFailure, OverflowGuardError, ParameterError
from patrev.models import AttenuationModel

SQRT_2PI = math.sqrt(2.0 * math.pi)

#: Natural-log bound on any complex-frequency exponent (double range guard).
EXP_GUARD = 700.0

#: Imaginary residue allowed before truncating an output to its real part,
#: relative to the sup norm of the input signal.
REALNESS_TOL = 1e-8


@dataclass(frozen=True)
class TimeSignal:
    """Uniformly sampled real signal with compact support in its window."""

    samples: np.ndarray
    t0: float
    dt: float

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size < 2:
            raise ParameterError("a time signal needs a 1-D array of at least 2 samples")
        if not self.dt > 0:
            raise ParameterError(f"sample spacing must be > 0, got {self.dt}")
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    @classmethod
    def sample(cls, fn: Callable[[np.ndarray], np.ndarray], t0: float, t1: float, n: int) -> "TimeSignal":
        times = np.linspace(t0, t1, n)
        return cls(np.asarray(fn(times), dtype=np.float64), t0, float(times[1] - times[0]))

    def quad_weights(self) -> np.ndarray:
        """Composite trapezoid weights over the sample window."""
        w = np.full(self.n, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.quad_weights() * self.samples**2)))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform symmetric frequency grid on [-rho, rho] (2*n_half+1 nodes)."""

    rho: float
    n_half: int = 512

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ParameterError(f"cutoff frequency must be > 0, got {self.rho}")
        if self.n_half < 1:
            raise ParameterError("frequency grid needs at least one positive node")

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(-self.rho, self.rho, 2 * self.n_half + 1)

    @property
    def n(self) -> int:
        return 2 * self.n_half + 1

    def quad_weights(self) -> np.ndarray:
        d_omega = self.rho / self.n_half
        w = np.full(self.n, d_omega)
        w[0] = w[-1] = 0.5 * d_omega
        return w


@dataclass(frozen=True)
class Spectrum:
    """Complex transform values on a frequency grid.

    Conjugate-symmetric whenever it is the transform of a real signal.
    """

    grid: FrequencyGrid
    values: np.ndarray


# ---------------------------------------------------------------------------
# transforms


def _guard_exponent(im_max: float, t_max: float, what: str) -> None:
    if im_max * t_max > EXP_GUARD:
        raise OverflowGuardError(
            f"{what}: |Im| = {im_max:.6g} over support extent {t_max:.6g} exceeds "
            f"the exp({EXP_GUARD:.0f}) range guard"
        )


def fourier(signal: TimeSignal, omega: Any) -> Any:
    """Transform ``(1/sqrt(2*pi)) * integral(exp(i*omega*t) * phi(t) dt)``.

    ``omega`` may be complex (evaluation at a complex wavenumber); the
    imaginary part is guarded against double-precision overflow.
    """
    om = np.asarray(omega, dtype=complex)
    scalar = om.ndim == 0
    t_max = max(abs(signal.t0), abs(signal.t_end))
    im_max = float(np.max(np.abs(om.imag))) if om.size else 0.0
    _guard_exponent(im_max, t_max, f"fourier at Im omega = {im_max:.6g}")
    kernel = np.exp(1j * np.multiply.outer(om, signal.times))
    out = kernel @ (signal.quad_weights() * signal.samples) / SQRT_2PI
    return complex(out) if scalar else out


def spectrum(signal: TimeSignal, grid: FrequencyGrid) -> Spectrum:
    return Spectrum(grid, fourier(signal, grid.omegas))


def _to_real(values: np.ndarray, scale: float, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericFailure(f"{what}: non-finite values in the frequency synthesis")
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if residue > REALNESS_TOL * max(scale, 1e-300):
        raise NumericFailure(
            f"{what}: imaginary residue {residue:.3e} exceeds {REALNESS_TOL:.0e} "
            f"of the input scale {scale:.3e}"
        )
    return values.real


def _synthesize(grid: FrequencyGrid, coeffs: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``(1/sqrt(2*pi)) * sum_k W_k coeffs_k exp(-i w_k t)`` over the grid."""
    kernel = np.exp(-1j * np.multiply.outer(times, grid.omegas))
    return kernel @ (grid.quad_weights() * coeffs) / SQRT_2PI


def s_rho(signal: TimeSignal, rho: float, t: float, n_half: int = 512) -> float:
    """Band-limited evaluation of the signal at one time.

    Truncates the spectrum to [-rho, rho]; the identity on signals whose
    content lies below the cutoff.
    """
    grid = FrequencyGrid(rho, n_half)
    vals = _synthesize(grid, fourier(signal, grid.omegas), np.asarray([t], dtype=float))
    return float(_to_real(vals, signal.sup_norm(), "s_rho")[0])


def band_limit(signal: TimeSignal, grid: FrequencyGrid) -> TimeSignal:
    """The band-limiter applied on the signal's own time grid."""
    vals = _synthesize(grid, fourier(signal, grid.omegas), signal.times)
    return TimeSignal(_to_real(vals, signal.sup_norm(), "band_limit"), signal.t0, signal.dt)


# ---------------------------------------------------------------------------
# attenuation and correction operators


def _inner_transform(signal: TimeSignal, wavenumbers: np.ndarray, sign: float, what: str) -> np.ndarray:
    """Unnormalized ``integral(exp(sign*i*k*s) * phi(s) ds)`` over the support."""
    t_max = max(abs(signal.t0), abs(signal.t_end))
    im_max = float(np.max(np.abs(wavenumbers.imag)))
    _guard_exponent(im_max, t_max, what)
    kernel = np.exp(sign * 1j * np.multiply.outer(wavenumbers, signal.times))
    return kernel @ (signal.quad_weights() * signal.samples)


def attenuation_kernels(
    model: AttenuationModel, grid: FrequencyGrid, times: np.ndarray, dt: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Precomputed quadrature kernels of the attenuation operator.

    Returns ``(analysis, coeffs, synthesis)`` with ``analysis`` of shape
    (n_freq, n_time) carrying the trapezoid-weighted inner transform at the
    complex wavenumber, ``coeffs`` the weighted ``omega/kappa`` frequency
    factors, and ``synthesis`` the (n_time, n_freq) output kernel.  The full
    map of a trace ``phi`` is ``synthesis @ (coeffs * (analysis @ phi))``;
    sharing the kernels across traces renders a whole sensor array cheaply.
    """
    om = grid.omegas
    k = dispersion.kappa(model, om)
    t_max = float(np.max(np.abs(times)))
    _guard_exponent(float(np.max(np.abs(k.imag))), t_max, "attenuation at kappa")
    w_t = np.full(times.size, dt)
    w_t[0] = w_t[-1] = 0.5 * dt
    analysis = np.exp(1j * np.multiply.outer(k, times)) * w_t
    omega_over_kappa = 1.0 / dispersion.kappa_ratio(model, om + 0j)
    coeffs = grid.quad_weights() * omega_over_kappa / (2.0 * math.pi)
    synthesis = np.exp(-1j * np.multiply.outer(times, om))
    return analysis, coeffs, synthesis


def apply_attenuation(model: AttenuationModel, signal: TimeSignal, grid: FrequencyGrid) -> TimeSignal:
    """Map an unattenuated signal to its attenuated version.

    Literal double quadrature of the attenuation operator: the inner
    transform is taken at the complex wavenumber ``kappa(omega)``, the outer
    frequency integral over the grid.  With zero attenuation this reduces to
    the band-limiter.
    """
    analysis, coeffs, synthesis = attenuation_kernels(model, grid, signal.times, signal.dt)
    vals = synthesis @ (coeffs * (analysis @ signal.samples))
    return TimeSignal(_to_real(vals, signal.sup_norm(), "apply_attenuation"), signal.t0, signal.dt)


def _correction_coeffs(model: AttenuationModel, grid: FrequencyGrid, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Corrected wavenumber and the ``omega*lambda/kappa_tilde`` factor."""
    om = grid.omegas
    kt = dispersion.kappa_tilde(model, om, order)
    factor = dispersion.lambda_weight(model, om, order) / dispersion.kappa_tilde_ratio(
        model, om + 0j, order
    )
    return kt, factor


def apply_correction(model: AttenuationModel, signal: TimeSignal, grid: FrequencyGrid, order: int) -> TimeSignal:
    """Regularized correction operator (the non-adjoint direction).

    The inner integral is evaluated at the corrected wavenumber over the
    signal's support; the displayed half-line integral is recovered when the
    signal is supported in ``t >= 0``.
    """
    kt, factor = _correction_coeffs(model, grid, order)
    inner = _inner_transform(signal, kt, +1.0, "apply_correction at kappa_tilde")
    kernel = np.exp(-1j * np.multiply.outer(signal.times, grid.omegas))
    vals = kernel @ (grid.quad_weights() * factor * inner) / (2.0 * math.pi)
    return TimeSignal(_to_real(vals, signal.sup_norm(), "apply_correction"), signal.t0, signal.dt)


def apply_correction_adjoint(model: AttenuationModel, signal: TimeSignal, grid: FrequencyGrid, order: int) -> TimeSignal:
    """Adjoint correction operator, the one composed with the attenuation map.

    The inner transform is at real frequencies; the output kernel carries the
    corrected wavenumber, so output times are range-guarded.
    """
    kt, factor = _correction_coeffs(model, grid, order)
    om = grid.omegas
    inner = _inner_transform(signal, om.astype(complex), -1.0, "adjoint inner transform")
    t_max = max(abs(signal.t0), abs(signal.t_end))
    _guard_exponent(float(np.max(np.abs(kt.imag))), t_max, "adjoint output at kappa_tilde")
    kernel = np.exp(1j * np.multiply.outer(signal.times, kt))
    vals = kernel @ (grid.quad_weights() * factor * inner) / (2.0 * math.pi)
    return TimeSignal(
        _to_real(vals, signal.sup_norm(), "apply_correction_adjoint"), signal.t0, signal.dt
    )


# ---------------------------------------------------------------------------
# expansion operators (first and second order in the attenuation strength)


def _with_samples(signal: TimeSignal, samples: np.ndarray) -> TimeSignal:
    return TimeSignal(samples, signal.t0, signal.dt)


def first_order_operators(
    model: AttenuationModel, signal: TimeSignal, grid: FrequencyGrid
) -> tuple[TimeSignal, TimeSignal]:
    """First-order expansion terms of the attenuation map and its correction.

    Returns ``(f1, g1)``.  When the first-order condition ties the
    coefficients together, ``f1 + g1`` vanishes to band-limit tolerance.
    """
    om = grid.omegas
    times = signal.times
    scale = signal.sup_norm()
    F = fourier(signal, om)
    Fs = fourier(_with_samples(signal, times * signal.samples), om)
    l1 = dispersion.lambda1(model, om + 0j)
    g1m = dispersion.gamma1(model, -om)

    f1_vals = _synthesize(grid, -1j * om * l1 * Fs + l1 * F, times)
    g1_vals = _synthesize(grid, g1m * F, times) + times * _synthesize(grid, 1j * om * l1 * F, times)
    f1 = _to_real(f1_vals, scale, "first_order_operators f1")
    g1 = _to_real(g1_vals, scale, "first_order_operators g1")
    return _with_samples(signal, f1), _with_samples(signal, g1)


def second_order_operators(
    model: AttenuationModel, signal: TimeSignal, grid: FrequencyGrid
) -> tuple[TimeSignal, TimeSignal, TimeSignal]:
    """Second-order expansion terms ``(f2, g2, g1[f1])``, evaluated literally.

    With the second-order condition in force the sum of the three vanishes
    to band-limit tolerance.
    """
    om = grid.omegas
    times = signal.times
    scale = signal.sup_norm()
    F = fourier(signal, om)
    Fs = fourier(_with_samples(signal, times * signal.samples), om)
    Fss = fourier(_with_samples(signal, times**2 * signal.samples), om)

    l1 = dispersion.lambda1(model, om + 0j)
    l2 = dispersion.lambda2(model, om)
    g1m = dispersion.gamma1(model, -om)
    g2m = dispersion.gamma2(model, -om)
    mu2 = l1 * l1 - l2
    iwl1 = 1j * om * l1

    f2_vals = _synthesize(grid, mu2 * F - 1j * om * mu2 * Fs + 0.5 * iwl1**2 * Fss, times)
    g2_vals = (
        _synthesize(grid, g2m * F, times)
        + times * _synthesize(grid, 1j * om * (g1m * l1 - l2) * F, times)
        + times**2 * _synthesize(grid, 0.5 * iwl1**2 * F, times)
    )
    g1f1_vals = (
        _synthesize(grid, g1m * l1 * F - 1j * om * g1m * l1 * Fs, times)
        + times * _synthesize(grid, 1j * om * l1 * l1 * F - iwl1**2 * Fs, times)
    )
    f2 = _to_real(f2_vals, scale, "second_order_operators f2")
    g2 = _to_real(g2_vals, scale, "second_order_operators g2")
    g1f1 = _to_real(g1f1_vals, scale, "second_order_operators g1f1")
    return _with_samples(signal, f2), _with_samples(signal, g2), _with_samples(signal, g1f1)
