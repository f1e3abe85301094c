"""Regularized time-reversal reconstruction.

The imaging functional integrates, over the recording window, back-propagated
fields built from the corrected fundamental solution of the Helmholtz
equation.  The frequency integral is truncated at the cutoff ``rho``; above
the model's stability threshold the corrected kernel amplifies faster than
the data decays and the functional degrades, so exceeding the threshold
requires an explicit override.

The double (frequency x sensor) integral is evaluated per point; the
recording-time integral is folded into a per-sensor spectrum computed once
per dataset, which is a pure reordering of the literal triple quadrature
(the two agree to round-off, asserted in the tests).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from patrev import dispersion
from patrev.errors import (
    CapabilityError,
    NumericFailure,
    OverflowGuardError,
    ParameterError,
)
from patrev.forward import DataSet, Phantom
from patrev.models import AttenuationModel, has_attenuation
from patrev.spectral import EXP_GUARD, REALNESS_TOL, FrequencyGrid

log = logging.getLogger(__name__)

#: Closed-surface single-layer compensation.  Retransmitting only the
#: pressure traces (a monopole layer, no normal derivatives) focuses half of
#: the source amplitude: the far-field sensor integral reduces to
#: ``sin(w|x-x'|)/(4 pi w |x-x'|)`` and the frequency integral then yields
#: ``f/2``.  The imaging functional therefore carries a factor 2 so that it
#: converges to the source itself.
SINGLE_LAYER_COMPENSATION = 2.0


def green_free(x, y, omega: Any) -> Any:
    """Free-space outgoing Helmholtz kernel ``exp(i w |x-y|) / (4 pi |x-y|)``."""
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if r == 0.0:
        raise ParameterError("green_free is singular at x = y")
    return np.exp(1j * np.asarray(omega) * r) / (4.0 * math.pi * r)


def green_corrected(model: AttenuationModel, x, y, omega: Any, order: int) -> Any:
    """Corrected kernel ``lambda(w) exp(i kappa_tilde(w) |x-y|) / (4 pi |x-y|)``.

    At order 0 this equals :func:`green_free` exactly.  The modulus grows
    like ``exp(|Im kappa_tilde| |x-y|)``, which is what undoes attenuation;
    the growth is range-guarded and large cutoffs may require reducing
    ``rho`` toward the model threshold.
    """
    r = float(np.linalg.norm(np.asarray(x, float) - np.asarray(y, float)))
    if r == 0.0:
        raise ParameterError("green_corrected is singular at x = y")
    kt = dispersion.kappa_tilde(model, omega, order)
    im_max = float(np.max(np.abs(np.imag(np.atleast_1d(kt)))))
    if im_max * r > EXP_GUARD:
        raise OverflowGuardError(
            f"corrected kernel exponent {im_max * r:.3g} out of range at "
            f"|x-y| = {r:.3g}; reduce the cutoff toward the stability threshold"
        )
    lam = dispersion.lambda_weight(model, omega, order)
    return lam * np.exp(1j * kt * r) / (4.0 * math.pi * r)


@dataclass(frozen=True)
class ReconstructionConfig:
    """Cutoff, grid resolution, correction order, and evaluation points."""

    rho: float
    points: np.ndarray
    order: int = 0
    n_half: int = 512
    allow_rho_above_threshold: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ParameterError(f"cutoff rho must be > 0, got {self.rho}")
        if self.order not in (0, 1, 2):
            raise ParameterError(f"correction order must be 0, 1, or 2, got {self.order}")
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != 3:
            raise ParameterError("evaluation points must be (P, 3)")
        object.__setattr__(self, "points", pts)

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.rho, self.n_half)


def line_profile(half_length: float, count: int = 64, axis: int = 0, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Evaluation points on a line through ``center`` along a coordinate axis."""
    pts = np.tile(np.asarray(center, dtype=float), (count, 1))
    pts[:, axis] += np.linspace(-half_length, half_length, count)
    return pts


def cube_grid(half_length: float, per_axis: int, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Evaluation points on a cubic lattice (opt-in volumetric mode)."""
    axis = np.linspace(-half_length, half_length, per_axis)
    xs, ys, zs = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()]) + np.asarray(center, float)


@dataclass(frozen=True)
class ImagingResult:
    """Reconstructed values at the evaluation points plus run metadata."""

    points: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    rel_l2_error: float | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NumericFailure("imaging result contains non-finite values")
        object.__setattr__(self, "values", vals)


def _check_threshold(dataset: DataSet, config: ReconstructionConfig) -> None:
    model = dataset.model
    if not has_attenuation(model):
        return
    try:
        threshold = dispersion.rho_threshold(model, 2.0 * dataset.sensors.radius)
    except CapabilityError:
        return  # no formula; the caller owns the cutoff choice
    if config.rho <= threshold:
        return
    if config.allow_rho_above_threshold:
        log.warning(
            "cutoff rho=%.6g exceeds the stability threshold %.6g (override active)",
            config.rho,
            threshold,
        )
        return
    raise ParameterError(
        f"cutoff rho={config.rho:.6g} exceeds the stability threshold "
        f"{threshold:.6g}; pass an explicit override to proceed"
    )


def _corrected_green_block(
    model: AttenuationModel,
    x: np.ndarray,
    sensors_pts: np.ndarray,
    omegas: np.ndarray,
    order: int,
) -> np.ndarray:
    """Corrected kernel for one point against all sensors: (n_freq, M)."""
    dists = np.linalg.norm(sensors_pts - x, axis=1)
    if np.any(dists == 0.0):
        raise ParameterError("evaluation point coincides with a sensor")
    kt = dispersion.kappa_tilde(model, omegas, order)
    im_max = float(np.max(np.abs(kt.imag)))
    if im_max * float(np.max(dists)) > EXP_GUARD:
        raise OverflowGuardError(
            f"corrected kernel exponent {im_max * float(np.max(dists)):.3g} out of "
            "range; reduce the cutoff toward the stability threshold"
        )
    lam = dispersion.lambda_weight(model, omegas, order)
    return lam[:, None] * np.exp(1j * np.multiply.outer(kt, dists)) / (4.0 * math.pi * dists)[None, :]


def back_propagate(dataset: DataSet, x, s: float, config: ReconstructionConfig) -> float:
    """Back-propagated field at final time for one shift ``s`` of the data.

    ``s`` must lie on the data time grid (the shift integral shares the
    grid).  Literal sensor-then-frequency quadrature of the displayed double
    integral; real by the symmetric pairing of the frequency grid.
    """
    j = int(round(s / dataset.dt))
    if not 0 <= j < dataset.n_time or abs(s - j * dataset.dt) > 1e-9 * max(dataset.dt, 1.0):
        raise ParameterError(f"shift s={s} is not on the data time grid")
    grid = config.grid
    om = grid.omegas
    x = np.asarray(x, dtype=float)
    g_slice = dataset.traces[:, dataset.n_time - 1 - j]  # g(y, T - s)
    G = _corrected_green_block(dataset.model, x, dataset.sensors.points, om, config.order)
    sensor_sum = G @ (dataset.sensors.weights * g_slice)
    phase = np.exp(-1j * om * (dataset.n_time - 1 - j) * dataset.dt)  # t = T
    val = -(grid.quad_weights() * 1j * om * sensor_sum * phase).sum() / (2.0 * math.pi)
    scale = float(np.max(np.abs(dataset.traces)))
    if abs(val.imag) > REALNESS_TOL * max(scale, 1e-300):
        raise NumericFailure(
            f"back_propagate imaginary residue {abs(val.imag):.3e} at x={x.tolist()}"
        )
    return float(val.real)


def _sensor_spectra(dataset: DataSet, omegas: np.ndarray) -> np.ndarray:
    """Shift-integral spectra ``integral_0^T g(y, T-s) exp(i w s) ds``: (n_freq, M)."""
    s = dataset.times
    w = np.full(dataset.n_time, dataset.dt)
    w[0] = w[-1] = 0.5 * dataset.dt
    kernel = np.exp(1j * np.multiply.outer(omegas, s)) * w
    return kernel @ dataset.traces[:, ::-1].T


def reconstruct(
    dataset: DataSet,
    config: ReconstructionConfig,
    reference: Phantom | None = None,
) -> ImagingResult:
    """Evaluate the imaging functional at the configured points.

    The functional is the recording-time integral of the back-propagated
    field at final time, scaled by :data:`SINGLE_LAYER_COMPENSATION`; it
    approximates the source below the cutoff.  With a reference phantom
    (defaulting to the one recorded in the dataset) the relative L2 error
    over the evaluation points is attached.
    """
    _check_threshold(dataset, config)
    grid = config.grid
    om = grid.omegas
    if np.any(np.linalg.norm(config.points, axis=1) >= dataset.sensors.radius):
        raise ParameterError("evaluation points must lie inside the sensor sphere")

    spectra = _sensor_spectra(dataset, om)  # (K, M)
    weights = dataset.sensors.weights
    W = grid.quad_weights()
    phase = np.exp(-1j * om * dataset.final_time)
    freq_factor = -SINGLE_LAYER_COMPENSATION * (W * 1j * om * phase) / (2.0 * math.pi)
    scale = max(float(np.max(np.abs(dataset.traces))), 1e-300)

    def at_point(x: np.ndarray) -> float:
        G = _corrected_green_block(dataset.model, x, dataset.sensors.points, om, config.order)
        sensor_sum = (G * spectra) @ weights
        val = (freq_factor * sensor_sum).sum()
        if abs(val.imag) > REALNESS_TOL * scale * dataset.final_time:
            raise NumericFailure(
                f"imaging functional imaginary residue {abs(val.imag):.3e} at x={x.tolist()}"
            )
        return float(val.real)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            values = np.array(list(pool.map(at_point, config.points)))
    else:
        values = np.array([at_point(x) for x in config.points])

    ref = reference if reference is not None else dataset.phantom
    err = None
    if ref is not None:
        truth = ref.value(config.points)
        denom = float(np.linalg.norm(truth))
        if denom > 0:
            err = float(np.linalg.norm(values - truth) / denom)
    meta = {
        "rho": config.rho,
        "order": config.order,
        "n_half": config.n_half,
        "model": dataset.model.label,
        "final_time": dataset.final_time,
        "sensors": dataset.sensors.count,
    }
    return ImagingResult(config.points, values, meta, err)


def sweep_rho(
    dataset: DataSet,
    config: ReconstructionConfig,
    rhos: Sequence[float],
    reference: Phantom | None = None,
) -> list[tuple[float, float]]:
    """Reconstruct once per cutoff and tabulate the relative L2 error."""
    ref = reference if reference is not None else dataset.phantom
    if ref is None:
        raise ParameterError("sweep needs a reference phantom for the error metric")
    rows = []
    for rho in rhos:
        result = reconstruct(dataset, replace(config, rho=float(rho)), ref)
        rows.append((float(rho), float(result.rel_l2_error)))
    return rows
