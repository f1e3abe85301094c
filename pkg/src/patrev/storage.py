"""CSV persistence for datasets, reconstructions, and sweeps.

Every file starts with ``# key = value`` header lines recording the tool
version, the configuration hash, and the model parameters, followed by a
``# columns:`` line and plain numeric rows at 17 significant digits
(lossless for doubles).  Writers are deterministic: no timestamps, fixed
formatting, fixed row order.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

import patrev
from patrev.errors import ParameterError
from patrev.forward import Ball, DataSet, Gaussian, Phantom, SensorArray
from patrev.models import KSB, NSW, AttenuationModel, ThermoViscous
from patrev.reversal import ImagingResult

FMT = "%.17g"


def _fmt(value: float) -> str:
    return FMT % value


def _model_header(model: AttenuationModel) -> list[str]:
    if isinstance(model, ThermoViscous):
        return ["model = thermoviscous", f"a = {_fmt(model.a)}"]
    if isinstance(model, KSB):
        return [
            "model = ksb",
            f"alpha0 = {_fmt(model.alpha0)}",
            f"tau0 = {_fmt(model.tau0)}",
            f"gamma = {_fmt(model.gamma)}",
        ]
    taus = " ".join(_fmt(t) for t, _ in model.pairs)
    tildes = " ".join(_fmt(tt) for _, tt in model.pairs)
    return ["model = nsw", f"tau = {taus}", f"tau_tilde = {tildes}"]


def _model_from_header(header: dict[str, str]) -> AttenuationModel:
    name = header.get("model")
    if name == "thermoviscous":
        return ThermoViscous(float(header["a"]))
    if name == "ksb":
        return KSB(float(header["alpha0"]), float(header["tau0"]), float(header["gamma"]))
    if name == "nsw":
        taus = [float(v) for v in header["tau"].split()]
        tildes = [float(v) for v in header["tau_tilde"].split()]
        return NSW(tuple(zip(taus, tildes)))
    raise ParameterError(f"unknown model in file header: {name!r}")


def _phantom_header(phantom: Phantom | None) -> list[str]:
    if phantom is None:
        return []
    lines = []
    for i, comp in enumerate(phantom.components, start=1):
        cx, cy, cz = comp.center
        if isinstance(comp, Ball):
            desc = f"ball {_fmt(cx)} {_fmt(cy)} {_fmt(cz)} {_fmt(comp.radius)} {_fmt(comp.amplitude)}"
        else:
            desc = f"gaussian {_fmt(cx)} {_fmt(cy)} {_fmt(cz)} {_fmt(comp.sigma)} {_fmt(comp.amplitude)}"
        lines.append(f"phantom.{i} = {desc}")
    return lines


def _phantom_from_header(header: dict[str, str]) -> Phantom | None:
    comps = []
    for key in sorted(k for k in header if k.startswith("phantom.")):
        tokens = header[key].split()
        kind, vals = tokens[0], [float(v) for v in tokens[1:]]
        if kind == "ball":
            comps.append(Ball((vals[0], vals[1], vals[2]), vals[3], vals[4]))
        else:
            comps.append(Gaussian((vals[0], vals[1], vals[2]), vals[3], vals[4]))
    return Phantom(tuple(comps)) if comps else None


def _write(path: Path, header: Iterable[str], columns: str, rows: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# patrev_version = {patrev.__version__}\n")
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"# columns: {columns}\n")
        for row in rows:
            fh.write(row + "\n")


def _read_header(path: Path) -> tuple[dict[str, str], list[str]]:
    header: dict[str, str] = {}
    data_lines: list[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not body.startswith("columns:"):
                key, value = (part.strip() for part in body.split("=", 1))
                header[key] = value
        elif line.strip():
            data_lines.append(line)
    return header, data_lines


def write_dataset(path: str | Path, dataset: DataSet, config_hash: str = "", seed: int = 0) -> None:
    """Sensor traces, row-major by sensor then time."""
    path = Path(path)
    header = [
        f"config_sha256 = {config_hash}",
        f"seed = {seed}",
        *_model_header(dataset.model),
        *_phantom_header(dataset.phantom),
        f"sensor_count = {dataset.sensors.count}",
        f"sensor_radius = {_fmt(dataset.sensors.radius)}",
        "sensor_layout = fibonacci",
        f"final_time = {_fmt(dataset.final_time)}",
        f"dt = {_fmt(dataset.dt)}",
        f"time_samples = {dataset.n_time}",
        f"grid_rho = {_fmt(dataset.grid_rho)}",
    ]

    def rows():
        times = dataset.times
        for m, point in enumerate(dataset.sensors.points):
            sx, sy, sz = (_fmt(v) for v in point)
            trace = dataset.traces[m]
            for q in range(dataset.n_time):
                yield f"{m},{sx},{sy},{sz},{_fmt(times[q])},{_fmt(trace[q])}"

    _write(path, header, "sensor_index, x, y, z, t, value", rows())


def read_dataset(path: str | Path) -> tuple[DataSet, dict[str, str]]:
    """Rebuild a dataset (model, phantom, sensors, traces) from its file."""
    path = Path(path)
    if not path.is_file():
        raise ParameterError(f"dataset file not found: {path}")
    header, data_lines = _read_header(path)
    model = _model_from_header(header)
    phantom = _phantom_from_header(header)
    count = int(header["sensor_count"])
    n_time = int(header["time_samples"])
    dt = float(header["dt"])
    radius = float(header["sensor_radius"])
    if len(data_lines) != count * n_time:
        raise ParameterError(
            f"{path}: expected {count * n_time} rows, found {len(data_lines)}"
        )
    traces = np.empty((count, n_time))
    points = np.empty((count, 3))
    for i, line in enumerate(data_lines):
        parts = line.split(",")
        m, q = divmod(i, n_time)
        if int(parts[0]) != m:
            raise ParameterError(f"{path}: rows out of order at line for sensor {parts[0]}")
        if q == 0:
            points[m] = [float(parts[1]), float(parts[2]), float(parts[3])]
        traces[m, q] = float(parts[5])
    weights = np.full(count, 4.0 * math.pi * radius**2 / count)
    sensors = SensorArray(points, weights, radius)
    dataset = DataSet(sensors, traces, dt, model, phantom, float(header.get("grid_rho", 0.0)))
    return dataset, header


def write_imaging_result(
    path: str | Path,
    result: ImagingResult,
    model: AttenuationModel,
    config_hash: str = "",
    seed: int = 0,
) -> None:
    path = Path(path)
    header = [
        f"config_sha256 = {config_hash}",
        f"seed = {seed}",
        *_model_header(model),
        f"rho = {_fmt(result.metadata.get('rho', float('nan')))}",
        f"order = {result.metadata.get('order', 0)}",
        f"freq_samples = {result.metadata.get('n_half', 0)}",
    ]
    if result.rel_l2_error is not None:
        header.append(f"rel_l2_error = {_fmt(result.rel_l2_error)}")

    def rows():
        for point, value in zip(result.points, result.values):
            px, py, pz = (_fmt(v) for v in point)
            yield f"{px},{py},{pz},{_fmt(value)}"

    _write(path, header, "px, py, pz, value", rows())


def read_imaging_result(path: str | Path) -> tuple[np.ndarray, np.ndarray, dict[str, str]]:
    path = Path(path)
    header, data_lines = _read_header(path)
    points = np.empty((len(data_lines), 3))
    values = np.empty(len(data_lines))
    for i, line in enumerate(data_lines):
        parts = [float(v) for v in line.split(",")]
        points[i] = parts[:3]
        values[i] = parts[3]
    return points, values, header


def write_sweep(
    path: str | Path,
    rows: Sequence[tuple[float, float]],
    model: AttenuationModel,
    config_hash: str = "",
    seed: int = 0,
) -> None:
    path = Path(path)
    header = [f"config_sha256 = {config_hash}", f"seed = {seed}", *_model_header(model)]
    _write(
        path,
        header,
        "rho, rel_l2_error",
        (f"{_fmt(rho)},{_fmt(err)}" for rho, err in rows),
    )


def write_identity_report(
    path: str | Path,
    a_values: Sequence[float],
    residuals: Sequence[float],
    slope: float,
    order: int,
    model: AttenuationModel,
    config_hash: str = "",
) -> None:
    path = Path(path)
    header = [
        f"config_sha256 = {config_hash}",
        *_model_header(model),
        f"order = {order}",
        f"slope = {_fmt(slope)}",
    ]
    _write(
        path,
        header,
        "attenuation_strength, rel_l2_residual",
        (f"{_fmt(a)},{_fmt(r)}" for a, r in zip(a_values, residuals)),
    )
