import math
from pathlib import Path

import numpy as np
import pytest

from patrev import storage
from patrev.cli import main
from patrev.config import ConfigError, parse_config
from patrev.forward import Ball, Gaussian, Phantom, SensorArray, synthesize_dataset
from patrev.models import KSB, NSW
from patrev.reversal import ImagingResult
from patrev.spectral import FrequencyGrid


def write_cfg(tmp_path: Path, text: str, name: str = "run.cfg") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


BASE_SCENE = """
model = ksb
alpha0 = 0.01
tau0 = 1.0
gamma = 2.0
phantom.1 = ball 0 0 0 0.5 1.0
sensor_count = 24
sensor_radius = 2.0
final_time = 4.0
time_samples = 385
rho = 20.0
freq_samples = 128
order = 1
eval_points = 16
eval_half_length = 1.0
rho_list = 10 20
seed = 3
"""


class TestParseConfig:
    def test_happy_path(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, BASE_SCENE))
        assert cfg.model == KSB(0.01, 1.0, 2.0)
        assert isinstance(cfg.phantom.components[0], Ball)
        assert cfg.rho == 20.0 and cfg.order == 1 and cfg.rho_list == (10.0, 20.0)
        assert len(cfg.source_hash) == 64

    def test_nsw_model(self, tmp_path):
        cfg = parse_config(
            write_cfg(tmp_path, "model = nsw\ntau = 0.02 0.05\ntau_tilde = 0.01 0.02\n")
        )
        assert cfg.model == NSW(((0.02, 0.01), (0.05, 0.02)))

    def test_gamma_range_error_cites_line(self, tmp_path):
        path = write_cfg(tmp_path, "model = ksb\nalpha0 = 0.1\ntau0 = 1.0\ngamma = 2.5\n")
        with pytest.raises(ConfigError, match=r"\(1, 2\]"):
            parse_config(path)
        with pytest.raises(ConfigError, match=r"run\.cfg:\d+:"):
            parse_config(path)

    def test_nsw_causality_violation(self, tmp_path):
        path = write_cfg(tmp_path, "model = nsw\ntau = 0.01\ntau_tilde = 0.02\n")
        with pytest.raises(ConfigError, match="causality"):
            parse_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "model = ksb\nbogus = 1\n")
        with pytest.raises(ConfigError, match=r":2: unknown key 'bogus'"):
            parse_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "model = ksb\nrho = 1\nrho = 2\n")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "nope.cfg")

    def test_model_key_mismatch(self, tmp_path):
        path = write_cfg(tmp_path, "model = nsw\ntau = 0.02\ntau_tilde = 0.01\nalpha0 = 1\n")
        with pytest.raises(ConfigError, match="does not apply"):
            parse_config(path)

    def test_bad_phantom_component(self, tmp_path):
        path = write_cfg(tmp_path, "model = ksb\nphantom.1 = cube 0 0 0 1 1\n")
        with pytest.raises(ConfigError, match="unknown phantom"):
            parse_config(path)

    def test_comments_and_blank_lines(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, "# header\n\nmodel = ksb  # trailing\n"))
        assert cfg.model.alpha0 == 0.0

    def test_rho_defaults_to_threshold(self, tmp_path):
        cfg = parse_config(
            write_cfg(tmp_path, "model = nsw\ntau = 0.02\ntau_tilde = 0.01\nsensor_radius = 2.0\n")
        )
        assert cfg.resolved_rho() == pytest.approx(1.0 / math.sqrt(4.0 * 0.01))

    def test_rho_required_without_attenuation(self, tmp_path):
        cfg = parse_config(write_cfg(tmp_path, "model = ksb\nalpha0 = 0.0\n"))
        with pytest.raises(ConfigError, match="rho is required"):
            cfg.resolved_rho()

    def test_support_inside_sphere(self, tmp_path):
        path = write_cfg(tmp_path, "model = ksb\nphantom.1 = ball 0 0 0 2.5 1\nsensor_radius = 2\n")
        with pytest.raises(ConfigError, match="inside"):
            parse_config(path)


class TestStorage:
    def make_dataset(self):
        phantom = Phantom((Ball((0, 0, 0), 0.5, 1.0), Gaussian((0.2, 0, 0), 0.1, 0.5)))
        sensors = SensorArray.fibonacci(6, 2.0)
        return synthesize_dataset(
            phantom, sensors, NSW.single(0.05, 0.02), FrequencyGrid(20.0, 64), 4.0, 129
        )

    def test_dataset_round_trip(self, tmp_path):
        ds = self.make_dataset()
        path = tmp_path / "dataset.csv"
        storage.write_dataset(path, ds, "cafe", seed=5)
        back, header = storage.read_dataset(path)
        assert np.array_equal(back.traces, ds.traces)
        assert np.array_equal(back.sensors.points, ds.sensors.points)
        assert back.model == ds.model
        assert back.phantom == ds.phantom
        assert back.dt == ds.dt and back.grid_rho == ds.grid_rho
        assert header["config_sha256"] == "cafe" and header["seed"] == "5"

    def test_imaging_result_round_trip(self, tmp_path):
        pts = np.array([[0.1, 0.0, 0.0], [0.2, 0.0, 0.0]])
        res = ImagingResult(pts, np.array([0.5, -0.25]), {"rho": 20.0, "order": 1, "n_half": 64}, 0.125)
        path = tmp_path / "recon.csv"
        storage.write_imaging_result(path, res, KSB(0.01, 1.0, 2.0), "beef", 1)
        points, values, header = storage.read_imaging_result(path)
        assert np.array_equal(points, pts) and np.array_equal(values, res.values)
        assert float(header["rel_l2_error"]) == 0.125

    def test_header_records_version_and_model(self, tmp_path):
        ds = self.make_dataset()
        path = tmp_path / "dataset.csv"
        storage.write_dataset(path, ds)
        text = path.read_text()
        assert "# patrev_version = " in text
        assert "# model = nsw" in text and "# tau = " in text


SCENE_A0 = """
model = ksb
alpha0 = 0.0
tau0 = 1.0
gamma = 2.0
phantom.1 = ball 0 0 0 0.5 1.0
sensor_count = 24
sensor_radius = 2.0
final_time = 4.0
time_samples = 385
rho = 20.0
freq_samples = 128
order = 0
eval_points = 16
eval_half_length = 1.0
rho_list = 10 20
seed = 3
"""


class TestCli:
    def run_pipeline(self, tmp_path, scene=SCENE_A0, threads=1):
        cfg = write_cfg(tmp_path, scene)
        out = tmp_path / "out"
        args = ["--config", str(cfg), "--output-dir", str(out), "--threads", str(threads)]
        assert main(["simulate", *args]) == 0
        assert main(["reconstruct", *args]) == 0
        assert main(["sweep", *args]) == 0
        return out

    def test_pipeline_writes_reports_and_figures(self, tmp_path):
        out = self.run_pipeline(tmp_path)
        for name in ("dataset.csv", "dataset.png", "reconstruction.csv", "reconstruction.png", "sweep.csv", "sweep.png"):
            assert (out / name).is_file(), name
        points, values, header = storage.read_imaging_result(out / "reconstruction.csv")
        assert len(values) == 16
        assert "rel_l2_error" in header

    def test_byte_identical_reruns_and_thread_counts(self, tmp_path):
        out1 = self.run_pipeline(tmp_path)
        blobs = {n: (out1 / n).read_bytes() for n in ("dataset.csv", "reconstruction.csv", "sweep.csv", "reconstruction.png")}
        out2 = self.run_pipeline(tmp_path, threads=4)
        for name, blob in blobs.items():
            assert (out2 / name).read_bytes() == blob, name

    def test_thresholds_prints_value(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "model = ksb\nalpha0 = 0.01\ntau0 = 1.0\ngamma = 2.0\ndiameter = 2.0\n",
        )
        assert main(["thresholds", "--config", str(cfg)]) == 0
        printed = capsys.readouterr().out
        value = float(printed.strip().split("=")[-1])
        assert value == pytest.approx(5000.0, rel=1e-12)

    def test_thresholds_unbounded(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "model = nsw\ntau = 0.02\ntau_tilde = 0.02\n")
        assert main(["thresholds", "--config", str(cfg)]) == 0
        assert "unbounded" in capsys.readouterr().out

    def test_thresholds_thermoviscous_is_config_error(self, tmp_path):
        cfg = write_cfg(tmp_path, "model = thermoviscous\na = 0.1\n")
        assert main(["thresholds", "--config", str(cfg)]) == 2

    def test_bad_config_exits_2(self, tmp_path):
        cfg = write_cfg(tmp_path, "model = ksb\ngamma = 3.0\n")
        assert main(["simulate", "--config", str(cfg)]) == 2

    def test_quiescence_violation_exits_2(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "model = ksb\nphantom.1 = ball 0 0 0 0.5 1\nsensor_count = 4\n"
            "final_time = 2.2\ntime_samples = 65\ngrid_rho = 10\nfreq_samples = 32\n",
        )
        assert main(["simulate", "--config", str(cfg), "--output-dir", str(tmp_path / "o")]) == 2

    def test_overflow_guard_exits_3(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "model = thermoviscous\na = 1.0\nphantom.1 = gaussian 0 0 0 0.1 1\n"
            "sensor_count = 2\nfinal_time = 20.0\ntime_samples = 65\n"
            "grid_rho = 4000\nfreq_samples = 32\n",
        )
        assert main(["simulate", "--config", str(cfg), "--output-dir", str(tmp_path / "o")]) == 3

    def test_missing_dataset_exits_2(self, tmp_path):
        cfg = write_cfg(tmp_path, SCENE_A0)
        assert main(["reconstruct", "--config", str(cfg), "--output-dir", str(tmp_path / "empty")]) == 2

    def test_override_rho_allows_exceeding_threshold(self, tmp_path):
        scene = SCENE_A0.replace("alpha0 = 0.0", "alpha0 = 0.0").replace("model = ksb", "model = ksb")
        # switch to an attenuating relaxation model with a low threshold
        scene = """
model = nsw
tau = 0.05
tau_tilde = 0.02
phantom.1 = ball 0 0 0 0.5 1.0
sensor_count = 16
sensor_radius = 2.0
final_time = 4.0
time_samples = 385
rho = 2.5
grid_rho = 20.0
freq_samples = 128
order = 1
eval_points = 8
eval_half_length = 0.8
seed = 0
"""
        cfg = write_cfg(tmp_path, scene)
        out = tmp_path / "out"
        args = ["--config", str(cfg), "--output-dir", str(out)]
        assert main(["simulate", *args]) == 0
        assert main(["reconstruct", *args]) == 0  # rho 2.5 below threshold 2.89
        assert main(["reconstruct", *args, "--override-rho", "8.0"]) == 0

    def test_verify_identity_passes_and_fails(self, tmp_path, capsys):
        order1 = write_cfg(
            tmp_path,
            "model = ksb\nalpha0 = 0.01\ntau0 = 1.0\ngamma = 2.0\nrho = 40\norder = 1\nfreq_samples = 512\n",
            name="id1.cfg",
        )
        out = tmp_path / "id"
        assert main(["verify-identity", "--config", str(order1), "--output-dir", str(out)]) == 0
        assert (out / "identity.csv").is_file() and (out / "identity.png").is_file()
        printed = capsys.readouterr().out
        assert "slope" in printed

        # a fractional exponent floors the order-2 residual at the w = 0 kink,
        # so the slope bound cannot be met: the check must exit 4
        order2_kink = write_cfg(
            tmp_path,
            "model = ksb\nalpha0 = 0.01\ntau0 = 1.0\ngamma = 1.5\nrho = 40\norder = 2\nfreq_samples = 512\n",
            name="id2.cfg",
        )
        assert main(["verify-identity", "--config", str(order2_kink), "--output-dir", str(out)]) == 4
