"""Acceptance suite: one test per stated criterion, at stated tolerances.

Each test prints ``CRITERION <n>: PASS|FAIL - <measurements>`` before
asserting, so ``pytest -v -rA`` (or ``-s``) yields one line per criterion.

Three clauses are known to sit beyond what the mathematics of sharply
band-limited reconstructions of discontinuous sources permits (the 5%
reconstruction tolerance, the power-law correction margin on that scene,
and the 1e-3 kernel-propagation tolerance).  Those tests compute honest
floor diagnostics, print them, and fail; the analysis lives in the
project notes.
"""

import math
import time


import numpy as np
import pytest

from patrev import dispersion as dsp
from patrev import forward as fw
from patrev import reversal as rv
from patrev import spectral as sp
from patrev.cli import main as cli_main
from patrev.errors import CapabilityError
from patrev.jets import Jet
from patrev.models import KSB, NSW, ThermoViscous

RHO = 40.0
N_HALF = 512
SENSOR_RADIUS = 2.0
SENSOR_COUNT = 256
FINAL_TIME = 5.0
N_TIME = 1281
STRENGTHS = (10.0**-1.5, 10.0**-2, 10.0**-2.5)


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


def loglog_slope(x, y):
    return float(np.polyfit(np.log(np.asarray(x)), np.log(np.asarray(y)), 1)[0])


# ---------------------------------------------------------------------------
# shared scenes


@pytest.fixture(scope="module")
def ball_phantom():
    return fw.Phantom.ball(radius=0.5)


@pytest.fixture(scope="module")
def sensors():
    return fw.SensorArray.fibonacci(SENSOR_COUNT, SENSOR_RADIUS)


def synthesize(phantom, sensors, model):
    grid = sp.FrequencyGrid(RHO, N_HALF)
    return fw.synthesize_dataset(phantom, sensors, model, grid, FINAL_TIME, N_TIME)


@pytest.fixture(scope="module")
def dataset_lossless(ball_phantom, sensors):
    return synthesize(ball_phantom, sensors, KSB(0.0, 1.0, 2.0))


@pytest.fixture(scope="module")
def dataset_ksb(ball_phantom, sensors):
    return synthesize(ball_phantom, sensors, KSB(0.01, 1.0, 2.0))


@pytest.fixture(scope="module")
def dataset_nsw(ball_phantom, sensors):
    return synthesize(ball_phantom, sensors, NSW.single(0.02, 0.01))


def profile_config(order=0, rho=RHO, **kw):
    return rv.ReconstructionConfig(
        rho=rho, points=rv.line_profile(1.0, 64), order=order, n_half=N_HALF, **kw
    )


# ---------------------------------------------------------------------------
# criteria


def test_criterion_01_expansion_orders():
    start = time.perf_counter()
    strengths = (1e-1, 1e-2, 1e-3)
    families = [
        ("power-law g=1.5", lambda a: KSB(a, 1.0, 1.5)),
        ("relaxation r=2, rt=1", lambda a: NSW.single(2 * a, a)),
    ]
    worst1, worst2 = math.inf, math.inf
    for name, family in families:
        for w in (0.5, 1.0, 2.0):
            res1, res2 = [], []
            for a in strengths:
                m = family(a)
                ap = m.expansion_parameter
                l1 = dsp.lambda1(m, complex(w))
                l2 = dsp.lambda2(m, w)
                k = dsp.kappa(m, w)
                res1.append(abs(k - w * (1.0 - ap * l1)))
                res2.append(abs(k - w * (1.0 - ap * l1 + ap * ap * l2)))

            def slope(res):
                if max(res) < 1e-13 * w:  # expansion terminates exactly
                    return math.inf
                return loglog_slope(strengths, res)

            worst1 = min(worst1, slope(res1))
            worst2 = min(worst2, slope(res2))
    elapsed = time.perf_counter() - start
    ok = worst1 >= 1.8 and worst2 >= 2.7 and elapsed < 1.0
    report(
        "1",
        ok,
        f"first-order slope >= {worst1:.2f}, second-order slope >= {worst2:.2f}, "
        f"runtime {elapsed:.2f}s (< 1s)",
    )
    assert worst1 >= 1.8 and worst2 >= 2.7
    assert elapsed < 1.0


def test_criterion_02_first_order_conditions():
    omegas = np.concatenate([np.linspace(-9.0, -0.05, 50), np.linspace(0.05, 9.0, 50)])
    worst = 0.0
    for model in (KSB(0.3, 1.0, 1.5), NSW.single(0.2, 0.1)):
        L = dsp.lambda1(model, Jet.variable(omegas + 0j))
        scale = float(np.abs(L.val).max())
        c1 = np.abs(dsp.gamma1(model, -omegas) + 2.0 * L.val + omegas * L.d1)
        c2 = np.abs(dsp.nu2(model, -omegas + 0j) + 3.0 * L.val + omegas * L.d1)
        worst = max(worst, float(c1.max() / scale), float(c2.max() / scale))
    ok = worst <= 1e-10
    report("2", ok, f"worst relative condition residual {worst:.2e} on 100 frequencies (<= 1e-10)")
    assert worst <= 1e-10


def test_criterion_03_composition_identity():
    start = time.perf_counter()

    def residuals(family, order, t_end, center, n_time, n_half):
        sig = sp.TimeSignal.sample(
            lambda t: np.exp(-((t - center) ** 2) / (2.0 * 0.2**2)), 0.0, t_end, n_time
        )
        grid = sp.FrequencyGrid(RHO, n_half)
        ref = sp.band_limit(sig, grid)
        out = []
        for a in STRENGTHS:
            model = family(a)
            att = sp.apply_attenuation(model, sig, grid)
            rec = sp.apply_correction_adjoint(model, att, grid, order)
            diff = sp.TimeSignal(rec.samples - ref.samples, sig.t0, sig.dt)
            out.append(diff.l2_norm() / ref.l2_norm())
        return out

    slopes = {}
    for name, family, window in [
        ("power-law", lambda a: KSB(a, 1.0, 2.0), (16.0, 2.0, 2049, 1024)),
        ("relaxation", lambda a: NSW.single(2 * a, a), (2.6, 1.2, 513, 512)),
    ]:
        for order in (0, 1, 2):
            slopes[(name, order)] = loglog_slope(STRENGTHS, residuals(family, order, *window))
    elapsed = time.perf_counter() - start

    ok = True
    for (name, order), slope in slopes.items():
        if order == 0:
            ok &= abs(slope - 1.0) <= 0.3
        elif order == 1:
            ok &= slope >= 1.7
        else:
            ok &= slope >= 2.6
    ok &= elapsed < 30.0
    detail = ", ".join(f"{n}/o{o}={s:.2f}" for (n, o), s in slopes.items())
    report("3", ok, f"slopes {detail}, runtime {elapsed:.1f}s (< 30s)")
    for (name, order), slope in slopes.items():
        if order == 0:
            assert abs(slope - 1.0) <= 0.3, (name, order, slope)
        elif order == 1:
            assert slope >= 1.7, (name, order, slope)
        else:
            assert slope >= 2.6, (name, order, slope)
    assert elapsed < 30.0


def test_criterion_04_forward_solver():
    start = time.perf_counter()
    # ball boundary trace against the independently coded N-wave
    R, d, A = 0.5, 2.0, 1.0
    phantom = fw.Phantom.ball(radius=R, amplitude=A)
    t = np.linspace(0.0, 4.0, 4001)
    got = fw.freespace_pressure(phantom, (d, 0.0, 0.0), t)
    n_wave = np.where(np.abs(t - d) < R, A * (d - t) / (2.0 * d), 0.0)
    nwave_err = float(np.linalg.norm(got - n_wave) / np.linalg.norm(n_wave))

    # gaussian spherical mean against an antithetic Monte-Carlo sphere average
    gauss = fw.Phantom.gaussian(sigma=0.35, amplitude=1.3)
    x, r = np.array([0.4, -0.2, 0.1]), 0.8
    rng = np.random.default_rng(2024)
    dirs = rng.normal(size=(4_000_000, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    oracle = float(np.mean(0.5 * (gauss.value(x + r * dirs) + gauss.value(x - r * dirs))))
    mc_err = abs(fw.spherical_mean(gauss, tuple(x), r) - oracle)
    elapsed = time.perf_counter() - start

    ok = nwave_err <= 1e-6 and mc_err <= 1e-4 and elapsed < 10.0
    report(
        "4",
        ok,
        f"N-wave rel L2 {nwave_err:.2e} (<= 1e-6), Monte-Carlo gap {mc_err:.2e} (<= 1e-4), "
        f"runtime {elapsed:.1f}s (< 10s)",
    )
    assert nwave_err <= 1e-6
    assert mc_err <= 1e-4
    assert elapsed < 10.0


def projection_floor_on_profile(points, rho, R=0.5):
    """Independent oracle: the sharply band-limited ball sampled on the
    profile (radial quadrature of the closed-form ball spectrum)."""
    k = np.linspace(1e-9, rho, 200_000)
    wk = np.full(k.size, k[1] - k[0])
    wk[0] *= 0.5
    wk[-1] *= 0.5
    hat = (np.sin(k * R) - k * R * np.cos(k * R)) / k**3
    out = []
    for r in np.linalg.norm(points, axis=1):
        j0 = np.sin(k * r) / (k * r) if r > 1e-9 else np.ones_like(k)
        out.append((2.0 / np.pi) * float(np.sum(wk * hat * k**2 * j0)))
    return np.array(out)


def test_criterion_05a_lossless_reconstruction_error(dataset_lossless, ball_phantom):
    start = time.perf_counter()
    result = rv.reconstruct(dataset_lossless, profile_config())
    elapsed = time.perf_counter() - start
    err = result.rel_l2_error

    floor_vals = projection_floor_on_profile(result.points, RHO)
    truth = ball_phantom.value(result.points)
    floor = float(np.linalg.norm(floor_vals - truth) / np.linalg.norm(truth))
    vs_floor = float(np.linalg.norm(result.values - floor_vals) / np.linalg.norm(floor_vals))

    ok = err <= 0.05 and elapsed < 300.0
    report(
        "5a",
        ok,
        f"rel L2 error {err:.4f} (required <= 0.05); band-limited projection of the "
        f"discontinuous ball already scores {floor:.4f} on this profile (Gibbs + the "
        f"center value (2/pi)(Si(rho R) - sin(rho R)) = 0.404), and the reconstruction "
        f"is within {vs_floor:.3f} of that optimum; runtime {elapsed:.1f}s",
    )
    assert vs_floor <= 0.06, "reconstruction strays from the band-limited projection"
    assert elapsed < 300.0
    assert err <= 0.05, (
        f"rel L2 error {err:.4f} exceeds 0.05; the band-limited projection floor is "
        f"{floor:.4f}, so the tolerance is unreachable for this discontinuous scene"
    )


def test_criterion_05b_error_nonincreasing_in_cutoff(dataset_lossless):
    rows = rv.sweep_rho(dataset_lossless, profile_config(), [10.0, 20.0, 40.0])
    errs = [err for _, err in rows]
    ok = all(errs[i + 1] <= errs[i] * 1.10 for i in range(len(errs) - 1))
    report(
        "5b",
        ok,
        "error vs cutoff " + ", ".join(f"{r:g}: {e:.4f}" for r, e in rows) + " (non-increasing, 10% band)",
    )
    assert ok


def margin(dataset, rho, allow=False):
    errs = {}
    for order in (0, 1):
        cfg = profile_config(order=order, rho=rho, allow_rho_above_threshold=allow)
        errs[order] = rv.reconstruct(dataset, cfg).rel_l2_error
    return errs, (errs[0] - errs[1]) / errs[0]


def test_criterion_06a_relaxation_correction_pays(dataset_nsw):
    start = time.perf_counter()
    # the stability threshold is the default cutoff for this model: rho = 5
    threshold = dsp.rho_threshold(dataset_nsw.model, 2.0 * SENSOR_RADIUS)
    errs, gain = margin(dataset_nsw, threshold)
    elapsed = time.perf_counter() - start
    ok = errs[1] < errs[0] and gain >= 0.10 and elapsed < 600.0
    report(
        "6a",
        ok,
        f"relaxation: order-0 err {errs[0]:.4f}, order-1 err {errs[1]:.4f}, "
        f"margin {gain:.1%} (required >= 10%), cutoff {threshold:g}, runtime {elapsed:.0f}s",
    )
    assert errs[1] < errs[0]
    assert gain >= 0.10
    assert elapsed < 600.0


def test_criterion_06b_power_law_correction_pays(dataset_ksb):
    start = time.perf_counter()
    errs, gain = margin(dataset_ksb, RHO)  # threshold is 1250, rho 40 is safely below
    elapsed = time.perf_counter() - start
    ok = errs[1] < errs[0] and gain >= 0.10
    report(
        "6b",
        ok,
        f"power-law: order-0 err {errs[0]:.4f}, order-1 err {errs[1]:.4f}, margin {gain:.1%} "
        f"(required >= 10%); both orders sit on the {0.2055:.2%}-level band-limited "
        f"projection floor of the discontinuous ball, which swamps the few-percent "
        f"attenuation perturbation at this strength; runtime {elapsed:.0f}s",
    )
    assert elapsed < 600.0
    assert errs[1] < errs[0] and gain >= 0.10, (
        f"margin {gain:.1%} < 10%: the projection floor dominates both orders "
        f"(order-0 {errs[0]:.4f} vs order-1 {errs[1]:.4f})"
    )


def test_criterion_07_threshold_formulas():
    got_ksb = dsp.rho_threshold(KSB(0.01, 1.0, 2.0), 2.0)
    hand_ksb = 1.0 ** ((2.0 - 1.0) / (3.0 - 2.0)) / (
        0.01 * 2.0 * math.sin((2.0 - 1.0) * math.pi / 4.0)
    ) ** (2.0 / (3.0 - 2.0))
    got_nsw = dsp.rho_threshold(NSW.single(0.02, 0.01), 2.0)
    pairs = ((0.02, 0.01), (0.05, 0.02))
    got_n2 = dsp.rho_threshold(NSW(pairs), 2.0)
    hand_n2 = math.sqrt(2.0 / (2.0 * ((0.02 - 0.01) + (0.05 - 0.02))))
    ok = (
        got_ksb == hand_ksb
        and abs(got_ksb - 5000.0) <= 1e-9 * 5000.0
        and abs(got_nsw - 7.07107) <= 1e-5
        and got_n2 == hand_n2
    )
    report(
        "7",
        ok,
        f"power-law {got_ksb!r} (5000 to 1e-9, bitwise vs hand formula), "
        f"relaxation {got_nsw:.6f} (7.07107 +- 1e-5), two-process {got_n2:.6f} matches "
        f"its displayed form",
    )
    assert got_ksb == hand_ksb and abs(got_ksb - 5000.0) <= 1e-9 * 5000.0
    assert abs(got_nsw - 7.07107) <= 1e-5
    assert got_n2 == hand_n2


def test_criterion_08_strong_causality(sensors):
    phantom = fw.Phantom.gaussian(sigma=0.15)
    worst = {}
    for model in (KSB(0.01, 1.0, 2.0), NSW.single(0.02, 0.01)):
        ds = synthesize(phantom, sensors, model)
        ratio = 0.0
        for i, y in enumerate(sensors.points):
            early = ds.times < fw.front_arrival_time(model, phantom, y)
            ratio = max(ratio, float(np.max(np.abs(ds.traces[i, early])) / np.max(np.abs(ds.traces[i]))))
        worst[model.label] = ratio
    with pytest.raises(CapabilityError):
        dsp.front_slowness(ThermoViscous(0.1))  # exempt: no finite front speed
    ok = all(r < 1e-3 for r in worst.values())
    report(
        "8",
        ok,
        "worst pre-front amplitude ratios "
        + ", ".join(f"{k}: {v:.2e}" for k, v in worst.items())
        + " (< 1e-3 at every sensor; thermo-viscous exempt)",
    )
    assert ok


def test_criterion_09_green_propagation_identity():
    # Best desk-scale configuration found (range growth is bounded by the
    # band-edge resonance of the half-line transform; see project notes):
    # the identity error decays only ~1/range, floored near 4e-3 here.
    r = 6.0
    model = KSB(1e-3, 1.0, 2.0)
    order = 1
    grid = sp.FrequencyGrid(RHO, 1024)
    om, W = grid.omegas, grid.quad_weights()
    t = np.linspace(-30.0, 30.0, 7681)
    dt = t[1] - t[0]

    def synth(coeffs, times):
        out = np.empty(times.size)
        for i in range(0, times.size, 4096):
            block = np.exp(-1j * np.multiply.outer(times[i : i + 4096], om))
            out[i : i + 4096] = (block @ (W * coeffs)).real
        return out / (2.0 * math.pi)

    probe = synth((-1j * om) * np.exp(1j * om * r) / (4 * np.pi * r), t)
    kt = dsp.kappa_tilde(model, om, order)
    lam = dsp.lambda_weight(model, om, order)
    lhs = synth((-1j * om) * lam * np.exp(1j * kt * r) / (4 * np.pi * r), t)
    rhs = sp.apply_correction(model, sp.TimeSignal(probe, t[0], dt), grid, order).samples

    window = (t >= r - 3.0) & (t <= r + 3.0)
    rel = float(
        np.linalg.norm(lhs[window] - rhs[window]) / np.linalg.norm(lhs[window])
    )
    ok = rel <= 1e-3
    report(
        "9",
        ok,
        f"kernel-propagation rel L2 {rel:.2e} (required <= 1e-3); the band-limited free "
        f"kernel has acausal 1/t tails, so the support-restricted inner integral misses "
        f"~(rho r)^(-1/2) of the probe and the error decays only ~1/range "
        f"(measured 1.5e-2 @ range 12, 4.3e-3 @ 60, 3.4e-3 @ 120, diverging past the "
        f"band-edge resonance)",
    )
    assert rel <= 1e-3, f"identity gap {rel:.2e} exceeds 1e-3 (asymptotic, not exact, at finite cutoff)"


SCENE_TEMPLATE = """
model = {model}
phantom.1 = ball 0 0 0 0.5 1.0
sensor_count = {count}
sensor_radius = 2.0
final_time = 5.0
time_samples = {n_time}
rho = {rho}
grid_rho = 40.0
freq_samples = 512
order = {order}
eval_points = 64
eval_half_length = 1.0
seed = 0
"""


def test_criterion_10_determinism(tmp_path):
    scenes = {
        "lossless": SCENE_TEMPLATE.format(
            model="ksb\nalpha0 = 0.0\ntau0 = 1.0\ngamma = 2.0", count=SENSOR_COUNT,
            n_time=N_TIME, rho=40.0, order=0,
        ),
        "powerlaw": SCENE_TEMPLATE.format(
            model="ksb\nalpha0 = 0.01\ntau0 = 1.0\ngamma = 2.0", count=SENSOR_COUNT,
            n_time=N_TIME, rho=40.0, order=1,
        ),
        "relaxation": SCENE_TEMPLATE.format(
            model="nsw\ntau = 0.02\ntau_tilde = 0.01", count=SENSOR_COUNT,
            n_time=N_TIME, rho=5.0, order=1,
        ),
    }
    mismatch = []
    for name, scene in scenes.items():
        cfg = tmp_path / f"{name}.cfg"
        cfg.write_text(scene)
        blobs = {}
        for threads in (1, 2, 8):
            out = tmp_path / f"{name}-t{threads}"
            args = ["--config", str(cfg), "--output-dir", str(out), "--threads", str(threads)]
            assert cli_main(["simulate", *args]) == 0
            assert cli_main(["reconstruct", *args]) == 0
            blobs[threads] = {
                f: (out / f).read_bytes()
                for f in ("dataset.csv", "reconstruction.csv", "dataset.png", "reconstruction.png")
            }
        for threads in (2, 8):
            for fname in blobs[1]:
                if blobs[threads][fname] != blobs[1][fname]:
                    mismatch.append(f"{name}/{fname}@{threads}")
    ok = not mismatch
    report(
        "10",
        ok,
        "scene outputs byte-identical across 1, 2, 8 worker threads"
        + ("" if ok else f"; mismatches: {mismatch}"),
    )
    assert ok, mismatch
