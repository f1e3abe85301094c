"""Complex dispersion relations and time-reversal correction coefficients.

For every attenuation model this module evaluates

* the attenuated wavenumber ``kappa(omega)`` that replaces ``omega`` in the
  Helmholtz equation,
* the corrected wavenumber ``kappa_tilde`` and amplitude weight
  ``lambda_weight`` used by the time-reversal operators, at correction
  order 0, 1, or 2,
* the asymptotic expansion coefficients (``lambda1``, ``lambda2``, ``nu1``,
  ``nu2``, ``gamma1``, ``gamma2``, ``beta1``, ``beta2``) that the corrected
  quantities are built from, and
* the cutoff threshold ``rho_threshold`` beyond which back propagation is
  expected to destabilize.

Conventions.  All complex powers and roots are principal branch; the
reality symmetry ``kappa(-w) = -conj(kappa(w))`` holds for every model and
guarantees real time-domain signals.  Small parameter: the expansion is in
``model.expansion_parameter`` (``a``, ``alpha0``, or the relaxation time
scale).  First and second derivatives in ``omega`` are obtained with jet
arithmetic rather than hand-derived formulas; closed forms are used where
the models provide them, and the two routes cross-check each other in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from patrev.errors import CapabilityError, ParameterError
from patrev.jets import Jet
from patrev.models import KSB, NSW, AttenuationModel, ThermoViscous, has_attenuation

#: Frequencies with |omega| below this are treated as omega = 0 wherever a
#: formula has a removable singularity there.
OMEGA_EPS = 1e-12

_ORDERS = (0, 1, 2)


def _check_order(order: int) -> int:
    if order not in _ORDERS:
        raise CapabilityError(f"correction order must be one of {_ORDERS}, got {order!r}")
    return order


def _as_array(omega: Any) -> tuple[np.ndarray, bool]:
    arr = np.asarray(omega, dtype=np.float64)
    return arr, arr.ndim == 0


def _ret(out: np.ndarray, scalar: bool) -> Any:
    return complex(out) if scalar else out


# ---------------------------------------------------------------------------
# wavenumbers


def kappa_ratio(model: AttenuationModel, omega: Any) -> Any:
    """``kappa(omega) / omega``, regular at ``omega = 0`` for every model.

    Accepts real scalars, arrays, or jets.  The reciprocal of this value is
    the ``omega / kappa`` factor appearing in the attenuation operator.
    """
    if isinstance(model, ThermoViscous):
        # Damping orientation: Im kappa >= 0 for omega >= 0, like the other
        # models; the time-reversed kernel flips the sign of a.
        return (1.0 - 1j * model.a * omega) ** -0.5
    if isinstance(model, KSB):
        z = (-1j * model.tau0 * omega) ** (model.gamma - 1.0)
        return 1.0 + model.alpha0 * (1.0 + z) ** -0.5
    acc = None
    for tau, tau_tilde in model.pairs:
        if tau == tau_tilde:
            term = _ones_for(omega)  # non-attenuating process, keep collapse exact
        else:
            term = (1.0 - 1j * tau_tilde * omega) / (1.0 - 1j * tau * omega)
        acc = term if acc is None else acc + term
    return (acc * (1.0 / model.count)) ** 0.5


def kappa(model: AttenuationModel, omega: Any) -> Any:
    """Attenuated complex wavenumber ``kappa(omega)``.

    Principal-branch roots; satisfies ``kappa(-w) = -conj(kappa(w))`` and
    ``Im kappa >= 0`` for ``w >= 0`` (damping, not gain).
    """
    if isinstance(omega, Jet):
        return omega * kappa_ratio(model, omega)
    om, scalar = _as_array(omega)
    out = om * kappa_ratio(model, om + 0j)
    return _ret(out, scalar)


def kappa_tilde_ratio(model: AttenuationModel, omega: Any, order: int) -> Any:
    """``kappa_tilde(omega) / omega`` at the requested correction order."""
    _check_order(order)
    if order == 0:
        return _ones_for(omega)
    if isinstance(model, ThermoViscous):
        # Sign-flipped damping; the weight stays 1 for this model.
        return (1.0 + 1j * model.a * omega) ** -0.5
    if isinstance(model, NSW):
        acc = None
        for tau, tau_tilde in model.pairs:
            if tau == tau_tilde:
                term = _ones_for(omega)
            else:
                term = (1.0 + 1j * tau_tilde * omega) / (1.0 + 1j * tau * omega)
            acc = term if acc is None else acc + term
        return (acc * (1.0 / model.count)) ** 0.5
    a = model.alpha0
    out = 1.0 - a * nu1(model, omega)
    if order == 2:
        out = out + a * a * lambda2(model, _negate(omega))
    return out


def kappa_tilde(model: AttenuationModel, omega: Any, order: int) -> Any:
    """Corrected wavenumber for back propagation.

    Order 0 is the identity ``omega``; higher orders undo the model's
    damping, so ``Im kappa_tilde <= 0`` for ``omega >= 0`` and the corrected
    Green's function grows with frequency.
    """
    if isinstance(omega, Jet):
        return omega * kappa_tilde_ratio(model, omega, order)
    om, scalar = _as_array(omega)
    out = om * kappa_tilde_ratio(model, om + 0j, _check_order(order))
    return _ret(np.asarray(out, dtype=complex), scalar)


def lambda_weight(model: AttenuationModel, omega: Any, order: int) -> Any:
    """Amplitude weight of the corrected fundamental solution.

    Order 0 gives 1.  At order 1 the models' closed forms are used; at
    order 2 the weight is the truncated series ``1 + a*beta1 + a^2*beta2``
    (the closed relaxation form is only first-order accurate).

    The thermo-viscous weight stays 1 at every order by convention: its
    corrected pair mirrors the damped equation with the attenuation sign
    flipped, which reproduces the classic time-reversed equation but keeps
    only the leading order of the composition identity.
    """
    _check_order(order)
    om, scalar = _as_array(omega)
    if order == 0 or isinstance(model, ThermoViscous):
        return _ret(np.ones_like(om) + 0j, scalar)
    a = model.expansion_parameter
    if order == 1:
        if isinstance(model, KSB):
            out = 1.0 + a * nu2(model, om)
        else:
            acc = None
            for tau, tau_tilde in model.pairs:
                if tau == tau_tilde:
                    term = np.ones_like(om) + 0j
                else:
                    term = (1.0 + 1j * tau_tilde * om) / (1.0 + 1j * tau * om)
                acc = term if acc is None else acc + term
            mean = acc * (1.0 / model.count)
            out = mean * mean
    else:
        out = 1.0 + a * beta1(model, om) + a * a * beta2(model, om)
    return _ret(out, scalar)


def _negate(omega: Any) -> Any:
    if isinstance(omega, Jet):
        return -omega
    return -np.asarray(omega)


def _ones_for(omega: Any) -> Any:
    if isinstance(omega, Jet):
        return Jet.constant(omega.val * 0.0 + 1.0)
    return np.ones_like(np.asarray(omega, dtype=complex))


# ---------------------------------------------------------------------------
# expansion coefficients


def lambda1(model: AttenuationModel, omega: Any) -> Any:
    """First expansion coefficient of ``kappa = omega*(1 - a*lambda1 + ...)``.

    Closed forms per model; accepts arrays or jets (a jet input returns the
    coefficient together with its omega-derivatives).
    """
    if isinstance(model, ThermoViscous):
        return -0.5j * omega
    if isinstance(model, KSB):
        z = (-1j * model.tau0 * omega) ** (model.gamma - 1.0)
        return -((1.0 + z) ** -0.5)
    scale = model.expansion_parameter
    mean_gap = sum(tau - tau_tilde for tau, tau_tilde in model.pairs) / (
        model.count * scale
    )
    return -0.5j * mean_gap * omega


def _strength_ratio(model: AttenuationModel, strength: Any, omega: Any) -> Any:
    """``kappa/omega`` with the attenuation magnitude replaced by ``strength``.

    ``strength`` ranges over [0, a]; at ``strength = a`` this is the physical
    ratio.  Differentiating in ``strength`` at 0 yields the lambda_j.
    """
    if isinstance(model, ThermoViscous):
        return (1.0 - 1j * strength * omega) ** -0.5
    if isinstance(model, KSB):
        z = (-1j * model.tau0 * omega) ** (model.gamma - 1.0)
        return 1.0 + strength * (1.0 + z) ** -0.5
    scale = model.expansion_parameter
    acc = None
    for tau, tau_tilde in model.pairs:
        term = (1.0 - 1j * (tau_tilde / scale) * strength * omega) / (
            1.0 - 1j * (tau / scale) * strength * omega
        )
        acc = term if acc is None else acc + term
    return (acc * (1.0 / model.count)) ** 0.5


def lambda2(model: AttenuationModel, omega: Any) -> Any:
    """Second expansion coefficient, by exact Taylor expansion in the
    attenuation strength (jet arithmetic, no hand-derived algebra).

    Identically zero for the power-law model, whose ratio is linear in
    ``alpha0``.
    """
    strength = Jet.variable(0.0)
    if isinstance(omega, Jet):
        om = Jet.constant(omega)
    else:
        om = np.asarray(omega, dtype=complex)
    ratio = _strength_ratio(model, strength, om)
    return ratio.d2 * 0.5


def nu1(model: AttenuationModel, omega: Any) -> Any:
    """Corrected-wavenumber coefficient; equals ``lambda1(-omega)``.

    The closed displayed forms are used here; the identity with
    ``lambda1(-omega)`` is asserted in the tests rather than assumed.
    """
    if isinstance(model, ThermoViscous):
        return 0.5j * omega
    if isinstance(model, KSB):
        z = (1j * model.tau0 * omega) ** (model.gamma - 1.0)
        return -((1.0 + z) ** -0.5)
    scale = model.expansion_parameter
    mean_gap = sum(tau - tau_tilde for tau, tau_tilde in model.pairs) / (
        model.count * scale
    )
    return 0.5j * mean_gap * omega


def nu2(model: AttenuationModel, omega: Any) -> Any:
    """First-order weight coefficient (closed forms)."""
    if isinstance(model, ThermoViscous):
        return -2j * omega
    if isinstance(model, KSB):
        g = model.gamma
        w = (1.0 + (1j * model.tau0 * omega) ** (g - 1.0)) ** -0.5
        return 0.5 * (7.0 - g) * w + 0.5 * (g - 1.0) * w**3
    scale = model.expansion_parameter
    mean_gap = sum(tau - tau_tilde for tau, tau_tilde in model.pairs) / (
        model.count * scale
    )
    return -2j * mean_gap * omega


def _lambda1_jet_at(model: AttenuationModel, points: np.ndarray) -> Jet:
    return lambda1(model, Jet.variable(points + 0j))


def gamma1(model: AttenuationModel, omega: Any) -> Any:
    """Weight-over-wavenumber coefficient from the first-order condition
    ``gamma1(-w) = -2*lambda1(w) - w*lambda1'(w)``."""
    om, scalar = _as_array(omega)
    zero = np.abs(om) < OMEGA_EPS
    w = np.where(zero, 1.0, -om)
    L = _lambda1_jet_at(model, w)
    out = -2.0 * L.val + om * L.d1
    if np.any(zero):
        lim = -2.0 * lambda1(model, np.zeros_like(om) + 0j)
        out = np.where(zero, lim, out)
    return _ret(out, scalar)


def beta1(model: AttenuationModel, omega: Any) -> Any:
    """First-order weight expansion coefficient,
    ``beta1(-w) = -3*lambda1(w) - w*lambda1'(w)``; identical to ``nu2``."""
    om, scalar = _as_array(omega)
    zero = np.abs(om) < OMEGA_EPS
    w = np.where(zero, 1.0, -om)
    L = _lambda1_jet_at(model, w)
    out = -3.0 * L.val + om * L.d1
    if np.any(zero):
        lim = -3.0 * lambda1(model, np.zeros_like(om) + 0j)
        out = np.where(zero, lim, out)
    return _ret(out, scalar)


def gamma2(model: AttenuationModel, omega: Any) -> Any:
    """Second-order weight-over-wavenumber coefficient.

    Evaluates, with jet derivatives of ``lambda1`` and ``lambda2``,

        gamma2(-w) = 2*A + w*A' - (lambda1 + w*lambda1')^2
                     - w*lambda1*(2*lambda1' + w*lambda1'')

    where ``A = lambda1^2 + w*lambda1*lambda1' + lambda2``.
    """
    om, scalar = _as_array(omega)
    zero = np.abs(om) < OMEGA_EPS
    w = np.where(zero, 1.0, -om) + 0j
    L1 = _lambda1_jet_at(model, w.real)
    L2 = lambda2(model, Jet.variable(w))
    l1, l1p, l1pp = L1.val, L1.d1, L1.d2
    l2, l2p = L2.val, L2.d1
    A = l1 * l1 + w * l1 * l1p + l2
    Ap = 3.0 * l1 * l1p + w * l1p * l1p + w * l1 * l1pp + l2p
    q = l1 + w * l1p
    out = 2.0 * A + w * Ap - q * q - w * l1 * (2.0 * l1p + w * l1pp)
    if np.any(zero):
        zeros = np.zeros_like(om)
        l1_0 = lambda1(model, zeros + 0j)
        l2_0 = lambda2(model, zeros)
        out = np.where(zero, l1_0 * l1_0 + 2.0 * l2_0, out)
    return _ret(out, scalar)


def beta2(model: AttenuationModel, omega: Any) -> Any:
    """Second-order weight expansion coefficient,
    ``beta2 = gamma2 - gamma1*lambda1(-w) + lambda2(-w)``."""
    om, scalar = _as_array(omega)
    out = (
        gamma2(model, om)
        - gamma1(model, om) * lambda1(model, -om + 0j)
        + lambda2(model, -om)
    )
    return _ret(out, scalar)


@dataclass(frozen=True)
class ExpansionCoefficients:
    """All expansion coefficients evaluated at one frequency (or an array).

    The zeroth-order coefficients are identically one and are not stored.
    """

    omega: Any
    lambda1: Any
    lambda2: Any
    nu1: Any
    nu2: Any
    gamma1: Any
    gamma2: Any
    beta1: Any
    beta2: Any
    order: int = 2


def correction_coefficients(model: AttenuationModel, omega: Any) -> ExpansionCoefficients:
    """Evaluate every expansion coefficient at ``omega``.

    ``nu1`` and ``nu2`` come from the closed displayed forms, the rest from
    jet arithmetic; the test suite checks that the two routes agree.
    """
    om, scalar = _as_array(omega)
    omc = om + 0j

    def wrap(x: Any) -> Any:
        return _ret(np.asarray(x), scalar)

    return ExpansionCoefficients(
        omega=_ret(om, scalar).real if scalar else om,
        lambda1=wrap(lambda1(model, omc)),
        lambda2=wrap(lambda2(model, om)),
        nu1=wrap(nu1(model, omc)),
        nu2=wrap(nu2(model, omc)),
        gamma1=wrap(gamma1(model, om)),
        gamma2=wrap(gamma2(model, om)),
        beta1=wrap(beta1(model, om)),
        beta2=wrap(beta2(model, om)),
    )


# ---------------------------------------------------------------------------
# stability threshold and front speed


def rho_threshold(model: AttenuationModel, diameter: float) -> float:
    """Cutoff frequency above which the imaging functional destabilizes.

    Returns ``inf`` for vanishing attenuation (the cutoff is unbounded).
    The thermo-viscous model has no such formula; callers must pick the
    cutoff themselves.
    """
    if not diameter > 0:
        raise ParameterError(f"domain diameter must be > 0, got {diameter}")
    if isinstance(model, ThermoViscous):
        raise CapabilityError(
            "no stability threshold formula for the thermo-viscous model; "
            "supply the cutoff explicitly"
        )
    if not has_attenuation(model):
        return math.inf
    if isinstance(model, KSB):
        g = model.gamma
        base = model.alpha0 * diameter * math.sin((g - 1.0) * math.pi / 4.0)
        return model.tau0 ** ((g - 1.0) / (3.0 - g)) / base ** (2.0 / (3.0 - g))
    gap_sum = sum(tau - tau_tilde for tau, tau_tilde in model.pairs)
    return math.sqrt(model.count / (diameter * gap_sum))


def front_slowness(model: AttenuationModel) -> float:
    """Arrival time per unit distance of the earliest wavefront.

    Only the strongly causal models have a finite front speed.
    """
    if isinstance(model, ThermoViscous):
        raise CapabilityError("the thermo-viscous model is not strongly causal")
    if isinstance(model, KSB):
        return 1.0 + model.alpha0
    mean_ratio = sum(tau_tilde / tau for tau, tau_tilde in model.pairs) / model.count
    return math.sqrt(mean_ratio)
