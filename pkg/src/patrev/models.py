"""Attenuation model parameter sets.

Three frequency-domain attenuation laws are supported:

* ``ThermoViscous(a)``: the classic damped wave model.  Dissipative, but the
  wavefront speed is unbounded (not strongly causal).
* ``KSB(alpha0, tau0, gamma)``: power-law attenuation with fractional
  exponent ``gamma`` in (1, 2].  Strongly causal.
* ``NSW(pairs)``: one or more relaxation processes ``(tau_j, tau_tilde_j)``
  with ``tau_j >= tau_tilde_j > 0``.  Strongly causal.

Zero attenuation (``a = 0``, ``alpha0 = 0``, or ``tau_j == tau_tilde_j``) is
accepted so that the attenuation-free limit collapses to the lossless wave
equation; parameters that would flip the sign of the dissipation are
rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from patrev.errors import ParameterError


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class ThermoViscous:
    """Thermo-viscous damping with coefficient ``a >= 0`` (dimensionless time)."""

    a: float

    def __post_init__(self) -> None:
        a = _require_finite("a", self.a)
        if a < 0:
            raise ParameterError(f"thermo-viscous coefficient a must be >= 0, got {a}")
        object.__setattr__(self, "a", a)

    @property
    def expansion_parameter(self) -> float:
        return self.a

    @property
    def label(self) -> str:
        return "thermoviscous"


@dataclass(frozen=True)
class KSB:
    """Power-law attenuation with strength ``alpha0``, time scale ``tau0``,
    and exponent ``gamma`` in (1, 2]."""

    alpha0: float
    tau0: float
    gamma: float

    def __post_init__(self) -> None:
        alpha0 = _require_finite("alpha0", self.alpha0)
        tau0 = _require_finite("tau0", self.tau0)
        gamma = _require_finite("gamma", self.gamma)
        if alpha0 < 0:
            raise ParameterError(f"alpha0 must be >= 0, got {alpha0}")
        if tau0 <= 0:
            raise ParameterError(f"tau0 must be > 0, got {tau0}")
        if not 1.0 < gamma <= 2.0:
            raise ParameterError(f"gamma must lie in (1, 2], got {gamma}")
        object.__setattr__(self, "alpha0", alpha0)
        object.__setattr__(self, "tau0", tau0)
        object.__setattr__(self, "gamma", gamma)

    @property
    def expansion_parameter(self) -> float:
        return self.alpha0

    @property
    def label(self) -> str:
        return "ksb"


@dataclass(frozen=True)
class NSW:
    """Relaxation attenuation with processes ``(tau_j, tau_tilde_j)``.

    Causality requires ``tau_j >= tau_tilde_j > 0`` for every process;
    equality means that process does not attenuate.

    ``expansion_scale`` is the small parameter used when reporting expansion
    coefficients (the normalized rates are ``r_j = tau_j / scale``).  It
    defaults to ``max_j tau_j``; pass it explicitly to reproduce a specific
    ``(r, r_tilde)`` normalization.  Physical quantities (wavenumbers,
    weights) never depend on it.
    """

    pairs: tuple[tuple[float, float], ...]
    expansion_scale: float | None = field(default=None)

    def __post_init__(self) -> None:
        if isinstance(self.pairs, (int, float)):
            raise ParameterError("NSW pairs must be a sequence of (tau, tau_tilde)")
        pairs = tuple(
            (_require_finite("tau", t), _require_finite("tau_tilde", tt))
            for t, tt in self.pairs
        )
        if not pairs:
            raise ParameterError("NSW needs at least one relaxation process")
        for tau, tau_tilde in pairs:
            if tau_tilde <= 0:
                raise ParameterError(f"tau_tilde must be > 0, got {tau_tilde}")
            if tau < tau_tilde:
                raise ParameterError(
                    f"causality requires tau >= tau_tilde, got tau={tau}, tau_tilde={tau_tilde}"
                )
        object.__setattr__(self, "pairs", pairs)
        if self.expansion_scale is not None:
            scale = _require_finite("expansion_scale", self.expansion_scale)
            if scale <= 0:
                raise ParameterError(f"expansion_scale must be > 0, got {scale}")
            object.__setattr__(self, "expansion_scale", scale)

    @classmethod
    def single(cls, tau: float, tau_tilde: float, expansion_scale: float | None = None) -> "NSW":
        return cls(((tau, tau_tilde),), expansion_scale)

    @property
    def count(self) -> int:
        return len(self.pairs)

    @property
    def expansion_parameter(self) -> float:
        if self.expansion_scale is not None:
            return self.expansion_scale
        return max(tau for tau, _ in self.pairs)

    @property
    def label(self) -> str:
        return "nsw"


AttenuationModel = Union[ThermoViscous, KSB, NSW]


def has_attenuation(model: AttenuationModel) -> bool:
    """True if the model dissipates at all (any nonzero attenuation parameter)."""
    if isinstance(model, ThermoViscous):
        return model.a > 0
    if isinstance(model, KSB):
        return model.alpha0 > 0
    return any(tau > tau_tilde for tau, tau_tilde in model.pairs)
