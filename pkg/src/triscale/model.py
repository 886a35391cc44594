"""Parameters, state types and vector fields of the SITPYR model.

Compartments: S susceptible, I primary infection, T temporarily immune,
P partially immune, Y secondary infection, R fully immune.  Time ``t`` is
the fast (infection) scale; the intermediate and slow scales are
``tau1 = eps * t`` and ``tau2 = delta * eps * t``.  Waning of partial and
full immunity both happen at rate ``delta * eps``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConstraintError, InvalidInputError

NEGATIVE_TOLERANCE = 1e-12
REGION_ZERO_BAND = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Rates and scale-separation factors of the model.

    ``beta``, ``gamma1``, ``gamma2`` are rates (1/time); ``alpha`` and ``nu``
    are relative infectiousness / susceptibility of secondary infections;
    ``delta`` and ``epsilon`` are the time-scale ratios, both in (0, 1).
    """

    beta: float
    alpha: float
    nu: float
    gamma1: float
    gamma2: float
    delta: float
    epsilon: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InvalidInputError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("beta", "gamma1", "gamma2", "delta", "epsilon"):
            if getattr(self, name) <= 0.0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")
        # alpha = 0 and nu = 0 are the SIRWS / SIRS reductions and stay admissible
        for name in ("alpha", "nu"):
            if getattr(self, name) < 0.0:
                raise InvalidInputError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.delta >= 1.0 or self.epsilon >= 1.0:
            raise InvalidInputError("time-scale ordering needs delta < 1 and epsilon < 1")

    @property
    def r0(self) -> float:
        return self.beta / self.gamma1

    @property
    def alpha_nu(self) -> float:
        return self.alpha * self.nu

    @property
    def gamma(self) -> float:
        """Common recovery rate; only defined when ``gamma1 == gamma2``."""
        self.require_equal_gamma()
        return self.gamma1

    def require_equal_gamma(self) -> None:
        if self.gamma1 != self.gamma2:
            raise ConstraintError(
                f"operation assumes gamma1 == gamma2 (got {self.gamma1} and {self.gamma2})"
            )

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.beta, self.alpha, self.nu, self.gamma1, self.gamma2, self.delta, self.epsilon]
        )

    def to_dict(self) -> dict:
        return asdict(self)


class State5(NamedTuple):
    S: float
    I: float
    T: float
    P: float
    Y: float

    @property
    def R(self) -> float:
        return 1.0 - (self.S + self.I + self.T + self.P + self.Y)

    def to_state6(self) -> "State6":
        return State6(self.S, self.I, self.T, self.P, self.Y, self.R)


class State6(NamedTuple):
    S: float
    I: float
    T: float
    P: float
    Y: float
    R: float

    def to_state5(self) -> State5:
        return State5(self.S, self.I, self.T, self.P, self.Y)


class Region(str, Enum):
    PLUS = "LambdaPlus"
    ZERO = "LambdaZero"
    MINUS = "LambdaMinus"


@dataclass(frozen=True)
class RegionLabel:
    region: Region
    value: float


def _clean_state(state: Sequence[float], size: int) -> np.ndarray:
    x = np.asarray(state, dtype=float)
    if x.shape != (size,):
        raise InvalidInputError(f"expected {size} components, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"non-finite state {x}")
    if np.any(x < -NEGATIVE_TOLERANCE):
        raise InvalidInputError(f"state has negative components beyond tolerance: {x}")
    return np.where(x < 0.0, 0.0, x)


def as_state5(state: Sequence[float]) -> np.ndarray:
    """Validate a 5-vector; round-off undershoot in [-1e-12, 0) is clamped to 0."""
    return _clean_state(state, 5)


def as_state6(state: Sequence[float]) -> np.ndarray:
    return _clean_state(state, 6)


def _rates(params: ModelParams, fast: bool):
    de = 0.0 if fast else params.delta * params.epsilon
    eps = 0.0 if fast else params.epsilon
    delta = 0.0 if fast else params.delta
    return de, eps, delta


def _field5(x: np.ndarray, params: ModelParams, fast: bool) -> np.ndarray:
    S, I, T, P, Y = x
    b, a, nu = params.beta, params.alpha, params.nu
    g1, g2 = params.gamma1, params.gamma2
    de, eps, delta = _rates(params, fast)
    force = I + a * Y
    return np.array(
        [
            -b * S * force + de * P,
            b * S * force - g1 * I,
            g1 * I - eps * T,
            de + eps * T * (1.0 - delta) - nu * b * P * force - de * (S + I + 2.0 * P + Y),
            nu * b * P * force - g2 * Y,
        ]
    )


def vector_field5(state: Sequence[float], params: ModelParams) -> np.ndarray:
    """Right-hand side of the reduced five-dimensional system (R eliminated)."""
    return _field5(as_state5(state), params, fast=False)


def fast_vector_field(state: Sequence[float], params: ModelParams) -> np.ndarray:
    """Fast limit: the five-dimensional field with ``delta = epsilon = 0``."""
    return _field5(as_state5(state), params, fast=True)


def vector_field6(state: Sequence[float], params: ModelParams) -> np.ndarray:
    """Right-hand side of the closed six-compartment system; components sum to zero."""
    S, I, T, P, Y, R = as_state6(state)
    b, a, nu = params.beta, params.alpha, params.nu
    g1, g2 = params.gamma1, params.gamma2
    de, eps = params.delta * params.epsilon, params.epsilon
    inf_S = b * S * (I + a * Y)
    inf_P = nu * b * P * (I + a * Y)
    return np.array(
        [
            -inf_S + de * P,
            inf_S - g1 * I,
            g1 * I - eps * T,
            eps * T - inf_P - de * P + de * R,
            inf_P - g2 * Y,
            g2 * Y - de * R,
        ]
    )


def jacobian(state: Sequence[float], params: ModelParams) -> np.ndarray:
    """Analytic 5x5 Jacobian of :func:`vector_field5`."""
    x = np.asarray(state, dtype=float)
    if x.shape != (5,) or not np.all(np.isfinite(x)):
        raise InvalidInputError(f"jacobian needs a finite 5-vector, got {x}")
    S, I, T, P, Y = x
    b, a, nu = params.beta, params.alpha, params.nu
    g1, g2 = params.gamma1, params.gamma2
    eps, de = params.epsilon, params.delta * params.epsilon
    force = I + a * Y
    return np.array(
        [
            [-b * force, -b * S, 0.0, de, -b * a * S],
            [b * force, b * S - g1, 0.0, 0.0, b * a * S],
            [0.0, g1, -eps, 0.0, 0.0],
            [-de, -nu * b * P - de, eps * (1.0 - params.delta), -nu * b * force - 2.0 * de, -nu * b * a * P - de],
            [0.0, nu * b * P, 0.0, nu * b * force, nu * b * a * P - g2],
        ]
    )


def r0(params: ModelParams) -> float:
    return params.beta / params.gamma1


def r0_fast(S0: float, P0: float, params: ModelParams) -> float:
    """Reproduction number of a fast epidemic started from the mix (S0, P0)."""
    if S0 < 0.0 or P0 < 0.0 or S0 + P0 > 1.0 + NEGATIVE_TOLERANCE:
        raise InvalidInputError(f"(S0, P0) = ({S0}, {P0}) outside the simplex")
    return params.beta / params.gamma1 * S0 + params.beta / params.gamma2 * params.alpha_nu * P0


def lambda2(S: float, P: float, params: ModelParams) -> float:
    """Non-trivial eigenvalue of the infection block on {I = Y = 0}."""
    return -params.gamma + params.beta * (params.alpha_nu * P + S)


def region_value(S: float, P: float, params: ModelParams) -> float:
    return params.beta / params.gamma * (S + params.alpha_nu * P) - 1.0


def classify_region(
    S: float, P: float, params: ModelParams, zero_band: float = REGION_ZERO_BAND
) -> RegionLabel:
    if S < -NEGATIVE_TOLERANCE or P < -NEGATIVE_TOLERANCE or S + P > 1.0 + 1e-9:
        raise InvalidInputError(f"(S, P) = ({S}, {P}) outside the triangle")
    value = region_value(S, P, params)
    if abs(value) <= zero_band:
        region = Region.ZERO
    elif value > 0.0:
        region = Region.PLUS
    else:
        region = Region.MINUS
    return RegionLabel(region, value)
