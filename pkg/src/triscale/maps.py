"""Intermediate and slow recovery phases and the composed epoch map.

After a fast epidemic the orbit sits on {I = Y = 0} in the stable region.
Either the T -> P transfer on the intermediate scale pushes it back across
the neutral line (exit time = positive root of ``phi``), or the orbit
reaches {I = Y = T = 0} and drifts on the slow scale until the integral of
the leading eigenvalue returns to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoExit
from .fast import RTOL, LandingPoint, map_F_tilde
from .model import REGION_ZERO_BAND, ModelParams, Region, classify_region, region_value

TANGENCY_BAND = 1e-10
SLOW_XTOL = 1e-12
FIXED_POINT_TOL = 1e-10


class Scale(str, Enum):
    INTERMEDIATE = "intermediate"
    SLOW = "slow"


@dataclass(frozen=True)
class ExitEvent:
    """Where and when the orbit leaves the critical manifold.

    ``exit_time`` is in the scale's own unit: tau1 for intermediate exits,
    tau2 for slow exits.
    """

    scale: Scale
    exit_time: float
    exit_point: tuple[float, float, float]
    degenerate: bool = False

    def tau1(self, params: ModelParams) -> float:
        if self.scale is Scale.SLOW:
            return self.exit_time / params.delta
        return self.exit_time


@dataclass(frozen=True)
class EpochLog:
    """One fast epidemic followed by its recovery phase.

    ``start_time`` and ``return_time`` are in tau1 units; multiply by
    ``1 / epsilon`` for fast time.
    """

    index: int
    entry: tuple[float, float, float]
    landing: LandingPoint
    exit: ExitEvent
    start_time: float
    return_time: float
    epsilon: float
    delta: float
    fixed_point: bool = False

    @property
    def return_time_fast_units(self) -> float:
        return self.return_time / self.epsilon

    @property
    def next_start_time(self) -> float:
        return self.start_time + self.return_time


def intermediate_flow(T_inf: float, P_inf: float, tau1) -> tuple:
    """T decays into P at unit rate on the intermediate scale; S is frozen."""
    tau1 = np.asarray(tau1, dtype=float)
    if np.any(tau1 < 0.0):
        raise DomainError("tau1 must be non-negative")
    decay = np.exp(-tau1)
    T = T_inf * decay
    P = P_inf - T_inf * np.expm1(-tau1)
    if T.ndim == 0:
        return float(T), float(P)
    return T, P


def _mean_decay(x: float) -> float:
    # (1 - exp(-x)) / x, continuous at 0
    if x == 0.0:
        return 1.0
    return -math.expm1(-x) / x


def phi(x: float, landing: LandingPoint, params: ModelParams) -> float:
    """Running mean of the leading eigenvalue over ``[0, x]`` during the intermediate flow."""
    g = params.gamma
    if x < 0.0:
        raise DomainError(f"phi needs x >= 0, got {x}")
    b, an = params.beta, params.alpha_nu
    S, P, T = landing.as_tuple()
    return -g + b * (S + an * P) + b * an * T * (1.0 - _mean_decay(x))


def _phi_root(landing: LandingPoint, params: ModelParams) -> float:
    if phi(0.0, landing, params) >= 0.0:
        return 0.0
    hi = 1.0
    while phi(hi, landing, params) <= 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError("phi has no positive root")
    return brentq(lambda x: phi(x, landing, params), 0.0, hi, xtol=1e-14, rtol=RTOL)


def intermediate_exit(landing: LandingPoint, params: ModelParams) -> ExitEvent | None:
    """Exit on the intermediate scale, or ``None`` when the orbit goes on to the slow scale."""
    params.require_equal_gamma()
    S, P, T = landing.as_tuple()
    if region_value(S, P + T, params) <= TANGENCY_BAND:
        return None
    t_exit = _phi_root(landing, params)
    T_e, P_e = intermediate_flow(T, P, t_exit)
    return ExitEvent(Scale.INTERMEDIATE, t_exit, (S, P_e, T_e))


def slow_flow(S_fin: float, P_fin: float, tau2):
    """Closed-form linear slow flow on {I = Y = T = 0}; returns (S, P, R)."""
    tau2 = np.asarray(tau2, dtype=float)
    if np.any(tau2 < 0.0):
        raise DomainError("tau2 must be non-negative")
    R_fin = 1.0 - S_fin - P_fin
    decay = np.exp(-tau2)
    R = R_fin * decay
    P = (P_fin + tau2 * R_fin) * decay
    S = 1.0 - P_fin * decay - R_fin * (1.0 + tau2) * decay
    if R.ndim == 0:
        return float(S), float(P), float(R)
    return S, P, R


def slow_integrals(S_fin: float, P_fin: float, tau2: float) -> tuple[float, float]:
    """Exact integrals of S and P along the slow flow over ``[0, tau2]``."""
    R_fin = 1.0 - S_fin - P_fin
    one_minus = -math.expm1(-tau2)
    te = tau2 * math.exp(-tau2)
    int_P = P_fin * one_minus + R_fin * (one_minus - te)
    int_S = tau2 - P_fin * one_minus - R_fin * (2.0 * one_minus - te)
    return int_S, int_P


def slow_exit_objective(tau2, S_fin, P_fin, params: ModelParams, transit_T: float = 0.0):
    """Integral of the leading eigenvalue up to ``tau2`` on the slow scale.

    ``transit_T`` is the temporarily immune pool still draining into P when
    the orbit enters the slow scale; its finite-delta contribution shifts the
    balance by ``-delta * beta * alpha * nu * T * (1 - exp(-tau2 / delta))``.
    With ``transit_T = 0`` this is the pure singular-limit condition.
    """
    b, an = params.beta, params.alpha_nu
    int_S, int_P = slow_integrals(S_fin, P_fin, tau2)
    value = -params.gamma * tau2 + b * (int_S + an * int_P)
    if transit_T:
        value += params.delta * b * an * transit_T * math.expm1(-tau2 / params.delta)
    return value


def slow_exit_time(S_fin: float, P_fin: float, params: ModelParams, transit_T: float = 0.0) -> float:
    """Smallest positive tau2 at which the accumulated eigenvalue integral returns to zero."""
    params.require_equal_gamma()
    if params.r0 <= 1.0:
        raise NoExit(f"R0 = {params.r0:.6g} <= 1: the slow flow never destabilises the manifold")
    lam0 = -params.gamma + params.beta * (S_fin + params.alpha_nu * P_fin)
    if lam0 > REGION_ZERO_BAND:
        raise DomainError(f"slow entry must be on the stable side, leading eigenvalue {lam0:.3g}")
    if abs(lam0) <= REGION_ZERO_BAND and transit_T == 0.0:
        return 0.0

    def mean(t):
        return slow_exit_objective(t, S_fin, P_fin, params, transit_T) / t

    # scan for the first sign change of the running mean, then refine
    grid = np.geomspace(1e-9, 1e4, 2601)
    prev = grid[0]
    if mean(prev) > 0.0:
        return brentq(mean, 1e-300, prev, xtol=SLOW_XTOL)
    for t in grid[1:]:
        if mean(t) > 0.0:
            return brentq(mean, prev, t, xtol=SLOW_XTOL, rtol=RTOL)
        prev = t
    raise NoExit("no exit found on the slow scale")


def map_G(
    landing: LandingPoint, params: ModelParams, transit_correction: bool = False
) -> tuple[tuple[float, float, float], ExitEvent]:
    """Recovery map from a landing point to the start of the next epidemic.

    ``transit_correction`` adds the O(delta) effect of the intermediate
    transit on slow exits, which the singular limit drops.
    """
    params.require_equal_gamma()
    S, P, T = landing.as_tuple()
    if classify_region(S, P, params).region is Region.ZERO and T == 0.0:
        return landing.as_tuple(), ExitEvent(Scale.INTERMEDIATE, 0.0, landing.as_tuple())
    event = intermediate_exit(landing, params)
    if event is not None:
        return event.exit_point, event
    degenerate = abs(region_value(S, P + T, params)) <= TANGENCY_BAND
    P_fin = P + T
    t_exit = slow_exit_time(S, P_fin, params, transit_T=T if transit_correction else 0.0)
    S_e, P_e, _ = slow_flow(S, P_fin, t_exit)
    point = (S_e, P_e, 0.0)
    return point, ExitEvent(Scale.SLOW, t_exit, point, degenerate)


def iterate_epochs(
    initial, n: int, params: ModelParams, transit_correction: bool = False
) -> list[EpochLog]:
    """Iterate the composed map (recovery after fast epidemic) ``n`` times."""
    params.require_equal_gamma()
    if params.r0 <= 1.0:
        raise DomainError("epoch iteration assumes R0 > 1")
    entry = tuple(float(v) for v in initial)
    if len(entry) != 3:
        raise DomainError("initial point must be (S, P, T)")
    if classify_region(entry[0], entry[1], params).region is Region.MINUS:
        raise DomainError(f"initial point {entry} is on the stable side of the neutral line")
    logs: list[EpochLog] = []
    start = 0.0
    for k in range(n):
        landing = map_F_tilde(*entry, params)
        nxt, event = map_G(landing, params, transit_correction)
        ret = event.tau1(params)
        on_neutral = classify_region(entry[0], entry[1], params).region is Region.ZERO
        stalled = max(abs(u - v) for u, v in zip(nxt, entry)) < FIXED_POINT_TOL
        logs.append(
            EpochLog(k, entry, landing, event, start, ret, params.epsilon, params.delta,
                     fixed_point=on_neutral or stalled)
        )
        if on_neutral or stalled:
            break
        start += ret
        entry = nxt
    return logs
