"""Fast-scale epidemic: conservation laws, final-size equation, map F.

Along the fast flow two quantities are conserved,

    (S / S0)**nu = P / P0,
    log(S / S0) - beta * ((S + I - S0 - I0) / gamma1 + alpha * (P + Y - P0 - Y0) / gamma2),

so the landing point on {I = Y = 0} follows from a scalar root problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoEpidemic
from .model import REGION_ZERO_BAND, ModelParams, Region, classify_region, r0_fast

ROOT_XTOL = 1e-13
RTOL = 4.0 * np.finfo(float).eps


@dataclass(frozen=True)
class LandingPoint:
    S_inf: float
    P_inf: float
    T_inf: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.S_inf, self.P_inf, self.T_inf)


def _ratio_pow(ratio: float, nu: float) -> float:
    return math.exp(nu * math.log(ratio))


def final_size_L(x, S0, P0, I0, Y0, params: ModelParams) -> float:
    """Final-size residual: zero exactly at the fast-flow limit of S."""
    if x <= 0.0:
        raise DomainError(f"final-size function needs x > 0, got {x}")
    if S0 <= 0.0:
        raise DomainError(f"final-size function needs S0 > 0, got {S0}")
    b, a = params.beta, params.alpha
    g1, g2 = params.gamma1, params.gamma2
    ratio = x / S0
    return (
        math.log(ratio)
        - b * ((x - S0) / g1 + a * (P0 * _ratio_pow(ratio, params.nu) - P0) / g2)
        + b * (I0 / g1 + a * Y0 / g2)
    )


def _residual_log(u, S0, P0, I0, Y0, params):
    # same residual in u = log(x / S0); linear for u -> -inf, so brackets are easy
    b, a = params.beta, params.alpha
    g1, g2 = params.gamma1, params.gamma2
    return (
        u
        - b * (S0 * math.expm1(u) / g1 + a * P0 * math.expm1(params.nu * u) / g2)
        + b * (I0 / g1 + a * Y0 / g2)
    )


def _peak_log(S0, P0, params):
    """Location (in u) of the single maximum of the residual."""
    b, an = params.beta, params.alpha_nu
    g1, g2 = params.gamma1, params.gamma2

    def slope(u):
        return 1.0 - b / g1 * S0 * math.exp(u) - b / g2 * an * P0 * math.exp(params.nu * u)

    if slope(0.0) >= 0.0:
        return 0.0
    lo = -1.0
    while slope(lo) <= 0.0:
        lo *= 2.0
    return brentq(slope, lo, 0.0, xtol=1e-15, rtol=RTOL)


def solve_final_size(S0, P0, I0, Y0, params: ModelParams) -> float:
    """Limit of S under the fast flow.

    With ``I0 = Y0 = 0`` this is the singular-limit map: the trivial root
    ``x = S0`` is skipped and the smaller root is returned when the fast
    reproduction number exceeds one.  Points on the neutral line map to
    themselves; below it :class:`NoEpidemic` is raised.
    """
    if S0 <= 0.0:
        raise DomainError(f"S0 must be positive, got {S0}")
    if I0 < 0.0 or Y0 < 0.0 or P0 < 0.0:
        raise DomainError("initial compartments must be non-negative")
    seeded = I0 + Y0 > 0.0
    if seeded:
        hi = 0.0
    else:
        excess = r0_fast(S0, P0, params) - 1.0
        if abs(excess) <= REGION_ZERO_BAND:
            return S0
        if excess < 0.0:
            raise NoEpidemic(f"fast reproduction number {excess + 1.0:.6g} <= 1")
        hi = _peak_log(S0, P0, params)

    def g(u):
        return _residual_log(u, S0, P0, I0, Y0, params)

    lo = min(hi, 0.0) - 1.0
    while g(lo) >= 0.0:
        lo = 2.0 * lo - 1.0
    u = brentq(g, lo, hi, xtol=ROOT_XTOL / max(S0, 1e-300) * 0.1, rtol=RTOL, maxiter=500)
    return S0 * math.exp(u)


def p_infinity(S0: float, P0: float, S_inf: float, nu: float) -> float:
    if not 0.0 < S_inf <= S0:
        raise DomainError(f"need 0 < S_inf <= S0, got S_inf={S_inf}, S0={S0}")
    return P0 * _ratio_pow(S_inf / S0, nu)


def map_F(S: float, P: float, params: ModelParams) -> tuple[float, float]:
    """Singular fast map (S, P) -> (S_inf, P_inf) on the unstable side of the manifold."""
    params.require_equal_gamma()
    label = classify_region(S, P, params)
    if label.region is Region.ZERO:
        return (S, P)
    if label.region is Region.MINUS:
        raise DomainError(f"({S}, {P}) lies in the stable region (L = {label.value:.3g})")
    s_inf = solve_final_size(S, P, 0.0, 0.0, params)
    return (s_inf, p_infinity(S, P, s_inf, params.nu))


def map_F_tilde(S: float, P: float, T: float, params: ModelParams) -> LandingPoint:
    """Fast map with the temporarily immune pool carried along: T gains S - S_inf."""
    s_inf, p_inf = map_F(S, P, params)
    return LandingPoint(s_inf, p_inf, T + S - s_inf)


def fast_invariants(state, S0, P0, I0, Y0, params: ModelParams) -> tuple[float, float]:
    """Both conserved quantities of the fast flow evaluated at ``state``.

    Returns ``((S/S0)**nu - P/P0, second_law_residual)``; both vanish along an
    exact fast trajectory (the first is undefined when ``P0 == 0`` and is
    reported as ``P``).
    """
    S, I, T, P, Y = state[:5]
    b, a = params.beta, params.alpha
    first = (S / S0) ** params.nu - P / P0 if P0 > 0.0 else P
    second = math.log(S / S0) - b * (
        (S + I - S0 - I0) / params.gamma1 + a * (P + Y - P0 - Y0) / params.gamma2
    )
    return first, second
