"""Equilibrium branches along beta and their BP / LP / Hopf points.

The endemic branch is known in closed form (roots of a quadratic in P), so
instead of pseudo-arclength continuation we evaluate it on dense beta grids
and refine sign changes by bisection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .equilibria import (
    EquilibriumRecord,
    _aux,
    dfe_record,
    endemic_coeffs,
    endemic_equilibria,
    endemic_p_values,
    quadratic_roots,
    reconstruct_state,
)
from .errors import InvalidInputError
from .model import ModelParams

LP_BETA_TOL = 1e-13
HOPF_BETA_TOL = 1e-15
HOPF_REAL_TOL = 1e-10
IMAG_TOL = 1e-12


class Branch(str, Enum):
    UPPER = "Upper"
    LOWER = "Lower"
    UNIQUE = "Unique"
    DFE = "DFE"


class Kind(str, Enum):
    BP = "BP"
    LP = "LP"
    HOPF = "Hopf"


@dataclass(frozen=True)
class BranchPoint:
    beta: float
    equilibrium: EquilibriumRecord
    branch: Branch


@dataclass(frozen=True)
class BifurcationPoint:
    kind: Kind
    beta: float
    state: tuple
    alpha: float | None = None
    # diagnostic: discriminant for LP, real part of the pair for Hopf
    residual: float = 0.0


def scaled_discriminant(params: ModelParams) -> float:
    """Discriminant of the endemic quadratic divided by Q (finite at alpha*nu = 0)."""
    inv_q, A, de = _aux(params)
    r = 1.0 / params.r0
    a = params.nu * (1.0 + de / params.gamma2) - A * inv_q
    b = A * r + (1.0 - r) * inv_q
    c = -(1.0 - r) * r
    return b * b - 4.0 * a * c


def _endemic_at(params: ModelParams, beta: float) -> list:
    return endemic_equilibria(params.with_(beta=beta))


def branch_scan(params_base: ModelParams, beta_range, n_points: int) -> list[BranchPoint]:
    """All equilibria (DFE included) on an even beta grid, with spectra."""
    if n_points < 2:
        raise InvalidInputError("branch_scan needs n_points >= 2")
    lo, hi = (float(v) for v in beta_range)
    if not 0.0 < lo < hi:
        raise InvalidInputError(f"bad beta range {beta_range}")
    out = []
    for beta in np.linspace(lo, hi, n_points):
        p = params_base.with_(beta=float(beta))
        out.append(BranchPoint(float(beta), dfe_record(p), Branch.DFE))
        ee = endemic_equilibria(p)
        if len(ee) == 1:
            out.append(BranchPoint(float(beta), ee[0], Branch.UNIQUE))
        elif len(ee) == 2:
            out.append(BranchPoint(float(beta), ee[0], Branch.LOWER))
            out.append(BranchPoint(float(beta), ee[1], Branch.UPPER))
    return out


def _root_count(params: ModelParams, beta: float) -> int:
    return len(endemic_p_values(params.with_(beta=beta))[0])


def _bisect(fn, lo, hi, tol, maxiter=200):
    """Sign-change bisection; ``fn(lo)`` and ``fn(hi)`` must differ in sign."""
    flo = fn(lo) > 0
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            break
        if (fn(mid) > 0) == flo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _double_root_state(params: ModelParams):
    xs, _ = endemic_p_values(params)
    if xs:
        return tuple(reconstruct_state(float(np.mean(xs)), params))
    # discriminant slightly negative at the refined point: use the vertex
    inv_q, A, de = _aux(params)
    r = 1.0 / params.r0
    a = params.nu * (1.0 + de / params.gamma2) - A * inv_q
    b = A * r + (1.0 - r) * inv_q
    return tuple(reconstruct_state(-b / (2.0 * a), params))


def locate_lp(params_base: ModelParams, beta_range, n_grid: int = 2001) -> list[BifurcationPoint]:
    """Folds: grid beta values where the endemic root count jumps 0 <-> 2."""
    lo, hi = (float(v) for v in beta_range)
    grid = np.linspace(lo, min(hi, params_base.gamma1), n_grid)
    counts = [_root_count(params_base, b) for b in grid]
    found = []

    def disc(b):
        return scaled_discriminant(params_base.with_(beta=b))

    for i in range(len(grid) - 1):
        if {counts[i], counts[i + 1]} == {0, 2} and grid[i + 1] < params_base.gamma1:
            a, b = _bisect(disc, grid[i], grid[i + 1], LP_BETA_TOL)
            beta = float(0.5 * (a + b))
            p = params_base.with_(beta=beta)
            found.append(
                BifurcationPoint(Kind.LP, beta, _double_root_state(p),
                                 residual=endemic_coeffs(p).discriminant)
            )
    return found


def hopf_monitor(rec: EquilibriumRecord) -> float:
    """Real part of the rightmost complex-conjugate eigenvalue pair (nan if none)."""
    ev = rec.eigenvalues
    cplx = ev[np.abs(ev.imag) > IMAG_TOL]
    if cplx.size == 0:
        return math.nan
    return float(np.max(cplx.real))


def _upper(params: ModelParams, beta: float) -> EquilibriumRecord | None:
    ee = _endemic_at(params, beta)
    return ee[-1] if ee else None


def locate_hopf(params_base: ModelParams, beta_lo: float, beta_hi: float, n_grid: int = 600):
    """Sign changes of the Hopf monitor along the upper branch in (beta_lo, beta_hi]."""
    span = beta_hi - beta_lo
    if span <= 0:
        return []
    grid = beta_lo + np.geomspace(1e-9, span, n_grid)
    vals = []
    for b in grid:
        rec = _upper(params_base, float(b))
        vals.append(math.nan if rec is None else hopf_monitor(rec))

    def mon(b):
        rec = _upper(params_base, b)
        return math.nan if rec is None else hopf_monitor(rec)

    found = []
    prev_b, prev_v = None, math.nan
    for b, v in zip(grid, vals):
        if math.isnan(v):
            prev_b, prev_v = None, math.nan
            continue
        if prev_b is not None and (prev_v > 0) != (v > 0):
            a, c = _bisect(mon, float(prev_b), float(b), HOPF_BETA_TOL)
            beta = a if abs(mon(a)) < abs(mon(c)) else c
            re = mon(beta)
            # a jump between two different complex pairs also flips the sign
            if abs(re) < HOPF_REAL_TOL:
                rec = _upper(params_base, beta)
                found.append(BifurcationPoint(Kind.HOPF, beta, tuple(rec.state), residual=re))
        prev_b, prev_v = b, v
    return found


def detect_bifurcations(params_base: ModelParams, beta_range, n_grid: int = 2001):
    """BP, LP and Hopf points in ``beta_range``, sorted by beta."""
    lo, hi = (float(v) for v in beta_range)
    if not 0.0 < lo < hi:
        raise InvalidInputError(f"bad beta range {beta_range}")
    out = []
    g1 = params_base.gamma1
    bp = None
    if lo <= g1 <= hi:
        p = params_base.with_(beta=g1)
        bp = BifurcationPoint(Kind.BP, g1, tuple(dfe_record(p).state))
        out.append(bp)
    lps = locate_lp(params_base, (lo, hi), n_grid)
    out.extend(lps)
    # scan the upper branch from the fold (or the range start) upward
    start = max(lp.beta for lp in lps) if lps else lo
    hopfs = locate_hopf(params_base, start, hi)
    out.extend(hopfs)
    if lps and bp is not None:
        for h in hopfs:
            if not (lps[0].beta < h.beta < bp.beta):
                warnings.warn(f"Hopf at beta={h.beta:.10g} is not between LP and BP")
    return sorted(out, key=lambda pt: pt.beta)


def lp_betas(params: ModelParams) -> list[float]:
    """Fold locations in beta from the closed-form discriminant condition.

    With ``r = 1 / R0`` the discriminant of the endemic quadratic is
    ``K2 r^2 + K1 r + 1``; a fold needs a root ``r > 1`` whose double root
    in P is admissible.
    """
    if params.alpha_nu == 0.0:
        return []
    inv_q, A, de = _aux(params)
    Q = 1.0 / inv_q
    B = (params.gamma2 + de) / (params.gamma1 * params.alpha)
    a = B - A
    K2 = (A * Q - 1.0) ** 2 - 4.0 * a * Q
    K1 = 2.0 * (A * Q - 1.0) + 4.0 * a * Q
    roots, _ = quadratic_roots(K2, K1, 1.0)
    betas = []
    for r in roots:
        if r <= 1.0 or a == 0.0:
            continue
        b = 1.0 - r + A * Q * r
        x = -b / (2.0 * a)
        if 0.0 < x < Q * r:
            betas.append(params.gamma1 / r)
    return sorted(betas)


def lp_curve(params_base: ModelParams, alpha_range, n_points: int) -> list[BifurcationPoint]:
    """Fold curve in the (beta, alpha) plane; alphas without a fold are skipped."""
    if n_points < 1:
        raise InvalidInputError("n_points must be positive")
    out = []
    for alpha in np.linspace(float(alpha_range[0]), float(alpha_range[1]), n_points):
        p = params_base.with_(alpha=float(alpha))
        for beta in lp_betas(p):
            q = p.with_(beta=beta)
            out.append(
                BifurcationPoint(Kind.LP, beta, _double_root_state(q), float(alpha),
                                 residual=endemic_coeffs(q).discriminant)
            )
    return out
