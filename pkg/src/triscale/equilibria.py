"""Disease-free and endemic equilibria, existence verdicts and spectra.

Endemic states are parametrised by their P coordinate ``x``.  Eliminating
the other compartments leaves a quadratic ``f(x) = a x^2 + b x + c`` whose
roots in ``(0, Q / R0)`` are the endemic equilibria.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConstraintError, NumericalError
from .model import ModelParams, State6, jacobian, vector_field6

RESIDUAL_TOL = 1e-10
FOLD_TOL = 1e-14
CLUSTER_FACTOR = 10.0


class EquilibriumKind(str, Enum):
    DFE = "DFE"
    ENDEMIC = "Endemic"


class Verdict(str, Enum):
    UNIQUE = "UniqueEndemic"
    TWO = "TwoEndemic"
    NONE = "NoEndemic"


@dataclass(frozen=True)
class QuadraticCoeffs:
    a: float
    b: float
    c: float
    A: float
    B: float
    Q: float

    @property
    def discriminant(self) -> float:
        return self.b * self.b - 4.0 * self.a * self.c

    def __call__(self, x):
        return (self.a * x + self.b) * x + self.c


@dataclass
class EquilibriumRecord:
    state: State6
    kind: EquilibriumKind
    eigenvalues: np.ndarray = field(repr=False)
    stable: bool
    residual: float
    fold_degenerate: bool = False

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))


@dataclass(frozen=True)
class ExistenceVerdict:
    verdict: Verdict
    r_star: float | None
    finite_delta: Verdict
    agrees: bool


def dfe() -> State6:
    return State6(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def dfe_eigenvalues(params: ModelParams) -> np.ndarray:
    de = params.delta * params.epsilon
    return np.array(
        [-params.gamma2, -params.gamma1 * (1.0 - params.r0), -params.epsilon, -de, -de]
    )


def global_stability_certificate(params: ModelParams) -> bool:
    """Sufficient condition for global exponential stability of the DFE.

    Only a certificate: ``False`` does not mean the DFE fails to be globally
    stable.
    """
    r0 = params.r0
    return params.gamma1 <= params.gamma2 and r0 < 1.0 and params.alpha_nu < 1.0 / r0


def _aux(params: ModelParams):
    g1, g2 = params.gamma1, params.gamma2
    de = params.delta * params.epsilon
    inv_q = g1 * params.alpha_nu / g2
    A = 1.0 - inv_q + de / g1 + params.delta
    return inv_q, A, de


def endemic_coeffs(params: ModelParams, truncated: bool = False) -> QuadraticCoeffs:
    """Coefficients of ``f``; ``truncated=True`` gives the delta -> 0 forms."""
    if params.alpha_nu == 0.0:
        raise ConstraintError("the quadratic needs alpha * nu > 0 (Q is infinite otherwise)")
    g1, g2 = params.gamma1, params.gamma2
    Q = g2 / (g1 * params.alpha_nu)
    r0 = params.r0
    if truncated:
        A = 1.0 - 1.0 / Q
        B = g2 / (g1 * params.alpha)
        return QuadraticCoeffs(
            a=params.nu * Q - 1.0 + 1.0 / Q,
            b=1.0 - 2.0 / r0 + Q / r0,
            c=Q / r0 * (1.0 / r0 - 1.0),
            A=A,
            B=B,
            Q=Q,
        )
    _, A, de = _aux(params)
    B = (g2 + de) / (g1 * params.alpha)
    return QuadraticCoeffs(
        a=B - A, b=1.0 - 1.0 / r0 + A * Q / r0, c=Q / r0 * (1.0 / r0 - 1.0), A=A, B=B, Q=Q
    )


def _scaled_coeffs(params: ModelParams):
    """``f / Q`` with coefficients that stay finite when alpha * nu = 0."""
    inv_q, A, de = _aux(params)
    r = 1.0 / params.r0
    a = params.nu * (1.0 + de / params.gamma2) - A * inv_q
    b = A * r + (1.0 - r) * inv_q
    c = -(1.0 - r) * r
    return a, b, c


def quadratic_roots(a: float, b: float, c: float) -> tuple[list[float], bool]:
    """Real roots avoiding cancellation; second value flags a (near) double root."""
    if a == 0.0:
        return ([] if b == 0.0 else [-c / b]), False
    disc = b * b - 4.0 * a * c
    if abs(disc) < FOLD_TOL:
        return [-b / (2.0 * a)], True
    if disc < 0.0:
        return [], False
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    roots = [q / a]
    if q != 0.0:
        roots.append(c / q)
    else:
        roots.append(0.0)
    return sorted(roots), False


def endemic_p_values(params: ModelParams) -> tuple[list[float], bool]:
    """P coordinates of all endemic equilibria, ascending."""
    inv_q, _, _ = _aux(params)
    r = 1.0 / params.r0
    a, b, c = _scaled_coeffs(params)
    roots, degenerate = quadratic_roots(a, b, c)
    # 0 < x < Q/R0  <=>  S = 1/R0 - x/Q > 0
    return [x for x in roots if x > 0.0 and r - x * inv_q > 0.0], degenerate


def reconstruct_state(x: float, params: ModelParams) -> State6:
    g1, g2 = params.gamma1, params.gamma2
    de = params.delta * params.epsilon
    S = g1 / params.beta * (1.0 - params.beta * params.alpha_nu * x / g2)
    I = de * x / g1
    T = params.delta * x
    Y = de * params.nu * x * x / (g2 * S)
    R = g2 * Y / de
    return State6(S, I, T, x, Y, R)


def _merge_clusters(ev: np.ndarray, tol: float) -> np.ndarray:
    # A defective eigenvalue (the DFE has a Jordan block at -delta*eps) comes
    # back split by ~sqrt(machine eps); the cluster mean is accurate to eps.
    ev = ev.copy()
    n = len(ev)
    seen = np.zeros(n, dtype=bool)
    for i in range(n):
        if seen[i]:
            continue
        group = [j for j in range(i, n) if not seen[j] and abs(ev[j] - ev[i]) < tol]
        if len(group) > 1:
            ev[group] = ev[group].mean()
        seen[group] = True
    return ev


def _spectrum(state, params: ModelParams) -> np.ndarray:
    J = jacobian(state[:5], params)
    try:
        ev = np.linalg.eigvals(J)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigenvalue iteration did not converge", matrix=J.tolist()) from exc
    ev = _merge_clusters(ev, CLUSTER_FACTOR * np.sqrt(np.finfo(float).eps) * np.linalg.norm(J))
    return ev[np.lexsort((ev.imag, ev.real))]


def equilibrium_spectrum(record: EquilibriumRecord, params: ModelParams) -> np.ndarray:
    """Eigenvalues of the Jacobian at a recorded equilibrium (dense LAPACK solve)."""
    res = float(np.max(np.abs(vector_field6(record.state, params))))
    if res > 1e-8:
        raise NumericalError("state is not an equilibrium", residual=res)
    return _spectrum(record.state, params)


def _record(state: State6, kind: EquilibriumKind, params: ModelParams, degenerate=False):
    ev = _spectrum(state, params)
    residual = float(np.max(np.abs(vector_field6(state, params))))
    return EquilibriumRecord(state, kind, ev, bool(np.all(ev.real < 0.0)), residual, degenerate)


def dfe_record(params: ModelParams) -> EquilibriumRecord:
    return _record(dfe(), EquilibriumKind.DFE, params)


def endemic_equilibria(params: ModelParams) -> list[EquilibriumRecord]:
    """All endemic equilibria, ordered by increasing P (lower branch first)."""
    xs, degenerate = endemic_p_values(params)
    return [
        _record(reconstruct_state(x, params), EquilibriumKind.ENDEMIC, params, degenerate)
        for x in xs
    ]


def all_equilibria(params: ModelParams) -> list[EquilibriumRecord]:
    return [dfe_record(params)] + endemic_equilibria(params)


def r_star(nu: float, Q: float) -> float:
    """Lower R0 threshold for two endemic equilibria in the delta -> 0 limit."""
    return Q * (1.0 - 2.0 * nu * Q) + math.sqrt(4.0 * nu * Q**3 * (nu * Q - 1.0 + 1.0 / Q))


def _count_verdict(n: int) -> Verdict:
    return {0: Verdict.NONE, 1: Verdict.UNIQUE}.get(n, Verdict.TWO)


def existence_verdict(params: ModelParams) -> ExistenceVerdict:
    """Analytic (delta -> 0) existence verdict plus the finite-delta root count."""
    r0 = params.r0
    finite = _count_verdict(len(endemic_p_values(params)[0]))
    an = params.alpha_nu
    Q = math.inf if an == 0.0 else params.gamma2 / (params.gamma1 * an)
    rs = r_star(params.nu, Q) if Q < 1.0 else None
    if r0 > 1.0:
        verdict = Verdict.UNIQUE
    elif r0 == 1.0:
        verdict = Verdict.UNIQUE if Q < 1.0 else Verdict.NONE
    elif Q < 1.0 and r0 > rs:
        verdict = Verdict.TWO
    else:
        verdict = Verdict.NONE
    return ExistenceVerdict(verdict, rs, finite, verdict == finite)
