"""Numbered acceptance criteria.

Each criterion is a plain function returning ``(ok, detail)`` so the file
also runs standalone: ``python3 tests/test_acceptance.py``.  Wall-clock
limits are part of each criterion.
"""

import math
import time

import numpy as np
import pytest

from triscale.bifurcation import Branch, Kind, branch_scan, detect_bifurcations, hopf_monitor
from triscale.compare import compare
from triscale.config import presets
from triscale.equilibria import (
    dfe_eigenvalues,
    dfe_record,
    endemic_equilibria,
    global_stability_certificate,
    r_star,
)
from triscale.fast import fast_invariants, solve_final_size
from triscale.integrator import EventKind, IntegratorConfig, basin_sample, integrate
from triscale.maps import intermediate_exit, slow_exit_time, slow_flow
from triscale.fast import LandingPoint
from triscale.model import ModelParams

FIG5 = dict(alpha=5.0, nu=0.9, gamma1=0.25, gamma2=0.25, delta=0.05, epsilon=0.05)
MANIFOLD = dict(beta=0.9, alpha=0.5, nu=0.7, gamma1=1 / 6, gamma2=1 / 6)


def bisect(fn, lo, hi, tol=1e-14):
    """Plain bisection, independent of the package's root finders."""
    flo = fn(lo)
    assert flo * fn(hi) < 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (fn(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def timed(limit):
    def wrap(fn):
        def run():
            t0 = time.perf_counter()
            ok, detail = fn()
            dt = time.perf_counter() - t0
            within = dt < limit
            return ok and within, f"{detail}; {dt:.1f}s (limit {limit}s)"
        run.__name__ = fn.__name__
        return run
    return wrap


def _random_params(rng):
    return ModelParams(
        beta=rng.uniform(0.05, 3.0), alpha=rng.uniform(0.0, 3.0), nu=rng.uniform(0.0, 3.0),
        gamma1=rng.uniform(0.1, 2.0), gamma2=rng.uniform(0.1, 2.0),
        delta=rng.uniform(1e-3, 0.5), epsilon=rng.uniform(1e-3, 0.5),
    )


@timed(5)
def criterion_1():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        p = _random_params(rng)
        num = np.sort_complex(dfe_record(p).eigenvalues)
        ref = np.sort_complex(dfe_eigenvalues(p).astype(complex))
        worst = max(worst, float(np.max(np.abs(num - ref))))
    return worst < 1e-9, f"max eigenvalue mismatch {worst:.2e} over 200 parameter sets"


def _final_size_oracle(S0, P0, I0, Y0, p):
    def L(x):
        return (math.log(x / S0) - p.beta * ((x - S0) / p.gamma1
                + p.alpha * (P0 * (x / S0) ** p.nu - P0) / p.gamma2)
                + p.beta * (I0 / p.gamma1 + p.alpha * Y0 / p.gamma2))
    # seeded: L(S0) > 0 and L(0+) = -inf, concave in log x -> one root in (0, S0)
    return bisect(L, 1e-12, S0)


@timed(2)
def criterion_2():
    p1 = ModelParams(2.0, 0.8, 1.1, 1.0, 1.0, 1e-3, 1e-3)
    x0 = (0.999, 1e-3, 0.0, 0.0, 0.0)
    ref1 = _final_size_oracle(0.999, 0.0, 1e-3, 0.0, p1)
    s1 = integrate(x0, p1, (0.0, 300.0), system="fast").final.S
    x0b = (0.5, 1e-3, 0.0, 0.4, 0.0)
    ref2 = _final_size_oracle(0.5, 0.4, 1e-3, 0.0, p1)
    s2 = integrate(x0b, p1, (0.0, 300.0), system="fast").final.S
    e1, e2 = abs(s1 - ref1), abs(s2 - ref2)
    # the package root finder must agree too
    pk = abs(solve_final_size(0.999, 0.0, 1e-3, 0.0, p1) - ref1)
    ok = e1 < 1e-4 and e2 < 1e-4 and pk < 1e-10
    return ok, (f"S_inf={s1:.6f} vs root {ref1:.6f} (err {e1:.1e}); "
                f"with P0: {s2:.6f} vs {ref2:.6f} (err {e2:.1e})")


@timed(10)
def criterion_3():
    rng = np.random.default_rng(3)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    worst = 0.0
    for _ in range(50):
        p = _random_params(rng).with_(nu=rng.uniform(0.1, 2.0), alpha=rng.uniform(0.1, 2.0))
        e = rng.exponential(size=6)
        x = e / e.sum()
        S0, I0, T0, P0, Y0 = x[:5]
        traj = integrate(x[:5], p, (0.0, 50.0), cfg, t_eval=np.linspace(0, 50, 201), system="fast")
        for st in traj.states:
            a, b = fast_invariants(st, S0, P0, I0, Y0, p)
            worst = max(worst, abs(a), abs(b))
    return worst < 1e-6, f"max invariant drift {worst:.2e} over 50 fast trajectories"


@timed(30)
def criterion_4():
    base = ModelParams(beta=0.2, **FIG5)
    pts = branch_scan(base, (0.1, 0.3), 401)
    by_beta = {}
    for pt in pts:
        if pt.branch is not Branch.DFE:
            by_beta.setdefault(pt.beta, []).append(pt)
    counts = {b: len(by_beta.get(b, [])) for b in sorted({pt.beta for pt in pts})}
    seq = []
    for b, c in counts.items():
        if not seq or seq[-1] != c:
            seq.append(c)
    resid = max(pt.equilibrium.residual for pt in pts)

    found = detect_bifurcations(base, (0.1, 0.3))
    bp = [f for f in found if f.kind is Kind.BP]
    lp = [f for f in found if f.kind is Kind.LP]
    hopf = [f for f in found if f.kind is Kind.HOPF]
    ok = seq == [0, 2, 1] and resid < 1e-10
    ok &= len(bp) == 1 and bp[0].beta == 0.25
    ok &= len(lp) == 1 and 0.128 < lp[0].beta < 0.1324
    ok &= len(hopf) == 1 and lp[0].beta < hopf[0].beta < 0.25 if (lp and bp) else False
    flip = False
    if hopf:
        h = hopf[0].beta
        below = endemic_equilibria(base.with_(beta=h - 1e-6))[-1]
        above = endemic_equilibria(base.with_(beta=h + 1e-6))[-1]
        flip = (not below.stable) and above.stable
        ok &= flip
    return bool(ok), (
        f"root counts {seq}, BP={bp[0].beta if bp else None}, "
        f"LP={lp[0].beta if lp else None:.7f}, H={hopf[0].beta if hopf else float('nan'):.7f}, "
        f"upper branch unstable->stable: {flip}, max residual {resid:.1e}"
    )


@timed(30)
def criterion_5():
    base = ModelParams(beta=0.2, **FIG5)
    Q = base.gamma2 / (base.gamma1 * base.alpha_nu)
    beta_star = base.gamma1 * r_star(base.nu, Q)
    lps = []
    for d in (0.05, 0.01, 0.001):
        found = detect_bifurcations(base.with_(delta=d, epsilon=d), (0.1, 0.3))
        lps.append(next(f.beta for f in found if f.kind is Kind.LP))
    gaps = [lp - beta_star for lp in lps]
    ok = all(g > 0 for g in gaps) and gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.002
    ok &= abs(r_star(base.nu, Q) - 0.5157) < 1e-4
    return ok, f"beta*={beta_star:.6f}, finite-delta LP {[round(x, 7) for x in lps]}"


@timed(60)
def criterion_6():
    d = 1e-3
    p = ModelParams(delta=d, epsilon=d, **MANIFOLD)
    # Fig 4: intermediate exit
    land4 = LandingPoint(0.1667, 0.0, 0.7333)
    ev = intermediate_exit(land4, p)
    b, g, an = p.beta, p.gamma1, p.alpha_nu

    def phi_ref(x):
        return -g + b * (0.1667 + an * 0.7333) - b * an * 0.7333 * (1 - math.exp(-x)) / x

    root_ref = bisect(phi_ref, 1e-9, 10.0)
    tr = integrate((0.1667, 1e-6, 0.7333, 0.0, 0.0), p, (0.0, 2.0 / d))
    up = tr.events_of(EventKind.EPIDEMIC_START, 1e-6)
    t_ode = up[0].t * d if up else math.nan
    err4 = abs(t_ode - ev.exit_time) / ev.exit_time if ev else math.inf
    ok = ev is not None and abs(ev.exit_time - root_ref) < 1e-10 and abs(root_ref - 0.152) < 2e-3
    ok &= err4 < 0.2

    # Fig 3: slow branch
    land3 = LandingPoint(0.1667, 0.0, 0.0)
    none3 = intermediate_exit(land3, p) is None
    TE = slow_exit_time(0.1667, 0.0, p)
    de = d * d
    grid = np.linspace(0.0, 0.1 / de, 401)
    tr3 = integrate((0.1667, 1e-6, 0.0, 0.0, 0.0), p, (0.0, 0.3 / de), t_eval=np.concatenate([grid, [0.3 / de]]))
    up3 = tr3.events_of(EventKind.EPIDEMIC_START, 1e-6)
    te_ode = up3[0].t * de if up3 else math.nan
    S_ref, P_ref, _ = slow_flow(0.1667, 0.0, grid[1:] * de)
    track = np.max(np.abs(tr3.states[1:401, [0, 3]] - np.column_stack([S_ref, P_ref])))
    # the 1e-6 seed eats a little S first; the slow drift starts after that
    rising = bool(np.all(np.diff(tr3.states[4:401, 0]) > 0))
    err3 = abs(te_ode - TE) / TE
    ok &= none3 and rising and track < 1e-2 and err3 < 0.25
    return bool(ok), (
        f"Fig4 phi-root {ev.exit_time if ev else None:.5f} (oracle {root_ref:.5f}), ODE {t_ode:.5f} "
        f"(err {err4:.1%}); Fig3 no phi-root={none3}, T_E {TE:.5f} vs ODE {te_ode:.5f} "
        f"(err {err3:.1%}), slow-flow tracking {track:.1e}"
    )


@timed(60)
def criterion_7():
    cfg = presets()["fig6"][0][1]
    rep = compare(cfg.params, cfg.initial, cfg.t_span, cfg.epochs.n, cfg.integrator,
                  cfg.epochs.transit_correction, cfg.n_output)
    scales = [r.arrival_scale for r in rep.rows]
    ok = len(rep.rows) == 4 and scales == ["initial", "intermediate", "intermediate", "slow"]
    last = rep.rows[-1] if rep.rows else None
    ok &= last is not None and last.rel_time_error < 0.10 and 30.0 < last.ode_start_tau1 < 40.0
    sup = max((r.landing_sup_err for r in rep.rows), default=math.inf)
    ok &= sup < 5e-2
    return bool(ok), (
        f"{len(rep.rows)} epochs {scales}; slow recurrence map {last.map_start_tau1:.2f} vs "
        f"ODE {last.ode_start_tau1:.2f} (err {last.rel_time_error:.1%}); max landing err {sup:.1e}"
    )


@timed(120)
def criterion_8():
    p = ModelParams(beta=0.2, alpha=1.0, nu=0.9, gamma1=0.25, gamma2=0.3, delta=0.05, epsilon=0.05)
    cert = global_stability_certificate(p)
    s = basin_sample(p, 200, 8, 1e4 / p.gamma1)
    all_dfe = all(x.label == "DFE" for x in s)
    b = basin_sample(ModelParams(beta=0.1322, **FIG5), 200, 8, 2e4)
    n_dfe = sum(x.label == "DFE" for x in b)
    n_ee = sum(x.label == "Endemic" for x in b)
    ok = cert and all_dfe and n_dfe > 0 and n_ee > 0 and n_ee > n_dfe
    return ok, (
        f"certified regime: {sum(x.label == 'DFE' for x in s)}/200 DFE; "
        f"beta=0.1322: DFE {n_dfe}, Endemic {n_ee}, other {200 - n_dfe - n_ee}"
    )


@timed(120)
def criterion_9():
    times = []
    for _, cfg in presets()["fig8"]:
        rep = compare(cfg.params, cfg.initial, cfg.t_span, 2, cfg.integrator,
                      cfg.epochs.transit_correction, cfg.n_output)
        times.append(rep.rows[1].ode_start_tau1 if len(rep.rows) > 1 else math.nan)
    ok = all(a > b for a, b in zip(times, times[1:])) and times[0] > 200.0
    return ok, f"second epidemic (ODE, tau1) for nu=0,0.1,0.2,0.3: {[round(t, 2) for t in times]}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.acceptance
@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n, acceptance_log):
    ok, detail = CRITERIA[n - 1]()
    acceptance_log(n, ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


if __name__ == "__main__":
    integrate((0.9, 1e-3, 0.0, 0.0, 1e-3), ModelParams(2, 0.8, 1.1, 1, 1, 1e-3, 1e-3), (0.0, 1.0))
    for i, fn in enumerate(CRITERIA, 1):
        ok, detail = fn()
        print(f"criterion {i}: {'PASS' if ok else 'FAIL'}  {detail}")
