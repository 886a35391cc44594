"""Line up the epoch map against a direct integration of the full system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .integrator import EventKind, IntegratorConfig, Trajectory, integrate
from .maps import EpochLog, iterate_epochs
from .model import ModelParams, Region, classify_region

BREAKDOWN_REL_ERROR = 0.5


@dataclass(frozen=True)
class ComparisonRow:
    epoch: int
    # how the orbit reached this epidemic: "initial", "intermediate" or "slow"
    arrival_scale: str
    map_start_tau1: float
    ode_start_tau1: float
    rel_time_error: float
    map_landing: tuple
    ode_landing: tuple
    landing_sup_err: float


@dataclass
class ComparisonReport:
    rows: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    trajectory: Trajectory | None = None
    breakdown: bool = False
    breakdown_reason: str = ""

    def start_times(self, source: str = "ode") -> list:
        attr = "ode_start_tau1" if source == "ode" else "map_start_tau1"
        return [getattr(r, attr) for r in self.rows]


def ode_epidemics(traj: Trajectory, params: ModelParams, threshold: float):
    """(start, landing) pairs; start in fast time, landing as (S, P, T) or None.

    An orbit that starts at or above the threshold counts as an epidemic at
    t0.  The landing is the state at the first downward crossing after each
    start.
    """
    x0 = traj.states[0]
    out = []
    starts = []
    if x0[1] + params.alpha * x0[4] >= threshold:
        starts.append(float(traj.times[0]))
    starts += [e.t for e in traj.events_of(EventKind.EPIDEMIC_START, threshold)]
    ends = traj.events_of(EventKind.EPIDEMIC_END, threshold)
    for t0 in starts:
        land = next((e for e in ends if e.t > t0), None)
        out.append((t0, None if land is None else (land.state.S, land.state.P, land.state.T)))
    return out


def compare(
    params: ModelParams,
    initial,
    t_span_tau1,
    n_epochs: int,
    config: IntegratorConfig | None = None,
    transit_correction: bool = True,
    n_output: int = 2001,
) -> ComparisonReport:
    """Run the ODE and the epoch map from the same state and align their epidemics.

    ``initial`` is (S, I, T, P, Y); the map starts from its (S, P, T) part.
    """
    params.require_equal_gamma()
    if params.r0 <= 1.0:
        raise DomainError("comparison needs R0 > 1")
    config = config or IntegratorConfig()
    S, I, T, P, Y = (float(v) for v in initial)
    if classify_region(S, P, params).region is Region.MINUS:
        raise DomainError(f"initial (S, P) = ({S}, {P}) is on the stable side; no first epidemic")
    threshold = config.thresholds[0]

    eps = params.epsilon
    t0, t1 = (v / eps for v in t_span_tau1)
    grid = np.linspace(t0, t1, n_output)
    traj = integrate((S, I, T, P, Y), params, (t0, t1), config, t_eval=grid)
    ode = ode_epidemics(traj, params, threshold)
    logs: list[EpochLog] = iterate_epochs((S, P, T), n_epochs, params, transit_correction)

    report = ComparisonReport(epochs=logs, trajectory=traj)
    for k, log in enumerate(logs):
        if k >= len(ode):
            report.breakdown = True
            report.breakdown_reason = f"ODE shows only {len(ode)} epidemics"
            break
        t_ode = ode[k][0] * eps
        t_map = log.start_time + t_span_tau1[0]
        if t_ode == 0.0:
            rel = abs(t_map - t_ode)
        else:
            rel = abs(t_map - t_ode) / abs(t_ode)
        map_land = log.landing.as_tuple()
        ode_land = ode[k][1]
        if ode_land is None:
            sup = math.nan
        else:
            sup = max(abs(a - b) for a, b in zip(map_land, ode_land))
        arrival = "initial" if k == 0 else logs[k - 1].exit.scale.value
        report.rows.append(
            ComparisonRow(k, arrival, t_map, t_ode, rel, map_land, ode_land, sup)
        )
        if rel > BREAKDOWN_REL_ERROR or ode_land is None:
            report.breakdown = True
            report.breakdown_reason = (
                f"epoch {k}: " + ("ODE epidemic never ends" if ode_land is None
                                  else f"timing error {rel:.2f}")
            )
            break
        if log.fixed_point:
            report.breakdown = True
            report.breakdown_reason = f"epoch {k}: map reached a fixed point"
            break
    return report
