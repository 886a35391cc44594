"""Adaptive integration of the full and fast-limit systems, with events.

The actual stepping happens in :mod:`triscale._kernel`.  Between
epidemics I and Y fall to values like exp(-6000); when the initial state
has I + Y > 0 the default ``coordinates="auto"`` therefore integrates
log(I + Y) and the share I / (I + Y) instead of I and Y themselves.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import _kernel
from .errors import InvalidInputError, NumericalError, StiffnessError, TriscaleError
from .model import ModelParams, State5, as_state5

THREADS_ENV = "TRISCALE_THREADS"


class EventKind(str, Enum):
    EPIDEMIC_START = "epidemic_start"
    EPIDEMIC_END = "epidemic_end"
    PEAK_I = "peak_I"
    PEAK_Y = "peak_Y"


_KINDS = {
    _kernel.EV_UP: EventKind.EPIDEMIC_START,
    _kernel.EV_DOWN: EventKind.EPIDEMIC_END,
    _kernel.EV_PEAK_I: EventKind.PEAK_I,
    _kernel.EV_PEAK_Y: EventKind.PEAK_Y,
}


@dataclass(frozen=True)
class Event:
    kind: EventKind
    t: float
    state: State5
    threshold: float | None = None


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and event settings.

    ``thresholds`` are the levels of I + alpha*Y whose up/down crossings are
    reported as epidemic start/end.  Peaks of I and Y are only recorded
    while I + alpha*Y is above the smallest threshold.  ``dense_output``
    keeps every accepted step when no output grid is given; otherwise only
    the two endpoints are kept.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    thresholds: tuple = (1e-6,)
    dense_output: bool = True
    coordinates: str = "auto"
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidInputError("tolerances must be positive")
        if not self.max_step > 0:
            raise InvalidInputError("max_step must be positive")
        thr = tuple(float(x) for x in self.thresholds)
        if any(not (x > 0 and math.isfinite(x)) for x in thr):
            raise InvalidInputError(f"event thresholds must be positive, got {thr}")
        object.__setattr__(self, "thresholds", thr)
        if self.coordinates not in ("auto", "direct", "log"):
            raise InvalidInputError(f"unknown coordinates {self.coordinates!r}")
        if self.max_steps < 1:
            raise InvalidInputError("max_steps must be at least 1")

    def with_(self, **changes) -> "IntegratorConfig":
        d = asdict(self)
        d.update(changes)
        return IntegratorConfig(**d)


@dataclass
class Trajectory:
    """Times in fast units, states as rows of (S, I, T, P, Y)."""

    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)
    # log(I + Y) per row; finite even when I and Y underflow to zero
    log_infected: np.ndarray | None = None
    steps: int = 0

    @property
    def final(self) -> State5:
        return State5(*(float(v) for v in self.states[-1]))

    def events_of(self, kind: EventKind, threshold: float | None = None) -> list:
        return [
            e for e in self.events
            if e.kind == kind and (threshold is None or e.threshold == threshold)
        ]

    def R(self) -> np.ndarray:
        return 1.0 - self.states.sum(axis=1)


def _to_native(x: np.ndarray, mode: int) -> np.ndarray:
    if mode == _kernel.DIRECT:
        return x.copy()
    S, I, T, P, Y = x
    tot = I + Y
    return np.array([S, T, P, math.log(tot), I / tot])


def _from_native(ys: np.ndarray, mode: int):
    if mode == _kernel.DIRECT:
        with np.errstate(divide="ignore", invalid="ignore"):
            return ys.copy(), np.log(ys[:, 1] + ys[:, 4])
    S, T, P, z, q = ys.T
    q = np.clip(q, 0.0, 1.0)
    E = np.exp(z)
    return np.column_stack([S, q * E, T, P, (1.0 - q) * E]), z.copy()


def _pick_mode(x: np.ndarray, coordinates: str) -> int:
    if coordinates == "direct":
        return _kernel.DIRECT
    if x[1] + x[4] <= 0.0:
        if coordinates == "log":
            raise InvalidInputError("log coordinates need I + Y > 0 initially")
        return _kernel.DIRECT
    return _kernel.LOGINF


def integrate(
    initial,
    params: ModelParams,
    t_span,
    config: IntegratorConfig | None = None,
    t_eval=None,
    system: str = "full",
) -> Trajectory:
    """Integrate from ``initial`` (S, I, T, P, Y) over ``t_span`` in fast time.

    ``system="fast"`` drops the delta and epsilon terms (fast-limit flow).
    """
    config = config or IntegratorConfig()
    x0 = as_state5(initial)
    if x0.sum() > 1.0 + 1e-9:
        raise InvalidInputError(f"initial state {x0} sums above 1")
    t0, t1 = (float(v) for v in t_span)
    if not (math.isfinite(t0) and math.isfinite(t1)) or t1 <= t0:
        raise InvalidInputError(f"t_span must be increasing and finite, got {t_span}")
    p = params.as_array()
    if system == "fast":
        p[5] = p[6] = 0.0
    elif system != "full":
        raise InvalidInputError(f"unknown system {system!r}")
    if t_eval is None:
        grid = np.empty(0)
    else:
        grid = np.asarray(t_eval, dtype=float)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or grid[0] < t0 or grid[-1] > t1:
            raise InvalidInputError("t_eval must be increasing and inside t_span")

    mode = _pick_mode(x0, config.coordinates)
    log_thr = np.log(np.asarray(config.thresholds, dtype=float))
    status, t_stop, ts, ys, ev_t, ev_kind, ev_idx, ev_y, steps = _kernel.integrate_kernel(
        mode, _to_native(x0, mode), t0, t1, p, config.rel_tol, config.abs_tol,
        config.max_step, log_thr, grid, config.dense_output, config.max_steps,
    )
    if status == _kernel.STEP_UNDERFLOW:
        raise StiffnessError(f"step size underflow at t = {t_stop:.17g}", t_stop, steps=int(steps))
    if status == _kernel.NONFINITE:
        raise StiffnessError(f"non-finite state near t = {t_stop:.17g}", t_stop, steps=int(steps))
    if status == _kernel.TOO_MANY_STEPS:
        raise NumericalError(
            f"step budget of {config.max_steps} exhausted at t = {t_stop:.17g}", t_fail=t_stop
        )

    states, logs = _from_native(ys, mode)
    events = []
    if len(ev_t):
        ev_states, _ = _from_native(ev_y, mode)
        order = np.lexsort((ev_kind, ev_t))
        for i in order:
            thr = config.thresholds[ev_idx[i]] if ev_idx[i] >= 0 else None
            events.append(
                Event(_KINDS[int(ev_kind[i])], float(ev_t[i]),
                      State5(*(float(v) for v in ev_states[i])), thr)
            )
    return Trajectory(ts, states, events, logs, int(steps))


def epidemic_starts(traj: Trajectory, threshold: float) -> list:
    return traj.events_of(EventKind.EPIDEMIC_START, threshold)


# --- basin sampling -----------------------------------------------------


@dataclass(frozen=True)
class BasinSample:
    index: int
    initial: State5
    label: str
    final: State5 | None = None
    error: str | None = None


def random_simplex_points(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of the 5-simplex (six compartments, R dropped)."""
    e = rng.exponential(size=(n, 6))
    return (e / e.sum(axis=1, keepdims=True))[:, :5]


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidInputError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return min(8, os.cpu_count() or 1)


def classify_final(final: np.ndarray, endemic_states, classifier_tol: float, ee_tol: float = 1e-4):
    S, I, T, P, Y = final
    if I + Y < classifier_tol:
        return "DFE"
    for ee in endemic_states:
        if np.max(np.abs(final - np.asarray(ee[:5]))) < ee_tol:
            return "Endemic"
    return "Undecided"


def basin_sample(
    params: ModelParams,
    n: int,
    seed: int,
    t_max: float,
    classifier_tol: float = 1e-8,
    config: IntegratorConfig | None = None,
    threads: int | None = None,
) -> list[BasinSample]:
    """Integrate ``n`` uniform random initials and label where they end up."""
    from .equilibria import endemic_equilibria

    if n < 0:
        raise InvalidInputError("n must be non-negative")
    if n == 0:
        return []
    config = (config or IntegratorConfig()).with_(dense_output=False)
    rng = np.random.default_rng(seed)
    starts = random_simplex_points(n, rng)
    ees = [rec.state for rec in endemic_equilibria(params)]

    def one(i):
        x = starts[i]
        try:
            traj = integrate(x, params, (0.0, t_max), config)
        except TriscaleError as exc:
            return BasinSample(i, State5(*x), "Error", None, str(exc))
        fin = traj.states[-1]
        return BasinSample(i, State5(*x), classify_final(fin, ees, classifier_tol),
                           State5(*(float(v) for v in fin)))

    workers = threads or _thread_count()
    if workers == 1:
        return [one(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(n)))
