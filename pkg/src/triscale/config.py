"""Scenario configuration (JSON) and the built-in presets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError, TriscaleError
from .integrator import IntegratorConfig
from .model import ModelParams

KINDS = ("simulate", "equilibria", "bifurcate", "epochs", "compare", "basins")


@dataclass
class EpochSettings:
    n: int = 4
    transit_correction: bool = True


@dataclass
class BifurcationSettings:
    beta_range: tuple = (0.1, 0.3)
    n_points: int = 201
    alpha_range: tuple | None = None
    n_alpha: int = 41


@dataclass
class BasinSettings:
    n: int = 50
    t_max: float = 2e4
    classifier_tol: float = 1e-8


@dataclass
class ScenarioConfig:
    kind: str
    params: ModelParams
    initial: tuple | None = None
    t_span: tuple | None = None
    # "fast" (t) or "tau1" (epsilon * t); applies to t_span and the t column
    time_unit: str = "fast"
    system: str = "full"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    n_output: int = 2001
    output: str = "out"
    seed: int = 0
    epochs: EpochSettings = field(default_factory=EpochSettings)
    bifurcation: BifurcationSettings = field(default_factory=BifurcationSettings)
    basins: BasinSettings = field(default_factory=BasinSettings)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.time_unit not in ("fast", "tau1"):
            raise ConfigError(f"time_unit must be 'fast' or 'tau1', got {self.time_unit!r}")
        if self.system not in ("full", "fast"):
            raise ConfigError(f"system must be 'full' or 'fast', got {self.system!r}")
        if self.initial is not None:
            self.initial = tuple(float(v) for v in self.initial)
            if len(self.initial) not in (3, 5):
                raise ConfigError("initial must be (S, I, T, P, Y) or (S, P, T)")
        if self.t_span is not None:
            span = tuple(float(v) for v in self.t_span)
            if len(span) != 2 or not all(math.isfinite(v) for v in span) or span[1] <= span[0]:
                raise ConfigError(f"t_span must be [t0, t1] with t1 > t0, got {list(self.t_span)}")
            self.t_span = span
        if self.n_output < 2:
            raise ConfigError("n_output must be at least 2")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        self._check_kind()

    def _check_kind(self):
        need_t = self.kind in ("simulate", "compare")
        if need_t and self.t_span is None:
            raise ConfigError(f"{self.kind} needs t_span")
        if self.kind in ("simulate", "compare") and (self.initial is None or len(self.initial) != 5):
            raise ConfigError(f"{self.kind} needs a five-component initial state")
        if self.kind == "epochs" and self.initial is None:
            raise ConfigError("epochs needs an initial point")

    def fast_span(self) -> tuple:
        if self.time_unit == "tau1":
            return tuple(v / self.params.epsilon for v in self.t_span)
        return self.t_span

    def time_scale(self) -> float:
        """Factor converting fast time to the configured output unit."""
        return self.params.epsilon if self.time_unit == "tau1" else 1.0

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (ModelParams, IntegratorConfig, EpochSettings,
                              BifurcationSettings, BasinSettings)):
                v = asdict(v)
            d[f.name] = v
        return _jsonable(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be an object")
    allowed = {f.name for f in fields(cls)}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown field(s) in {name}: {sorted(extra)}")
    vals = dict(raw)
    for k, v in vals.items():
        if v == "inf":
            vals[k] = math.inf
        elif isinstance(v, list):
            vals[k] = tuple(v)
    try:
        return cls(**vals)
    except TriscaleError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    allowed = {f.name for f in fields(ScenarioConfig)}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown field(s): {sorted(extra)}")
    for key in ("kind", "params"):
        if key not in raw:
            raise ConfigError(f"missing required field {key!r}")
    if not isinstance(raw["params"], dict):
        raise ConfigError("params must be an object")
    missing = {f.name for f in fields(ModelParams)} - set(raw["params"])
    if missing:
        raise ConfigError(f"params missing {sorted(missing)}")
    rest = {k: v for k, v in raw.items() if k not in ("params", "integrator", "epochs",
                                                    "bifurcation", "basins")}
    return ScenarioConfig(
        params=_section(ModelParams, raw["params"], "params"),
        integrator=_section(IntegratorConfig, raw.get("integrator"), "integrator"),
        epochs=_section(EpochSettings, raw.get("epochs"), "epochs"),
        bifurcation=_section(BifurcationSettings, raw.get("bifurcation"), "bifurcation"),
        basins=_section(BasinSettings, raw.get("basins"), "basins"),
        **rest,
    )


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return from_dict(raw)


# --- presets -------------------------------------------------------------

def _manifold_params():
    return ModelParams(beta=0.9, alpha=0.5, nu=0.7, gamma1=1 / 6, gamma2=1 / 6,
                       delta=1 / 20, epsilon=1 / 20)


def _backward_params(beta):
    return ModelParams(beta=beta, alpha=5.0, nu=0.9, gamma1=0.25, gamma2=0.25,
                       delta=0.05, epsilon=0.05)


def _fig8(nu):
    return ScenarioConfig(
        kind="compare",
        params=ModelParams(beta=2.0, alpha=0.8, nu=nu, gamma1=1.0, gamma2=1.0,
                           delta=5e-3, epsilon=5e-5),
        initial=(0.999, 1e-5, 0.0, 0.0, 1e-5),
        t_span=(0.0, 400.0),
        time_unit="tau1",
        epochs=EpochSettings(n=3, transit_correction=True),
    )


def presets() -> dict:
    """Name -> list of (subdirectory, config)."""
    return {
        "fig3": [("", ScenarioConfig(
            kind="simulate", params=_manifold_params(), initial=(0.1667, 0.0, 0.0, 0.0, 0.0),
            t_span=(0.0, 100.0), time_unit="tau1",
        ))],
        "fig4": [("", ScenarioConfig(
            kind="simulate", params=_manifold_params(), initial=(0.1667, 0.0, 0.7333, 0.0, 0.0),
            t_span=(0.0, 100.0), time_unit="tau1",
        ))],
        "fig5": [("", ScenarioConfig(
            kind="bifurcate", params=_backward_params(0.2),
            bifurcation=BifurcationSettings(beta_range=(0.1, 0.3), n_points=401,
                                            alpha_range=(1.2, 6.0), n_alpha=49),
        ))],
        # T is trimmed from 1e-3 to 9.8e-4 so the five compartments sum to one
        "fig6": [("", ScenarioConfig(
            kind="compare",
            params=ModelParams(beta=2.0, alpha=0.8, nu=1.1, gamma1=1.0, gamma2=1.0,
                               delta=1e-3, epsilon=4.8e-5),
            initial=(0.999, 1e-5, 9.8e-4, 0.0, 1e-5),
            t_span=(0.0, 40.0), time_unit="tau1",
            epochs=EpochSettings(n=4, transit_correction=True),
        ))],
        "fig7a": [("", ScenarioConfig(kind="basins", params=_backward_params(0.1322)))],
        "fig7b": [("", ScenarioConfig(kind="basins", params=_backward_params(0.15)))],
        "fig8": [(f"nu{nu:g}", _fig8(nu)) for nu in (0.0, 0.1, 0.2, 0.3)],
    }
