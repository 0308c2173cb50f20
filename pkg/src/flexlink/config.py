"""Scenario files: JSON loading, schema checks and the gain gates.

A scenario has the blocks ``beam``, ``modal_overrides``, ``controller``,
``observer``, ``sim`` and ``output``; every block is optional and falls back
to the bundled defaults.  Errors carry the dotted path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .beam import NOMINAL_BEAM, NOMINAL_OVERRIDES, BeamParams, ModalOverride
from .controller import ControllerGains, ControllerBounds, settling_bound_controller
from .observer import (DEFAULT_INPUT_GAIN, DEFAULT_POLES, ObserverGains, check_time_hierarchy,
                       design_observer_gains, settling_bound_observer)
from .sim import DisturbanceSpec, PDGains, SimConfig, Systems, build_systems

TOP_LEVEL = ("name", "beam", "modal_overrides", "controller", "observer", "sim", "output")


class ConfigError(ValueError):
    """Invalid scenario; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class ObserverDesign:
    """How the observer gains are obtained.

    Either designed (poles, nonlinear gain norms, input-channel gain) or given
    explicitly through ``L``, ``K1``, ``K2``.
    """

    poles: tuple = DEFAULT_POLES
    k1: float = 3e-3
    k2: float = 1e-3
    mu1: float = 0.6
    mu2: float = 1.4
    boundary_layer: float = 1e-3
    input_gain: float | None = DEFAULT_INPUT_GAIN
    L: tuple | None = None
    K1: tuple | None = None
    K2: tuple | None = None

    def gains(self, systems: Systems) -> ObserverGains:
        if self.L is not None:
            return ObserverGains(L=np.array(self.L), K1=np.array(self.K1), K2=np.array(self.K2),
                                 mu1=self.mu1, mu2=self.mu2, boundary_layer=self.boundary_layer)
        return design_observer_gains(systems.canonical, self.poles, self.k1, self.k2, self.mu1,
                                     self.mu2, self.boundary_layer, self.input_gain)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    plot: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    beam: BeamParams
    overrides: tuple
    controller: ControllerGains
    observer: ObserverDesign
    sim: SimConfig
    output: OutputSpec

    def systems(self) -> Systems:
        return build_systems(self.beam, self.overrides, self.sim.truth_modes)

    @property
    def hash(self) -> str:
        """Provenance hash of the fully expanded (effective) scenario."""
        return scenario_hash(scenario_to_dict(self))

    def with_sim(self, **changes) -> "Scenario":
        return replace(self, sim=replace(self.sim, **changes))


@dataclass(frozen=True)
class LoadedScenario:
    """A validated scenario with its systems, observer gains and bounds."""

    scenario: Scenario
    systems: Systems
    observer: ObserverGains
    controller_bounds: ControllerBounds
    T_ftsmo: float

    @property
    def T_ctrl(self) -> float:
        return self.controller_bounds.T_ctrl

    @property
    def T_total(self) -> float:
        return self.T_ftsmo + self.T_ctrl


def scenario_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace)."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def default_scenario_path() -> Path:
    return Path(str(resources.files("flexlink") / "scenarios" / "default.json"))


# --- schema -------------------------------------------------------------------------

def _number(value, path, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(path, "must be finite")
    return v


def _vector(value, path, length=None):
    if not isinstance(value, list):
        raise ConfigError(path, f"expected a list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(value)}")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _matrix(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty list of rows")
    return tuple(_vector(row, f"{path}[{i}]", 2) for i, row in enumerate(value))


def _check_keys(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigError(path, f"expected an object, got {type(block).__name__}")
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


def _build(cls, block, path, kinds):
    """Instantiate dataclass ``cls`` from ``block`` with per-field converters."""
    names = [f.name for f in fields(cls)]
    _check_keys(block, names, path)
    kwargs = {}
    for key, value in block.items():
        conv = kinds.get(key, _number)
        kwargs[key] = conv(value, f"{path}.{key}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _bool(value, path):
    if not isinstance(value, bool):
        raise ConfigError(path, "expected true or false")
    return value


def _string(value, path):
    if not isinstance(value, str):
        raise ConfigError(path, "expected a string")
    return value


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, "expected an integer")
    return value


def _optional_vector(value, path):
    return None if value is None else _vector(value, path)


def parse_scenario(raw: dict) -> Scenario:
    """Validate a scenario dictionary; raises :class:`ConfigError`."""
    _check_keys(raw, TOP_LEVEL, "")
    name = _string(raw.get("name", "scenario"), "name")

    beam = NOMINAL_BEAM
    if "beam" in raw:
        beam = _build(BeamParams, raw["beam"], "beam", {})
    if "modal_overrides" in raw:
        ov = raw["modal_overrides"]
        if not isinstance(ov, list):
            raise ConfigError("modal_overrides", "expected a list")
        overrides = tuple(_build(ModalOverride, o, f"modal_overrides[{i}]", {})
                          for i, o in enumerate(ov))
    else:
        overrides = NOMINAL_OVERRIDES if "beam" not in raw else ()

    vec3 = lambda v, p: _vector(v, p, 3)  # noqa: E731
    controller = _build(ControllerGains, raw.get("controller", {}), "controller",
                        {"alpha": vec3, "kappa1": vec3, "kappa2": vec3})

    obs_block = raw.get("observer", {})
    observer = _build(ObserverDesign, obs_block, "observer", {
        "poles": lambda v, p: _vector(v, p, 4),
        "input_gain": lambda v, p: _number(v, p, allow_none=True),
        "L": _matrix, "K1": _matrix, "K2": _matrix,
    })
    explicit = [k for k in ("L", "K1", "K2") if k in obs_block]
    if explicit and len(explicit) != 3:
        raise ConfigError("observer", "L, K1 and K2 must be given together")

    sim_block = dict(raw.get("sim", {}))
    _check_keys(sim_block, [f.name for f in fields(SimConfig)], "sim")
    dist = _build(DisturbanceSpec, sim_block.pop("disturbance", {}), "sim.disturbance",
                  {"kind": _string, "seed": _int, "n_components": _int})
    pd = _build(PDGains, sim_block.pop("pd", {}), "sim.pd", {})
    sim = _build(SimConfig, sim_block, "sim", {
        "plant_ic": _optional_vector, "observer_ic": _optional_vector,
        "controller": _string, "truth_modes": _int, "theory_mode": _bool,
    })
    sim = SimConfig(**{**{f.name: getattr(sim, f.name) for f in fields(SimConfig)},
                       "disturbance": dist, "pd": pd})

    output = _build(OutputSpec, raw.get("output", {}), "output", {"dir": _string, "plot": _bool})

    if dist.bound >= controller.eta:
        raise ConfigError("controller.eta", f"switching gain eta={controller.eta} must exceed "
                          f"the disturbance bound {dist.bound}")
    if dist.bound > controller.d_bar:
        raise ConfigError("sim.disturbance.amplitude",
                          f"amplitude {dist.bound} exceeds the design bound d_bar={controller.d_bar}")
    return Scenario(name=name, beam=beam, overrides=overrides, controller=controller,
                    observer=observer, sim=sim, output=output)


def prepare(scenario: Scenario) -> LoadedScenario:
    """Build systems and gains and enforce the observer/controller time hierarchy."""
    try:
        systems = scenario.systems()
    except ValueError as exc:
        raise ConfigError("beam", str(exc)) from None
    try:
        obs = scenario.observer.gains(systems)
    except ValueError as exc:
        raise ConfigError("observer", str(exc)) from None
    if obs.L.shape[0] != systems.canonical.dim:
        raise ConfigError("observer.L", f"expected {systems.canonical.dim} rows")
    cb = settling_bound_controller(scenario.controller)
    T_obs = settling_bound_observer(systems.canonical, obs)
    ok, _ = check_time_hierarchy(T_obs, cb.T_ctrl)
    if not ok:
        raise ConfigError("observer", f"observer bound T_FTSMO={T_obs:.6g} s must be strictly "
                          f"below the controller bound T_ctrl={cb.T_ctrl:.6g} s")
    return LoadedScenario(scenario=scenario, systems=systems, observer=obs,
                          controller_bounds=cb, T_ftsmo=T_obs)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from None
    return parse_scenario(raw)


def scenario_to_dict(sc: Scenario) -> dict:
    """Fully expanded form of a scenario (defaults filled in)."""
    sim = asdict(sc.sim)
    obs = {k: v for k, v in asdict(sc.observer).items() if v is not None or k == "input_gain"}
    return {
        "name": sc.name,
        "beam": asdict(sc.beam),
        "modal_overrides": [asdict(o) for o in sc.overrides],
        "controller": asdict(sc.controller),
        "observer": obs,
        "sim": sim,
        "output": asdict(sc.output),
    }

