"""Experiment configuration: a flat JSON record of every knob of a run."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import ConfigError
from .mesh import MeshResolution
from .profiles import Nonlinearity, ProfileSpec

_NESTED = ("g", "h", "nonlinearity", "resolution")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    g: ProfileSpec = field(default_factory=lambda: ProfileSpec.constant(1.0))
    h: ProfileSpec = field(default_factory=lambda: ProfileSpec.constant(1.0, role="h"))
    beta: float = 1.0
    nonlinearity: Nonlinearity = field(default_factory=Nonlinearity)
    eps_list: Tuple[float, ...] = (0.2, 0.1, 0.05)
    resolution: MeshResolution = field(default_factory=MeshResolution)
    s: float = 0.75
    # limit problem
    q0: Optional[float] = None  # None: solve the cell problem
    f0_scale: Optional[float] = None  # None: mu_h / mu_g from the profiles
    cell_columns: int = 64
    limit_cells: int = 200
    multistart: int = 9
    # solver tolerances
    newton_tol: float = 1e-10
    max_newton: int = 30
    cg_tol: float = 1e-10
    # experiments
    random_starts: int = 4
    trials: int = 50
    boundary_layer_trials: int = 10
    fiber_stride: int = 4
    concentration_mode: str = "quadrature"
    u0_coeffs: Tuple[float, ...] = (1.0,)  # polynomial in x1, initial/limit profile
    phi_coeffs: Tuple[float, ...] = (1.0,)  # polynomial in x1, test function
    seed: int = 0
    out_dir: str = "out"
    threads: int = 1

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_list)
        object.__setattr__(self, "eps_list", eps)
        object.__setattr__(self, "u0_coeffs", tuple(float(a) for a in self.u0_coeffs))
        object.__setattr__(self, "phi_coeffs", tuple(float(a) for a in self.phi_coeffs))
        if not eps:
            raise ConfigError("eps_list must not be empty")
        if any(not e > 0 for e in eps):
            raise ConfigError("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        for name in ("newton_tol", "cg_tol", "beta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0.5 < self.s < 1.0:
            raise ConfigError("s must lie in (1/2, 1)")
        if self.q0 is not None and not self.q0 > 0:
            raise ConfigError("q0 must be positive")
        if self.concentration_mode not in ("quadrature", "solver"):
            raise ConfigError("concentration_mode must be 'quadrature' or 'solver'")
        for name in ("cell_columns", "limit_cells", "max_newton", "fiber_stride", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.multistart < 3:
            raise ConfigError("multistart must be >= 3")
        if self.trials < 0 or self.boundary_layer_trials < 0 or self.random_starts < 0:
            raise ConfigError("trial counts must be nonnegative")
        if self.g.role != "g" or self.h.role != "h":
            raise ConfigError("profile roles do not match the g / h slots")

    # --- (de)serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in _NESTED:
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        for key in _NESTED:
            if key in kw and not isinstance(kw[key], dict):
                raise ConfigError(f"{key} must be an object")
        try:
            if "g" in kw:
                kw["g"] = ProfileSpec.from_dict(kw["g"], role="g")
            if "h" in kw:
                kw["h"] = ProfileSpec.from_dict(kw["h"], role="h")
            if "nonlinearity" in kw:
                kw["nonlinearity"] = Nonlinearity.from_dict(kw["nonlinearity"])
            if "resolution" in kw:
                kw["resolution"] = MeshResolution(**kw["resolution"])
            for key in ("eps_list", "u0_coeffs", "phi_coeffs"):
                if key in kw:
                    kw[key] = tuple(kw[key])
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cfg.dumps() + "\n")


# --- default scenarios ---------------------------------------------------------

def flat_scenario(**overrides) -> ExperimentConfig:
    """g = 1, h = 2, cubic reaction: limit equilibria -1/sqrt 2, 0, 1/sqrt 2."""
    base = ExperimentConfig(name="flat", g=ProfileSpec.constant(1.0),
                            h=ProfileSpec.constant(2.0, role="h"),
                            nonlinearity=Nonlinearity("cubic", R=2.0))
    return base.replace(**overrides)


def oscillating_scenario(**overrides) -> ExperimentConfig:
    """g = 1 + cos(2 pi y)/4, h = 2 + sin(2 pi y)/2, cubic reaction, same limit equilibria."""
    base = ExperimentConfig(name="oscillating", g=ProfileSpec.cosine(1.0, 0.25),
                            h=ProfileSpec.sine(2.0, 0.5, role="h"),
                            nonlinearity=Nonlinearity("cubic", R=2.0))
    return base.replace(**overrides)


def linear_scenario(**overrides) -> ExperimentConfig:
    """Flat profiles with f = 1: the unique limit solution is mu_h / mu_g."""
    base = ExperimentConfig(name="linear", g=ProfileSpec.constant(1.0),
                            h=ProfileSpec.constant(1.0, role="h"),
                            nonlinearity=Nonlinearity("constant", R=5.0, c=1.0))
    return base.replace(**overrides)


SCENARIOS = {"flat": flat_scenario, "oscillating": oscillating_scenario, "linear": linear_scenario}
