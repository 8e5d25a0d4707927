"""Run configuration for the PulseArea command line."""

import contextlib
import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .exceptions import ConfigError
from .model import DEFAULT_M_INV_NS, DEFAULT_OMEGA_Z, DEFAULT_SOLITON_GAP, DEFAULT_THETA_MIN, ModelParams, SolverConfig

CONFIG_FILENAME = "pulsearea.json"
OUTPUT_FORMATS = ("csv", "npz")
METHODS = ("quadrature", "ivp")
ANCHORS = ("pi", "front")


@dataclass
class RunConfig:
    """Configuration for a PulseArea run: physics, solver settings, sweep and output."""

    M_inv_ns: float = DEFAULT_M_INV_NS
    lambdas: list[float] = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5, 1.0])
    mu: float = 1.0
    omega_z: float = DEFAULT_OMEGA_Z
    theta_min: float = DEFAULT_THETA_MIN
    theta_max: float | None = None
    soliton_gap: float = DEFAULT_SOLITON_GAP
    n_grid: int = 2001
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    anchor: str = "pi"
    node_step: float = 0.02
    drift_tol: float = 1e-5
    method: str = "quadrature"
    out_dir: str = "pulsearea-out"
    output_format: str = "csv"
    figure_tau_min: float = -3.0
    figure_tau_max: float = 5.0
    max_workers: int = 1

    def __post_init__(self) -> None:
        """Validate values after initialization."""
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "lambdas":
                if not isinstance(value, list) or not all(_is_number(v) for v in value):
                    raise ConfigError("lambdas must be a list of numbers", key="lambdas")
            elif f.name == "theta_max":
                if value is not None and not _is_number(value):
                    raise ConfigError("theta_max must be a number or null", key="theta_max")
            elif f.name in ("n_grid", "max_workers"):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{f.name} must be an integer", key=f.name)
            elif f.type is float and not _is_number(value):
                raise ConfigError(f"{f.name} must be a number", key=f.name)
            elif f.type is str and not isinstance(value, str):
                raise ConfigError(f"{f.name} must be a string", key=f.name)

        self.lambdas = [float(v) for v in self.lambdas]
        if not self.lambdas:
            raise ConfigError("lambda sweep is empty", key="lambdas")
        if any(not math.isfinite(v) or v < 0 for v in self.lambdas):
            raise ConfigError("lambda values must be finite and non-negative", key="lambdas")
        if any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ConfigError("lambda values must be strictly increasing", key="lambdas")
        if not math.isfinite(self.M_inv_ns) or self.M_inv_ns <= 0:
            raise ConfigError("M_inv_ns must be positive", key="M_inv_ns")
        if self.anchor not in ANCHORS:
            raise ConfigError(f"anchor must be one of {ANCHORS}", key="anchor")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}", key="method")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {OUTPUT_FORMATS}", key="output_format")
        if not self.figure_tau_min < self.figure_tau_max:
            raise ConfigError("figure_tau_min must be below figure_tau_max", key="figure_tau_min")
        if self.max_workers < 1:
            raise ConfigError("max_workers must be at least 1", key="max_workers")
        self.out_dir = os.path.expanduser(self.out_dir)

        try:
            self.solver_config()
            for lam in self.lambdas:
                self.params(lam)
        except ValidationError as e:
            error = e.errors()[0]
            key = str(error["loc"][0]) if error["loc"] else None
            raise ConfigError(f"invalid {key}: {error['msg']}", key=key) from e

    def params(self, lam: float) -> ModelParams:
        """Model parameters for one sweep entry."""
        return ModelParams(M=1.0 / self.M_inv_ns, lam=lam, mu=self.mu, omega_z=self.omega_z)

    def solver_config(self) -> SolverConfig:
        """Solver settings shared by every sweep entry."""
        return SolverConfig(
            theta_min=self.theta_min,
            theta_max=self.theta_max,
            soliton_gap=self.soliton_gap,
            n_grid=self.n_grid,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            anchor=self.anchor,
            node_step=self.node_step,
            drift_tol=self.drift_tol,
        )

    @property
    def out_path(self) -> Path:
        """Output directory as a Path."""
        return Path(self.out_dir)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def load_config(path: str | os.PathLike | None = None) -> RunConfig:
    """Load configuration from a JSON file and environment variables.

    Priority:
    1. Environment variables (PULSEAREA_OUT_DIR, PULSEAREA_MAX_WORKERS)
    2. Config file (path, else pulsearea.json in the current directory if present)
    3. Default values

    The file is a flat JSON object whose keys are RunConfig field names.

    Raises:
        ConfigError: If the file is unreadable, not a flat object, has unknown
            keys, or holds invalid values.
    """
    data: dict[str, Any] = {}
    config_file = Path(path) if path is not None else Path(CONFIG_FILENAME)
    if path is not None or config_file.exists():
        try:
            with open(config_file) as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file {config_file}: {e}", key="config") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {config_file} is not valid JSON: {e}", key="config") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {config_file} must hold a JSON object", key="config")

    known = {f.name for f in fields(RunConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown config key '{key}'", key=key)

    env_out_dir = os.environ.get("PULSEAREA_OUT_DIR")
    if env_out_dir:
        data["out_dir"] = env_out_dir

    env_workers = os.environ.get("PULSEAREA_MAX_WORKERS")
    if env_workers:
        with contextlib.suppress(ValueError):
            data["max_workers"] = int(env_workers)

    return RunConfig(**data)
