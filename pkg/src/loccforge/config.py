"""Run configuration: numeric tolerances and search budgets.

Values are resolved in precedence order: explicit CLI flags, then a JSON config
file (``--config`` or the ``LOCCFORGE_CONFIG`` environment variable), then the
defaults below.
"""
from __future__ import annotations

import dataclasses
import json
import os

from .errors import ConfigError

ENV_CONFIG = "LOCCFORGE_CONFIG"


@dataclasses.dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances used throughout validation and search."""

    herm: float = 1e-10   # max |M - M^dagger| entry allowed
    psd: float = 1e-9     # eigenvalue floor, relative to spectral radius
    lp: float = 1e-8      # residual tolerance on linear systems / LP checks

    def check(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not (0 < v < 1):
                raise ConfigError(f"tolerance {f.name} must be in (0, 1), got {v}")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Budgets and knobs for synthesis and no-go analysis."""

    rounds: int | None = None        # max merge rounds; None = run to a verdict
    delta: float = 1e-7              # strict-positivity floor for LP variables
    max_trees: int = 20000           # cap on live trees across the search
    max_subset: int = 6              # largest class subset merged at once
    max_lps: int = 50000             # cap on LP solves across the search
    partition_exhaustive_n: int = 16 # above this, partition no-go only tries small S1
    mode: str = "first"              # "first" stops at the first protocol; "exhaustive" keeps going
    seed: int | None = None          # reserved for randomized probes; search itself is deterministic
    tol: Tolerances = dataclasses.field(default_factory=Tolerances)

    def check(self) -> None:
        self.tol.check()
        if self.rounds is not None and self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if not (0 < self.delta < 1):
            raise ConfigError("delta must be in (0, 1)")
        for name in ("max_trees", "max_subset", "max_lps", "partition_exhaustive_n"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.mode not in ("first", "exhaustive"):
            raise ConfigError(f"mode must be 'first' or 'exhaustive', got {self.mode!r}")


_TOL_KEYS = {f.name for f in dataclasses.fields(Tolerances)}
_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"tol"}


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus explicit overrides.

    ``path=None`` falls back to the LOCCFORGE_CONFIG environment variable.
    Override keys use the flat names of RunConfig plus Tolerances fields.
    """
    data: dict = {}
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    merged = dict(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    unknown = set(merged) - _RUN_KEYS - _TOL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    tol = Tolerances(**{k: merged[k] for k in _TOL_KEYS if k in merged})
    cfg = RunConfig(tol=tol, **{k: merged[k] for k in _RUN_KEYS if k in merged})
    cfg.check()
    return cfg
