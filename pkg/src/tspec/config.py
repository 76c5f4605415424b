"""Run configuration: schema validation and environment overrides.

The config file is JSON. Unknown keys are rejected at every level so typos
fail fast instead of silently running defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

ENV_PREFIX = "TSPEC_"

_TOP_KEYS = {"potential", "variant", "spectrum", "charfun", "asymptotics",
             "gamma", "validate", "tolerances", "threads", "out"}
_SECTION_KEYS = {
    "spectrum": {"region", "depth", "n"},
    "charfun": {"k", "region", "nx", "ny"},
    "asymptotics": {"theorem", "n", "spectrum"},
    "gamma": {"route", "spectrum", "probe", "k0", "taus"},
    "validate": {"spectrum", "contours", "gamma_tol", "theorem"},
    "tolerances": {"rtol", "rtol_refine", "rtol_winding"},
}
_POTENTIAL_KEYS = {
    "polynomial": {"kind", "coeffs", "h"},
    "grid": {"kind", "samples", "h"},
    "constant": {"kind", "value", "h"},
}


@dataclass
class RunConfig:
    potential: dict
    variant: str
    spectrum: dict = field(default_factory=dict)
    charfun: dict = field(default_factory=dict)
    asymptotics: dict = field(default_factory=dict)
    gamma: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    threads: int = 1
    out: Optional[str] = None

    @property
    def rtol(self) -> float:
        return float(self.tolerances.get("rtol", 1e-12))

    @property
    def rtol_refine(self) -> float:
        return float(self.tolerances.get("rtol_refine", 1e-13))

    @property
    def rtol_winding(self) -> float:
        return float(self.tolerances.get("rtol_winding", 1e-9))


def _check_keys(name: str, mapping: dict, allowed: set):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{name} must be a mapping")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown {name} keys: {sorted(unknown)}")


def validate_config(raw: dict) -> RunConfig:
    """Validate the raw mapping and build a RunConfig. Raises ConfigError."""
    _check_keys("config", raw, _TOP_KEYS)
    if "potential" not in raw:
        raise ConfigError("config requires a 'potential' section")
    if "variant" not in raw:
        raise ConfigError("config requires 'variant' (robin or dirichlet)")
    variant = raw["variant"]
    if variant not in ("robin", "dirichlet"):
        raise ConfigError(f"variant must be 'robin' or 'dirichlet', got {variant!r}")
    pot = raw["potential"]
    if not isinstance(pot, dict) or "kind" not in pot:
        raise ConfigError("potential must be a mapping with a 'kind'")
    allowed = _POTENTIAL_KEYS.get(pot["kind"])
    if allowed is None:
        raise ConfigError(f"unknown potential kind {pot['kind']!r}")
    _check_keys("potential", pot, allowed)
    if variant == "robin" and "h" not in pot:
        raise ConfigError("robin variant requires 'h' in the potential section")
    for section, keys in _SECTION_KEYS.items():
        if section in raw:
            _check_keys(section, raw[section], keys)
    threads = raw.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigError("threads must be a positive integer")
    return RunConfig(
        potential=pot,
        variant=variant,
        spectrum=raw.get("spectrum", {}),
        charfun=raw.get("charfun", {}),
        asymptotics=raw.get("asymptotics", {}),
        gamma=raw.get("gamma", {}),
        validate=raw.get("validate", {}),
        tolerances=raw.get("tolerances", {}),
        threads=threads,
        out=raw.get("out"),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate_config(raw)


def env_overrides(environ=None) -> dict:
    """TSPEC_-prefixed environment overrides for the global CLI flags."""
    environ = os.environ if environ is None else environ
    out = {}
    if ENV_PREFIX + "THREADS" in environ:
        try:
            out["threads"] = int(environ[ENV_PREFIX + "THREADS"])
        except ValueError:
            raise ConfigError("TSPEC_THREADS must be an integer") from None
    if ENV_PREFIX + "TOL" in environ:
        try:
            out["tol"] = float(environ[ENV_PREFIX + "TOL"])
        except ValueError:
            raise ConfigError("TSPEC_TOL must be a float") from None
    if ENV_PREFIX + "OUT" in environ:
        out["out"] = environ[ENV_PREFIX + "OUT"]
    if ENV_PREFIX + "CONFIG" in environ:
        out["config"] = environ[ENV_PREFIX + "CONFIG"]
    return out
