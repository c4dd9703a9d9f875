"""Model configuration files.

Configs are TOML documents (``.cfg`` by convention)::

    gamma_hz = 50.0             # port coupling rate, Hz (converted to rad/s)
    detuning_offset_hz = 0.0    # optional, shifts every mode detuning
    modes = [-1, 0, 2]          # optional basis subset (comb indices)

    [comb]
    center_hz = 10000.0
    spacing_hz = 1.0
    half_width = 2

    [[pumps]]
    kind = "high"               # "low" (k*spacing) or "high" (2*center + k*spacing)
    offset = -1
    amplitude = 5e-5
    phase_rad = 0.0

    [scheme]                    # optional, used by the ``conditions`` command
    kind = "isolator"           # or "circulator"
    a = 0
    b = 2
    d = -1

Every ``*_hz`` value is multiplied by 2*pi.  Because scattering depends only
on ratios, desk-scale configs simply use small numbers (spacing 1, gamma 50,
center 1e4).
"""
from __future__ import annotations

import math
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import tomli_w

from .errors import ConfigurationError
from .model import FrequencyComb, ModelConfig, PumpTone

__all__ = ["load_config", "load_config_dict", "parse_config", "apply_overrides",
           "config_to_dict", "dump_config", "bundled_config"]

TWO_PI = 2 * math.pi
_CONFIG_DIR = Path(__file__).with_name("configs")


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``isolator.cfg`` ...)."""
    path = _CONFIG_DIR / name
    if not path.suffix:
        path = path.with_suffix(".cfg")
    if not path.exists():
        raise FileNotFoundError(path)
    return path


def load_config_dict(path) -> dict:
    path = Path(path)
    with path.open("rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from exc


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key=value`` strings; dotted keys, list items by integer index.

    ``pumps.0.phase_rad=1.2`` edits the first pump.
    """
    for item in overrides or ():
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = raw
        for part in parts[:-1]:
            if isinstance(node, list):
                try:
                    node = node[int(part)]
                except (ValueError, IndexError):
                    raise ConfigurationError(f"bad override path {key!r}") from None
            else:
                node = node.setdefault(part, {})
        last = parts[-1]
        if isinstance(node, list):
            try:
                node[int(last)] = _parse_value(value.strip())
            except (ValueError, IndexError):
                raise ConfigurationError(f"bad override path {key!r}") from None
        else:
            node[last] = _parse_value(value.strip())
    return raw


def parse_config(raw: dict) -> ModelConfig:
    try:
        comb_raw = raw["comb"]
        comb = FrequencyComb(TWO_PI * float(comb_raw["center_hz"]),
                             TWO_PI * float(comb_raw["spacing_hz"]),
                             int(comb_raw["half_width"]))
        pumps = []
        for p in raw.get("pumps", []):
            pumps.append(PumpTone(p["kind"], int(p["offset"]), float(p["amplitude"]),
                                  float(p.get("phase_rad", 0.0))))
        modes = raw.get("modes")
        return ModelConfig(comb, tuple(pumps), TWO_PI * float(raw["gamma_hz"]),
                           TWO_PI * float(raw.get("detuning_offset_hz", 0.0)),
                           tuple(modes) if modes is not None else None)
    except KeyError as exc:
        raise ConfigurationError(f"missing config key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid config value: {exc}") from None


def load_config(path, overrides=()) -> ModelConfig:
    """Read, override and validate a config file."""
    return parse_config(apply_overrides(load_config_dict(path), overrides))


def config_to_dict(config: ModelConfig) -> dict:
    out = {
        "gamma_hz": config.coupling_rate / TWO_PI,
        "detuning_offset_hz": config.detuning_offset / TWO_PI,
        "comb": {
            "center_hz": config.comb.center_frequency / TWO_PI,
            "spacing_hz": config.comb.spacing / TWO_PI,
            "half_width": config.comb.half_width,
        },
        "pumps": [
            {"kind": p.kind.value, "offset": p.offset, "amplitude": p.amplitude,
             "phase_rad": p.phase}
            for p in config.pumps
        ],
    }
    if config.modes is not None:
        out["modes"] = list(config.modes)
    return out


def dump_config(data: dict) -> str:
    """Serialize a config-shaped dict to TOML text."""
    return tomli_w.dumps(data)
