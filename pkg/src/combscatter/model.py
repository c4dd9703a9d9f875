"""Frequency comb, pump tones and model configuration.

All frequencies are angular (rad/s).  A comb holds ``n = 2*half_width + 1``
modes at ``omega_m = center + m*spacing`` for ``m = -half_width .. half_width``.
Pump tones are either low-frequency (``Omega = k*spacing``, ``k >= 1``) or
high-frequency (``Omega = 2*center + k*spacing``, any signed ``k``).

Every pump frequency is therefore an exact integer pair
``(k, v)`` meaning ``k*spacing + v*(2*center)``, which is what
:func:`detect_loop_relations` works with.
"""
from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "PumpKind",
    "FrequencyComb",
    "PumpTone",
    "ModelConfig",
    "LoopRelation",
    "wrap_phase",
    "build_comb",
    "pump_frequency",
    "pump_waveform",
    "pump_coupling",
    "detect_loop_relations",
]


def wrap_phase(phase):
    """Reduce an angle (scalar or array) to the interval (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(phase, dtype=float), 2 * np.pi)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


class PumpKind(str, enum.Enum):
    LOW = "low"
    HIGH = "high"

    @classmethod
    def parse(cls, value) -> "PumpKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {"low": cls.LOW, "lowfrequency": cls.LOW, "l": cls.LOW,
                   "high": cls.HIGH, "highfrequency": cls.HIGH, "h": cls.HIGH}
        try:
            return aliases[text.replace("_", "").replace("-", "")]
        except KeyError:
            raise ConfigurationError(f"unknown pump kind {value!r}") from None


@dataclass(frozen=True)
class FrequencyComb:
    """Symmetric comb of ``2*half_width + 1`` modes around ``center_frequency``."""

    center_frequency: float
    spacing: float
    half_width: int

    def __post_init__(self):
        if not (math.isfinite(self.center_frequency) and self.center_frequency > 0):
            raise ConfigurationError("center frequency must be positive and finite")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ConfigurationError("comb spacing must be positive and finite")
        if int(self.half_width) != self.half_width or self.half_width < 0:
            raise ConfigurationError("half_width must be a non-negative integer")
        object.__setattr__(self, "half_width", int(self.half_width))

    @property
    def n_modes(self) -> int:
        return 2 * self.half_width + 1

    @property
    def indices(self) -> range:
        return range(-self.half_width, self.half_width + 1)

    @property
    def period(self) -> float:
        """Measurement window ``T = 2*pi/spacing``."""
        return 2 * np.pi / self.spacing

    def contains(self, m: int) -> bool:
        return -self.half_width <= m <= self.half_width

    def mode_frequency(self, m):
        return self.center_frequency + np.asarray(m) * self.spacing

    def mode_index(self, frequency: float, atol: float = 1e-9) -> int:
        """Inverse of :meth:`mode_frequency`; raises if off-grid or outside."""
        x = (frequency - self.center_frequency) / self.spacing
        m = int(round(x))
        if abs(x - m) > atol or not self.contains(m):
            raise ConfigurationError(f"frequency {frequency!r} is not a comb mode")
        return m


def build_comb(center: float, spacing: float, half_width: int) -> FrequencyComb:
    return FrequencyComb(float(center), float(spacing), half_width)


@dataclass(frozen=True)
class PumpTone:
    """One coherent pump tone; ``phase`` is stored reduced to (-pi, pi]."""

    kind: PumpKind
    offset: int
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        kind = PumpKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.offset) != self.offset:
            raise ConfigurationError("pump offset must be an integer")
        object.__setattr__(self, "offset", int(self.offset))
        if kind is PumpKind.LOW and self.offset < 1:
            raise ConfigurationError("low-frequency pumps need offset k >= 1")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise ConfigurationError("pump amplitude must be finite and >= 0")
        if not math.isfinite(self.phase):
            raise ConfigurationError("pump phase must be finite")
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "phase", wrap_phase(self.phase))

    @property
    def grid_units(self) -> tuple[int, int]:
        """``(k, v)`` such that the pump frequency is ``k*spacing + v*2*center``."""
        return (self.offset, 0 if self.kind is PumpKind.LOW else 1)

    def label(self) -> str:
        if self.kind is PumpKind.LOW:
            return f"{self.offset}Δ" if self.offset != 1 else "Δ"
        sign = "+" if self.offset >= 0 else "-"
        return f"2ω0{sign}{abs(self.offset)}Δ"


@dataclass(frozen=True)
class ModelConfig:
    """Comb, pumps and port coupling rate ``gamma``.

    ``detuning_offset`` shifts every mode detuning ``delta_m = m*spacing +
    detuning_offset`` (the resonance then sits at ``center - detuning_offset``).
    ``modes`` optionally restricts the basis to a subset of comb indices,
    e.g. the three modes ``(-1, 0, 2)`` of the minimal isolator.
    """

    comb: FrequencyComb
    pumps: tuple[PumpTone, ...] = ()
    coupling_rate: float = 1.0
    detuning_offset: float = 0.0
    modes: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "pumps", tuple(self.pumps))
        if not (math.isfinite(self.coupling_rate) and self.coupling_rate > 0):
            raise ConfigurationError("coupling rate gamma must be positive")
        if not math.isfinite(self.detuning_offset):
            raise ConfigurationError("detuning offset must be finite")
        keys = [(p.kind, p.offset) for p in self.pumps]
        if len(set(keys)) != len(keys):
            raise ConfigurationError("two pumps share the same (kind, offset)")
        if self.modes is not None:
            modes = tuple(sorted(set(int(m) for m in self.modes)))
            if not modes:
                raise ConfigurationError("mode subset must not be empty")
            bad = [m for m in modes if not self.comb.contains(m)]
            if bad:
                raise ConfigurationError(f"modes {bad} lie outside the comb")
            object.__setattr__(self, "modes", modes)

    @property
    def gamma(self) -> float:
        return self.coupling_rate

    @property
    def mode_indices(self) -> tuple[int, ...]:
        return self.modes if self.modes is not None else tuple(self.comb.indices)

    @property
    def complex_center(self) -> complex:
        """``omega0 - i*gamma/2``."""
        return complex(self.comb.center_frequency, -self.coupling_rate / 2)

    def couplings(self) -> list[complex]:
        return [pump_coupling(p, self.comb, self.coupling_rate) for p in self.pumps]

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def with_pump(self, index: int, **changes) -> "ModelConfig":
        pumps = list(self.pumps)
        pumps[index] = dataclasses.replace(pumps[index], **changes)
        return dataclasses.replace(self, pumps=tuple(pumps))

    def pump_off(self) -> "ModelConfig":
        return dataclasses.replace(self, pumps=())


def pump_frequency(tone: PumpTone, comb: FrequencyComb) -> float:
    k, v = tone.grid_units
    return k * comb.spacing + v * 2 * comb.center_frequency


def pump_waveform(pumps: Iterable[PumpTone], comb: FrequencyComb, t):
    """Pump signal ``sum_k p_k cos(Omega_k t + phi_k)``; ``t`` may be an array."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for tone in pumps:
        total = total + tone.amplitude * np.cos(pump_frequency(tone, comb) * t + tone.phase)
    if total.ndim == 0:
        return float(total)
    return total


def pump_coupling(tone: PumpTone, comb: FrequencyComb, gamma: float) -> complex:
    """Dimensionless coupling ``g = omega0 * p * exp(i*phi) / gamma``."""
    if not gamma > 0:
        raise ConfigurationError("coupling rate gamma must be positive")
    magnitude = comb.center_frequency * tone.amplitude / gamma
    return complex(magnitude * np.cos(tone.phase), magnitude * np.sin(tone.phase))


@dataclass(frozen=True)
class LoopRelation:
    """Integer relation ``Omega_target = sum_k n_k Omega_k`` between pumps.

    Indices are zero-based positions in the pump list.
    """

    target: int
    multiplicities: tuple[tuple[int, int], ...] = field(default=())

    def as_dict(self) -> dict[int, int]:
        return dict(self.multiplicities)

    def describe(self) -> str:
        parts = []
        for k, n in self.multiplicities:
            parts.append(f"Ω{k + 1}" if n == 1 else f"{n}Ω{k + 1}")
        return f"Ω{self.target + 1} = " + " + ".join(parts)


def detect_loop_relations(pumps: Sequence[PumpTone], comb: FrequencyComb | None = None,
                          max_multiplicity: int = 2) -> list[LoopRelation]:
    """All relations ``Omega_p = sum_{k != p} n_k Omega_k`` with ``0 <= n_k <= max``.

    Uses the integer grid representation only, never floating comparison.
    ``comb`` is accepted for interface symmetry; the grid units do not
    depend on its numeric values.
    """
    if max_multiplicity < 1:
        raise ConfigurationError("max_multiplicity must be >= 1")
    units = [p.grid_units for p in pumps]
    found = []
    for target, (kt, vt) in enumerate(units):
        others = [i for i in range(len(units)) if i != target]
        for ns in itertools.product(range(max_multiplicity + 1), repeat=len(others)):
            if not any(ns):
                continue
            ksum = sum(n * units[i][0] for n, i in zip(ns, others))
            vsum = sum(n * units[i][1] for n, i in zip(ns, others))
            if ksum == kt and vsum == vt:
                mult = tuple((i, n) for n, i in zip(ns, others) if n)
                found.append(LoopRelation(target, mult))
    return found
