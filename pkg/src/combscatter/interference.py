"""Closed-form interference conditions for the isolator and circulator schemes.

Isolator (modes ``d = a - s``, ``a``, ``b = a + 2s``; pumps ``2w0 + (a+d)Δ``,
``2w0 + (d+b)Δ`` and the low tone ``(b-a)Δ``): the direct path ``b -> a``
through the low pump interferes with the two-step path through the
anti-mode ``d*``.  It vanishes when ``g^2 = r*g*kappa_d`` and the loop phase
``phi1 - phi2 + phi3`` equals ``-alpha_d``.

Circulator (five modes ``a, d, b, e, c`` spaced by ``s``; a direct low pump at
``2s`` and a two-hop low pump at ``s``): to second order the ``b -> a`` path
vanishes when ``g*kappa_d = r^2 g^2`` and twice the two-hop phase minus the
direct phase equals ``-alpha_d``.  The
third-order balance of the ``a -> c`` element gives a second, independent
condition.

Here ``Delta_m = kappa_m * exp(i*alpha_m)`` is the normalized diagonal element
and ``r`` is the coupling ratio of the secondary pump to the primary one,
which equals their amplitude ratio because every pump shares ``omega0/gamma``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .cmt_matrix import mode_detuning
from .errors import ConfigurationError
from .model import (FrequencyComb, LoopRelation, ModelConfig, PumpKind, PumpTone,
                    detect_loop_relations, wrap_phase)

__all__ = [
    "ISOLATOR",
    "CIRCULATOR",
    "CIRCULATOR_THIRD_ORDER",
    "EXPERIMENTAL_OPTIMA",
    "InterferenceCondition",
    "Scheme",
    "loop_phase",
    "isolator_conditions",
    "isolator_conditions_from_detuning",
    "circulator_conditions",
    "circulator_conditions_from_detuning",
    "circulator_thirdorder",
    "circulator_thirdorder_from_detuning",
    "predicted_transmission",
    "scheme_from_dict",
    "scheme_pumps",
    "apply_conditions",
    "solve_scheme",
    "primary_coupling",
    "scheme_loop_relation",
]

ISOLATOR = "isolator"
CIRCULATOR = "circulator"
CIRCULATOR_THIRD_ORDER = "circulator_third_order"

# Device-fitted optima reported for the measured sample.  The linear model
# does not reproduce them; they are kept for side-by-side reporting only.
EXPERIMENTAL_OPTIMA = {
    ISOLATOR: {"phi3": 0.65 * math.pi, "p_rel": 12.7},
    CIRCULATOR: {"phi2": 0.58 * math.pi, "p_rel": 0.77},
}

CONSISTENCY_TOL = 0.1


@dataclass(frozen=True)
class InterferenceCondition:
    """Solved magnitude and phase condition of one scheme.

    ``loop_phase_target`` nulls the forward-suppressed element (``S_ab`` for
    both schemes at second order, ``S_ca`` at third order);
    ``reverse_target`` nulls its transpose instead.
    """

    scheme: str
    g: float
    rho: float
    loop_phase_target: float
    reverse_target: float
    amplitude_ratio: float
    alpha_d: float
    kappa_d: float
    extra: Mapping[str, float] = field(default_factory=dict)
    consistent: bool | None = None

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigurationError("interference condition needs rho > 0")
        object.__setattr__(self, "loop_phase_target", wrap_phase(self.loop_phase_target))
        object.__setattr__(self, "reverse_target", wrap_phase(self.reverse_target))
        object.__setattr__(self, "extra", dict(self.extra))

    @property
    def r(self) -> float:
        return self.amplitude_ratio

    @property
    def pump_ratio(self) -> float:
        """Amplitude ratio ``p_secondary / p_primary``; equal to ``r``."""
        return self.amplitude_ratio

    def target(self, reverse: bool = False) -> float:
        return self.reverse_target if reverse else self.loop_phase_target

    def as_dict(self) -> dict:
        out = {
            "scheme": self.scheme,
            "g": self.g,
            "r": self.amplitude_ratio,
            "p_ratio": self.pump_ratio,
            "rho": self.rho,
            "phi_loop_target": self.loop_phase_target,
            "phi_loop_reverse": self.reverse_target,
            "alpha_d": self.alpha_d,
            "kappa_d": self.kappa_d,
        }
        out.update(self.extra)
        if self.consistent is not None:
            out["consistent_with_second_order"] = self.consistent
        return out


def loop_phase(pumps: Sequence[PumpTone], relation: LoopRelation) -> float:
    """``sum_k n_k phi_k - phi_target`` reduced to (-pi, pi]."""
    n = len(pumps)
    indices = [relation.target] + [k for k, _ in relation.multiplicities]
    if any(not 0 <= k < n for k in indices):
        raise ConfigurationError("loop relation refers to a pump that does not exist")
    units = [p.grid_units for p in pumps]
    ks = sum(m * units[k][0] for k, m in relation.multiplicities)
    vs = sum(m * units[k][1] for k, m in relation.multiplicities)
    if (ks, vs) != units[relation.target]:
        raise ConfigurationError(f"relation {relation.describe()} does not hold for these pumps")
    total = sum(m * pumps[k].phase for k, m in relation.multiplicities) - pumps[relation.target].phase
    return wrap_phase(total)


def _polar(z: complex, what: str) -> tuple[float, float]:
    kappa = abs(z)
    if kappa == 0:
        raise ConfigurationError(f"degenerate {what}: magnitude is zero")
    return kappa, cmath.phase(z)


def _check_g(g: float) -> float:
    g = float(g)
    if not (math.isfinite(g) and g > 0):
        raise ConfigurationError("coupling magnitude g must be positive")
    return g


def isolator_conditions_from_detuning(g: float, delta_d: complex) -> InterferenceCondition:
    g = _check_g(g)
    kappa, alpha = _polar(complex(delta_d), "kappa_d")
    return InterferenceCondition(ISOLATOR, g, g * g, -alpha, alpha, g / kappa, alpha, kappa)


def _detuning(comb, gamma, m, detuning_offset):
    return mode_detuning(comb, gamma, m, detuning_offset).value


def isolator_conditions(comb: FrequencyComb, gamma: float, g: float, modes: Mapping[str, int],
                        step: int = 1, detuning_offset: float = 0.0) -> InterferenceCondition:
    """Forward-null conditions ``r = g/kappa_d``, ``phi_loop = -alpha_d``, ``rho = g^2``."""
    try:
        a, b, d = (int(modes[k]) for k in ("a", "b", "d"))
    except KeyError as exc:
        raise ConfigurationError(f"isolator scheme is missing mode {exc.args[0]!r}") from None
    if b - a != 2 * step or a - d != step:
        raise ConfigurationError(f"isolator modes need b = a + {2 * step} and d = a - {step}")
    return isolator_conditions_from_detuning(g, _detuning(comb, gamma, d, detuning_offset))


def circulator_conditions_from_detuning(g: float, delta_d: complex) -> InterferenceCondition:
    g = _check_g(g)
    kappa, alpha = _polar(complex(delta_d), "kappa_d")
    return InterferenceCondition(CIRCULATOR, g, g * kappa, -alpha, alpha, math.sqrt(kappa / g),
                                 alpha, kappa)


def _circulator_modes(modes, step):
    names = ("a", "d", "b", "e", "c")
    try:
        values = [int(modes[k]) for k in names]
    except KeyError as exc:
        raise ConfigurationError(f"circulator scheme is missing mode {exc.args[0]!r}") from None
    if any(values[i + 1] - values[i] != step for i in range(4)):
        raise ConfigurationError(f"circulator modes must be a, d, b, e, c spaced by {step}")
    return dict(zip(names, values))


def circulator_conditions(comb: FrequencyComb, gamma: float, g: float, modes: Mapping[str, int],
                          step: int = 1, detuning_offset: float = 0.0) -> InterferenceCondition:
    """Second-order conditions ``r = sqrt(kappa_d/g)``, ``2*phi_hop - phi_direct = -alpha_d``."""
    m = _circulator_modes(modes, step)
    return circulator_conditions_from_detuning(g, _detuning(comb, gamma, m["d"], detuning_offset))


def circulator_thirdorder_from_detuning(g: float, delta_d: complex, delta_b: complex,
                                        delta_e: complex) -> InterferenceCondition:
    g = _check_g(g)
    kappa_d, alpha_d = _polar(complex(delta_d), "kappa_d")
    kappa_de, alpha_de = _polar(complex(delta_d) * complex(delta_e), "kappa_de")
    kappa_t, alpha_t = _polar(complex(delta_d) + complex(delta_b) + complex(delta_e), "kappa_T")
    r = math.sqrt(kappa_de / (g * kappa_t))
    r2 = math.sqrt(kappa_d / g)
    target = -(alpha_t - alpha_de)
    consistent = abs(wrap_phase(target + alpha_d)) < CONSISTENCY_TOL
    extra = {"kappa_de": kappa_de, "alpha_de": alpha_de, "kappa_T": kappa_t, "alpha_T": alpha_t,
             "r_second_order": r2, "r_mismatch": r / r2 - 1.0,
             "phase_mismatch": wrap_phase(target + alpha_d)}
    return InterferenceCondition(CIRCULATOR_THIRD_ORDER, g, g * g * kappa_de, target, -target, r,
                                 alpha_d, kappa_d, extra, consistent)


def circulator_thirdorder(comb: FrequencyComb, gamma: float, g: float, modes: Mapping[str, int],
                          step: int = 1, detuning_offset: float = 0.0) -> InterferenceCondition:
    """Third-order ``a <-> c`` balance ``g^2 kappa_de = r^2 g^3 kappa_T``.

    The result carries ``consistent``: whether its loop-phase target agrees
    with the second-order one, which full circulation would require.
    """
    m = _circulator_modes(modes, step)
    dd, db, de = (_detuning(comb, gamma, m[k], detuning_offset) for k in ("d", "b", "e"))
    return circulator_thirdorder_from_detuning(g, dd, db, de)


def predicted_transmission(cond: InterferenceCondition) -> complex:
    """Reverse-path amplitude left over when the forward path is nulled.

    Isolator ``rho (1 - exp(-2i alpha_d))``; circulator ``2i rho sin(alpha_d)``
    (up to the spectator factor ``Delta_e Delta_c``).  For the third-order
    balance the analogous value is ``rho' (exp(i(2 alpha_T - alpha_de)) -
    exp(i alpha_de))``.  All are written in the gauge where the primary pump
    phases are zero.
    """
    if cond.scheme == ISOLATOR:
        return cond.rho * (1 - cmath.exp(-2j * cond.alpha_d))
    if cond.scheme == CIRCULATOR:
        return 2j * cond.rho * math.sin(cond.alpha_d)
    at, ade = cond.extra["alpha_T"], cond.extra["alpha_de"]
    return cond.rho * (cmath.exp(1j * (2 * at - ade)) - cmath.exp(1j * ade))


# ----------------------------------------------------------------- schemes

@dataclass(frozen=True)
class Scheme:
    """Named mode roles of an isolator or circulator layout."""

    kind: str
    modes: Mapping[str, int]
    step: int = 1

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in (ISOLATOR, CIRCULATOR):
            raise ConfigurationError(f"unknown scheme kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "modes", {k: int(v) for k, v in self.modes.items()})
        if int(self.step) != self.step or self.step < 1:
            raise ConfigurationError("scheme step must be a positive integer")
        if kind == ISOLATOR:
            a, b, d = (self.modes.get(k) for k in ("a", "b", "d"))
            if None in (a, b, d) or b - a != 2 * self.step or a - d != self.step:
                raise ConfigurationError(
                    f"isolator scheme needs a, b = a + {2 * self.step}, d = a - {self.step}")
        else:
            _circulator_modes(self.modes, self.step)

    def names(self) -> dict[int, str]:
        """``{comb index: role letter}`` for display."""
        return {m: name for name, m in self.modes.items()}

    def forward(self) -> list[tuple[int, int]]:
        """``(out, in)`` pairs the scheme transmits."""
        m = self.modes
        if self.kind == ISOLATOR:
            return [(m["b"], m["a"])]
        return [(m["b"], m["a"]), (m["c"], m["b"]), (m["a"], m["c"])]

    def reverse(self) -> list[tuple[int, int]]:
        return [(i, o) for o, i in self.forward()]

    def subspace(self) -> list[str]:
        """Closed amplitude set of the minimal model."""
        m = self.modes
        if self.kind == ISOLATOR:
            return [f"{m['d']}*", str(m["a"]), str(m["b"])]
        return [str(m[k]) for k in ("a", "d", "b", "e", "c")]


def scheme_from_dict(data: Mapping) -> Scheme:
    data = dict(data)
    try:
        kind = data.pop("kind")
    except KeyError:
        raise ConfigurationError("scheme needs a 'kind'") from None
    step = int(data.pop("step", 1))
    return Scheme(kind, {k: int(v) for k, v in data.items()}, step)


def scheme_pumps(scheme: Scheme, comb: FrequencyComb, gamma: float, g: float,
                 cond: InterferenceCondition | None = None, reverse: bool = False) -> tuple[PumpTone, ...]:
    """Pump tones of a scheme at the solved conditions.

    The primary pumps get coupling ``g`` and zero phase; the secondary pump
    carries ``r*g`` and the whole loop-phase target.
    """
    if cond is None:
        cond = solve_scheme(scheme, comb, gamma, g)
    p = g * gamma / comb.center_frequency
    m = scheme.modes
    phase = cond.target(reverse)
    if scheme.kind == ISOLATOR:
        return (PumpTone(PumpKind.HIGH, m["a"] + m["d"], p, 0.0),
                PumpTone(PumpKind.HIGH, m["d"] + m["b"], p, 0.0),
                PumpTone(PumpKind.LOW, m["b"] - m["a"], cond.r * p, phase))
    # listed as Omega_1 = s*spacing (two-hop coupler), Omega_2 = 2*s*spacing (direct)
    s = scheme.step
    return (PumpTone(PumpKind.LOW, s, cond.r * p, phase / 2),
            PumpTone(PumpKind.LOW, 2 * s, p, 0.0))


def solve_scheme(scheme: Scheme, comb: FrequencyComb, gamma: float, g: float,
                 detuning_offset: float = 0.0, order: int = 2) -> InterferenceCondition:
    if scheme.kind == ISOLATOR:
        return isolator_conditions(comb, gamma, g, scheme.modes, scheme.step, detuning_offset)
    if order == 3:
        return circulator_thirdorder(comb, gamma, g, scheme.modes, scheme.step, detuning_offset)
    return circulator_conditions(comb, gamma, g, scheme.modes, scheme.step, detuning_offset)


def apply_conditions(config: ModelConfig, scheme: Scheme, g: float, reverse: bool = False,
                     order: int = 2) -> ModelConfig:
    """Copy of ``config`` whose pumps realize the scheme's conditions."""
    cond = solve_scheme(scheme, config.comb, config.coupling_rate, g, config.detuning_offset, order)
    pumps = scheme_pumps(scheme, config.comb, config.coupling_rate, g, cond, reverse)
    return config.replace(pumps=pumps)


def primary_coupling(config: ModelConfig, scheme: Scheme) -> float:
    """``|g|`` of the pump that carries the unscaled coupling ``g``.

    That is the first high-frequency pump for an isolator and the direct
    ``2*step`` coupler for a circulator.
    """
    if scheme.kind == ISOLATOR:
        wanted = lambda tone: tone.kind is PumpKind.HIGH
    else:
        wanted = lambda tone: tone.kind is PumpKind.LOW and tone.offset == 2 * scheme.step
    for tone, g in zip(config.pumps, config.couplings()):
        if wanted(tone):
            return abs(g)
    raise ConfigurationError("configuration has no primary pump for this scheme")


def scheme_loop_relation(config: ModelConfig) -> LoopRelation:
    rels = detect_loop_relations(config.pumps)
    if not rels:
        raise ConfigurationError("pumps satisfy no loop relation")
    return rels[0]
