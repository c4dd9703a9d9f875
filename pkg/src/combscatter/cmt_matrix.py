"""Normalized coupled-mode matrix ``M = M0 + sum_k G_k``.

Amplitudes are interleaved ``(a_m, a_m*)`` over the active modes, lowest mode
first.  Entries are normalized by ``gamma``:

* ``M0`` is diagonal with ``Delta_m`` for a mode and ``-conj(Delta_m)`` for its
  anti-mode, ``Delta_m = (-delta_m + i*gamma/2) / gamma``.
* A low-frequency pump ``k`` puts ``g`` at (m, m+k) and ``conj(g)`` at (m+k, m)
  in the mode block; the anti-mode block carries ``-conj(g)`` and ``-g``.
* A high-frequency pump ``k`` links every pair with ``p + q = k``: anti-mode
  row ``p*`` / mode column ``q`` carries ``g``, mode row ``q`` / anti-mode
  column ``p*`` carries ``-conj(g)``.

Couplings that would reach outside the active basis are dropped.  With these
rules ``M == -Sigma conj(M) Sigma`` where ``Sigma`` swaps every mode with its
anti-mode.

Text dump format (:func:`dump_matrix`): a ``# labels:`` header line, then one
row per line of whitespace-separated ``re+imj`` tokens (17 significant digits).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, ParseError
from .model import FrequencyComb, ModelConfig, PumpKind, PumpTone, pump_coupling, wrap_phase

__all__ = [
    "AmplitudeLabel",
    "ModeDetuning",
    "CoupledModeMatrix",
    "SubspaceReduction",
    "UncoupledPumpWarning",
    "amplitude_labels",
    "parse_label",
    "mode_detuning",
    "build_m0",
    "build_gk",
    "coupling_pattern",
    "build_m",
    "reduce_subspace",
    "sigma_matrix",
    "dump_matrix",
    "load_matrix",
]


class UncoupledPumpWarning(UserWarning):
    """A pump tone couples no pair of modes inside the basis."""


class AmplitudeLabel(NamedTuple):
    mode: int
    conjugate: bool = False

    def __str__(self):
        return f"{self.mode}*" if self.conjugate else f"{self.mode}"

    @property
    def partner(self) -> "AmplitudeLabel":
        return AmplitudeLabel(self.mode, not self.conjugate)


def parse_label(value) -> AmplitudeLabel:
    """``3`` / ``"3"`` -> mode 3, ``"-1*"`` -> anti-mode of mode -1."""
    if isinstance(value, AmplitudeLabel):
        return value
    if isinstance(value, tuple):
        return AmplitudeLabel(int(value[0]), bool(value[1]))
    if isinstance(value, (int, np.integer)):
        return AmplitudeLabel(int(value), False)
    text = str(value).strip()
    conj = text.endswith("*")
    try:
        return AmplitudeLabel(int(text.rstrip("*")), conj)
    except ValueError:
        raise ConfigurationError(f"bad amplitude label {value!r}") from None


def amplitude_labels(modes: Sequence[int]) -> tuple[AmplitudeLabel, ...]:
    out = []
    for m in modes:
        out += [AmplitudeLabel(m, False), AmplitudeLabel(m, True)]
    return tuple(out)


@dataclass(frozen=True)
class ModeDetuning:
    value: complex

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return wrap_phase(math.atan2(self.value.imag, self.value.real))

    # paper-style aliases
    kappa = magnitude
    alpha = phase


def _detuning_value(comb, gamma, m, detuning_offset=0.0, literal=False) -> complex:
    if literal:
        # verbatim (omega_m + omega0 - i*gamma/2) form, kept for comparison only
        return complex(-(comb.mode_frequency(m) + comb.center_frequency), gamma / 2) / gamma
    delta = m * comb.spacing + detuning_offset
    return complex(-delta, gamma / 2) / gamma


def mode_detuning(comb: FrequencyComb, gamma: float, m: int, detuning_offset: float = 0.0,
                  literal: bool = False) -> ModeDetuning:
    """Normalized diagonal element ``Delta_m = kappa_m * exp(i*alpha_m)``."""
    if not comb.contains(m):
        raise IndexError(f"mode {m} outside comb of half width {comb.half_width}")
    if not gamma > 0:
        raise ConfigurationError("gamma must be positive")
    return ModeDetuning(_detuning_value(comb, gamma, m, detuning_offset, literal))


@dataclass(frozen=True, eq=False)
class CoupledModeMatrix:
    """Dense complex matrix with one :class:`AmplitudeLabel` per row/column."""

    entries: np.ndarray
    labels: tuple[AmplitudeLabel, ...]
    coupled: bool = True
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] != len(self.labels):
            raise ConfigurationError("matrix must be square and match its labels")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "labels", tuple(parse_label(x) for x in self.labels))
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def index(self, label) -> int:
        try:
            return self._index[parse_label(label)]
        except KeyError:
            raise IndexError(f"label {label!s} not in matrix") from None

    def __getitem__(self, item):
        row, col = item
        return self.entries[self.index(row), self.index(col)]

    def __add__(self, other: "CoupledModeMatrix") -> "CoupledModeMatrix":
        if self.labels != other.labels:
            raise ConfigurationError("cannot add matrices with different labels")
        return CoupledModeMatrix(self.entries + other.entries, self.labels)

    def sigma(self) -> np.ndarray:
        return sigma_matrix(self.labels)

    def mode_block(self) -> np.ndarray:
        rows = [i for i, lab in enumerate(self.labels) if not lab.conjugate]
        return self.entries[np.ix_(rows, rows)]


def sigma_matrix(labels: Sequence[AmplitudeLabel]) -> np.ndarray:
    """Permutation swapping each amplitude with its conjugate partner."""
    labels = [parse_label(x) for x in labels]
    index = {lab: i for i, lab in enumerate(labels)}
    out = np.zeros((len(labels), len(labels)))
    for i, lab in enumerate(labels):
        j = index.get(lab.partner)
        if j is None:
            raise ConfigurationError(f"label {lab} has no conjugate partner")
        out[i, j] = 1.0
    return out


def _modes_for(comb: FrequencyComb, modes) -> tuple[int, ...]:
    return tuple(comb.indices) if modes is None else tuple(modes)


def build_m0(comb: FrequencyComb, gamma: float, modes=None, detuning_offset: float = 0.0,
             literal_detuning: bool = False) -> CoupledModeMatrix:
    modes = _modes_for(comb, modes)
    labels = amplitude_labels(modes)
    diag = []
    for m in modes:
        d = mode_detuning(comb, gamma, m, detuning_offset, literal_detuning).value
        diag += [d, -d.conjugate()]
    return CoupledModeMatrix(np.diag(np.array(diag, dtype=complex)), labels)


def coupling_pattern(tone: PumpTone, modes: Sequence[int]):
    """Entries of one pump block as ``(row, col, conjugated, sign)`` tuples.

    The entry value is ``sign * (conj(g) if conjugated else g)``.  Shared by
    the numeric builder and the symbolic expansion.
    """
    present = set(modes)
    k = tone.offset
    if tone.kind is PumpKind.LOW:
        for m in modes:
            if m + k in present:
                a, b = AmplitudeLabel(m), AmplitudeLabel(m + k)
                yield a, b, False, 1
                yield b, a, True, 1
                yield a.partner, b.partner, True, -1
                yield b.partner, a.partner, False, -1
    else:
        for p in modes:
            q = k - p
            if q in present:
                yield AmplitudeLabel(p, True), AmplitudeLabel(q), False, 1
                yield AmplitudeLabel(q), AmplitudeLabel(p, True), True, -1


def build_gk(comb: FrequencyComb, gamma: float, tone: PumpTone, modes=None) -> CoupledModeMatrix:
    """Coupling block of one pump tone (open boundary)."""
    modes = _modes_for(comb, modes)
    labels = amplitude_labels(modes)
    pos = {lab: i for i, lab in enumerate(labels)}
    g = pump_coupling(tone, comb, gamma)
    out = np.zeros((len(labels), len(labels)), dtype=complex)
    count = 0
    for row, col, conj, sign in coupling_pattern(tone, modes):
        out[pos[row], pos[col]] += sign * (g.conjugate() if conj else g)
        count += 1
    if count == 0:
        warnings.warn(f"pump {tone.label()} couples no mode pair in the basis",
                      UncoupledPumpWarning, stacklevel=2)
    return CoupledModeMatrix(out, labels, coupled=count > 0)


def build_m(config: ModelConfig, literal_detuning: bool = False) -> CoupledModeMatrix:
    """Full coupled-mode matrix of a configuration."""
    modes = config.mode_indices
    total = build_m0(config.comb, config.coupling_rate, modes, config.detuning_offset,
                     literal_detuning).entries.copy()
    for tone in config.pumps:
        total += build_gk(config.comb, config.coupling_rate, tone, modes).entries
    return CoupledModeMatrix(total, amplitude_labels(modes))


@dataclass(frozen=True)
class SubspaceReduction:
    matrix: CoupledModeMatrix
    closed: bool
    leaks: tuple[tuple[AmplitudeLabel, AmplitudeLabel], ...]


def reduce_subspace(M: CoupledModeMatrix, rows, atol: float = 0.0) -> SubspaceReduction:
    """Principal submatrix on ``rows`` plus a closure report.

    The subset is closed when no entry couples it to the complement in
    either direction (``|entry| > atol``).
    """
    labels = [parse_label(r) for r in rows]
    idx = [M.index(lab) for lab in labels]
    comp = [i for i in range(M.dimension) if i not in set(idx)]
    A = M.entries
    leaks = []
    for i in idx:
        for j in comp:
            if abs(A[i, j]) > atol or abs(A[j, i]) > atol:
                leaks.append((M.labels[i], M.labels[j]))
    sub = CoupledModeMatrix(A[np.ix_(idx, idx)], tuple(labels))
    return SubspaceReduction(sub, not leaks, tuple(leaks))


def _fmt(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def dump_matrix(M: CoupledModeMatrix, path) -> None:
    lines = ["# labels: " + " ".join(str(lab) for lab in M.labels)]
    for row in M.entries:
        lines.append(" ".join(_fmt(complex(z)) for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix(path) -> CoupledModeMatrix:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# labels:"):
        raise ParseError(f"{path}: missing '# labels:' header")
    labels = [parse_label(tok) for tok in text[0][len("# labels:"):].split()]
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        try:
            row = [complex(tok) for tok in line.split()]
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: bad complex token") from None
        if len(row) != len(labels):
            raise ParseError(f"{path}: line {lineno}: expected {len(labels)} entries, got {len(row)}")
        rows.append(row)
    if len(rows) != len(labels):
        raise ParseError(f"{path}: expected {len(labels)} rows, got {len(rows)}")
    return CoupledModeMatrix(np.array(rows, dtype=complex), tuple(labels))
