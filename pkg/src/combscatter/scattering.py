"""Scattering matrix, dB views, pump-off normalization and reciprocity checks.

The coupled-mode matrix is assembled in the digraph convention: row ``l``
collects the edges leaving amplitude ``l``.  The linear response of the
equations of motion acts through its transpose, so the element that maps
input amplitude ``in`` to output amplitude ``out`` is::

    S[out, in] = i * inv(M)[in, out] - delta(out, in)

i.e. ``S = (i*inv(M) - 1).T``.  Transposition commutes with the mode /
anti-mode swap, so ``S == Sigma conj(S) Sigma`` still holds.

Export formats
--------------
CSV: header ``out_label,in_label,re,im,mag_db``, one row per element in
row-major order.  JSON: ``{"labels": [...], "re": [[...]], "im": [[...]],
"mag_db": [[...]]}`` with ``null`` standing for ``-inf`` dB.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from ._io import db20, fmt_float, writable_path
from .cmt_matrix import AmplitudeLabel, CoupledModeMatrix, parse_label, sigma_matrix
from .errors import NormalizationError, NumericalSingularityError

__all__ = [
    "DEFAULT_CONDITION_GUARD",
    "ScatteringMatrix",
    "Asymmetry",
    "ReciprocityReport",
    "scattering_matrix",
    "scattering_matrix_columns",
    "element_db",
    "normalize_pump_off",
    "check_reciprocity",
    "write_csv",
    "write_json",
    "read_json",
]

DEFAULT_CONDITION_GUARD = 1e12


@dataclass(frozen=True, eq=False)
class ScatteringMatrix:
    """Complex ``S[out, in]`` with amplitude labels."""

    entries: np.ndarray
    labels: tuple[AmplitudeLabel, ...]
    condition: float = float("nan")
    normalized: bool = False
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
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
            raise IndexError(f"label {label!s} not in scattering matrix") from None

    def element(self, out, into) -> complex:
        return complex(self.entries[self.index(out), self.index(into)])

    __call__ = element

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.entries)

    @property
    def db(self) -> np.ndarray:
        return db20(self.entries)

    def restrict(self, labels: Sequence) -> "ScatteringMatrix":
        idx = [self.index(x) for x in labels]
        return ScatteringMatrix(self.entries[np.ix_(idx, idx)], tuple(self.labels[i] for i in idx),
                                self.condition, self.normalized)

    def mode_sector(self) -> "ScatteringMatrix":
        return self.restrict([lab for lab in self.labels if not lab.conjugate])

    def sigma(self) -> np.ndarray:
        return sigma_matrix(self.labels)


def _check_condition(M: np.ndarray, inv: np.ndarray, guard: float) -> float:
    cond = float(np.linalg.norm(M, 1) * np.linalg.norm(inv, 1))
    if not np.isfinite(cond) or cond > guard:
        raise NumericalSingularityError(
            f"coupled-mode matrix is singular or ill-conditioned (cond ~ {cond:.3g} > {guard:.3g})",
            cond)
    return cond


def scattering_matrix(M: CoupledModeMatrix, guard: float = DEFAULT_CONDITION_GUARD) -> ScatteringMatrix:
    """``S = (i*inv(M) - 1).T`` via LU factorization."""
    A = M.entries
    n = A.shape[0]
    try:
        with np.errstate(all="raise"), warnings.catch_warnings():
            # an exactly singular factor is reported below as an exception
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
        if np.any(lu.diagonal() == 0):
            raise NumericalSingularityError("coupled-mode matrix is exactly singular")
        inv = scipy.linalg.lu_solve((lu, piv), np.eye(n, dtype=complex))
    except (FloatingPointError, np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalSingularityError(f"inversion failed: {exc}") from exc
    cond = _check_condition(A, inv, guard)
    S = (1j * inv - np.eye(n)).T
    return ScatteringMatrix(S, M.labels, cond)


def scattering_matrix_columns(M: CoupledModeMatrix) -> ScatteringMatrix:
    """Same result assembled column by column from ``2n`` linear solves.

    Input ``in`` needs row ``in`` of ``inv(M)``, i.e. the solution of
    ``M.T x = e_in``.
    """
    A = M.entries
    n = A.shape[0]
    S = np.empty((n, n), dtype=complex)
    eye = np.eye(n)
    for j in range(n):
        S[:, j] = 1j * np.linalg.solve(A.T, eye[:, j]) - eye[:, j]
    return ScatteringMatrix(S, M.labels)


def element_db(S: ScatteringMatrix, out, into) -> float:
    """``20*log10|S[out, in]|``; ``-inf`` for an exact zero."""
    return db20(S.element(out, into))


def normalize_pump_off(S: ScatteringMatrix, S0: ScatteringMatrix) -> ScatteringMatrix:
    """Divide column ``n`` by the pump-off reflection magnitude ``|S0[n, n]|``."""
    if S.labels != S0.labels:
        raise NormalizationError("S and pump-off reference have different labels")
    ref = np.abs(np.diag(S0.entries))
    if np.any(ref == 0):
        bad = [str(S0.labels[i]) for i in np.flatnonzero(ref == 0)]
        raise NormalizationError(f"zero pump-off reflection for inputs {bad}")
    return ScatteringMatrix(S.entries / ref[np.newaxis, :], S.labels, S.condition, True)


@dataclass(frozen=True)
class Asymmetry:
    out: AmplitudeLabel
    into: AmplitudeLabel
    forward: float     # |S[out, in]|
    backward: float    # |S[in, out]|

    @property
    def db(self) -> float:
        """``20*log10(|S[out,in]| / |S[in,out]|)``."""
        if self.backward == 0:
            return math.inf
        if self.forward == 0:
            return -math.inf
        return 20 * math.log10(self.forward / self.backward)


@dataclass(frozen=True)
class ReciprocityReport:
    tolerance: float
    pairs: tuple[Asymmetry, ...]
    max_difference: float

    @property
    def reciprocal(self) -> bool:
        return not self.pairs

    def pair_labels(self) -> set[frozenset]:
        return {frozenset((str(p.out), str(p.into))) for p in self.pairs}


def check_reciprocity(S: ScatteringMatrix, tol: float = 1e-10) -> ReciprocityReport:
    """Pairs with ``||S_mn| - |S_nm|| > tol`` (magnitude nonreciprocity)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    mag = S.magnitude
    diff = np.abs(mag - mag.T)
    pairs = []
    n = S.dimension
    for i in range(n):
        for j in range(i + 1, n):
            if diff[i, j] > tol:
                pairs.append(Asymmetry(S.labels[i], S.labels[j], float(mag[i, j]), float(mag[j, i])))
    return ReciprocityReport(tol, tuple(pairs), float(diff.max(initial=0.0)))


def write_csv(S: ScatteringMatrix, path=None, force: bool = False) -> str:
    """Element list CSV; returns the text and writes it when ``path`` is given."""
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["out_label", "in_label", "re", "im", "mag_db"])
    db = S.db
    for i, lo in enumerate(S.labels):
        for j, li in enumerate(S.labels):
            z = S.entries[i, j]
            w.writerow([str(lo), str(li), fmt_float(z.real), fmt_float(z.imag), fmt_float(db[i, j])])
    text = buf.getvalue()
    if path is not None:
        writable_path(path, force).write_text(text)
    return text


def _nullable(x: float):
    return None if math.isinf(x) and x < 0 else float(x)


def write_json(S: ScatteringMatrix, path=None, force: bool = False) -> str:
    data = {
        "labels": [str(lab) for lab in S.labels],
        "normalized": S.normalized,
        "re": S.entries.real.tolist(),
        "im": S.entries.imag.tolist(),
        "mag_db": [[_nullable(x) for x in row] for row in S.db],
    }
    text = json.dumps(data, indent=1) + "\n"
    if path is not None:
        writable_path(path, force).write_text(text)
    return text


def read_json(path_or_text) -> ScatteringMatrix:
    from pathlib import Path

    text = path_or_text
    if not str(path_or_text).lstrip().startswith("{"):
        text = Path(path_or_text).read_text()
    data = json.loads(text)
    entries = np.array(data["re"]) + 1j * np.array(data["im"])
    return ScatteringMatrix(entries, tuple(parse_label(x) for x in data["labels"]),
                            normalized=bool(data.get("normalized", False)))
