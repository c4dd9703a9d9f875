"""Permutation (digraph) evaluation of determinants and scattering elements.

Every term of ``det(M)`` is a permutation ``sigma``; read as a digraph it is a
set of disjoint cycles with an edge ``i -> sigma(i)`` of weight ``M[i, sigma(i)]``.
The cofactor that gives ``S[out, in]`` replaces row ``out`` of ``M`` with the
unit vector ``e_in``, so each surviving permutation contains one open path
``in -> ... -> out`` plus the loops covering the remaining amplitudes.

Signs come from ordinary permutation parity.  The symbolic expansion works on
the same cofactor but treats the pump couplings ``g_j`` and ``g_j*`` as formal
variables (weight 1) and the diagonal detunings as spectator symbols (weight
0), truncating by total pump order.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cmt_matrix import (AmplitudeLabel, CoupledModeMatrix, amplitude_labels, coupling_pattern,
                         mode_detuning, parse_label)
from .errors import ConfigurationError, NumericalSingularityError
from .model import ModelConfig, pump_coupling
from .polynomial import TruncatedPolynomial

__all__ = [
    "EXACT_DIMENSION_LIMIT",
    "SYMBOLIC_DIMENSION_LIMIT",
    "DigraphTerm",
    "Expansion",
    "det_exact",
    "s_element_exact",
    "s_matrix_exact",
    "digraph_terms",
    "count_digraphs",
    "coupling_symbols",
    "coupling_values",
    "expand_symbolic",
    "evaluate_polynomial",
]

EXACT_DIMENSION_LIMIT = 10
SYMBOLIC_DIMENSION_LIMIT = 8
_TABLE_LIMIT = 9


@functools.lru_cache(maxsize=None)
def _permutation_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All permutations of ``range(n)`` (lexicographic) and their signs."""
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(-1, n)
    inversions = np.zeros(len(perms), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            inversions += perms[:, i] > perms[:, j]
    signs = np.where(inversions % 2 == 0, 1.0, -1.0)
    perms.setflags(write=False)
    signs.setflags(write=False)
    return perms, signs


def _as_array(M) -> np.ndarray:
    A = M.entries if isinstance(M, CoupledModeMatrix) else np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigurationError("determinant needs a square matrix")
    return A


def _guard(n: int) -> None:
    if n > EXACT_DIMENSION_LIMIT:
        raise ConfigurationError(
            f"exact permutation sum refused for dimension {n} > {EXACT_DIMENSION_LIMIT} "
            f"({math.factorial(n)} terms); use scattering_matrix (LU) instead")


def _permutation_sum(A: np.ndarray) -> complex:
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n <= _TABLE_LIMIT:
        perms, signs = _permutation_table(n)
        return complex(np.sum(signs * np.prod(A[np.arange(n), perms], axis=1)))
    # split on the first row so the cached table stays at 9! rows
    total = 0j
    rest = np.arange(1, n)
    for k in range(n):
        if A[0, k] != 0:
            cols = np.delete(np.arange(n), k)
            total += (-1) ** k * A[0, k] * _permutation_sum(A[np.ix_(rest, cols)])
    return total


def det_exact(M) -> complex:
    """Determinant as the explicit sum over all permutations (dimension <= 10)."""
    A = _as_array(M)
    _guard(A.shape[0])
    return _permutation_sum(A)


def _cofactor_matrix(A: np.ndarray, out: int, into: int) -> np.ndarray:
    B = A.copy()
    B[out, :] = 0
    B[out, into] = 1
    return B


def _resolve(M, label) -> int:
    if isinstance(M, CoupledModeMatrix):
        return M.index(label)
    return int(label)


def s_element_exact(M, out, into) -> complex:
    """``S[out, in] = (i/det M) * cofactor - delta`` by permutation sums.

    ``out`` and ``into`` are amplitude labels for a :class:`CoupledModeMatrix`
    or plain indices for an array.
    """
    A = _as_array(M)
    _guard(A.shape[0])
    r, c = _resolve(M, out), _resolve(M, into)
    det = _permutation_sum(A)
    if det == 0 or not np.isfinite(det):
        raise NumericalSingularityError("coupled-mode matrix is singular (det = 0)", math.inf)
    num = _permutation_sum(_cofactor_matrix(A, r, c))
    return 1j * num / det - (1.0 if r == c else 0.0)


def s_matrix_exact(M) -> np.ndarray:
    """Every element of ``S[out, in]`` from :func:`s_element_exact`."""
    A = _as_array(M)
    n = A.shape[0]
    _guard(n)
    det = _permutation_sum(A)
    if det == 0 or not np.isfinite(det):
        raise NumericalSingularityError("coupled-mode matrix is singular (det = 0)", math.inf)
    S = np.empty((n, n), dtype=complex)
    for r in range(n):
        for c in range(n):
            S[r, c] = 1j * _permutation_sum(_cofactor_matrix(A, r, c)) / det - (r == c)
    return S


@dataclass(frozen=True)
class DigraphTerm:
    """One nonzero permutation of a determinant or cofactor sum."""

    permutation: tuple[int, ...]
    loop_count: int
    sign: int
    weight: complex
    path: tuple[tuple[int, int], ...] = ()

    @property
    def value(self) -> complex:
        return self.sign * self.weight


def _cycles(perm: Sequence[int]) -> list[list[int]]:
    seen, out = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i)
            i = perm[i]
        out.append(cyc)
    return out


def digraph_terms(M, out=None, into=None, atol: float = 0.0) -> list[DigraphTerm]:
    """Nonzero permutation terms, with path/loop decomposition for cofactors.

    Without ``out``/``into`` the terms of ``det(M)`` are listed and every cycle
    counts as a loop.  With them, the terms of the ``S[out, in]`` cofactor are
    listed: ``path`` holds the edges from ``in`` to ``out`` and ``loop_count``
    the cycles that do not touch the path.  The values sum to the cofactor.
    """
    A = _as_array(M)
    n = A.shape[0]
    _guard(n)
    if (out is None) != (into is None):
        raise ValueError("give both out and into, or neither")
    r = c = None
    if out is not None:
        r, c = _resolve(M, out), _resolve(M, into)
        A = _cofactor_matrix(A, r, c)
    if n > _TABLE_LIMIT:
        raise ConfigurationError(f"term listing limited to dimension {_TABLE_LIMIT}")
    perms, signs = _permutation_table(n)
    weights = np.prod(A[np.arange(n), perms], axis=1)
    terms = []
    for idx in np.flatnonzero(np.abs(weights) > atol):
        perm = tuple(int(x) for x in perms[idx])
        cycles = _cycles(perm)
        path: tuple = ()
        loops = len(cycles)
        if r is not None:
            loops -= 1
            if r == c:
                path = ()
            else:
                edges, i = [], c
                while i != r:
                    edges.append((i, perm[i]))
                    i = perm[i]
                path = tuple(edges)
        terms.append(DigraphTerm(perm, loops, int(signs[idx]), complex(weights[idx]), path))
    return terms


def count_digraphs(n: int, reduction: str = "full") -> int:
    """Number of permutation terms: ``(2n)!`` in full, ``n!`` on ``n`` amplitudes."""
    if int(n) != n or n < 1:
        raise ValueError("mode count must be a positive integer")
    n = int(n)
    kind = str(reduction).lower().replace("-", "_")
    if kind == "full":
        return math.factorial(2 * n)
    if kind in ("modes_only", "closed_subset"):
        return math.factorial(n)
    raise ValueError(f"unknown reduction {reduction!r} (full, modes_only, closed_subset)")


# ---------------------------------------------------------------- symbolic

def coupling_symbols(config: ModelConfig) -> list[str]:
    """Formal pump variables ``g1, g1*, g2, g2*, ...`` (1-based pump index)."""
    out = []
    for j in range(1, len(config.pumps) + 1):
        out += [f"g{j}", f"g{j}*"]
    return out


def coupling_values(config: ModelConfig) -> dict[str, complex]:
    """Numeric value of every formal pump variable for ``config``."""
    values = {}
    for j, tone in enumerate(config.pumps, start=1):
        g = pump_coupling(tone, config.comb, config.coupling_rate)
        values[f"g{j}"] = g
        values[f"g{j}*"] = g.conjugate()
    return values


def _spectator(label: AmplitudeLabel) -> str:
    return f"Δ{label.mode}*" if label.conjugate else f"Δ{label.mode}"


def _symbolic_det(rows: list[list[TruncatedPolynomial | None]], one: TruncatedPolynomial):
    """Determinant by dynamic programming over used-column bitmasks.

    Row ``i`` picks column ``j``; the parity increment is the number of
    already used columns to the right of ``j``.  Products truncate on the fly.
    """
    n = len(rows)
    layer = {0: one}
    for i in range(n):
        nxt: dict = {}
        for mask, acc in layer.items():
            for j, entry in enumerate(rows[i]):
                if entry is None or mask >> j & 1:
                    continue
                term = acc * entry
                if not term:
                    continue
                if bin(mask >> (j + 1)).count("1") % 2:
                    term = -term
                key = mask | 1 << j
                nxt[key] = nxt[key] + term if key in nxt else term
        layer = nxt
    return layer.get((1 << n) - 1, one.zero())


@dataclass(frozen=True, eq=False)
class Expansion:
    """Truncated cofactor and determinant polynomials of one element.

    ``symbolic_*`` keep the detunings as spectator symbols ``Δm`` / ``Δm*``;
    :attr:`numerator` and :attr:`determinant` bind them to their numeric
    values, leaving polynomials in the pump variables only.
    """

    out: AmplitudeLabel
    into: AmplitudeLabel
    labels: tuple[AmplitudeLabel, ...]
    max_order: int
    symbolic_numerator: TruncatedPolynomial
    symbolic_determinant: TruncatedPolynomial
    spectators: dict = field(default_factory=dict)
    couplings: dict = field(default_factory=dict)
    paper_sign: bool = False

    @property
    def numerator(self) -> TruncatedPolynomial:
        return self.symbolic_numerator.substitute(self.spectators)

    @property
    def determinant(self) -> TruncatedPolynomial:
        return self.symbolic_determinant.substitute(self.spectators)

    def evaluate(self, couplings: Mapping[str, complex] | None = None) -> complex:
        """``i * N / D - delta`` from the truncated polynomials."""
        values = dict(self.couplings if couplings is None else couplings)
        num = evaluate_polynomial(self.numerator, values)
        den = evaluate_polynomial(self.determinant, values)
        if den == 0:
            raise NumericalSingularityError("truncated determinant vanishes", math.inf)
        return 1j * num / den - (1.0 if self.out == self.into else 0.0)

    def truncated(self, order: int) -> "Expansion":
        if order > self.max_order:
            raise ValueError(f"expansion only holds terms up to order {self.max_order}")
        return Expansion(self.out, self.into, self.labels, order,
                         self.symbolic_numerator.truncate(order),
                         self.symbolic_determinant.truncate(order),
                         self.spectators, self.couplings, self.paper_sign)

    def render(self, names: Mapping[int, str] | None = None, which: str = "numerator") -> str:
        """Text form such as ``+ (1)·g1*·Δd·Δe·Δc``.

        ``names`` maps comb indices to display names for the detuning symbols.
        """
        poly = self.symbolic_numerator if which == "numerator" else self.symbolic_determinant
        rename = {}
        if names:
            for lab in self.labels:
                if lab.mode in names:
                    rename[_spectator(lab)] = "Δ" + names[lab.mode] + ("*" if lab.conjugate else "")
        return poly.render(rename)

    def to_dict(self) -> dict:
        return {
            "out": str(self.out),
            "in": str(self.into),
            "labels": [str(lab) for lab in self.labels],
            "max_order": self.max_order,
            "paper_sign": self.paper_sign,
            "numerator": self.numerator.to_records(),
            "determinant": self.determinant.to_records(),
            "numerator_symbolic": self.symbolic_numerator.to_records(),
            "determinant_symbolic": self.symbolic_determinant.to_records(),
        }


def _symbolic_rows(config: ModelConfig, labels, variables, weights, max_order):
    pos = {lab: i for i, lab in enumerate(labels)}
    n = len(labels)
    rows: list[list] = [[None] * n for _ in range(n)]

    def add(i, j, poly):
        rows[i][j] = poly if rows[i][j] is None else rows[i][j] + poly

    for lab in labels:
        i = pos[lab]
        sym = TruncatedPolynomial.variable(_spectator(lab), variables, max_order, weights)
        add(i, i, -sym if lab.conjugate else sym)
    all_modes = config.mode_indices
    inside = set(labels)
    for j, tone in enumerate(config.pumps, start=1):
        for row, col, conj, sign in coupling_pattern(tone, all_modes):
            if (row in inside) != (col in inside):
                raise ConfigurationError(
                    f"subspace is not closed: pump {j} couples {row} and {col}")
            if row not in inside:
                continue
            name = f"g{j}*" if conj else f"g{j}"
            add(pos[row], pos[col],
                TruncatedPolynomial.variable(name, variables, max_order, weights, float(sign)))
    return rows


def expand_symbolic(config: ModelConfig, out, into, max_order: int = 2,
                    subspace: Sequence | None = None, paper_sign: bool = False,
                    literal_detuning: bool = False) -> Expansion:
    """Truncated pump-order expansion of the ``S[out, in]`` cofactor.

    ``subspace`` lists the amplitudes to keep (defaults to the whole basis)
    and must be closed under the pump couplings.  ``paper_sign`` flips the
    sign of both numerator and determinant, which leaves ``S`` unchanged but
    matches the sign convention used in published expansions for odd
    dimensions.
    """
    if int(max_order) != max_order or max_order < 0:
        raise ValueError("max_order must be a non-negative integer")
    labels = tuple(parse_label(x) for x in subspace) if subspace is not None \
        else amplitude_labels(config.mode_indices)
    if len(set(labels)) != len(labels):
        raise ConfigurationError("subspace lists an amplitude twice")
    if len(labels) > SYMBOLIC_DIMENSION_LIMIT:
        raise ConfigurationError(
            f"symbolic expansion limited to {SYMBOLIC_DIMENSION_LIMIT} amplitudes, got {len(labels)}")
    known = set(amplitude_labels(config.mode_indices))
    for lab in labels:
        if lab not in known:
            raise ConfigurationError(f"amplitude {lab} is not in the configured basis")
    out, into = parse_label(out), parse_label(into)
    if out not in labels or into not in labels:
        raise ConfigurationError("out and in amplitudes must belong to the subspace")

    pump_vars = coupling_symbols(config)
    spect_vars = [_spectator(lab) for lab in labels]
    variables = pump_vars + spect_vars
    weights = [1] * len(pump_vars) + [0] * len(spect_vars)
    rows = _symbolic_rows(config, labels, variables, weights, max_order)
    one = TruncatedPolynomial.constant(1.0, variables, max_order, weights)
    det = _symbolic_det(rows, one)
    r, c = labels.index(out), labels.index(into)
    cof_rows = [list(row) for row in rows]
    cof_rows[r] = [None] * len(labels)
    cof_rows[r][c] = one
    num = _symbolic_det(cof_rows, one)
    if paper_sign:
        num, det = -num, -det

    spectators = {}
    for lab in labels:
        d = mode_detuning(config.comb, config.coupling_rate, lab.mode, config.detuning_offset,
                          literal_detuning).value
        spectators[_spectator(lab)] = d.conjugate() if lab.conjugate else d
    return Expansion(out, into, labels, int(max_order), num, det, spectators,
                     coupling_values(config), paper_sign)


def evaluate_polynomial(poly: TruncatedPolynomial, couplings: Mapping[str, complex]) -> complex:
    """Numeric value of a truncated series; unbound variables raise ``KeyError``."""
    return poly.evaluate(couplings)
