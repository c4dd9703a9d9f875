"""Parameter sweeps, full mode-sector scans, measured data and fitting.

Pump indices in this module are 1-based (pump 1 is the first tone of the
config), matching the ``phi3`` / ``p2`` names used for free parameters.

Scan files
----------
A scan is a square CSV of amplitude dB values.  The first header cell is
``out\\in``, the rest of the header row lists the input mode indices and the
first column lists the output mode indices.  A TOML sidecar
``<file>.meta.toml`` carries the normalization flag and the pump settings.
Exact zeros are written as :data:`DB_FLOOR` so every stored entry is finite.
"""
from __future__ import annotations

import csv
import io
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.optimize

from ._io import db20, fmt_float, writable_path
from .cmt_matrix import AmplitudeLabel, build_m, parse_label
from .config import config_to_dict, dump_config
from .errors import ConfigurationError, NumericalError, NumericalSingularityError, ParseError
from .model import ModelConfig, PumpKind, wrap_phase
from .scattering import ScatteringMatrix, normalize_pump_off, scattering_matrix

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "DB_FLOOR",
    "PHASE",
    "AMPLITUDE",
    "P_REL",
    "SingularPointWarning",
    "SweepSpec",
    "SweepResult",
    "sweep",
    "full_scan",
    "MeasuredScattering",
    "measured_from_scan",
    "load_measured",
    "write_measured",
    "FitResult",
    "gauge_fixed_phases",
    "default_free",
    "fit",
    "objective",
]

DB_FLOOR = -400.0
PHASE, AMPLITUDE, P_REL = "phase", "amplitude", "p_rel"
_PARAMETERS = (PHASE, AMPLITUDE, P_REL)


class SingularPointWarning(UserWarning):
    """A sweep grid point produced a singular coupled-mode matrix."""


def _label(x) -> AmplitudeLabel:
    return x if isinstance(x, AmplitudeLabel) else parse_label(x)


def _observable_name(obs) -> str:
    out, into = obs
    return f"S_{out}_{into}"


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and what to record.

    ``parameter`` is ``"phase"`` or ``"amplitude"`` of pump ``pump``, or
    ``"p_rel"``: pump ``pump`` gets ``value * amplitude(reference_pump)``
    while the other tones stay fixed.  The reference defaults to the first
    other pump.
    """

    base: ModelConfig
    parameter: str
    pump: int
    grid: tuple[float, ...]
    observables: tuple[tuple[AmplitudeLabel, AmplitudeLabel], ...]
    reference_pump: int | None = None

    def __post_init__(self):
        if self.parameter not in _PARAMETERS:
            raise ConfigurationError(f"parameter must be one of {_PARAMETERS}, got {self.parameter!r}")
        n = len(self.base.pumps)
        if not 1 <= self.pump <= n:
            raise ConfigurationError(f"pump index {self.pump} outside 1..{n}")
        grid = tuple(float(x) for x in self.grid)
        if len(grid) < 1 or not all(np.isfinite(grid)):
            raise ConfigurationError("grid must hold finite values")
        d = np.diff(grid)
        if len(grid) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigurationError("grid must be strictly monotone")
        object.__setattr__(self, "grid", grid)
        if self.parameter == P_REL:
            ref = self.reference_pump
            if ref is None:
                others = [k for k in range(1, n + 1) if k != self.pump]
                if not others:
                    raise ConfigurationError("p_rel needs a second pump as reference")
                ref = others[0]
            if not 1 <= ref <= n or ref == self.pump:
                raise ConfigurationError(f"bad reference pump {ref}")
            object.__setattr__(self, "reference_pump", ref)
        modes = set(self.base.mode_indices)
        obs = []
        for pair in self.observables:
            out, into = (_label(x) for x in pair)
            if out.mode not in modes or into.mode not in modes:
                raise ConfigurationError(f"observable ({out}, {into}) is not in the basis")
            obs.append((out, into))
        if not obs:
            raise ConfigurationError("need at least one observable")
        object.__setattr__(self, "observables", tuple(obs))

    def config_at(self, value: float) -> ModelConfig:
        k = self.pump - 1
        if self.parameter == PHASE:
            return self.base.with_pump(k, phase=float(wrap_phase(value)))
        if self.parameter == AMPLITUDE:
            return self.base.with_pump(k, amplitude=float(value))
        ref = self.base.pumps[self.reference_pump - 1].amplitude
        return self.base.with_pump(k, amplitude=float(value) * ref)


@dataclass(frozen=True, eq=False)
class SweepResult:
    grid: np.ndarray
    observables: tuple[tuple[AmplitudeLabel, AmplitudeLabel], ...]
    traces_db: np.ndarray        # (observables, grid); NaN at singular points
    singular: np.ndarray         # bool mask over the grid

    def trace(self, out, into) -> np.ndarray:
        key = (_label(out), _label(into))
        return self.traces_db[self.observables.index(key)]

    def argmin(self, out, into) -> float:
        return float(self.grid[np.nanargmin(self.trace(out, into))])

    def argmax(self, out, into) -> float:
        return float(self.grid[np.nanargmax(self.trace(out, into))])

    def extrema(self) -> dict[str, dict[str, float]]:
        return {_observable_name(o): {"argmin": self.argmin(*o), "argmax": self.argmax(*o)}
                for o in self.observables}

    def to_csv(self, path=None, force: bool = False) -> str:
        """``param_value,<obs>_db,...``; singular points are written as ``nan``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param_value"] + [_observable_name(o) + "_db" for o in self.observables])
        for j, x in enumerate(self.grid):
            w.writerow([fmt_float(x)] + [fmt_float(v) for v in self.traces_db[:, j]])
        text = buf.getvalue()
        if path is not None:
            writable_path(path, force).write_text(text)
        return text


def _sweep_point(spec: SweepSpec, value: float):
    try:
        S = scattering_matrix(build_m(spec.config_at(value)))
    except NumericalSingularityError:
        return None
    return [db20(S.element(o, i)) for o, i in spec.observables]


def sweep(spec: SweepSpec, threads: int | None = None) -> SweepResult:
    """Evaluate the observables at every grid value (order-preserving)."""
    threads = threads or 1
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda v: _sweep_point(spec, v), spec.grid))
    else:
        rows = [_sweep_point(spec, v) for v in spec.grid]
    n_obs = len(spec.observables)
    traces = np.full((n_obs, len(rows)), np.nan)
    singular = np.zeros(len(rows), dtype=bool)
    for j, row in enumerate(rows):
        if row is None:
            singular[j] = True
        else:
            traces[:, j] = row
    if singular.any():
        bad = [spec.grid[j] for j in np.flatnonzero(singular)]
        warnings.warn(f"singular coupled-mode matrix at {spec.parameter} = {bad}; "
                      f"recorded as NaN", SingularPointWarning, stacklevel=2)
    return SweepResult(np.array(spec.grid), spec.observables, traces, singular)


# -------------------------------------------------------------------- scans

def full_scan(config: ModelConfig, normalize: bool = True) -> ScatteringMatrix:
    """Mode-in / mode-out block of ``S``, normalized to the pump-off response."""
    S = scattering_matrix(build_m(config))
    if normalize:
        S = normalize_pump_off(S, scattering_matrix(build_m(config.pump_off())))
    return S.mode_sector()


@dataclass(frozen=True, eq=False)
class MeasuredScattering:
    """A measured (or synthetic) mode-sector magnitude matrix.

    ``magnitude_db[i, j]`` is the response at ``modes[i]`` to a probe at
    ``modes[j]``.
    """

    modes: tuple[int, ...]
    magnitude_db: np.ndarray
    phase: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        mag = np.asarray(self.magnitude_db, dtype=float)
        if mag.ndim != 2 or mag.shape[0] != mag.shape[1]:
            raise ParseError(f"scattering data must be square, got shape {mag.shape}")
        if mag.shape[0] != len(modes):
            raise ParseError(f"{len(modes)} mode labels for a {mag.shape[0]}x{mag.shape[0]} matrix")
        if len(set(modes)) != len(modes):
            raise ParseError("mode labels are not unique")
        if not np.all(np.isfinite(mag)):
            raise ParseError("scattering data contains non-finite entries")
        object.__setattr__(self, "magnitude_db", mag)
        if self.phase is not None:
            ph = np.asarray(self.phase, dtype=float)
            if ph.shape != mag.shape or not np.all(np.isfinite(ph)):
                raise ParseError("phase matrix must match the magnitude matrix and be finite")
            object.__setattr__(self, "phase", ph)

    @property
    def normalized(self) -> bool:
        return bool(self.metadata.get("normalized", False))

    @property
    def magnitude(self) -> np.ndarray:
        """Linear magnitudes; floor entries map to exactly zero."""
        lin = 10.0 ** (self.magnitude_db / 20)
        lin[self.magnitude_db <= DB_FLOOR] = 0.0
        return lin

    def complex(self) -> np.ndarray:
        if self.phase is None:
            raise ConfigurationError("measured data has no phase information")
        return self.magnitude * np.exp(1j * self.phase)


def measured_from_scan(S: ScatteringMatrix, config: ModelConfig | None = None,
                       with_phase: bool = False) -> MeasuredScattering:
    """Package a :func:`full_scan` result as measured data."""
    if any(lab.conjugate for lab in S.labels):
        raise ConfigurationError("measured data holds the mode sector only")
    db = np.maximum(S.db, DB_FLOOR)
    meta = {"normalized": bool(S.normalized)}
    if config is not None:
        meta["config"] = config_to_dict(config)
    phase = np.angle(S.entries) if with_phase else None
    return MeasuredScattering(tuple(lab.mode for lab in S.labels), db, phase, meta)


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".meta.toml")


def _phase_file(path: Path) -> Path:
    return path.with_name(path.name + ".phase.csv")


def _square_csv(modes, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["out\\in"] + [str(m) for m in modes])
    for m, row in zip(modes, values):
        w.writerow([str(m)] + [fmt_float(v) for v in row])
    return buf.getvalue()


def write_measured(data: MeasuredScattering, path, force: bool = False) -> Path:
    """Square dB CSV plus the ``.meta.toml`` sidecar (and ``.phase.csv``)."""
    path = Path(path)
    targets = [writable_path(path, force), writable_path(_sidecar(path), force)]
    if data.phase is not None:
        targets.append(writable_path(_phase_file(path), force))
    targets[0].write_text(_square_csv(data.modes, data.magnitude_db))
    meta = dict(data.metadata)
    meta["phase"] = data.phase is not None
    targets[1].write_text(dump_config(meta))
    if data.phase is not None:
        targets[2].write_text(_square_csv(data.modes, data.phase))
    return path


def _read_square(path: Path) -> tuple[tuple[int, ...], np.ndarray]:
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0].strip() != "out\\in":
        raise ParseError(f"{path}: malformed header (expected 'out\\in,<modes...>')")
    try:
        cols = tuple(int(x) for x in header[1:])
    except ValueError:
        raise ParseError(f"{path}: malformed header: mode indices must be integers") from None
    n = len(cols)
    body = rows[1:]
    if len(body) != n:
        raise ParseError(f"{path}: matrix is not square ({len(body)} rows, {n} columns)")
    out_modes, values = [], np.empty((n, n))
    for k, row in enumerate(body, start=2):
        if len(row) != n + 1:
            raise ParseError(f"{path}: row {k} has {len(row) - 1} values, expected {n}")
        try:
            out_modes.append(int(row[0]))
            values[k - 2] = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise ParseError(f"{path}: row {k}: {exc}") from None
    if tuple(out_modes) != cols:
        raise ParseError(f"{path}: row labels do not match the header mode indices")
    return cols, values


def load_measured(path, format: str = "csv") -> MeasuredScattering:
    """Read a scan written by :func:`write_measured` (or by the ``scan`` command).

    Raises ``FileNotFoundError`` for a missing file and :class:`ParseError`
    for malformed content; the sidecar is optional.
    """
    if format != "csv":
        raise ConfigurationError(f"unsupported measured-data format {format!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"measured data file {path} not found")
    modes, db = _read_square(path)
    meta = {}
    if _sidecar(path).is_file():
        try:
            meta = tomllib.loads(_sidecar(path).read_text())
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"{_sidecar(path)}: {exc}") from None
    phase = None
    if meta.get("phase") and _phase_file(path).is_file():
        pmodes, phase = _read_square(_phase_file(path))
        if pmodes != modes:
            raise ParseError(f"{_phase_file(path)}: mode labels differ from {path}")
    meta.pop("phase", None)
    return MeasuredScattering(modes, db, phase, meta)


# ------------------------------------------------------------------ fitting

def gauge_fixed_phases(config: ModelConfig) -> tuple[int, ...]:
    """1-based pumps whose phases are unobservable in magnitude data.

    Re-phasing the modes as ``a_m -> a_m exp(i(theta0 + m*theta1))`` shifts a
    low pump at ``k*spacing`` by ``k*theta1`` and a high pump by
    ``2*theta0 + k*theta1`` without changing any ``|S|``.  Pumps are picked
    greedily until their shift vectors span that two-parameter group.
    """
    rows, picked = [], []
    for idx, tone in enumerate(config.pumps, start=1):
        trial = rows + [(2.0 if tone.kind is PumpKind.HIGH else 0.0, float(tone.offset))]
        if np.linalg.matrix_rank(np.array(trial)) > len(rows):
            rows, picked = trial, picked + [idx]
    return tuple(picked)


def default_free(config: ModelConfig) -> tuple[str, ...]:
    """``gamma``, every ``p<k>`` and every phase not removed by the gauge."""
    frozen = set(gauge_fixed_phases(config))
    n = len(config.pumps)
    return (("gamma",) + tuple(f"p{k}" for k in range(1, n + 1))
            + tuple(f"phi{k}" for k in range(1, n + 1) if k not in frozen))


def _parse_free(config: ModelConfig, free) -> list[tuple[str, int]]:
    n = len(config.pumps)
    out = []
    for name in free:
        name = str(name).strip()
        if name == "gamma":
            out.append(("gamma", 0))
            continue
        for prefix in ("phi", "p"):
            if name.startswith(prefix) and name[len(prefix):].isdigit():
                k = int(name[len(prefix):])
                if not 1 <= k <= n:
                    raise ConfigurationError(f"free parameter {name!r}: no pump {k}")
                out.append((prefix, k))
                break
        else:
            raise ConfigurationError(f"unknown free parameter {name!r} (use gamma, p<k>, phi<k>)")
    if len(set(out)) != len(out):
        raise ConfigurationError("duplicate free parameters")
    return out


def _encode(config: ModelConfig, params) -> np.ndarray:
    x = []
    for kind, k in params:
        if kind == "gamma":
            x.append(math.log(config.coupling_rate))
        elif kind == "p":
            amp = config.pumps[k - 1].amplitude
            if not amp > 0:
                raise ConfigurationError(f"pump {k} amplitude must be positive to be fitted")
            x.append(math.log(amp))
        else:
            x.append(config.pumps[k - 1].phase)
    return np.array(x, dtype=float)


def _decode(config: ModelConfig, params, x) -> ModelConfig:
    pumps = list(config.pumps)
    gamma = config.coupling_rate
    for (kind, k), v in zip(params, x):
        if kind == "gamma":
            gamma = math.exp(v)
        elif kind == "p":
            pumps[k - 1] = pumps[k - 1].__class__(pumps[k - 1].kind, pumps[k - 1].offset,
                                                   math.exp(v), pumps[k - 1].phase)
        else:
            pumps[k - 1] = pumps[k - 1].__class__(pumps[k - 1].kind, pumps[k - 1].offset,
                                                   pumps[k - 1].amplitude, float(v))
    return config.replace(coupling_rate=gamma, pumps=tuple(pumps))


def _model_block(config: ModelConfig, measured: MeasuredScattering, metric: str) -> np.ndarray:
    scan = full_scan(config, normalize=bool(measured.metadata.get("normalized", True)))
    idx = [scan.index(AmplitudeLabel(m)) for m in measured.modes]
    block = scan.entries[np.ix_(idx, idx)]
    return block if metric == "complex" else np.abs(block)


def objective(config: ModelConfig, measured: MeasuredScattering, metric: str = "magnitude") -> float:
    """Sum of squared element-wise distances over the mode sector."""
    target = measured.complex() if metric == "complex" else measured.magnitude
    try:
        model = _model_block(config, measured, metric)
    except NumericalSingularityError:
        return math.inf
    return float(np.sum(np.abs(model - target) ** 2))


@dataclass(frozen=True, eq=False)
class FitResult:
    config: ModelConfig
    free: tuple[str, ...]
    objective: float
    initial_objective: float
    iterations: int
    evaluations: int
    converged: bool
    residual: np.ndarray
    history: tuple[float, ...] = ()

    @property
    def gamma(self) -> float:
        return self.config.coupling_rate

    @property
    def amplitudes(self) -> tuple[float, ...]:
        return tuple(p.amplitude for p in self.config.pumps)

    @property
    def phases(self) -> tuple[float, ...]:
        return tuple(float(wrap_phase(p.phase)) for p in self.config.pumps)

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma, "amplitudes": list(self.amplitudes), "phases": list(self.phases),
            "free": list(self.free), "objective": self.objective,
            "initial_objective": self.initial_objective, "iterations": self.iterations,
            "evaluations": self.evaluations, "converged": self.converged,
        }


def fit(measured: MeasuredScattering, initial: ModelConfig, free: Iterable[str] | None = None, *,
        restarts: int = 5, seed: int = 0, metric: str = "magnitude", max_iterations: int = 20000,
        xatol: float = 1e-10, fatol: float = 1e-22, restart_scale: float = 0.05) -> FitResult:
    """Nelder-Mead fit of ``gamma``, pump amplitudes and phases to ``measured``.

    Amplitudes and ``gamma`` are optimized in log space.  The first run starts
    at ``initial``; each further run restarts from the best point so far,
    jittered by ``restart_scale`` with a seeded generator, so results are
    deterministic for a given seed.  Phases are wrapped into (-pi, pi] at the
    end.  ``history`` lists the best objective after every accepted simplex
    iteration, across all runs.
    """
    if metric not in ("magnitude", "complex"):
        raise ConfigurationError("metric must be 'magnitude' or 'complex'")
    names = tuple(default_free(initial) if free is None else free)
    params = _parse_free(initial, names)
    base_obj = objective(initial, measured, metric)
    if not math.isfinite(base_obj):
        raise NumericalError("objective is not finite at the initial parameters")

    def residual(cfg):
        target = measured.complex() if metric == "complex" else measured.magnitude
        return _model_block(cfg, measured, metric) - target

    if not params:
        return FitResult(initial, (), base_obj, base_obj, 0, 1, True, residual(initial), (base_obj,))

    evaluations = 0

    def f(x):
        nonlocal evaluations
        evaluations += 1
        value = objective(_decode(initial, params, x), measured, metric)
        if not math.isfinite(value):
            raise NumericalError(f"non-finite objective at parameters {dict(zip(names, x))}")
        return value

    rng = np.random.default_rng(seed)
    x_best = _encode(initial, params)
    f_best = base_obj
    history = [base_obj]
    iterations, converged = 0, False

    def record(intermediate_result):
        history.append(min(history[-1], float(intermediate_result.fun)))

    for run in range(max(1, restarts)):
        start = x_best if run == 0 else x_best + restart_scale * rng.standard_normal(x_best.size)
        res = scipy.optimize.minimize(
            f, start, method="Nelder-Mead", callback=record,
            options={"maxiter": max_iterations, "xatol": xatol, "fatol": fatol, "adaptive": True})
        iterations += int(res.nit)
        if res.fun < f_best or run == 0:
            converged = bool(res.success)
        if res.fun < f_best:
            x_best, f_best = np.array(res.x), float(res.fun)
    fitted = _decode(initial, params, x_best)
    pumps = tuple(p.__class__(p.kind, p.offset, p.amplitude, float(wrap_phase(p.phase)))
                  for p in fitted.pumps)
    fitted = fitted.replace(pumps=pumps)
    return FitResult(fitted, names, f_best, base_obj, iterations, evaluations, converged,
                     residual(fitted), tuple(history))
