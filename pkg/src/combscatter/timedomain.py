"""Time-domain oracle: integrate the driven resonator, lock-in demodulate the output.

Phasors follow the ``exp(+i*omega*t)`` convention of the coupled-mode
matrix, so the integrated field ``x(t)`` is the complex conjugate of the
usual ``exp(-i*omega*t)`` resonator amplitude::

    dx/dt = i*(omega_r + i*gamma/2)*x + 2i*omega0*p(t)*(x + conj(x)) + sqrt(gamma)*x_in(t)
    x_out = sqrt(gamma)*x - x_in

with ``omega_r = omega0 - detuning_offset`` and ``p(t) = sum_k p_k cos(Omega_k t +
phi_k)``.  The factor 2 in front of the pump term makes the resonant part of
each cosine equal to the matrix coupling ``g_k = omega0*p_k*exp(i*phi_k)/gamma``.

By default the equation is solved in the frame rotating at ``omega0``
(``y = x*exp(-i*omega0*t)``), where the ``conj(x)`` term picks up an explicit
``exp(-2i*omega0*t)`` factor.  The counter-rotating term is kept exactly, so the
step must still resolve the ``2*omega0`` scale whenever pumps are present.
Steps are fixed and every measurement window ``T = 2*pi/spacing`` holds an
integer number of them, which makes the discrete demodulation exactly
orthogonal across comb bins.

A single probe of complex amplitude ``A`` at mode ``p`` returns
``S[m, p]*A + S[m, p*]*conj(A)`` in bin ``m``.  Two probes (``A = 1`` and ``A = i``)
separate the two terms; this is the default.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from ._io import fmt_float, writable_path
from .cmt_matrix import amplitude_labels
from .errors import ConfigurationError, InstabilityError
from .model import ModelConfig, PumpKind, pump_frequency
from .scattering import ScatteringMatrix

__all__ = [
    "SimulationSpec",
    "Trajectory",
    "Demodulation",
    "integrate",
    "demodulate",
    "demodulate_samples",
    "s_column_timedomain",
    "s_matrix_timedomain",
    "write_trajectory_csv",
]

MIN_OVERSAMPLING = 20
_COMMENSURATE_TOL = 1e-9


@numba.njit(cache=True, nogil=True)
def _coefficients(t, p, w, phi, two_w0, rot, conj_on, wd):
    """Time-dependent factors at ``t``: (c1, c2, exp(i*wd*t))."""
    s = 0.0
    for j in range(p.shape[0]):
        s += p[j] * math.cos(w[j] * t + phi[j])
    c1 = 1j * two_w0 * s
    c2 = c1 * complex(math.cos(rot * t), -math.sin(rot * t)) if conj_on else 0j
    return c1, c2, complex(math.cos(wd * t), math.sin(wd * t))


@numba.njit(cache=True, nogil=True)
def _rk4(lam, p, w, phi, two_w0, rot, conj_on, sg, amp, wd, dt, n_steps, rec_start, stride,
         n_rec, guard, rec_y, rec_out):
    """Fixed-step RK4 for a batch of independent probes sharing one drive frequency.

    Records every ``stride`` steps from ``rec_start``.  Returns -1 on success
    or the step index at which some ``|y|`` passed ``guard``.
    """
    n_p = amp.shape[0]
    y = np.zeros(n_p, dtype=np.complex128)
    r = 0
    h = 0.5 * dt
    for n in range(n_steps + 1):
        t = n * dt
        a1, b1, e1 = _coefficients(t, p, w, phi, two_w0, rot, conj_on, wd)
        if n >= rec_start and (n - rec_start) % stride == 0 and r < n_rec:
            for k in range(n_p):
                rec_y[r, k] = y[k]
                rec_out[r, k] = sg * y[k] - amp[k] * e1
            r += 1
        if n == n_steps:
            break
        a2, b2, e2 = _coefficients(t + h, p, w, phi, two_w0, rot, conj_on, wd)
        a3, b3, e3 = _coefficients(t + dt, p, w, phi, two_w0, rot, conj_on, wd)
        l1, l2, l3 = lam + a1, lam + a2, lam + a3
        bad = False
        for k in range(n_p):
            yk = y[k]
            d = sg * amp[k]
            k1 = l1 * yk + b1 * yk.conjugate() + d * e1
            u = yk + h * k1
            k2 = l2 * u + b2 * u.conjugate() + d * e2
            u = yk + h * k2
            k3 = l2 * u + b2 * u.conjugate() + d * e2
            u = yk + dt * k3
            k4 = l3 * u + b3 * u.conjugate() + d * e3
            yk = yk + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            y[k] = yk
            if not abs(yk) < guard:
                bad = True
        if bad:
            return n
    return -1


def _is_integer(x: float) -> bool:
    return abs(x - round(x)) <= _COMMENSURATE_TOL * max(1.0, abs(x))


@dataclass(frozen=True)
class SimulationSpec:
    """One probe experiment.

    ``windows`` full measurement windows are averaged after
    ``transient_windows`` (default: enough windows to cover twenty amplitude
    decay times ``2/gamma``).  The step is ``T / steps_per_window``; by default
    ``steps_per_window`` resolves the fastest frequency with ``oversampling``
    points per period.
    """

    config: ModelConfig
    input_mode: int
    input_amplitude: complex = 1.0
    windows: int = 4
    transient_windows: int | None = None
    oversampling: int = 32
    steps_per_window: int | None = None
    lab_frame: bool = False
    conjugate_term: bool = True
    record_stride: int | None = None
    divergence_guard: float = 1e6
    allow_coarse: bool = False

    def __post_init__(self):
        comb = self.config.comb
        if int(self.input_mode) not in self.config.mode_indices:
            raise ConfigurationError(f"probe mode {self.input_mode} is not in the basis")
        object.__setattr__(self, "input_mode", int(self.input_mode))
        object.__setattr__(self, "input_amplitude", complex(self.input_amplitude))
        if self.windows < 1:
            raise ConfigurationError("need at least one averaging window")
        if self.oversampling < MIN_OVERSAMPLING and not self.allow_coarse:
            raise ConfigurationError(f"oversampling must be >= {MIN_OVERSAMPLING}")
        ratio = comb.center_frequency / comb.spacing
        if self.lab_frame and not _is_integer(ratio):
            raise ConfigurationError("lab-frame runs need center/spacing to be an integer")
        if self._fast_terms() and not _is_integer(2 * ratio):
            raise ConfigurationError(
                "2*center/spacing must be an integer for commensurate windows")
        if self.steps_per_window is not None:
            n = int(self.steps_per_window)
            if n != self.steps_per_window or n < 1:
                raise ConfigurationError("steps_per_window must be a positive integer")
            if n < self.required_steps() and not self.allow_coarse:
                raise ConfigurationError(
                    f"steps_per_window={n} under-resolves the fastest frequency "
                    f"(need >= {self.required_steps()})")

    def _fast_terms(self) -> bool:
        pumps = self.config.pumps
        return bool(pumps) and (self.conjugate_term or any(p.kind is PumpKind.HIGH for p in pumps))

    # timing ---------------------------------------------------------------

    @property
    def period(self) -> float:
        return self.config.comb.period

    def omega_max(self) -> float:
        """Fastest angular frequency present in the integrated equation."""
        cfg, comb = self.config, self.config.comb
        edge = max(abs(m) for m in cfg.mode_indices) * comb.spacing + abs(cfg.detuning_offset)
        pumps = [pump_frequency(p, comb) for p in cfg.pumps]
        w0 = comb.center_frequency
        if self.lab_frame:
            fast = w0 + edge + (max(pumps) if pumps else 0.0)
        else:
            fast = max([edge] + pumps)
            if pumps and self.conjugate_term:
                fast = max(fast, max(abs(wp - 2 * w0) for wp in pumps),
                           max(wp + 2 * w0 for wp in pumps))
        return max(fast, cfg.coupling_rate / 2, comb.spacing)

    def required_steps(self) -> int:
        return int(math.ceil(MIN_OVERSAMPLING * self.omega_max() / self.config.comb.spacing))

    @property
    def stride(self) -> int:
        if self.record_stride is not None:
            return max(1, int(self.record_stride))
        return max(1, self.oversampling // 4)

    @property
    def samples_per_window(self) -> int:
        if self.steps_per_window is not None:
            n = int(self.steps_per_window)
        else:
            n = int(math.ceil(self.oversampling * self.omega_max() / self.config.comb.spacing))
            n = max(n, 256)
        stride = self.stride
        return -(-n // stride)

    @property
    def window_steps(self) -> int:
        n = self.samples_per_window * self.stride
        if self.steps_per_window is not None and n != self.steps_per_window:
            raise ConfigurationError("record_stride must divide steps_per_window")
        return n

    @property
    def dt(self) -> float:
        return self.period / self.window_steps

    @property
    def discard_windows(self) -> int:
        if self.transient_windows is not None:
            return max(0, int(self.transient_windows))
        decay = 20 * 2 / self.config.coupling_rate
        return max(1, int(math.ceil(decay / self.period)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded field and output over the averaging windows.

    ``a`` and ``out`` have shape ``(samples, probes)``.  In the rotating frame
    they are the envelopes ``x*exp(-i*omega0*t)``; ``frame_frequency`` says
    which frame was used (``omega0`` or 0).
    """

    t: np.ndarray
    a: np.ndarray
    out: np.ndarray
    samples_per_window: int
    frame_frequency: float
    probes: tuple[complex, ...] = field(default=())

    @property
    def windows(self) -> int:
        return self.t.shape[0] // self.samples_per_window


def _physical_pumps(config: ModelConfig):
    comb = config.comb
    p = np.array([tone.amplitude for tone in config.pumps], dtype=float)
    w = np.array([pump_frequency(tone, comb) for tone in config.pumps], dtype=float)
    phi = np.array([tone.phase for tone in config.pumps], dtype=float)
    return p, w, phi


def _run(spec: SimulationSpec, amplitudes: np.ndarray) -> Trajectory:
    cfg, comb = spec.config, spec.config.comb
    gamma = cfg.coupling_rate
    w0 = comb.center_frequency
    p, w, phi = _physical_pumps(cfg)
    offset = spec.input_mode * comb.spacing
    if spec.lab_frame:
        lam = complex(-gamma / 2, w0 - cfg.detuning_offset)
        rot, frame, wd = 0.0, 0.0, w0 + offset
    else:
        lam = complex(-gamma / 2, -cfg.detuning_offset)
        rot, frame, wd = 2 * w0, w0, offset
    n_win = spec.window_steps
    start = spec.discard_windows * n_win
    n_steps = start + spec.windows * n_win
    stride = spec.stride
    n_rec = spec.windows * spec.samples_per_window
    amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
    rec_y = np.zeros((n_rec, amps.shape[0]), dtype=np.complex128)
    rec_o = np.zeros_like(rec_y)
    status = _rk4(lam, p, w, phi, 2 * w0, rot, spec.conjugate_term, math.sqrt(gamma), amps, wd,
                  spec.dt, n_steps, start, stride, n_rec, spec.divergence_guard * max(1.0, np.abs(amps).max()),
                  rec_y, rec_o)
    if status >= 0:
        raise InstabilityError(
            f"field diverged at t = {status * spec.dt:.4g} (|a| > guard "
            f"{spec.divergence_guard:.3g}); the pumps are likely above the parametric "
            f"oscillation threshold")
    t = (start + stride * np.arange(n_rec)) * spec.dt
    return Trajectory(t, rec_y, rec_o, spec.samples_per_window, frame, tuple(amps))


def integrate(spec: SimulationSpec) -> Trajectory:
    """Integrate one probe run; arrays have a single probe column."""
    return _run(spec, np.array([spec.input_amplitude]))


@dataclass(frozen=True)
class Demodulation:
    modes: tuple[int, ...]
    amplitudes: np.ndarray          # (modes, probes)

    def __getitem__(self, mode: int):
        return self.amplitudes[self.modes.index(int(mode))]


def demodulate_samples(t, signal, frequencies, samples_per_window: int) -> np.ndarray:
    """Project ``signal`` onto ``exp(+i*f*t)`` for each ``f``; returns ``(len(f), ...)``.

    ``len(t)`` must be an integer multiple of ``samples_per_window``.
    """
    t = np.asarray(t, dtype=float)
    signal = np.asarray(signal, dtype=complex)
    if samples_per_window < 1 or t.shape[0] % samples_per_window:
        raise ConfigurationError("record does not span an integer number of windows")
    freqs = np.asarray(frequencies, dtype=float)
    phase = np.exp(-1j * np.outer(freqs, t))
    sig = signal.reshape(t.shape[0], -1)
    out = phase @ sig / t.shape[0]
    return out.reshape((freqs.shape[0],) + signal.shape[1:])


def demodulate(record: Trajectory, comb, modes=None) -> Demodulation:
    """Lock-in amplitudes of ``record.out`` at the comb frequencies."""
    modes = tuple(comb.indices) if modes is None else tuple(int(m) for m in modes)
    freqs = [comb.mode_frequency(m) - record.frame_frequency for m in modes]
    amps = demodulate_samples(record.t, record.out, freqs, record.samples_per_window)
    return Demodulation(modes, amps)


def _column_from_bins(bins: np.ndarray, amps: np.ndarray, quadratures: int) -> tuple[np.ndarray, np.ndarray]:
    """Mode rows ``S[m, p]`` and anti-mode rows ``S[m*, p]`` from probe bins."""
    if quadratures == 1:
        return bins[:, 0] / amps[0], np.full(bins.shape[0], np.nan + 0j)
    # bins[:, 0] = X*A0 + Y*conj(A0), bins[:, 1] = X*A1 + Y*conj(A1)
    A = np.array([[amps[0], np.conj(amps[0])], [amps[1], np.conj(amps[1])]])
    sol = np.linalg.solve(A, bins[:, :2].T)
    X, Y = sol[0], sol[1]
    return X, np.conj(Y)


def _probe_amplitudes(spec: SimulationSpec, quadratures: int) -> np.ndarray:
    if quadratures not in (1, 2):
        raise ConfigurationError("quadratures must be 1 or 2")
    a = spec.input_amplitude
    if a == 0:
        raise ConfigurationError("probe amplitude must be nonzero")
    return np.array([a] if quadratures == 1 else [a, 1j * a])


def s_column_timedomain(spec: SimulationSpec, quadratures: int = 2) -> np.ndarray:
    """Column ``S[:, p]`` over ``amplitude_labels(config.mode_indices)``.

    With ``quadratures=1`` a single probe is used, the mode rows are
    ``bin / A`` and the anti-mode rows are NaN.
    """
    amps = _probe_amplitudes(spec, quadratures)
    traj = _run(spec, amps)
    modes = spec.config.mode_indices
    bins = demodulate(traj, spec.config.comb, modes).amplitudes
    mode_rows, anti_rows = _column_from_bins(bins, amps, quadratures)
    col = np.empty(2 * len(modes), dtype=complex)
    col[0::2] = mode_rows
    col[1::2] = anti_rows
    return col


def s_matrix_timedomain(config: ModelConfig, threads: int | None = None, **spec_options) -> ScatteringMatrix:
    """Full ``S`` by stepping the probe over every mode.

    Anti-mode input columns follow from ``S = Sigma conj(S) Sigma``.  Probe
    runs are independent and are spread over ``threads`` workers (the
    compiled integrator releases the GIL).
    """
    modes = config.mode_indices
    specs = [SimulationSpec(config, m, **spec_options) for m in modes]
    threads = threads or min(len(specs), os.cpu_count() or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(s_column_timedomain, specs))
    else:
        cols = [s_column_timedomain(s) for s in specs]
    labels = amplitude_labels(modes)
    n = len(labels)
    S = np.empty((n, n), dtype=complex)
    for j, col in enumerate(cols):
        S[:, 2 * j] = col
        partner = col.reshape(-1, 2)[:, ::-1].reshape(-1)
        S[:, 2 * j + 1] = np.conj(partner)
    return ScatteringMatrix(S, labels)


def write_trajectory_csv(traj: Trajectory, path=None, probe: int = 0, decimate: int = 1,
                         force: bool = False) -> str:
    """Debug dump ``t,re_a,im_a,re_out,im_out`` in the integration frame."""
    if decimate < 1:
        raise ValueError("decimate must be >= 1")
    lines = ["t,re_a,im_a,re_out,im_out"]
    for i in range(0, traj.t.shape[0], decimate):
        a, o = traj.a[i, probe], traj.out[i, probe]
        lines.append(",".join(fmt_float(x) for x in (traj.t[i], a.real, a.imag, o.real, o.imag)))
    text = "\n".join(lines) + "\n"
    if path is not None:
        writable_path(path, force).write_text(text)
    return text
