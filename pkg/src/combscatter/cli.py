"""``combscatter`` command line.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical error
(singular matrix, divergence, failed normalization), 3 I/O error (missing,
unreadable, malformed or existing output file).  Diagnostics go to stderr,
results to ``--output`` or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from ._io import fmt_float, writable_path
from .cmt_matrix import build_m, parse_label
from .config import apply_overrides, bundled_config, config_to_dict, dump_config, load_config_dict, parse_config
from .digraph import expand_symbolic
from .errors import ConfigurationError, NormalizationError, NumericalError, ParseError
from .interference import (loop_phase, predicted_transmission, primary_coupling, scheme_from_dict,
                           scheme_pumps, solve_scheme)
from .model import detect_loop_relations
from .scattering import scattering_matrix, write_csv, write_json
from .sweep_fit import SweepSpec, fit, full_scan, load_measured, measured_from_scan, sweep, write_measured

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class _Context:
    """Resolved config and output handling shared by every subcommand."""

    def __init__(self, args):
        self.args = args
        self.raw = _load_raw(args.config, args.set)
        self.config = parse_config(self.raw)

    @property
    def scheme(self):
        if "scheme" not in self.raw:
            raise ConfigurationError("config has no [scheme] section")
        return scheme_from_dict(self.raw["scheme"])

    def emit(self, text: str) -> None:
        if self.args.output is None:
            sys.stdout.write(text)
        else:
            writable_path(self.args.output, self.args.force).write_text(text)


def _resolve_config(name: str) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    try:
        return bundled_config(path.name)
    except FileNotFoundError:
        raise FileNotFoundError(f"config file {name} not found") from None


def _load_raw(name, overrides) -> dict:
    return apply_overrides(load_config_dict(_resolve_config(name)), overrides)


def _json(data) -> str:
    def clean(x):
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if isinstance(x, complex):
            return {"re": x.real, "im": x.imag}
        if isinstance(x, (np.floating, np.integer, np.bool_)):
            return x.item()
        if isinstance(x, float) and not np.isfinite(x):
            return None
        return x
    return json.dumps(clean(data), indent=1, sort_keys=False) + "\n"


def _records_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _pair(text: str):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigurationError(f"observable {text!r} must be 'out,in'")
    return parse_label(parts[0]), parse_label(parts[1])


# ------------------------------------------------------------ subcommands

def cmd_scatter(ctx: _Context) -> None:
    S = scattering_matrix(build_m(ctx.config))
    if ctx.args.mode_sector:
        S = S.mode_sector()
    ctx.emit(write_json(S) if ctx.args.format == "json" else write_csv(S))


def cmd_sweep(ctx: _Context) -> None:
    a = ctx.args
    if a.grid:
        grid = [float(x) for x in a.grid.split(",")]
    else:
        if a.start is None or a.stop is None:
            raise ConfigurationError("give --grid or both --start and --stop")
        grid = np.linspace(a.start, a.stop, a.num).tolist()
    if a.observable:
        obs = [_pair(x) for x in a.observable]
    else:
        sch = ctx.scheme
        obs = [(parse_label(o), parse_label(i)) for o, i in sch.forward() + sch.reverse()]
    spec = SweepSpec(ctx.config, a.parameter, a.pump, tuple(grid), tuple(obs), a.reference_pump)
    result = sweep(spec, threads=a.threads)
    if a.format == "json":
        ctx.emit(_json({"parameter": a.parameter, "pump": a.pump, "grid": result.grid.tolist(),
                        "traces_db": {f"S_{o}_{i}": result.trace(o, i).tolist() for o, i in obs},
                        "extrema": result.extrema(), "singular": result.singular.tolist()}))
    else:
        ctx.emit(result.to_csv())


def cmd_scan(ctx: _Context) -> None:
    S = full_scan(ctx.config, normalize=not ctx.args.raw)
    data = measured_from_scan(S, ctx.config)
    if ctx.args.format == "json":
        ctx.emit(_json({"modes": list(data.modes), "normalized": data.normalized,
                        "mag_db": data.magnitude_db.tolist()}))
    elif ctx.args.output is not None:
        write_measured(data, ctx.args.output, ctx.args.force)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["out\\in"] + [str(m) for m in data.modes])
        for m, row in zip(data.modes, data.magnitude_db):
            w.writerow([str(m)] + [fmt_float(v) for v in row])
        ctx.emit(buf.getvalue())


def cmd_expand(ctx: _Context) -> None:
    a = ctx.args
    subspace = a.subspace.split(",") if a.subspace else None
    names = None
    if "scheme" in ctx.raw:
        sch = ctx.scheme
        names = sch.names()
        if subspace is None:
            subspace = sch.subspace()
    exp = expand_symbolic(ctx.config, a.out_label, a.in_label, a.order, subspace, a.paper_sign)
    if a.format == "json":
        data = exp.to_dict()
        data["rendered_numerator"] = exp.render(names)
        data["rendered_determinant"] = exp.render(names, "determinant")
        ctx.emit(_json(data))
    else:
        rows = [("numerator", r["monomial"], r["order"], r["re"], r["im"])
                for r in exp.symbolic_numerator.to_records()]
        rows += [("determinant", r["monomial"], r["order"], r["re"], r["im"])
                 for r in exp.symbolic_determinant.to_records()]
        ctx.emit(_records_csv(["part", "monomial", "order", "re", "im"], rows))


def cmd_conditions(ctx: _Context) -> None:
    a = ctx.args
    sch = ctx.scheme
    cfg = ctx.config
    g = a.g if a.g is not None else primary_coupling(cfg, sch)
    cond = solve_scheme(sch, cfg.comb, cfg.coupling_rate, g, cfg.detuning_offset, a.order)
    record = cond.as_dict()
    record["predicted_reverse_transmission"] = predicted_transmission(cond)
    if cfg.pumps:
        rels = detect_loop_relations(cfg.pumps)
        if rels:
            record["configured_loop_phase"] = loop_phase(cfg.pumps, rels[0])
    if a.emit_config is not None:
        raw = dict(config_to_dict(cfg.replace(pumps=scheme_pumps(sch, cfg.comb, cfg.coupling_rate, g,
                                                                  cond, a.reverse))))
        raw["scheme"] = dict(ctx.raw["scheme"])
        writable_path(a.emit_config, a.force).write_text(dump_config(raw))
    if a.format == "csv":
        ctx.emit(_records_csv(["key", "value"], [(k, _scalar(v)) for k, v in record.items()]))
    else:
        ctx.emit(_json(record))


def _scalar(v):
    if isinstance(v, complex):
        return f"{fmt_float(v.real)}{'+' if v.imag >= 0 else '-'}{fmt_float(abs(v.imag))}j"
    if isinstance(v, bool):
        return str(v).lower()
    return float(v) if isinstance(v, (int, float)) else str(v)


def cmd_simulate(ctx: _Context) -> None:
    from .timedomain import (SimulationSpec, integrate, s_column_timedomain, s_matrix_timedomain,
                             write_trajectory_csv)
    from .cmt_matrix import amplitude_labels

    a = ctx.args
    options = {"windows": a.windows, "oversampling": a.oversampling, "lab_frame": a.lab_frame,
               "conjugate_term": not a.rwa}
    if a.transient_windows is not None:
        options["transient_windows"] = a.transient_windows
    if a.input_mode is None:
        S = s_matrix_timedomain(ctx.config, threads=a.threads, **options)
    else:
        spec = SimulationSpec(ctx.config, a.input_mode, **options)
        col = s_column_timedomain(spec)
        labels = amplitude_labels(ctx.config.mode_indices)
        if a.trajectory is not None:
            write_trajectory_csv(integrate(spec), a.trajectory, decimate=a.decimate, force=a.force)
        rows = [(str(lab), fmt_float(z.real), fmt_float(z.imag)) for lab, z in zip(labels, col)]
        if a.format == "json":
            ctx.emit(_json({"input": str(a.input_mode),
                            "column": {str(lab): complex(z) for lab, z in zip(labels, col)}}))
        else:
            ctx.emit(_records_csv(["out_label", "re", "im"], rows))
        return
    ctx.emit(write_json(S) if a.format == "json" else write_csv(S))


def cmd_fit(ctx: _Context) -> None:
    a = ctx.args
    measured = load_measured(a.measured)
    free = a.free.split(",") if a.free else None
    result = fit(measured, ctx.config, free, restarts=a.restarts, seed=a.seed,
                 metric="complex" if a.complex else "magnitude", max_iterations=a.max_iterations)
    if a.fitted_config is not None:
        raw = config_to_dict(result.config)
        if "scheme" in ctx.raw:
            raw["scheme"] = dict(ctx.raw["scheme"])
        writable_path(a.fitted_config, a.force).write_text(dump_config(raw))
    record = result.as_dict()
    if a.format == "csv":
        rows = [("gamma_hz", result.gamma / (2 * np.pi))]
        rows += [(f"p{k}", p) for k, p in enumerate(result.amplitudes, start=1)]
        rows += [(f"phi{k}", ph) for k, ph in enumerate(result.phases, start=1)]
        rows += [("objective", result.objective), ("iterations", result.iterations),
                 ("converged", str(result.converged).lower())]
        ctx.emit(_records_csv(["parameter", "value"], rows))
    else:
        record["gamma_hz"] = result.gamma / (2 * np.pi)
        ctx.emit(_json(record))


def cmd_relations(ctx: _Context) -> None:
    pumps = ctx.config.pumps
    rels = detect_loop_relations(pumps, max_multiplicity=ctx.args.max_multiplicity)
    rows = [(r.describe(), r.target + 1, loop_phase(pumps, r)) for r in rels]
    if ctx.args.format == "json":
        ctx.emit(_json([{"relation": d, "target_pump": t, "loop_phase": ph} for d, t, ph in rows]))
    else:
        ctx.emit(_records_csv(["relation", "target_pump", "loop_phase"], rows))


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="config file path, or the name of a bundled config (isolator.cfg ...)")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. pumps.2.phase_rad=1.0 (repeatable)")
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    common.add_argument("--force", action="store_true", help="overwrite existing output files")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized steps")

    parser = _Parser(prog="combscatter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("scatter", parents=[common], help="frequency-domain S matrix")
    p.add_argument("--mode-sector", action="store_true", help="only mode-in/mode-out elements")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("sweep", parents=[common], help="sweep a pump phase, amplitude or p_rel")
    p.add_argument("--parameter", choices=("phase", "amplitude", "p_rel"), required=True)
    p.add_argument("--pump", type=int, required=True, help="1-based pump index")
    p.add_argument("--reference-pump", type=int, default=None, help="reference for p_rel")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--num", type=int, default=101)
    p.add_argument("--grid", help="explicit comma-separated grid")
    p.add_argument("--observable", action="append", metavar="OUT,IN",
                   help="element to record, e.g. 2,0 (default: scheme forward and reverse)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scan", parents=[common], help="mode-sector |S| in dB, pump-off normalized")
    p.add_argument("--raw", action="store_true", help="skip the pump-off normalization")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("expand", parents=[common], help="truncated symbolic digraph expansion")
    p.add_argument("--out", dest="out_label", required=True, help="output amplitude, e.g. 2 or -1*")
    p.add_argument("--in", dest="in_label", required=True, help="input amplitude")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--subspace", help="comma-separated amplitudes (default: scheme subspace)")
    p.add_argument("--paper-sign", action="store_true",
                   help="negate numerator and determinant (S unchanged)")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("conditions", parents=[common], help="interference conditions of the scheme")
    p.add_argument("--g", type=float, default=None, help="primary coupling (default: from config)")
    p.add_argument("--order", type=int, choices=(2, 3), default=2)
    p.add_argument("--reverse", action="store_true", help="emit pumps for the reverse null")
    p.add_argument("--emit-config", metavar="PATH", help="write a config realizing the conditions")
    p.set_defaults(func=cmd_conditions)

    p = sub.add_parser("simulate", parents=[common], help="time-domain oracle")
    p.add_argument("--input-mode", type=int, default=None, help="single probe column (default: all)")
    p.add_argument("--windows", type=int, default=4)
    p.add_argument("--transient-windows", type=int, default=None)
    p.add_argument("--oversampling", type=int, default=32)
    p.add_argument("--lab-frame", action="store_true")
    p.add_argument("--rwa", action="store_true", help="drop the conjugate-amplitude pump term")
    p.add_argument("--trajectory", metavar="PATH", help="debug CSV dump of the probe run")
    p.add_argument("--decimate", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="fit gamma, pump amplitudes and phases")
    p.add_argument("--measured", required=True, help="square dB CSV (with optional .meta.toml)")
    p.add_argument("--free", help="comma-separated free parameters: gamma,p1,phi3,...")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--max-iterations", type=int, default=20000)
    p.add_argument("--complex", action="store_true", help="complex distance (needs phases)")
    p.add_argument("--fitted-config", metavar="PATH", help="write the fitted config")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("relations", parents=[common], help="pump frequency loop relations")
    p.add_argument("--max-multiplicity", type=int, default=2)
    p.set_defaults(func=cmd_relations)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        args.func(_Context(args))
    except (ParseError, OSError) as exc:
        print(f"combscatter: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, NormalizationError) as exc:
        print(f"combscatter: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, ValueError, KeyError) as exc:
        print(f"combscatter: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
