"""Command line entry point: ``mwgrav <subcommand> [--config file.json] [overrides]``.

Exit status is 0 on success, 2 for an invalid configuration and 3 when a
numerical-validity check fails (partial results are still written and
labeled). Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np
from pydantic import ValidationError

from . import fisher
from .grid import NumericalValidityError, natural_units
from .io import (
    AMU,
    HBAR_SI,
    RunConfig,
    atomic_write,
    load_config,
    trace_to_csv,
    trace_to_json,
    write_table,
    write_trace,
)
from .sequences import (
    build_preset,
    default_times,
    preset_experiment,
    pulse_duration_sweep,
    resolution_sweep,
    run_sequence,
    scan,
)
from .wavepacket import dump_state

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SCAN_COMMANDS = {
    "scan-kc": "kc",
    "scan-kc-chirped": "kc_chirped",
    "scan-ramsey": "ramsey",
    "scan-trap": "trap",
}
COMMANDS = tuple(SCAN_COMMANDS) + ("resolution-sweep", "pulse-duration", "state-dump", "validate")


class ConfigError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mwgrav", description="Matterwave gravimeter Fisher-information runs")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--preset", choices=("kc", "kc_chirped", "ramsey", "trap"))
    parser.add_argument("--output", "-o", help="output path (stdout if omitted)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--t-pi", type=float, dest="t_pi")
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--points", type=int)
    parser.add_argument("--n-points", type=int, dest="n_points")
    parser.add_argument("--dg", type=float)
    parser.add_argument("--t", type=float, dest="t_over_tpi", default=2.0,
                        help="state-dump time in units of T_pi")
    parser.add_argument("--si", action="store_true", help="also report SI equivalents")
    return parser


def _overrides(args) -> dict:
    out = {}
    pairs = [
        ("preset", args.preset),
        ("output.path", args.output),
        ("output.format", args.format),
        ("timing.t_pi", args.t_pi),
        ("state.sigma", args.sigma),
        ("timing.points", args.points),
        ("grid.n_points", args.n_points),
        ("fisher.dg", args.dg),
    ]
    for key, value in pairs:
        if value is not None:
            out[key] = value
    if args.command in SCAN_COMMANDS:
        out["preset"] = SCAN_COMMANDS[args.command]
    return out


def si_report(cfg: RunConfig) -> dict:
    """Natural-unit quantities converted with the configured laboratory ``k0`` and mass."""
    length, time = natural_units(cfg.si.k0, cfg.si.mass_amu * AMU, HBAR_SI)
    momentum = HBAR_SI * cfg.si.k0
    return {
        "length_unit_m": length,
        "time_unit_s": time,
        "sigma_m": cfg.state.sigma * length,
        "t_pi_s": cfg.timing.t_pi * time,
        "momentum_unit_kg_m_s": momentum,
        "fisher_unit_s4_per_m2": (cfg.si.k0 * (cfg.timing.t_pi * time) ** 2) ** 2,
    }


def derived_quantities(cfg: RunConfig) -> dict:
    exp = preset_experiment(cfg.preset, cfg.experiment())
    grid = exp.grid
    times = _times(cfg, exp)
    t_grav = max(build_preset(cfg.preset, exp, t).gravity_time for t in times)
    return {
        "momentum_width": cfg.physical.hbar / (math.sqrt(2.0) * cfg.state.sigma),
        "dz": grid.dz,
        "dp": grid.dp,
        "nyquist_momentum": grid.p_max,
        "dg": cfg.fisher.dg if cfg.fisher.dg is not None else fisher.default_dg(t_grav, cfg.physical.k0),
        "fisher_unit": fisher.fq_semiclassical(cfg.physical.k0, cfg.timing.t_pi),
        "trap_omega": exp.trap_omega,
        "scan_rows": len(times),
    }


def _times(cfg: RunConfig, exp) -> np.ndarray:
    if cfg.timing.times_over_tpi is not None:
        return np.asarray(cfg.timing.times_over_tpi, float) * cfg.timing.t_pi
    return default_times(cfg.preset, exp, cfg.timing.points, cfg.timing.trap_points)


def _emit(text: str, path) -> None:
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = cfg.output
    if cfg.pulses.kind == "finite" and args.command != "pulse-duration":
        raise ConfigError("finite pulses are only supported by the pulse-duration command")

    if args.command == "validate":
        doc = {"config": cfg.model_dump(), "derived": derived_quantities(cfg)}
        if args.si:
            doc["si"] = si_report(cfg)
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", out.path)
        return EXIT_OK

    exp = preset_experiment(cfg.preset, cfg.experiment())
    if args.command in SCAN_COMMANDS:
        trace = scan(cfg.preset, _times(cfg, exp), cfg.fisher.bases, cfg.fisher.dg, exp)
        if args.si:
            trace.metadata["si"] = si_report(cfg)
        trace.metadata["partial"] = not trace.valid
        if out.path:
            write_trace(trace, out.format, out.path)
        else:
            sys.stdout.write(trace_to_csv(trace) if out.format == "csv" else trace_to_json(trace))
        if not trace.valid:
            bad = [d for d in trace.diagnostics if d.get("invalid")]
            return _fail("numerical", f"{len(bad)} invalid row(s); first: {bad[0]['message']}", EXIT_NUMERICAL)
        return EXIT_OK

    if args.command == "resolution-sweep":
        if cfg.preset not in ("kc", "ramsey"):
            raise ConfigError("resolution-sweep needs preset kc or ramsey")
        table = resolution_sweep(cfg.preset, cfg.resolution.sigma_p, exp, cfg.fisher.dg)
    elif args.command == "pulse-duration":
        if cfg.preset != "kc":
            raise ConfigError("pulse-duration runs the kc preset")
        deltas = [d * cfg.timing.t_pi for d in cfg.pulses.delta_t_over_tpi]
        table = pulse_duration_sweep(deltas, exp)
        table.columns["delta_t_over_Tpi"] = table.columns.pop("delta_t") / cfg.timing.t_pi
        table.columns["sequence_time_over_Tpi"] = table.columns.pop("sequence_time") / cfg.timing.t_pi
        table.columns = {k: table.columns[k] for k in
                         ("delta_t_over_Tpi", "sequence_time_over_Tpi", "FQ_numeric", "FC_pop", "FC_pos", "FC_mom")}
    elif args.command == "state-dump":
        seq = build_preset(cfg.preset, exp, args.t_over_tpi * cfg.timing.t_pi)
        state = run_sequence(seq, cfg.physical.g_offset, exp.initial())
        buf = io.StringIO()
        dump_state(state, buf)
        _emit(buf.getvalue(), out.path)
        return EXIT_OK
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown command {args.command}")

    if args.si:
        table.metadata["si"] = si_report(cfg)
    if out.path:
        write_table(table, out.format, out.path)
    else:
        names = list(table.columns)
        lines = [",".join(names)] + [
            ",".join("%.9g" % v for v in row) for row in zip(*(table.columns[n] for n in names))
        ]
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return run(args)
    except (ValidationError, ValueError, FileNotFoundError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    except NumericalValidityError as exc:
        return _fail("numerical", str(exc), EXIT_NUMERICAL)


if __name__ == "__main__":
    sys.exit(main())
