"""Command-line interface.

Subcommands::

    modalkit simulate             write a synthetic scenario CSV
    modalkit analyze              fit DMD/DMDc and write a JSON stability report
    modalkit study-normalization  compare DMD/DMDc on raw and z-scored data
    modalkit modes                print the mode table of a saved report

``analyze`` exits 0 (Stable), 10 (Critical) or 20 (Unstable); errors exit
with 64 or above.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, numerics, simulator
from .analysis import AnalysisConfig, run_analysis
from .errors import ConfigError, IoError, ModalkitError, SchemaMismatch
from .snapshots import Role, TimeSeries, ingest_csv, read_header, write_csv
from .stability import SCHEMA_VERSION

RAILWAY_DT = 4e-4
RAILWAY_DURATION = 2.0
RAILWAY_X0 = (0.0, 170.0)


def _split(text):
    return tuple(x.strip() for x in text.split(",") if x.strip()) if text else ()


def _flag_error(flag, exc):
    return ConfigError(f"{flag}: {exc}")


def parse_duty(text: str):
    kind, _, rest = text.partition(":")
    try:
        args = [float(x) for x in rest.split(":")] if rest else []
        if kind == "const" and len(args) == 1:
            return simulator.Constant(args[0])
        if kind == "sine" and len(args) == 3:
            return simulator.SineModulated(*args)
    except (ValueError, ModalkitError) as exc:
        raise _flag_error("--duty", exc) from None
    raise ConfigError(f"--duty: expected const:<d> or sine:<mean>:<amp>:<hz>, got {text!r}")


def parse_plant(specs):
    modes = []
    for text in specs:
        for item in text.split(","):
            parts = item.strip().split(":")
            try:
                if not 1 <= len(parts) <= 4:
                    raise ValueError("expected freq[:sigma[:amp[:phase]]]")
                modes.append(simulator.PlantedMode(*(float(p) for p in parts)))
            except ValueError as exc:
                raise _flag_error("--plant", f"{item!r}: {exc}") from None
    return modes


def parse_rank(text, flag):
    try:
        return numerics.parse_rank_policy(text)
    except ValueError as exc:
        raise _flag_error(flag, exc) from None


def _write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from None


def _check_writable(path, flag):
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise IoError(f"{flag} {path}: directory {parent} does not exist")


# ---------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    _check_writable(args.out, "--out")
    seed = simulator.default_seed() if args.seed is None else args.seed
    if args.plant:
        modes = parse_plant(args.plant)
        dt = args.dt or RAILWAY_DT
        n = args.n or int(round((args.duration or RAILWAY_DURATION) / dt)) + 1
        if args.forced:
            system = simulator.planted_system(modes, dt, n_inputs=1, seed=seed)
            t = dt * np.arange(n)
            u = args.input_amp * np.sin(2 * np.pi * args.input_freq * t)
            series = simulator.simulate(system, u[None, :], method=args.method)
        else:
            series = simulator.plant_modes(modes, dt, n, channels=args.channels, seed=seed)
    else:
        if args.preset not in (None, "railway"):
            raise ConfigError(f"--preset: unknown preset {args.preset!r}")
        dt = args.dt or RAILWAY_DT
        n = args.n or int(round((args.duration or RAILWAY_DURATION) / dt)) + 1
        duty = parse_duty(args.duty)
        try:
            params = simulator.ConverterParams(
                R_n=args.rn, L_n=args.ln, C_d=args.cd, R_d=args.rd, L_g=args.lg, duty=duty,
                u_n=simulator.Sinusoid(args.un_amp, args.un_freq, 0.0))
        except ModalkitError as exc:
            raise ConfigError(f"converter parameters: {exc}") from None
        x0 = RAILWAY_X0 if args.x0 is None else tuple(float(v) for v in _split(args.x0))
        if len(x0) != 2:
            raise ConfigError(f"--x0: expected two values i_n,u_dc, got {args.x0!r}")
        method = "rk4" if isinstance(duty, simulator.SineModulated) else args.method
        series = simulator.simulate_converter(params, dt, n, x0=x0, method=method,
                                              input_node=args.input_node)
    if args.snr is not None:
        series = simulator.add_noise(series, args.snr, seed=seed)
    try:
        write_csv(series, args.out)
    except OSError as exc:
        raise IoError(f"--out {args.out}: {exc.strerror or exc}") from None
    roles = ", ".join(f"{c.name} ({c.role.value})" for c in series.channels)
    print(f"wrote {series.n} samples of {roles} to {args.out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- analyze

def _config_from_args(args, method=None) -> AnalysisConfig:
    policy_p = parse_rank(args.rank_p or args.rank, "--rank-p" if args.rank_p else "--rank")
    policy_r = parse_rank(args.rank_r, "--rank-r") if args.rank_r else None
    return AnalysisConfig(
        method=method or args.method, state_channels=_split(args.states),
        input_channels=_split(args.inputs), stack_s=args.stack,
        rank_policy_p=policy_p, rank_policy_r=policy_r, critical_band=args.band,
        normalize=getattr(args, "normalize", "none"))


def load_series(path) -> TimeSeries:
    path = Path(path)
    if not path.is_file():
        raise IoError(f"--data {path}: no such file")
    return ingest_csv(path, {name: Role.STATE for name in read_header(path)})


def write_plot_data(result, directory):
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / "eigenvalues.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "re", "im", "magnitude", "frequency_hz", "sigma",
                        "integral_contribution", "classification"])
            for m in result.report.modes:
                for z in m.eigenvalues:
                    w.writerow([m.index, repr(z.real), repr(z.imag), repr(abs(z)),
                                repr(m.frequency_hz), repr(m.continuous_sigma),
                                repr(m.integral_contribution), m.classification.value])
        with (directory / "singular_values.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["svd", "index", "value", "retained"])
            for k, (spectrum, kept) in enumerate(zip(result.decomposition.spectra,
                                                     result.decomposition.singular_values)):
                for i, value in enumerate(spectrum):
                    w.writerow([k, i, repr(float(value)), int(i < len(kept))])
        write_reconstruction(result, directory / "reconstruction.csv")
    except OSError as exc:
        raise IoError(f"--plot-dir {directory}: {exc.strerror or exc}") from None


def write_reconstruction(result, path):
    series, recon = result.series, result.reconstruction
    names = series.names_with_role(Role.STATE)
    t = series.times()
    measured = series.matrix(Role.STATE)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *names, *(f"{n}_reconstructed" for n in names)])
        for j in range(series.n):
            w.writerow([repr(float(t[j])), *(repr(float(v)) for v in measured[:, j]),
                        *(repr(float(v)) for v in recon[:, j])])


def _analyze(args, config):
    series = load_series(args.data)
    return run_analysis(series, config)


def cmd_analyze(args) -> int:
    config = _config_from_args(args)
    for flag in ("out", "reconstruct"):
        if getattr(args, flag):
            _check_writable(getattr(args, flag), f"--{flag}")
    result = _analyze(args, config)
    text = result.report.to_json()
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if args.reconstruct:
        try:
            write_reconstruction(result, args.reconstruct)
        except OSError as exc:
            raise IoError(f"--reconstruct {args.reconstruct}: {exc.strerror or exc}") from None
    if args.plot_dir:
        write_plot_data(result, args.plot_dir)
    return result.report.verdict.exit_code


# ---------------------------------------------------------- study-normalization

def _eigs_json(values):
    return [{"re": float(z.real), "im": float(z.imag)} for z in values]


def cmd_study_normalization(args) -> int:
    if not args.inputs:
        raise ConfigError("--inputs is required: the study compares DMD with DMDc")
    base = _config_from_args(args, method="dmdc")
    series = load_series(args.data)
    dmd_states = base.state_channels + base.input_channels if base.state_channels else ()
    variants = {}
    warnings = []
    for norm in ("none", "zscore"):
        for method in ("dmd", "dmdc"):
            if method == "dmd":
                config = AnalysisConfig(method="dmd", state_channels=dmd_states, stack_s=base.stack_s,
                                        rank_policy_p=base.rank_policy_p, critical_band=base.critical_band,
                                        normalize=norm)
            else:
                config = AnalysisConfig(method="dmdc", state_channels=base.state_channels,
                                        input_channels=base.input_channels, stack_s=base.stack_s,
                                        rank_policy_p=base.rank_policy_p,
                                        rank_policy_r=base.rank_policy_r,
                                        critical_band=base.critical_band, normalize=norm)
            result = run_analysis(series, config)
            for w in result.warnings:
                if w not in warnings:
                    warnings.append(w)
            key = f"{method}_{'raw' if norm == 'none' else 'zscore'}"
            variants[key] = {
                "method": method,
                "normalize": norm,
                "state_channels": list(result.snapshots.state_names),
                "input_channels": list(result.snapshots.input_names),
                "eigenvalues": _eigs_json(result.decomposition.eigenvalues),
                "reconstruction_error": result.reconstruction_error,
                "report": result.report.to_dict(),
            }
    out = {"schema": SCHEMA_VERSION, "study": "normalization", "stack": base.stack_s,
           "variants": variants, "warnings": warnings}
    text = json.dumps(out, indent=2) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- modes

_MODE_KEYS = ("index", "eigenvalues", "sigma", "frequency_hz", "damping_ratio", "magnitude",
              "integral_contribution", "classification")


def load_report(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise IoError(f"--report {path}: no such file") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SchemaMismatch(f"--report {path}: not valid JSON ({exc})", module="cli") from None
    if not isinstance(data, dict) or data.get("schema") != SCHEMA_VERSION:
        raise SchemaMismatch(f"--report {path}: missing or unsupported schema version", module="cli")
    modes = data.get("modes")
    if not isinstance(modes, list) or not modes or not all(
            isinstance(m, dict) and all(k in m for k in _MODE_KEYS) for m in modes):
        raise SchemaMismatch(f"--report {path}: malformed 'modes' list", module="cli")
    for key in ("dominant", "verdict"):
        if key not in data:
            raise SchemaMismatch(f"--report {path}: missing {key!r}", module="cli")
    return data


def format_mode_table(report: dict) -> str:
    header = f"{'mode':>5} {'freq [Hz]':>11} {'sigma [1/s]':>12} {'damping':>9} {'|lambda|':>10} {'IC':>11}  class"
    lines = [header, "-" * len(header)]
    for m in report["modes"]:
        sigma = m["sigma"]
        sigma_txt = f"{sigma:12.4f}" if sigma is not None else f"{'-inf':>12}"
        lines.append(f"{m['index']:>5} {m['frequency_hz']:11.4f} {sigma_txt} {m['damping_ratio']:9.4f} "
                     f"{m['magnitude']:10.6f} {m['integral_contribution']:11.4e}  {m['classification']}")
    lines.append(f"dominant mode: {report['dominant']}   verdict: {report['verdict']}")
    return "\n".join(lines) + "\n"


def cmd_modes(args) -> int:
    report = load_report(args.report)
    if args.json:
        subset = {"dominant": report["dominant"], "verdict": report["verdict"], "modes": report["modes"]}
        sys.stdout.write(json.dumps(subset, indent=2) + "\n")
    else:
        sys.stdout.write(format_mode_table(report))
    return 0


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error [cli]: {message}\n")


def _add_fit_args(p, method=True):
    p.add_argument("--data", required=True, help="input CSV (first column is time)")
    if method:
        p.add_argument("--method", choices=("dmd", "dmdc"), default="dmdc")
    p.add_argument("--states", help="comma-separated state channels (default: all non-input)")
    p.add_argument("--inputs", help="comma-separated input channels (DMDc)")
    p.add_argument("--stack", type=int, default=1, help="shift-stacking count s (default 1)")
    p.add_argument("--rank", default=str(numerics.DEFAULT_POLICY),
                   help="rank policy for every SVD: fixed:<r> or energy:<threshold>")
    p.add_argument("--rank-p", help="rank policy for the first DMDc SVD")
    p.add_argument("--rank-r", help="rank policy for the second DMDc SVD")
    p.add_argument("--band", type=float, default=1e-3, help="critical band on |lambda|")
    p.add_argument("--out", help="output JSON path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modalkit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"modalkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic scenario CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", help="'railway': reference converter, 2500 Hz for 2 s")
    p.add_argument("--plant", action="append",
                   help="planted mode freq[:sigma[:amp[:phase]]]; repeat or comma-separate")
    p.add_argument("--forced", action="store_true",
                   help="with --plant: full-state forced LTI system plus a sinusoidal input u0")
    p.add_argument("--input-freq", type=float, default=23.0)
    p.add_argument("--input-amp", type=float, default=0.5)
    p.add_argument("--channels", type=int, default=1, help="mixed channels for --plant")
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--dt", type=float, help="sampling interval [s] (default 4e-4)")
    p.add_argument("--duration", type=float, help="record length [s] (default 2)")
    p.add_argument("--duty", default="const:0.8", help="const:<d> or sine:<mean>:<amp>:<hz>")
    p.add_argument("--rn", type=float, default=0.1)
    p.add_argument("--ln", type=float, default=4e-3)
    p.add_argument("--lg", type=float, default=8e-3)
    p.add_argument("--cd", type=float, default=800e-6)
    p.add_argument("--rd", type=float, default=460.0)
    p.add_argument("--un-amp", type=float, default=110.0 * math.sqrt(2.0))
    p.add_argument("--un-freq", type=float, default=50.0)
    p.add_argument("--x0", help="initial i_n,u_dc (default 0,170)")
    p.add_argument("--input-node", choices=("source", "pcc"), default="source")
    p.add_argument("--method", choices=("zoh", "rk4"), default="zoh")
    p.add_argument("--snr", type=float, help="add noise at this SNR [dB]")
    p.add_argument("--seed", type=int, help="RNG seed (default $MODALKIT_SEED or 0)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="fit and write a JSON stability report")
    _add_fit_args(p)
    p.add_argument("--normalize", choices=("none", "zscore"), default="none")
    p.add_argument("--reconstruct", help="write a reconstruction CSV here")
    p.add_argument("--plot-dir", help="write eigenvalue/singular-value/reconstruction CSVs here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("study-normalization", help="DMD vs DMDc on raw and z-scored data")
    _add_fit_args(p, method=False)
    p.set_defaults(func=cmd_study_normalization)

    p = sub.add_parser("modes", help="print the mode table of a report")
    p.add_argument("--report", required=True)
    p.add_argument("--json", action="store_true", help="echo modes, dominant and verdict as JSON")
    p.set_defaults(func=cmd_modes)
    return parser


_FLAG_FOR_ERROR = {
    "RankTooLarge": "--rank", "RankOrderViolation": "--rank-r",
    "InvalidStacking": "--stack", "TooFewSnapshots": "--stack",
    "EmptyRole": "--states/--inputs", "MissingInputs": "--inputs",
}


def _context(args, exc) -> str:
    message = str(exc)
    if "--" in message:
        return message
    flag = _FLAG_FOR_ERROR.get(type(exc).__name__)
    if flag is None and isinstance(exc, SchemaMismatch) and getattr(args, "data", None):
        flag = "--states/--inputs"
    source = getattr(args, "data", None) or getattr(args, "report", None) or getattr(args, "out", None)
    where = f"{flag} " if flag else ""
    return f"{where}({source}): {message}" if source else f"{where}{message}"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModalkitError as exc:
        print(f"modalkit: error [{exc.module}]: {_context(args, exc)}", file=sys.stderr)
        return max(64, exc.exit_code)


if __name__ == "__main__":
    sys.exit(main())
