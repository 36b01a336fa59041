"""Command-line front end.

Five subcommands: `region` traces a stability boundary to CSV,
`optimal-pa` prints the best admission probability for a source rate,
`simulate` runs one seeded simulation, `validate` sweeps a rate grid and
checks analytic membership against simulated drift, `compare` emits the
pa=0 / pa=1 / closure inside-sets for the same grid.

Options can also come from a flat key=value config file (# comments,
same keys as the long flags); explicit flags win.  Exit status is 0 on
success, 1 on domain errors such as a source rate beyond capacity, 2 on
usage errors.  All file output is written atomically and is byte
identical across repeated invocations.
"""

from __future__ import annotations

import argparse
import enum
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

from .harness import (
    RegionReport,
    SweepSpec,
    analytic_report,
    compare_three_schemes,
    containment_violations,
    sweep,
    write_report_csv,
)
from .model import (
    AccessProbabilities,
    ChannelProbabilities,
    CooperationPolicy,
    ModelError,
    RatePoint,
    SystemParams,
    validate_params,
    validate_policy,
    validate_rates,
)
from .region import BoundaryTrace, boundary_trace, optimal_pa
from .simulation import SimConfig, SimMode, SimStats, run, run_with_trace

OUTPUT_DIR_ENV = "RELAYSTAB_OUTPUT_DIR"

_STATS_COUNTERS = (
    "n_slots", "s_real_arrivals", "r_real_arrivals", "s_dummy_tx", "r_dummy_tx",
    "s_direct_delivered", "relay_admissions", "relayed_delivered",
    "r_exo_delivered", "s_busy_slots", "r_busy_slots", "final_q1_len",
    "final_q2_len", "final_relayed_backlog")
_STATS_RATES = ("source_flow_delivery_rate", "relay_flow_delivery_rate",
                "source_departure_rate", "r_busy_fraction")


class Command(enum.Enum):
    REGION = "region"
    OPTIMAL_PA = "optimal-pa"
    SIMULATE = "simulate"
    VALIDATE = "validate"
    COMPARE = "compare"


class UsageError(Exception):
    """Bad invocation: unknown key, missing option, unparseable value."""


@dataclass(frozen=True)
class CliConfig:
    """One fully resolved invocation."""

    command: Command
    params: SystemParams
    pa: float | None = None
    closure: bool = False
    lambda1: float | None = None
    lambda2: float | None = None
    resolution: int = 200
    mode: SimMode = SimMode.ORIGINAL
    n_slots: int = 10**6
    seed: int = 0
    seeds: tuple[int, ...] = (1, 2, 3)
    stride: int = 1
    exclusion_band: float = 0.01
    window_count: int = 10
    drift_threshold: float = 1e-4
    lambda1_grid: tuple[float, float, int] | None = None
    lambda2_grid: tuple[float, float, int] | None = None
    output: str | None = None
    output_dir: str | None = None
    trace: str | None = None


def _parse_float(key: str, text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{where}{key}: could not parse {text!r} as a number")


def _parse_int(key: str, text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{where}{key}: could not parse {text!r} as an integer")


def _parse_bool(key: str, text: str, where: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise UsageError(f"{where}{key}: could not parse {text!r} as a boolean")


def _parse_grid(key: str, text: str, where: str) -> tuple[float, float, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise UsageError(f"{where}{key}: expected start,stop,count, got {text!r}")
    start = _parse_float(key, parts[0], where)
    stop = _parse_float(key, parts[1], where)
    count = _parse_int(key, parts[2], where)
    if count < 1:
        raise UsageError(f"{where}{key}: grid count must be at least 1")
    return (start, stop, count)


def _parse_seeds(key: str, text: str, where: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError(f"{where}{key}: expected a comma-separated seed list")
    return tuple(_parse_int(key, p, where) for p in parts)


def parse_config_text(text: str) -> dict[str, tuple[str, int]]:
    """Flat key=value config: one pair per line, # comments, no sections.

    Returns raw string values keyed by option name, with the line number
    kept for error reporting.
    """
    values: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"config line {lineno}: expected key=value, got {raw.strip()!r}")
        if key in values:
            raise UsageError(f"config line {lineno}: duplicate key {key}")
        values[key] = (value, lineno)
    return values


# Per-command option tables: (key, parser, default).  A default of
# _REQUIRED makes the option mandatory after flag/config merging.
_REQUIRED = object()

_PARSERS: dict[str, Callable[[str, str, str], object]] = {
    "p13": _parse_float, "p12": _parse_float, "p23": _parse_float,
    "q1": _parse_float, "q2": _parse_float,
    "pa": _parse_float, "closure": _parse_bool,
    "lambda1": _parse_float, "lambda2": _parse_float,
    "resolution": _parse_int, "mode": lambda k, t, w: t,
    "slots": _parse_int, "seed": _parse_int, "seeds": _parse_seeds,
    "stride": _parse_int, "band": _parse_float, "windows": _parse_int,
    "threshold": _parse_float,
    "lambda1-grid": _parse_grid, "lambda2-grid": _parse_grid,
    "output": lambda k, t, w: t, "output-dir": lambda k, t, w: t,
    "trace": lambda k, t, w: t,
}

_PARAM_KEYS = ("p13", "p12", "p23", "q1", "q2")

_COMMAND_OPTIONS: dict[Command, dict[str, object]] = {
    Command.REGION: {"pa": None, "closure": None, "resolution": 200,
                     "output": None},
    Command.OPTIMAL_PA: {"lambda1": _REQUIRED},
    Command.SIMULATE: {"pa": _REQUIRED, "lambda1": _REQUIRED,
                       "lambda2": _REQUIRED, "mode": "original",
                       "slots": 10**6, "seed": 0, "stride": 1, "trace": None},
    Command.VALIDATE: {"pa": None, "closure": None,
                       "lambda1-grid": _REQUIRED, "lambda2-grid": _REQUIRED,
                       "slots": 10**6, "seeds": (1, 2, 3), "band": 0.01,
                       "windows": 10, "threshold": 1e-4, "stride": 100,
                       "output": None},
    Command.COMPARE: {"lambda1-grid": _REQUIRED, "lambda2-grid": _REQUIRED,
                      "output-dir": None},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaystab",
        description="Stability regions for a relay-aided random access network")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for command in Command:
        p = sub.add_parser(command.value)
        p.add_argument("--config", default=None, metavar="PATH",
                       help="key=value config file; flags override it")
        for key in _PARAM_KEYS:
            p.add_argument(f"--{key}", default=None, metavar="P")
        for key in _COMMAND_OPTIONS[command]:
            if key == "closure":
                p.add_argument("--closure", action="store_const", const="true",
                               default=None)
            elif key == "mode":
                p.add_argument("--mode", default=None,
                               choices=[m.value for m in SimMode])
            else:
                p.add_argument(f"--{key}", default=None, metavar="V")
    return parser


def _merge(key: str, flag_value: object, config_values: dict[str, tuple[str, int]],
           default: object) -> object:
    if flag_value is not None:
        return _PARSERS[key](key, str(flag_value), "option --")
    if key in config_values:
        text, lineno = config_values[key]
        return _PARSERS[key](key, text, f"config line {lineno}: ")
    if default is _REQUIRED:
        raise UsageError(f"missing required option: {key}")
    return default


def parse_config(argv: Sequence[str], config_text: str | None = None) -> CliConfig:
    """Resolve argv (plus an optional config file) into a CliConfig.

    Raises UsageError for anything malformed; argparse errors for unknown
    flags surface as SystemExit(2) and main() reports them as usage
    errors too.
    """
    parser = _build_parser()
    args = parser.parse_args(list(argv))
    if args.command is None:
        raise UsageError("no command given; expected one of "
                         + ", ".join(c.value for c in Command))
    command = Command(args.command)

    if config_text is None and args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config_text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config file {args.config}: {exc}")
    config_values = parse_config_text(config_text) if config_text else {}
    allowed = set(_PARAM_KEYS) | set(_COMMAND_OPTIONS[command])
    for key in config_values:
        if key not in allowed:
            _, lineno = config_values[key]
            raise UsageError(f"config line {lineno}: unknown key {key}")

    def flag(key: str) -> object:
        return getattr(args, key.replace("-", "_"))

    raw_params = {key: _merge(key, flag(key), config_values, _REQUIRED)
                  for key in _PARAM_KEYS}
    params = SystemParams(
        ChannelProbabilities(raw_params["p13"], raw_params["p12"], raw_params["p23"]),
        AccessProbabilities(raw_params["q1"], raw_params["q2"]))
    check = validate_params(params)
    if not check.ok:
        raise UsageError("invalid parameters: " + "; ".join(check.violations))

    options = {key: _merge(key, flag(key), config_values, default)
               for key, default in _COMMAND_OPTIONS[command].items()}

    if "closure" in options:
        closure = bool(options["closure"])
        if closure == (options["pa"] is not None):
            raise UsageError("exactly one of pa, closure is required")
    else:
        closure = False
    pa = options.get("pa")
    if pa is not None and not 0.0 <= pa <= 1.0:
        raise UsageError(f"pa: {pa} outside [0, 1]")

    def positive(key: str) -> None:
        if key in options and options[key] < 1:
            raise UsageError(f"{key} must be at least 1")

    for key in ("resolution", "slots", "stride", "windows"):
        positive(key)
    if "seed" in options and options["seed"] < 0:
        raise UsageError("seed must be nonnegative")
    if "seeds" in options and any(s < 0 for s in options["seeds"]):
        raise UsageError("seeds must be nonnegative")

    return CliConfig(
        command=command,
        params=params,
        pa=pa,
        closure=closure,
        lambda1=options.get("lambda1"),
        lambda2=options.get("lambda2"),
        resolution=options.get("resolution", 200),
        mode=SimMode(options["mode"]) if "mode" in options else SimMode.ORIGINAL,
        n_slots=options.get("slots", 10**6),
        seed=options.get("seed", 0),
        seeds=tuple(options.get("seeds", (1, 2, 3))),
        stride=options.get("stride", 1),
        exclusion_band=options.get("band", 0.01),
        window_count=options.get("windows", 10),
        drift_threshold=options.get("threshold", 1e-4),
        lambda1_grid=options.get("lambda1-grid"),
        lambda2_grid=options.get("lambda2-grid"),
        output=options.get("output"),
        output_dir=options.get("output-dir"),
        trace=options.get("trace"),
    )


def _output_dir(config: CliConfig) -> str:
    if config.output_dir is not None:
        return config.output_dir
    return os.environ.get(OUTPUT_DIR_ENV, ".")


def _resolve_output(config: CliConfig, default_name: str) -> str:
    if config.output is not None:
        return config.output
    return os.path.join(_output_dir(config), default_name)


def _atomic_write(path: str, writer: Callable[[TextIO], None]) -> None:
    """Write via a sibling temp file and rename, so readers never see a
    partial file and reruns replace the output in one step."""
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            writer(fh)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def write_boundary_csv(trace: BoundaryTrace, stream: TextIO) -> None:
    stream.write("lambda1,lambda2_boundary,segment,pa_star\n")
    for point, label, pa_star in zip(trace.points, trace.segment_labels,
                                     trace.pa_star_values):
        stream.write(f"{point.lambda1:.9f},{point.lambda2:.9f},"
                     f"{label.name},{pa_star:.9f}\n")


def write_slot_trace_csv(outcomes, stream: TextIO) -> None:
    from .simulation import SlotOutcome
    stream.write("slot," + ",".join(SlotOutcome.CSV_FIELDS) + "\n")
    for slot, outcome in enumerate(outcomes):
        cells = (str(int(getattr(outcome, name))) for name in SlotOutcome.CSV_FIELDS)
        stream.write(f"{slot}," + ",".join(cells) + "\n")


def _policy(config: CliConfig) -> CooperationPolicy | None:
    return None if config.closure else CooperationPolicy(config.pa)


def _run_region(config: CliConfig, out: TextIO) -> int:
    trace = boundary_trace(config.params, _policy(config), config.resolution)
    path = _resolve_output(config, "region.csv")
    _atomic_write(path, lambda fh: write_boundary_csv(trace, fh))
    out.write(f"wrote {path}\n")
    return 0


def _run_optimal_pa(config: CliConfig, out: TextIO) -> int:
    pa_star = optimal_pa(config.params, config.lambda1)
    out.write(f"pa_star={pa_star:.9f}\n")
    return 0


def _run_simulate(config: CliConfig, out: TextIO) -> int:
    point = RatePoint(config.lambda1, config.lambda2)
    rates_check = validate_rates(point)
    if not rates_check.ok:
        raise UsageError("invalid rates: " + "; ".join(rates_check.violations))
    sim_config = SimConfig(config.params, CooperationPolicy(config.pa), point,
                           config.mode, config.n_slots, config.seed, config.stride)
    if config.trace is not None:
        stats, outcomes = run_with_trace(sim_config)
        _atomic_write(config.trace, lambda fh: write_slot_trace_csv(outcomes, fh))
    else:
        stats = run(sim_config)
    out.write(f"mode={config.mode.value}\nseed={config.seed}\n")
    for name in _STATS_COUNTERS:
        out.write(f"{name}={getattr(stats, name)}\n")
    for name in _STATS_RATES:
        out.write(f"{name}={getattr(stats, name):.9f}\n")
    return 0


def _sweep_spec(config: CliConfig) -> SweepSpec:
    return SweepSpec(
        params=config.params,
        policy=_policy(config),
        lambda1_grid=config.lambda1_grid,
        lambda2_grid=config.lambda2_grid,
        n_slots=config.n_slots,
        seeds=config.seeds,
        exclusion_band=config.exclusion_band,
        window_count=config.window_count,
        drift_threshold=config.drift_threshold,
        sample_stride=config.stride,
    )


def _run_validate(config: CliConfig, out: TextIO) -> int:
    report = sweep(_sweep_spec(config))
    path = _resolve_output(config, "validate.csv")
    _atomic_write(path, lambda fh: write_report_csv(report, fh))
    out.write(f"wrote {path}\n")
    out.write(f"agreement={report.agreement_rate:.9f} "
              f"disagreements={len(report.disagreements)}\n")
    return 0


def _run_compare(config: CliConfig, out: TextIO) -> int:
    spec = SweepSpec(params=config.params, policy=None,
                     lambda1_grid=config.lambda1_grid,
                     lambda2_grid=config.lambda2_grid)
    pa0, pa1, closure = compare_three_schemes(spec)
    directory = _output_dir(config)
    names = ("compare_pa0.csv", "compare_pa1.csv", "compare_closure.csv")
    for report, name in zip((pa0, pa1, closure), names):
        path = os.path.join(directory, name)
        _atomic_write(path, lambda fh, r=report: write_report_csv(r, fh))
        out.write(f"wrote {path}\n")
    violations = (containment_violations(pa0, closure)
                  + containment_violations(pa1, closure))
    out.write(f"containment_violations={len(violations)}\n")
    return 0


_HANDLERS = {
    Command.REGION: _run_region,
    Command.OPTIMAL_PA: _run_optimal_pa,
    Command.SIMULATE: _run_simulate,
    Command.VALIDATE: _run_validate,
    Command.COMPARE: _run_compare,
}


def execute(config: CliConfig, out: TextIO | None = None) -> int:
    """Run one parsed invocation; returns the process exit status."""
    out = sys.stdout if out is None else out
    try:
        return _HANDLERS[config.command](config, out)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_config(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return execute(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
