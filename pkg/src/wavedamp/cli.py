"""
Command line interface of wavedamp.

Every command writes plot-ready text: CSV with '#' manifest comment lines, or JSON with the
manifest embedded. Floats use the shortest round-trip representation and rows have a fixed
order, so identical flags give identical output. Set SOURCE_DATE_EPOCH to pin the timestamp.

Exit codes: 0 success, 2 invalid usage, 3 pole or singular system, 4 divergent norm,
5 optimizer did not converge.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime
import itertools
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Optional, Sequence

import numpy as np

from . import __version__
from .analytic import output_h
from .core import Damper, Forcing, StringParams
from .core_utils import format_float
from .discrete import convergence_order, convergence_study
from .errors import (
    FeedthroughNonzero,
    InvalidGrid,
    NoConvergence,
    NormDiverged,
    PoleEncountered,
    SingularPencil,
    SingularPoint,
    UnstableSystem,
)
from .norms import NormConfig, h2_integral, hinf_norm
from .optimize import Backend, Criterion, SweepSpec, default_starts, minimize, sweep

__all__ = [
    "RunManifest",
    "build_parser",
    "cmd_bode",
    "cmd_compare",
    "cmd_norm",
    "cmd_optimize",
    "cmd_sweep",
    "main",
]

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_POLE = 3
EXIT_DIVERGED = 4
EXIT_NO_CONVERGENCE = 5

# default (p_lo, p_hi) and (g_lo, g_hi) of sweeps and optimization
DEFAULT_RANGES = {
    Forcing.UNIFORM: ((0.1, 5.0), (0.1, 1000.0)),
    Forcing.BOUNDARY_LEFT: ((0.1, 9.9), (0.1, 100.0)),
}
DEFAULT_SWEEP_COUNT = 50


@dataclass(frozen=True)
class RunManifest:
    """
    Describes how an output file was produced.
    """

    command: str
    parameters: dict
    tool_version: str
    timestamp: str

    @classmethod
    def create(cls, command: str, args: argparse.Namespace) -> RunManifest:
        """
        Build the manifest of a command from its parsed arguments.
        """
        skipped = {"handler", "out", "verbose", "command"}
        parameters = {key: _plain(value) for key, value in sorted(vars(args).items()) if key not in skipped}
        return cls(command=command, parameters=parameters, tool_version=__version__, timestamp=_timestamp())

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }

    def comment_lines(self) -> list[str]:
        return [
            f"# command: {self.command}",
            f"# parameters: {json.dumps(self.parameters, sort_keys=True)}",
            f"# tool_version: {self.tool_version}",
            f"# timestamp: {self.timestamp}",
        ]


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        moment = datetime.datetime.fromtimestamp(int(epoch), tz=datetime.timezone.utc)
    else:
        moment = datetime.datetime.now(tz=datetime.timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _plain(value):
    """
    Convert an argument value into something json can encode.
    """
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, float):
        return format_float(value) if not np.isfinite(value) else value
    if value is None or isinstance(value, (bool, int, str)):
        return value
    return str(value)


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fp:
            yield fp


def _write_csv(path: Optional[str], manifest: RunManifest, header: Sequence[str], rows, comments=()):
    with _output(path) as fp:
        for line in manifest.comment_lines() + list(comments):
            fp.write(line + "\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])


def _write_json(path: Optional[str], data: dict):
    with _output(path) as fp:
        fp.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _params(args: argparse.Namespace) -> StringParams:
    return StringParams(args.length, args.damping, args.stiffness)


def _forcing(args: argparse.Namespace) -> Forcing:
    return Forcing(args.forcing)


def _norm_config(args: argparse.Namespace, params: StringParams, forcing: Forcing) -> NormConfig:
    return NormConfig.for_string(
        params,
        forcing,
        omega_max=args.norm_omega_max,
        quad_rel_tol=args.quad_rel_tol,
        peak_samples_per_mode=args.peak_samples,
        refine_iters=args.refine_iters,
        initial_panels=args.initial_panels,
        max_panels=args.max_panels,
    )


def _float_or_inf(value: float):
    return value if np.isfinite(value) else format_float(value)


# Commands
# --------


def cmd_bode(args: argparse.Namespace) -> int:
    """
    Write |H(i*omega)| and its phase in radians for every (pos, gain) pair.
    """
    params, forcing = _params(args), _forcing(args)
    if args.log_freq:
        omega = np.geomspace(args.omega_min, args.omega_max, args.points)
    else:
        omega = np.linspace(args.omega_min, args.omega_max, args.points)

    dampers = [Damper(p, g).validate(params) for p, g in itertools.product(args.pos or [4.5], args.gain or [10.0])]
    columns = []
    for damper in dampers:
        try:
            values = np.asarray(output_h(1j * omega, params, damper, forcing))
        except PoleEncountered as exc:
            LOG.error("Pole of H at omega = %s for p=%r g=%r", exc.points.imag, damper.position, damper.gain)
            return EXIT_POLE
        columns.append((np.abs(values), np.angle(values)))

    if len(dampers) == 1:
        header = ["omega", "magnitude", "phase"]
        comments = []
    else:
        header = ["omega"]
        comments = []
        for i, damper in enumerate(dampers, start=1):
            header += [f"magnitude_{i}", f"phase_{i}"]
            comments.append(f"# curve {i}: pos={format_float(damper.position)} gain={format_float(damper.gain)}")

    rows = []
    for j, w in enumerate(omega):
        row = [float(w)]
        for magnitude, phase in columns:
            row += [float(magnitude[j]), float(phase[j])]
        rows.append(row)
    _write_csv(args.out, RunManifest.create("bode", args), header, rows, comments)
    return EXIT_OK


def cmd_norm(args: argparse.Namespace) -> int:
    """
    Print the H2 or H-infinity norm of one configuration as JSON.
    """
    params, forcing = _params(args), _forcing(args)
    damper = Damper(args.pos, args.gain).validate(params)
    cfg = _norm_config(args, params, forcing)
    criterion = Criterion(args.criterion)
    response = args.backend.response(params, damper, forcing)

    result = {"criterion": criterion.value, "backend": str(args.backend), "config": cfg.as_dict()}
    try:
        if criterion is Criterion.HINF:
            value, argmax = hinf_norm(response, params, cfg)
            result.update(value=value, argmax_omega=argmax)
        else:
            estimate = h2_integral(response, cfg)
            result.update(value=estimate.value, tail_bound=estimate.tail_bound, panels=estimate.panels)
    except NormDiverged as exc:
        LOG.error("%s norm diverged (%s) with config %s", criterion.value, exc.reason, json.dumps(cfg.as_dict()))
        return EXIT_DIVERGED

    result["manifest"] = RunManifest.create("norm", args).as_dict()
    _write_json(args.out, result)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """
    Write the criterion over a (p, g) grid as CSV, plus a JSON sidecar with the extreme cells.
    """
    params, forcing = _params(args), _forcing(args)
    (p_lo, p_hi), (g_lo, g_hi) = DEFAULT_RANGES[forcing]
    p_range = tuple(args.p_range) if args.p_range else (p_lo, p_hi, DEFAULT_SWEEP_COUNT)
    g_range = tuple(args.g_range) if args.g_range else (g_lo, g_hi, DEFAULT_SWEEP_COUNT)
    spec = SweepSpec(
        p_range=(p_range[0], p_range[1], _count(p_range[2])),
        g_range=(g_range[0], g_range[1], _count(g_range[2])),
        criterion=Criterion(args.criterion),
        forcing=forcing,
        backend=args.backend,
    )
    result = sweep(spec, params, _norm_config(args, params, forcing))
    manifest = RunManifest.create("sweep", args)

    rows = [
        [float(p), float(g), float(result.values[i, j])]
        for i, g in enumerate(result.gains)
        for j, p in enumerate(result.positions)
    ]
    _write_csv(args.out, manifest, ["p", "g", "value"], rows)

    if args.out is not None:
        summary = {"manifest": manifest.as_dict(), "diverged_cells": result.diverged_cells}
        if result.diverged_cells < result.values.size:
            summary["min_cell"] = dict(zip(("p", "g", "value"), result.min_cell))
            summary["max_cell"] = dict(zip(("p", "g", "value"), result.max_cell))
        _write_json(str(Path(args.out).with_suffix(".json")), summary)
    return EXIT_OK


def _count(value: float) -> int:
    if value != int(value):
        raise ValueError(f"Expected an integer point count, but got {value!r}")
    return int(value)


def cmd_optimize(args: argparse.Namespace) -> int:
    """
    Minimize the criterion over damper position and gain and print the optimum as JSON.
    """
    params, forcing = _params(args), _forcing(args)
    p_default, g_default = DEFAULT_RANGES[forcing]
    bounds = (tuple(args.p_bounds or p_default), tuple(args.g_bounds or g_default))
    starts = args.start or default_starts(bounds, args.starts)

    exit_code = EXIT_OK
    try:
        result = minimize(
            Criterion(args.criterion),
            forcing,
            params,
            bounds,
            starts=starts,
            cfg=_norm_config(args, params, forcing),
            backend=args.backend,
            max_iter=args.max_iter,
        )
    except NoConvergence as exc:
        LOG.error("%s", exc)
        result, exit_code = exc.result, EXIT_NO_CONVERGENCE

    data = {
        "criterion": args.criterion,
        "p_star": result.p_star,
        "g_star": result.g_star,
        "value": _float_or_inf(result.value),
        "evaluations": result.evaluations,
        "converged": result.converged,
        "manifest": RunManifest.create("optimize", args).as_dict(),
    }
    _write_json(args.out, data)
    return exit_code


def cmd_compare(args: argparse.Namespace) -> int:
    """
    Write the error of the discrete transfer function against the closed form for several n.
    """
    params, forcing = _params(args), _forcing(args)
    damper = Damper(args.pos, args.gain).validate(params)
    rows = convergence_study(params, damper, forcing, 1j * args.omega, args.n)

    comments = []
    order = None
    if len({row.n for row in rows}) > 1:
        try:
            order = convergence_order(rows)
        except ValueError as exc:
            LOG.warning("No convergence order: %s", exc)
        else:
            comments.append(f"# convergence_order: {format_float(order)}")

    table = [
        [row.n, row.h, row.abs_error, row.analytic_value.real, row.analytic_value.imag]
        for row in rows
    ]
    header = ["n", "h", "abs_error", "analytic_real", "analytic_imag"]
    _write_csv(args.out, RunManifest.create("compare", args), header, table, comments)
    if order is not None and args.out is not None:
        print(f"convergence_order: {format_float(order)}")
    return EXIT_OK


# Parser
# ------


def _add_physical_args(parser: argparse.ArgumentParser, multi: bool = False):
    parser.add_argument("--forcing", choices=[f.value for f in Forcing], default=Forcing.UNIFORM.value)
    parser.add_argument("--length", type=float, default=10.0, help="string length")
    parser.add_argument("--damping", type=float, default=0.08, help="internal damping d")
    parser.add_argument("--stiffness", type=float, default=1.0, help="stiffness k")
    if multi:
        parser.add_argument("--pos", type=float, action="append", help="damper position, repeat for several curves")
        parser.add_argument("--gain", type=float, action="append", help="damper gain, repeat for several curves")
    else:
        parser.add_argument("--pos", type=float, default=4.5, help="damper position")
        parser.add_argument("--gain", type=float, default=10.0, help="damper gain")


def _add_norm_args(parser: argparse.ArgumentParser):
    parser.add_argument("--backend", type=Backend.parse, default=Backend(), help="'analytic' or 'discrete:N'")
    group = parser.add_argument_group("norm settings")
    group.add_argument("--norm-omega-max", type=float, help="truncation frequency")
    group.add_argument("--quad-rel-tol", type=float)
    group.add_argument("--peak-samples", type=int, help="scan points per modal spacing")
    group.add_argument("--refine-iters", type=int)
    group.add_argument("--initial-panels", type=int)
    group.add_argument("--max-panels", type=int)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(text)
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavedamp", description="Damped wave equation with a point damper.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    bode = commands.add_parser("bode", help="magnitude and phase of H over a frequency grid")
    _add_physical_args(bode, multi=True)
    bode.add_argument("--omega-min", type=float, default=1e-2)
    bode.add_argument("--omega-max", type=float, default=1e2)
    bode.add_argument("--points", type=int, default=200)
    bode.add_argument("--log-freq", action="store_true", help="log-spaced frequencies")
    bode.add_argument("--out", help="output CSV file, stdout by default")
    bode.set_defaults(handler=cmd_bode)

    norm = commands.add_parser("norm", help="H2 or H-infinity norm of one configuration")
    norm.add_argument("criterion", choices=[c.value for c in Criterion])
    _add_physical_args(norm)
    _add_norm_args(norm)
    norm.add_argument("--out", help="output JSON file, stdout by default")
    norm.set_defaults(handler=cmd_norm)

    sweep_parser = commands.add_parser("sweep", help="criterion over a (p, g) grid")
    sweep_parser.add_argument("criterion", choices=[c.value for c in Criterion])
    _add_physical_args(sweep_parser)
    _add_norm_args(sweep_parser)
    sweep_parser.add_argument("--p-range", type=float, nargs=3, metavar=("LO", "HI", "COUNT"))
    sweep_parser.add_argument("--g-range", type=float, nargs=3, metavar=("LO", "HI", "COUNT"))
    sweep_parser.add_argument("--out", help="output CSV file, a JSON summary is written next to it")
    sweep_parser.set_defaults(handler=cmd_sweep)

    optimize = commands.add_parser("optimize", help="minimize the criterion over (p, g)")
    optimize.add_argument("criterion", choices=[c.value for c in Criterion])
    _add_physical_args(optimize)
    _add_norm_args(optimize)
    optimize.add_argument("--p-bounds", type=float, nargs=2, metavar=("LO", "HI"))
    optimize.add_argument("--g-bounds", type=float, nargs=2, metavar=("LO", "HI"))
    optimize.add_argument("--starts", type=_positive_int, default=5, help="starts per axis of the default grid")
    optimize.add_argument("--start", type=float, nargs=2, action="append", metavar=("P", "G"))
    optimize.add_argument("--max-iter", type=_positive_int, default=400)
    optimize.add_argument("--out", help="output JSON file, stdout by default")
    optimize.set_defaults(handler=cmd_optimize)

    compare = commands.add_parser("compare", help="discrete against analytic transfer function")
    _add_physical_args(compare)
    compare.add_argument("--omega", type=float, default=1.0, help="evaluate at s = i*omega")
    compare.add_argument("--n", type=int, nargs="+", default=[25, 50, 100, 200], help="subinterval counts")
    compare.add_argument("--out", help="output CSV file, stdout by default")
    compare.set_defaults(handler=cmd_compare)
    return parser


def _check_args(parser: argparse.ArgumentParser, args: argparse.Namespace):
    if args.command == "bode":
        if args.points < 2:
            parser.error(f"--points must be at least 2, got {args.points}")
        if not 0 <= args.omega_min < args.omega_max:
            parser.error("expected 0 <= --omega-min < --omega-max")
        if args.log_freq and args.omega_min <= 0:
            parser.error("--log-freq needs a positive --omega-min")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line interface and return its exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_args(parser, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.WARNING)

    try:
        return args.handler(args)
    except (PoleEncountered, SingularPoint, SingularPencil, UnstableSystem) as exc:
        LOG.error("%s", exc)
        return EXIT_POLE
    except NormDiverged as exc:
        LOG.error("%s (config %s)", exc, json.dumps(exc.config.as_dict()) if exc.config else None)
        return EXIT_DIVERGED
    except (InvalidGrid, FeedthroughNonzero, ValueError) as exc:
        LOG.error("%s", exc)
        return EXIT_USAGE
