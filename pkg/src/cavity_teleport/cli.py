"""Command-line front end.

Four subcommands: ``fidelity-map`` writes the lower-bound maps as CSV,
``table`` prints the outcome probabilities of the measurement cascade,
``sample`` simulates seeded protocol runs, and ``verify`` certifies the
closed-form packets against the grid propagator.

All floating-point output goes through repr(), so identical inputs produce
byte-identical files.  Exit status: 0 on success, 1 for validation or
tolerance failures, 2 for I/O problems.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys
from typing import IO, Iterator

from .fidelity import (
    DegenerateDenominator,
    FidelityRangeError,
    NotDistinguishable,
    SurfaceGrid,
    fidelity_surface,
)
from .measurement import NegligibleDensity, sample_many, summarize_records
from .oracle import GridMismatch, GridSpec, GridTooSmall, certify_analytic, check_certification
from .protocol import BlochAngles, branch_probabilities
from .wavepackets import PhysicalParams, desk_defaults

DEFAULT_SEED = 2024
DEFAULT_EPS_TAU = 10.0
DEFAULT_SHOTS = 1000

_CONFIG_KEYS = {
    "mass": float,
    "coupling": float,
    "wavelength": float,
    "sigma_x": float,
    "eps_tau1": float,
    "eps_tau2": float,
    "theta": float,
    "phi": float,
    "seed": int,
    "shots": int,
}


class CliError(Exception):
    """Validation problem that should terminate with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError(message)


def _fmt(value: float) -> str:
    return repr(float(value))


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise CliError(f"config file {path!r} must hold a flat JSON object")
    out = {}
    for key, value in raw.items():
        caster = _CONFIG_KEYS.get(key)
        if caster is None:
            raise CliError(f"unknown config key {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise CliError(f"config key {key!r} must be a number, got {value!r}")
        out[key] = caster(value)
    return out


class Settings:
    """Effective run settings: defaults, then config file, then explicit flags."""

    def __init__(self, args: argparse.Namespace):
        config = _load_config(getattr(args, "config", None))

        def pick(flag_name: str, config_key: str, default):
            flag = getattr(args, flag_name, None)
            if flag is not None:
                return flag
            if config_key in config:
                return config[config_key]
            return default

        desk = desk_defaults()
        self.params = PhysicalParams(
            mass=pick("mass", "mass", desk.mass),
            coupling=pick("coupling", "coupling", desk.coupling),
            wavelength=pick("wavelength", "wavelength", desk.wavelength),
            sigma_x=pick("sigma_x", "sigma_x", desk.sigma_x),
        )
        self.eps_tau1 = pick("eps_tau1", "eps_tau1", DEFAULT_EPS_TAU)
        eps_tau2 = pick("eps_tau2", "eps_tau2", None)
        self.eps_tau2 = self.eps_tau1 if eps_tau2 is None else eps_tau2
        if self.eps_tau1 < 0.0 or self.eps_tau2 < 0.0:
            raise CliError("rescaled interaction times must be non-negative")
        self.angles = BlochAngles(
            theta=pick("theta", "theta", math.pi / 2.0),
            phi=pick("phi", "phi", 0.0),
        )
        self.seed = pick("seed", "seed", DEFAULT_SEED)
        self.shots = pick("shots", "shots", DEFAULT_SHOTS)

    @property
    def times(self) -> tuple[float, float]:
        eps = self.params.coupling
        return (self.eps_tau1 / eps, self.eps_tau2 / eps)


@contextlib.contextmanager
def _open_out(path: str | None) -> Iterator[IO[str]]:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _add_common(parser: argparse.ArgumentParser, *, seeded: bool) -> None:
    parser.add_argument("--config", help="flat JSON file with parameter overrides")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--mass", type=float, help="atomic mass in kg")
    parser.add_argument("--coupling", type=float, help="vacuum coupling rate in 1/s")
    parser.add_argument("--wavelength", type=float, help="cavity-mode wavelength in m")
    parser.add_argument("--sigma-x", dest="sigma_x", type=float, help="initial packet width in m")
    parser.add_argument("--eps-tau1", type=float, help="coupling times first crossing duration")
    parser.add_argument("--eps-tau2", type=float, help="coupling times second crossing duration")
    parser.add_argument("--theta", type=float, help="polar angle of the sent state, radians")
    parser.add_argument("--phi", type=float, help="azimuthal angle of the sent state, radians")
    if seeded:
        parser.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")


def _cmd_fidelity_map(args: argparse.Namespace) -> int:
    settings = Settings(args)
    grid = SurfaceGrid(-args.grid_span, args.grid_span, args.grid_points)
    surface = fidelity_surface(grid, settings.eps_tau1, settings.params, settings.eps_tau2)
    u = grid.values()
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x1_sigma", "x2_sigma", "f_alpha_lb", "f_alphaprime_lb", "degenerate_flag"])
        for i in range(grid.n_points):
            for j in range(grid.n_points):
                if surface.degenerate[i, j]:
                    writer.writerow([_fmt(u[i]), _fmt(u[j]), "", "", "1"])
                else:
                    writer.writerow(
                        [
                            _fmt(u[i]),
                            _fmt(u[j]),
                            _fmt(surface.f_alpha_lb[i, j]),
                            _fmt(surface.f_alpha_prime_lb[i, j]),
                            "0",
                        ]
                    )
    return 0


def _cmd_table(args: argparse.Namespace) -> int:
    settings = Settings(args)
    asym = branch_probabilities(settings.angles, settings.times, settings.params, mode="asymptotic")
    exact = branch_probabilities(settings.angles, settings.times, settings.params, mode="exact")
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fock", "atom2_outcome", "verdict", "p_asymptotic", "p_exact", "delta"])
        for row_a, row_e in zip(asym.rows, exact.rows):
            writer.writerow(
                [
                    str(row_a.fock),
                    row_a.atom2,
                    row_a.verdict,
                    _fmt(row_a.probability),
                    _fmt(row_e.probability),
                    _fmt(row_e.probability - row_a.probability),
                ]
            )
        fh.write(f"# total_asymptotic={_fmt(asym.total())}\n")
        fh.write(f"# total_exact={_fmt(exact.total())}\n")
        fh.write(f"# success_asymptotic={_fmt(asym.success_total())}\n")
        fh.write(f"# success_exact={_fmt(exact.success_total())}\n")
        fh.write(f"# failure_asymptotic={_fmt(asym.failure_total())}\n")
        fh.write(f"# failure_exact={_fmt(exact.failure_total())}\n")
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    settings = Settings(args)
    shots = args.shots if args.shots is not None else settings.shots
    if shots <= 0:
        raise CliError(f"--shots must be positive, got {shots}")
    records = sample_many(settings.seed, shots, settings.angles, settings.times, settings.params)
    summary = summarize_records(records)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "run_index",
                "seed",
                "fock",
                "atom2_outcome",
                "x1_sigma",
                "x2_sigma",
                "verdict",
                "fidelity_to_alpha",
            ]
        )
        for index, rec in enumerate(records):
            writer.writerow(
                [
                    str(index),
                    str(rec.seed),
                    str(rec.fock_outcome),
                    rec.atom2_outcome,
                    _fmt(rec.x1_sigma),
                    _fmt(rec.x2_sigma),
                    rec.verdict,
                    _fmt(rec.fidelity_to_alpha),
                ]
            )
        fh.write(f"# n_runs={summary['n_runs']}\n")
        fh.write(f"# n_success={summary['n_success']}\n")
        fh.write(f"# success_frequency={_fmt(summary['success_frequency'])}\n")
        fh.write(f"# binomial_error={_fmt(summary['binomial_error'])}\n")
        fh.write(f"# mean_corrected_fidelity={_fmt(summary['mean_corrected_fidelity'])}\n")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    settings = Settings(args)
    try:
        eps_tau_list = tuple(float(tok) for tok in args.eps_tau_list.split(",") if tok.strip())
    except ValueError as exc:
        raise CliError(f"--eps-tau-list must be comma-separated numbers: {exc}") from exc
    if not eps_tau_list:
        raise CliError("--eps-tau-list must name at least one time")
    grid = GridSpec(-args.grid_span, args.grid_span, args.grid_points, args.dt)
    report = certify_analytic(settings.params, eps_tau_list, grid)
    with _open_out(args.out) as fh:
        for key, value in report.items():
            fh.write(f"{key}={_fmt(value)}\n")
    violations = check_certification(report)
    if violations:
        print(f"verification failed: {violations[0]}", file=sys.stderr)
        return 1
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="cavity-teleport",
        description="Simulate position-conditioned teleportation through a single cavity mode.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("fidelity-map", help="write both fidelity lower-bound maps as CSV")
    _add_common(p_map, seeded=False)
    p_map.add_argument("--grid-points", type=int, default=201, help="points per axis (default 201)")
    p_map.add_argument(
        "--grid-span", type=float, default=10.0, help="half-width of the map in packet widths"
    )
    p_map.set_defaults(func=_cmd_fidelity_map)

    p_table = sub.add_parser("table", help="print cascade outcome probabilities as CSV")
    _add_common(p_table, seeded=False)
    p_table.set_defaults(func=_cmd_table)

    p_sample = sub.add_parser("sample", help="simulate seeded protocol runs as CSV")
    _add_common(p_sample, seeded=True)
    p_sample.add_argument("--shots", type=int, help=f"number of runs (default {DEFAULT_SHOTS})")
    p_sample.set_defaults(func=_cmd_sample)

    p_verify = sub.add_parser("verify", help="certify closed-form packets against the propagator")
    _add_common(p_verify, seeded=False)
    p_verify.add_argument(
        "--eps-tau-list", default="1,5,8,10", help="comma-separated rescaled times (default 1,5,8,10)"
    )
    p_verify.add_argument("--grid-points", type=int, default=4096, help="grid size (default 4096)")
    p_verify.add_argument(
        "--grid-span", type=float, default=20.0, help="half-width of the grid in packet widths"
    )
    p_verify.add_argument("--dt", type=float, help="propagator step in seconds")
    p_verify.set_defaults(func=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    validation_errors = (
        CliError,
        ValueError,
        GridTooSmall,
        GridMismatch,
        DegenerateDenominator,
        NotDistinguishable,
        FidelityRangeError,
        NegligibleDensity,
    )
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except validation_errors as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
