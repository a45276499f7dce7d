"""Command-line front end.

Exit status: 0 on success, 2 on usage errors, 1 on computation errors.
The artifact is rendered completely in memory before anything is written,
so a failed run leaves the output path untouched.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from typing import Optional, Sequence

from . import core, dynamics, sweep

DRIVE_CHOICES = {
    "constant": "constant",
    "square": "square-pulse",
    "gaussian": "gaussian-pulse",
    "steps": "step-sequence",
}


def _finite(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--big-gamma", type=_finite, default=1.0,
                        help="cavity-mediated dipole damping rate (default 1)")
    shared.add_argument("--gamma-loss", type=_finite, default=0.0,
                        help="decay rate into non-cavity modes (default 0)")
    shared.add_argument("--format", choices=("csv", "json"), default=None)
    shared.add_argument("--out", default=None, help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="piswitch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", parents=[shared], help="stationary state for a constant drive")
    p.add_argument("--intensity", type=_finite, help="input photon current |b_in|^2")
    p.add_argument("--bin-re", type=_finite, help="real part of b_in")
    p.add_argument("--bin-im", type=_finite, help="imaginary part of b_in")

    p = sub.add_parser("simulate", parents=[shared], help="integrate the Bloch equations")
    p.add_argument("--drive", choices=tuple(DRIVE_CHOICES), default="constant")
    p.add_argument("--intensity", type=_finite, help="constant-drive photon current")
    p.add_argument("--bin-re", type=_finite)
    p.add_argument("--bin-im", type=_finite)
    p.add_argument("--photons", type=_finite, help="photon number of a pulse")
    p.add_argument("--duration", type=_finite, help="pulse duration")
    p.add_argument("--center", type=_finite, help="pulse center time")
    p.add_argument("--step", dest="steps", nargs=2, type=_finite, action="append",
                   metavar=("START", "INTENSITY"),
                   help="step-sequence entry (repeatable)")
    p.add_argument("--initial", choices=("ground", "excited"), default="ground")
    p.add_argument("--t-max", type=_finite, help="end time (default 20/big_gamma)")
    p.add_argument("--dt", type=_finite, help="integration step (default 1e-3/big_gamma)")
    p.add_argument("--stride", type=_positive_int, default=1, help="record every k-th step")

    p = sub.add_parser("sweep", parents=[shared],
                       help="response over log10(4|b_in|^2/big_gamma)")
    p.add_argument("--grid-min", type=_finite, default=-2.0)
    p.add_argument("--grid-max", type=_finite, default=2.0)
    p.add_argument("--points", type=_positive_int, default=201)
    p.add_argument("--workers", type=_positive_int, default=None)

    p = sub.add_parser("linear", parents=[shared], help="weak-drive reflection 1 - 2 beta")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--beta", type=_finite)
    g.add_argument("--beta-sweep", nargs=3, type=_finite, metavar=("MIN", "MAX", "POINTS"))

    p = sub.add_parser("params", parents=[shared], help="effective rate g^2/kappa")
    p.add_argument("--g", type=_finite, required=True)
    p.add_argument("--kappa", type=_finite, required=True)

    p = sub.add_parser("pulse-check", parents=[shared],
                       help="does a two-photon pulse exceed the switching intensity")
    p.add_argument("--duration", type=_finite, required=True)
    p.add_argument("--photons", type=_finite, default=2.0)
    return parser


def _amplitude(parser, args) -> Optional[complex]:
    has_amp = args.bin_re is not None or args.bin_im is not None
    if args.intensity is not None and has_amp:
        parser.error("give either --intensity or --bin-re/--bin-im, not both")
    if args.intensity is not None:
        if args.intensity < 0:
            parser.error("--intensity must be >= 0")
        return complex(math.sqrt(args.intensity))
    if has_amp:
        return complex(args.bin_re or 0.0, args.bin_im or 0.0)
    return None


def _params(parser, args) -> core.AtomParams:
    try:
        return core.AtomParams(args.big_gamma, args.gamma_loss)
    except core.InvalidParameterError as exc:
        parser.error(str(exc))


def _metadata(args) -> dict:
    meta = {k: v for k, v in vars(args).items() if k not in ("out", "format")}
    return {k: v for k, v in meta.items() if v is not None}


def _single(fmt: str, record: dict, args) -> str:
    if fmt == "csv":
        cells = ("" if v is None else repr(v) for v in record.values())
        return ",".join(record) + "\n" + ",".join(cells) + "\n"
    return json.dumps({**record, "metadata": _metadata(args)}, indent=1) + "\n"


def _cmd_steady(parser, args) -> str:
    params = _params(parser, args)
    b_in = _amplitude(parser, args)
    if b_in is None:
        parser.error("steady needs --intensity or --bin-re/--bin-im")
    sol = core.steady_state(params, b_in)
    intensity = abs(b_in) ** 2
    record = {
        "b_in_re": b_in.real, "b_in_im": b_in.imag,
        "intensity": intensity,
        "x": intensity / params.big_gamma,
        "sigma_minus_re": sol.state.sigma_minus.real,
        "sigma_minus_im": sol.state.sigma_minus.imag,
        "sigma_z": sol.state.sigma_z,
        "b_out_re": sol.b_out.real, "b_out_im": sol.b_out.imag,
        "p_noise": sol.p_noise,
        "p_loss": sol.p_loss,
        "amplitude_ratio": sol.amplitude_ratio if intensity > 0 else None,
    }
    return _single(args.format or "json", record, args)


def _cmd_simulate(parser, args) -> str:
    params = _params(parser, args)
    kind = DRIVE_CHOICES[args.drive]
    if kind == "constant":
        b = _amplitude(parser, args)
        if b is None:
            parser.error("constant drive needs --intensity or --bin-re/--bin-im")
        drive = dynamics.DriveSignal.constant(b)
    elif kind == "step-sequence":
        if not args.steps:
            parser.error("steps drive needs at least one --step START INTENSITY")
        if any(i < 0 for _, i in args.steps):
            parser.error("step intensities must be >= 0")
        try:
            drive = dynamics.DriveSignal.step_sequence(
                [(t, math.sqrt(i)) for t, i in args.steps])
        except core.DomainError as exc:
            parser.error(str(exc))
    else:
        if args.duration is None or args.photons is None:
            parser.error(f"{args.drive} pulse needs --duration and --photons")
        if args.duration <= 0 or args.photons < 0:
            parser.error("--duration must be > 0 and --photons >= 0")
        default_center = 0.5 if kind == "square-pulse" else 3.0
        center = args.center if args.center is not None else default_center * args.duration
        factory = (dynamics.DriveSignal.square_pulse if kind == "square-pulse"
                   else dynamics.DriveSignal.gaussian_pulse)
        drive = factory(center, args.duration, args.photons)
    t_max = args.t_max if args.t_max is not None else 20.0 / params.big_gamma
    try:
        config = dynamics.IntegratorConfig(t_max=t_max, step=args.dt,
                                           record_stride=args.stride)
    except core.InvalidParameterError as exc:
        parser.error(str(exc))
    initial = core.BlochState.ground() if args.initial == "ground" else core.BlochState.excited()

    record = dynamics.integrate(params, drive, initial, config)
    if (args.format or "csv") == "csv":
        return record.to_csv()
    audit = dynamics.energy_audit(record)
    payload = {
        "metadata": _metadata(args),
        "converged": record.converged,
        "audit": asdict(audit),
        "samples": record.to_dicts(),
    }
    return json.dumps(payload, indent=1) + "\n"


def _cmd_sweep(parser, args) -> str:
    params = _params(parser, args)
    try:
        grid = sweep.Grid.intensity(args.grid_min, args.grid_max, args.points)
    except core.DomainError as exc:
        parser.error(str(exc))
    rows = sweep.response_sweep(params, grid, workers=args.workers)
    if (args.format or "csv") == "csv":
        return sweep.rows_to_csv(rows, sweep.SWEEP_HEADER)
    return sweep.rows_to_json(rows) + "\n"


def _cmd_linear(parser, args) -> str:
    if args.beta_sweep is not None:
        lo, hi, n = args.beta_sweep
        if n != int(n):
            parser.error("beta-sweep POINTS must be an integer")
        try:
            grid = sweep.Grid.beta(lo, hi, int(n))
            rows = sweep.beta_sweep(grid, args.big_gamma)
        except (core.DomainError, core.InvalidParameterError) as exc:
            parser.error(str(exc))
        if (args.format or "csv") == "csv":
            return sweep.rows_to_csv(rows, sweep.BETA_HEADER)
        return sweep.rows_to_json(rows) + "\n"
    if args.beta is not None:
        if args.gamma_loss != 0.0:
            parser.error("give either --beta or --gamma-loss, not both")
        try:
            params = core.AtomParams.from_beta(args.beta, args.big_gamma)
        except (core.DomainError, core.InvalidParameterError) as exc:
            parser.error(str(exc))
    else:
        params = _params(parser, args)
    ratio = core.linear_response(params)
    record = {
        "beta": params.beta,
        "gamma_loss": params.gamma_loss,
        "linear_ratio": ratio,
        "intensity_ratio": ratio**2,
    }
    return _single(args.format or "json", record, args)


def _cmd_params(parser, args) -> str:
    try:
        eff = core.effective_gamma(core.CavityParams(args.g, args.kappa))
    except core.InvalidParameterError as exc:
        parser.error(str(exc))
    record = {"big_gamma": eff.big_gamma, "g_over_kappa": eff.g_over_kappa,
              "bad_cavity": eff.bad_cavity}
    return _single(args.format or "json", record, args)


def _cmd_pulse_check(parser, args) -> str:
    params = _params(parser, args)
    try:
        check = core.two_photon_pulse_check(params, args.duration, args.photons)
    except core.DomainError as exc:
        parser.error(str(exc))
    record = {"duration": check.duration, "photons": check.photons,
              "average_intensity": check.average_intensity,
              "switching_intensity": check.switching_intensity,
              "exceeds": check.exceeds}
    return _single(args.format or "json", record, args)


COMMANDS = {
    "steady": _cmd_steady,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "linear": _cmd_linear,
    "params": _cmd_params,
    "pulse-check": _cmd_pulse_check,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = COMMANDS[args.command](parser, args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (dynamics.IntegrationError, core.InvalidStateError, core.DomainError,
            core.InvalidParameterError, ArithmeticError) as exc:
        print(f"piswitch: error: {exc}", file=sys.stderr)
        return 1
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
