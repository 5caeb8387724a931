"""Command-line entry point: one subcommand per experiment protocol.

Every subcommand writes trace.csv, report.json and plot.svg under --out and
prints a one-paragraph summary. Exit codes: 0 success, 1 argument/validation
error, 2 simulation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, io
from .experiments import InvariantViolation
from .params import resolve_preset
from .plant import Mode, SimulationError
from .selector import COMPLETED
from .spring_hub import HubModel, NONLINEAR, effective_length, hub_torque, linearized_stiffness


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 instead of argparse's 2
        raise CliError(f"{message}\n{self.format_usage()}")


def build_parser() -> _Parser:
    parser = _Parser(prog="tsea", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--preset", default="calibrated",
                        help="named preset or path to a preset JSON file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=0, help="noise seed")
        sp.add_argument("--noise", action="store_true",
                        help="apply encoder noise to the logged output angle")

    sp = sub.add_parser("stiffness", help="locked-output quasi-static stiffness test")
    sp.add_argument("--mode", choices=("sea", "pea"), required=True)
    sp.add_argument("--cycles", type=int, default=3)
    sp.add_argument("--rate", type=float, default=0.2, help="torque ramp rate [Nm/s]")
    common(sp)

    sp = sub.add_parser("track", help="sinusoidal tracking with periodic topology switches")
    sp.add_argument("--duration", type=float, default=30.0)
    sp.add_argument("--period", type=float, default=5.0, help="switch request period [s]")
    common(sp)

    sp = sub.add_parser("disturb", help="impulse disturbance rejection under position hold")
    sp.add_argument("--mode", choices=("sea", "pea"), required=True)
    sp.add_argument("--impacts", type=int, default=None,
                    help="number of impacts (default 6 sea / 5 pea)")
    sp.add_argument("--impulse", type=float, default=experiments.IMPACT_TORQUE_NM,
                    help="impact pulse torque [Nm]")
    common(sp)

    sp = sub.add_parser("cycle", help="switching endurance run")
    sp.add_argument("--n", type=int, default=324, help="number of switches")
    common(sp)

    sp = sub.add_parser("hub-curve", help="sweep the nonlinear hub torque curve")
    sp.add_argument("--range", type=float, default=0.5, dest="sweep_range",
                    help="sweep limit [rad]; grid covers ±range")
    sp.add_argument("--steps", type=int, default=201)
    common(sp)

    return parser


def _write_outputs(out_dir: Path, trace, report_dict: dict, svg_series: dict,
                   svg_bands, noise_model: io.NoiseModel, title: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    logged = io.apply_noise(trace, noise_model)
    io.write_trace_csv(logged, out_dir / "trace.csv")
    io.write_report_json(report_dict, out_dir / "report.json")
    io.emit_svg_plot(logged.t, svg_series, out_dir / "plot.svg",
                     bands=svg_bands, title=title)


def _run_stiffness(args, preset) -> dict:
    mode = Mode.SEA if args.mode == "sea" else Mode.PEA
    trace, report = experiments.run_static_stiffness(mode, preset, ramp_rate=args.rate,
                                                     cycles=args.cycles)
    d = report.as_dict()
    _write_outputs(
        Path(args.out), trace, d,
        {"theta_m [rad]": trace.theta_m, "tau_applied [Nm]": trace.tau_applied},
        None, _noise(args), f"stiffness {args.mode}: K_fit={report.K_fit:.3f} Nm/rad",
    )
    print(f"stiffness {args.mode}: K_fit = {report.K_fit:.4f} ± {report.K_stderr:.4f} Nm/rad, "
          f"loop area = {report.loop_area:.4f} Nm·rad over {len(report.k_per_cycle)} cycles")
    return d


def _run_track(args, preset) -> dict:
    trace, report = experiments.run_dynamic_switching(preset, duration=args.duration,
                                                      switch_period=args.period)
    d = report.as_dict()
    bands = io.mode_bands(trace)
    _write_outputs(
        Path(args.out), trace, d,
        {"theta_m [rad]": trace.theta_m, "theta_o [rad]": trace.theta_o,
         "i_q [A]": trace.i_q},
        bands, _noise(args), "dynamic switching",
    )
    done = sum(1 for r in report.switch_records if r.outcome == COMPLETED)
    print(f"track: {done} switches completed, {report.retried_attempts} retried attempts")
    for name, stats in report.per_mode.items():
        print(f"  {name}: rms error {stats['rms_error_rad']:.4f} rad, "
              f"rms i_q {stats['rms_iq_a']:.2f} A, peak i_q {stats['peak_iq_a']:.2f} A")
    return d


def _run_disturb(args, preset) -> dict:
    mode = Mode.SEA if args.mode == "sea" else Mode.PEA
    trace, report = experiments.run_disturbance(mode, preset, n_impacts=args.impacts,
                                                impact_torque=args.impulse)
    d = report.as_dict()
    _write_outputs(
        Path(args.out), trace, d,
        {"theta_o [rad]": trace.theta_o, "i_q [A]": trace.i_q},
        None, _noise(args), f"disturbance {args.mode}",
    )
    settle = ("n/a" if report.mean_settling_ms is None
              else f"{report.mean_settling_ms:.0f} ms")
    print(f"disturb {args.mode}: mean peak {report.mean_peak_deg:.2f} deg, "
          f"mean settling {settle} over {len(report.peaks_deg)} impacts")
    return d


def _run_cycle(args, preset) -> dict:
    trace, report = experiments.run_switch_cycle(preset, n=args.n)
    d = report.as_dict()
    bands = io.mode_bands(trace)
    _write_outputs(
        Path(args.out), trace, d,
        {"theta_m [rad]": trace.theta_m, "tau_spring [Nm]": trace.tau_spring},
        bands, _noise(args), f"endurance: {report.completed} switches",
    )
    print(f"cycle: {report.completed} completed, {report.rejected} rejected, "
          f"0 violations, max engagement KE loss {report.max_ke_loss_j:.2e} J")
    return d


def _run_hub_curve(args, preset) -> dict:
    if args.steps < 2:
        raise CliError("--steps must be >= 2")
    hub = HubModel(preset.hub, mode=NONLINEAR)
    betas = np.linspace(-args.sweep_range, args.sweep_range, args.steps)
    taus = np.array([hub_torque(preset.hub, float(b)) for b in betas])
    lengths = np.array([effective_length(preset.hub, float(b)) for b in betas])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "trace.csv", "w", newline="") as fh:
        fh.write("beta,tau_hub,l_eff\n")
        for b, tau, l in zip(betas, taus, lengths):
            fh.write(f"{float(b)!r},{float(tau)!r},{float(l)!r}\n")
    k_lin = linearized_stiffness(preset.hub)
    d = {"k_linearized_nm_per_rad": k_lin,
         "sweep_range_rad": args.sweep_range, "steps": args.steps}
    io.write_report_json(d, out_dir / "report.json")
    io.emit_svg_plot(betas, {"tau_hub [Nm]": taus, "l_eff [mm]": lengths},
                     out_dir / "plot.svg", title=f"hub curve, K_lin={k_lin:.3f} Nm/rad")
    print(f"hub-curve: {args.steps} points over ±{args.sweep_range} rad, "
          f"K_lin = {k_lin:.4f} Nm/rad")
    return d


def _noise(args) -> io.NoiseModel:
    return io.NoiseModel(enabled=args.noise, seed=args.seed)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        preset = resolve_preset(args.preset)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    runners = {
        "stiffness": _run_stiffness,
        "track": _run_track,
        "disturb": _run_disturb,
        "cycle": _run_cycle,
        "hub-curve": _run_hub_curve,
    }
    try:
        runners[args.command](args, preset)
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SimulationError, InvariantViolation) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
