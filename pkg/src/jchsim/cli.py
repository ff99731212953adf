"""Command line front end.

Subcommands:
  simulate <config>                     run a config, write CSV/SVG artifacts
  dimension <N> <M>                     print the exact sector dimension
  calibrate --spectrum CSV | --rabi CSV fit trap/beam parameters

Exit codes: 0 success, 2 config/parse error, 3 infeasible physics,
4 numerical failure.
"""

import argparse
import math
import os
import sys

from .calibration import (
    DegenerateDataError,
    FitError,
    fit_beam_profile,
    fit_chain_from_spectrum,
    initial_trap_guess,
)
from .constants import to_khz, to_mhz, to_microns
from .experiment import ConfigError, InfeasibleError, read_rabi_csv, read_spectrum_csv, run
from .fock_basis import sector_dimension
from .propagator import PropagationError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="jchsim",
        description="Trapped-ion Jaynes-Cummings-Hubbard chain simulator",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="parallelism for detuning scans")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for multi-start fit jitter")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a key=value config file")
    p_sim.add_argument("config")
    p_sim.add_argument("--output-dir", default=None)

    p_dim = sub.add_parser("dimension", help="exact sector dimension")
    p_dim.add_argument("n_ions", type=int)
    p_dim.add_argument("excitations", type=int)

    p_cal = sub.add_parser("calibrate", help="fit trap or beam parameters")
    group = p_cal.add_mutually_exclusive_group(required=True)
    group.add_argument("--spectrum", help="CSV: index,frequency_MHz")
    group.add_argument("--rabi", help="CSV: position_um,rabi_kHz")

    return parser


def _cmd_simulate(args):
    out = run(args.config, output_dir=args.output_dir,
              threads=args.threads, seed=args.seed)
    print(f"wrote artifacts to {out}")
    return EXIT_OK


def _cmd_dimension(args):
    dim = sector_dimension(args.n_ions, args.excitations)
    print(f"D({args.n_ions},{args.excitations}) = {dim}")
    print(f"log2(D) = {math.log2(dim):.4f}" if dim > 1 else "log2(D) = 0.0000")
    return EXIT_OK


def _cmd_calibrate(args):
    if args.spectrum:
        measured = read_spectrum_csv(args.spectrum)
        guess = initial_trap_guess(measured)
        fit = fit_chain_from_spectrum(measured, guess, seed=args.seed)
        print(f"n_ions = {fit.geometry.n_ions}")
        print(f"transverse_MHz = {to_mhz(fit.trap.transverse_frequency):.6f}")
        print(f"axial_kHz = {to_khz(fit.trap.axial_quadratic):.6f}")
        print(f"quartic = {fit.trap.axial_quartic:.6g}")
        spacings = ",".join(
            f"{to_microns(d):.4f}" for d in fit.geometry.spacings
        )
        print(f"spacings_um = {spacings}")
        print(f"rms_residual_kHz = {to_khz(fit.rms_residual):.4f}")
    else:
        positions, rabis = read_rabi_csv(args.rabi)
        profile = fit_beam_profile(positions, rabis)
        if profile.is_flat:
            print("profile = flat")
            print(f"peak_rabi_kHz = {to_khz(profile.peak_rabi):.6f}")
        else:
            print("profile = gaussian")
            print(f"peak_rabi_kHz = {to_khz(profile.peak_rabi):.6f}")
            print(f"waist_um = {to_microns(profile.waist):.4f}")
            print(f"center_um = {to_microns(profile.beam_center):.4f}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "dimension":
            return _cmd_dimension(args)
        return _cmd_calibrate(args)
    except (ConfigError, FileNotFoundError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FitError, PropagationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
