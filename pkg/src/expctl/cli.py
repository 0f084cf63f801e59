"""Command-line entry point.

Exit status: 0 success, 1 validation error, 2 controller failure.
"""
import argparse
import json
from dataclasses import replace
import os
import sys

import numpy as np

from .control import apply_sequence, compile_state_prep, resonance_table
from .diagnose import solve_drift
from .errors import ControllerFailure, ExpctlError, NonUniqueGaps, ValidationError
from .functions import REGISTRY, get_function
from .loop import run_closed_loop, run_sweep
from .scenario import (
    ScenarioError,
    fmt_float,
    load_json,
    load_scenario,
    parse_state,
    summary_json,
    trajectory_csv,
)
from .system import ENERGY, MixtureModel, State, change_basis, mixture_weights

EXIT_OK, EXIT_INVALID, EXIT_CONTROLLER = 0, 1, 2


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_simulate(args):
    sc = load_scenario(args.scenario)
    os.makedirs(args.out, exist_ok=True)
    if not args.seeds:
        res = run_closed_loop(sc.system, sc.initial_state, sc.drift, sc.controller, sc.epochs)
        _write(os.path.join(args.out, "trajectory.csv"), trajectory_csv(res))
        _write(os.path.join(args.out, "summary.json"), summary_json(res))
        print(f"epochs={res.epochs} failures={res.failures} max_deviation={fmt_float(res.max_deviation)}")
        return EXIT_OK
    seeds = [int(s) for s in args.seeds.split(",")]
    jobs = [(sc.system, sc.initial_state, replace(sc.drift, seed=s), replace(sc.controller, seed=s), sc.epochs)
            for s in seeds]
    for s, res in zip(seeds, run_sweep(jobs, workers=args.workers)):
        d = os.path.join(args.out, f"seed_{s}")
        os.makedirs(d, exist_ok=True)
        _write(os.path.join(d, "trajectory.csv"), trajectory_csv(res))
        _write(os.path.join(d, "summary.json"), summary_json(res))
        print(f"seed={s} epochs={res.epochs} failures={res.failures} "
              f"max_deviation={fmt_float(res.max_deviation)}")
    return EXIT_OK


def cmd_prepare(args):
    sc = load_scenario(args.scenario)
    target = parse_state(load_json(args.target), "target", sc.system.dim)
    seq = compile_state_prep(sc.system, target)
    ground = State.basis_state(ENERGY, sc.system.dim, 0)
    prepared = apply_sequence(seq, ground).amplitudes
    t = change_basis(sc.system, target, ENERGY).amplitudes
    fidelity = abs(np.vdot(t, prepared)) ** 2
    _write(args.out, json.dumps(seq.to_dict(), indent=2) + "\n")
    print(f"pulses={len(seq)} fidelity={fmt_float(fidelity)} out={args.out}")
    return EXIT_OK


def _pair(text):
    try:
        m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected m,n got {text!r}") from None
    return m, n


def cmd_diagnose(args):
    sc = load_scenario(args.scenario)
    m, n = args.pair
    diag = solve_drift(sc.system, sc.initial_state, args.dtheta, args.denergy, m, n)
    print("delta_a=" + " ".join(fmt_float(x) for x in diag.delta_a))
    print(f"residual={fmt_float(diag.residual)}")
    print(f"condition={fmt_float(diag.condition)}")
    print(f"sign_ambiguous={str(diag.sign_ambiguous).lower()}")
    return EXIT_OK


def cmd_weights(args):
    model = MixtureModel(args.e1, args.e2, get_function(args.f))
    w1, w2 = mixture_weights(model, args.observed)
    print(f"w1={w1:.12g} w2={w2:.12g}")
    return EXIT_OK


def cmd_resonances(args):
    sc = load_scenario(args.scenario)
    table = resonance_table(sc.system.energies)
    print("m,n,omega")
    for (m, n), w in table.sorted_entries():
        print(f"{m},{n},{fmt_float(w)}")
    print(f"unique={str(table.unique).lower()} min_separation={fmt_float(table.min_gap_separation)}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="expctl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the closed loop")
    s.add_argument("scenario")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--seeds", help="comma-separated seed sweep; one subdirectory per seed")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("prepare", help="compile a state-preparation pulse sequence")
    s.add_argument("scenario")
    s.add_argument("--target", required=True, help="state JSON {basis, amplitudes}")
    s.add_argument("--out", required=True, help="pulses JSON path")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("diagnose", help="one-shot drift diagnosis against the initial state")
    s.add_argument("scenario")
    s.add_argument("--dtheta", type=float, required=True)
    s.add_argument("--denergy", type=float, required=True)
    s.add_argument("--pair", type=_pair, required=True, help="m,n")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("weights", help="two-species mixture weights")
    s.add_argument("--f", required=True, choices=sorted(REGISTRY))
    s.add_argument("--e1", type=float, required=True)
    s.add_argument("--e2", type=float, required=True)
    s.add_argument("--observed", type=float, required=True)
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("resonances", help="transition frequencies and unique-gap verdict")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_resonances)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ControllerFailure as exc:
        print(f"controller failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTROLLER
    except NonUniqueGaps as exc:
        print(f"error: NonUniqueGaps: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ExpctlError, ValidationError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
