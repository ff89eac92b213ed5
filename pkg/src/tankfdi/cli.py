"""Command-line entry point.

Subcommands: design (print observer synthesis), simulate (run and write
artifacts), detect (print detection reports), compare (print the MSE
table). Global flags --seed/--dt/--horizon override the loaded config.
Exit codes: 0 success, 1 configuration/validation problem, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .analysis import eigenvalues
from .errors import NumericalError, ValidationError
from .harness import default_config, load_config, run_experiment
from .model import build_healthy
from .observer import place_observer_poles


def _build_parser():
    parser = argparse.ArgumentParser(prog="tankfdi", description="Three-tank fault detection benchmark")
    parser.add_argument("--seed", type=int, default=None, help="override RNG seed")
    parser.add_argument("--dt", type=float, default=None, help="override integration step")
    parser.add_argument("--horizon", type=float, default=None, help="override simulation horizon")
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="print observer gain and error-dynamics poles")
    p_design.add_argument("--config", default=None)
    p_design.add_argument("--poles", default=None, help="comma-separated desired poles")

    p_sim = sub.add_parser("simulate", help="run the experiment and write CSV/SVG artifacts")
    p_sim.add_argument("--config", default=None)
    p_sim.add_argument("--out", default=None, help="output directory")

    p_det = sub.add_parser("detect", help="print the detection report per scenario")
    p_det.add_argument("--config", default=None)

    p_cmp = sub.add_parser("compare", help="print the estimator MSE table")
    p_cmp.add_argument("--config", default=None)
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else default_config()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    return replace(cfg, **overrides) if overrides else cfg


def _cmd_design(args):
    cfg = _load(args)
    if args.poles:
        poles = tuple(float(v) for v in args.poles.split(","))
        cfg = replace(cfg, poles=poles)
    healthy = build_healthy_from(cfg)
    design = place_observer_poles(healthy, cfg.poles)
    np.set_printoptions(precision=12, suppress=False)
    print("Psi_o:", np.array2string(design.Psi_o, separator=", "))
    print("Psi:  ", np.array2string(design.Psi, separator=", "))
    eigs = eigenvalues(design.Gamma_d)
    print("error dynamics eigenvalues:", np.array2string(eigs, separator=", "))
    return 0


def build_healthy_from(cfg):
    from .model import TankParams

    return build_healthy(TankParams(cfg.psi, cfg.delta, cfg.delta_bar))


def _cmd_simulate(args):
    cfg = _load(args)
    artifacts = run_experiment(cfg)
    for path in artifacts.scenario_csvs + [artifacts.mse_csv] + artifacts.plot_paths:
        print(path)
    return 0


def _cmd_detect(args):
    cfg = _load(args)
    artifacts = run_experiment(cfg, emit=False)
    for si, report in enumerate(artifacts.detection_reports):
        if report.detected:
            print(f"scenario {si + 1}: detected=True t_d={report.t_d:.4f} (t_f={cfg.t_f})")
        else:
            print(f"scenario {si + 1}: detected=False (t_f={cfg.t_f})")
    return 0


def _cmd_compare(args):
    cfg = _load(args)
    artifacts = run_experiment(cfg, emit=False)
    print("estimator    scenario  mse_x1        mse_x2        mse_x3        aggregate")
    for name, entry in artifacts.mse_table.items():
        for si in range(entry["per_state"].shape[0]):
            m = entry["per_state"][si]
            agg = entry["aggregate"][si]
            print(f"{name:<12} {si + 1:<8} {m[0]:<13.6g} {m[1]:<13.6g} {m[2]:<13.6g} {agg:.6g}")
        print(f"{name:<12} {'all':<8} {'':<13} {'':<13} {'':<13} {entry['total']:.6g}")
    for key, msg in artifacts.errors.items():
        print(f"error in {key}: {msg}", file=sys.stderr)
    return 0


_COMMANDS = {
    "design": _cmd_design,
    "simulate": _cmd_simulate,
    "detect": _cmd_detect,
    "compare": _cmd_compare,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
