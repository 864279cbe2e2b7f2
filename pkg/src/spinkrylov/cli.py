"""Command-line entry point: ``spinkrylov {ed,skqd,sparsity,scaling,warmstart}``.

Settings resolve as flags > ``--config`` JSON file > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

from .baselines import CapacityError
from .experiment import (
    ConfigError,
    ExperimentConfig,
    cmd_ed,
    cmd_scaling,
    cmd_skqd,
    cmd_sparsity,
    cmd_warmstart,
)
from .simulator import SimulatorCapacityError

EXIT_USAGE = 2
EXIT_CAPACITY = 3

# flag dest -> ExperimentConfig field
_FIELD_FLAGS = {
    "geometry": "geometry",
    "dims": "dims",
    "j1": "j1",
    "j2": "j2",
    "delta": "delta",
    "kmax": "kmax",
    "shots": "shots",
    "noise": "noise",
    "seed": "seed",
    "out": "out",
    "max_iterations": "max_iterations",
    "initial_states": "initial_states",
    "carryover_mode": "carry_over_mode",
    "carryover_fraction": "carry_over_fraction",
    "batch_size": "batch_size",
    "ed_max_sites": "ed_max_sites",
    "grid_points": "grid_points",
    "no_degeneracy": "degeneracy_expansion",
    "no_carryover": "carry_over_enabled",
    "no_recovery": "recovery_enabled",
}


def parse_dims(text: str) -> tuple[int, ...]:
    parts = [p for p in re.split(r"[x×,\s]+", text.strip()) if p]
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; use e.g. 12, 3x4 or 2x2x3") from None
    if not dims:
        raise argparse.ArgumentTypeError("dims must not be empty")
    return dims


def _floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of ExperimentConfig fields")
    p.add_argument("--geometry", choices=["chain", "kagome", "square"])
    p.add_argument("--dims", type=parse_dims, help="lattice size, e.g. 12, 2x2 (kagome cells) or 3x4 (rows x cols)")
    p.add_argument("--j1", type=float)
    p.add_argument("--j2", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--ed-max-sites", type=int, dest="ed_max_sites")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinkrylov", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    ed = sub.add_parser("ed", help="exact Sz = 0 ground energy")
    _model_flags(ed)

    ws = sub.add_parser("warmstart", help="product-state coordinate descent")
    _model_flags(ws)
    ws.add_argument("--grid-points", type=int, dest="grid_points")

    sk = sub.add_parser("skqd", help="simulate Krylov circuits and run the SKQD loop")
    _model_flags(sk)
    sk.add_argument("--kmax", type=int)
    sk.add_argument("--shots", type=int)
    sk.add_argument("--noise", type=float, help="readout bit-flip probability")
    sk.add_argument("--max-iterations", type=int, dest="max_iterations")
    sk.add_argument("--initial-states", type=lambda s: tuple(x for x in s.split(",") if x), dest="initial_states")
    sk.add_argument("--grid-points", type=int, dest="grid_points")
    sk.add_argument("--no-degeneracy", action="store_const", const=False, dest="no_degeneracy")
    sk.add_argument("--no-carryover", action="store_const", const=False, dest="no_carryover")
    sk.add_argument("--no-recovery", action="store_const", const=False, dest="no_recovery")
    sk.add_argument("--carryover-mode", choices=["replace", "accumulate"], dest="carryover_mode")
    sk.add_argument("--carryover-fraction", type=float, dest="carryover_fraction")
    sk.add_argument("--batch-size", type=int, dest="batch_size")
    sk.add_argument("--reference-energy", type=float, dest="reference_energy")

    sp = sub.add_parser("sparsity", help="top-fraction projection error curves")
    _model_flags(sp)
    sp.add_argument("--deltas", type=_floats, default=[1.0, 2.0])
    sp.add_argument("--fractions", type=_floats, default=[0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0])

    sc = sub.add_parser("scaling", help="Sz = 0 sector dimensions")
    sc.add_argument("--start", type=int, default=2)
    sc.add_argument("--stop", type=int, default=72)
    sc.add_argument("--step", type=int, default=2)
    sc.add_argument("--out")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    for flag, name in _FIELD_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data[name] = value
    return ExperimentConfig.from_dict(data)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "scaling":
            if args.start < 2 or args.start % 2 or args.step < 2 or args.step % 2:
                raise ConfigError("scaling needs an even start and an even step >= 2")
            rows = cmd_scaling(args.start, args.stop, args.step, args.out)
            print("n_sites,sector_dimension,asymptotic_ratio")
            for n, d, r in rows:
                print(f"{n},{d},{r:.6f}")
            return 0
        config = resolve_config(args)
        if args.command == "ed":
            report = cmd_ed(config)
            _emit({k: report[k] for k in ("energy", "n_sites", "sector_dimension", "residual", "wall_time_s")})
        elif args.command == "warmstart":
            report = cmd_warmstart(config)
            _emit({k: report[k] for k in ("energy", "neel_energy", "sweeps", "grid_points")})
        elif args.command == "skqd":
            summ = cmd_skqd(config, args.reference_energy)
            keys = ("final_energy", "reference_energy", "relative_error", "iterations", "converged", "subspace_dim")
            _emit({k: summ[k] for k in keys})
        elif args.command == "sparsity":
            rows = cmd_sparsity(config, args.deltas, args.fractions)
            print("delta,fraction,relative_error")
            for d, f, e in rows:
                print(f"{d},{f},{e:.6e}")
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        parser.error(str(exc))
    except (CapacityError, SimulatorCapacityError) as exc:
        print(f"spinkrylov: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    return 0


if __name__ == "__main__":
    sys.exit(main())
