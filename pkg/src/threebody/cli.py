"""Command line front end: ``threebody-scatter run|sweep|oracle``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import (AssemblyFailure, DenominatorNearZero, InvalidConfig, MeshGenerationFailure,
                     NoBoundState, RankSystemSingular, ScatteringError, SingularSystem)
from .pipeline import SWEEP_AXES, RunConfig, convergence_sweep, run_scattering

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3
SOLVER_ERRORS = (SingularSystem, RankSystemSingular, DenominatorNearZero, AssemblyFailure, MeshGenerationFailure)

log = logging.getLogger("threebody")


def _values(text: str):
    try:
        return [json.loads(v) for v in text.split(",") if v.strip()]
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"bad --values list {text!r}") from exc


def _cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    if args.output:
        cfg.data["output_dir"] = args.output
    bundle = run_scattering(cfg)
    for res in bundle.results:
        a = res.amps
        log.info("E=%g  |a_1^+|=%.4f  balance=%.4f  nodes=%d  %.1fs",
                 res.cfg.E, abs(a.a[a.dominant()]), res.balance, res.domain.n_nodes, res.timings["total"])
    print(json.dumps({"files": bundle.manifest}, indent=2))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = RunConfig.load(args.config)
    rep = convergence_sweep(cfg, args.axis, _values(args.values), E=args.energy)
    text = json.dumps(rep, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from .oracle import dense_oracle_suite
    rep = dense_oracle_suite(n=args.n, rank=args.rank, trials=args.trials, seed=args.seed)
    print(json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK if rep.passed else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="threebody-scatter", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="solve for every energy in the config and write outputs")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="override output_dir")
    r.set_defaults(func=_cmd_run)
    s = sub.add_parser("sweep", help="convergence study along one parameter")
    s.add_argument("config")
    s.add_argument("--axis", required=True, choices=SWEEP_AXES)
    s.add_argument("--values", required=True, help="comma separated, e.g. 0.9,0.64")
    s.add_argument("--energy", type=float, help="energy to sweep (default: first in config)")
    s.add_argument("--out", help="also write the report here")
    s.set_defaults(func=_cmd_sweep)
    o = sub.add_parser("oracle", help="dense-matrix checks of the rank-one and rank-N algebra")
    o.add_argument("--n", type=int, default=30)
    o.add_argument("--rank", type=int, default=1)
    o.add_argument("--trials", type=int, default=100)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=_cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidConfig, NoBoundState) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SOLVER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ScatteringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
