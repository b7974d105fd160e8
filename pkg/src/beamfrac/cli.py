"""``beamfrac`` command line.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O error.
``BEAMFRAC_THREADS`` caps the BLAS/OpenMP thread pools used by assembly and
the linear solvers.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .config import parse_config
from .errors import BeamFracError, ConfigError, SolverError, UnsupportedScenarioError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

SHIPPED = ("cantilever_moment", "buckling", "spall", "transverse_fracture", "spaghetti")


def shipped_config(name: str) -> Path:
    """Path of a bundled configuration, e.g. ``shipped_config("spall")``."""
    stem = name.removesuffix(".cfg")
    if stem not in SHIPPED:
        raise ConfigError(f"no shipped config named '{name}'")
    return Path(str(resources.files("beamfrac") / "configs" / f"{stem}.cfg"))


def _resolve(arg: str) -> Path:
    p = Path(arg)
    if p.exists() or p.suffix == ".cfg" or "/" in arg:
        return p
    return shipped_config(arg)


def _cmd_run(args):
    from .output import headline, run

    cfg = parse_config(_resolve(args.config))
    out = Path(args.out) if args.out else Path(f"{cfg.scenario}_out")
    res = run(cfg, out, snapshot_stride=args.stride)
    print(f"{cfg.scenario}: {headline(res.result.summary)}")
    print(f"wrote {res.history}, {res.summary} and {len(res.snapshots)} snapshots")


def _cmd_converge(args):
    from .output import converge

    cfg = parse_config(_resolve(args.config))
    out = Path(args.out) if args.out else Path(f"{cfg.scenario}_converge")
    path = converge(cfg, out, levels=args.levels)
    print(f"wrote {path}")


def _cmd_eigen(args):
    from .scenarios import build_scenario
    from .solvers import problem_timestep

    cfg = parse_config(_resolve(args.config))
    sc = build_scenario(cfg)
    est = problem_timestep(sc.problem)
    print(f"omega_max = {est.omega_max:.6e} rad/s")
    print(f"dt_c = {est.dt_c:.6e} s")


def _cmd_list(args):
    for name in SHIPPED:
        print(f"{name:22s} {shipped_config(name)}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beamfrac", description="DG/cohesive fracture of Kirchhoff beams")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario and write history, snapshots and summary")
    r.add_argument("config", help="config file or shipped config name")
    r.add_argument("--out", help="output directory (default <scenario>_out)")
    r.add_argument("--stride", type=int, help="snapshot stride in steps (0 disables)")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("converge", help="mesh/penalty convergence table (cantilever only)")
    c.add_argument("config")
    c.add_argument("--out")
    c.add_argument("--levels", type=int, default=7, help="number of meshes (default 7)")
    c.set_defaults(func=_cmd_converge)

    e = sub.add_parser("eigen", help="print omega_max and the stable time step")
    e.add_argument("config")
    e.set_defaults(func=_cmd_eigen)

    ls = sub.add_parser("list", help="list the shipped configurations")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = os.environ.get("BEAMFRAC_THREADS")
    if threads is not None and not (threads.isdigit() and int(threads) >= 1):
        print(f"beamfrac: config error: BEAMFRAC_THREADS must be a positive integer, got '{threads}'",
              file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "stride", None) is not None and args.stride < 0:
        print("beamfrac: config error: --stride must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        args.func(args)
    except (ConfigError, UnsupportedScenarioError) as exc:
        print(f"beamfrac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"beamfrac: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"beamfrac: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BeamFracError as exc:
        print(f"beamfrac: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
