"""Command-line front end.

Exit codes: 0 success, 1 computation error, 2 input or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import lmba, touchstone
from .config import ConfigError, TopologyConfig
from .sfg import CycleLimitError, to_dot

OFFSET_LIMIT_DEG = 30.0


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def _load(args) -> TopologyConfig:
    cfg = TopologyConfig.load(args.config)
    if args.grid_points is not None:
        cfg = cfg.with_grid_points(args.grid_points)
    return cfg


def cmd_offset(args) -> int:
    cfg = _load(args)
    t = cfg.topology()
    off = lmba.phase_offset(t)
    _emit(lmba.offset_csv(t.grid.points, off), args.out)
    worst = float(np.abs(off).max())
    verdict = "PASS" if worst <= args.limit else "FAIL"
    if not args.quiet:
        print(f"max |offset| = {worst:.6g} deg over {t.grid.f_min:.6g}-{t.grid.f_max:.6g} Hz: "
              f"{verdict} (limit {args.limit:g} deg)", file=sys.stderr)
    return 0


def cmd_trajectory(args) -> int:
    cfg = _load(args)
    t = cfg.topology()
    traj = lmba.trajectory_sweep(t, cfg.drive_profile(), cfg.z_ref)
    _emit(lmba.trajectory_csv(traj), args.out)
    if not args.quiet:
        print(f"{traj.frequencies.size} frequencies x {traj.levels.size} drive levels; "
              f"max trajectory spread across frequency = {traj.max_deviation():.3e}", file=sys.stderr)
    return 0


def cmd_align(args) -> int:
    cfg = _load(args)
    t = cfg.topology()
    f0 = cfg.align_f0(t.grid)
    best, worst = lmba.align_phase_shifter(t, cfg.align_candidates(), f0)
    print(f"best phase shifter length: {best:.6g} deg at {f0:.9g} Hz")
    print(f"minimax |offset|: {worst:.6g} deg")
    if args.write_config:
        write_atomic(args.write_config, json.dumps(cfg.with_phase_shifter(best, f0), indent=2) + "\n")
    return 0


def cmd_graph(args) -> int:
    cfg = _load(args)
    t = cfg.topology()
    g = lmba.build_graph(t)
    k = args.freq_index
    if not -len(t.grid) <= k < len(t.grid):
        raise _Fail(2, f"frequency index {k} outside grid of {len(t.grid)} points")
    _emit(to_dot(g, k, "pdlmba", float(t.grid.points[k])), args.out)
    if not args.quiet:
        print(f"{len(g.nodes)} nodes, {len(g.gains)} branches", file=sys.stderr)
    return 0


def cmd_parse(args) -> int:
    n = args.ports or touchstone.ports_from_suffix(args.file)
    path = Path(args.file)
    if not path.is_file():
        raise _Fail(2, f"touchstone file not found: {path}")
    doc = touchstone.parse(path.read_text(encoding="utf-8"), n)
    if not args.quiet:
        f = doc.frequencies
        print(f"{path}: {doc.n_ports}-port, {f.size} points, {f[0]:.9g}-{f[-1]:.9g} Hz, "
              f"format {doc.format}, R {doc.z_ref:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdlmba", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="topology JSON file")
        if out:
            p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--grid-points", type=int, help="override the number of grid points")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("offset", help="BA/CA path phase offset versus frequency (CSV)")
    common(p)
    p.add_argument("--limit", type=float, default=OFFSET_LIMIT_DEG, help="pass threshold in degrees")
    p.set_defaults(func=cmd_offset)

    p = sub.add_parser("trajectory", help="BA load reflection trajectories (CSV)")
    common(p)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("align", help="search the phase-shifter length")
    common(p, out=False)
    p.add_argument("--write-config", help="write a copy of the config with the best phase shifter")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("graph", help="flow graph as DOT")
    common(p)
    p.add_argument("--freq-index", type=int, default=0, help="grid index for the gain labels")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("parse", help="validate a Touchstone v1 file")
    p.add_argument("file")
    p.add_argument("--ports", type=int, help="port count (default: from the .sNp suffix)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_parse)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, touchstone.TouchstoneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, CycleLimitError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
