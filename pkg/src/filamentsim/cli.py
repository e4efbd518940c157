"""Command-line interface: run simulations and drive each stage one-shot.

Subcommands:
  run        full time integration from a JSON config
  construct  build the complex level set grid from an OBJ polyline file
  extract    pull zero curves out of a level set grid file
  diag       twist / writhe / conditioning report for a configured scene

Exit codes: 0 success, 2 configuration error, 3 simulation error (the
failing frame is reported on stderr).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .config import SchemaError, load_config
from .curves import writhe
from .errors import FilamentError
from .framing import conditioning_report, frame_and_twist
from .grid import GridSpec, build_narrow_band
from .levelset import extract_curves
from .sim import init_from_config, run
from .solidangle import construct_psi


def _parse_triple(text, cast=float):
    parts = [cast(t) for t in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated values")
    return tuple(parts)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="filamentsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a simulation from a JSON config")
    pr.add_argument("config")
    pr.add_argument("--out", default="out", help="output directory")
    pr.add_argument("--frames", type=int, default=None, help="override step count")
    pr.add_argument("--ablation", default=None, help="override ablation mode")
    pr.add_argument("--export-grid", action="store_true", help="write the field per frame")
    pr.add_argument("--seed", type=int, default=None, help="override RNG seed")

    pc = sub.add_parser("construct", help="one-shot field construction from curves")
    pc.add_argument("curves", help="OBJ polyline file")
    pc.add_argument("--dims", type=lambda s: _parse_triple(s, int), required=True)
    pc.add_argument("--spacing", type=float, required=True)
    pc.add_argument("--origin", type=_parse_triple, default=None)
    pc.add_argument("--band-cells", type=float, default=6.0)
    pc.add_argument("--out", default="psi.vti")

    pe = sub.add_parser("extract", help="one-shot curve extraction from a field")
    pe.add_argument("grid", help="VTK ImageData file with psi arrays")
    pe.add_argument("--out", default="curves.obj")
    pe.add_argument("--min-vertices", type=int, default=4)
    pe.add_argument("--min-length", type=float, default=None)

    pd = sub.add_parser("diag", help="twist/writhe/conditioning JSON report")
    pd.add_argument("config")
    pd.add_argument("--out", default=None, help="write the report here instead of stdout")
    return p


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.frames is not None:
        config.steps = args.frames
    if args.ablation is not None:
        config.ablation = args.ablation
        config.__post_init__()
    if args.seed is not None:
        config.seed = args.seed
    run(config, args.out, export_grid=args.export_grid)
    return 0


def _cmd_construct(args) -> int:
    curves = io.import_curves_obj(args.curves)
    if args.origin is None:
        lo, hi = curves.bounding_box()
        center = 0.5 * (lo + hi)
        extent = args.spacing * (np.array(args.dims, dtype=float) - 1.0)
        origin = tuple(center - 0.5 * extent)
    else:
        origin = args.origin
    spec = GridSpec(args.dims, np.asarray(origin), args.spacing)
    band = build_narrow_band(curves, spec, args.band_cells * args.spacing)
    psi = construct_psi(curves, spec, band)
    io.export_grid_vti(psi, args.out)
    return 0


def _cmd_extract(args) -> int:
    psi = io.read_grid_vti(args.grid)
    curves = extract_curves(psi, band=None, min_vertices=args.min_vertices, min_length=args.min_length)
    io.export_curves_obj(curves, args.out)
    return 0


def _cmd_diag(args) -> int:
    config = load_config(args.config)
    state = init_from_config(config)
    twists = frame_and_twist(state.psi, state.curves)
    report = conditioning_report(state.psi, state.curves)
    wr = writhe(state.curves)
    doc = {
        "scene": config.scene,
        "loops": state.curves.loop_count,
        "vertices": int(len(state.curves.vertices)),
        "writhe": wr,
        "total_twist": twists[1],
        "twist_plus_writhe": twists[1] + wr,
        "conditioning": report.summary(),
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "construct": _cmd_construct,
        "extract": _cmd_extract,
        "diag": _cmd_diag,
    }
    try:
        return handlers[args.command](args)
    except SchemaError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FilamentError as exc:
        frame = getattr(exc, "frame", None)
        where = f" at frame {frame}" if frame is not None else ""
        print(f"simulation error{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
