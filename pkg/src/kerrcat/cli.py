"""Command line entry point.

    kerrcat <mode> --config run.json [--out DIR] [--workers N]

The subcommand overrides the mode recorded in the configuration file, so
one file can drive the sweep and the single-point reports.  Bundled
configurations (see kerrcat/configs/) can be named directly with --preset.
The exit status is 0 only when every grid point completed every pass.
"""

import argparse
import importlib.resources
import json
import sys

from . import sweep
from .config import load_config, validate_config, MODES
from .errors import KerrcatError


def _preset_doc(name):
    root = importlib.resources.files("kerrcat").joinpath("configs")
    path = root.joinpath(f"{name}.json")
    if not path.is_file():
        avail = sorted(p.name[:-5] for p in root.iterdir()
                       if p.name.endswith(".json"))
        raise KerrcatError(
            f"no bundled config {name!r}; available: {', '.join(avail)}")
    return json.loads(path.read_text())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kerrcat",
        description="Floquet analysis of the driven Kerr-cat qubit")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode, help=f"run in {mode} mode")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="path to a JSON configuration")
        src.add_argument("--preset", help="name of a bundled configuration")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel workers (overrides KERRCAT_THREADS "
                            "and the config)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.preset:
            cfg = validate_config(_preset_doc(args.preset))
        else:
            cfg = load_config(args.config)
        manifest = sweep.run(cfg, mode=args.mode, output_dir=args.out,
                             workers=args.workers)
    except KerrcatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    ok = bool(manifest.get("all_ok"))
    if args.mode in ("sweep", "curve"):
        for st in manifest.get("k_status", []):
            tag = "ok" if st["ok"] else f"FAILED at {st['failed_stage']}"
            print(f"K = {st['K']:.6g}: {tag}")
    print(f"{args.mode}: {'all points ok' if ok else 'FAILURES, see manifest'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
