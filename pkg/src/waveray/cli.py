"""Command line entry point.

    waveray run CONFIG --out DIR [--mode exact|eikonal] [--svg]
    waveray presets list
    waveray validate {free-gaussian,two-gaussian,gradient-fields,energy-audit}

Exit codes: 0 success or PASS, 1 validation FAIL, 2 usage or config error,
3 caustic (or amplitude-floor) abort.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import config_to_dict, parse_config
from .core import ConfigError
from .integrator import RunAborted, run
from .output import SVG_KINDS, RunManifest, render_svg, write_frames
from .scenarios import PRESET_TAGS, preset_summary
from .validation import CHECKS

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAUSTIC = 0, 1, 2, 3

log = logging.getLogger("waveray")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="waveray", description="Ray bundles coupled by the wave potential.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="integrate a scenario config and write its outputs")
    p_run.add_argument("config", help="YAML config file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--mode", choices=("exact", "eikonal"), help="override the config's mode")
    p_run.add_argument("--svg", action="store_true", help="also write trajectory, profile and width plots")

    p_pre = sub.add_parser("presets", help="list the built-in scenarios")
    p_pre.add_argument("action", choices=("list",))

    p_val = sub.add_parser("validate", help="run one self-check")
    p_val.add_argument("check", choices=tuple(CHECKS))
    return parser


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _finite(report: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in report.items()}


def cmd_run(args) -> int:
    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.mode:
        config = config.replace(mode=args.mode)
    out = Path(args.out)
    started = _now()
    code = EXIT_OK
    try:
        frames, report = run(config)
    except RunAborted as exc:
        frames, report = exc.frames, exc.report
        print(f"caustic abort: {exc}", file=sys.stderr)
        code = EXIT_CAUSTIC
    try:
        files = write_frames(frames, out) if frames else []
        if args.svg and frames:
            free = config.field.type == "free"
            files += [render_svg(frames, kind, out / f"{kind}.svg", config.units, free) for kind in SVG_KINDS]
        manifest = RunManifest(
            config=config_to_dict(config), version=__version__, started=started, stopped=_now(),
            status=report.status, report=_finite(report.as_dict()),
        )
        out.mkdir(parents=True, exist_ok=True)
        manifest.outputs = sorted([p.name for p in files] + ["manifest.json"])
        manifest.write(out)
    except OSError as exc:
        print(f"cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{report.status}: {len(frames)} frames, t={report.time:g}, outputs in {out}")
    return code


def cmd_presets(args) -> int:
    for tag in PRESET_TAGS:
        print(preset_summary(tag))
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        ok, metrics = CHECKS[args.check]()
    except RunAborted as exc:
        print(f"FAIL {args.check} caustic abort: {exc}")
        return EXIT_CAUSTIC
    values = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in metrics.items())
    print(f"{'PASS' if ok else 'FAIL'} {args.check} {values}")
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(name)s: %(message)s")
    handler = {"run": cmd_run, "presets": cmd_presets, "validate": cmd_validate}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
