"""Command-line front end mirroring the compile-then-run simulator convention.

`compile` parses and elaborates the sources, writing a JSON snapshot with
the embedded source text; `run` simulates a snapshot; `sim` does both. Exit
status 0 means success, 1 means a syntax/semantic problem, 2 an internal
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .engine import Simulator, parse_sources
from .errors import VsimError


def _read_sources(paths: list[str]) -> dict[str, str]:
    sources = {}
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            sources[path] = fh.read()
    return sources


def _elaborate(sources: dict[str, str], top: str | None) -> Simulator:
    modules = parse_sources(sources)
    return Simulator(modules, top=top)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hdlforge-vsim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_compile = sub.add_parser("compile", help="parse + elaborate, write a snapshot")
    p_compile.add_argument("sources", nargs="+")
    p_compile.add_argument("-o", "--output", required=True)
    p_compile.add_argument("--top", default=None)

    p_run = sub.add_parser("run", help="simulate a compiled snapshot")
    p_run.add_argument("snapshot")
    p_run.add_argument("--vcd-dir", default=".")

    p_sim = sub.add_parser("sim", help="compile and simulate in one step")
    p_sim.add_argument("sources", nargs="+")
    p_sim.add_argument("--top", default=None)
    p_sim.add_argument("--vcd-dir", default=".")

    args = parser.parse_args(argv)
    try:
        if args.command == "compile":
            sources = _read_sources(args.sources)
            _elaborate(sources, args.top)  # reject bad input before snapshotting
            snapshot = {"sources": sources, "top": args.top}
            with open(args.output, "w", encoding="utf-8") as fh:
                json.dump(snapshot, fh)
            return 0
        if args.command == "run":
            with open(args.snapshot, "r", encoding="utf-8") as fh:
                snapshot = json.load(fh)
            sim = _elaborate(snapshot["sources"], snapshot.get("top"))
            result = sim.run(vcd_dir=args.vcd_dir)
            sys.stdout.write(result.stdout)
            return 0
        sources = _read_sources(args.sources)
        sim = _elaborate(sources, args.top)
        result = sim.run(vcd_dir=args.vcd_dir)
        sys.stdout.write(result.stdout)
        return 0
    except VsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
