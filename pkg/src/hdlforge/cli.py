"""Command-line entry point: dataset generation, repair pipeline, evaluation,
and fingerprint-database management.

Exit codes: 0 success, 2 configuration error, 3 external tool missing,
4 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import ConfigError, RunConfig, build_provider, load_config
from .simrun import ToolMissingError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOOL_MISSING = 3
EXIT_VERIFICATION = 4


def _log_resolved_config(config: RunConfig, out_path: str | None) -> None:
    resolved = config.resolved_dict()
    print("resolved config: " + json.dumps(resolved, sort_keys=True))
    if out_path:
        with open(out_path + ".config.json", "w", encoding="utf-8") as fh:
            json.dump(resolved, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _apply_gen_overrides(config: RunConfig, args: argparse.Namespace) -> None:
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.verify is not None:
        from .config import _parse_verify

        config.verify = _parse_verify(args.verify)
    if args.jobs is not None:
        config.simulator = dataclasses.replace(config.simulator, jobs=args.jobs)
    if args.simulator is not None:
        config.simulator = dataclasses.replace(
            config.simulator, backend=args.simulator
        )
    if args.kind == "all":
        if args.count is not None:
            raise ConfigError("--count applies to a single kind, not --kind all")
    elif args.kind is not None:
        count = args.count if args.count is not None else 100
        config.counts = {args.kind: count}
    elif args.count is not None:
        raise ConfigError("--count needs --kind")
    if args.rewrite_fraction is not None:
        config.rewrite_fraction = args.rewrite_fraction
    if args.provider_script is not None:
        config.provider = {"mode": "mock", "script": args.provider_script}


def cmd_gen(args: argparse.Namespace) -> int:
    from .forge import write_dataset
    from .pipeline import (
        GenerationError,
        VerificationError,
        result_records,
        run_generation,
    )

    config = load_config(args.config)
    _apply_gen_overrides(config, args)
    if config.out is None:
        raise ConfigError("no output path: set 'out' in the config or pass --out")
    _log_resolved_config(config, config.out)

    try:
        result = run_generation(config)
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION

    count = write_dataset(result_records(result), config.out)
    for line in result.rewrite_log:
        print(f"rewrite: {line}")
    print(f"funnel: {result.funnel.summary()}")
    print(f"wrote {count} records to {config.out}")
    return EXIT_OK


def cmd_repair(args: argparse.Namespace) -> int:
    from .forge import load_benchmark_templates, write_dataset
    from .repair import (
        load_code_pairs,
        load_seed_snippets,
        repair_record_to_dataset,
        run_repair_pipeline,
    )

    config = load_config(args.config)
    if args.pairs is not None:
        config.repair["pairs"] = args.pairs
    if args.seeds is not None:
        config.repair["seeds"] = args.seeds
    if args.out is not None:
        config.repair["out"] = args.out
    if args.provider_script is not None:
        config.provider = {"mode": "mock", "script": args.provider_script}
    for key in ("pairs", "seeds", "out"):
        if not config.repair.get(key):
            raise ConfigError(f"repair needs '{key}' (config or flag)")
    _log_resolved_config(config, config.repair["out"])

    provider = build_provider(config.provider)
    pairs = load_code_pairs(config.repair["pairs"])
    seeds = load_seed_snippets(config.repair["seeds"])
    db = load_benchmark_templates(config.template_db)
    records, stats, log = run_repair_pipeline(
        pairs,
        seeds,
        provider,
        db,
        config=config.simulator,
        seeds_per_report=int(config.repair.get("seeds_per_report", 3)),
        rng_seed=int(config.repair.get("rng_seed", 0)),
    )
    for line in log:
        print(f"log: {line}")
    print(stats.summary())
    dataset = [repair_record_to_dataset(record) for record in records]
    count = write_dataset(dataset, config.repair["out"])
    print(f"wrote {count} records to {config.repair['out']}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from .evalkit import (
        DEFAULT_FAILURE_PATTERN,
        EvalTask,
        extract_code,
        judge_sample,
        load_completions,
        summarize,
    )

    config = load_config(args.config)
    if args.tasks is not None:
        config.eval["tasks"] = args.tasks
    if args.completions is not None:
        config.eval["completions"] = args.completions
    if args.out is not None:
        config.eval["out"] = args.out
    if args.ks is not None:
        config.eval["ks"] = [int(v) for v in args.ks.split(",")]
    if args.jobs is not None:
        config.simulator = dataclasses.replace(config.simulator, jobs=args.jobs)
    if args.simulator is not None:
        config.simulator = dataclasses.replace(
            config.simulator, backend=args.simulator
        )
    for key in ("tasks", "completions"):
        if not config.eval.get(key):
            raise ConfigError(f"eval needs '{key}' (config or flag)")
    _log_resolved_config(config, config.eval.get("out"))

    tasks = []
    with open(config.eval["tasks"], "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            tasks.append(
                EvalTask(
                    task_id=data["task_id"],
                    description=data["description"],
                    module_header=data["module_header"],
                    testbench_path=data["testbench_path"],
                )
            )
    completions = load_completions(config.eval["completions"])
    ks = tuple(config.eval.get("ks", [1, 5, 10]))
    failure_pattern = config.eval.get("failure_regex", DEFAULT_FAILURE_PATTERN)
    success_pattern = config.eval.get("success_regex")

    results = []
    for task in tasks:
        for index, text in completions.get(task.task_id, []):
            code = extract_code(text, fallback_header=task.module_header)
            results.append(
                judge_sample(
                    task,
                    code,
                    sample_index=index,
                    config=config.simulator,
                    failure_pattern=failure_pattern,
                    success_pattern=success_pattern,
                )
            )
    summary = summarize(results, ks=ks)
    print(summary.table())
    out = config.eval.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            for result in results:
                fh.write(json.dumps(result.as_dict(), sort_keys=True) + "\n")
            fh.write(
                json.dumps(
                    {
                        "summary": {
                            "functional_pass_at_k": {
                                str(k): v
                                for k, v in summary.functional_pass_at_k.items()
                            },
                            "syntax_pass_at_k": {
                                str(k): v
                                for k, v in summary.syntax_pass_at_k.items()
                            },
                        }
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        print(f"wrote results to {out}")
    return EXIT_OK


def cmd_fingerprint(args: argparse.Namespace) -> int:
    from .boolfn import CellValue, FunctionSpec
    from .forge import (
        FingerprintDb,
        fingerprint_code,
        fingerprint_fsm,
        fingerprint_function,
    )
    from .fsm import FsmGraph, FsmKind

    if args.action == "list":
        db = FingerprintDb.load(args.db)
        for digest in sorted(db._labels):
            print(f"{digest} {db._labels[digest]}")
        return EXIT_OK

    with open(args.file, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    rep_type = data.get("type")
    if rep_type == "function_spec":
        cells = data["cells"]
        if isinstance(cells, dict):
            n = len(data["var_names"])
            ordered = [cells[format(i, f"0{n}b")] for i in range(1 << n)]
        else:
            ordered = list(cells)
        spec = FunctionSpec(
            tuple(data["var_names"]),
            tuple(CellValue(c) for c in ordered),
        )
        digest = fingerprint_function(spec)
    elif rep_type == "fsm":
        kind = FsmKind(data["kind"])
        fsm = FsmGraph(
            kind=kind,
            state_names=tuple(data["state_names"]),
            reset_state=int(data.get("reset_state", 0)),
            input_width=int(data["input_width"]),
            transitions=tuple(tuple(row) for row in data["transitions"]),
            moore_outputs=tuple(data["moore_outputs"])
            if kind is FsmKind.MOORE
            else None,
            mealy_outputs=tuple(tuple(row) for row in data["mealy_outputs"])
            if kind is FsmKind.MEALY
            else None,
        )
        digest = fingerprint_fsm(fsm)
    elif rep_type == "code":
        digest = fingerprint_code(data["text"])
    else:
        raise ConfigError(f"unknown representation type {rep_type!r}")

    try:
        db = FingerprintDb.load(args.db)
    except FileNotFoundError:
        db = FingerprintDb()
    db.add(digest, args.label)
    db.save(args.db)
    print(f"added {digest} {args.label}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdlforge",
        description="Correct-by-construction Verilog training data tooling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a training dataset")
    p_gen.add_argument("--config", default=None)
    p_gen.add_argument("--kind", choices=["kmap", "fsm", "wave", "all"], default=None)
    p_gen.add_argument("--count", type=int, default=None)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", default=None)
    p_gen.add_argument("--verify", default=None, help="off | full | sample:<frac>")
    p_gen.add_argument("--jobs", type=int, default=None)
    p_gen.add_argument("--simulator", choices=["auto", "icarus", "builtin"], default=None)
    p_gen.add_argument("--rewrite-fraction", type=float, default=None)
    p_gen.add_argument("--provider-script", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_repair = sub.add_parser("repair", help="build targeted code-repair data")
    p_repair.add_argument("--config", default=None)
    p_repair.add_argument("--pairs", default=None)
    p_repair.add_argument("--seeds", default=None)
    p_repair.add_argument("--out", default=None)
    p_repair.add_argument("--provider-script", default=None)
    p_repair.set_defaults(func=cmd_repair)

    p_eval = sub.add_parser("eval", help="judge completions and report pass@k")
    p_eval.add_argument("--config", default=None)
    p_eval.add_argument("--tasks", default=None)
    p_eval.add_argument("--completions", default=None)
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument("--ks", default=None, help="comma-separated, e.g. 1,5,10")
    p_eval.add_argument("--jobs", type=int, default=None)
    p_eval.add_argument("--simulator", choices=["auto", "icarus", "builtin"], default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_fp = sub.add_parser("fingerprint", help="manage the fingerprint database")
    p_fp.add_argument("action", choices=["add", "list"])
    p_fp.add_argument("--db", required=True)
    p_fp.add_argument("--file", default=None, help="representation JSON (for add)")
    p_fp.add_argument("--label", default="user", help="label stored with the hash")
    p_fp.set_defaults(func=cmd_fingerprint)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ToolMissingError as exc:
        print(f"tool missing: {exc}", file=sys.stderr)
        return EXIT_TOOL_MISSING
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
