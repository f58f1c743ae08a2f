"""External simulator orchestration: compile/run command templates, isolated
working directories, timeouts, and a bounded parallel job pool.

Two backends ship with the package: "icarus" drives iverilog/vvp, "builtin"
drives the bundled subset simulator through the same two-step subprocess
contract. "auto" picks icarus when both tools are on PATH. Command templates
are lists with `{output}`, `{sources}` and `{snapshot}` placeholders, so any
compatible tool pair can be substituted via configuration.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .vsim import Simulator, VsimError, parse_sources

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_FAILURE_PATTERN = r"MISMATCH"
SUCCESS_MARKER = "ALL_TESTS_PASSED"


class ToolMissingError(RuntimeError):
    """The configured simulator binaries are not installed."""


@dataclass(frozen=True)
class SimulatorConfig:
    backend: str = "auto"  # auto | icarus | builtin
    compile_cmd: tuple[str, ...] | None = None
    run_cmd: tuple[str, ...] | None = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    jobs: int = 8

    def resolved(self) -> "SimulatorConfig":
        backend = self.backend
        if backend == "auto":
            backend = "icarus" if icarus_available() else "builtin"
        cfg = replace(self, backend=backend)
        if cfg.compile_cmd is None or cfg.run_cmd is None:
            compile_cmd, run_cmd = _default_commands(backend)
            cfg = replace(
                cfg,
                compile_cmd=cfg.compile_cmd or compile_cmd,
                run_cmd=cfg.run_cmd or run_cmd,
            )
        return cfg


def icarus_available() -> bool:
    return shutil.which("iverilog") is not None and shutil.which("vvp") is not None


def _default_commands(backend: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if backend == "icarus":
        return (
            ("iverilog", "-g2012", "-o", "{output}", "{sources}"),
            ("vvp", "{snapshot}"),
        )
    if backend == "builtin":
        return (
            (sys.executable, "-m", "hdlforge.vsim", "compile", "-o", "{output}", "{sources}"),
            (sys.executable, "-m", "hdlforge.vsim", "run", "{snapshot}"),
        )
    raise ValueError(f"unknown backend {backend!r}")


def _expand(template: tuple[str, ...], mapping: dict[str, list[str]]) -> list[str]:
    out: list[str] = []
    for part in template:
        if part in ("{sources}",):
            out.extend(mapping["sources"])
        else:
            out.append(
                part.replace("{output}", mapping["output"][0]).replace(
                    "{snapshot}", mapping["snapshot"][0]
                )
            )
    return out


@dataclass(frozen=True)
class SimJobResult:
    compiled: bool
    ran: bool
    timed_out: bool
    compile_output: str
    run_output: str
    workdir: str | None = None

    @property
    def passed(self) -> bool:
        """Functional verdict for self-checking benches emitted by this package."""
        if not (self.compiled and self.ran) or self.timed_out:
            return False
        if re.search(DEFAULT_FAILURE_PATTERN, self.run_output):
            return False
        return SUCCESS_MARKER in self.run_output


def _check_tool(cfg: SimulatorConfig) -> None:
    if cfg.backend == "icarus" and not icarus_available():
        raise ToolMissingError(
            "iverilog/vvp not found on PATH; install Icarus Verilog or use "
            "the builtin backend"
        )


def run_job(
    sources: dict[str, str],
    config: SimulatorConfig | None = None,
    keep_files: str | None = None,
    compile_only: bool = False,
) -> SimJobResult:
    """Compile (and run) `sources` ({filename: text}) in a fresh directory."""
    cfg = (config or SimulatorConfig()).resolved()
    _check_tool(cfg)

    workdir = keep_files or tempfile.mkdtemp(prefix="hdlforge-sim-")
    try:
        names = []
        for name, text in sources.items():
            path = os.path.join(workdir, name)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            names.append(name)
        output = "sim.snapshot"
        mapping = {"sources": names, "output": [output], "snapshot": [output]}

        compile_cmd = _expand(cfg.compile_cmd, mapping)
        try:
            comp = subprocess.run(
                compile_cmd,
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=cfg.timeout_s,
            )
        except subprocess.TimeoutExpired:
            return SimJobResult(False, False, True, "compile timeout", "", workdir)
        except FileNotFoundError as exc:
            raise ToolMissingError(f"simulator tool not found: {compile_cmd[0]}") from exc
        compile_output = comp.stdout + comp.stderr
        if comp.returncode != 0:
            return SimJobResult(False, False, False, compile_output, "", workdir)
        if compile_only:
            return SimJobResult(True, False, False, compile_output, "", workdir)

        run_cmd = _expand(cfg.run_cmd, mapping)
        try:
            run = subprocess.run(
                run_cmd,
                cwd=workdir,
                capture_output=True,
                text=True,
                timeout=cfg.timeout_s,
            )
        except subprocess.TimeoutExpired:
            return SimJobResult(True, False, True, compile_output, "run timeout", workdir)
        run_output = run.stdout + run.stderr
        if run.returncode != 0:
            return SimJobResult(True, False, False, compile_output, run_output, workdir)
        return SimJobResult(True, True, False, compile_output, run_output, workdir)
    finally:
        if keep_files is None:
            shutil.rmtree(workdir, ignore_errors=True)


def syntax_check(
    source_text: str, config: SimulatorConfig | None = None
) -> tuple[bool, str]:
    """Parse-only gate: (ok, diagnostics). Tool absence raises ToolMissingError."""
    result = run_job({"check.v": source_text}, config=config, compile_only=True)
    return result.compiled, result.compile_output


def run_jobs(
    jobs: list[dict[str, str]], config: SimulatorConfig | None = None
) -> list[SimJobResult]:
    """Run many source bundles under the configured concurrency bound."""
    cfg = (config or SimulatorConfig()).resolved()
    _check_tool(cfg)
    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        return list(pool.map(lambda s: run_job(s, cfg), jobs))


def simulate_inprocess(sources: dict[str, str]) -> "InprocessResult":
    """Fast path used during dataset generation: the bundled engine as a
    library call, no subprocess. Verification gates go through run_job."""
    modules = parse_sources(sources)
    sim = Simulator(modules)
    result = sim.run()
    return InprocessResult(
        stdout=result.stdout,
        vcd_text=result.vcd_text,
        finished=result.finished,
        sim_time=result.sim_time,
    )


@dataclass(frozen=True)
class InprocessResult:
    stdout: str
    vcd_text: str | None
    finished: bool
    sim_time: int

    @property
    def passed(self) -> bool:
        if re.search(DEFAULT_FAILURE_PATTERN, self.stdout):
            return False
        return SUCCESS_MARKER in self.stdout
