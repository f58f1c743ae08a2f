"""Completion evaluation: prompt formatting, code extraction, simulator
judging, and unbiased pass@k aggregation.

pass@k for one task with n samples and c functional passes is
1 - C(n-c, k) / C(n, k), computed in exact rational arithmetic; the summary
reports the mean over tasks.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .simrun import SimulatorConfig, run_job

DEFAULT_SAMPLES_PER_TASK = 20
DEFAULT_KS = (1, 5, 10)
DEFAULT_FAILURE_PATTERN = r"MISMATCH|FAILED|Error|ERROR"


def pass_at_k_exact(n: int, c: int, k: int) -> Fraction:
    if not 0 <= c <= n:
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    return 1 - Fraction(comb(n - c, k), comb(n, k))


def pass_at_k(n: int, c: int, k: int) -> float:
    return float(pass_at_k_exact(n, c, k))


def format_prompt(description: str, module_header: str) -> str:
    return f"{description.strip()}\n\n{module_header.strip()}"


_FENCE_RE = re.compile(r"```[ \t]*([A-Za-z]*)[ \t]*\n(.*?)```", re.DOTALL)
_MODULE_KEYWORD_RE = re.compile(r"\bmodule\b")
_ENDMODULE_RE = re.compile(r"\bendmodule\b")


def extract_code(response: str, fallback_header: str | None = None) -> str | None:
    """Pull Verilog out of a model response.

    Takes the first fenced block when present (language tag dropped), slices
    from the first `module` keyword to the last `endmodule`, and prepends
    the reference module header when the code carries none. Unfenced text
    without any module/endmodule keyword is treated as prose: the result is
    None (an empty-extraction verdict, never an exception).
    """
    m = _FENCE_RE.search(response)
    fenced = m is not None
    text = m.group(2) if m else response

    first = _MODULE_KEYWORD_RE.search(text)
    if first is not None:
        last = None
        for last in _ENDMODULE_RE.finditer(text):
            pass
        end = last.end() if last is not None else len(text)
        code = text[first.start() : end]
        return code if code.strip() else None

    body = text.strip("\n")
    if not body.strip():
        return None
    # A header-less completion: anything inside a fence, or bare text that
    # still closes with `endmodule`. Anything else is prose.
    last = None
    for last in _ENDMODULE_RE.finditer(body):
        pass
    if not fenced and last is None:
        return None
    if last is not None:
        body = body[: last.end()]
    if fallback_header is not None:
        header = fallback_header.rstrip()
        return header + "\n" + body + "\n"
    return body + "\n"


@dataclass(frozen=True)
class EvalTask:
    task_id: str
    description: str
    module_header: str
    testbench_path: str

    @property
    def prompt(self) -> str:
        return format_prompt(self.description, self.module_header)


@dataclass(frozen=True)
class SampleResult:
    task_id: str
    sample_index: int
    syntax_pass: bool
    functional_pass: bool | None  # None when the sample never compiled
    cause: str = ""
    log_excerpt: str = ""

    def as_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "sample_index": self.sample_index,
            "syntax_pass": self.syntax_pass,
            "functional_pass": self.functional_pass,
            "cause": self.cause,
            "log_excerpt": self.log_excerpt,
        }


def judge_sample(
    task: EvalTask,
    code: str | None,
    sample_index: int = 0,
    config: SimulatorConfig | None = None,
    failure_pattern: str = DEFAULT_FAILURE_PATTERN,
    success_pattern: str | None = None,
) -> SampleResult:
    """Compile gives the syntax verdict; running the task's bench gives the
    functional one. A timeout is a functional fail with cause TIMEOUT."""
    if code is None or not code.strip():
        return SampleResult(task.task_id, sample_index, False, None, cause="EMPTY")
    with open(task.testbench_path, "r", encoding="utf-8") as fh:
        tb_text = fh.read()
    result = run_job({"sample.v": code, "tb.v": tb_text}, config=config)
    if not result.compiled:
        cause = "TIMEOUT" if result.timed_out else "SYNTAX"
        return SampleResult(
            task.task_id, sample_index, False, None,
            cause=cause, log_excerpt=result.compile_output[-400:],
        )
    if result.timed_out:
        return SampleResult(
            task.task_id, sample_index, True, False,
            cause="TIMEOUT", log_excerpt=result.run_output[-400:],
        )
    if not result.ran:
        return SampleResult(
            task.task_id, sample_index, True, False,
            cause="RUNTIME", log_excerpt=result.run_output[-400:],
        )
    functional = re.search(failure_pattern, result.run_output) is None
    if functional and success_pattern is not None:
        functional = re.search(success_pattern, result.run_output) is not None
    return SampleResult(
        task.task_id, sample_index, True, functional,
        cause="" if functional else "FUNCTIONAL",
        log_excerpt=result.run_output[-400:],
    )


@dataclass(frozen=True)
class TaskCounts:
    n: int
    c_functional: int
    c_syntax: int


@dataclass(frozen=True)
class EvalSummary:
    per_task: dict[str, TaskCounts]
    ks: tuple[int, ...]
    functional_pass_at_k: dict[int, float]
    syntax_pass_at_k: dict[int, float]

    def table(self) -> str:
        lines = ["task            n   syntax  func"]
        for task_id in sorted(self.per_task):
            t = self.per_task[task_id]
            lines.append(
                f"{task_id:<15} {t.n:<3} {t.c_syntax:<7} {t.c_functional}"
            )
        for k in self.ks:
            lines.append(
                f"pass@{k}: syntax {self.syntax_pass_at_k[k]:.4f}  "
                f"functional {self.functional_pass_at_k[k]:.4f}"
            )
        return "\n".join(lines)


def summarize(results: list[SampleResult], ks: tuple[int, ...] = DEFAULT_KS) -> EvalSummary:
    """Per-task counts plus macro-averaged pass@k over the configured ks."""
    by_task: dict[str, list[SampleResult]] = {}
    for r in results:
        by_task.setdefault(r.task_id, []).append(r)
    sizes = {len(v) for v in by_task.values()}
    if len(sizes) > 1:
        raise ValueError(f"tasks have differing sample counts: {sorted(sizes)}")
    n = sizes.pop() if sizes else 0
    per_task = {}
    for task_id, samples in by_task.items():
        per_task[task_id] = TaskCounts(
            n=n,
            c_functional=sum(1 for s in samples if s.functional_pass),
            c_syntax=sum(1 for s in samples if s.syntax_pass),
        )
    for k in ks:
        if k > n:
            raise ValueError(f"k={k} exceeds samples per task n={n}")
    functional = {
        k: _mean(
            [pass_at_k(t.n, t.c_functional, k) for t in per_task.values()]
        )
        for k in ks
    }
    syntax = {
        k: _mean([pass_at_k(t.n, t.c_syntax, k) for t in per_task.values()])
        for k in ks
    }
    return EvalSummary(per_task, tuple(ks), functional, syntax)


def best_of(summaries: list[EvalSummary], mode: str = "per_task") -> dict[int, float]:
    """Best-of merge across result sets (e.g. two sampling temperatures).

    "per_task" takes the best pass@k per task before averaging; "overall"
    takes the best of the per-set averages.
    """
    if not summaries:
        raise ValueError("need at least one summary")
    ks = summaries[0].ks
    if any(s.ks != ks for s in summaries):
        raise ValueError("summaries disagree on ks")
    if mode == "overall":
        return {k: max(s.functional_pass_at_k[k] for s in summaries) for k in ks}
    if mode != "per_task":
        raise ValueError(f"unknown mode {mode!r}")
    task_ids = set()
    for s in summaries:
        task_ids.update(s.per_task)
    out = {}
    for k in ks:
        values = []
        for task_id in sorted(task_ids):
            candidates = [
                pass_at_k(s.per_task[task_id].n, s.per_task[task_id].c_functional, k)
                for s in summaries
                if task_id in s.per_task
            ]
            values.append(max(candidates))
        out[k] = _mean(values)
    return out


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def load_completions(root: str) -> dict[str, list[tuple[int, str]]]:
    """Directory layout <task_id>/<sample_idx>.v -> {task_id: [(idx, text)]}"""
    out: dict[str, list[tuple[int, str]]] = {}
    for task_id in sorted(os.listdir(root)):
        task_dir = os.path.join(root, task_id)
        if not os.path.isdir(task_dir):
            continue
        samples = []
        for name in sorted(os.listdir(task_dir)):
            if not name.endswith(".v"):
                continue
            index = int(os.path.splitext(name)[0])
            with open(os.path.join(task_dir, name), "r", encoding="utf-8") as fh:
                samples.append((index, fh.read()))
        out[task_id] = sorted(samples)
    return out
