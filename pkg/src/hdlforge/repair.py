"""Targeted code-repair data pipeline.

Stages: ingest (correct, erroneous) code pairs and verify both verdicts by
simulation; have the provider write an error report per pair; validate each
report with a self-consistency check (the provider must fix the erroneous
code using only the report, and the fix must pass the pair's bench); inject
validated errors into open-source seed snippets to build repair practice
records; filter by syntax, dedup and benchmark fingerprints. Reports that
fail validation never reach injection.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from .evalkit import extract_code
from .forge import (
    DatasetRecord,
    FingerprintDb,
    ProblemKind,
    Rejection,
    fingerprint_code,
)
from .providers import ProviderError, ProviderRequest
from .simrun import SimulatorConfig, run_job

DEFAULT_SEEDS_PER_REPORT = 3
PARSE_RETRY_REMINDER = (
    "\n\nYour previous answer could not be parsed. Answer again, strictly "
    "using the requested section layout."
)


class RepairPipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class CodePair:
    pair_id: str
    problem: str
    correct: str
    erroneous: str
    testbench_path: str


@dataclass(frozen=True)
class ErrorReport:
    error_type: str
    category: str
    description: str
    source_pair_id: str
    validated: bool = False


@dataclass(frozen=True)
class RepairRecord:
    record_id: str
    problem: str
    erroneous: str
    hints: str
    repaired: str
    source_report_id: str
    seed_code_id: str


@dataclass
class FunnelStats:
    pairs_loaded: int = 0
    pairs_rejected: int = 0
    reports: int = 0
    reports_validated: int = 0
    reports_rejected: int = 0
    raw_records: int = 0
    skipped_injections: int = 0
    filtered_records: int = 0
    drop_reasons: dict = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + 1

    def summary(self) -> str:
        lines = [
            f"pairs: {self.pairs_loaded} loaded, {self.pairs_rejected} rejected",
            f"funnel: {self.reports_validated} reports -> "
            f"{self.raw_records} raw samples -> {self.filtered_records} filtered",
            f"report validation: {self.reports} built, "
            f"{self.reports_rejected} rejected by self-consistency",
            f"injections skipped: {self.skipped_injections}",
        ]
        if self.drop_reasons:
            drops = ", ".join(
                f"{k}={v}" for k, v in sorted(self.drop_reasons.items())
            )
            lines.append(f"filter drops: {drops}")
        return "\n".join(lines)


# --- ingestion ---------------------------------------------------------------


def load_code_pairs(path: str) -> list[CodePair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            try:
                pairs.append(
                    CodePair(
                        pair_id=data["id"],
                        problem=data["problem"],
                        correct=data["correct"],
                        erroneous=data["erroneous"],
                        testbench_path=data["testbench_path"],
                    )
                )
            except KeyError as exc:
                raise RepairPipelineError(
                    f"{path}:{line_no}: missing field {exc}"
                ) from exc
    return pairs


def verify_code_pair(
    pair: CodePair, config: SimulatorConfig | None = None
) -> tuple[bool, str]:
    """The correct side must pass its bench and the erroneous side must fail."""
    with open(pair.testbench_path, "r", encoding="utf-8") as fh:
        tb_text = fh.read()
    good = run_job({"sample.v": pair.correct, "tb.v": tb_text}, config=config)
    if not good.passed:
        return False, f"correct code fails its bench: {good.run_output[-200:]}"
    bad = run_job({"sample.v": pair.erroneous, "tb.v": tb_text}, config=config)
    if bad.passed:
        return False, "erroneous code unexpectedly passes its bench"
    return True, ""


# --- provider prompt templates -------------------------------------------------

ERROR_REPORT_TEMPLATE = """Here is a Verilog problem description:
```
{problem}
```

Here is an erroneous implementation:
```
{erroneous}
```

Here is a correct implementation:
```
{correct}
```

Generate a detail error report.
The error report should describe the common error type and output the code category. The error report should also be detailed enough to let beginners to repair the erroneous implementation step by step.

Output:"""

SELF_CONSISTENCY_TEMPLATE = """Here is a Verilog problem description:
```
{problem}
```

Here is an erroneous implementation:
```
{erroneous}
```

Here is the error report:
```
{report}
```

Now fix the erroneous implementation and give me the correct code.

Output:"""

INJECTION_TEMPLATE = """Your goal is to create an error-fixing Verilog practice problem for programmers. You will demonstrate a type of error that is commonly made by programmers.
Create an error repair practice problem with three components:
1. Problem description
2. Erroneous implementation
3. Hints for fixing

Now, here is the commonly made error:
```
{report}
```

Inject the above error into the following module and create an error repair practice problem. Check if it is possible to inject the error. If not, create the problem with the given error alone and ignore the module in the code snippet.
```
{seed_code}
```

Output:"""

SYSTEM_TEXT = "You are a Verilog expert helping to build training data."


# --- response parsing -----------------------------------------------------------

_REPORT_FIELD_RE = re.compile(
    r"Error Type:\s*(?P<error_type>.+?)\s*$", re.MULTILINE
)
_CATEGORY_RE = re.compile(r"Category:\s*(?P<category>.+?)\s*$", re.MULTILINE)
_DESCRIPTION_RE = re.compile(r"Description:\s*\n?(?P<description>.*)", re.DOTALL)


def parse_error_report(text: str, pair_id: str) -> ErrorReport:
    type_m = _REPORT_FIELD_RE.search(text)
    cat_m = _CATEGORY_RE.search(text)
    desc_m = _DESCRIPTION_RE.search(text)
    if not (type_m and cat_m and desc_m):
        raise RepairPipelineError(f"unparseable error report for pair {pair_id}")
    description = desc_m.group("description").strip()
    if not description:
        raise RepairPipelineError(f"empty report description for pair {pair_id}")
    return ErrorReport(
        error_type=type_m.group("error_type").strip(),
        category=cat_m.group("category").strip(),
        description=description,
        source_pair_id=pair_id,
    )


_SECTION_RES = {
    "problem": re.compile(
        r"(?:####\s*)?1\.\s*Problem [Dd]escription\s*:?\s*\n(?P<body>.*?)"
        r"(?=(?:####\s*)?2\.\s*Erroneous)",
        re.DOTALL,
    ),
    "erroneous": re.compile(
        r"(?:####\s*)?2\.\s*Erroneous [Ii]mplementation\s*:?\s*\n(?P<body>.*?)"
        r"(?=(?:####\s*)?3\.\s*Hints)",
        re.DOTALL,
    ),
    "hints": re.compile(
        r"(?:####\s*)?3\.\s*Hints for [Ff]ixing\s*:?\s*\n(?P<body>.*?)"
        r"(?=(?:\*\*)?Output(?:\*\*)?\s*:)",
        re.DOTALL,
    ),
    "output": re.compile(
        r"(?:\*\*)?Output(?:\*\*)?\s*:\s*\n(?P<body>.*)", re.DOTALL
    ),
}

_DECLINE_RE = re.compile(
    r"not possible to inject|cannot inject|can't inject", re.IGNORECASE
)


@dataclass(frozen=True)
class ParsedInjection:
    problem: str
    erroneous: str
    hints: str
    repaired: str


def parse_injection(text: str) -> ParsedInjection | None:
    """None signals the provider declined the injection (a skip, not an error)."""
    if _DECLINE_RE.search(text):
        return None
    parts = {}
    for name, pattern in _SECTION_RES.items():
        m = pattern.search(text)
        if m is None:
            raise RepairPipelineError(f"injection response missing section {name!r}")
        parts[name] = m.group("body").strip()
    erroneous = _strip_fence(parts["erroneous"])
    repaired = extract_code(parts["output"])
    if repaired is None:
        raise RepairPipelineError("injection response has no repaired code")
    return ParsedInjection(
        problem=parts["problem"],
        erroneous=erroneous,
        hints=parts["hints"],
        repaired=repaired,
    )


def _strip_fence(text: str) -> str:
    code = extract_code(text)
    return code if code is not None else text


# --- pipeline stages --------------------------------------------------------------


def _ask(provider, user_text: str, parser, request_id: str):
    """One parse-retry with a format reminder before failing hard."""
    request = ProviderRequest(system=SYSTEM_TEXT, user=user_text, request_id=request_id)
    response = provider.complete(request)
    try:
        return parser(response.text)
    except RepairPipelineError:
        retry = ProviderRequest(
            system=SYSTEM_TEXT,
            user=user_text + PARSE_RETRY_REMINDER,
            request_id=f"{request_id}-retry",
        )
        response = provider.complete(retry)
        return parser(response.text)


def build_error_report(pair: CodePair, provider) -> ErrorReport:
    user = ERROR_REPORT_TEMPLATE.format(
        problem=pair.problem, erroneous=pair.erroneous, correct=pair.correct
    )
    return _ask(
        provider,
        user,
        lambda text: parse_error_report(text, pair.pair_id),
        request_id=f"report-{pair.pair_id}",
    )


def report_text(report: ErrorReport) -> str:
    return (
        f"Error Type: {report.error_type}\n"
        f"Category: {report.category}\n"
        f"Description:\n{report.description}"
    )


def self_consistency_check(
    report: ErrorReport,
    pair: CodePair,
    provider,
    config: SimulatorConfig | None = None,
) -> tuple[ErrorReport | None, str]:
    """Validated report, or (None, reason) when the guided fix fails its bench."""
    user = SELF_CONSISTENCY_TEMPLATE.format(
        problem=pair.problem,
        erroneous=pair.erroneous,
        report=report_text(report),
    )
    request = ProviderRequest(
        system=SYSTEM_TEXT, user=user, request_id=f"fix-{pair.pair_id}"
    )
    response = provider.complete(request)
    fix = extract_code(response.text)
    if fix is None:
        return None, "no code in fix response"
    with open(pair.testbench_path, "r", encoding="utf-8") as fh:
        tb_text = fh.read()
    result = run_job({"sample.v": fix, "tb.v": tb_text}, config=config)
    if not result.passed:
        return None, f"guided fix fails the bench: {result.run_output[-200:]}"
    return (
        ErrorReport(
            error_type=report.error_type,
            category=report.category,
            description=report.description,
            source_pair_id=report.source_pair_id,
            validated=True,
        ),
        "",
    )


def inject_error(
    report: ErrorReport, seed_code_id: str, seed_code: str, provider
) -> RepairRecord | None:
    """None when the provider declines the injection (recorded as a skip)."""
    if not report.validated:
        raise RepairPipelineError(
            f"refusing to inject unvalidated report for {report.source_pair_id}"
        )
    user = INJECTION_TEMPLATE.format(
        report=report_text(report), seed_code=seed_code
    )
    parsed = _ask(
        provider,
        user,
        parse_injection,
        request_id=f"inject-{report.source_pair_id}-{seed_code_id}",
    )
    if parsed is None:
        return None
    return RepairRecord(
        record_id=f"repair-{report.source_pair_id}-{seed_code_id}",
        problem=parsed.problem,
        erroneous=parsed.erroneous,
        hints=parsed.hints,
        repaired=parsed.repaired,
        source_report_id=report.source_pair_id,
        seed_code_id=seed_code_id,
    )


def filter_repair_records(
    records: list[RepairRecord],
    db: FingerprintDb,
    config: SimulatorConfig | None = None,
    stats: FunnelStats | None = None,
) -> tuple[list[RepairRecord], list[Rejection]]:
    """Syntax-gate both code blocks, then dedup / decontaminate by code hash."""
    from .simrun import syntax_check

    stats = stats if stats is not None else FunnelStats()
    kept: list[RepairRecord] = []
    rejections: list[Rejection] = []
    for record in records:
        ok_bad, _ = syntax_check(record.erroneous, config=config)
        ok_fix, _ = syntax_check(record.repaired, config=config)
        if not (ok_bad and ok_fix):
            stats.drop("SYNTAX")
            rejections.append(Rejection(record.record_id, "SYNTAX"))
            continue
        digest = fingerprint_code(record.erroneous + "\n=>\n" + record.repaired)
        if digest in db:
            label = db.label(digest)
            reason = "DUP" if label == "generated" else "CONTAMINATED"
            stats.drop(reason)
            rejections.append(Rejection(record.record_id, reason, label))
            continue
        db.add(digest, "generated")
        kept.append(record)
    stats.filtered_records = len(kept)
    return kept, rejections


def repair_record_to_dataset(record: RepairRecord) -> DatasetRecord:
    prompt = (
        f"{record.problem.strip()}\n\n"
        "Erroneous Implementation:\n"
        f"```\n{record.erroneous.strip()}\n```\n\n"
        "Hints for Fixing:\n"
        f"{record.hints.strip()}\n\n"
        "Provide the corrected implementation."
    )
    response = f"```\n{record.repaired.strip()}\n```"
    return DatasetRecord(
        id=record.record_id,
        kind=ProblemKind.REPAIR.value,
        prompt=prompt,
        response=response,
        seed=0,
        fingerprint=fingerprint_code(record.erroneous + "\n=>\n" + record.repaired),
    )


def run_repair_pipeline(
    pairs: list[CodePair],
    seed_snippets: list[tuple[str, str]],  # (seed_code_id, code)
    provider,
    db: FingerprintDb,
    config: SimulatorConfig | None = None,
    seeds_per_report: int = DEFAULT_SEEDS_PER_REPORT,
    rng_seed: int = 0,
) -> tuple[list[RepairRecord], FunnelStats, list[str]]:
    """Full pipeline; the log records every rejection with its reason."""
    stats = FunnelStats()
    log: list[str] = []
    rng = random.Random(rng_seed)

    validated: list[ErrorReport] = []
    stats.pairs_loaded = len(pairs)
    for pair in pairs:
        ok, reason = verify_code_pair(pair, config=config)
        if not ok:
            stats.pairs_rejected += 1
            log.append(f"pair {pair.pair_id}: rejected at ingestion ({reason})")
            continue
        try:
            report = build_error_report(pair, provider)
        except (ProviderError, RepairPipelineError) as exc:
            stats.pairs_rejected += 1
            log.append(f"pair {pair.pair_id}: report failed ({exc})")
            continue
        stats.reports += 1
        checked, reason = self_consistency_check(report, pair, provider, config=config)
        if checked is None:
            stats.reports_rejected += 1
            log.append(f"report {pair.pair_id}: rejected ({reason})")
            continue
        stats.reports_validated += 1
        validated.append(checked)

    raw_records: list[RepairRecord] = []
    for report in validated:
        count = min(seeds_per_report, len(seed_snippets))
        chosen = rng.sample(range(len(seed_snippets)), count)
        for index in chosen:
            seed_id, seed_code = seed_snippets[index]
            try:
                record = inject_error(report, seed_id, seed_code, provider)
            except (ProviderError, RepairPipelineError) as exc:
                log.append(
                    f"injection {report.source_pair_id}/{seed_id}: failed ({exc})"
                )
                continue
            if record is None:
                stats.skipped_injections += 1
                log.append(
                    f"injection {report.source_pair_id}/{seed_id}: provider declined"
                )
                continue
            raw_records.append(record)
    stats.raw_records = len(raw_records)

    kept, rejections = filter_repair_records(raw_records, db, config=config, stats=stats)
    for rejection in rejections:
        log.append(f"record {rejection.instance_id}: dropped ({rejection.reason})")
    return kept, stats, log


def load_seed_snippets(path: str) -> list[tuple[str, str]]:
    snippets = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            snippets.append((data["id"], data["code"]))
    return snippets
