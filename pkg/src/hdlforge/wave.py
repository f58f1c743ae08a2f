"""VCD parsing, trace sampling, waveform tables, and spec recovery.

The parser covers the textual subset our simulators emit: $timescale, $scope
/ $upscope, $var (wire/reg), $enddefinitions, $dumpvars blocks, #time marks,
scalar changes and `b...` vector changes. Unknown values are preserved as x
and never silently read as 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .boolfn import CellValue, FunctionSpec
from .fsm import FsmGraph, FsmKind

COMB_COLUMN_WIDTH = 10
SEQ_COLUMN_WIDTH = 16
TIME_FIELD_WIDTH_COMB = 8
DEFAULT_SAMPLE_STEP_NS = 5


class VcdFormatError(ValueError):
    """Document text outside the supported VCD subset."""


class TraceContradictionError(ValueError):
    """The same input assignment was observed with two different outputs."""


@dataclass(frozen=True)
class VcdVariable:
    id_code: str
    name: str
    width: int
    kind: str


@dataclass(frozen=True)
class VcdDocument:
    timescale: str
    variables: tuple[VcdVariable, ...]
    changes: tuple[tuple[int, str, str], ...]  # (time, id code, value string)

    def variable_by_name(self, name: str) -> VcdVariable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(f"signal {name!r} not declared in VCD")


def parse_vcd(text: str) -> VcdDocument:
    tokens = text.split()
    pos = 0
    n = len(tokens)

    def next_token() -> str:
        nonlocal pos
        if pos >= n:
            raise VcdFormatError("unexpected end of VCD document")
        tok = tokens[pos]
        pos += 1
        return tok

    def skip_to_end() -> list[str]:
        body = []
        while True:
            tok = next_token()
            if tok == "$end":
                return body
            body.append(tok)

    timescale = "1ns"
    variables: list[VcdVariable] = []
    in_header = True
    while in_header:
        if pos >= n:
            raise VcdFormatError("VCD ended before $enddefinitions")
        tok = next_token()
        if tok == "$timescale":
            timescale = "".join(skip_to_end())
        elif tok in ("$scope", "$upscope", "$comment", "$date", "$version"):
            skip_to_end()
        elif tok == "$var":
            body = skip_to_end()
            if len(body) < 4:
                raise VcdFormatError(f"malformed $var: {' '.join(body)}")
            kind, width_text, id_code = body[0], body[1], body[2]
            name = body[3]
            if kind not in ("wire", "reg"):
                raise VcdFormatError(f"unsupported var kind {kind!r}")
            try:
                width = int(width_text)
            except ValueError as exc:
                raise VcdFormatError(f"bad var width {width_text!r}") from exc
            variables.append(VcdVariable(id_code, name, width, kind))
        elif tok == "$enddefinitions":
            skip_to_end()
            in_header = False
        else:
            raise VcdFormatError(f"unsupported header token {tok!r}")

    declared = {v.id_code for v in variables}
    changes: list[tuple[int, str, str]] = []
    time = 0
    seen_time = False

    def record(id_code: str, value: str) -> None:
        if id_code not in declared:
            raise VcdFormatError(f"change references undeclared id {id_code!r}")
        changes.append((time, id_code, value.lower()))

    while pos < n:
        tok = next_token()
        if tok.startswith("#"):
            try:
                new_time = int(tok[1:])
            except ValueError as exc:
                raise VcdFormatError(f"bad time mark {tok!r}") from exc
            if seen_time and new_time < time:
                raise VcdFormatError(
                    f"time regression: #{new_time} after #{time}"
                )
            time = new_time
            seen_time = True
        elif tok == "$dumpvars":
            continue  # initial-value block; its changes use normal syntax
        elif tok == "$end":
            continue
        elif tok and tok[0] in "01xXzZ":
            if len(tok) < 2:
                raise VcdFormatError(f"malformed scalar change {tok!r}")
            record(tok[1:], tok[0])
        elif tok and tok[0] in "bB":
            value = tok[1:]
            if not value or any(ch not in "01xXzZ" for ch in value.lower()):
                raise VcdFormatError(f"malformed vector change {tok!r}")
            record(next_token(), value)
        else:
            raise VcdFormatError(f"unsupported change token {tok!r}")
    return VcdDocument(timescale, tuple(variables), tuple(changes))


def _timescale_to_ns(timescale: str) -> float:
    text = timescale.strip()
    units = {"s": 1e9, "ms": 1e6, "us": 1e3, "ns": 1.0, "ps": 1e-3, "fs": 1e-6}
    for suffix in ("fs", "ps", "ns", "us", "ms", "s"):
        if text.endswith(suffix):
            try:
                factor = int(text[: -len(suffix)].strip() or "1")
            except ValueError as exc:
                raise VcdFormatError(f"bad timescale {timescale!r}") from exc
            return factor * units[suffix]
    raise VcdFormatError(f"bad timescale {timescale!r}")


@dataclass(frozen=True)
class WaveformTrace:
    """Time-sampled signal values; entries are '0', '1' or 'x'."""

    kind: str  # "combinational" | "sequential"
    signal_names: tuple[str, ...]
    times_ns: tuple[int, ...]
    samples: tuple[tuple[str, ...], ...]  # one row per time

    def column(self, name: str) -> tuple[str, ...]:
        idx = self.signal_names.index(name)
        return tuple(row[idx] for row in self.samples)


def sample_trace(
    vcd: VcdDocument,
    signals: list[str],
    step_ns: int = DEFAULT_SAMPLE_STEP_NS,
    kind: str = "combinational",
) -> WaveformTrace:
    """Sample each signal at t = 0, step, 2*step, ... up to the last change.

    Last write wins within a time step; values before a signal's first
    change are x. Multi-bit signals sample to x unless constant-0/1.
    """
    id_by_name = {}
    for name in signals:
        id_by_name[name] = vcd.variable_by_name(name).id_code
    scale = _timescale_to_ns(vcd.timescale)

    per_signal: dict[str, list[tuple[int, str]]] = {name: [] for name in signals}
    ids = {code: name for name, code in id_by_name.items()}
    last_time = 0
    for time, code, value in vcd.changes:
        t_ns = int(round(time * scale))
        last_time = max(last_time, t_ns)
        name = ids.get(code)
        if name is not None:
            per_signal[name].append((t_ns, value))

    def collapse(value: str) -> str:
        if any(ch in "xz" for ch in value):
            return "x"
        return value  # scalars stay 0/1; vectors keep their bit string

    times = list(range(0, last_time + 1, step_ns))
    rows = []
    cursors = {name: 0 for name in signals}
    current = {name: "x" for name in signals}
    for t in times:
        for name in signals:
            series = per_signal[name]
            i = cursors[name]
            while i < len(series) and series[i][0] <= t:
                current[name] = collapse(series[i][1])
                i += 1
            cursors[name] = i
        rows.append(tuple(current[name] for name in signals))
    return WaveformTrace(kind, tuple(signals), tuple(times), tuple(rows))


def render_waveform_table(trace: WaveformTrace) -> str:
    """Fixed-width commented table; column width depends on the trace kind."""
    width = SEQ_COLUMN_WIDTH if trace.kind == "sequential" else COMB_COLUMN_WIDTH
    time_width = SEQ_COLUMN_WIDTH if trace.kind == "sequential" else TIME_FIELD_WIDTH_COMB
    lines = [
        "// "
        + "time".ljust(time_width)
        + "".join(name.ljust(width) for name in trace.signal_names)
    ]
    for t, row in zip(trace.times_ns, trace.samples):
        lines.append(
            "// "
            + f"{t}ns".ljust(time_width)
            + "".join(value.ljust(width) for value in row)
        )
    return "\n".join(line.rstrip() for line in lines)


def recover_function(
    trace: WaveformTrace,
    input_names: list[str],
    output_name: str,
) -> dict[tuple[int, ...], int]:
    """Observed input assignment -> output map.

    Samples with any x input or an x output are skipped; the same assignment
    observed with two outputs is a generation bug and raises.
    """
    observations: dict[tuple[int, ...], int] = {}
    in_cols = [trace.signal_names.index(n) for n in input_names]
    out_col = trace.signal_names.index(output_name)
    for row in trace.samples:
        in_bits = [row[c] for c in in_cols]
        out_bit = row[out_col]
        if "x" in in_bits or out_bit == "x":
            continue
        key = tuple(int(b) for b in in_bits)
        value = int(out_bit)
        if key in observations and observations[key] != value:
            raise TraceContradictionError(
                f"assignment {key} observed as both "
                f"{observations[key]} and {value}"
            )
        observations[key] = value
    return observations


def check_function_recovery(
    trace: WaveformTrace,
    spec: FunctionSpec,
    input_names: list[str],
    output_name: str,
) -> tuple[int, int]:
    """(checked, total) cells whose observation matches the spec.

    Don't-care cells accept any observation; a ZERO/ONE mismatch raises.
    """
    observed = recover_function(trace, input_names, output_name)
    checked = 0
    for key, value in observed.items():
        cell = spec.cell(key)
        if cell is CellValue.DONT_CARE:
            continue
        expected = 1 if cell is CellValue.ONE else 0
        if value != expected:
            raise TraceContradictionError(
                f"assignment {key}: observed {value}, spec says {expected}"
            )
        checked += 1
    return checked, len(observed)


@dataclass(frozen=True)
class TransitionObservation:
    edge_time_ns: int
    reset: int | str
    input_value: int | str  # value consumed by this edge
    staged_input: int | str  # value driven at this edge (consumed by the next)
    staged_reset: int | str
    output_after: str


@dataclass(frozen=True)
class TransitionRecovery:
    observations: tuple[TransitionObservation, ...]
    consistent: bool
    complete: bool  # every (state, input) pair of the source was exercised
    covered_pairs: int
    problems: tuple[str, ...] = field(default_factory=tuple)


def recover_transitions(
    trace: WaveformTrace,
    fsm: FsmGraph | None = None,
    clock_name: str = "clk",
    reset_name: str = "reset",
    input_name: str = "in",
    output_name: str = "out",
    reset_active_low: bool = False,
    reset_asynchronous: bool = False,
    step_ns: int = DEFAULT_SAMPLE_STEP_NS,
) -> TransitionRecovery:
    """Per-clock-edge observations, optionally replayed against a machine.

    Inputs are driven at the rising edge in the emitted benches, so the
    value consumed by an edge at time t is the sample at t - step; the
    settled output is read at t + step. With `fsm` given, the observation
    stream is replayed through the interpreter and checked for consistency,
    and coverage of all (state, input) pairs is reported.
    """
    clk = trace.column(clock_name)
    reset_col = trace.column(reset_name)
    in_col = trace.column(input_name)
    out_col = trace.column(output_name)
    times = trace.times_ns

    observations = []
    for i in range(1, len(times)):
        if clk[i - 1] == "0" and clk[i] == "1":
            consumed_reset = reset_col[i - 1]
            consumed_input = in_col[i - 1]
            out_after = out_col[i + 1] if i + 1 < len(times) else "x"
            observations.append(
                TransitionObservation(
                    edge_time_ns=times[i],
                    reset=_as_bit(consumed_reset),
                    input_value=_as_int(consumed_input),
                    staged_input=_as_int(in_col[i]),
                    staged_reset=_as_bit(reset_col[i]),
                    output_after=out_after,
                )
            )

    if fsm is None:
        return TransitionRecovery(tuple(observations), True, False, 0)

    def asserted(bit: int | str) -> bool:
        return bit == 0 if reset_active_low else bit == 1

    problems: list[str] = []
    covered: set[tuple[int, int]] = set()
    state: int | None = None
    for obs in observations:
        if isinstance(obs.reset, str):
            problems.append(f"edge at {obs.edge_time_ns}ns: reset is x")
            state = None
            continue
        if asserted(obs.reset):
            state = fsm.reset_state
        else:
            if state is None or isinstance(obs.input_value, str):
                state = None
                continue
            covered.add((state, obs.input_value))
            state = fsm.transitions[state][obs.input_value]
        if reset_asynchronous and not isinstance(obs.staged_reset, str) and asserted(
            obs.staged_reset
        ):
            # The reset driven at this edge fires immediately.
            state = fsm.reset_state
        if obs.output_after == "x":
            continue
        if fsm.kind is FsmKind.MOORE:
            expected = fsm.moore_outputs[state]
        else:
            # Mealy output after the edge pairs the new state with the input
            # staged at the edge (which the next edge will consume).
            if isinstance(obs.staged_input, str):
                continue
            expected = fsm.mealy_outputs[state][obs.staged_input]
        if int(obs.output_after) != expected:
            problems.append(
                f"edge at {obs.edge_time_ns}ns: output {obs.output_after}, "
                f"interpreter says {expected}"
            )
    total_pairs = fsm.n * fsm.fanout
    return TransitionRecovery(
        observations=tuple(observations),
        consistent=not problems,
        complete=len(covered) == total_pairs,
        covered_pairs=len(covered),
        problems=tuple(problems),
    )


def _as_bit(value: str) -> int | str:
    return int(value) if value in ("0", "1") else value


def _as_int(value: str) -> int | str:
    if value == "x":
        return value
    return int(value, 2) if len(value) > 1 else int(value)
