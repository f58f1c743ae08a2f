"""Self-checking testbenches paired with emitted modules.

Expected values are taken from the ground-truth object (the FunctionSpec
cells or the FSM interpreter), never from the emitted logic, so a testbench
run is an independent check of the artifact text.

Combinational benches enumerate every input assignment: the first is held
for 20 ns, each following one for 5 ns, and outputs are compared just before
each step; don't-care cells are driven but not checked. Sequential benches
run a 10 ns clock, drive inputs with nonblocking assignments on the rising
edge (so the register consumes the previous value) and compare outputs on
the falling edge.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .boolfn import CellValue, FunctionSpec
from .emit import ResetStyle, VerilogArtifact
from .fsm import FsmGraph, FsmKind, simulate_fsm, transition_cover_sequence

CLOCK_PERIOD_NS = 10
FIRST_VECTOR_HOLD_NS = 20
VECTOR_STEP_NS = 5


@dataclass(frozen=True)
class CombStep:
    assignment: tuple[int, ...]
    check: bool
    expected: int | None


@dataclass(frozen=True)
class TestbenchSpec:
    kind: str  # "combinational" | "sequential"
    comb_steps: tuple[CombStep, ...] = ()
    seq_inputs: tuple[int, ...] = ()
    seq_resets: tuple[bool, ...] = ()
    seq_checks: tuple[int, ...] = ()
    clock_period_ns: int | None = None
    vcd_path: str | None = None

    @property
    def checked_count(self) -> int:
        if self.kind == "combinational":
            return sum(1 for s in self.comb_steps if s.check)
        return len(self.seq_checks)


def _dump_lines(vcd_path: str | None, signals: list[str]) -> list[str]:
    if vcd_path is None:
        return []
    return [
        f'                $dumpfile("{vcd_path}");',
        f"                $dumpvars(0, {', '.join(signals)});",
    ]


def _summary_lines() -> list[str]:
    return [
        '                $display("RESULT checks=%0d mismatches=%0d", checks, errors);',
        '                if (errors == 0) $display("ALL_TESTS_PASSED");',
        "                $finish;",
    ]


def emit_combinational_testbench(
    artifact: VerilogArtifact,
    spec: FunctionSpec,
    vcd_path: str | None = None,
    module_name: str = "tb",
) -> tuple[TestbenchSpec, str]:
    input_ports = [p for p in artifact.ports if p[1] == "input"]
    output_port = next(p for p in artifact.ports if p[1] == "output")
    if len(input_ports) != spec.n:
        raise ValueError("artifact port count does not match the spec")
    in_names = [p[0] for p in input_ports]
    out = output_port[0]

    steps = []
    for index in range(1 << spec.n):
        value = spec.cells[index]
        check = value is not CellValue.DONT_CARE
        expected = 1 if value is CellValue.ONE else 0 if value is CellValue.ZERO else None
        steps.append(CombStep(spec.assignment_bits(index), check, expected))

    lines = [
        "`timescale 1ns / 1ns",
        f"module {module_name};",
        "        reg " + ", ".join(in_names) + ";",
        f"        wire {out};",
        "        integer errors;",
        "        integer checks;",
        "",
        f"        {artifact.module_name} dut ("
        + ", ".join(f".{n}({n})" for n in in_names + [out])
        + ");",
        "",
        "        initial begin",
        *_dump_lines(vcd_path, in_names + [out]),
        "                errors = 0;",
        "                checks = 0;",
    ]
    for i, step in enumerate(steps):
        assigns = " ".join(
            f"{name} = {bit};" for name, bit in zip(in_names, step.assignment)
        )
        lines.append(f"                {assigns}")
        settle = FIRST_VECTOR_HOLD_NS - 1 if i == 0 else VECTOR_STEP_NS - 1
        lines.append(f"                #{settle};")
        if step.check:
            bits = "".join(str(b) for b in step.assignment)
            lines.append("                checks = checks + 1;")
            lines.append(
                f"                if ({out} !== 1'b{step.expected}) begin "
                f"errors = errors + 1; "
                f'$display("MISMATCH input={bits} {out}=%b expected={step.expected}", {out}); '
                "end"
            )
        lines.append("                #1;")
    lines.extend(_summary_lines())
    lines.append("        end")
    lines.append("endmodule")

    tb_spec = TestbenchSpec(
        kind="combinational", comb_steps=tuple(steps), vcd_path=vcd_path
    )
    return tb_spec, "\n".join(lines) + "\n"


def sequential_stimulus(
    fsm: FsmGraph, rng_seed: int, coverage: str = "verify"
) -> tuple[list[int], list[bool]]:
    """Input plan: cover every transition; "verify" appends two random walks
    of 8 * n * 2^w steps each, "wave" stays at the minimal covering walk so
    rendered traces stay readable. Reset flags mark steps that jump back to
    the reset state when the pending edges are otherwise unreachable."""
    inputs, resets = transition_cover_sequence(fsm, rng_seed)
    if coverage == "verify":
        rng = random.Random(rng_seed ^ 0x5EED)
        walk = 8 * fsm.n * fsm.fanout
        extra = [rng.randrange(fsm.fanout) for _ in range(2 * walk)]
        inputs += extra
        resets += [False] * len(extra)
    return inputs, resets


def emit_sequential_testbench(
    artifact: VerilogArtifact,
    fsm: FsmGraph,
    stimulus: tuple[list[int], list[bool]] | None = None,
    rng_seed: int = 0,
    coverage: str = "verify",
    vcd_path: str | None = None,
    module_name: str = "tb",
) -> tuple[TestbenchSpec, str]:
    reset: ResetStyle = artifact.provenance["reset"]
    names = artifact.provenance["names"]
    if stimulus is None:
        stimulus = sequential_stimulus(fsm, rng_seed, coverage)
    inputs, resets = stimulus
    if not inputs:
        raise ValueError("sequential stimulus needs at least one input")
    if len(resets) != len(inputs):
        raise ValueError("reset flags must match the input sequence")

    # Expected value in the settled window after each rising edge. Edge 0 is
    # the initial reset; edge k (k >= 1) consumes inputs[k-1]. The window
    # after edge k sees state trace[k]; a Mealy output also depends on the
    # input staged at edge k, inputs[k].
    trace = simulate_fsm(fsm, inputs, resets)
    states = [s for s, _ in trace]
    total = len(inputs)
    # An asynchronous reset staged at edge k fires immediately, so the
    # window after edge k already shows the reset state; a synchronous one
    # is only consumed at edge k+1.
    window_states = list(states)
    if reset.asynchronous:
        for k in range(total):
            if resets[k]:
                window_states[k] = fsm.reset_state
    if fsm.kind is FsmKind.MOORE:
        checks = [fsm.moore_outputs[window_states[k]] for k in range(total + 1)]
        edges_after_reset = total
        trailing_edge = False
    else:
        checks = [
            fsm.mealy_outputs[window_states[k]][inputs[k]] for k in range(total)
        ]
        edges_after_reset = total - 1
        trailing_edge = True  # consume the last staged input

    clk = names.clock
    in_name = names.input_name
    out = names.output_name
    rst = reset.signal
    w = fsm.input_width
    assert_val = "0" if reset.active_low else "1"
    deassert_val = "1" if reset.active_low else "0"

    def in_literal(v: int) -> str:
        return f"{w}'b{format(v, f'0{w}b')}" if w > 1 else f"1'b{v}"

    def rst_literal(asserted: bool) -> str:
        return assert_val if asserted else deassert_val

    in_decl = f"reg [{w - 1}:0] {in_name};" if w > 1 else f"reg {in_name};"
    lines = [
        "`timescale 1ns / 1ns",
        f"module {module_name};",
        f"        reg {clk};",
        f"        reg {rst};",
        f"        {in_decl}",
        f"        wire {out};",
        "        integer errors;",
        "        integer checks;",
        "",
        f"        {artifact.module_name} dut ("
        + ", ".join(f".{n}({n})" for n in [clk, rst, in_name, out])
        + ");",
        "",
        f"        always #{CLOCK_PERIOD_NS // 2} {clk} = ~{clk};",
        "",
        "        initial begin",
        *_dump_lines(vcd_path, [clk, rst, in_name, out]),
        "                errors = 0;",
        "                checks = 0;",
        f"                {clk} = 0;",
        f"                {rst} = {assert_val};",
        f"                {in_name} = {in_literal(0)};",
    ]

    staged_reset = True  # asserted before the first edge

    def stage(edge: int) -> None:
        nonlocal staged_reset
        lines.append(f"                @(posedge {clk});")
        want_reset = resets[edge] if edge < total else False
        if want_reset != staged_reset:
            lines.append(f"                {rst} <= {rst_literal(want_reset)};")
            staged_reset = want_reset
        if edge < total:
            lines.append(f"                {in_name} <= {in_literal(inputs[edge])};")

    def check_block(step: int, expected: int) -> None:
        lines.append(f"                @(negedge {clk});")
        lines.append("                checks = checks + 1;")
        lines.append(
            f"                if ({out} !== 1'b{expected}) begin "
            f"errors = errors + 1; "
            f'$display("MISMATCH step={step} {out}=%b expected={expected}", {out}); '
            "end"
        )

    stage(0)
    check_block(0, checks[0])
    for edge in range(1, edges_after_reset + 1):
        stage(edge)
        check_block(edge, checks[edge])
    if trailing_edge:
        stage(edges_after_reset + 1)
        lines.append(f"                @(negedge {clk});")

    lines.extend(_summary_lines())
    lines.append("        end")
    lines.append("endmodule")

    tb_spec = TestbenchSpec(
        kind="sequential",
        seq_inputs=tuple(inputs),
        seq_resets=tuple(resets),
        seq_checks=tuple(checks),
        clock_period_ns=CLOCK_PERIOD_NS,
        vcd_path=vcd_path,
    )
    return tb_spec, "\n".join(lines) + "\n"


def emit_fsm_comb_testbench(
    artifact: VerilogArtifact,
    fsm: FsmGraph,
    module_name: str = "tb",
) -> tuple[TestbenchSpec, str]:
    """Exhaustive bench for register-free transition-logic modules: drive
    every (state code, input value) pair and compare the next-state vector
    (or the exposed bit) and the output against the interpreter."""
    from .emit import FsmInterface  # local import avoids a cycle

    if artifact.provenance.get("interface") is not FsmInterface.COMB_ONLY:
        raise ValueError("artifact does not expose a combinational interface")
    encoding = artifact.provenance["encoding"]
    names = artifact.provenance["names"]
    next_bit = artifact.provenance.get("next_bit")
    width = encoding.width
    w = fsm.input_width
    in_name = names.input_name
    state_in = names.state_in
    out = names.output_name
    has_clk = next_bit is not None
    next_port = f"{names.next_state}{next_bit}" if next_bit is not None else names.next_state

    port_names = [p[0] for p in artifact.ports]
    decls = []
    if has_clk:
        decls.append(f"        reg {names.clock};")
    decls.append(f"        reg [{w - 1}:0] {in_name};" if w > 1 else f"        reg {in_name};")
    decls.append(f"        reg [{width - 1}:0] {state_in};")
    if next_bit is None:
        decls.append(f"        wire [{width - 1}:0] {next_port};")
    else:
        decls.append(f"        wire {next_port};")
    decls.append(f"        wire {out};")

    lines = [
        "`timescale 1ns / 1ns",
        f"module {module_name};",
        *decls,
        "        integer errors;",
        "        integer checks;",
        "",
        f"        {artifact.module_name} dut ("
        + ", ".join(f".{n}({n})" for n in port_names)
        + ");",
        "",
        "        initial begin",
        "                errors = 0;",
        "                checks = 0;",
    ]
    if has_clk:
        lines.append(f"                {names.clock} = 0;")

    def in_literal(v: int) -> str:
        return f"{w}'b{format(v, f'0{w}b')}" if w > 1 else f"1'b{v}"

    checks = []
    for s in range(fsm.n):
        for v in range(fsm.fanout):
            code = encoding.codes[s]
            next_code = encoding.codes[fsm.transitions[s][v]]
            out_bit = fsm.output_of(s, v)
            lines.append(f"                {state_in} = {width}'b{code};")
            lines.append(f"                {in_name} = {in_literal(v)};")
            lines.append("                #4;")
            lines.append("                checks = checks + 1;")
            if next_bit is None:
                expected_bits = next_code
                expected_next = f"{width}'b{next_code}"
            else:
                expected_bits = next_code[width - 1 - next_bit]
                expected_next = f"1'b{expected_bits}"
            lines.append(
                f"                if ({next_port} !== {expected_next}) begin "
                f"errors = errors + 1; "
                f'$display("MISMATCH state={code} {in_name}={v} {next_port}=%b '
                f'expected={expected_bits}", {next_port}); end'
            )
            lines.append("                checks = checks + 1;")
            lines.append(
                f"                if ({out} !== 1'b{out_bit}) begin "
                f"errors = errors + 1; "
                f'$display("MISMATCH state={code} {in_name}={v} {out}=%b '
                f'expected={out_bit}", {out}); end'
            )
            lines.append("                #1;")
            checks.append(out_bit)
    lines.extend(_summary_lines())
    lines.append("        end")
    lines.append("endmodule")
    tb_spec = TestbenchSpec(kind="combinational", seq_checks=tuple(checks))
    return tb_spec, "\n".join(lines) + "\n"


def emit_testbench(
    artifact: VerilogArtifact,
    source: FunctionSpec | FsmGraph,
    vcd_path: str | None = None,
    rng_seed: int = 0,
    coverage: str = "verify",
) -> tuple[TestbenchSpec, str]:
    """Dispatch on the artifact's provenance: spec -> combinational bench,
    full machine -> clocked sequential bench, register-free machine ->
    exhaustive pair-driving bench."""
    if isinstance(source, FunctionSpec):
        return emit_combinational_testbench(artifact, source, vcd_path=vcd_path)
    if artifact.provenance.get("reset") is None:
        return emit_fsm_comb_testbench(artifact, source)
    return emit_sequential_testbench(
        artifact, source, rng_seed=rng_seed, coverage=coverage, vcd_path=vcd_path
    )
