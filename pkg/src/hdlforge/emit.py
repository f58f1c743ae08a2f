"""Verilog module emission for SOP functions and FSMs.

Templates follow the house solution style: a single continuous assignment
for combinational logic, `always_comb` case blocks for out-edge transition
logic, and per-bit continuous assigns for in-edge one-hot logic. Emission is
pure text substitution from the ground-truth object, so the module's
behavior is fixed by construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .boolfn import FunctionSpec, SopExpr, format_sop
from .fsm import EncodingScheme, FsmGraph, FsmKind, StateEncoding


class EmitStyle(enum.Enum):
    SOP = "sop"
    FSM_OUT_EDGE = "fsm_out_edge"
    FSM_IN_EDGE_ONE_HOT = "fsm_in_edge_one_hot"


class FsmInterface(enum.Enum):
    FULL = "full"  # registered state, clock + reset ports
    COMB_ONLY = "comb_only"  # state is an input port, no register


@dataclass(frozen=True)
class ResetStyle:
    asynchronous: bool = False
    active_low: bool = False

    @property
    def signal(self) -> str:
        if self.active_low:
            return "aresetn" if self.asynchronous else "resetn"
        return "areset" if self.asynchronous else "reset"

    @property
    def condition(self) -> str:
        return f"!{self.signal}" if self.active_low else self.signal

    def describe(self) -> str:
        timing = "asynchronous" if self.asynchronous else "synchronous"
        level = "active-low" if self.active_low else "active-high"
        return f"{timing} {level}"


@dataclass(frozen=True)
class VerilogArtifact:
    module_text: str
    module_name: str
    ports: tuple[tuple[str, str, int], ...]  # (name, direction, width)
    style: EmitStyle
    provenance: dict = field(default_factory=dict, compare=False)


def _port_block(ports: list[tuple[str, str, int]], indent: str) -> str:
    lines = []
    for name, direction, width in ports:
        rng = f"[{width - 1}:0] " if width > 1 else ""
        lines.append(f"{indent}{direction} {rng}{name}")
    return ",\n".join(lines)


def emit_sop_module(
    expr: SopExpr,
    port_names: tuple[str, ...] | None = None,
    output_name: str = "out",
    module_name: str = "top_module",
) -> VerilogArtifact:
    """One continuous assignment of the sum-of-products."""
    names = tuple(port_names) if port_names is not None else expr.var_names
    if len(names) != len(expr.var_names):
        raise ValueError(
            f"expected {len(expr.var_names)} input ports, got {len(names)}"
        )
    ports = [(n, "input", 1) for n in names] + [(output_name, "output", 1)]
    body = format_sop(SopExpr(names, expr.terms))
    text = (
        f"module {module_name}(\n"
        + _port_block(ports, "        ")
        + "\n);\n"
        + f"        assign {output_name} = {body};\n"
        + "endmodule\n"
    )
    return VerilogArtifact(
        module_text=text,
        module_name=module_name,
        ports=tuple(ports),
        style=EmitStyle.SOP,
        provenance={"expr": expr},
    )


@dataclass(frozen=True)
class FsmPortNames:
    clock: str = "clk"
    input_name: str = "x"
    output_name: str = "out"
    state_in: str = "state"
    next_state: str = "next_state"


def _input_width_ports(fsm: FsmGraph, names: FsmPortNames) -> tuple[str, str, int]:
    return (names.input_name, "input", fsm.input_width)


def input_condition(fsm: FsmGraph, names: FsmPortNames, value: int) -> str:
    """Expression true when the input port carries `value`."""
    if fsm.input_width == 1:
        return names.input_name if value else f"~{names.input_name}"
    return f"{names.input_name} == {fsm.input_width}'b{format(value, f'0{fsm.input_width}b')}"


_input_condition = input_condition


def _param_decl(fsm: FsmGraph, encoding: StateEncoding, as_codes: bool) -> str:
    """`as_codes` binds parameters to encoded values, otherwise to bit indices."""
    parts = []
    for i, name in enumerate(fsm.state_names):
        if as_codes:
            if encoding.scheme is EncodingScheme.ONE_HOT or encoding.width > 1:
                parts.append(f"{name}={encoding.width}'b{encoding.codes[i]}")
            else:
                parts.append(f"{name}={int(encoding.codes[i], 2)}")
        else:
            parts.append(f"{name}={i}")
    return "        parameter " + ", ".join(parts) + ";"


def next_state_expression(fsm: FsmGraph, state: int, names: FsmPortNames) -> str:
    """Ternary chain selecting the successor of `state` by input value.

    For one input bit this is the idiomatic `x ? T1 : T0`; wider inputs
    chain equality tests in ascending value order.
    """
    row = fsm.transitions[state]
    if fsm.input_width == 1:
        return (
            f"{names.input_name} ? {fsm.state_names[row[1]]} : {fsm.state_names[row[0]]}"
        )
    parts = []
    for v in range(fsm.fanout - 1):
        parts.append(f"{_input_condition(fsm, names, v)} ? {fsm.state_names[row[v]]} : ")
    parts.append(fsm.state_names[row[fsm.fanout - 1]])
    return "".join(parts)


def _case_block(fsm: FsmGraph, names: FsmPortNames, target: str) -> list[str]:
    lines = ["        always_comb begin", f"                case({names.state_in})"]
    for s in range(fsm.n):
        lines.append(
            f"                        {fsm.state_names[s]}: {target} = "
            f"{next_state_expression(fsm, s, names)};"
        )
    lines.append(f"                        default: {target} = 'x;")
    lines.append("                endcase")
    lines.append("        end")
    return lines


def moore_output_terms(fsm: FsmGraph, names: FsmPortNames, one_hot: bool) -> str:
    states = [s for s in range(fsm.n) if fsm.moore_outputs[s] == 1]
    if one_hot:
        parts = [f"{names.state_in}[{fsm.state_names[s]}]" for s in states]
    else:
        parts = [f"{names.state_in} == {fsm.state_names[s]}" for s in states]
    return " || ".join(parts)


def mealy_output_terms(fsm: FsmGraph, names: FsmPortNames, one_hot: bool) -> str:
    parts = []
    for s in range(fsm.n):
        for v in range(fsm.fanout):
            if fsm.mealy_outputs[s][v] == 1:
                cond = _input_condition(fsm, names, v)
                if one_hot:
                    parts.append(f"{names.state_in}[{fsm.state_names[s]}] & {cond}")
                else:
                    parts.append(f"( {names.state_in} == {fsm.state_names[s]} & {cond} )")
    return " || ".join(parts)


def in_edge_assign_lines(fsm: FsmGraph, names: FsmPortNames) -> list[str]:
    """Per-bit next-state logic: OR over predecessor (state & input) terms."""
    lines = []
    for t in range(fsm.n):
        terms = []
        for s in range(fsm.n):
            for v in range(fsm.fanout):
                if fsm.transitions[s][v] == t:
                    terms.append(
                        f"{names.state_in}[{fsm.state_names[s]}] & "
                        f"{_input_condition(fsm, names, v)}"
                    )
        rhs = " || ".join(terms) if terms else "1'b0"
        lines.append(
            f"        assign {names.next_state}[{fsm.state_names[t]}] = {rhs};"
        )
    return lines


def emit_fsm_module(
    fsm: FsmGraph,
    encoding: StateEncoding,
    style: EmitStyle = EmitStyle.FSM_OUT_EDGE,
    reset: ResetStyle | None = ResetStyle(),
    interface: FsmInterface = FsmInterface.FULL,
    names: FsmPortNames = FsmPortNames(),
    next_bit: int | None = None,
    module_name: str = "top_module",
) -> VerilogArtifact:
    """Emit transition + output logic for a machine.

    FSM_OUT_EDGE enumerates successors in a case over the current state;
    FSM_IN_EDGE_ONE_HOT drives each next-state bit from its predecessors and
    requires a one-hot encoding. The COMB_ONLY interface takes the state as
    an input port and omits the register; with a binary encoding and
    `next_bit` set it exposes the single next-state bit Y<next_bit> in the
    house state-assigned-table style.
    """
    if style is EmitStyle.FSM_IN_EDGE_ONE_HOT and encoding.scheme is not EncodingScheme.ONE_HOT:
        raise ValueError("in-edge emission requires a one-hot encoding")
    if style is EmitStyle.SOP:
        raise ValueError("SOP style does not apply to FSM emission")
    if interface is FsmInterface.FULL and reset is None:
        raise ValueError("a full FSM needs a reset style")

    one_hot = encoding.scheme is EncodingScheme.ONE_HOT
    width = encoding.width
    out = names.output_name
    body: list[str] = []
    ports: list[tuple[str, str, int]] = []
    port_indent = " "

    if interface is FsmInterface.FULL:
        ports.append((names.clock, "input", 1))
        ports.append((reset.signal, "input", 1))
        ports.append((names.input_name, "input", fsm.input_width))
        ports.append((out, "output", 1))
    else:
        if style is EmitStyle.FSM_OUT_EDGE and not one_hot and next_bit is not None:
            ports.append((names.clock, "input", 1))
            ports.append((names.input_name, "input", fsm.input_width))
            ports.append((names.state_in, "input", width))
            ports.append((f"{names.next_state}{next_bit}", "output", 1))
            ports.append((out, "output", 1))
        else:
            ports.append((names.input_name, "input", fsm.input_width))
            ports.append((names.state_in, "input", width))
            if style is EmitStyle.FSM_OUT_EDGE:
                ports.append((names.next_state, "output reg", width))
            else:
                ports.append((names.next_state, "output", width))
            ports.append((out, "output", 1))

    if style is EmitStyle.FSM_IN_EDGE_ONE_HOT:
        body.append(_param_decl(fsm, encoding, as_codes=False))
        body.append("")
        if interface is FsmInterface.FULL:
            body.append(f"        reg [{width - 1}:0] {names.state_in};")
            body.append(f"        wire [{width - 1}:0] {names.next_state};")
            body.append("")
        body.extend(in_edge_assign_lines(fsm, names))
        body.append("")
        if interface is FsmInterface.FULL:
            body.extend(_state_register_lines(fsm, encoding, reset, names, one_hot=True))
            body.append("")
        terms = (
            moore_output_terms(fsm, names, one_hot=True)
            if fsm.kind is FsmKind.MOORE
            else mealy_output_terms(fsm, names, one_hot=True)
        )
        body.append(f"        assign {out} = ( {terms} );")
    else:
        # Out-edge: parameters are the encoded state values.
        body.append(_param_decl(fsm, encoding, as_codes=True))
        if interface is FsmInterface.FULL:
            state_decl = f"reg [{width - 1}:0]" if width > 1 else "reg"
            body.append(f"        {state_decl} {names.state_in};")
            body.append(f"        {state_decl} {names.next_state};")
            body.append("")
            body.extend(_case_block(fsm, names, names.next_state))
            body.append("")
            body.extend(_state_register_lines(fsm, encoding, reset, names, one_hot))
            body.append("")
            terms = (
                moore_output_terms(fsm, names, one_hot=False)
                if fsm.kind is FsmKind.MOORE
                else mealy_output_terms(fsm, names, one_hot=False)
            )
            body.append(f"        assign {out} = ( {terms} );")
        elif next_bit is not None and not one_hot:
            body.append(
                f"        reg [{width - 1}:0] {names.next_state};"
                if width > 1
                else f"        reg {names.next_state};"
            )
            body.append("")
            body.extend(_case_block(fsm, names, names.next_state))
            body.append("")
            terms = (
                moore_output_terms(fsm, names, one_hot=False)
                if fsm.kind is FsmKind.MOORE
                else mealy_output_terms(fsm, names, one_hot=False)
            )
            body.append(f"        assign {out} = ( {terms} );")
            bit_states = [
                fsm.state_names[s]
                for s in range(fsm.n)
                if encoding.codes[s][width - 1 - next_bit] == "1"
            ]
            bit_terms = " || ".join(f"{names.next_state} == {s}" for s in bit_states)
            body.append(
                f"        assign {names.next_state}{next_bit} = ( {bit_terms} );"
                if bit_terms
                else f"        assign {names.next_state}{next_bit} = 1'b0;"
            )
        else:
            body.append("")
            body.extend(_case_block(fsm, names, names.next_state))
            body.append("")
            # Out-edge parameters are codes, so outputs compare the full state.
            terms = (
                moore_output_terms(fsm, names, one_hot=False)
                if fsm.kind is FsmKind.MOORE
                else mealy_output_terms(fsm, names, one_hot=False)
            )
            body.append(f"        assign {out} = ( {terms} );")

    text = (
        f"module {module_name} (\n"
        + _port_block(ports, port_indent)
        + "\n);\n"
        + "\n".join(body)
        + "\nendmodule\n"
    )
    return VerilogArtifact(
        module_text=text,
        module_name=module_name,
        ports=tuple((n, d.replace(" reg", ""), w) for n, d, w in ports),
        style=style,
        provenance={
            "fsm": fsm,
            "encoding": encoding,
            "interface": interface,
            "reset": reset,
            "names": names,
            "next_bit": next_bit,
        },
    )


def _state_register_lines(
    fsm: FsmGraph,
    encoding: StateEncoding,
    reset: ResetStyle,
    names: FsmPortNames,
    one_hot: bool,
) -> list[str]:
    if one_hot:
        reset_value = f"{encoding.width}'b{encoding.codes[fsm.reset_state]}"
    else:
        reset_value = fsm.state_names[fsm.reset_state]
    if reset.asynchronous:
        edge = "negedge" if reset.active_low else "posedge"
        sensitivity = f"posedge {names.clock}, {edge} {reset.signal}"
    else:
        sensitivity = f"posedge {names.clock}"
    return [
        f"        always @({sensitivity}) begin",
        f"                if ({reset.condition}) {names.state_in} <= {reset_value};",
        f"                else {names.state_in} <= {names.next_state};",
        "        end",
    ]
