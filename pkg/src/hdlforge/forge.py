"""Assembly of (prompt, reasoning, solution) training records.

Each problem kind renders the shared ground-truth object three ways: a
non-textual representation for the prompt, a step-by-step derivation for the
reasoning, and emitted Verilog for the solution. Fingerprints hash the
canonicalized ground-truth object (never the text), so variable renames, map
mutations and state relabelings all collapse to one entry for deduplication
and benchmark decontamination.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import random
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from .boolfn import (
    CellValue,
    FunctionSpec,
    canonical_cells,
    derive_sop,
    format_minterm_lines,
    format_sop,
    render_kmap,
    render_truth_table,
    sample_function_spec,
)
from .emit import (
    EmitStyle,
    FsmInterface,
    FsmPortNames,
    ResetStyle,
    VerilogArtifact,
    emit_fsm_module,
    emit_sop_module,
    input_condition,
    next_state_expression,
)
from .fsm import (
    EncodingScheme,
    FsmGraph,
    FsmKind,
    canonical_form,
    encode_states,
    generate_fsm,
    render_edge_list,
    render_transition_table,
)
from .simrun import simulate_inprocess
from .testbench import emit_testbench
from .wave import parse_vcd, render_waveform_table, sample_trace


class ProblemKind(enum.Enum):
    KMAP = "kmap"
    TRUTH_TABLE = "truth_table"
    FSM_TABLE = "fsm_table"
    FSM_EDGE_LIST = "fsm_edge_list"
    WAVE_COMB = "wave_comb"
    WAVE_SEQ = "wave_seq"
    REPAIR = "repair"


KMAP_FAMILY = (ProblemKind.KMAP, ProblemKind.TRUTH_TABLE)
FSM_FAMILY = (ProblemKind.FSM_TABLE, ProblemKind.FSM_EDGE_LIST)
WAVE_FAMILY = (ProblemKind.WAVE_COMB, ProblemKind.WAVE_SEQ)

_NUMBER_WORDS = {
    1: "one", 2: "two", 3: "three", 4: "four", 5: "five", 6: "six",
    7: "seven", 8: "eight", 9: "nine", 10: "ten", 11: "eleven",
    12: "twelve", 13: "thirteen", 14: "fourteen", 15: "fifteen", 16: "sixteen",
}

_VAR_NAME_POOLS = (("a", "b", "c", "d"), ("p", "q", "r", "s"), ("w", "x", "y", "z"))


@dataclass(frozen=True)
class ForgeConfig:
    dc_probability: float = 0.15
    # Three-variable functions are a small pool; keep them a minority so
    # large runs do not exhaust the distinct-function space.
    n_weights: tuple[tuple[int, float], ...] = ((3, 0.25), (4, 0.75))
    fsm_state_counts: tuple[int, ...] = (4, 6, 10)
    fsm_input_widths: tuple[int, ...] = (1, 2)
    simulate: Callable = simulate_inprocess


@dataclass(frozen=True)
class ProblemInstance:
    kind: ProblemKind
    instruction: str
    representation: str
    module_header: str
    reasoning: str
    solution: str
    seed: int
    fingerprint: str
    provenance: dict = field(compare=False, default_factory=dict)

    @property
    def prompt(self) -> str:
        joiner = "\n\n" if self.kind in (
            ProblemKind.FSM_EDGE_LIST,
            ProblemKind.WAVE_COMB,
            ProblemKind.WAVE_SEQ,
        ) else "\n"
        return (
            self.instruction
            + joiner
            + self.representation
            + "\n\n"
            + self.module_header
        )

    @property
    def instance_id(self) -> str:
        return f"{self.kind.value}-{self.seed}-{self.fingerprint[:10]}"


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    kind: str
    prompt: str
    response: str
    seed: int
    fingerprint: str


def to_record(instance: ProblemInstance) -> DatasetRecord:
    return DatasetRecord(
        id=instance.instance_id,
        kind=instance.kind.value,
        prompt=instance.prompt,
        response=instance.reasoning,
        seed=instance.seed,
        fingerprint=instance.fingerprint,
    )


# --- fingerprints -----------------------------------------------------------


def fingerprint_function(spec: FunctionSpec) -> str:
    payload = "boolfn:" + ":".join(canonical_cells(spec))
    return hashlib.sha256(payload.encode()).hexdigest()


def fingerprint_fsm(fsm: FsmGraph) -> str:
    payload = "fsm:" + repr(canonical_form(fsm))
    return hashlib.sha256(payload.encode()).hexdigest()


def fingerprint_code(text: str) -> str:
    """Whitespace/comment-insensitive hash for repair records."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("//", 1)[0].strip()
        if line:
            lines.append(" ".join(line.split()))
    payload = "code:" + "\n".join(lines)
    return hashlib.sha256(payload.encode()).hexdigest()


def fingerprint(instance: ProblemInstance) -> str:
    source = instance.provenance["source"]
    if isinstance(source, FunctionSpec):
        if instance.kind is ProblemKind.WAVE_COMB:
            # Only the resolved function is observable in a waveform.
            return fingerprint_function(source.collapse_dont_cares())
        return fingerprint_function(source)
    return fingerprint_fsm(source)


class FingerprintDb:
    """Exact-membership store of canonical hashes with labels."""

    def __init__(self) -> None:
        self._labels: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, digest: str) -> bool:
        return digest in self._labels

    def label(self, digest: str) -> str | None:
        return self._labels.get(digest)

    def add(self, digest: str, label: str) -> None:
        self._labels[digest] = label

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for digest in sorted(self._labels):
                fh.write(f"{digest} {self._labels[digest]}\n")

    @classmethod
    def load(cls, path: str) -> "FingerprintDb":
        db = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                digest, _, label = line.partition(" ")
                db.add(digest, label or "unlabeled")
        return db


def load_benchmark_templates(extra_path: str | None = None) -> FingerprintDb:
    """The shipped decontamination targets plus optional user fingerprints.

    The package data file carries the template problem labels; fingerprints
    of the benchmark representations themselves must be supplied by users
    who have the benchmark files (see the `fingerprint` CLI subcommand).
    """
    db = FingerprintDb()
    data = resources.files("hdlforge").joinpath("data/benchmark_templates.jsonl")
    for line in data.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        entry = json.loads(line)
        if entry.get("fingerprint"):
            db.add(entry["fingerprint"], entry["label"])
    if extra_path:
        extra = FingerprintDb.load(extra_path)
        for digest in extra._labels:
            db.add(digest, extra._labels[digest])
    return db


# --- shared rendering helpers ------------------------------------------------


def _module_header(module_text: str) -> str:
    """The port-declaration prefix of an emitted module, up to ');'."""
    end = module_text.index(");")
    return module_text[: end + 2]


def _fenced(code: str) -> str:
    return "```\n" + code.rstrip("\n") + "\n```"


def _reset_sentence(reset: ResetStyle, reset_label: str) -> str:
    timing = "asynchronous" if reset.asynchronous else "synchronous"
    level = "active-low" if reset.active_low else "active-high"
    return f"Reset is an {level} {timing} reset to state {reset_label}."


def _transition_logic_lines(fsm: FsmGraph, names: FsmPortNames) -> list[str]:
    return [
        f"{fsm.state_names[s]}: next = {next_state_expression(fsm, s, names)};"
        for s in range(fsm.n)
    ]


def _moore_output_sentences(fsm: FsmGraph, names: FsmPortNames, one_hot: bool) -> str:
    ones = [fsm.state_names[s] for s in range(fsm.n) if fsm.moore_outputs[s] == 1]
    if one_hot:
        terms = " || ".join(f"{names.state_in}[{s}]" for s in ones)
    else:
        terms = " || ".join(f"{names.state_in} == {s}" for s in ones)
    return (
        f"The output is 1 for states: {', '.join(ones)}.\n"
        f"Thus the output logic is: `assign {names.output_name} = ( {terms} );`."
    )


def _mealy_output_sentences(fsm: FsmGraph, names: FsmPortNames) -> str:
    pairs = []
    terms = []
    for s in range(fsm.n):
        for v in range(fsm.fanout):
            if fsm.mealy_outputs[s][v] == 1:
                cond = input_condition(fsm, names, v)
                pairs.append(f"({fsm.state_names[s]}, {cond})")
                terms.append(
                    f"( {names.state_in} == {fsm.state_names[s]} & {cond} )"
                )
    return (
        f"The output is 1 for states: {', '.join(pairs)}.\n"
        f"Thus the output logic is: "
        f"`assign {names.output_name} = ( {' || '.join(terms)} );`."
    )


def _relabel(fsm: FsmGraph, rng: random.Random) -> FsmGraph:
    """Optionally permute display names (the reset state need not be 'A')."""
    base = fsm.state_names
    choice = rng.randrange(3)
    if choice == 0:
        names = base
    elif choice == 1:
        names = tuple(reversed(base))
    else:
        rotated = list(base)
        offset = rng.randrange(1, len(base))
        names = tuple(rotated[offset:] + rotated[:offset])
    return dataclasses.replace(fsm, state_names=names)


# --- per-kind builders --------------------------------------------------------


def _build_kmap(rng_seed: int, config: ForgeConfig) -> ProblemInstance:
    rng = random.Random(rng_seed)
    n = _weighted_choice(rng, config.n_weights)
    names = rng.choice(_VAR_NAME_POOLS)[:n]
    spec = sample_function_spec(
        n, rng.getrandbits(48), config.dc_probability, var_names=names
    )
    view = render_kmap(spec, mutations=None, rng_seed=rng.getrandbits(48))
    expr = derive_sop(spec)
    artifact = emit_sop_module(expr, output_name="out")

    instruction = "Implement the circuit described by the Karnaugh map below."
    representation = view.to_text()
    header = _module_header(artifact.module_text)
    reasoning = "\n".join(
        [
            f"The input variables are: {[name for name in spec.var_names]}.",
            "Based on the Karnaugh map, I can transform in to the following truth table:",
            render_truth_table(spec),
            "",
            "The minterms (when output is 1) are:",
            *format_minterm_lines(expr),
            "This corresponds to the following minterms logic:",
            f"`{format_sop(expr)}`",
            "",
            "Finally, based on the above logic equation, I can now write the "
            "Verilog code that could be described by the Karnaugh map:",
            _fenced(artifact.module_text),
        ]
    )
    instance = ProblemInstance(
        kind=ProblemKind.KMAP,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_function(spec),
        provenance={"source": spec, "artifact": artifact, "view": view},
    )
    return instance


def _build_truth_table(rng_seed: int, config: ForgeConfig) -> ProblemInstance:
    rng = random.Random(rng_seed)
    n = _weighted_choice(rng, config.n_weights)
    names = rng.choice(_VAR_NAME_POOLS)[:n]
    spec = sample_function_spec(
        n, rng.getrandbits(48), config.dc_probability, var_names=names
    )
    expr = derive_sop(spec)
    artifact = emit_sop_module(expr, output_name="out")

    table = render_truth_table(spec)
    commented = "\n".join("//" + line for line in table.splitlines())
    instruction = "Implement the circuit described by the truth table below."
    header = _module_header(artifact.module_text)
    reasoning = "\n".join(
        [
            f"The input variables are: {[name for name in spec.var_names]}.",
            "The minterms (when output is 1) are:",
            *format_minterm_lines(expr),
            "This corresponds to the following minterms logic:",
            f"`{format_sop(expr)}`",
            "",
            "Finally, based on the above logic equation, I can now write the "
            "Verilog code that could be described by the truth table:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.TRUTH_TABLE,
        instruction=instruction,
        representation=commented,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_function(spec),
        provenance={"source": spec, "artifact": artifact},
    )


def _sample_reset(rng: random.Random) -> ResetStyle:
    return ResetStyle(
        asynchronous=bool(rng.randrange(2)), active_low=bool(rng.randrange(2))
    )


def _build_fsm_table(rng_seed: int, config: ForgeConfig) -> ProblemInstance:
    rng = random.Random(rng_seed)
    variant = rng.choice(["named_full", "onehot_comb", "encoded_comb"])
    if variant == "named_full":
        return _fsm_table_named_full(rng_seed, rng, config)
    if variant == "onehot_comb":
        return _fsm_table_onehot_comb(rng_seed, rng, config)
    return _fsm_table_encoded_comb(rng_seed, rng, config)


def _fsm_table_named_full(
    rng_seed: int, rng: random.Random, config: ForgeConfig
) -> ProblemInstance:
    kind = rng.choice([FsmKind.MOORE, FsmKind.MEALY])
    n = rng.choice(config.fsm_state_counts)
    w = rng.choice(config.fsm_input_widths)
    fsm = _relabel(generate_fsm(n, w, kind, rng.getrandbits(48)), rng)
    reset = _sample_reset(rng)
    in_name, out_name = rng.choice([("in", "out"), ("x", "z")])
    names = FsmPortNames(input_name=in_name, output_name=out_name)
    encoding = encode_states(fsm, EncodingScheme.BINARY)
    artifact = emit_fsm_module(
        fsm, encoding, EmitStyle.FSM_OUT_EDGE, reset=reset, names=names
    )
    reset_label = fsm.state_names[fsm.reset_state]

    machine = "Moore" if kind is FsmKind.MOORE else "Mealy"
    instruction = (
        f"The following is the state transition table for a {machine} state "
        f"machine with {_NUMBER_WORDS[w]} input"
        + ("s" if w > 1 else "")
        + f", one output, and {_NUMBER_WORDS[n]} states. "
        + _reset_sentence(reset, reset_label)
        + " Implement this state machine in Verilog."
    )
    representation = render_transition_table(
        fsm, input_name=in_name, output_name=out_name
    )
    header = _module_header(artifact.module_text)
    output_part = (
        _moore_output_sentences(fsm, names, one_hot=False)
        if kind is FsmKind.MOORE
        else _mealy_output_sentences(fsm, names)
    )
    reasoning = "\n".join(
        [
            "The transition logic is then:",
            *_transition_logic_lines(fsm, names),
            "",
            output_part,
            "",
            "Finally, below is the Verilog code for the finite state machine:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.FSM_TABLE,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_fsm(fsm),
        provenance={"source": fsm, "artifact": artifact, "variant": "named_full"},
    )


def _fsm_table_onehot_comb(
    rng_seed: int, rng: random.Random, config: ForgeConfig
) -> ProblemInstance:
    kind = rng.choice([FsmKind.MOORE, FsmKind.MEALY])
    n = rng.choice([c for c in config.fsm_state_counts if c <= 6] or [4])
    fsm = _relabel(generate_fsm(n, 1, kind, rng.getrandbits(48)), rng)
    names = FsmPortNames(input_name="in", output_name="out")
    encoding = encode_states(fsm, EncodingScheme.ONE_HOT)
    artifact = emit_fsm_module(
        fsm,
        encoding,
        EmitStyle.FSM_IN_EDGE_ONE_HOT,
        reset=None,
        interface=FsmInterface.COMB_ONLY,
        names=names,
    )
    machine = "Moore" if kind is FsmKind.MOORE else "Mealy"
    codes = ", ".join(
        f"{fsm.state_names[i]}={n}'b{encoding.codes[i]}" for i in range(fsm.n)
    )
    instruction = (
        f"The following is the state transition table for a {machine} state "
        f"machine with one input, one output, and {_NUMBER_WORDS[n]} states. "
        f"Use the following one-hot state encoding: {codes}. "
        "Derive state transition and output logic equations by inspection "
        "assuming a one-hot encoding. Implement only the state transition "
        "logic and output logic (the combinational logic portion) for this "
        "state machine."
    )
    representation = render_transition_table(fsm, input_name="in", output_name="out")
    header = _module_header(artifact.module_text)

    derivation = [
        "Based on the state transition table, we can obtain the next state "
        "from observing the row (previous state) and column (input)."
    ]
    for target in range(fsm.n):
        cells = []
        terms = []
        for s in range(fsm.n):
            for v in range(fsm.fanout):
                if fsm.transitions[s][v] == target:
                    cells.append(f"({fsm.state_names[s]}, in={v})")
                    terms.append(
                        f"state[{fsm.state_names[s]}] & "
                        f"{input_condition(fsm, names, v)}"
                    )
        logic = " || ".join(terms) if terms else "1'b0"
        derivation.append(
            f"Next state is {fsm.state_names[target]} on the following "
            f"(row, column): {' '.join(cells) if cells else '(none)'}. "
            f"This correspond to the following logic: `{logic}`."
        )
    output_part = (
        _moore_output_sentences(fsm, names, one_hot=True)
        if kind is FsmKind.MOORE
        else _mealy_output_sentences_onehot(fsm, names)
    )
    reasoning = "\n".join(
        [
            *derivation,
            "",
            output_part,
            "",
            "Finally, below is the Verilog code for the finite state machine:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.FSM_TABLE,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_fsm(fsm),
        provenance={"source": fsm, "artifact": artifact, "variant": "onehot_comb"},
    )


def _mealy_output_sentences_onehot(fsm: FsmGraph, names: FsmPortNames) -> str:
    pairs = []
    terms = []
    for s in range(fsm.n):
        for v in range(fsm.fanout):
            if fsm.mealy_outputs[s][v] == 1:
                cond = input_condition(fsm, names, v)
                pairs.append(f"({fsm.state_names[s]}, {cond})")
                terms.append(f"{names.state_in}[{fsm.state_names[s]}] & {cond}")
    return (
        f"The output is 1 for states: {', '.join(pairs)}.\n"
        f"Thus the output logic is: "
        f"`assign {names.output_name} = ( {' || '.join(terms)} );`."
    )


def _fsm_table_encoded_comb(
    rng_seed: int, rng: random.Random, config: ForgeConfig
) -> ProblemInstance:
    n = rng.choice([c for c in config.fsm_state_counts if c <= 6] or [4])
    fsm = _relabel(generate_fsm(n, 1, FsmKind.MOORE, rng.getrandbits(48)), rng)
    names = FsmPortNames(
        input_name="x", output_name="z", state_in="y", next_state="Y"
    )
    encoding = encode_states(fsm, EncodingScheme.BINARY)
    next_bit = rng.randrange(encoding.width)
    artifact = emit_fsm_module(
        fsm,
        encoding,
        EmitStyle.FSM_OUT_EDGE,
        reset=None,
        interface=FsmInterface.COMB_ONLY,
        names=names,
        next_bit=next_bit,
    )
    instruction = (
        f"Given the state-assigned table shown below, implement the logic "
        f"functions Y[{next_bit}] and z."
    )
    representation = render_transition_table(
        fsm,
        encoding=encoding,
        input_name="x",
        output_name="z",
        state_signal="y",
        next_signal="Y",
    )
    header = _module_header(artifact.module_text)

    width = encoding.width
    bit_states = [
        f"{encoding.codes[s]} ({fsm.state_names[s]})"
        for s in range(fsm.n)
        if encoding.codes[s][width - 1 - next_bit] == "1"
    ]
    named_names = FsmPortNames(input_name="x", output_name="z", state_in="y")
    reasoning = "\n".join(
        [
            "The state transition is as follows:",
            render_transition_table(fsm, input_name="x", output_name="z"),
            "",
            "The transition logic is then:",
            *_transition_logic_lines(fsm, names),
            "",
            _moore_output_sentences(fsm, named_names, one_hot=False),
            f"Y{next_bit} corresponds to {', '.join(bit_states)}.",
            "",
            "Finally, below is the Verilog code for the finite state machine:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.FSM_TABLE,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_fsm(fsm),
        provenance={"source": fsm, "artifact": artifact, "variant": "encoded_comb"},
    )


def _build_fsm_edge_list(rng_seed: int, config: ForgeConfig) -> ProblemInstance:
    rng = random.Random(rng_seed)
    kind = rng.choice([FsmKind.MOORE, FsmKind.MEALY])
    n = rng.choice(config.fsm_state_counts)
    w = 1  # edge lists follow the one-input reference layout
    fsm = _relabel(generate_fsm(n, w, kind, rng.getrandbits(48)), rng)
    reset = _sample_reset(rng)
    one_hot = bool(rng.randrange(2))
    in_name, out_name = ("x", "out") if kind is FsmKind.MOORE else ("x", "z")
    names = FsmPortNames(input_name=in_name, output_name=out_name)
    encoding = encode_states(
        fsm, EncodingScheme.ONE_HOT if one_hot else EncodingScheme.BINARY
    )
    artifact = emit_fsm_module(
        fsm, encoding, EmitStyle.FSM_OUT_EDGE, reset=reset, names=names
    )
    reset_label = fsm.state_names[fsm.reset_state]

    machine = "Moore" if kind is FsmKind.MOORE else "Mealy"
    encoding_clause = " using one-hot encoding" if one_hot else ""
    if kind is FsmKind.MOORE:
        instruction = (
            f"This is a {machine} state machine with {_NUMBER_WORDS[n]} states, "
            f"one input, and one output. Implement this state machine in "
            f"Verilog{encoding_clause}. " + _reset_sentence(reset, reset_label)
        )
    else:
        timing = "asynchronous" if reset.asynchronous else "synchronous"
        level = "active-low" if reset.active_low else "active-high"
        instruction = (
            f"The following diagram is a {machine} machine. Implement in "
            f"Verilog{encoding_clause}. Resets into state {reset_label} and "
            f"reset is {timing} {level}."
        )
    representation = render_edge_list(fsm, input_name=in_name, output_name=out_name)
    header = _module_header(artifact.module_text)

    if kind is FsmKind.MEALY:
        plain_table = render_transition_table(
            fsm, input_name=in_name, output_name=out_name, mealy_cell_outputs=False
        )
        intro = [
            "From the transition diagram, we have the following transition logic:",
            plain_table,
            "Thus the state transition logic is as follows:",
        ]
        output_part = _mealy_output_sentences(fsm, names)
    else:
        intro = [
            "The finite state machine has one input, and the state transition "
            "logic is as follows:"
        ]
        output_part = _moore_output_sentences(fsm, names, one_hot=False)
    reasoning = "\n".join(
        [
            *intro,
            *_transition_logic_lines(fsm, names),
            "",
            output_part,
            "",
            "Finally, below is the Verilog code for the finite state machine:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.FSM_EDGE_LIST,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_fsm(fsm),
        provenance={"source": fsm, "artifact": artifact, "one_hot": one_hot},
    )


def _build_wave_comb(rng_seed: int, config: ForgeConfig) -> ProblemInstance:
    rng = random.Random(rng_seed)
    n = _weighted_choice(rng, config.n_weights)
    pools = [p for p in _VAR_NAME_POOLS if "q" not in p]  # "q" is the output
    names = rng.choice(pools)[:n]
    spec = sample_function_spec(
        n, rng.getrandbits(48), config.dc_probability, var_names=names
    )
    expr = derive_sop(spec)
    artifact = emit_sop_module(expr, output_name="q")
    _, tb_text = emit_testbench(artifact, spec, vcd_path="dump.vcd")
    result = config.simulate({"solution.v": artifact.module_text, "tb.v": tb_text})
    if not result.passed or result.vcd_text is None:
        raise RuntimeError(f"waveform generation failed:\n{result.stdout}")
    doc = parse_vcd(result.vcd_text)
    trace = sample_trace(doc, [*spec.var_names, "q"], kind="combinational")

    observed = spec.collapse_dont_cares()
    observed_expr = derive_sop(observed)
    instruction = (
        "This is a combinational circuit. Read the simulation waveforms to "
        "determine what the circuit does, then implement it."
    )
    representation = render_waveform_table(trace)
    header = _module_header(artifact.module_text)
    reasoning = "\n".join(
        [
            "Based on the simulation waveform, I can transform in to the "
            "following truth table:",
            render_truth_table(observed),
            "",
            "The minterms (when output is 1) are:",
            *format_minterm_lines(observed_expr),
            "This corresponds to the following minterms logic:",
            f"`{format_sop(observed_expr)}`",
            "",
            "Finally, based on the above logic equation, I can now write the "
            "Verilog code:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.WAVE_COMB,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_function(observed),
        provenance={"source": spec, "artifact": artifact, "trace": trace},
    )


def _build_wave_seq(rng_seed: int, config: ForgeConfig) -> ProblemInstance:
    rng = random.Random(rng_seed)
    kind = rng.choice([FsmKind.MOORE, FsmKind.MEALY])
    n = rng.choice(config.fsm_state_counts)
    w = rng.choice(config.fsm_input_widths)
    fsm = _relabel(generate_fsm(n, w, kind, rng.getrandbits(48)), rng)
    reset = ResetStyle()  # the waveform layout shows a plain synchronous reset
    names = FsmPortNames(input_name="in", output_name="out")
    encoding = encode_states(fsm, EncodingScheme.BINARY)
    artifact = emit_fsm_module(
        fsm, encoding, EmitStyle.FSM_OUT_EDGE, reset=reset, names=names
    )
    _, tb_text = emit_testbench(
        artifact, fsm, vcd_path="dump.vcd", rng_seed=rng.getrandbits(32),
        coverage="wave",
    )
    result = config.simulate({"solution.v": artifact.module_text, "tb.v": tb_text})
    if not result.passed or result.vcd_text is None:
        raise RuntimeError(f"waveform generation failed:\n{result.stdout}")
    doc = parse_vcd(result.vcd_text)
    trace = sample_trace(
        doc, ["clk", reset.signal, "in", "out"], kind="sequential"
    )

    instruction = (
        "This is a sequential circuit. Read the simulation waveforms to "
        "determine what the circuit does, then implement it."
    )
    representation = render_waveform_table(trace)
    header = _module_header(artifact.module_text)
    output_part = (
        _moore_output_sentences(fsm, names, one_hot=False)
        if kind is FsmKind.MOORE
        else _mealy_output_sentences(fsm, names)
    )
    reasoning = "\n".join(
        [
            "From the waveform, we have the following transition logic and "
            "output logic:",
            render_transition_table(fsm, input_name="in", output_name="out"),
            "",
            "Thus the state transition logic is as follows:",
            *_transition_logic_lines(fsm, names),
            "",
            output_part,
            "",
            "Finally, below is the Verilog code for the finite state machine:",
            _fenced(artifact.module_text),
        ]
    )
    return ProblemInstance(
        kind=ProblemKind.WAVE_SEQ,
        instruction=instruction,
        representation=representation,
        module_header=header,
        reasoning=reasoning,
        solution=artifact.module_text,
        seed=rng_seed,
        fingerprint=fingerprint_fsm(fsm),
        provenance={"source": fsm, "artifact": artifact, "trace": trace},
    )


_BUILDERS = {
    ProblemKind.KMAP: _build_kmap,
    ProblemKind.TRUTH_TABLE: _build_truth_table,
    ProblemKind.FSM_TABLE: _build_fsm_table,
    ProblemKind.FSM_EDGE_LIST: _build_fsm_edge_list,
    ProblemKind.WAVE_COMB: _build_wave_comb,
    ProblemKind.WAVE_SEQ: _build_wave_seq,
}


def forge_problem(
    kind: ProblemKind, rng_seed: int, config: ForgeConfig | None = None
) -> ProblemInstance:
    if kind not in _BUILDERS:
        raise ValueError(f"cannot forge problems of kind {kind}")
    return _BUILDERS[kind](rng_seed, config or ForgeConfig())


def _weighted_choice(rng: random.Random, weights: tuple[tuple[int, float], ...]) -> int:
    values = [v for v, _ in weights]
    probs = [p for _, p in weights]
    return rng.choices(values, weights=probs, k=1)[0]


# --- filtering and persistence -------------------------------------------------


@dataclass(frozen=True)
class Rejection:
    instance_id: str
    reason: str  # "DUP" | "CONTAMINATED"
    matched_label: str | None = None


def decontaminate_and_dedup(
    instances, db: FingerprintDb
) -> tuple[list[ProblemInstance], list[Rejection]]:
    """Drop fingerprint hits (benchmark templates and earlier instances);
    emitted fingerprints are added to the db, order is preserved."""
    kept: list[ProblemInstance] = []
    rejected: list[Rejection] = []
    for instance in instances:
        digest = instance.fingerprint
        if digest in db:
            label = db.label(digest)
            reason = "DUP" if label == "generated" else "CONTAMINATED"
            rejected.append(Rejection(instance.instance_id, reason, label))
            continue
        db.add(digest, "generated")
        kept.append(instance)
    return kept, rejected


REWRITE_SYSTEM_TEXT = "You rewrite Verilog practice problem instructions."
REWRITE_USER_TEMPLATE = (
    "Rewrite the following problem instruction in different words. Keep every "
    "technical requirement intact, do not describe the contents of any table, "
    "map, diagram or waveform, and answer with the rewritten instruction "
    "only.\n\nInstruction:\n{instruction}"
)


def rewrite_instructions(
    instances: list[ProblemInstance],
    provider,
    fraction: float = 0.20,
    rng_seed: int = 0,
) -> tuple[list[ProblemInstance], list[str]]:
    """Paraphrase the instruction sentence of a sampled subset.

    The representation block and module header pass through byte-exact.
    Provider failures leave the instance unchanged and are logged.
    """
    from .providers import ProviderError, ProviderRequest

    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    count = int(fraction * len(instances))
    rng = random.Random(rng_seed)
    chosen = set(rng.sample(range(len(instances)), count)) if count else set()
    log: list[str] = []
    out: list[ProblemInstance] = []
    for i, instance in enumerate(instances):
        if i not in chosen:
            out.append(instance)
            continue
        request = ProviderRequest(
            system=REWRITE_SYSTEM_TEXT,
            user=REWRITE_USER_TEMPLATE.format(instruction=instance.instruction),
        )
        try:
            response = provider.complete(request)
            new_instruction = response.text.strip()
            if not new_instruction:
                raise ProviderError("empty rewrite")
        except ProviderError as exc:
            log.append(f"{instance.instance_id}: rewrite failed, kept original ({exc})")
            out.append(instance)
            continue
        out.append(dataclasses.replace(instance, instruction=new_instruction))
        log.append(f"{instance.instance_id}: rewritten")
    return out, log


def write_dataset(records: list[DatasetRecord], path: str) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(dataclasses.asdict(record), sort_keys=True) + "\n")
    return len(records)


def read_dataset(path: str) -> list[DatasetRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            records.append(DatasetRecord(**data))
    return records
