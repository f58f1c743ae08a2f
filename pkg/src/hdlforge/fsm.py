"""Random legal finite-state machines and their table / edge-list renderings.

Machines are built on a random tree backbone rooted at the reset state, so
every state is reachable by construction; the remaining input slots are
filled with uniform random targets, giving each state out-degree exactly
2^w. The same graph object backs the prompt rendering, the emitted Verilog
and the reference interpreter, which is what makes the generated problems
correct by construction.
"""

from __future__ import annotations

import enum
import math
import random
from collections import deque
from dataclasses import dataclass

MAX_SAMPLE_ATTEMPTS = 100
STATE_NAME_POOL = tuple("ABCDEFGHIJKLMNOPQRSTUVWXYZ")


class FsmKind(enum.Enum):
    MOORE = "moore"
    MEALY = "mealy"


class EncodingScheme(enum.Enum):
    BINARY = "binary"
    ONE_HOT = "one_hot"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class FsmGraph:
    """A deterministic, total, fully reachable Moore or Mealy machine.

    transitions[s][v] is the successor of state s on input value v; Moore
    outputs live on states, Mealy outputs on (state, input) edges. Output
    width is fixed at one bit.
    """

    kind: FsmKind
    state_names: tuple[str, ...]
    reset_state: int
    input_width: int
    transitions: tuple[tuple[int, ...], ...]
    moore_outputs: tuple[int, ...] | None = None
    mealy_outputs: tuple[tuple[int, ...], ...] | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        n = len(self.state_names)
        if n < 2:
            raise ValueError(f"need at least 2 states, got {n}")
        if len(set(self.state_names)) != n:
            raise ValueError("state names must be distinct")
        if self.input_width not in (1, 2):
            raise ValueError(f"input width must be 1 or 2, got {self.input_width}")
        if not 0 <= self.reset_state < n:
            raise ValueError(f"reset state {self.reset_state} out of range")
        fanout = 1 << self.input_width
        if len(self.transitions) != n or any(
            len(row) != fanout for row in self.transitions
        ):
            raise ValueError(f"transitions must be total: {n} states x {fanout} inputs")
        if any(not 0 <= t < n for row in self.transitions for t in row):
            raise ValueError("transition target out of range")
        if self.kind is FsmKind.MOORE:
            if self.moore_outputs is None or len(self.moore_outputs) != n:
                raise ValueError("Moore machine needs one output bit per state")
        else:
            if self.mealy_outputs is None or len(self.mealy_outputs) != n or any(
                len(row) != fanout for row in self.mealy_outputs
            ):
                raise ValueError("Mealy machine needs one output bit per edge")
        unreachable = set(range(n)) - self.reachable_states()
        if unreachable:
            raise ValueError(f"states unreachable from reset: {sorted(unreachable)}")

    @property
    def n(self) -> int:
        return len(self.state_names)

    @property
    def fanout(self) -> int:
        return 1 << self.input_width

    def output_of(self, state: int, input_value: int) -> int:
        if self.kind is FsmKind.MOORE:
            assert self.moore_outputs is not None
            return self.moore_outputs[state]
        assert self.mealy_outputs is not None
        return self.mealy_outputs[state][input_value]

    def reachable_states(self) -> set[int]:
        seen = {self.reset_state}
        queue = deque([self.reset_state])
        while queue:
            s = queue.popleft()
            for t in self.transitions[s]:
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return seen


def generate_random_tree(
    n: int, rng_seed: int, max_children: int | None = None
) -> tuple[int | None, ...]:
    """Random recursive tree over n nodes; entry i is the parent of node i.

    Node 0 is the root (parent None) and every other node attaches to an
    earlier one, optionally restricted to parents that still have fewer than
    `max_children` children.
    """
    if n < 2:
        raise ValueError(f"a tree needs at least 2 nodes, got {n}")
    rng = random.Random(rng_seed)
    parents: list[int | None] = [None]
    child_count = [0] * n
    for node in range(1, n):
        candidates = range(node)
        if max_children is not None:
            candidates = [p for p in candidates if child_count[p] < max_children]
            if not candidates:
                raise ValueError(
                    f"cannot attach node {node}: all parents at capacity {max_children}"
                )
            parent = rng.choice(candidates)
        else:
            parent = rng.randrange(node)
        parents.append(parent)
        child_count[parent] += 1
    return tuple(parents)


def generate_fsm(n: int, w: int, kind: FsmKind, rng_seed: int) -> FsmGraph:
    """Sample a legal machine: tree backbone + random extra edges + outputs.

    Tree edges are oriented away from the root and each consumes a random
    input slot of its source; every remaining (state, input) slot gets a
    uniform random target (self-loops and parallel edges allowed). Outputs
    are resampled until non-constant.
    """
    if not 2 <= n <= 16:
        raise ValueError(f"state count must be in 2..16, got {n}")
    if w not in (1, 2):
        raise ValueError(f"input width must be 1 or 2, got {w}")
    rng = random.Random(rng_seed)
    fanout = 1 << w
    names = STATE_NAME_POOL[:n]

    for _ in range(MAX_SAMPLE_ATTEMPTS):
        tree_seed = rng.getrandbits(32)
        parents = generate_random_tree(n, tree_seed, max_children=fanout)
        transitions: list[list[int | None]] = [[None] * fanout for _ in range(n)]

        slot_order = []
        for state in range(n):
            slots = list(range(fanout))
            rng.shuffle(slots)
            slot_order.append(slots)
        taken = [0] * n
        for node in range(1, n):
            parent = parents[node]
            assert parent is not None
            slot = slot_order[parent][taken[parent]]
            taken[parent] += 1
            transitions[parent][slot] = node
        for state in range(n):
            for v in range(fanout):
                if transitions[state][v] is None:
                    transitions[state][v] = rng.randrange(n)

        if kind is FsmKind.MOORE:
            outputs = tuple(rng.randint(0, 1) for _ in range(n))
            if len(set(outputs)) < 2:
                continue
            return FsmGraph(
                kind=kind,
                state_names=names,
                reset_state=0,
                input_width=w,
                transitions=tuple(tuple(row) for row in transitions),  # type: ignore[arg-type]
                moore_outputs=outputs,
                seed=rng_seed,
            )
        edge_outputs = tuple(
            tuple(rng.randint(0, 1) for _ in range(fanout)) for _ in range(n)
        )
        flat = [b for row in edge_outputs for b in row]
        if len(set(flat)) < 2:
            continue
        return FsmGraph(
            kind=kind,
            state_names=names,
            reset_state=0,
            input_width=w,
            transitions=tuple(tuple(row) for row in transitions),  # type: ignore[arg-type]
            mealy_outputs=edge_outputs,
            seed=rng_seed,
        )
    raise RuntimeError(f"no non-constant machine after {MAX_SAMPLE_ATTEMPTS} attempts")


@dataclass(frozen=True)
class StateEncoding:
    scheme: EncodingScheme
    codes: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.codes)) != len(self.codes):
            raise ValueError("state codes must be injective")
        widths = {len(c) for c in self.codes}
        if len(widths) != 1:
            raise ValueError(f"state codes must share one width, got {widths}")
        if self.scheme is EncodingScheme.ONE_HOT and any(
            c.count("1") != 1 for c in self.codes
        ):
            raise ValueError("one-hot codes must have exactly one set bit")

    @property
    def width(self) -> int:
        return len(self.codes[0])


def encode_states(
    fsm: FsmGraph,
    scheme: EncodingScheme,
    explicit_codes: tuple[str, ...] | None = None,
) -> StateEncoding:
    if scheme is EncodingScheme.BINARY:
        width = max(1, math.ceil(math.log2(fsm.n)))
        return StateEncoding(scheme, tuple(format(i, f"0{width}b") for i in range(fsm.n)))
    if scheme is EncodingScheme.ONE_HOT:
        return StateEncoding(scheme, tuple(format(1 << i, f"0{fsm.n}b") for i in range(fsm.n)))
    if explicit_codes is None or len(explicit_codes) != fsm.n:
        raise ValueError("explicit scheme needs one code per state")
    return StateEncoding(scheme, tuple(explicit_codes))


def render_transition_table(
    fsm: FsmGraph,
    encoding: StateEncoding | None = None,
    input_name: str = "in",
    output_name: str = "out",
    state_signal: str = "y",
    next_signal: str = "Y",
    mealy_cell_outputs: bool = True,
) -> str:
    """One row per state.

    With no encoding, rows use state names ("// A | C, D | 1"); with one,
    rows use codes and the header names the encoded signals. Mealy outputs
    are attached to each next-state cell ("D (z=0)") unless
    `mealy_cell_outputs` is off (the plain derivation-table layout).
    """
    lines = []
    if encoding is None:
        if fsm.kind is FsmKind.MOORE:
            cols = ", ".join(f"Next state {input_name}={v}" for v in range(fsm.fanout))
            lines.append(f"// state | {cols} | Output")
        elif mealy_cell_outputs:
            cols = ", ".join(f"Next state {input_name}={v}" for v in range(fsm.fanout))
            lines.append(f"// state | {cols} (output {output_name})")
        else:
            cols = ", ".join(f"next state {input_name}={v}" for v in range(fsm.fanout))
            lines.append(f"// state | {cols}")
        for s in range(fsm.n):
            cells = []
            for v in range(fsm.fanout):
                target = fsm.state_names[fsm.transitions[s][v]]
                if fsm.kind is FsmKind.MOORE or not mealy_cell_outputs:
                    cells.append(target)
                else:
                    cells.append(f"{target} ({output_name}={fsm.output_of(s, v)})")
            row = f"// {fsm.state_names[s]} | " + ", ".join(cells)
            if fsm.kind is FsmKind.MOORE:
                row += f" | {fsm.output_of(s, 0)}"
            lines.append(row)
        return "\n".join(lines)

    width = encoding.width
    hi = width - 1
    cols = ", ".join(
        f"Next state {next_signal}[{hi}:0] {input_name}={v}" for v in range(fsm.fanout)
    )
    if fsm.kind is FsmKind.MOORE:
        lines.append(
            f"// Present state {state_signal}[{hi}:0] | {cols} | Output {output_name}"
        )
    else:
        lines.append(
            f"// Present state {state_signal}[{hi}:0] | {cols} (output {output_name})"
        )
    for s in range(fsm.n):
        cells = []
        for v in range(fsm.fanout):
            code = encoding.codes[fsm.transitions[s][v]]
            if fsm.kind is FsmKind.MOORE:
                cells.append(code)
            else:
                cells.append(f"{code} ({output_name}={fsm.output_of(s, v)})")
        row = f"// {encoding.codes[s]} | " + ", ".join(cells)
        if fsm.kind is FsmKind.MOORE:
            row += f" | {fsm.output_of(s, 0)}"
        lines.append(row)
    return "\n".join(lines)


def render_edge_list(
    fsm: FsmGraph, input_name: str = "x", output_name: str = "out"
) -> str:
    """One line per (state, input) transition.

    Moore machines annotate the output on the source state
    ("// D (out=0) --x=1--> D"), Mealy machines on the edge
    ("// A --x=0 (z=0)--> D").
    """
    lines = []
    for s in range(fsm.n):
        for v in range(fsm.fanout):
            src = fsm.state_names[s]
            dst = fsm.state_names[fsm.transitions[s][v]]
            if fsm.kind is FsmKind.MOORE:
                lines.append(
                    f"// {src} ({output_name}={fsm.output_of(s, v)}) "
                    f"--{input_name}={v}--> {dst}"
                )
            else:
                lines.append(
                    f"// {src} --{input_name}={v} "
                    f"({output_name}={fsm.output_of(s, v)})--> {dst}"
                )
    return "\n".join(lines)


def simulate_fsm(
    fsm: FsmGraph,
    input_sequence: list[int],
    reset_pattern: list[bool] | None = None,
) -> list[tuple[int, int | None]]:
    """Reference interpreter: the oracle every emitted artifact is checked against.

    Returns [(state, output)] starting with the reset entry. Step i consumes
    input_sequence[i]; a step with reset asserted forces the reset state.
    Moore outputs are read from the state just entered, Mealy outputs from
    (previous state, input); the initial Mealy entry and reset steps carry
    output None.
    """
    if reset_pattern is not None and len(reset_pattern) != len(input_sequence):
        raise ValueError("reset pattern length must match input sequence")
    for v in input_sequence:
        if not 0 <= v < fsm.fanout:
            raise ValueError(f"input value {v} out of range for width {fsm.input_width}")

    state = fsm.reset_state
    initial_out = fsm.moore_outputs[state] if fsm.kind is FsmKind.MOORE else None
    trace: list[tuple[int, int | None]] = [(state, initial_out)]
    for i, value in enumerate(input_sequence):
        if reset_pattern is not None and reset_pattern[i]:
            out = fsm.moore_outputs[fsm.reset_state] if fsm.kind is FsmKind.MOORE else None
            state = fsm.reset_state
            trace.append((state, out))
            continue
        if fsm.kind is FsmKind.MOORE:
            state = fsm.transitions[state][value]
            trace.append((state, fsm.moore_outputs[state]))
        else:
            out = fsm.mealy_outputs[state][value]
            state = fsm.transitions[state][value]
            trace.append((state, out))
    return trace


def transition_cover_sequence(
    fsm: FsmGraph, rng_seed: int
) -> tuple[list[int], list[bool]]:
    """Inputs (and per-step reset flags) exercising every (state, input) pair.

    Greedy: take an unvisited edge when one leaves the current state,
    otherwise walk a shortest path to the nearest state that still has one.
    When the remaining pending edges are unreachable from the current state
    (the graph need not be strongly connected), a reset step jumps back to
    the reset state, from which everything is reachable.
    """
    rng = random.Random(rng_seed)
    pending = {(s, v) for s in range(fsm.n) for v in range(fsm.fanout)}
    inputs: list[int] = []
    resets: list[bool] = []
    state = fsm.reset_state
    while pending:
        here = [v for v in range(fsm.fanout) if (state, v) in pending]
        if here:
            v = rng.choice(here)
            pending.discard((state, v))
            inputs.append(v)
            resets.append(False)
            state = fsm.transitions[state][v]
            continue
        # BFS to the nearest state with an unvisited out-edge.
        prev: dict[int, tuple[int, int]] = {}
        seen = {state}
        queue = deque([state])
        goal = None
        while queue:
            s = queue.popleft()
            if any((s, v) in pending for v in range(fsm.fanout)):
                goal = s
                break
            for v in range(fsm.fanout):
                t = fsm.transitions[s][v]
                if t not in seen:
                    seen.add(t)
                    prev[t] = (s, v)
                    queue.append(t)
        if goal is None:
            inputs.append(0)
            resets.append(True)
            state = fsm.reset_state
            continue
        path: list[int] = []
        s = goal
        while s != state:
            p, v = prev[s]
            path.append(v)
            s = p
        for v in reversed(path):
            pending.discard((state, v))
            inputs.append(v)
            resets.append(False)
            state = fsm.transitions[state][v]
    return inputs, resets


def canonical_form(fsm: FsmGraph) -> tuple:
    """Canonical serialization under state renaming.

    States are relabeled by BFS discovery order from the reset state
    (inputs visited in ascending order), which is invariant to the original
    naming, then transitions and outputs are serialized in that order.
    """
    order: list[int] = [fsm.reset_state]
    index = {fsm.reset_state: 0}
    queue = deque([fsm.reset_state])
    while queue:
        s = queue.popleft()
        for v in range(fsm.fanout):
            t = fsm.transitions[s][v]
            if t not in index:
                index[t] = len(order)
                order.append(t)
                queue.append(t)
    rows = []
    for s in order:
        targets = tuple(index[fsm.transitions[s][v]] for v in range(fsm.fanout))
        if fsm.kind is FsmKind.MOORE:
            rows.append((targets, fsm.moore_outputs[s]))
        else:
            rows.append((targets, tuple(fsm.mealy_outputs[s])))
    return (fsm.kind.value, fsm.input_width, fsm.n, tuple(rows))
