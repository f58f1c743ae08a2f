"""Boolean function specs: sampling, SOP derivation, truth tables and Karnaugh maps.

A FunctionSpec is a total map from the 2^n input assignments of n named
variables to {0, 1, x}. It is the ground-truth object behind every
combinational problem: the map / table / waveform renderings and the emitted
Verilog are all derived from it, so their mutual consistency never needs a
post-hoc solver.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field, replace

MAX_SAMPLE_ATTEMPTS = 100
DEFAULT_VAR_NAMES = ("a", "b", "c", "d", "e")
DEFAULT_DC_PROBABILITY = 0.15


class CellValue(enum.Enum):
    ZERO = "0"
    ONE = "1"
    DONT_CARE = "x"

    def __str__(self) -> str:
        return self.value


def gray_sequence(m: int) -> list[str]:
    """Reflected Gray codes for m bits, as bit strings.

    Consecutive codes (cyclically, including last->first) differ in exactly
    one bit; the sequence walks a Hamiltonian cycle on the m-cube.
    """
    if not 1 <= m <= 4:
        raise ValueError(f"gray_sequence supports 1..4 bits, got {m}")
    return [format(i ^ (i >> 1), f"0{m}b") for i in range(1 << m)]


@dataclass(frozen=True)
class FunctionSpec:
    """An n-variable Boolean function with per-assignment values in {0,1,x}.

    `cells[i]` is the value at the assignment whose bits, MSB-first in
    `var_names` order, encode the integer i. Generated specs always contain
    at least one ONE and one ZERO cell; the constructor itself also accepts
    constant functions so tests can build degenerate cases.
    """

    var_names: tuple[str, ...]
    cells: tuple[CellValue, ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        n = len(self.var_names)
        if not 2 <= n <= 5:
            raise ValueError(f"variable count must be in 2..5, got {n}")
        if len(set(self.var_names)) != n:
            raise ValueError(f"variable names must be distinct: {self.var_names}")
        if len(self.cells) != 1 << n:
            raise ValueError(
                f"expected {1 << n} cells for {n} variables, got {len(self.cells)}"
            )

    @property
    def n(self) -> int:
        return len(self.var_names)

    def assignment_bits(self, index: int) -> tuple[int, ...]:
        """Bits of assignment `index`, MSB-first in var_names order."""
        return tuple((index >> (self.n - 1 - i)) & 1 for i in range(self.n))

    def cell(self, bits: tuple[int, ...]) -> CellValue:
        index = 0
        for b in bits:
            index = (index << 1) | b
        return self.cells[index]

    def ones(self) -> list[int]:
        return [i for i, v in enumerate(self.cells) if v is CellValue.ONE]

    def zeros(self) -> list[int]:
        return [i for i, v in enumerate(self.cells) if v is CellValue.ZERO]

    def dont_cares(self) -> list[int]:
        return [i for i, v in enumerate(self.cells) if v is CellValue.DONT_CARE]

    def collapse_dont_cares(self) -> "FunctionSpec":
        """The observable function: x cells resolved to 0, as the emitted logic does."""
        cells = tuple(
            CellValue.ZERO if v is CellValue.DONT_CARE else v for v in self.cells
        )
        return replace(self, cells=cells)


def sample_function_spec(
    n: int,
    rng_seed: int,
    dc_probability: float = DEFAULT_DC_PROBABILITY,
    var_names: tuple[str, ...] | None = None,
) -> FunctionSpec:
    """Sample a non-constant FunctionSpec.

    Each cell is drawn independently: x with probability `dc_probability`,
    otherwise 0/1 with equal probability. Constant draws (no ONE or no ZERO
    cell) are rejected and resampled from the same stream, so the same seed
    always yields the same spec.
    """
    if n not in (3, 4):
        raise ValueError(f"generated specs use 3 or 4 variables, got {n}")
    if not 0.0 <= dc_probability < 1.0:
        raise ValueError(f"dc_probability must be in [0, 1), got {dc_probability}")
    names = tuple(var_names) if var_names is not None else DEFAULT_VAR_NAMES[:n]
    if len(names) != n:
        raise ValueError(f"need {n} variable names, got {names}")

    rng = random.Random(rng_seed)
    half = (1.0 - dc_probability) / 2.0
    for _ in range(MAX_SAMPLE_ATTEMPTS):
        cells = []
        for _ in range(1 << n):
            u = rng.random()
            if u < dc_probability:
                cells.append(CellValue.DONT_CARE)
            elif u < dc_probability + half:
                cells.append(CellValue.ZERO)
            else:
                cells.append(CellValue.ONE)
        spec = FunctionSpec(names, tuple(cells), seed=rng_seed)
        if spec.ones() and spec.zeros():
            return spec
    raise RuntimeError(
        f"no non-constant function after {MAX_SAMPLE_ATTEMPTS} attempts "
        f"(n={n}, dc_probability={dc_probability})"
    )


Literal = tuple[int, bool]  # (variable index, True when positive)


@dataclass(frozen=True)
class SopExpr:
    """Sum-of-products: OR over product terms, each an AND of literals.

    An empty term list is the constant-0 function.
    """

    var_names: tuple[str, ...]
    terms: tuple[tuple[Literal, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.var_names)
        for term in self.terms:
            indices = [i for i, _ in term]
            if len(set(indices)) != len(indices):
                raise ValueError(f"term references a variable twice: {term}")
            if any(not 0 <= i < n for i in indices):
                raise ValueError(f"literal index out of range in term: {term}")


def derive_sop(spec: FunctionSpec) -> SopExpr:
    """Full-minterm SOP: one n-literal product term per ONE cell, ascending.

    Don't-care cells contribute no term, i.e. the realized function treats
    them as 0. No minimization is performed, so every term maps one-to-one
    to a table row and stays auditable.
    """
    terms = []
    for index in spec.ones():
        bits = spec.assignment_bits(index)
        terms.append(tuple((i, bit == 1) for i, bit in enumerate(bits)))
    return SopExpr(spec.var_names, tuple(terms))


def eval_sop(expr: SopExpr, assignment: tuple[int, ...]) -> int:
    """Evaluate OR-of-AND-of-literals on a bit vector."""
    if len(assignment) != len(expr.var_names):
        raise ValueError(
            f"assignment length {len(assignment)} != {len(expr.var_names)} variables"
        )
    for term in expr.terms:
        if all(assignment[i] == (1 if positive else 0) for i, positive in term):
            return 1
    return 0


def format_sop(expr: SopExpr) -> str:
    """Render as Verilog boolean logic, e.g. ``(~a & ~b & c) | (a & b & c)``."""
    if not expr.terms:
        return "1'b0"
    parts = []
    for term in expr.terms:
        lits = [
            ("" if positive else "~") + expr.var_names[i] for i, positive in term
        ]
        parts.append("(" + " & ".join(lits) + ")")
    return " | ".join(parts)


def format_minterm_lines(expr: SopExpr) -> list[str]:
    """One derivation line per minterm, e.g. ``(0,0,0) => (~a & ~b & ~c)``."""
    lines = []
    for term in expr.terms:
        bits = ",".join("1" if positive else "0" for _, positive in term)
        lits = [
            ("" if positive else "~") + expr.var_names[i] for i, positive in term
        ]
        lines.append(f"({bits}) => (" + " & ".join(lits) + ")")
    return lines


def render_truth_table(spec: FunctionSpec, output_name: str = "f") -> str:
    """Rows in ascending binary order; don't-cares rendered as ``x``."""
    header = " " + " | ".join([*spec.var_names, output_name])
    lines = [header]
    for index in range(1 << spec.n):
        bits = spec.assignment_bits(index)
        row = [str(b) for b in bits] + [str(spec.cells[index])]
        lines.append(" " + " | ".join(row))
    return "\n".join(lines)


# A mutation is ("transpose",), ("swap_rows", i) or ("swap_cols", i); the
# swaps exchange adjacent lines i and i+1 of the current grid.
Mutation = tuple


@dataclass(frozen=True)
class KMapView:
    """A Karnaugh-map rendering of a FunctionSpec.

    Row/column variables partition the spec's variables; labels are the bit
    strings heading each grid line. With an empty mutation_log the labels
    are Gray sequences; mutations may break Gray adjacency but readback
    through the labels always reproduces the spec.
    """

    spec: FunctionSpec
    row_vars: tuple[str, ...]
    col_vars: tuple[str, ...]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    grid: tuple[tuple[CellValue, ...], ...]
    mutation_log: tuple[Mutation, ...] = field(default_factory=tuple)

    def readback(self) -> dict[tuple[int, ...], CellValue]:
        """Map every assignment back out of the grid via its labels."""
        var_pos = {name: i for i, name in enumerate(self.spec.var_names)}
        out: dict[tuple[int, ...], CellValue] = {}
        for ri, row_label in enumerate(self.row_labels):
            for ci, col_label in enumerate(self.col_labels):
                bits = [0] * self.spec.n
                for name, ch in zip(self.row_vars, row_label):
                    bits[var_pos[name]] = int(ch)
                for name, ch in zip(self.col_vars, col_label):
                    bits[var_pos[name]] = int(ch)
                out[tuple(bits)] = self.grid[ri][ci]
        return out

    def to_text(self) -> str:
        """Comment-block rendering used in problem prompts."""
        row_hdr = "".join(self.row_vars)
        col_hdr = "".join(self.col_vars)
        lines = ["//" + " " * (len(row_hdr) + 3) + col_hdr]
        label_field = max(len(lbl) for lbl in self.col_labels)
        header = "// " + row_hdr
        for lbl in self.col_labels:
            header += "   " + lbl.rjust(label_field)
        lines.append(header)
        for ri, row_label in enumerate(self.row_labels):
            cells = " | ".join(str(v) for v in self.grid[ri])
            lines.append(f"// {row_label} | {cells}")
        return "\n".join(lines)


def _swap(seq: tuple, i: int) -> tuple:
    if not 0 <= i < len(seq) - 1:
        raise ValueError(f"swap index {i} out of range for length {len(seq)}")
    out = list(seq)
    out[i], out[i + 1] = out[i + 1], out[i]
    return tuple(out)


def render_kmap(
    spec: FunctionSpec,
    mutations: list[Mutation] | None = None,
    rng_seed: int | None = None,
) -> KMapView:
    """Build the map view: first ceil(n/2) variables on rows, Gray labels.

    `mutations` are applied in order and recorded. When `mutations` is None
    and a seed is given, 0..3 transforms are sampled from the seed.
    """
    n_rows_vars = (spec.n + 1) // 2
    row_vars = spec.var_names[:n_rows_vars]
    col_vars = spec.var_names[n_rows_vars:]
    row_labels = tuple(gray_sequence(len(row_vars)))
    col_labels = tuple(gray_sequence(len(col_vars)))

    var_pos = {name: i for i, name in enumerate(spec.var_names)}
    grid = []
    for row_label in row_labels:
        row = []
        for col_label in col_labels:
            bits = [0] * spec.n
            for name, ch in zip(row_vars, row_label):
                bits[var_pos[name]] = int(ch)
            for name, ch in zip(col_vars, col_label):
                bits[var_pos[name]] = int(ch)
            row.append(spec.cell(tuple(bits)))
        grid.append(tuple(row))
    view = KMapView(
        spec, row_vars, col_vars, row_labels, col_labels, tuple(grid)
    )

    if mutations is None:
        mutations = []
        if rng_seed is not None:
            rng = random.Random(rng_seed)
            for _ in range(rng.randint(0, 3)):
                kind = rng.choice(["transpose", "swap_rows", "swap_cols"])
                if kind == "transpose":
                    mutations.append(("transpose",))
                elif kind == "swap_rows":
                    hi = len(view.row_labels) if not _count_transposes(mutations) % 2 else len(view.col_labels)
                    mutations.append(("swap_rows", rng.randrange(max(1, hi - 1))))
                else:
                    hi = len(view.col_labels) if not _count_transposes(mutations) % 2 else len(view.row_labels)
                    mutations.append(("swap_cols", rng.randrange(max(1, hi - 1))))

    for mutation in mutations:
        view = _apply_mutation(view, mutation)
    return view


def _count_transposes(mutations: list[Mutation]) -> int:
    return sum(1 for m in mutations if m[0] == "transpose")


def _apply_mutation(view: KMapView, mutation: Mutation) -> KMapView:
    kind = mutation[0]
    log = view.mutation_log + (tuple(mutation),)
    if kind == "transpose":
        grid = tuple(zip(*view.grid))
        return KMapView(
            view.spec,
            view.col_vars,
            view.row_vars,
            view.col_labels,
            view.row_labels,
            tuple(tuple(row) for row in grid),
            log,
        )
    if kind == "swap_rows":
        i = mutation[1]
        return KMapView(
            view.spec,
            view.row_vars,
            view.col_vars,
            _swap(view.row_labels, i),
            view.col_labels,
            _swap(view.grid, i),
            log,
        )
    if kind == "swap_cols":
        i = mutation[1]
        grid = tuple(_swap(row, i) for row in view.grid)
        return KMapView(
            view.spec,
            view.row_vars,
            view.col_vars,
            view.row_labels,
            _swap(view.col_labels, i),
            grid,
            log,
        )
    raise ValueError(f"unknown mutation {mutation!r}")


def canonical_cells(spec: FunctionSpec) -> tuple[str, ...]:
    """Canonical cell vector under variable renaming.

    Minimizes the cell string over all permutations of variable positions,
    so any relabeling of variables (and any KMap mutation, which never
    touches the spec) fingerprints identically.
    """
    n = spec.n
    best: str | None = None
    import itertools

    for perm in itertools.permutations(range(n)):
        chars = []
        for index in range(1 << n):
            bits = spec.assignment_bits(index)
            permuted = tuple(bits[perm[i]] for i in range(n))
            chars.append(str(spec.cell(permuted)))
        candidate = "".join(chars)
        if best is None or candidate < best:
            best = candidate
    assert best is not None
    return (str(n), best)
