import json

import pytest

from hdlforge.simrun import SimulatorConfig

MUX_PROBLEM = "Create a 2-to-1 multiplexer. When sel=0, choose a. When sel=1, choose b."

MUX_HEADER = """module top_module (
        input a,
        input b,
        input sel,
        output out
);"""

MUX_CORRECT = MUX_HEADER + "\n        assign out = sel ? b : a;\nendmodule\n"
MUX_WRONG = (
    MUX_HEADER + "\n        // pair:mux\n        assign out = sel ? a : b;\nendmodule\n"
)

# Second pair: the scripted "fix" leaves the bug in place, so its report
# must fail the self-consistency check.
AND_PROBLEM = "Implement a 2-input AND gate."
AND_HEADER = """module top_module (
        input a,
        input b,
        output out
);"""
AND_CORRECT = AND_HEADER + "\n        assign out = a & b;\nendmodule\n"
AND_WRONG = AND_HEADER + "\n        // pair:and\n        assign out = a | b;\nendmodule\n"


def _comb_bench(inputs: list[str], expected) -> str:
    lines = [
        "`timescale 1ns / 1ns",
        "module tb;",
        "        reg " + ", ".join(inputs) + ";",
        "        wire out;",
        "        integer errors;",
        "",
        "        top_module dut ("
        + ", ".join(f".{n}({n})" for n in inputs + ["out"])
        + ");",
        "",
        "        initial begin",
        "                errors = 0;",
    ]
    n = len(inputs)
    for value in range(1 << n):
        bits = [(value >> (n - 1 - i)) & 1 for i in range(n)]
        assigns = " ".join(f"{name} = {bit};" for name, bit in zip(inputs, bits))
        lines.append(f"                {assigns}")
        lines.append("                #4;")
        want = expected(*bits)
        lines.append(
            f"                if (out !== 1'b{want}) begin errors = errors + 1; "
            f'$display("MISMATCH input={value} out=%b expected={want}", out); end'
        )
        lines.append("                #1;")
    lines.extend(
        [
            '                $display("RESULT mismatches=%0d", errors);',
            '                if (errors == 0) $display("ALL_TESTS_PASSED");',
            "                $finish;",
            "        end",
            "endmodule",
        ]
    )
    return "\n".join(lines) + "\n"


MUX_BENCH = _comb_bench(["a", "b", "sel"], lambda a, b, sel: b if sel else a)
AND_BENCH = _comb_bench(["a", "b"], lambda a, b: a & b)


MUX_REPORT_RESPONSE = """Error Type: multiplexer select inversion
Category: Combinatorial: multiplexers
Description:
The ternary arms are swapped: when sel is 1 the module returns a instead of b.
Steps to repair the erroneous implementation:
1. Locate the continuous assignment with the conditional operator.
2. Swap the two arms so that sel selects b and ~sel selects a.
"""

AND_REPORT_RESPONSE = """Error Type: wrong gate operator
Category: Combinatorial: gates
Description:
The implementation uses OR where AND is required.
1. Replace | with & in the continuous assignment.
"""

MUX_INJECTION_RESPONSE = """#### 1. Problem Description
You are given a Verilog module that selects between two data inputs with a
select line. The arms of the conditional are swapped, so the wrong input is
forwarded. Fix the selection logic.

#### 2. Erroneous Implementation
```
module data_select (
        input d0,
        input d1,
        input pick,
        output y
);
        assign y = pick ? d0 : d1;
endmodule
```

#### 3. Hints for Fixing
1. Check which input should be forwarded when pick is 1.
2. Swap the ternary arms so pick=1 forwards d1.

Output:
```
module data_select (
        input d0,
        input d1,
        input pick,
        output y
);
        assign y = pick ? d1 : d0;
endmodule
```
"""


@pytest.fixture(scope="session")
def builtin_sim() -> SimulatorConfig:
    return SimulatorConfig(backend="builtin")


@pytest.fixture(scope="session")
def repair_workspace(tmp_path_factory):
    """Pairs file, seeds file, benches and a scripted provider on disk."""
    root = tmp_path_factory.mktemp("repair")
    mux_tb = root / "mux_tb.v"
    mux_tb.write_text(MUX_BENCH)
    and_tb = root / "and_tb.v"
    and_tb.write_text(AND_BENCH)

    pairs = root / "pairs.jsonl"
    with pairs.open("w") as fh:
        fh.write(
            json.dumps(
                {
                    "id": "mux-swap",
                    "problem": MUX_PROBLEM,
                    "correct": MUX_CORRECT,
                    "erroneous": MUX_WRONG,
                    "testbench_path": str(mux_tb),
                }
            )
            + "\n"
        )
        fh.write(
            json.dumps(
                {
                    "id": "and-gate",
                    "problem": AND_PROBLEM,
                    "correct": AND_CORRECT,
                    "erroneous": AND_WRONG,
                    "testbench_path": str(and_tb),
                }
            )
            + "\n"
        )

    seeds = root / "seeds.jsonl"
    with seeds.open("w") as fh:
        for i in range(3):
            code = (
                f"module seed_{i} (\n        input s,\n        input t,\n"
                f"        output u\n);\n        assign u = s ^ t;\nendmodule\n"
            )
            fh.write(json.dumps({"id": f"seed{i}", "code": code}) + "\n")

    script = root / "provider.jsonl"
    rules = [
        # Error reports, keyed by the marker comment inside each pair's code.
        {"match": r"pair:mux(?s:.)*Generate a detail error report", "respond": MUX_REPORT_RESPONSE},
        {"match": r"pair:and(?s:.)*Generate a detail error report", "respond": AND_REPORT_RESPONSE},
        # Self-consistency fixes: the mux fix is genuinely correct, the and
        # "fix" keeps the bug so its report must be rejected.
        {
            "match": r"pair:mux(?s:.)*Now fix the erroneous implementation",
            "respond": "```\n" + MUX_CORRECT + "```\n",
        },
        {
            "match": r"pair:and(?s:.)*Now fix the erroneous implementation",
            "respond": "```\n" + AND_WRONG + "```\n",
        },
        {"match": r"Create an error repair practice problem", "respond": MUX_INJECTION_RESPONSE},
    ]
    with script.open("w") as fh:
        for rule in rules:
            fh.write(json.dumps(rule) + "\n")

    return {
        "root": root,
        "pairs": pairs,
        "seeds": seeds,
        "script": script,
        "mux_tb": mux_tb,
        "and_tb": and_tb,
    }
