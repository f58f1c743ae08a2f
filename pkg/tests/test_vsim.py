import shutil
import subprocess

import pytest

from hdlforge.vsim import (
    Simulator,
    VerilogSemanticError,
    VerilogSyntaxError,
    parse_sources,
)
from hdlforge.vsim.errors import SimulationLimitError


def run_sim(text: str, **kwargs):
    sim = Simulator(parse_sources({"t.v": text}))
    return sim.run(**kwargs)


class TestExpressions:
    def test_display_and_operators(self):
        out = run_sim(
            """
module t;
        reg [3:0] a;
        reg [3:0] b;
        initial begin
                a = 4'b1010; b = 4'b0110;
                $display("and=%b or=%b xor=%b not=%b", a & b, a | b, a ^ b, ~a);
                $display("eq=%b neq=%b lt=%b", a == b, a != b, a < b);
                $display("plus=%0d minus=%0d", a + b, a - b);
                $display("land=%b lor=%b lnot=%b", a && b, a || b, !a);
                $display("tern=%b", a > b ? 4'b1111 : 4'b0000);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == [
            "and=0010 or=1110 xor=1100 not=0101",
            "eq=0 neq=1 lt=0",
            "plus=0 minus=4",
            "land=1 lor=1 lnot=0",
            "tern=1111",
        ]

    def test_x_propagation(self):
        out = run_sim(
            """
module t;
        reg [1:0] a;
        reg b;
        initial begin
                b = 0;
                $display("eq=%b", a == 2'b00);
                $display("and0=%b", a[0] & b);
                $display("or1=%b", a[1] | 1'b1);
                $display("caseeq=%b casene=%b", a === 2'bxx, a !== 2'bxx);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == [
            "eq=x",
            "and0=0",
            "or1=1",
            "caseeq=1 casene=0",
        ]

    def test_precedence_equality_binds_tighter_than_and(self):
        out = run_sim(
            """
module t;
        reg [1:0] s;
        reg x;
        initial begin
                s = 2'b01; x = 1;
                $display("v=%b", s == 2'b01 & x);
                $display("w=%b", s == 2'b10 & x);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["v=1", "w=0"]


class TestScheduling:
    def test_nonblocking_swap(self):
        out = run_sim(
            """
module t;
        reg clk;
        reg [3:0] a;
        reg [3:0] b;
        always #5 clk = ~clk;
        always @(posedge clk) a <= b;
        always @(posedge clk) b <= a;
        initial begin
                clk = 0; a = 4'd3; b = 4'd9;
                @(negedge clk);
                $display("a=%0d b=%0d", a, b);
                @(negedge clk);
                $display("a=%0d b=%0d", a, b);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["a=9 b=3", "a=3 b=9"]

    def test_nba_driven_inputs_read_old_value_at_edge(self):
        # The register must consume the pre-edge value of an input that the
        # bench updates with a nonblocking assignment at the same edge.
        out = run_sim(
            """
module t;
        reg clk;
        reg d;
        reg q;
        always #5 clk = ~clk;
        always @(posedge clk) q <= d;
        initial begin
                clk = 0; d = 1;
                @(posedge clk);
                d <= 0;
                @(negedge clk);
                $display("q=%b d=%b", q, d);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["q=1 d=0"]

    def test_case_with_x_falls_to_default(self):
        out = run_sim(
            """
module t;
        reg [1:0] state;
        reg [1:0] next;
        always @(*) begin
                case(state)
                        2'b00: next = 2'b01;
                        default: next = 'x;
                endcase
        end
        initial begin
                $display("next=%b", next);
                state = 2'b00;
                #1;  // combinational blocks settle as separate events
                $display("next=%b", next);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["next=xx", "next=01"]

    def test_async_reset_fires_at_time_zero(self):
        out = run_sim(
            """
module t;
        reg clk;
        reg areset;
        reg [1:0] state;
        always @(posedge clk, posedge areset) begin
                if (areset) state <= 2'b11;
                else state <= 2'b00;
        end
        initial begin
                clk = 0;
                areset = 1;
                #1;
                $display("state=%b", state);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["state=11"]

    def test_delay_accumulation(self):
        out = run_sim(
            """
module t;
        initial begin
                #3;
                #4 $display("now");
                $finish;
        end
endmodule
"""
        )
        assert out.sim_time == 7

    def test_runaway_clock_hits_time_limit(self):
        with pytest.raises(SimulationLimitError):
            run_sim(
                """
module t;
        reg clk;
        always #5 clk = ~clk;
        initial clk = 0;
endmodule
""",
                max_time=1000,
            )

    def test_combinational_convergence(self):
        out = run_sim(
            """
module t;
        reg a;
        wire b;
        wire c;
        assign b = ~a;
        assign c = b & 1'b1;
        initial begin
                a = 0; #1;
                $display("c=%b", c);
                a = 1; #1;
                $display("c=%b", c);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["c=1", "c=0"]


class TestHierarchy:
    DUT = """
module child (
        input x,
        output y
);
        assign y = ~x;
endmodule
"""

    def test_instance_port_binding(self):
        out = run_sim(
            self.DUT
            + """
module t;
        reg x;
        wire y;
        child dut (.x(x), .y(y));
        initial begin
                x = 0; #1;
                $display("y=%b", y);
                x = 1; #1;
                $display("y=%b", y);
                $finish;
        end
endmodule
"""
        )
        assert out.display_lines == ["y=1", "y=0"]

    def test_port_width_mismatch_rejected(self):
        with pytest.raises(VerilogSemanticError):
            run_sim(
                self.DUT
                + """
module t;
        reg [1:0] x;
        wire y;
        child dut (.x(x), .y(y));
endmodule
"""
            )

    def test_unknown_port_rejected(self):
        with pytest.raises(VerilogSemanticError):
            run_sim(
                self.DUT
                + """
module t;
        reg x;
        wire y;
        child dut (.nope(x), .y(y));
endmodule
"""
            )


class TestVcd:
    def test_vcd_structure(self):
        out = run_sim(
            """
module t;
        reg clk;
        reg [1:0] v;
        always #5 clk = ~clk;
        initial begin
                $dumpfile("w.vcd");
                $dumpvars(0, clk, v);
                clk = 0;
                v = 2'b01;
                #12;
                v = 2'b10;
                #3;
                $finish;
        end
endmodule
"""
        )
        text = out.vcd_text
        assert text is not None
        assert "$timescale 1ns $end" in text
        assert "$var reg 1 ! clk" in text
        assert "$var reg 2 \" v [1:0] $end" in text
        assert "#0\n$dumpvars\n0!\nb01 \"\n$end" in text
        assert "#5\n1!" in text
        assert "#12\nb10 \"" in text
        assert out.vcd_filename == "w.vcd"

    def test_undumped_signals_absent(self):
        out = run_sim(
            """
module t;
        reg a;
        reg b;
        initial begin
                $dumpfile("w.vcd");
                $dumpvars(0, a);
                a = 0; b = 1;
                #1 a = 1;
                $finish;
        end
endmodule
"""
        )
        assert "b" not in [
            line.split()[-2]
            for line in out.vcd_text.splitlines()
            if line.startswith("$var")
        ]


class TestErrors:
    def test_syntax_error(self):
        with pytest.raises(VerilogSyntaxError):
            parse_sources({"t.v": "module t; assign ; endmodule"})

    def test_missing_endmodule(self):
        with pytest.raises(VerilogSyntaxError):
            parse_sources({"t.v": "module t;\nwire a;\n"})

    def test_unknown_identifier(self):
        with pytest.raises(VerilogSemanticError):
            run_sim(
                """
module t;
        initial $display("%b", ghost);
endmodule
"""
            )

    def test_unsupported_system_task(self):
        with pytest.raises(VerilogSemanticError):
            run_sim(
                """
module t;
        initial $monitor("x");
endmodule
"""
            )


@pytest.mark.skipif(
    shutil.which("iverilog") is None or shutil.which("vvp") is None,
    reason="Icarus Verilog not installed",
)
class TestIcarusDifferential:
    def test_outputs_match_icarus(self, tmp_path):
        source = """
module t;
        reg clk;
        reg [2:0] n;
        always #5 clk = ~clk;
        always @(posedge clk) n <= n + 1;
        initial begin
                clk = 0; n = 0;
                @(negedge clk);
                $display("n=%0d", n);
                @(negedge clk);
                $display("n=%0d", n);
                $finish;
        end
endmodule
"""
        ours = run_sim(source)
        src = tmp_path / "t.v"
        src.write_text(source)
        exe = tmp_path / "a.out"
        subprocess.run(
            ["iverilog", "-g2012", "-o", str(exe), str(src)], check=True
        )
        theirs = subprocess.run(
            ["vvp", str(exe)], capture_output=True, text=True, check=True
        )
        assert theirs.stdout.splitlines() == ours.display_lines
