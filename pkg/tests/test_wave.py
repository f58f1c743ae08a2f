import pytest

from hdlforge.boolfn import CellValue, FunctionSpec, derive_sop, sample_function_spec
from hdlforge.emit import (
    EmitStyle,
    FsmPortNames,
    ResetStyle,
    emit_fsm_module,
    emit_sop_module,
)
from hdlforge.fsm import EncodingScheme, FsmKind, encode_states, generate_fsm
from hdlforge.simrun import simulate_inprocess
from hdlforge.testbench import emit_testbench
from hdlforge.wave import (
    TraceContradictionError,
    VcdFormatError,
    WaveformTrace,
    check_function_recovery,
    parse_vcd,
    recover_function,
    recover_transitions,
    render_waveform_table,
    sample_trace,
)

MINIMAL_VCD = """$timescale 1ns $end
$scope module tb $end
$var wire 1 ! sig $end
$upscope $end
$enddefinitions $end
#0
$dumpvars
0!
$end
#7
1!
"""


class TestParseVcd:
    def test_minimal_document(self):
        doc = parse_vcd(MINIMAL_VCD)
        assert doc.timescale == "1ns"
        assert len(doc.variables) == 1
        assert doc.variables[0].name == "sig"
        assert doc.changes == ((0, "!", "0"), (7, "!", "1"))

    def test_undeclared_id_rejected(self):
        with pytest.raises(VcdFormatError):
            parse_vcd(MINIMAL_VCD + "1?\n")

    def test_time_regression_rejected(self):
        with pytest.raises(VcdFormatError):
            parse_vcd(MINIMAL_VCD + "#3\n0!\n")

    def test_malformed_header_rejected(self):
        with pytest.raises(VcdFormatError):
            parse_vcd("$var wire 1 ! sig $end\n#0\n")
        with pytest.raises(VcdFormatError):
            parse_vcd("$weird $end\n$enddefinitions $end\n")

    def test_x_and_z_preserved(self):
        doc = parse_vcd(MINIMAL_VCD + "#9\nx!\n#11\nz!\n")
        assert doc.changes[-2:] == ((9, "!", "x"), (11, "!", "z"))


class TestSampleTrace:
    def test_step_sampling_and_pre_first_change_x(self):
        doc = parse_vcd(MINIMAL_VCD)
        trace = sample_trace(doc, ["sig"], step_ns=5)
        assert trace.times_ns == (0, 5)
        # last change is at 7ns: samples at 0 (value 0) and 5 (still 0)
        assert trace.samples == (("0",), ("0",))

    def test_unsampled_prefix_is_x(self):
        text = MINIMAL_VCD.replace("#0\n$dumpvars\n0!\n$end\n", "").replace("#7", "#5")
        doc = parse_vcd(text)
        trace = sample_trace(doc, ["sig"], step_ns=5)
        assert trace.samples[0] == ("x",)
        assert trace.samples[1] == ("1",)

    def test_purity(self):
        doc = parse_vcd(MINIMAL_VCD)
        assert sample_trace(doc, ["sig"]) == sample_trace(doc, ["sig"])

    def test_unknown_signal_rejected(self):
        doc = parse_vcd(MINIMAL_VCD)
        with pytest.raises(KeyError):
            sample_trace(doc, ["ghost"])


class TestRenderWaveformTable:
    def test_combinational_header_layout(self):
        trace = WaveformTrace(
            kind="combinational",
            signal_names=("a", "b", "c", "d", "q"),
            times_ns=(0, 5),
            samples=(("0",) * 5, ("1",) * 5),
        )
        lines = render_waveform_table(trace).splitlines()
        assert lines[0].startswith("// time    a         b         c")
        assert lines[1].startswith("// 0ns     0         0")
        assert lines[2].startswith("// 5ns     1")

    def test_sequential_header_layout(self):
        trace = WaveformTrace(
            kind="sequential",
            signal_names=("clk", "reset", "in", "out"),
            times_ns=(0,),
            samples=(("0", "1", "0", "x"),),
        )
        lines = render_waveform_table(trace).splitlines()
        assert lines[0].startswith("// time            clk             reset")
        assert "clk             reset" in lines[0]
        assert lines[1].startswith("// 0ns             0               1")

    def test_row_count_matches_samples(self):
        trace = WaveformTrace(
            kind="combinational",
            signal_names=("a",),
            times_ns=tuple(range(0, 50, 5)),
            samples=tuple(("0",) for _ in range(10)),
        )
        assert len(render_waveform_table(trace).splitlines()) == 11


class TestRecoverFunction:
    def _trace_for(self, spec):
        artifact = emit_sop_module(derive_sop(spec), output_name="q")
        _, tb = emit_testbench(artifact, spec, vcd_path="w.vcd")
        result = simulate_inprocess({"m.v": artifact.module_text, "tb.v": tb})
        assert result.passed
        doc = parse_vcd(result.vcd_text)
        return sample_trace(doc, [*spec.var_names, "q"])

    @pytest.mark.parametrize("seed", range(10))
    def test_exhaustive_recovery_matches_spec(self, seed):
        spec = sample_function_spec(3, seed, dc_probability=0.2)
        trace = self._trace_for(spec)
        observed = recover_function(trace, list(spec.var_names), "q")
        assert len(observed) == 8
        checked, total = check_function_recovery(
            trace, spec, list(spec.var_names), "q"
        )
        assert total == 8
        assert checked == 8 - len(spec.dont_cares())

    def test_partial_trace_is_fine(self):
        trace = WaveformTrace(
            kind="combinational",
            signal_names=("a", "b", "q"),
            times_ns=(0, 5),
            samples=(("0", "0", "1"), ("0", "1", "0")),
        )
        observed = recover_function(trace, ["a", "b"], "q")
        assert observed == {(0, 0): 1, (0, 1): 0}

    def test_contradiction_detected(self):
        trace = WaveformTrace(
            kind="combinational",
            signal_names=("a", "q"),
            times_ns=(0, 5),
            samples=(("0", "1"), ("0", "0")),
        )
        with pytest.raises(TraceContradictionError):
            recover_function(trace, ["a"], "q")

    def test_spec_mismatch_detected(self):
        spec = FunctionSpec(("a", "b"), tuple(CellValue(c) for c in "1000"))
        trace = WaveformTrace(
            kind="combinational",
            signal_names=("a", "b", "q"),
            times_ns=(0,),
            samples=(("0", "0", "0"),),  # spec says this cell is 1
        )
        with pytest.raises(TraceContradictionError):
            check_function_recovery(trace, spec, ["a", "b"], "q")


class TestRecoverTransitions:
    def _trace_for(self, fsm, reset=ResetStyle(), seed=0):
        enc = encode_states(fsm, EncodingScheme.BINARY)
        artifact = emit_fsm_module(
            fsm, enc, EmitStyle.FSM_OUT_EDGE, reset=reset,
            names=FsmPortNames(input_name="in", output_name="out"),
        )
        _, tb = emit_testbench(
            artifact, fsm, vcd_path="w.vcd", rng_seed=seed, coverage="wave"
        )
        result = simulate_inprocess({"m.v": artifact.module_text, "tb.v": tb})
        assert result.passed, result.stdout
        doc = parse_vcd(result.vcd_text)
        return sample_trace(
            doc, ["clk", reset.signal, "in", "out"], kind="sequential"
        )

    @pytest.mark.parametrize("kind", [FsmKind.MOORE, FsmKind.MEALY])
    def test_generated_run_fully_consistent(self, kind):
        for seed in range(5):
            fsm = generate_fsm(6, 1, kind, seed)
            trace = self._trace_for(fsm, seed=seed)
            recovery = recover_transitions(trace, fsm, input_name="in")
            assert recovery.consistent, recovery.problems
            assert recovery.complete

    def test_reset_held_prefix_shows_reset_output(self):
        fsm = generate_fsm(4, 1, FsmKind.MOORE, 3)
        trace = self._trace_for(fsm)
        # First settled window after the reset edge shows the reset state's
        # output; before the first edge the output is x.
        out_col = trace.column("out")
        assert out_col[0] == "x"
        assert out_col[2] == str(fsm.moore_outputs[fsm.reset_state])

    def test_truncated_trace_consistent_but_incomplete(self):
        fsm = generate_fsm(6, 2, FsmKind.MOORE, 1)
        trace = self._trace_for(fsm)
        cut = WaveformTrace(
            kind="sequential",
            signal_names=trace.signal_names,
            times_ns=trace.times_ns[:7],
            samples=trace.samples[:7],
        )
        recovery = recover_transitions(cut, fsm, input_name="in")
        assert recovery.consistent
        assert not recovery.complete

    def test_observation_stream_without_machine(self):
        fsm = generate_fsm(4, 1, FsmKind.MOORE, 5)
        trace = self._trace_for(fsm)
        recovery = recover_transitions(trace, None, input_name="in")
        assert recovery.observations
        assert not recovery.complete
