"""Event-driven simulator for the Verilog subset emitted by this package.

Covers: ANSI module headers, parameters, wire/reg/integer declarations,
continuous assigns (including constant bit-select targets), always_comb /
always @(*) blocks, edge-triggered always blocks, `always #d` clock
generators, initial blocks with delays and event waits, blocking and
nonblocking assignment with stratified scheduling, case/if, 4-state values,
module instantiation with named port connections, $display / $dumpfile /
$dumpvars / $finish, and VCD output. Anything outside the subset is
rejected with a diagnostic rather than misinterpreted.
"""

from .errors import VerilogSemanticError, VerilogSyntaxError, VsimError
from .engine import Simulator, SimResult, parse_sources

__all__ = [
    "Simulator",
    "SimResult",
    "parse_sources",
    "VsimError",
    "VerilogSyntaxError",
    "VerilogSemanticError",
]
