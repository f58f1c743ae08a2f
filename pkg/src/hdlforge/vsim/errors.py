class VsimError(Exception):
    """Base class for simulator failures."""


class VerilogSyntaxError(VsimError):
    """Source text outside the supported grammar."""


class VerilogSemanticError(VsimError):
    """Well-formed text with inconsistent structure (bad widths, ports, ...)."""


class SimulationLimitError(VsimError):
    """Runaway simulation: too many events or too much simulated time."""
