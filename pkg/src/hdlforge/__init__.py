"""hdlforge: correct-by-construction Verilog training data + evaluation toolkit."""

__version__ = "0.1.0"
