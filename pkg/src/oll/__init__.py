"""oll: driven-dissipative many-body simulation engine (library + CLI)."""

__version__ = "0.1.0"
