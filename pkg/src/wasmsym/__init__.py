"""Symbolic-execution vulnerability analyzer for EOSIO and EWasm smart contracts."""

import sys

from .decoder import decode_module
from .errors import AnalyzerError
from .module import Module

__version__ = "0.1.0"

# instruction trees of real contracts nest deeply
if sys.getrecursionlimit() < 10_000:
    sys.setrecursionlimit(10_000)

__all__ = ["Module", "AnalyzerError", "decode_module", "__version__"]
