"""Symbolic execution engine."""

from .machine import Engine, explore, instantiate
from .state import ExploreConfig, Frame, Memory, PathState, TraceEvent

__all__ = ["Engine", "ExploreConfig", "Frame", "Memory", "PathState", "TraceEvent", "explore", "instantiate"]
