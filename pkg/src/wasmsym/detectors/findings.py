"""Finding records and the shared exploration plumbing used by all detectors."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from ..engine import Engine, ExploreConfig, PathState
from ..engine.state import EXHAUSTED, FINISHED, TRAPPED
from ..expr import Const, Var, compare, variables
from ..module import Module
from ..smt import SAT, Solver

FAKE_EOS_TRANSFER = "FakeEosTransfer"
FORGED_TRANSFER_NOTIFICATION = "ForgedTransferNotification"
BLOCK_INFO_DEPENDENCY = "BlockInfoDependency"
GREEDY = "Greedy"
DANGEROUS_DELEGATECALL = "DangerousDelegateCall"
ETH_BLOCK_INFO_DEPENDENCY = "EthBlockInfoDependency"

EOSIO_KINDS = (FAKE_EOS_TRANSFER, FORGED_TRANSFER_NOTIFICATION, BLOCK_INFO_DEPENDENCY)
ETHEREUM_KINDS = (GREEDY, DANGEROUS_DELEGATECALL, ETH_BLOCK_INFO_DEPENDENCY)


@dataclass
class Witness:
    """A satisfying model plus the ordered events that make up the finding.

    ``setup`` names how the exploration inputs were built so the witness can
    be replayed; ``widths`` gives the bit width of every model variable.
    """

    setup: str
    entry: int
    model: dict[str, int]
    widths: dict[str, int]
    events: list[tuple[str, int, int]]

    def to_json(self) -> dict:
        return {
            "setup": self.setup,
            "entry": self.entry,
            "model": {k: self.model[k] for k in sorted(self.model)},
            "sites": [{"kind": k, "function": f, "offset": o} for k, f, o in self.events],
        }


@dataclass
class Finding:
    kind: str
    verdict: bool = False
    confidence: str = "high"
    witness: Optional[Witness] = None
    notes: list[str] = field(default_factory=list)
    # non-serialised extras (payability counts and such)
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "verdict": self.verdict,
            "confidence": self.confidence,
            "witness": self.witness.to_json() if self.witness else None,
            "notes": list(self.notes),
            "info": dict(self.info),
        }


def non_trapped(paths: list[PathState]) -> list[PathState]:
    return [p for p in paths if p.status in (FINISHED, EXHAUSTED)]


def first_index(trace, kind: str, pred=None, start: int = 0) -> int:
    for i in range(start, len(trace)):
        ev = trace[i]
        if ev.kind == kind and (pred is None or pred(ev)):
            return i
    return -1


class Session:
    """One module's analysis context: config, solver and timing counters."""

    def __init__(self, module: Module, config: Optional[ExploreConfig] = None, solver: Optional[Solver] = None):
        self.module = module
        self.config = config or ExploreConfig()
        self.solver = solver
        self.explore_time = 0.0
        self.paths = 0
        self.diagnostics: dict[str, int] = {}
        self.low_confidence = False
        self._cache: dict = {}

    def engine(self) -> Engine:
        return Engine(self.module, self.config, self.solver)

    def explore(self, key, entry: int, args=None, env=None, conditions=()) -> list[PathState]:
        """Explore once per ``key``; results are shared between detectors."""
        if key in self._cache:
            return self._cache[key]
        eng = self.engine()
        if self.solver is None:
            self.solver = eng.solver
        start = time.perf_counter()
        try:
            paths = eng.explore(entry, args, env, conditions)
        finally:
            self.explore_time += time.perf_counter() - start
            for k, v in eng.diagnostics.items():
                self.diagnostics[k] = self.diagnostics.get(k, 0) + v
        self.paths += len(paths)
        if eng.truncated or any(p.low_confidence for p in paths):
            self.low_confidence = True
        self._cache[key] = (paths, eng.truncated)
        return self._cache[key]

    def model(self, path: PathState) -> Optional[dict]:
        if path.model is not None:
            return path.model
        v = self.solver.check(path.conditions)
        return v.model if v.status == SAT else None

    def witness(self, setup: str, entry: int, path: PathState, events) -> Witness:
        model = dict(self.model(path) or {})
        widths = {name: v.width for name, v in variables(*path.conditions).items()}
        model = {k: v for k, v in model.items() if k in widths}
        return Witness(setup, entry, model, widths, [(e.kind, e.site[0], e.site[1]) for e in events])


def pin_model(witness: Witness) -> list:
    return [compare("eq", Var(witness.widths[n], n), Const(witness.widths[n], v)) for n, v in witness.model.items()]


def contains_in_order(trace, wanted: list[tuple[str, int, int]]) -> bool:
    it = iter((e.kind, e.site[0], e.site[1]) for e in trace)
    return all(any(x == w for x in it) for w in wanted)
