"""EWasm oracles: greedy contracts, dangerous delegatecall, block-info dependency."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..engine import ExploreConfig
from ..engine.state import BLOCK_INFO_READ, DELEGATE_CALL, FINISHED, HOST_CALL, SEND
from ..expr import Const, Origin, compare, not_
from ..hosts.ethereum import EthContext
from ..module import Module, export_lookup
from ..smt import UNSAT, Solver
from .findings import (
    DANGEROUS_DELEGATECALL,
    ETH_BLOCK_INFO_DEPENDENCY,
    GREEDY,
    Finding,
    Session,
    first_index,
    non_trapped,
)


@dataclass
class PayabilityInfo:
    total: int
    non_payable: int

    @property
    def payable(self) -> int:
        return self.total - self.non_payable


def _main_index(module: Module, finding: Finding) -> Optional[int]:
    idx = export_lookup(module, "main")
    if idx is None or module.imported_function(idx) is not None:
        finding.notes.append("NoMainExport: module does not export a main function")
        return None
    return idx


def main_inputs(config: ExploreConfig):
    return [], {"ethereum": EthContext.symbolic(config.call_data_size)}


def _explore_main(session: Session, entry: int):
    args, env = main_inputs(session.config)
    paths, _ = session.explore("main", entry, args, env)
    return paths, env["ethereum"]


def _low(finding: Finding, path, session: Session) -> None:
    if (path is not None and path.low_confidence) or (path is None and session.low_confidence):
        finding.confidence = "low"


def _reads_call_value(path) -> bool:
    return first_index(path.trace, HOST_CALL, lambda e: e.detail.get("name") == "ethereum.getCallValue") >= 0


def payability(session: Session, paths, ctx: EthContext) -> tuple[PayabilityInfo, list]:
    """Count finished entry branches and the ones guarded against a call value."""
    nonzero = not_(compare("eq", ctx.call_value, Const(128, 0)))
    finished = [p for p in paths if p.status == FINISHED]
    payable = []
    non_payable = 0
    for p in finished:
        if _reads_call_value(p) and session.solver.check(p.conditions + (nonzero,)).status == UNSAT:
            non_payable += 1
        else:
            payable.append(p)
    return PayabilityInfo(len(finished), non_payable), payable


def detect_greedy(
    module: Module,
    config: Optional[ExploreConfig] = None,
    solver: Optional[Solver] = None,
    session: Optional[Session] = None,
) -> Finding:
    """Can the contract receive Ether while having no way to send it?"""
    finding = Finding(GREEDY)
    session = session or Session(module, config, solver)
    entry = _main_index(module, finding)
    if entry is None:
        return finding
    paths, ctx = _explore_main(session, entry)
    info, payable = payability(session, paths, ctx)
    finding.info.update(total_branches=info.total, non_payable=info.non_payable, payable=info.payable)
    if not payable:
        finding.notes.append("no payable path reaches the end of main")
        _low(finding, None, session)
        return finding
    has_call_import = ("ethereum", "call") in module.import_names()
    if has_call_import:
        for p in non_trapped(paths):
            i = first_index(p.trace, SEND)
            if i >= 0:
                finding.notes.append("a feasible path sends Ether")
                finding.info["send_site"] = list(p.trace[i].site)
                _low(finding, None, session)
                return finding
    finding.verdict = True
    p = payable[0]
    events = [e for e in p.trace if e.kind == "Finished"][-1:]
    finding.witness = session.witness("ethereum-main", entry, p, events)
    finding.notes.append(
        "no ethereum.call import" if not has_call_import else "no feasible path reaches ethereum.call"
    )
    _low(finding, p, session)
    return finding


def detect_dangerous_delegatecall(
    module: Module,
    config: Optional[ExploreConfig] = None,
    solver: Optional[Solver] = None,
    session: Optional[Session] = None,
) -> Finding:
    """Does attacker-supplied call data flow into callDelegate?"""
    finding = Finding(DANGEROUS_DELEGATECALL)
    session = session or Session(module, config, solver)
    entry = _main_index(module, finding)
    if entry is None:
        return finding
    if ("ethereum", "callDelegate") not in module.import_names():
        finding.notes.append("no ethereum.callDelegate import")
        return finding
    finding.notes.append(
        "callDelegate's first parameter is gas; the address and data arguments are classified instead"
    )
    paths, _ = _explore_main(session, entry)

    def dangerous(ev):
        return ev.detail["classification"] == "NonConstant" and Origin.CALL_DATA.value in ev.detail["tags"]

    for p in non_trapped(paths):
        i = first_index(p.trace, DELEGATE_CALL, dangerous)
        if i >= 0:
            finding.verdict = True
            finding.witness = session.witness("ethereum-main", entry, p, [p.trace[i]])
            _low(finding, p, session)
            return finding
    _low(finding, None, session)
    return finding


def detect_bid_eth(
    module: Module,
    config: Optional[ExploreConfig] = None,
    solver: Optional[Solver] = None,
    session: Optional[Session] = None,
) -> Finding:
    """Is there a feasible path from a block-info read to an Ether send?"""
    finding = Finding(ETH_BLOCK_INFO_DEPENDENCY)
    session = session or Session(module, config, solver)
    entry = _main_index(module, finding)
    if entry is None:
        return finding
    names = module.import_names()
    if ("ethereum", "call") not in names:
        finding.notes.append("no ethereum.call import")
        return finding
    if not names & {("ethereum", n) for n in ("getBlockNumber", "getBlockTimestamp", "getBlockHash")}:
        finding.notes.append("no block information import")
        return finding
    paths, _ = _explore_main(session, entry)
    for p in non_trapped(paths):
        i = first_index(p.trace, BLOCK_INFO_READ)
        if i < 0:
            continue
        j = first_index(p.trace, SEND, start=i + 1)
        if j < 0:
            continue
        finding.verdict = True
        finding.witness = session.witness("ethereum-main", entry, p, [p.trace[i], p.trace[j]])
        _low(finding, p, session)
        return finding
    _low(finding, None, session)
    return finding


def setup_inputs(setup: str, module: Module, entry: int, config: ExploreConfig):
    if setup == "ethereum-main":
        args, env = main_inputs(config)
        return args, env, []
    raise KeyError(setup)


def detect_all(module: Module, config=None, solver=None, session: Optional[Session] = None) -> list[Finding]:
    session = session or Session(module, config, solver)
    return [
        detect_greedy(module, session=session),
        detect_dangerous_delegatecall(module, session=session),
        detect_bid_eth(module, session=session),
    ]
