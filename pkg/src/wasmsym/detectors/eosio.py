"""EOSIO oracles: fake EOS transfer, forged transfer notification, block-info dependency."""

from __future__ import annotations

from typing import Optional

from ..engine import ExploreConfig, PathState
from ..engine.state import (
    BLOCK_INFO_READ,
    CALL,
    FINISHED,
    INDIRECT_CALL,
    NAME_COMPARE,
    SEND,
    TAG_COMPARE,
)
from ..expr import Const, Origin, Var, compare, not_
from ..hosts.eosio import ActionContext
from ..hosts.names import encode_name
from ..module import I64, Module, export_lookup
from ..smt import UNSAT, Solver
from .findings import (
    BLOCK_INFO_DEPENDENCY,
    FAKE_EOS_TRANSFER,
    FORGED_TRANSFER_NOTIFICATION,
    Finding,
    Session,
    first_index,
    non_trapped,
)

TOKEN = encode_name("eosio.token")
TRANSFER = encode_name("transfer")
SELF = encode_name("testacc")

BLOCK_INTRINSICS = {"tapos_block_prefix", "tapos_block_num"}
SEND_INTRINSICS = {"send_inline", "send_deferred"}


def _apply_index(module: Module, finding: Finding) -> Optional[int]:
    idx = export_lookup(module, "apply")
    if idx is None or module.imported_function(idx) is not None:
        finding.notes.append("NoApplyExport: module does not export an apply function")
        return None
    ft = module.func_type(idx)
    if ft.params != (I64, I64, I64):
        finding.notes.append(f"NoApplyExport: apply has signature {ft.params}, expected three i64 parameters")
        return None
    return idx


def apply_inputs(config: ExploreConfig, receiver=None, code=None, action=None, extra_tags=None):
    """Arguments and environment for exploring ``apply``."""
    ctx = ActionContext.symbolic(config.action_data_size, extra_tags)
    if receiver is not None:
        ctx.receiver = receiver
    if code is not None:
        ctx.code = code
    if action is not None:
        ctx.action = action
    return ctx.apply_args(), {"eosio": ctx}


def _confidence(finding: Finding, path: Optional[PathState], session: Session) -> None:
    if path is not None and path.low_confidence:
        finding.confidence = "low"
    elif path is None and session.low_confidence:
        finding.confidence = "low"


# ------------------------------------------------------------ fake EOS


def fake_eos_setup(config: ExploreConfig):
    args, env = apply_inputs(config)
    ctx = env["eosio"]
    conditions = [not_(compare("eq", ctx.code, Const(64, TOKEN)))]
    return args, env, conditions


def detect_fake_eos_transfer(
    module: Module,
    config: Optional[ExploreConfig] = None,
    solver: Optional[Solver] = None,
    session: Optional[Session] = None,
) -> Finding:
    """Is there a feasible path with code != eosio.token that invokes transfer?"""
    finding = Finding(FAKE_EOS_TRANSFER)
    session = session or Session(module, config, solver)
    entry = _apply_index(module, finding)
    if entry is None:
        return finding
    args, env, conditions = fake_eos_setup(session.config)
    action = env["eosio"].action
    paths, _ = session.explore("fake-eos", entry, args, env, conditions)
    not_transfer = not_(compare("eq", action, Const(64, TRANSFER)))

    def is_transfer_compare(ev):
        return ev.detail.get("constant") == TRANSFER and Origin.APPLY_ACTION.value in ev.detail.get("tags", ())

    for p in non_trapped(paths):
        i = first_index(p.trace, NAME_COMPARE, is_transfer_compare)
        if i < 0:
            continue
        j = first_index(p.trace, CALL, start=i + 1)
        k = first_index(p.trace, INDIRECT_CALL, start=i + 1)
        sink = min((x for x in (j, k) if x >= 0), default=-1)
        if sink < 0:
            continue
        # the comparison must have gone the "equal" way on this path
        if session.solver.check(p.conditions + (not_transfer,)).status != UNSAT:
            continue
        finding.verdict = True
        finding.witness = session.witness("eosio-fake-transfer", entry, p, [p.trace[i], p.trace[sink]])
        _confidence(finding, p, session)
        return finding
    _confidence(finding, None, session)
    return finding


# ------------------------------------------------- forged notification


def dispatch_setup(config: ExploreConfig):
    return apply_inputs(
        config,
        receiver=Const(64, SELF),
        code=Const(64, TOKEN),
        action=Const(64, TRANSFER),
    )


def handler_setup(module: Module, pt: int, config: ExploreConfig):
    """Inputs for exploring the transfer handler at ``pt``.

    Parameter 0 stands for the contract itself; parameter 2 and bytes 8..15
    of the action data (the ``to`` field of a transfer payload) stand for
    the destination.
    """
    ft = module.func_type(pt)
    self_var = Var(64, "self", (Origin.APPLY_RECEIVER,))
    args: list = []
    for i, ty in enumerate(ft.params):
        if i == 0 and ty == I64:
            args.append(self_var)
        elif i == 2 and ty == I64:
            args.append(Var(64, "param_to", (Origin.TRANSFER_TO,)))
        else:
            args.append(None)
    ctx = ActionContext.symbolic(config.action_data_size, {1: (Origin.TRANSFER_TO,)})
    ctx.receiver = self_var
    ctx.code = Const(64, TOKEN)
    ctx.action = Const(64, TRANSFER)
    return args, {"eosio": ctx}


def _is_check_site(ev) -> bool:
    left, right = set(ev.detail["left"]), set(ev.detail["right"])
    r, t = Origin.APPLY_RECEIVER.value, Origin.TRANSFER_TO.value
    return (r in left and t in right) or (t in left and r in right)


def detect_forged_notification(
    module: Module,
    config: Optional[ExploreConfig] = None,
    solver: Optional[Solver] = None,
    session: Optional[Session] = None,
) -> Finding:
    """Does the transfer handler ever compare the destination with itself?"""
    finding = Finding(FORGED_TRANSFER_NOTIFICATION)
    session = session or Session(module, config, solver)
    entry = _apply_index(module, finding)
    if entry is None:
        return finding
    args, env = dispatch_setup(session.config)
    paths, _ = session.explore("dispatch", entry, args, env)
    located = None
    for p in paths:
        i = first_index(p.trace, INDIRECT_CALL)
        if i >= 0:
            located = p.trace[i]
            break
    if located is None:
        finding.notes.append("DispatchUnresolved: no indirect call executed for a transfer from eosio.token")
        return finding
    pt = located.detail["target"]
    finding.info["transfer_handler"] = pt
    hargs, henv = handler_setup(module, pt, session.config)
    hpaths, _ = session.explore(("handler", pt), pt, hargs, henv)
    checks = [p for p in hpaths if first_index(p.trace, TAG_COMPARE, _is_check_site) >= 0]
    finding.info["handler_paths"] = len(hpaths)
    finding.info["paths_reaching_check"] = len(checks)
    if checks or not hpaths:
        _confidence(finding, None, session)
        return finding
    finding.verdict = True
    done = [p for p in hpaths if p.status == FINISHED] or hpaths
    p = done[0]
    events = [p.trace[-1]] if p.trace else []
    finding.witness = session.witness("eosio-transfer-handler", pt, p, events)
    finding.notes.append(f"transfer handler is function {pt}; no path compares the destination with the contract")
    _confidence(finding, p, session)
    return finding


# ---------------------------------------------------- block info (EOSIO)


def detect_bid_eosio(
    module: Module,
    config: Optional[ExploreConfig] = None,
    solver: Optional[Solver] = None,
    session: Optional[Session] = None,
) -> Finding:
    """Is there a feasible path from a tapos read to an EOS send?"""
    finding = Finding(BLOCK_INFO_DEPENDENCY)
    env_imports = {imp.name for imp in module.imported_functions if imp.module == "env"}
    if not env_imports & BLOCK_INTRINSICS:
        finding.notes.append("no tapos_block_prefix/tapos_block_num import")
        return finding
    if not env_imports & SEND_INTRINSICS:
        finding.notes.append("no send_inline/send_deferred import")
        return finding
    session = session or Session(module, config, solver)
    entry = _apply_index(module, finding)
    if entry is None:
        return finding
    args, env = apply_inputs(session.config)
    paths, _ = session.explore("apply", entry, args, env)
    for p in non_trapped(paths):
        i = first_index(p.trace, BLOCK_INFO_READ)
        if i < 0:
            continue
        j = first_index(p.trace, SEND, start=i + 1)
        if j < 0:
            continue
        finding.verdict = True
        finding.witness = session.witness("eosio-apply", entry, p, [p.trace[i], p.trace[j]])
        _confidence(finding, p, session)
        return finding
    _confidence(finding, None, session)
    return finding


def setup_inputs(setup: str, module: Module, entry: int, config: ExploreConfig):
    """Rebuild (args, env, conditions) for a witness setup name."""
    if setup == "eosio-fake-transfer":
        return fake_eos_setup(config)
    if setup == "eosio-apply":
        args, env = apply_inputs(config)
        return args, env, []
    if setup == "eosio-transfer-handler":
        args, env = handler_setup(module, entry, config)
        return args, env, []
    raise KeyError(setup)


def detect_all(module: Module, config=None, solver=None, session: Optional[Session] = None) -> list[Finding]:
    session = session or Session(module, config, solver)
    return [
        detect_fake_eos_transfer(module, session=session),
        detect_forged_notification(module, session=session),
        detect_bid_eosio(module, session=session),
    ]
