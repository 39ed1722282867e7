"""Vulnerability oracles for EOSIO and EWasm contracts."""

from __future__ import annotations

from typing import Optional

from ..engine import Engine, ExploreConfig
from ..module import Module
from ..smt import Solver
from . import eosio, ethereum
from .eosio import detect_bid_eosio, detect_fake_eos_transfer, detect_forged_notification
from .ethereum import PayabilityInfo, detect_bid_eth, detect_dangerous_delegatecall, detect_greedy
from .findings import (
    EOSIO_KINDS,
    ETHEREUM_KINDS,
    Finding,
    Session,
    Witness,
    contains_in_order,
    pin_model,
)


def replay(module: Module, witness: Witness, config: Optional[ExploreConfig] = None,
           solver: Optional[Solver] = None) -> bool:
    """Re-run the engine pinned to the witness model; True if a path hits its sites in order."""
    config = config or ExploreConfig()
    if witness.setup.startswith("eosio"):
        args, env, conditions = eosio.setup_inputs(witness.setup, module, witness.entry, config)
    else:
        args, env, conditions = ethereum.setup_inputs(witness.setup, module, witness.entry, config)
    conditions = list(conditions) + pin_model(witness)
    paths = Engine(module, config, solver).explore(witness.entry, args, env, conditions)
    return any(contains_in_order(p.trace, witness.events) for p in paths)


__all__ = [
    "EOSIO_KINDS", "ETHEREUM_KINDS", "Finding", "PayabilityInfo", "Session", "Witness",
    "detect_bid_eosio", "detect_bid_eth", "detect_dangerous_delegatecall", "detect_fake_eos_transfer",
    "detect_forged_notification", "detect_greedy", "replay",
]
