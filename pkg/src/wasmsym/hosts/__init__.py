"""Host intrinsic models for EOSIO (``env``) and EWasm (``ethereum``) imports."""

from __future__ import annotations

from ..module import Module
from . import eosio, ethereum
from .eosio import ActionContext
from .ethereum import EthContext
from .names import decode_name, encode_name, signed64

EOSIO = "eosio"
ETHEREUM = "ethereum"


def default_handlers() -> dict:
    handlers = {(eosio.ENV, name): fn for name, fn in eosio.HANDLERS.items()}
    handlers.update({(ethereum.ETHEREUM, name): fn for name, fn in ethereum.HANDLERS.items()})
    return handlers


def unrecognized_imports(module: Module) -> list[str]:
    """``ethereum.*`` function imports that are not part of the interface."""
    return sorted(
        f"{imp.module}.{imp.name}"
        for imp in module.imported_functions
        if imp.module == ethereum.ETHEREUM and imp.name not in ethereum.EEI_FUNCTIONS
    )


def detect_platform(module: Module) -> str:
    """``eosio`` or ``ethereum`` from the import namespaces."""
    from ..errors import PlatformError

    namespaces = {imp.module for imp in module.imported_functions}
    has_env, has_eth = eosio.ENV in namespaces, ethereum.ETHEREUM in namespaces
    if has_env and has_eth:
        raise PlatformError("module imports both env and ethereum functions")
    if has_env:
        return EOSIO
    if has_eth:
        return ETHEREUM
    raise PlatformError("module imports neither env nor ethereum functions")


__all__ = [
    "ActionContext", "EthContext", "EOSIO", "ETHEREUM", "decode_name", "default_handlers",
    "detect_platform", "encode_name", "signed64", "unrecognized_imports",
]
