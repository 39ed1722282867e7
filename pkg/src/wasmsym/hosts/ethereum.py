"""Models of the EWasm ``ethereum`` environment interface."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..expr import Const, Origin, SymExpr, Var
from ..engine.state import BLOCK_INFO_READ, DELEGATE_CALL, SEND, PathState, cell_tags

ETHEREUM = "ethereum"

# functions of the environment interface; imports outside this list are
# reported as unrecognised
EEI_FUNCTIONS = frozenset(
    """useGas getAddress getExternalBalance getBlockHash call callCode callDelegate callStatic
    storageStore storageLoad getCaller getCallValue callDataCopy getCallDataSize codeCopy getCodeSize
    externalCodeCopy getExternalCodeSize getBlockCoinbase getBlockDifficulty getBlockGasLimit getGasLeft
    getBlockNumber getTxGasPrice getTxOrigin getBlockTimestamp log finish revert getReturnDataSize
    returnDataCopy selfDestruct create""".split()
)

MAX_COPY = 1 << 16


@dataclass
class EthContext:
    call_value: SymExpr
    # call data in 8-byte little-endian chunks
    call_data: list[SymExpr] = field(default_factory=list)
    size: int = 128

    @classmethod
    def symbolic(cls, size: int = 128) -> "EthContext":
        chunks = [Var(64, f"call_data_{k}", (Origin.CALL_DATA,)) for k in range((size + 7) // 8)]
        return cls(Var(128, "call_value", (Origin.CALL_DATA,)), chunks, size)

    def cell(self, i: int):
        chunk = self.call_data[i // 8]
        if isinstance(chunk, Const):
            return (chunk.value >> (8 * (i % 8))) & 0xFF
        return (chunk, i % 8)


def context(engine, st: PathState) -> EthContext:
    ctx = st.env.get("ethereum")
    if ctx is None:
        ctx = st.env["ethereum"] = EthContext.symbolic(engine.config.call_data_size)
    return ctx


def _path_dict(st: PathState, key: str) -> dict:
    d = st.env.get(key)
    if d is None:
        d = st.env[key] = {}
    return d


def _get_call_value(engine, st, args):
    p = engine.address(st, args[0], 0, 16)
    if p is not None:
        st.memory.store(p, context(engine, st).call_value)
    return None


def _get_call_data_size(engine, st, args):
    return Const(32, context(engine, st).size)


def _call_data_copy(engine, st, args):
    ctx = context(engine, st)
    off = engine.concretize(st, args[1])
    n = engine.concretize(st, args[2])
    if off + n > ctx.size:
        engine.trap(st, "call data out of bounds")
        return None
    p = engine.address(st, args[0], 0, n)
    if p is None:
        return None
    for i in range(n):
        st.memory.put(p + i, ctx.cell(off + i))
    return None


def _call(engine, st, args):
    engine.record(st, SEND, tuple(args), mechanism="eth-call")
    return st.fresh(32, "call_status", Origin.HOST_FRESH)


def classify(cells: list) -> dict:
    """Constant when every byte is concrete, else the origin tags seen."""
    if all(type(c) is int for c in cells):
        return {"class": "Constant", "tags": []}
    return {"class": "NonConstant", "tags": sorted(t.value for t in cell_tags(cells))}


def _call_delegate(engine, st, args):
    addr = engine.address(st, args[1], 0, 20)
    if addr is None:
        return None
    n = min(engine.concretize(st, args[3]), MAX_COPY)
    data = engine.address(st, args[2], 0, n)
    if data is None:
        return None
    a = classify(st.memory.read_cells(addr, 20))
    d = classify(st.memory.read_cells(data, n))
    overall = "NonConstant" if "NonConstant" in (a["class"], d["class"]) else "Constant"
    tags = sorted(set(a["tags"]) | set(d["tags"]))
    engine.record(
        st, DELEGATE_CALL, tuple(args),
        classification=overall, tags=tags, address=a, data=d,
        inspected="address and data arguments",
    )
    return st.fresh(32, "call_status", Origin.HOST_FRESH)


def _block_quantity(which: str, width: int):
    def read(engine, st, args):
        block = _path_dict(st, "eth_block")
        v = block.get(which)
        if v is None:
            v = block[which] = st.fresh(width, f"block_{which}", Origin.BLOCK_INFO)
        engine.record(st, BLOCK_INFO_READ, (v,), which=which)
        return v

    return read


def _get_block_hash(engine, st, args):
    block = _path_dict(st, "eth_block")
    key = ("hash", args[0])
    v = block.get(key)
    if v is None:
        v = block[key] = st.fresh(256, "block_hash", Origin.BLOCK_INFO)
    engine.record(st, BLOCK_INFO_READ, (v,), which="hash")
    p = engine.address(st, args[1], 0, 32)
    if p is None:
        return None
    st.memory.store(p, v)
    return Const(32, 0)


def _storage_store(engine, st, args):
    k = engine.address(st, args[0], 0, 32)
    v = None if k is None else engine.address(st, args[1], 0, 32)
    if v is None:
        return None
    storage = _path_dict(st, "eth_storage")
    storage[st.memory.load(k, 32)] = st.memory.load(v, 32)
    return None


def _storage_load(engine, st, args):
    k = engine.address(st, args[0], 0, 32)
    r = None if k is None else engine.address(st, args[1], 0, 32)
    if r is None:
        return None
    storage = _path_dict(st, "eth_storage")
    key = st.memory.load(k, 32)
    value = storage.get(key)
    if value is None:
        value = storage[key] = st.fresh(256, "storage", Origin.STORAGE)
    st.memory.store(r, value)
    return None


def _finish(engine, st, args):
    engine.finish(st)
    return None


def _revert(engine, st, args):
    engine.trap(st, "revert")
    return None


def _no_effect(engine, st, args):
    return None


HANDLERS = {
    "getCallValue": _get_call_value,
    "getCallDataSize": _get_call_data_size,
    "callDataCopy": _call_data_copy,
    "call": _call,
    "callDelegate": _call_delegate,
    "getBlockNumber": _block_quantity("number", 64),
    "getBlockTimestamp": _block_quantity("timestamp", 64),
    "getBlockHash": _get_block_hash,
    "storageStore": _storage_store,
    "storageLoad": _storage_load,
    "finish": _finish,
    "revert": _revert,
    "useGas": _no_effect,
}
