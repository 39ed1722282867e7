"""Models of the EOSIO ``env`` intrinsics the detectors rely on."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..expr import BoolConst, Const, Origin, SymExpr, Var, truthy
from ..engine.state import ASSERT_FORK, BLOCK_INFO_READ, SEND, PathState

ENV = "env"


@dataclass
class ActionContext:
    """Inputs of one ``apply(receiver, code, action)`` invocation."""

    receiver: SymExpr
    code: SymExpr
    action: SymExpr
    # action data in 8-byte little-endian chunks
    data: list[SymExpr] = field(default_factory=list)
    size: int = 128

    @classmethod
    def symbolic(cls, size: int = 128, extra_tags: Optional[dict[int, tuple[Origin, ...]]] = None) -> "ActionContext":
        """Fully symbolic context; ``extra_tags`` adds origins to given chunks."""
        extra_tags = extra_tags or {}
        chunks = []
        for k in range((size + 7) // 8):
            tags = (Origin.ACTION_DATA,) + tuple(extra_tags.get(k, ()))
            chunks.append(Var(64, f"action_data_{k}", tags))
        return cls(
            receiver=Var(64, "receiver", (Origin.APPLY_RECEIVER,)),
            code=Var(64, "code", (Origin.APPLY_CODE,)),
            action=Var(64, "action", (Origin.APPLY_ACTION,)),
            data=chunks,
            size=size,
        )

    def cell(self, i: int):
        chunk = self.data[i // 8]
        if isinstance(chunk, Const):
            return (chunk.value >> (8 * (i % 8))) & 0xFF
        return (chunk, i % 8)

    def apply_args(self) -> list[SymExpr]:
        return [self.receiver, self.code, self.action]


def context(engine, st: PathState) -> ActionContext:
    ctx = st.env.get("eosio")
    if ctx is None:
        ctx = st.env["eosio"] = ActionContext.symbolic(engine.config.action_data_size)
    return ctx


def _read_action_data(engine, st, args):
    ctx = context(engine, st)
    n = min(engine.concretize(st, args[1]), ctx.size)
    p = engine.address(st, args[0], 0, n)
    if p is None:
        return None
    for i in range(n):
        st.memory.put(p + i, ctx.cell(i))
    return Const(32, n)


def _action_data_size(engine, st, args):
    return Const(32, context(engine, st).size)


def _current_receiver(engine, st, args):
    return context(engine, st).receiver


def _no_effect(engine, st, args):
    return None


def _assert(engine, st, args):
    cond = truthy(args[0])
    if isinstance(cond, BoolConst):
        if not cond.value:
            engine.trap(st, "eosio_assert")
        return None
    engine.record(st, ASSERT_FORK)
    engine.assume(st, cond)
    return None


def _sender(mechanism: str):
    def send(engine, st, args):
        engine.record(st, SEND, tuple(args), mechanism=mechanism)
        return None

    return send


def _tapos(which: str):
    def read(engine, st, args):
        v = st.fresh(32, which, Origin.BLOCK_INFO)
        engine.record(st, BLOCK_INFO_READ, (v,), which=which)
        return v

    return read


def _memcpy(engine, st, args):
    n = engine.concretize(st, args[2])
    dst = engine.address(st, args[0], 0, n)
    src = None if dst is None else engine.address(st, args[1], 0, n)
    if src is None:
        return None
    cells = st.memory.read_cells(src, n)
    for i, c in enumerate(cells):
        st.memory.put(dst + i, c)
    return args[0]


def _memset(engine, st, args):
    n = engine.concretize(st, args[2])
    dst = engine.address(st, args[0], 0, n)
    if dst is None:
        return None
    val = args[1]
    cell = val.value & 0xFF if isinstance(val, Const) else (val, 0)
    for i in range(n):
        st.memory.put(dst + i, cell)
    return args[0]


HANDLERS = {
    "read_action_data": _read_action_data,
    "action_data_size": _action_data_size,
    "current_receiver": _current_receiver,
    "require_recipient": _no_effect,
    "require_auth": _no_effect,
    "require_auth2": _no_effect,
    "eosio_assert": _assert,
    "eosio_assert_message": _assert,
    "eosio_assert_code": _assert,
    "send_inline": _sender("inline"),
    "send_deferred": _sender("deferred"),
    "tapos_block_prefix": _tapos("tapos_block_prefix"),
    "tapos_block_num": _tapos("tapos_block_num"),
    "memcpy": _memcpy,
    "memmove": _memcpy,
    "memset": _memset,
}
