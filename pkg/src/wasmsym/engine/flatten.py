"""Lower nested instruction trees to pc-indexed code with resolved jump targets.

Each flat op is a tuple ``(name, imm, a, b)``:

* ``block``: a = result arity, b = index of the matching ``end``
* ``loop``:  a = result arity
* ``if``:    a = result arity, b = (index of ``else`` or None, index of ``end``)
* ``else``:  a = index of the matching ``end``
* everything else: a = b = None
"""

from __future__ import annotations

from ..module import Instruction


def flatten(body: tuple[Instruction, ...]) -> list[tuple]:
    out: list = []
    _emit(body, out)
    out.append(("end", None, None, None))
    return out


def _arity(block_type) -> int:
    return 0 if block_type is None else 1


def _emit(seq, out: list) -> None:
    for ins in seq:
        name = ins.name
        if name == "block":
            at = len(out)
            out.append(None)
            _emit(ins.body, out)
            out.append(("end", None, None, None))
            out[at] = ("block", ins.imm, _arity(ins.imm), len(out) - 1)
        elif name == "loop":
            out.append(("loop", ins.imm, _arity(ins.imm), None))
            _emit(ins.body, out)
            out.append(("end", None, None, None))
        elif name == "if":
            at = len(out)
            out.append(None)
            _emit(ins.body, out)
            else_at = None
            if ins.else_body is not None:
                else_at = len(out)
                out.append(None)
                _emit(ins.else_body, out)
            out.append(("end", None, None, None))
            end = len(out) - 1
            out[at] = ("if", ins.imm, _arity(ins.imm), (else_at, end))
            if else_at is not None:
                out[else_at] = ("else", None, end, None)
        else:
            out.append((name, ins.imm, None, None))
