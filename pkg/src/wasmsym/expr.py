"""Width-tagged bit-vector expressions with origin (taint) tags.

Expressions are immutable and hashable. Constructors fold constants, drop
double negations and normalise extract/concat chains over the same value;
no other rewriting happens here, the solver does the rest.
"""

from __future__ import annotations

import hashlib
from enum import Enum
from typing import Iterable, Optional

from . import numeric
from .errors import WidthMismatch


class Origin(str, Enum):
    APPLY_RECEIVER = "ApplyReceiver"
    APPLY_CODE = "ApplyCode"
    APPLY_ACTION = "ApplyAction"
    ACTION_DATA = "ActionData"
    CALL_DATA = "CallData"
    BLOCK_INFO = "BlockInfo"
    HOST_FRESH = "HostFresh"
    STORAGE = "Storage"
    OTHER = "Other"
    # the ``to`` field of a transfer payload, used by the notification check
    TRANSFER_TO = "TransferTo"


_NO_TAGS: frozenset = frozenset()


def _union(*parts) -> frozenset:
    tags = _NO_TAGS
    for p in parts:
        if p.tags:
            tags = tags | p.tags if tags else p.tags
    return tags


class SymExpr:
    __slots__ = ("width", "tags", "_hash")

    def _key(self) -> tuple:
        raise NotImplementedError

    def _init(self, width: int, tags: frozenset) -> None:
        self.width = width
        self.tags = tags
        self._hash = hash((type(self).__name__, width) + self._key())

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is type(self)
            and other._hash == self._hash
            and other.width == self.width
            and other._key() == self._key()
        )

    def __ne__(self, other):
        return not self == other

    @property
    def is_concrete(self) -> bool:
        return False

    def children(self) -> tuple:
        return ()


class Const(SymExpr):
    __slots__ = ("value",)

    def __init__(self, width: int, value: int):
        self.value = value & numeric.mask(width)
        self._init(width, _NO_TAGS)

    def _key(self):
        return (self.value,)

    @property
    def is_concrete(self) -> bool:
        return True

    def __repr__(self):
        return f"Const{self.width}(0x{self.value:x})"


class Var(SymExpr):
    __slots__ = ("name",)

    def __init__(self, width: int, name: str, tags: Iterable[Origin] = (Origin.OTHER,)):
        self.name = name
        self._init(width, frozenset(tags))

    def _key(self):
        return (self.name,)

    def __repr__(self):
        return f"Var{self.width}({self.name})"


class Unary(SymExpr):
    __slots__ = ("op", "child")

    def __init__(self, op: str, child: SymExpr):
        self.op, self.child = op, child
        self._init(child.width, child.tags)

    def _key(self):
        return (self.op, self.child)

    def children(self):
        return (self.child,)

    def __repr__(self):
        return f"{self.op}({self.child!r})"


class Binary(SymExpr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: SymExpr, right: SymExpr):
        self.op, self.left, self.right = op, left, right
        self._init(left.width, _union(left, right))

    def _key(self):
        return (self.op, self.left, self.right)

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"{self.op}({self.left!r}, {self.right!r})"


class Extract(SymExpr):
    __slots__ = ("hi", "lo", "child")

    def __init__(self, hi: int, lo: int, child: SymExpr):
        self.hi, self.lo, self.child = hi, lo, child
        self._init(hi - lo + 1, child.tags)

    def _key(self):
        return (self.hi, self.lo, self.child)

    def children(self):
        return (self.child,)

    def __repr__(self):
        return f"Extract({self.hi}, {self.lo}, {self.child!r})"


class Concat(SymExpr):
    """``left`` supplies the high bits."""

    __slots__ = ("left", "right")

    def __init__(self, left: SymExpr, right: SymExpr):
        self.left, self.right = left, right
        self._init(left.width + right.width, _union(left, right))

    def _key(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"Concat({self.left!r}, {self.right!r})"


class Ite(SymExpr):
    __slots__ = ("cond", "then", "other")

    def __init__(self, cond: "BoolExpr", then: SymExpr, other: SymExpr):
        self.cond, self.then, self.other = cond, then, other
        self._init(then.width, _union(cond, then, other))

    def _key(self):
        return (self.cond, self.then, self.other)

    def children(self):
        return (self.cond, self.then, self.other)

    def __repr__(self):
        return f"Ite({self.cond!r}, {self.then!r}, {self.other!r})"


class ZeroExt(SymExpr):
    __slots__ = ("child",)

    def __init__(self, width: int, child: SymExpr):
        self.child = child
        self._init(width, child.tags)

    def _key(self):
        return (self.child,)

    def children(self):
        return (self.child,)


class SignExt(ZeroExt):
    __slots__ = ()


# ------------------------------------------------------------------ booleans

class BoolExpr:
    __slots__ = ("tags", "_hash")

    def _key(self) -> tuple:
        raise NotImplementedError

    def _init(self, tags):
        self.tags = tags
        self._hash = hash((type(self).__name__,) + self._key())

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is type(self) and other._hash == self._hash and other._key() == self._key()

    def __ne__(self, other):
        return not self == other

    def children(self) -> tuple:
        return ()


class BoolConst(BoolExpr):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = bool(value)
        self._init(_NO_TAGS)

    def _key(self):
        return (self.value,)

    def __repr__(self):
        return "True" if self.value else "False"


TRUE = BoolConst(True)
FALSE = BoolConst(False)

RELATIONS = ("eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u")


class Compare(BoolExpr):
    __slots__ = ("rel", "left", "right")

    def __init__(self, rel: str, left: SymExpr, right: SymExpr):
        self.rel, self.left, self.right = rel, left, right
        self._init(_union(left, right))

    def _key(self):
        return (self.rel, self.left, self.right)

    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"({self.left!r} {self.rel} {self.right!r})"


class Not(BoolExpr):
    __slots__ = ("arg",)

    def __init__(self, arg: BoolExpr):
        self.arg = arg
        self._init(arg.tags)

    def _key(self):
        return (self.arg,)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Not({self.arg!r})"


class And(BoolExpr):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        self.args = args
        self._init(_union(*args))

    def _key(self):
        return self.args

    def children(self):
        return self.args


class Or(And):
    __slots__ = ()


# -------------------------------------------------------------- constructors

def const(width: int, value: int) -> Const:
    return Const(width, value)


def var(width: int, name: str, *origins: Origin) -> Var:
    return Var(width, name, origins or (Origin.OTHER,))


def _same_width(a: SymExpr, b: SymExpr, what: str) -> None:
    if a.width != b.width:
        raise WidthMismatch(f"{what}: widths {a.width} and {b.width} differ")


def unary(op: str, a: SymExpr) -> SymExpr:
    if isinstance(a, Const):
        return Const(a.width, numeric.int_unary(op, a.value, a.width))
    if op in ("not", "neg") and isinstance(a, Unary) and a.op == op:
        return a.child
    return Unary(op, a)


INT_BINARY_OPS = frozenset(
    "add sub mul div_s div_u rem_s rem_u and or xor shl shr_s shr_u rotl rotr".split()
)


def binary(op: str, a: SymExpr, b: SymExpr) -> SymExpr:
    _same_width(a, b, op)
    if op not in INT_BINARY_OPS:
        raise ValueError(f"unknown integer operator {op}")
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.width, numeric.int_binary(op, a.value, b.value, a.width))
    return Binary(op, a, b)


def extract(hi: int, lo: int, a: SymExpr) -> SymExpr:
    if not 0 <= lo <= hi < a.width:
        raise WidthMismatch(f"extract [{hi}:{lo}] out of range for width {a.width}")
    if lo == 0 and hi == a.width - 1:
        return a
    if isinstance(a, Const):
        return Const(hi - lo + 1, a.value >> lo)
    if isinstance(a, Extract):
        return extract(hi + a.lo, lo + a.lo, a.child)
    if isinstance(a, Concat):
        split = a.right.width
        if lo >= split:
            return extract(hi - split, lo - split, a.left)
        if hi < split:
            return extract(hi, lo, a.right)
    if isinstance(a, ZeroExt) and not isinstance(a, SignExt):
        cw = a.child.width
        if hi < cw:
            return extract(hi, lo, a.child)
        if lo >= cw:
            return Const(hi - lo + 1, 0)
    if isinstance(a, SignExt) and hi < a.child.width:
        return extract(hi, lo, a.child)
    return Extract(hi, lo, a)


def concat(a: SymExpr, b: SymExpr) -> SymExpr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.width + b.width, (a.value << b.width) | b.value)
    if (
        isinstance(a, Extract)
        and isinstance(b, Extract)
        and a.lo == b.hi + 1
        and a.child == b.child
    ):
        return extract(a.hi, b.lo, a.child)
    # keep constant runs and extract runs adjacent: ((x . e1) . e2) -> x . (e1 . e2)
    if isinstance(a, Concat):
        inner = concat(a.right, b)
        if not isinstance(inner, Concat):
            return concat(a.left, inner)
    return Concat(a, b)


def zext(width: int, a: SymExpr) -> SymExpr:
    if width == a.width:
        return a
    if isinstance(a, Const):
        return Const(width, a.value)
    return ZeroExt(width, a)


def sext(width: int, a: SymExpr) -> SymExpr:
    if width == a.width:
        return a
    if isinstance(a, Const):
        return Const(width, numeric.to_signed(a.value, a.width))
    return SignExt(width, a)


def ite(cond: BoolExpr, a: SymExpr, b: SymExpr) -> SymExpr:
    _same_width(a, b, "ite")
    if isinstance(cond, BoolConst):
        return a if cond.value else b
    if a == b:
        return a
    if isinstance(cond, Not):
        return Ite(cond.arg, b, a)
    return Ite(cond, a, b)


def compare(rel: str, a: SymExpr, b: SymExpr) -> BoolExpr:
    _same_width(a, b, rel)
    if rel not in RELATIONS:
        raise ValueError(f"unknown relation {rel}")
    if isinstance(a, Const) and isinstance(b, Const):
        return TRUE if numeric.int_compare(rel, a.value, b.value, a.width) else FALSE
    if rel == "ne":
        return not_(Compare("eq", a, b))
    return Compare(rel, a, b)


def not_(b: BoolExpr) -> BoolExpr:
    if isinstance(b, BoolConst):
        return FALSE if b.value else TRUE
    if isinstance(b, Not):
        return b.arg
    return Not(b)


def and_(*parts: BoolExpr) -> BoolExpr:
    flat: list[BoolExpr] = []
    for p in parts:
        if isinstance(p, BoolConst):
            if not p.value:
                return FALSE
            continue
        flat.extend(p.args if type(p) is And else (p,))
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def or_(*parts: BoolExpr) -> BoolExpr:
    flat: list[BoolExpr] = []
    for p in parts:
        if isinstance(p, BoolConst):
            if p.value:
                return TRUE
            continue
        flat.extend(p.args if type(p) is Or else (p,))
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def bool_to_bv(b: BoolExpr, width: int = 32) -> SymExpr:
    if isinstance(b, BoolConst):
        return Const(width, int(b.value))
    return ite(b, Const(width, 1), Const(width, 0))


def truthy(a: SymExpr) -> BoolExpr:
    """The condition ``a != 0``, unwrapping boolean-valued ite nodes."""
    if isinstance(a, Const):
        return TRUE if a.value else FALSE
    if isinstance(a, Ite) and isinstance(a.then, Const) and isinstance(a.other, Const):
        t, o = a.then.value, a.other.value
        if t and not o:
            return a.cond
        if o and not t:
            return not_(a.cond)
    return not_(Compare("eq", a, Const(a.width, 0)))


# ------------------------------------------------------- Wasm-level helpers

_INT_RELS = {"eq", "ne", "lt_s", "lt_u", "gt_s", "gt_u", "le_s", "le_u", "ge_s", "ge_u"}
_FLOAT_RELS = {"eq", "ne", "lt", "gt", "le", "ge"}
_FLOAT_BINARY = {"add", "sub", "mul", "div", "min", "max", "copysign"}


def _digest(*parts) -> str:
    return hashlib.sha1(repr(parts).encode()).hexdigest()[:16]


def uninterpreted(op: str, width: int, *args: SymExpr) -> Var:
    """A fresh value standing for an operation the engine does not model.

    The name is derived from the operation and its operands, so the same
    operation on the same inputs always yields the same variable.
    """
    return Var(width, f"uf_{op.replace('.', '_')}_{_digest(op, *args)}", _union(*args) | {Origin.HOST_FRESH})


def eval_binary(op: str, a: SymExpr, b: SymExpr) -> SymExpr:
    """Apply a Wasm binary numeric instruction (``"i32.add"``, ``"f64.lt"``...)."""
    ty, _, name = op.partition(".")
    width = 32 if ty in ("i32", "f32") else 64
    if a.width != width or b.width != width:
        raise WidthMismatch(f"{op} expects {width}-bit operands, got {a.width} and {b.width}")
    if ty[0] == "i":
        if name in _INT_RELS:
            return bool_to_bv(compare(name, a, b))
        return binary(name, a, b)
    if isinstance(a, Const) and isinstance(b, Const):
        if name in _FLOAT_RELS:
            return Const(32, int(numeric.float_compare(name, a.value, b.value, width)))
        return Const(width, numeric.float_binary(name, a.value, b.value, width))
    if name in _FLOAT_RELS:
        flag = uninterpreted(op, 1, a, b)
        return bool_to_bv(Compare("eq", flag, Const(1, 1)))
    if name == "copysign":
        sign = 1 << (width - 1)
        return binary("or", binary("and", a, Const(width, sign - 1)), binary("and", b, Const(width, sign)))
    if name not in _FLOAT_BINARY:
        raise ValueError(f"unknown operator {op}")
    return uninterpreted(op, width, a, b)


# ------------------------------------------------------------- evaluation

Model = dict


def evaluate(e: SymExpr, model: Model, _memo: Optional[dict] = None) -> int:
    """Concrete value of ``e`` under ``model`` (unassigned variables read 0)."""
    memo = {} if _memo is None else _memo
    return _eval(e, model, memo)


def _eval(e, model, memo):
    key = id(e)
    hit = memo.get(key)
    if hit is not None:
        return hit
    t = type(e)
    if t is Const:
        v = e.value
    elif t is Var:
        v = model.get(e.name, 0) & numeric.mask(e.width)
    elif t is Binary:
        v = numeric.int_binary(e.op, _eval(e.left, model, memo), _eval(e.right, model, memo), e.width)
    elif t is Unary:
        v = numeric.int_unary(e.op, _eval(e.child, model, memo), e.width)
    elif t is Extract:
        v = (_eval(e.child, model, memo) >> e.lo) & numeric.mask(e.width)
    elif t is Concat:
        v = (_eval(e.left, model, memo) << e.right.width) | _eval(e.right, model, memo)
    elif t is Ite:
        v = _eval(e.then, model, memo) if _beval(e.cond, model, memo) else _eval(e.other, model, memo)
    elif t is ZeroExt:
        v = _eval(e.child, model, memo)
    elif t is SignExt:
        v = numeric.to_unsigned(numeric.to_signed(_eval(e.child, model, memo), e.child.width), e.width)
    else:
        raise TypeError(f"cannot evaluate {e!r}")
    memo[key] = v
    return v


def evaluate_bool(b: BoolExpr, model: Model) -> bool:
    return _beval(b, model, {})


def _beval(b, model, memo):
    t = type(b)
    if t is BoolConst:
        return b.value
    if t is Compare:
        return numeric.int_compare(b.rel, _eval(b.left, model, memo), _eval(b.right, model, memo), b.left.width)
    if t is Not:
        return not _beval(b.arg, model, memo)
    if t is And:
        return all(_beval(x, model, memo) for x in b.args)
    if t is Or:
        return any(_beval(x, model, memo) for x in b.args)
    raise TypeError(f"cannot evaluate {b!r}")


def variables(*roots) -> dict[str, Var]:
    """All variables reachable from the given expressions, keyed by name."""
    seen: set[int] = set()
    found: dict[str, Var] = {}
    stack = list(roots)
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if type(node) is Var:
            found[node.name] = node
        else:
            stack.extend(node.children())
    return found


def substitute_model(e: SymExpr, model: Model) -> Const:
    return Const(e.width, evaluate(e, model))


