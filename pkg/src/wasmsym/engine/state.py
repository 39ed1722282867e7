"""Per-path execution state: frames, copy-on-write memory, trace events."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Optional

from ..expr import BoolExpr, Const, Origin, SymExpr, Var, concat, extract

PAGE_SIZE = 65536
MAX_PAGES = 65536

RUNNING = "running"
FINISHED = "finished"
TRAPPED = "trapped"
PRUNED = "pruned"
EXHAUSTED = "budget-exhausted"
TERMINAL = (FINISHED, TRAPPED, EXHAUSTED)

# trace event kinds
HOST_CALL = "HostCall"
NAME_COMPARE = "NameCompare"
TAG_COMPARE = "TagCompare"
CALL = "Call"
INDIRECT_CALL = "IndirectCall"
SEND = "Send"
BLOCK_INFO_READ = "BlockInfoRead"
DELEGATE_CALL = "DelegateCall"
ASSERT_FORK = "AssertFork"
FINISHED_EVENT = "Finished"
TRAPPED_EVENT = "Trapped"


@dataclass
class ExploreConfig:
    loop_bound: int = 10
    max_paths: int = 2000
    max_instructions: int = 200_000
    solver_timeout: float = 5.0
    seed: int = 0
    max_call_depth: int = 300
    max_indirect_targets: int = 64
    action_data_size: int = 128
    call_data_size: int = 128
    # absolute time.monotonic() deadline for the whole exploration
    deadline: Optional[float] = None

    def __post_init__(self):
        if self.loop_bound < 1:
            raise ValueError("loop bound must be at least 1")


@dataclass(eq=False)
class TraceEvent:
    kind: str
    site: tuple[int, int]
    detail: dict = field(default_factory=dict)
    # expressions involved (not serialised)
    exprs: tuple = ()

    def __repr__(self):
        return f"{self.kind}@{self.site[0]}:{self.site[1]} {self.detail}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "function": self.site[0], "offset": self.site[1], **self.detail}


@dataclass(frozen=True)
class Label:
    kind: str  # block | loop | if | func
    arity: int
    target: int  # pc to continue at when branched to
    height: int  # operand stack height at entry


@dataclass
class Frame:
    func: int
    code: list
    pc: int
    locals: list
    labels: list
    base: int
    arity: int

    def copy(self) -> "Frame":
        return Frame(self.func, self.code, self.pc, list(self.locals), list(self.labels), self.base, self.arity)


_CHUNK_BITS = 12
_CHUNK = 1 << _CHUNK_BITS
_CHUNK_MASK = _CHUNK - 1


class Memory:
    """Linear memory as a sparse list of cells, shared copy-on-write between forks.

    A cell is either an int (a concrete byte) or ``(expr, i)``: byte ``i``
    (little-endian) of a stored expression.
    """

    __slots__ = ("chunks", "owned", "pages", "max_pages")

    def __init__(self, pages: int = 0, max_pages: Optional[int] = None):
        self.chunks: dict[int, list] = {}
        self.owned: set[int] = set()
        self.pages = pages
        self.max_pages = max_pages

    def fork(self) -> "Memory":
        m = Memory(self.pages, self.max_pages)
        m.chunks = dict(self.chunks)
        self.owned = set()
        return m

    @property
    def size(self) -> int:
        return self.pages * PAGE_SIZE

    def in_bounds(self, addr: int, n: int) -> bool:
        return addr >= 0 and addr + n <= self.pages * PAGE_SIZE

    def get(self, addr: int):
        chunk = self.chunks.get(addr >> _CHUNK_BITS)
        return 0 if chunk is None else chunk[addr & _CHUNK_MASK]

    def put(self, addr: int, cell) -> None:
        ci = addr >> _CHUNK_BITS
        if ci not in self.owned:
            old = self.chunks.get(ci)
            self.chunks[ci] = list(old) if old is not None else [0] * _CHUNK
            self.owned.add(ci)
        self.chunks[ci][addr & _CHUNK_MASK] = cell

    def write_bytes(self, addr: int, data: bytes) -> None:
        for i, b in enumerate(data):
            self.put(addr + i, b)

    def read_cells(self, addr: int, n: int) -> list:
        return [self.get(addr + i) for i in range(n)]

    def store(self, addr: int, value: SymExpr) -> None:
        n = value.width // 8
        if isinstance(value, Const):
            v = value.value
            for i in range(n):
                self.put(addr + i, (v >> (8 * i)) & 0xFF)
        else:
            for i in range(n):
                self.put(addr + i, (value, i))

    def load(self, addr: int, n: int) -> SymExpr:
        return cells_to_expr(self.read_cells(addr, n))

    def grow(self, delta: int) -> int:
        old = self.pages
        limit = MAX_PAGES if self.max_pages is None else min(self.max_pages, MAX_PAGES)
        if old + delta > limit:
            return -1
        self.pages = old + delta
        return old


def cells_to_expr(cells: list) -> SymExpr:
    """Reassemble little-endian cells into one expression."""
    n = len(cells)
    if all(type(c) is int for c in cells):
        return Const(8 * n, int.from_bytes(bytes(cells), "little"))
    first = cells[0]
    if type(first) is tuple:
        e, k = first
        if all(type(c) is tuple and c[0] is e and c[1] == k + i for i, c in enumerate(cells)):
            return extract(8 * (k + n) - 1, 8 * k, e)
    acc = None
    for c in reversed(cells):
        byte = Const(8, c) if type(c) is int else extract(8 * c[1] + 7, 8 * c[1], c[0])
        acc = byte if acc is None else concat(acc, byte)
    return acc


def cell_tags(cells: list) -> frozenset:
    tags: frozenset = frozenset()
    for c in cells:
        if type(c) is tuple:
            tags |= c[0].tags
    return tags


class PathState:
    """One execution path."""

    __slots__ = (
        "stack", "frames", "memory", "globals", "table", "conditions", "loop_counts",
        "trace", "prng_counter", "fresh_counter", "status", "env", "steps",
        "low_confidence", "notes", "seed", "model",
    )

    def __init__(self):
        self.stack: list[SymExpr] = []
        self.frames: list[Frame] = []
        self.memory = Memory()
        self.globals: list[SymExpr] = []
        self.table: list[Optional[int]] = []
        self.conditions: tuple[BoolExpr, ...] = ()
        self.loop_counts: dict[tuple[int, int], int] = {}
        self.trace: list[TraceEvent] = []
        self.prng_counter = 0
        self.fresh_counter = 0
        self.status = RUNNING
        self.env: dict[str, Any] = {}
        self.steps = 0
        self.low_confidence = False
        self.notes: list[str] = []
        self.seed = 0
        # a satisfying assignment of ``conditions`` when one is known
        self.model: Optional[dict] = {}

    def fork(self) -> "PathState":
        s = PathState.__new__(PathState)
        s.stack = list(self.stack)
        s.frames = [f.copy() for f in self.frames]
        s.memory = self.memory.fork()
        s.globals = list(self.globals)
        s.table = self.table
        s.conditions = self.conditions
        s.loop_counts = dict(self.loop_counts)
        s.trace = list(self.trace)
        s.prng_counter = self.prng_counter
        s.fresh_counter = self.fresh_counter
        s.status = self.status
        s.env = {k: (v.copy() if isinstance(v, dict) else v) for k, v in self.env.items()}
        s.steps = self.steps
        s.low_confidence = self.low_confidence
        s.notes = list(self.notes)
        s.seed = self.seed
        s.model = self.model
        return s

    def fresh(self, width: int, prefix: str, *tags: Origin) -> Var:
        self.fresh_counter += 1
        return Var(width, f"{prefix}_{self.fresh_counter}", tags or (Origin.HOST_FRESH,))

    def random_bits(self, width: int) -> int:
        """Seeded pseudo-random value; reproducible for a given seed and path."""
        rng = random.Random(f"{self.seed}:{self.prng_counter}")
        self.prng_counter += 1
        return rng.getrandbits(width)

    def add_condition(self, cond: BoolExpr) -> None:
        self.conditions = self.conditions + (cond,)

    @property
    def site(self) -> tuple[int, int]:
        f = self.frames[-1] if self.frames else None
        return (f.func, f.pc) if f else (-1, -1)

    def events(self, kind: str) -> list[TraceEvent]:
        return [e for e in self.trace if e.kind == kind]

    def __repr__(self):
        return f"<PathState {self.status} steps={self.steps} conds={len(self.conditions)} events={len(self.trace)}>"
