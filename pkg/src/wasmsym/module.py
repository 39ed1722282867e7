"""In-memory representation of a decoded Wasm 1.0 module."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

I32, I64, F32, F64 = "i32", "i64", "f32", "f64"
VALTYPES = {0x7F: I32, 0x7E: I64, 0x7D: F32, 0x7C: F64}
VALTYPE_CODES = {v: k for k, v in VALTYPES.items()}
WIDTH = {I32: 32, I64: 64, F32: 32, F64: 64}

FUNC, TABLE, MEMORY, GLOBAL = "func", "table", "memory", "global"
EXTERNAL_KINDS = {0: FUNC, 1: TABLE, 2: MEMORY, 3: GLOBAL}


@dataclass(frozen=True)
class FuncType:
    params: tuple[str, ...]
    results: tuple[str, ...]

    def __post_init__(self):
        if len(self.results) > 1:
            raise ValueError("Wasm 1.0 function types have at most one result")


@dataclass(frozen=True)
class Limits:
    min: int
    max: Optional[int] = None


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.

    ``imm`` holds the opcode's immediates: an int for indices and literals,
    a ``(align, offset)`` pair for memargs, ``(labels, default)`` for
    br_table, the result type (or None) for structured instructions. Float
    literals are kept as raw bit patterns so re-encoding is exact.
    ``body``/``else_body`` hold nested sequences for block, loop and if.
    """

    name: str
    imm: Any = None
    body: Optional[tuple["Instruction", ...]] = None
    else_body: Optional[tuple["Instruction", ...]] = None

    def __repr__(self):
        parts = [self.name]
        if self.imm is not None:
            parts.append(repr(self.imm))
        if self.body is not None:
            parts.append(f"<{len(self.body)} instrs>")
        if self.else_body is not None:
            parts.append(f"else <{len(self.else_body)} instrs>")
        return f"Instruction({' '.join(parts)})"


@dataclass(frozen=True)
class Import:
    module: str
    name: str
    kind: str
    # type index for functions, (elemtype, Limits) for tables, Limits for
    # memories, (valtype, mutable) for globals
    desc: Any


@dataclass(frozen=True)
class Export:
    name: str
    kind: str
    index: int


@dataclass(frozen=True)
class Function:
    type_index: int
    locals: tuple[str, ...]
    body: tuple[Instruction, ...]


@dataclass(frozen=True)
class Table:
    elem_type: str
    limits: Limits


@dataclass(frozen=True)
class Global:
    valtype: str
    mutable: bool
    init: tuple[Instruction, ...]


@dataclass(frozen=True)
class ElementSegment:
    table_index: int
    offset: tuple[Instruction, ...]
    func_indices: tuple[int, ...]


@dataclass(frozen=True)
class DataSegment:
    memory_index: int
    offset: tuple[Instruction, ...]
    data: bytes


@dataclass
class Module:
    types: list[FuncType] = field(default_factory=list)
    imports: list[Import] = field(default_factory=list)
    functions: list[Function] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    memories: list[Limits] = field(default_factory=list)
    globals: list[Global] = field(default_factory=list)
    exports: list[Export] = field(default_factory=list)
    elements: list[ElementSegment] = field(default_factory=list)
    data: list[DataSegment] = field(default_factory=list)
    start: Optional[int] = None
    customs: list[tuple[str, bytes]] = field(default_factory=list)

    @property
    def imported_functions(self) -> list[Import]:
        return [imp for imp in self.imports if imp.kind == FUNC]

    @property
    def num_imported_functions(self) -> int:
        return len(self.imported_functions)

    @property
    def num_functions(self) -> int:
        return self.num_imported_functions + len(self.functions)

    def func_type(self, func_index: int) -> FuncType:
        imported = self.imported_functions
        if func_index < len(imported):
            return self.types[imported[func_index].desc]
        return self.types[self.functions[func_index - len(imported)].type_index]

    def imported_function(self, func_index: int) -> Optional[Import]:
        imported = self.imported_functions
        return imported[func_index] if func_index < len(imported) else None

    def function(self, func_index: int) -> Function:
        return self.functions[func_index - self.num_imported_functions]

    def import_names(self) -> set[tuple[str, str]]:
        return {(imp.module, imp.name) for imp in self.imported_functions}

    def instruction_count(self) -> int:
        def count(seq):
            n = 0
            for ins in seq:
                n += 1
                if ins.body is not None:
                    n += count(ins.body)
                if ins.else_body is not None:
                    n += count(ins.else_body)
            return n

        return sum(count(f.body) for f in self.functions)


def export_lookup(module: Module, name: str) -> Optional[int]:
    """Return the function index exported under ``name``, if any."""
    for exp in module.exports:
        if exp.name == name and exp.kind == FUNC:
            return exp.index
    return None
