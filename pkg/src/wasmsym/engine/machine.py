"""Symbolic Wasm stack machine with depth-first path exploration."""

from __future__ import annotations

import logging
import time
from collections import Counter
from typing import Callable, Iterable, Optional, Sequence

from .. import numeric
from ..errors import AnalysisTimeout, NonConstInitializer, OffsetOutOfBounds
from ..expr import (
    FALSE,
    TRUE,
    BoolConst,
    BoolExpr,
    Const,
    Origin,
    SymExpr,
    Var,
    and_,
    binary,
    bool_to_bv,
    compare,
    eval_binary,
    evaluate,
    evaluate_bool,
    extract,
    ite,
    not_,
    or_,
    sext,
    truthy,
    unary,
    uninterpreted,
    zext,
)
from ..module import WIDTH, Module
from ..smt import SAT, UNKNOWN, UNSAT, Solver, SolverVerdict, default_solver
from .flatten import flatten
from .state import (
    CALL,
    EXHAUSTED,
    FINISHED,
    FINISHED_EVENT,
    INDIRECT_CALL,
    HOST_CALL,
    NAME_COMPARE,
    PRUNED,
    RUNNING,
    TAG_COMPARE,
    TRAPPED,
    TRAPPED_EVENT,
    ExploreConfig,
    Frame,
    Label,
    Memory,
    PathState,
    TraceEvent,
)

log = logging.getLogger(__name__)

HostHandler = Callable[["Engine", PathState, list], Optional[SymExpr]]

_NAME_TAGS = frozenset({Origin.APPLY_ACTION, Origin.APPLY_CODE})

# name -> (bytes, result width, signed)
_LOADS = {
    "i32.load": (4, 32, False), "i64.load": (8, 64, False),
    "f32.load": (4, 32, False), "f64.load": (8, 64, False),
    "i32.load8_s": (1, 32, True), "i32.load8_u": (1, 32, False),
    "i32.load16_s": (2, 32, True), "i32.load16_u": (2, 32, False),
    "i64.load8_s": (1, 64, True), "i64.load8_u": (1, 64, False),
    "i64.load16_s": (2, 64, True), "i64.load16_u": (2, 64, False),
    "i64.load32_s": (4, 64, True), "i64.load32_u": (4, 64, False),
}
_STORES = {
    "i32.store": 4, "i64.store": 8, "f32.store": 4, "f64.store": 8,
    "i32.store8": 1, "i32.store16": 2, "i64.store8": 1, "i64.store16": 2, "i64.store32": 4,
}
_INT_BINOPS = "add sub mul and or xor shl shr_s shr_u rotl rotr".split()
_INT_RELS = "eq ne lt_s lt_u gt_s gt_u le_s le_u ge_s ge_u".split()
_FLOAT_BINOPS = "add sub mul div min max copysign".split()
_FLOAT_RELS = "eq ne lt gt le ge".split()
_FLOAT_UNOPS = "abs neg ceil floor trunc nearest sqrt".split()


def _width(ty: str) -> int:
    return 32 if ty in ("i32", "f32") else 64


class Engine:
    """Executes one module symbolically.

    The module, flattened code and table are shared by every path; all
    mutable execution state lives in :class:`PathState`.
    """

    def __init__(
        self,
        module: Module,
        config: Optional[ExploreConfig] = None,
        solver: Optional[Solver] = None,
        hosts: Optional[dict[tuple[str, str], HostHandler]] = None,
    ):
        self.module = module
        self.config = config or ExploreConfig()
        self._solver = solver
        if hosts is None:
            from ..hosts import default_handlers

            hosts = default_handlers()
        self.hosts = hosts
        self.diagnostics: Counter = Counter()
        self.truncated = False
        self._code: dict[int, list] = {}
        self._dispatch = self._build_dispatch()
        self._template: Optional[PathState] = None

    @property
    def solver(self) -> Solver:
        if self._solver is None:
            self._solver = default_solver()
        return self._solver

    # ------------------------------------------------------------ setup

    def code(self, func_index: int) -> list:
        code = self._code.get(func_index)
        if code is None:
            code = self._code[func_index] = flatten(self.module.function(func_index).body)
        return code

    def _const_expr(self, seq, globals_: list, what: str) -> SymExpr:
        if len(seq) != 1:
            raise NonConstInitializer(f"{what}: initializer must be a single constant instruction")
        ins = seq[0]
        if ins.name in ("i32.const", "i64.const", "f32.const", "f64.const"):
            return Const(_width(ins.name[:3]), ins.imm)
        if ins.name == "global.get" and ins.imm < len(globals_):
            return globals_[ins.imm]
        raise NonConstInitializer(f"{what}: {ins.name} is not a constant instruction")

    def instantiate(self) -> PathState:
        """Fresh state with memory, globals and table initialised."""
        if self._template is None:
            self._template = self._instantiate()
        st = self._template.fork()
        st.seed = self.config.seed
        return st

    def _instantiate(self) -> PathState:
        m = self.module
        st = PathState()
        st.seed = self.config.seed
        globals_: list[SymExpr] = []
        mem_limits = table_limits = None
        for imp in m.imports:
            if imp.kind == "global":
                vt, _ = imp.desc
                globals_.append(Var(WIDTH[vt], f"import_{imp.module}_{imp.name}", (Origin.OTHER,)))
            elif imp.kind == "memory":
                mem_limits = imp.desc
            elif imp.kind == "table":
                table_limits = imp.desc[1]
        for i, g in enumerate(m.globals):
            value = self._const_expr(g.init, globals_, f"global {i}")
            if value.width != WIDTH[g.valtype]:
                raise NonConstInitializer(f"global {i}: initializer type mismatch")
            globals_.append(value)
        st.globals = globals_
        if m.memories:
            mem_limits = m.memories[0]
        if mem_limits is not None:
            st.memory = Memory(mem_limits.min, mem_limits.max)
        if m.tables:
            table_limits = m.tables[0].limits
        table: list[Optional[int]] = [None] * (table_limits.min if table_limits else 0)
        for seg in m.elements:
            off = self._const_expr(seg.offset, globals_, "element offset")
            if not isinstance(off, Const):
                raise NonConstInitializer("element offset is not concrete")
            start = off.value
            if start + len(seg.func_indices) > len(table):
                raise OffsetOutOfBounds(
                    f"element segment at {start} (+{len(seg.func_indices)}) exceeds table size {len(table)}"
                )
            table[start:start + len(seg.func_indices)] = seg.func_indices
        st.table = table
        for seg in m.data:
            off = self._const_expr(seg.offset, globals_, "data offset")
            if not isinstance(off, Const):
                raise NonConstInitializer("data offset is not concrete")
            if off.value + len(seg.data) > st.memory.size:
                raise OffsetOutOfBounds(
                    f"data segment at {off.value} (+{len(seg.data)}) exceeds memory size {st.memory.size}"
                )
            st.memory.write_bytes(off.value, seg.data)
        st.memory.owned = set()
        st.model = {}
        return st

    def initial_state(
        self,
        entry: int,
        args: Optional[Sequence] = None,
        env: Optional[dict] = None,
        conditions: Iterable[BoolExpr] = (),
    ) -> PathState:
        """State poised at the first instruction of ``entry``.

        ``args`` holds one value per parameter (a SymExpr, an int, or None
        for a fresh symbolic value); omitted means all symbolic.
        """
        st = self.instantiate()
        ft = self.module.func_type(entry)
        values = []
        for i, ty in enumerate(ft.params):
            a = args[i] if args is not None and i < len(args) else None
            if a is None:
                a = Var(WIDTH[ty], f"arg{i}", (Origin.OTHER,))
            elif isinstance(a, int):
                a = Const(WIDTH[ty], a)
            values.append(a)
        if env:
            st.env.update(env)
        for c in conditions:
            st.add_condition(c)
        if st.conditions:
            st.model = None
        if self.module.imported_function(entry) is not None:
            raise ValueError("entry must be a function defined in the module")
        self._enter(st, entry, values)
        return st

    # -------------------------------------------------------- exploration

    def explore(
        self,
        entry: int,
        args: Optional[Sequence] = None,
        env: Optional[dict] = None,
        conditions: Iterable[BoolExpr] = (),
    ) -> list[PathState]:
        """Depth-first exploration from ``entry``; returns terminated paths."""
        return self.run(self.initial_state(entry, args, env, conditions))

    def run(self, start: PathState) -> list[PathState]:
        cfg = self.config
        work = [start]
        done: list[PathState] = []
        while work:
            if len(done) >= cfg.max_paths:
                self.truncated = True
                self.diagnostics["path budget reached"] += 1
                break
            if cfg.deadline is not None and time.monotonic() > cfg.deadline:
                raise AnalysisTimeout("analysis deadline exceeded")
            st = work.pop()
            succ = self._run_path(st)
            pending = []
            for s in succ:
                if s.status == RUNNING:
                    pending.append(s)
                elif s.status == PRUNED:
                    self.diagnostics["pruned paths"] += 1
                else:
                    done.append(s)
            work.extend(reversed(pending))
        return done[: cfg.max_paths]

    def _run_path(self, st: PathState) -> list[PathState]:
        """Run ``st`` until it forks or terminates."""
        limit = self.config.max_instructions
        deadline = self.config.deadline
        dispatch = self._dispatch
        while st.status == RUNNING:
            if st.steps >= limit:
                self.diagnostics["instruction budget reached"] += 1
                self.exhaust(st, "instruction budget")
                break
            if deadline is not None and (st.steps & 0xFFF) == 0 and time.monotonic() > deadline:
                raise AnalysisTimeout("analysis deadline exceeded")
            fr = st.frames[-1]
            op = fr.code[fr.pc]
            fr.pc += 1
            st.steps += 1
            handler = dispatch.get(op[0])
            if handler is None:
                self.diagnostics[f"unsupported instruction {op[0]}"] += 1
                self.exhaust(st, f"unsupported instruction {op[0]}")
                break
            result = handler(st, fr, op)
            if result is not None:
                if len(result) == 1 and result[0] is st:
                    continue
                return result
        return [st]

    def step(self, st: PathState) -> list[PathState]:
        """Execute exactly one instruction of a running state."""
        if st.status != RUNNING:
            raise ValueError("step() needs a running state")
        fr = st.frames[-1]
        op = fr.code[fr.pc]
        fr.pc += 1
        st.steps += 1
        handler = self._dispatch.get(op[0])
        if handler is None:
            self.diagnostics[f"unsupported instruction {op[0]}"] += 1
            self.exhaust(st, f"unsupported instruction {op[0]}")
            return [st]
        result = handler(st, fr, op)
        return [st] if result is None else result

    # ----------------------------------------------------- status helpers

    def record(self, st: PathState, kind: str, exprs: tuple = (), **detail) -> TraceEvent:
        ev = TraceEvent(kind, self.site(st), detail, exprs)
        st.trace.append(ev)
        return ev

    @staticmethod
    def site(st: PathState) -> tuple[int, int]:
        if not st.frames:
            return (-1, -1)
        fr = st.frames[-1]
        return (fr.func, fr.pc - 1)

    def trap(self, st: PathState, reason: str) -> None:
        self.record(st, TRAPPED_EVENT, reason=reason)
        st.status = TRAPPED

    def finish(self, st: PathState) -> None:
        self.record(st, FINISHED_EVENT)
        st.status = FINISHED

    def exhaust(self, st: PathState, reason: str) -> None:
        st.notes.append(reason)
        st.status = EXHAUSTED

    # ------------------------------------------------------ solver access

    def check(self, st: PathState, extra: Sequence[BoolExpr] = ()) -> SolverVerdict:
        return self.solver.check(st.conditions + tuple(extra))

    def _model_of(self, st: PathState) -> Optional[dict]:
        if st.model is None:
            v = self.check(st)
            if v.status == SAT:
                st.model = v.model
            elif v.status == UNKNOWN:
                st.low_confidence = True
        return st.model

    def concretize(self, st: PathState, e: SymExpr) -> int:
        """Pin ``e`` to one feasible value and record the equality."""
        if isinstance(e, Const):
            return e.value
        model = self._model_of(st)
        value = evaluate(e, model or {})
        st.add_condition(compare("eq", e, Const(e.width, value)))
        if model is None:
            st.low_confidence = True
        self.diagnostics["concretizations"] += 1
        return value

    def assume(self, st: PathState, cond: BoolExpr) -> bool:
        """Append ``cond``; prune the path if that makes it infeasible."""
        if isinstance(cond, BoolConst):
            if not cond.value:
                st.status = PRUNED
            return cond.value
        if st.model is not None and evaluate_bool(cond, st.model):
            st.add_condition(cond)
            return True
        v = self.check(st, (cond,))
        if v.status == UNSAT:
            st.status = PRUNED
            return False
        st.add_condition(cond)
        st.model = v.model
        if v.status == UNKNOWN:
            st.low_confidence = True
        return True

    def split(self, st: PathState, cond: BoolExpr) -> tuple[Optional[PathState], Optional[PathState]]:
        """States under ``cond`` and under its negation; infeasible sides are None.

        When both sides are feasible each child gets exactly one new
        conjunct; when only one is, the state is reused unchanged.
        """
        if isinstance(cond, BoolConst):
            return (st, None) if cond.value else (None, st)
        neg = not_(cond)
        model = st.model
        if model is not None:
            holds = evaluate_bool(cond, model)
            other = neg if holds else cond
            v = self.check(st, (other,))
            if v.status == UNSAT:
                return (st, None) if holds else (None, st)
            child = st.fork()
            child.add_condition(other)
            child.model = v.model
            if v.status == UNKNOWN:
                child.low_confidence = True
            st.add_condition(cond if holds else neg)
            return (st, child) if holds else (child, st)
        vt = self.check(st, (cond,))
        if vt.status == UNSAT:
            return None, st
        vf = self.check(st, (neg,))
        if vf.status == UNSAT:
            return st, None
        taken = st.fork()
        taken.add_condition(cond)
        taken.model = vt.model
        taken.low_confidence |= vt.status == UNKNOWN
        st.add_condition(neg)
        st.model = vf.model
        st.low_confidence |= vf.status == UNKNOWN
        return taken, st

    def feasible_under(self, st: PathState, cond: BoolExpr) -> Optional[SolverVerdict]:
        """Verdict for ``cond`` on top of the path condition, None if unsat."""
        if isinstance(cond, BoolConst):
            return SolverVerdict(SAT, st.model) if cond.value else None
        if st.model is not None and evaluate_bool(cond, st.model):
            return SolverVerdict(SAT, st.model)
        v = self.check(st, (cond,))
        return None if v.status == UNSAT else v

    def _fan_out(self, st: PathState, cases: list[tuple[BoolExpr, object]]) -> list[tuple[PathState, object]]:
        """Fork ``st`` once per feasible case, appending that case's condition."""
        feasible = []
        for cond, payload in cases:
            v = self.feasible_under(st, cond)
            if v is not None:
                feasible.append((cond, payload, v))
        if len(feasible) == 1:
            return [(st, feasible[0][1])]
        out = []
        for i, (cond, payload, v) in enumerate(feasible):
            s = st if i == len(feasible) - 1 else st.fork()
            s.add_condition(cond)
            s.model = v.model
            s.low_confidence |= v.status == UNKNOWN
            out.append((s, payload))
        return out

    # ---------------------------------------------------- control helpers

    def _enter(self, st: PathState, func_index: int, args: list) -> None:
        func = self.module.function(func_index)
        ft = self.module.func_type(func_index)
        code = self.code(func_index)
        base = len(st.stack)
        arity = len(ft.results)
        locals_ = list(args) + [Const(WIDTH[t], 0) for t in func.locals]
        st.frames.append(Frame(func_index, code, 0, locals_, [Label("func", arity, len(code), base)], base, arity))

    def _return(self, st: PathState) -> None:
        site = (st.frames[-1].func, st.frames[-1].pc - 1)
        fr = st.frames.pop()
        stack = st.stack
        if fr.arity:
            vals = stack[len(stack) - fr.arity:]
            del stack[fr.base:]
            stack.extend(vals)
        else:
            del stack[fr.base:]
        if not st.frames:
            st.trace.append(TraceEvent(FINISHED_EVENT, site))
            st.status = FINISHED

    def _loop_key(self, fr: Frame, lab: Label) -> tuple[int, int]:
        return (fr.func, lab.target - 1)

    def _at_bound(self, st: PathState, fr: Frame, depth: int) -> bool:
        lab = fr.labels[-1 - depth]
        return lab.kind == "loop" and st.loop_counts.get(self._loop_key(fr, lab), 0) >= self.config.loop_bound

    def _jump(self, st: PathState, fr: Frame, depth: int) -> None:
        labels = fr.labels
        lab = labels[-1 - depth]
        if lab.kind == "func":
            self._return(st)
            return
        stack = st.stack
        if lab.kind == "loop":
            key = self._loop_key(fr, lab)
            st.loop_counts[key] = st.loop_counts.get(key, 0) + 1
            del stack[lab.height:]
            del labels[len(labels) - depth:]
        else:
            if lab.arity:
                vals = stack[len(stack) - lab.arity:]
                del stack[lab.height:]
                stack.extend(vals)
            else:
                del stack[lab.height:]
            del labels[len(labels) - 1 - depth:]
        fr.pc = lab.target

    def _loop_bound_hit(self, st: PathState) -> None:
        self.diagnostics["loop bound reached"] += 1
        self.exhaust(st, "loop bound")

    # -------------------------------------------------------- dispatch

    def _build_dispatch(self) -> dict[str, Callable]:
        d: dict[str, Callable] = {
            "unreachable": self._op_unreachable,
            "nop": lambda st, fr, op: None,
            "block": self._op_block,
            "loop": self._op_loop,
            "if": self._op_if,
            "else": self._op_else,
            "end": self._op_end,
            "br": self._op_br,
            "br_if": self._op_br_if,
            "br_table": self._op_br_table,
            "return": self._op_return,
            "call": self._op_call,
            "call_indirect": self._op_call_indirect,
            "drop": self._op_drop,
            "select": self._op_select,
            "local.get": self._op_local_get,
            "local.set": self._op_local_set,
            "local.tee": self._op_local_tee,
            "global.get": self._op_global_get,
            "global.set": self._op_global_set,
            "memory.size": self._op_memory_size,
            "memory.grow": self._op_memory_grow,
        }
        for name, (n, w, signed) in _LOADS.items():
            d[name] = self._make_load(n, w, signed)
        for name, n in _STORES.items():
            d[name] = self._make_store(n)
        for ty in ("i32", "i64", "f32", "f64"):
            d[f"{ty}.const"] = self._make_const(_width(ty))
        for ty in ("i32", "i64"):
            w = _width(ty)
            for op in _INT_BINOPS:
                d[f"{ty}.{op}"] = self._make_binary(f"{ty}.{op}")
            for op in _INT_RELS:
                d[f"{ty}.{op}"] = self._make_compare(f"{ty}.{op}", op, w)
            for op in ("div_s", "div_u", "rem_s", "rem_u"):
                d[f"{ty}.{op}"] = self._make_division(op, w)
            for op in ("clz", "ctz", "popcnt"):
                d[f"{ty}.{op}"] = self._make_unary(op)
            d[f"{ty}.eqz"] = self._make_eqz(w)
        for ty in ("f32", "f64"):
            w = _width(ty)
            for op in _FLOAT_BINOPS + _FLOAT_RELS:
                d[f"{ty}.{op}"] = self._make_binary(f"{ty}.{op}")
            for op in _FLOAT_UNOPS:
                d[f"{ty}.{op}"] = self._make_float_unary(op, w)
        self._add_conversions(d)
        return d

    # structured control

    def _op_unreachable(self, st, fr, op):
        self.trap(st, "unreachable")

    def _op_block(self, st, fr, op):
        fr.labels.append(Label("block", op[2], op[3] + 1, len(st.stack)))

    def _op_loop(self, st, fr, op):
        lab = Label("loop", 0, fr.pc, len(st.stack))
        fr.labels.append(lab)
        st.loop_counts[self._loop_key(fr, lab)] = 0

    def _op_if(self, st, fr, op):
        cond = truthy(st.stack.pop())
        else_at, end = op[3]
        taken, other = self.split(st, cond)
        out = []
        if taken is not None:
            taken.frames[-1].labels.append(Label("if", op[2], end + 1, len(taken.stack)))
            out.append(taken)
        if other is not None:
            f = other.frames[-1]
            f.labels.append(Label("if", op[2], end + 1, len(other.stack)))
            f.pc = end if else_at is None else else_at + 1
            out.append(other)
        return out

    def _op_else(self, st, fr, op):
        # end of the then-branch: skip to the matching end
        fr.pc = op[2]

    def _op_end(self, st, fr, op):
        lab = fr.labels.pop()
        if lab.kind == "func":
            self._return(st)

    def _op_br(self, st, fr, op):
        if self._at_bound(st, fr, op[1]):
            self._loop_bound_hit(st)
            return
        self._jump(st, fr, op[1])

    def _op_br_if(self, st, fr, op):
        depth = op[1]
        cond = truthy(st.stack.pop())
        if self._at_bound(st, fr, depth):
            # the back-edge is dropped; only the fall-through survives
            self.diagnostics["loop bound reached"] += 1
            _, fall = self.split(st, cond)
            if fall is None:
                self.exhaust(st, "loop bound")
                return [st]
            return [fall]
        taken, fall = self.split(st, cond)
        if taken is not None:
            self._jump(taken, taken.frames[-1], depth)
        return [s for s in (taken, fall) if s is not None]

    def _op_br_table(self, st, fr, op):
        targets, default = op[1]
        idx = st.stack.pop()
        if isinstance(idx, Const):
            depth = targets[idx.value] if idx.value < len(targets) else default
            return self._op_br(st, fr, ("br", depth, None, None))
        groups: dict[int, list[BoolExpr]] = {}
        for i, depth in enumerate(targets):
            groups.setdefault(depth, []).append(compare("eq", idx, Const(idx.width, i)))
        groups.setdefault(default, []).append(compare("ge_u", idx, Const(idx.width, len(targets))))
        cases = [(or_(*conds), depth) for depth, conds in groups.items()]
        out = []
        for s, depth in self._fan_out(st, cases):
            f = s.frames[-1]
            if self._at_bound(s, f, depth):
                self._loop_bound_hit(s)
            else:
                self._jump(s, f, depth)
            out.append(s)
        return out

    def _op_return(self, st, fr, op):
        self._return(st)

    # calls

    def _op_call(self, st, fr, op):
        self.call(st, op[1])

    def call(self, st: PathState, func_index: int) -> None:
        """Call ``func_index`` with arguments taken from the operand stack."""
        m = self.module
        ft = m.func_type(func_index)
        n = len(ft.params)
        if len(st.stack) < n:
            self.trap(st, "arity mismatch")
            return
        args = st.stack[len(st.stack) - n:] if n else []
        del st.stack[len(st.stack) - n:]
        imp = m.imported_function(func_index)
        if imp is not None:
            self._call_host(st, func_index, imp, args)
            return
        if len(st.frames) >= self.config.max_call_depth:
            self.diagnostics["call depth reached"] += 1
            self.exhaust(st, "call depth")
            return
        self.record(st, CALL, target=func_index)
        self._enter(st, func_index, args)

    def _call_host(self, st: PathState, func_index: int, imp, args: list) -> None:
        ft = self.module.func_type(func_index)
        name = f"{imp.module}.{imp.name}"
        self.record(st, HOST_CALL, tuple(args), name=name)
        handler = self.hosts.get((imp.module, imp.name))
        result = None
        if handler is not None:
            result = handler(self, st, args)
        else:
            self.diagnostics[f"fallback import {name}"] += 1
        if st.status != RUNNING:
            return
        if ft.results:
            w = WIDTH[ft.results[0]]
            if result is None:
                result = Const(w, st.random_bits(w))
            elif result.width != w:
                result = extract(w - 1, 0, result) if result.width > w else zext(w, result)
            st.stack.append(result)

    def _op_call_indirect(self, st, fr, op):
        type_index = op[1][0] if isinstance(op[1], tuple) else op[1]
        expected = self.module.types[type_index]
        idx = st.stack.pop()
        table = st.table
        if isinstance(idx, Const):
            self._indirect(st, idx.value, expected)
            return None
        cases: list[tuple[BoolExpr, object]] = []
        for slot, target in enumerate(table):
            if target is None:
                continue
            if len(cases) >= self.config.max_indirect_targets:
                self.diagnostics["indirect targets truncated"] += 1
                break
            cases.append((compare("eq", idx, Const(idx.width, slot)), slot))
        cases.append((compare("ge_u", idx, Const(idx.width, len(table))), len(table)))
        out = []
        for s, slot in self._fan_out(st, cases):
            self._indirect(s, slot, expected)
            out.append(s)
        if not out:
            st.status = PRUNED
            return [st]
        return out

    def _indirect(self, st: PathState, slot: int, expected) -> None:
        table = st.table
        if slot >= len(table):
            self.trap(st, "undefined element")
            return
        target = table[slot]
        if target is None:
            self.trap(st, "uninitialized element")
            return
        if self.module.func_type(target) != expected:
            self.trap(st, "indirect call type mismatch")
            return
        self.record(st, INDIRECT_CALL, target=target, slot=slot)
        self.call(st, target)

    # parametric and variables

    def _op_drop(self, st, fr, op):
        st.stack.pop()

    def _op_select(self, st, fr, op):
        c = st.stack.pop()
        b = st.stack.pop()
        a = st.stack.pop()
        st.stack.append(ite(truthy(c), a, b))

    def _op_local_get(self, st, fr, op):
        st.stack.append(fr.locals[op[1]])

    def _op_local_set(self, st, fr, op):
        fr.locals[op[1]] = st.stack.pop()

    def _op_local_tee(self, st, fr, op):
        fr.locals[op[1]] = st.stack[-1]

    def _op_global_get(self, st, fr, op):
        st.stack.append(st.globals[op[1]])

    def _op_global_set(self, st, fr, op):
        st.globals[op[1]] = st.stack.pop()

    # memory

    def address(self, st: PathState, addr: SymExpr, offset: int, n: int) -> Optional[int]:
        """Concrete effective address, or None after trapping."""
        a = addr.value if isinstance(addr, Const) else self.concretize(st, addr)
        ea = a + offset
        if not st.memory.in_bounds(ea, n):
            self.trap(st, "out of bounds memory access")
            return None
        return ea

    def _make_load(self, n: int, w: int, signed: bool):
        def load(st, fr, op):
            ea = self.address(st, st.stack.pop(), op[1][1], n)
            if ea is None:
                return
            v = st.memory.load(ea, n)
            if 8 * n < w:
                v = sext(w, v) if signed else zext(w, v)
            st.stack.append(v)

        return load

    def _make_store(self, n: int):
        def store(st, fr, op):
            v = st.stack.pop()
            ea = self.address(st, st.stack.pop(), op[1][1], n)
            if ea is None:
                return
            if 8 * n < v.width:
                v = extract(8 * n - 1, 0, v)
            st.memory.store(ea, v)

        return store

    def _op_memory_size(self, st, fr, op):
        st.stack.append(Const(32, st.memory.pages))

    def _op_memory_grow(self, st, fr, op):
        delta = self.concretize(st, st.stack.pop())
        old = st.memory.grow(delta)
        st.stack.append(Const(32, old & 0xFFFFFFFF))

    # numeric

    def _make_const(self, w: int):
        def const(st, fr, op):
            st.stack.append(Const(w, op[1]))

        return const

    def _make_binary(self, name: str):
        def binop(st, fr, op):
            b = st.stack.pop()
            a = st.stack.pop()
            st.stack.append(eval_binary(name, a, b))

        return binop

    def _make_compare(self, name: str, rel: str, w: int):
        watch = w == 64 and rel in ("eq", "ne")

        def cmp(st, fr, op):
            b = st.stack.pop()
            a = st.stack.pop()
            if watch:
                self._watch_compare(st, rel, a, b)
            st.stack.append(bool_to_bv(compare(rel, a, b)))

        return cmp

    def _watch_compare(self, st: PathState, rel: str, a: SymExpr, b: SymExpr) -> None:
        ca, cb = isinstance(a, Const), isinstance(b, Const)
        if ca != cb:
            e, c = (b, a) if ca else (a, b)
            if e.tags & _NAME_TAGS:
                self.record(
                    st, NAME_COMPARE, (e,), constant=c.value, relation=rel,
                    tags=sorted(t.value for t in e.tags),
                )
        elif not ca:
            self.record(
                st, TAG_COMPARE, (a, b), relation=rel,
                left=sorted(t.value for t in a.tags), right=sorted(t.value for t in b.tags),
            )

    def _make_eqz(self, w: int):
        def eqz(st, fr, op):
            a = st.stack.pop()
            st.stack.append(bool_to_bv(compare("eq", a, Const(w, 0))))

        return eqz

    def _make_unary(self, name: str):
        def un(st, fr, op):
            st.stack.append(unary(name, st.stack.pop()))

        return un

    def _make_division(self, name: str, w: int):
        minimum = 1 << (w - 1)
        minus_one = (1 << w) - 1

        def div(st, fr, op):
            b = st.stack[-1]
            a = st.stack[-2]
            trap = compare("eq", b, Const(w, 0))
            reason = "integer divide by zero"
            if name == "div_s":
                overflow = and_(compare("eq", a, Const(w, minimum)), compare("eq", b, Const(w, minus_one)))
                if overflow is TRUE:
                    reason = "integer overflow"
                trap = or_(trap, overflow)
            if trap is FALSE:
                del st.stack[-2:]
                st.stack.append(binary(name, a, b))
                return None
            bad, good = self.split(st, trap)
            out = []
            if good is not None:
                del good.stack[-2:]
                good.stack.append(binary(name, a, b))
                out.append(good)
            if bad is not None:
                self.trap(bad, reason)
                out.append(bad)
            return out

        return div

    def _make_float_unary(self, name: str, w: int):
        sign = 1 << (w - 1)
        full = f"f{w}.{name}"

        def fun(st, fr, op):
            a = st.stack.pop()
            if isinstance(a, Const):
                r = Const(w, numeric.float_unary(name, a.value, w))
            elif name == "abs":
                r = binary("and", a, Const(w, sign - 1))
            elif name == "neg":
                r = binary("xor", a, Const(w, sign))
            else:
                r = uninterpreted(full, w, a)
            st.stack.append(r)

        return fun

    def _add_conversions(self, d: dict) -> None:
        d["i32.wrap_i64"] = self._make_convert(lambda a: extract(31, 0, a))
        d["i64.extend_i32_s"] = self._make_convert(lambda a: sext(64, a))
        d["i64.extend_i32_u"] = self._make_convert(lambda a: zext(64, a))
        for ty, w in (("i32", 32), ("i64", 64)):
            for bits in (8, 16, 32):
                if bits < w:
                    d[f"{ty}.extend{bits}_s"] = self._make_convert(
                        lambda a, bits=bits, w=w: sext(w, extract(bits - 1, 0, a))
                    )
        for name in ("i32.reinterpret_f32", "i64.reinterpret_f64", "f32.reinterpret_i32", "f64.reinterpret_i64"):
            d[name] = self._make_convert(lambda a: a)
        for iw in (32, 64):
            for fw in (32, 64):
                for sg in ("s", "u"):
                    for sat in (False, True):
                        name = f"i{iw}.trunc_{'sat_' if sat else ''}f{fw}_{sg}"
                        d[name] = self._make_trunc(name, fw, iw, sg == "s", sat)
                    name = f"f{fw}.convert_i{iw}_{sg}"
                    d[name] = self._make_int_to_float(name, iw, fw, sg == "s")
        d["f32.demote_f64"] = self._make_float_convert("f32.demote_f64", 32, numeric.demote)
        d["f64.promote_f32"] = self._make_float_convert("f64.promote_f32", 64, numeric.promote)

    def _make_convert(self, fn):
        def conv(st, fr, op):
            st.stack.append(fn(st.stack.pop()))

        return conv

    def _make_trunc(self, name: str, fw: int, iw: int, signed: bool, saturating: bool):
        def trunc(st, fr, op):
            a = st.stack.pop()
            if not isinstance(a, Const):
                st.stack.append(uninterpreted(name, iw, a))
                return
            r = numeric.trunc_float(a.value, fw, iw, signed, saturating)
            if r is None:
                self.trap(st, "invalid conversion to integer")
                return
            st.stack.append(Const(iw, r))

        return trunc

    def _make_int_to_float(self, name: str, iw: int, fw: int, signed: bool):
        def conv(st, fr, op):
            a = st.stack.pop()
            if not isinstance(a, Const):
                st.stack.append(uninterpreted(name, fw, a))
                return
            v = numeric.to_signed(a.value, iw) if signed else a.value
            st.stack.append(Const(fw, numeric.int_to_float_bits(v, fw)))

        return conv

    def _make_float_convert(self, name: str, w: int, fn):
        def conv(st, fr, op):
            a = st.stack.pop()
            st.stack.append(Const(w, fn(a.value)) if isinstance(a, Const) else uninterpreted(name, w, a))

        return conv


def instantiate(module: Module, config: Optional[ExploreConfig] = None) -> PathState:
    return Engine(module, config, hosts={}).instantiate()


def explore(
    module: Module,
    entry: int,
    config: Optional[ExploreConfig] = None,
    args: Optional[Sequence] = None,
    solver: Optional[Solver] = None,
) -> list[PathState]:
    return Engine(module, config, solver).explore(entry, args)
