"""SMT-LIB2 serialisation of path conditions and a QF_BV solver session.

The solver runs as a child process and is spoken to over stdin/stdout. Each
query starts with ``(reset)``, so no assertion leaks between queries.
"""

from __future__ import annotations

import logging
import os
import re
import selectors
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import SolverUnavailable
from .expr import (
    And,
    Binary,
    BoolConst,
    BoolExpr,
    Compare,
    Concat,
    Const,
    Extract,
    Ite,
    Not,
    Or,
    SignExt,
    SymExpr,
    Unary,
    Var,
    ZeroExt,
)

log = logging.getLogger(__name__)

SOLVER_ENV = "WANA_SOLVER"
DEFAULT_TIMEOUT = 5.0

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"

_BV_OPS = {
    "add": "bvadd", "sub": "bvsub", "mul": "bvmul",
    "div_u": "bvudiv", "div_s": "bvsdiv", "rem_u": "bvurem", "rem_s": "bvsrem",
    "and": "bvand", "or": "bvor", "xor": "bvxor",
    "shr_u": "bvlshr", "shr_s": "bvashr", "shl": "bvshl",
}
_REL_OPS = {
    "eq": "=", "lt_s": "bvslt", "lt_u": "bvult", "gt_s": "bvsgt", "gt_u": "bvugt",
    "le_s": "bvsle", "le_u": "bvule", "ge_s": "bvsge", "ge_u": "bvuge",
}
# operators whose SMT rendering mentions an operand more than once
_REPEATS_OPERANDS = {"rotl", "rotr", "clz", "ctz", "popcnt"}


def _sort(width: int) -> str:
    return f"(_ BitVec {width})"


def _lit(width: int, value: int) -> str:
    return f"(_ bv{value} {width})"


def _render(node, args: list[str]) -> str:
    t = type(node)
    if t is Const:
        return _lit(node.width, node.value)
    if t is Var:
        return node.name
    if t is Binary:
        a, b = args
        w = node.width
        if node.op in ("shl", "shr_u", "shr_s"):
            return f"({_BV_OPS[node.op]} {a} (bvand {b} {_lit(w, w - 1)}))"
        if node.op in ("rotl", "rotr"):
            k = f"(bvand {b} {_lit(w, w - 1)})"
            first, second = ("bvshl", "bvlshr") if node.op == "rotl" else ("bvlshr", "bvshl")
            return f"(bvor ({first} {a} {k}) ({second} {a} (bvsub {_lit(w, w)} {k})))"
        return f"({_BV_OPS[node.op]} {a} {b})"
    if t is Unary:
        (a,) = args
        w = node.width
        if node.op == "not":
            return f"(bvnot {a})"
        if node.op == "neg":
            return f"(bvneg {a})"
        bit = lambda i: f"((_ extract {i} {i}) {a})"  # noqa: E731
        if node.op == "popcnt":
            terms = [f"((_ zero_extend {w - 1}) {bit(i)})" for i in range(w)]
            return "(bvadd " + " ".join(terms) + ")"
        order = range(w - 1, -1, -1) if node.op == "clz" else range(w)
        out = _lit(w, w)
        for n, i in reversed(list(enumerate(order))):
            out = f"(ite (= {bit(i)} #b1) {_lit(w, n)} {out})"
        return out
    if t is Extract:
        return f"((_ extract {node.hi} {node.lo}) {args[0]})"
    if t is Concat:
        return f"(concat {args[0]} {args[1]})"
    if t is Ite:
        return f"(ite {args[0]} {args[1]} {args[2]})"
    if t is SignExt:
        return f"((_ sign_extend {node.width - node.child.width}) {args[0]})"
    if t is ZeroExt:
        return f"((_ zero_extend {node.width - node.child.width}) {args[0]})"
    if t is BoolConst:
        return "true" if node.value else "false"
    if t is Compare:
        if node.rel == "ne":
            return f"(not (= {args[0]} {args[1]}))"
        return f"({_REL_OPS[node.rel]} {args[0]} {args[1]})"
    if t is Not:
        return f"(not {args[0]})"
    if t is And:
        return "(and " + " ".join(args) + ")"
    if t is Or:
        return "(or " + " ".join(args) + ")"
    raise TypeError(f"cannot render {node!r}")


def _is_leaf(node) -> bool:
    return type(node) in (Const, Var, BoolConst)


def to_smtlib(conjuncts: Iterable[BoolExpr]) -> str:
    """Render a path condition as a QF_BV script ending in ``(check-sat)``.

    Structurally equal subterms are rendered once; subterms used more than
    once become ``define-fun`` definitions. Output is byte-identical for
    structurally identical inputs.
    """
    conjuncts = list(conjuncts)
    # post-order over structurally unique nodes, counting references
    refs: dict = {}
    order: list = []
    stack: list = [(c, False) for c in reversed(conjuncts)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if node in refs:
            refs[node] += 1
            continue
        refs[node] = 1
        stack.append((node, True))
        for child in reversed(node.children()):
            stack.append((child, False))

    force: set = set()
    for node in order:
        if type(node) in (Binary, Unary) and node.op in _REPEATS_OPERANDS:
            force.update(c for c in node.children() if not _is_leaf(c))

    decls: dict[str, int] = {}
    defs: list[str] = []
    text: dict = {}
    for node in order:
        if type(node) is Var:
            prev = decls.setdefault(node.name, node.width)
            if prev != node.width:
                raise ValueError(f"variable {node.name} used at widths {prev} and {node.width}")
        s = _render(node, [text[c] for c in node.children()])
        if not _is_leaf(node) and (refs[node] > 1 or node in force):
            name = f"t!{len(defs)}"
            sort = "Bool" if isinstance(node, BoolExpr) else _sort(node.width)
            defs.append(f"(define-fun {name} () {sort} {s})")
            s = name
        text[node] = s

    lines = ["(set-logic QF_BV)"]
    lines += [f"(declare-fun {n} () {_sort(w)})" for n, w in sorted(decls.items())]
    lines += defs
    lines += [f"(assert {text[c]})" for c in conjuncts]
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\(|\)|\|[^|]*\||\"(?:[^\"]|\"\")*\"|[^\s()]+")


def parse_sexpr(text: str):
    """Parse one or more s-expressions into nested lists of string atoms."""
    stack: list[list] = [[]]
    for tok in _TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    return stack[0]


def _bv_value(term) -> int:
    if isinstance(term, str):
        if term.startswith("#x"):
            return int(term[2:], 16)
        if term.startswith("#b"):
            return int(term[2:], 2)
    elif len(term) == 3 and term[0] == "_" and term[1].startswith("bv"):
        return int(term[1][2:])
    raise ValueError(f"unexpected model value {term!r}")


def parse_model(text: str) -> dict[str, int]:
    model: dict[str, int] = {}

    def walk(items):
        for item in items:
            if isinstance(item, list):
                if len(item) == 5 and item[0] == "define-fun" and item[2] == []:
                    name = item[1].strip("|")
                    try:
                        model[name] = _bv_value(item[4])
                    except ValueError:
                        pass
                else:
                    walk(item)

    walk(parse_sexpr(text))
    return model


# ------------------------------------------------------------------ solver

@dataclass
class SolverVerdict:
    status: str
    model: Optional[dict[str, int]] = None
    time: float = 0.0

    @property
    def feasible(self) -> bool:
        """sat or unknown: unknown is explored rather than pruned."""
        return self.status != UNSAT


@dataclass
class SolverStats:
    queries: int = 0
    cache_hits: int = 0
    unknowns: int = 0
    time: float = 0.0
    restarts: int = field(default=0)


def resolve_solver_path(explicit: Optional[str] = None) -> str:
    path = explicit or os.environ.get(SOLVER_ENV) or shutil.which("z3")
    if not path:
        raise SolverUnavailable(f"no SMT solver found; pass --solver-path or set {SOLVER_ENV}")
    resolved = shutil.which(path) or (path if os.path.exists(path) else None)
    if not resolved:
        raise SolverUnavailable(f"solver executable {path!r} not found")
    return resolved


class Solver:
    """One solver child process. Not thread-safe; give each worker its own."""

    def __init__(self, path: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT, cache_size: int = 20_000):
        self.path = resolve_solver_path(path)
        self.timeout = timeout
        self.stats = SolverStats()
        self._proc: Optional[subprocess.Popen] = None
        self._buf = b""
        self._cache: dict[str, SolverVerdict] = {}
        self._cache_size = cache_size
        base = os.path.basename(self.path).lower()
        self._is_z3 = "z3" in base
        if "cvc" in base:
            self._argv = [self.path, "--lang=smt2", "--incremental", "--produce-models"]
        elif self._is_z3:
            self._argv = [self.path, "-in", "-smt2"]
        else:
            self._argv = [self.path]

    # process management
    def _start(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self._argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL
                )
            except OSError as exc:
                raise SolverUnavailable(f"cannot launch {self.path}: {exc}") from exc
            self._buf = b""
        return self._proc

    def close(self) -> None:
        if self._proc is not None:
            try:
                if self._proc.poll() is None:
                    self._proc.stdin.write(b"(exit)\n")
                    self._proc.stdin.flush()
                    self._proc.wait(timeout=1)
            except (OSError, subprocess.TimeoutExpired, ValueError):
                self._proc.kill()
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
            self.stats.restarts += 1

    def _send(self, text: str) -> None:
        proc = self._start()
        try:
            proc.stdin.write(text.encode())
            proc.stdin.flush()
        except OSError as exc:
            self._kill()
            raise SolverUnavailable(f"solver pipe closed: {exc}") from exc

    def _read_response(self, deadline: float) -> Optional[str]:
        """Read one complete atom or balanced s-expression; None on timeout."""
        proc = self._proc
        fd = proc.stdout.fileno()
        with selectors.DefaultSelector() as sel:
            sel.register(fd, selectors.EVENT_READ)
            while True:
                text = self._complete(self._buf)
                if text is not None:
                    return text
                remaining = deadline - time.monotonic()
                if remaining <= 0 or not sel.select(remaining):
                    return None
                chunk = os.read(fd, 65536)
                if not chunk:
                    self._kill()
                    raise SolverUnavailable("solver exited unexpectedly")
                self._buf += chunk

    def _complete(self, buf: bytes) -> Optional[str]:
        depth = 0
        started = False
        for i, ch in enumerate(buf):
            if ch == 0x28:
                depth += 1
                started = True
            elif ch == 0x29:
                depth -= 1
                if depth == 0:
                    self._buf = buf[i + 1:]
                    return buf[:i + 1].decode()
            elif ch == 0x0A and depth == 0:
                line = buf[:i].strip()
                if line and not started:
                    self._buf = buf[i + 1:]
                    return line.decode()
        return None

    def check(self, conjuncts: Sequence[BoolExpr]) -> SolverVerdict:
        """Decide the conjunction; on sat the verdict carries a model."""
        if any(isinstance(c, BoolConst) and not c.value for c in conjuncts):
            return SolverVerdict(UNSAT)
        conjuncts = [c for c in conjuncts if not (isinstance(c, BoolConst) and c.value)]
        if not conjuncts:
            return SolverVerdict(SAT, {})
        script = to_smtlib(conjuncts)
        cached = self._cache.get(script)
        if cached is not None:
            self.stats.cache_hits += 1
            return cached
        verdict = self._query(script)
        if len(self._cache) < self._cache_size:
            self._cache[script] = verdict
        return verdict

    def _query(self, script: str) -> SolverVerdict:
        start = time.perf_counter()
        self.stats.queries += 1
        prelude = "(reset)\n(set-option :produce-models true)\n"
        if self._is_z3:
            prelude += f"(set-option :timeout {int(self.timeout * 1000)})\n"
        self._send(prelude + script)
        deadline = time.monotonic() + self.timeout + 2.0
        answer = self._read_response(deadline)
        model = None
        if answer is None:
            log.warning("solver query timed out; restarting solver")
            self._kill()
            status = UNKNOWN
        elif answer in (SAT, UNSAT, UNKNOWN):
            status = answer
        else:
            self._kill()
            raise SolverUnavailable(f"unexpected solver response: {answer[:200]}")
        if status == SAT:
            self._send("(get-model)\n")
            text = self._read_response(time.monotonic() + self.timeout + 2.0)
            if text is None or text.startswith("(error"):
                self._kill()
                raise SolverUnavailable(f"could not read model: {text!r}")
            model = parse_model(text)
        if status == UNKNOWN:
            self.stats.unknowns += 1
        elapsed = time.perf_counter() - start
        self.stats.time += elapsed
        return SolverVerdict(status, model, elapsed)


_default: Optional[Solver] = None


def default_solver() -> Solver:
    global _default
    if _default is None:
        _default = Solver()
    return _default


def check_sat(conjuncts: Sequence[BoolExpr], solver: Optional[Solver] = None) -> SolverVerdict:
    return (solver or default_solver()).check(conjuncts)
