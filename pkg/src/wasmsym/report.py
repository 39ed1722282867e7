"""Per-file and corpus analysis with JSON/text reports."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .decoder import decode_module
from .detectors import eosio as eosio_detectors
from .detectors import ethereum as ethereum_detectors
from .detectors.findings import EOSIO_KINDS, ETHEREUM_KINDS, Finding, Session
from .engine import ExploreConfig
from .errors import AnalysisTimeout, DecodeError, PlatformError, SolverUnavailable, AnalyzerError
from .hosts import EOSIO, ETHEREUM, detect_platform, unrecognized_imports
from .smt import Solver

log = logging.getLogger(__name__)

PLATFORMS = ("auto", EOSIO, ETHEREUM)

OK = "ok"
ERROR = "error"
TIMEOUT = "timeout"


class UsageError(AnalyzerError):
    pass


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    platform: str = "auto"
    loop_depth: int = 10
    seed: int = 0
    solver_path: Optional[str] = None
    solver_timeout: float = 5.0
    # wall-clock budget per contract, seconds
    timeout: float = 60.0
    max_paths: int = 2000
    format: str = "text"
    jobs: int = 1
    output: Optional[str] = None
    timings: bool = True

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise UsageError(f"unknown platform {self.platform!r}")
        if self.loop_depth < 1:
            raise UsageError("loop depth must be at least 1")
        if self.format not in ("text", "json"):
            raise UsageError(f"unknown format {self.format!r}")

    def explore_config(self, deadline: Optional[float] = None) -> ExploreConfig:
        return ExploreConfig(
            loop_bound=self.loop_depth,
            max_paths=self.max_paths,
            solver_timeout=self.solver_timeout,
            seed=self.seed,
            deadline=deadline,
        )

    def echo(self) -> dict:
        d = asdict(self)
        for k in ("inputs", "output", "format", "jobs", "timings"):
            d.pop(k)
        return d


_solvers: dict = {}


def _solver(config: RunConfig) -> Solver:
    key = (config.solver_path, config.solver_timeout)
    s = _solvers.get(key)
    if s is None:
        s = _solvers[key] = Solver(config.solver_path, timeout=config.solver_timeout)
    return s


def _ms(seconds: float) -> float:
    # strictly positive so every phase reads as having happened
    return max(round(seconds * 1000.0, 3), 0.001)


def run_file(path: str, config: Optional[RunConfig] = None) -> dict:
    """Analyze one ``.wasm`` file; never raises for per-file problems."""
    config = config or RunConfig()
    start = time.perf_counter()
    entry: dict = {"file": str(path), "platform": None, "status": OK, "findings": []}
    try:
        data = Path(path).read_bytes()
        module = decode_module(data)
    except (OSError, DecodeError) as exc:
        entry.update(status=ERROR, error=f"{type(exc).__name__}: {exc}")
        return _finish_entry(entry, config, start, start, 0.0, 0.0)
    decoded = time.perf_counter()
    entry["module"] = {
        "functions": len(module.functions),
        "imported_functions": module.num_imported_functions,
        "instructions": module.instruction_count(),
    }
    try:
        platform = detect_platform(module) if config.platform == "auto" else config.platform
    except PlatformError as exc:
        entry.update(status=ERROR, error=f"PlatformError: {exc}")
        return _finish_entry(entry, config, start, decoded, 0.0, 0.0)
    entry["platform"] = platform
    deadline = time.monotonic() + config.timeout
    try:
        solver = _solver(config)
    except SolverUnavailable as exc:
        entry.update(status=ERROR, error=f"SolverUnavailable: {exc}")
        return _finish_entry(entry, config, start, decoded, 0.0, 0.0)
    session = Session(module, config.explore_config(deadline), solver)
    solve_before = solver.stats.time
    unknown_before = solver.stats.unknowns
    detectors = (
        (eosio_detectors.detect_fake_eos_transfer, eosio_detectors.detect_forged_notification,
         eosio_detectors.detect_bid_eosio)
        if platform == EOSIO
        else (ethereum_detectors.detect_greedy, ethereum_detectors.detect_dangerous_delegatecall,
              ethereum_detectors.detect_bid_eth)
    )
    findings: list[Finding] = []
    try:
        for detect in detectors:
            findings.append(detect(module, session=session))
    except AnalysisTimeout:
        entry["status"] = TIMEOUT
        entry["error"] = f"analysis exceeded {config.timeout:g} s; findings are partial"
    except SolverUnavailable as exc:
        entry.update(status=ERROR, error=f"SolverUnavailable: {exc}")
    entry["findings"] = [f.to_json() for f in findings]
    diagnostics = {k: session.diagnostics[k] for k in sorted(session.diagnostics)}
    diagnostics["unknown_verdicts"] = solver.stats.unknowns - unknown_before
    diagnostics["paths"] = session.paths
    unrecognized = unrecognized_imports(module)
    if unrecognized:
        diagnostics["unrecognized_imports"] = unrecognized
    entry["diagnostics"] = diagnostics
    return _finish_entry(entry, config, start, decoded, session.explore_time, solver.stats.time - solve_before)


def _finish_entry(entry: dict, config: RunConfig, start: float, decoded: float, explore: float, solve: float) -> dict:
    if config.timings:
        total = time.perf_counter() - start
        entry["timing_ms"] = {
            "decode": _ms(decoded - start),
            "explore": _ms(explore),
            "solve": _ms(solve),
            "total": _ms(max(total, decoded - start, explore, solve)),
        }
    return entry


def collect_inputs(paths: list[str]) -> list[str]:
    """Expand directories to their ``.wasm`` files, sorted for determinism."""
    files: list[str] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            found = sorted(str(f) for f in path.rglob("*.wasm"))
            if not found:
                raise UsageError(f"no .wasm files under {p}")
            files.extend(found)
        elif path.exists():
            files.append(str(path))
        else:
            raise UsageError(f"no such file or directory: {p}")
    if not files:
        raise UsageError("no input files")
    return files


def _run_one(args) -> dict:
    path, config = args
    return run_file(path, config)


def run_corpus(paths, config: Optional[RunConfig] = None) -> dict:
    """Analyze every input (files or directories) and build the full report."""
    config = config or RunConfig()
    if isinstance(paths, (str, os.PathLike)):
        paths = [str(paths)]
    files = collect_inputs(list(paths))
    if config.jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            contracts = list(pool.map(_run_one, [(f, config) for f in files]))
    else:
        contracts = [run_file(f, config) for f in files]
    return {
        "version": __version__,
        "config": config.echo(),
        "contracts": contracts,
        "summary": summarize(contracts),
    }


def summarize(contracts: list[dict]) -> dict:
    summary: dict = {"contracts": len(contracts), "platforms": {}}
    for platform, kinds in ((EOSIO, EOSIO_KINDS), (ETHEREUM, ETHEREUM_KINDS)):
        mine = [c for c in contracts if c.get("platform") == platform]
        analyzed = [c for c in mine if c["status"] == OK]
        counts = {k: 0 for k in kinds}
        for c in analyzed:
            for f in c["findings"]:
                if f["verdict"]:
                    counts[f["kind"]] += 1
        summary["platforms"][platform] = {
            "contracts": len(mine),
            "analyzed": len(analyzed),
            "timeouts": sum(c["status"] == TIMEOUT for c in mine),
            "errors": sum(c["status"] == ERROR for c in mine),
            "findings": {
                k: {"count": n, "percentage": round(100.0 * n / len(analyzed), 2) if analyzed else 0.0}
                for k, n in counts.items()
            },
        }
    summary["errors"] = sum(c["status"] == ERROR for c in contracts)
    summary["timeouts"] = sum(c["status"] == TIMEOUT for c in contracts)
    summary["vulnerable_contracts"] = sum(
        any(f["verdict"] for f in c["findings"]) for c in contracts
    )
    return summary


def exit_code(report: dict) -> int:
    """0 clean, 1 findings present, 2 operational errors (takes precedence)."""
    s = report["summary"]
    if s["errors"] or s["timeouts"]:
        return 2
    return 1 if s["vulnerable_contracts"] else 0


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def to_text(report: dict) -> str:
    lines = []
    for c in report["contracts"]:
        head = f"{c['file']}  [{c['platform'] or '?'}]  {c['status']}"
        if "timing_ms" in c:
            head += f"  {c['timing_ms']['total'] / 1000.0:.2f}s"
        lines.append(head)
        if c.get("error"):
            lines.append(f"    error: {c['error']}")
        for f in c["findings"]:
            mark = "VULNERABLE" if f["verdict"] else "ok"
            conf = "" if f["confidence"] == "high" else " (low confidence)"
            lines.append(f"    {f['kind']:<28} {mark}{conf}")
            if f["verdict"] and f["witness"]:
                sites = ", ".join(f"{s['kind']}@{s['function']}:{s['offset']}" for s in f["witness"]["sites"])
                lines.append(f"        witness: {sites}")
    s = report["summary"]
    lines.append("")
    lines.append(f"contracts: {s['contracts']}  vulnerable: {s['vulnerable_contracts']}  "
                 f"errors: {s['errors']}  timeouts: {s['timeouts']}")
    for platform, p in s["platforms"].items():
        if not p["contracts"]:
            continue
        lines.append(f"{platform}: {p['analyzed']} analyzed")
        for kind, v in p["findings"].items():
            lines.append(f"    {kind:<28} {v['count']:>4}  {v['percentage']:6.2f}%")
    return "\n".join(lines) + "\n"
