"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import EOSIO_DIR, ETH_DIR, FIXTURES, load  # noqa: E402
from expected import EOSIO_EXPECTED, ETH_EXPECTED, EXPECTED  # noqa: E402
from wasmsym.detectors import Session, replay  # noqa: E402
from wasmsym.detectors import eosio as eosio_det  # noqa: E402
from wasmsym.detectors import ethereum as eth_det  # noqa: E402
from wasmsym.engine import ExploreConfig, explore  # noqa: E402
from wasmsym.engine.state import EXHAUSTED  # noqa: E402
from wasmsym.hosts import EOSIO, detect_platform  # noqa: E402
from wasmsym.hosts.names import encode_name, signed64  # noqa: E402
from wasmsym.report import RunConfig, run_corpus, to_json  # noqa: E402
from wasmsym.smt import UNSAT, default_solver  # noqa: E402

FIXTURE_PAIRS = [
    ("fake_transfer_dispatch", "fake_transfer_dispatch_fixed", "FakeEosTransfer"),
    ("forged_notification", "forged_notification_fixed", "ForgedTransferNotification"),
    ("bid_tapos_lottery", "bid_tapos_lottery_fixed", "BlockInfoDependency"),
    ("fake_transfer_direct", "fake_transfer_direct_fixed", "FakeEosTransfer"),
    ("bid_deferred", "bid_deferred_fixed", "BlockInfoDependency"),
]


def verdicts(path, solver, loop_bound=10):
    m = load(path)
    session = Session(m, ExploreConfig(loop_bound=loop_bound), solver)
    det = eosio_det if detect_platform(m) == EOSIO else eth_det
    findings = det.detect_all(m, session=session)
    return m, session, findings


def flagged(findings):
    return {f.kind for f in findings if f.verdict}


# -- criteria: each returns (ok, detail) ---------------------------------------

def criterion_1(solver):
    start = time.perf_counter()
    fp, fn = [], []
    for vuln, fixed, kind in FIXTURE_PAIRS:
        got_v = flagged(verdicts(EOSIO_DIR / f"{vuln}.wasm", solver)[2])
        got_f = flagged(verdicts(EOSIO_DIR / f"{fixed}.wasm", solver)[2])
        if got_v != {kind}:
            (fn if kind not in got_v else fp).append(vuln)
        if got_f:
            fp.append(fixed)
    elapsed = time.perf_counter() - start
    ok = not fp and not fn and elapsed < 30.0
    return ok, f"{len(FIXTURE_PAIRS)} pairs, FP {len(fp)} FN {len(fn)}, {elapsed:.2f} s (< 30 s) {fp + fn or ''}"


def criterion_2(solver):
    per_kind = {}
    wrong = []
    for stem, want in ETH_EXPECTED.items():
        got = flagged(verdicts(ETH_DIR / f"{stem}.wasm", solver)[2])
        if got != want:
            wrong.append(stem)
        kind = {"greedy": "Greedy", "delegate": "DangerousDelegateCall", "bid": "EthBlockInfoDependency"}[
            stem.split("_")[0]]
        v, f = per_kind.get(kind, (0, 0))
        per_kind[kind] = (v + 1, f) if want else (v, f + 1)
    shape = all(v >= 3 and f >= 2 for v, f in per_kind.values()) and len(per_kind) == 3
    counts = ", ".join(f"{k} {v}/{f}" for k, (v, f) in sorted(per_kind.items()))
    return shape and not wrong, f"vulnerable/fixed: {counts}; mismatches {wrong or 0}"


def criterion_3(solver):
    worst = (0.0, None, None)
    for depth in (10, 20, 50):
        for path in sorted(EXPECTED):
            start = time.perf_counter()
            verdicts(path, solver, loop_bound=depth)
            t = time.perf_counter() - start
            if t > worst[0]:
                worst = (t, path.stem, depth)
    t, stem, depth = worst
    return t < 2.0, f"slowest {t:.3f} s ({stem}, depth {depth}) over {len(EXPECTED)} fixtures x 3 depths"


def criterion_4(solver):
    exact = encode_name("eosio.token") == 6138663591592764928 and signed64(
        encode_name("transfer")) == -3617168760277827584
    alphabet = ".12345abcdefghijklmnopqrstuvwxyz"

    def decode(v):
        bits = format(v, "064b")
        return "".join(alphabet[int(bits[5 * i:5 * i + 5], 2)] for i in range(12)).rstrip(".")

    rng = random.Random(4)
    bad = 0
    for _ in range(1000):
        n = rng.randint(1, 12)
        name = "".join(rng.choice(alphabet) for _ in range(n - 1)) + rng.choice(alphabet[1:])
        bad += decode(encode_name(name)) != name
    return exact and not bad, f"constants exact: {exact}; round-trip failures {bad}/1000"


def criterion_5(solver):
    import wasmtime
    from test_differential import PROGRAMS, Gen, engine_memory, reference_run

    from wasmsym.decoder import decode_module
    from wasmsym.expr import Const
    from wasmsym.module import export_lookup

    mismatches = []
    for seed in range(PROGRAMS):
        wasm = wasmtime.wat2wasm(Gen(seed).program())
        r = random.Random(seed)
        a0 = r.choice([0, 1, -1, r.getrandbits(31)])
        a1 = r.choice([0, 3, -(1 << 63), r.getrandbits(63)])
        status, result, mem, globals_ = reference_run(wasm, (a0, a1))
        m = decode_module(wasm)
        paths = explore(m, export_lookup(m, "main"), ExploreConfig(), args=[a0 & 0xFFFFFFFF, a1 % 2**64],
                        solver=solver)
        p = paths[0]
        same = (
            len(paths) == 1
            and p.status == status
            and (result is None or p.stack == [Const(64, result % 2**64)])
            and p.globals == [Const(w, g % 2**w) for w, g in zip((32, 64, 32), globals_)]
            and engine_memory(p) == mem
        )
        if not same:
            mismatches.append(seed)
    return PROGRAMS >= 100 and not mismatches, f"{PROGRAMS} programs, mismatches {mismatches or 0}"


def criterion_6(solver):
    n_paths = unsat = witnesses = failed = 0
    for path in sorted(EXPECTED):
        m, session, findings = verdicts(path, solver)
        for paths, _ in session._cache.values():
            for p in paths:
                n_paths += 1
                unsat += solver.check(p.conditions).status == UNSAT
        for f in findings:
            if f.verdict and f.witness is not None:
                witnesses += 1
                failed += not replay(m, f.witness, session.config, solver)
    ok = unsat == 0 and failed == 0 and witnesses > 0
    return ok, f"{n_paths} paths, {unsat} unsat; {witnesses} witnesses, {failed} failed replay"


def criterion_7(solver):
    m = load(FIXTURES / "engine" / "loop_forever.wasm")
    seen = {}
    for bound in (1, 10, 50):
        paths = explore(m, 0, ExploreConfig(loop_bound=bound), solver=solver)
        seen[bound] = [(p.status, sorted(p.loop_counts.values())) for p in paths]
    ok = all(v == [(EXHAUSTED, [b])] for b, v in seen.items())
    return ok, "counters " + ", ".join(f"bound {b} -> {v[0][1]}" for b, v in seen.items())


def criterion_8(solver):
    cfg = RunConfig(seed=0, timings=False)
    a = to_json(run_corpus([str(EOSIO_DIR), str(ETH_DIR)], cfg))
    b = to_json(run_corpus([str(EOSIO_DIR), str(ETH_DIR)], cfg))
    return a == b, f"{len(a)} bytes, identical: {a == b}"


CRITERIA = [
    (1, "EOSIO fixture pairs, zero FP/FN, suite < 30 s", criterion_1),
    (2, "Ethereum fixtures, >=3 vulnerable + >=2 fixed per kind", criterion_2),
    (3, "every fixture < 2 s at loop depth 10, 20, 50", criterion_3),
    (4, "name encoding constants and 1,000-case round trip", criterion_4),
    (5, "engine vs reference interpreter on >=100 programs", criterion_5),
    (6, "returned paths feasible, witnesses replay", criterion_6),
    (7, "unconditional loop counter equals bound for 1, 10, 50", criterion_7),
    (8, "byte-identical JSON across two corpus runs", criterion_8),
]


def _line(n, title, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} | {detail}"


@pytest.mark.parametrize("n, title, fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(n, title, fn, solver, capsys):
    ok, detail = fn(solver)
    with capsys.disabled():
        print("\n" + _line(n, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    s = default_solver()
    results = [(n, t, *fn(s)) for n, t, fn in CRITERIA]
    for r in results:
        print(_line(*r))
    sys.exit(0 if all(r[2] for r in results) else 1)
