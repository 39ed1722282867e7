import json
import shutil

import pytest

from conftest import EOSIO_DIR, ETH_DIR
from wasmsym.cli import main
from wasmsym.report import RunConfig, UsageError, exit_code, run_corpus, run_file, to_json, to_text

HEADER = b"\x00asm\x01\x00\x00\x00"


def test_fake_transfer_entry():
    e = run_file(str(EOSIO_DIR / "fake_transfer_dispatch.wasm"))
    assert e["platform"] == "eosio" and e["status"] == "ok"
    verdicts = {f["kind"]: f["verdict"] for f in e["findings"]}
    assert verdicts == {"FakeEosTransfer": True, "ForgedTransferNotification": False, "BlockInfoDependency": False}
    assert e["module"]["functions"] > 0 and e["module"]["instructions"] > 0


def test_bid_witness_sites():
    e = run_file(str(EOSIO_DIR / "bid_tapos_lottery.wasm"))
    (bid,) = [f for f in e["findings"] if f["kind"] == "BlockInfoDependency"]
    assert bid["verdict"]
    assert [s["kind"] for s in bid["witness"]["sites"]] == ["BlockInfoRead", "Send"]


def test_empty_module_is_platform_error(tmp_path):
    p = tmp_path / "empty.wasm"
    p.write_bytes(HEADER)
    e = run_file(str(p))
    assert e["status"] == "error" and "PlatformError" in e["error"]


def test_bad_file_does_not_abort_corpus(tmp_path):
    shutil.copy(EOSIO_DIR / "fake_transfer_dispatch.wasm", tmp_path / "a.wasm")
    (tmp_path / "b.wasm").write_bytes(b"garbage!")
    report = run_corpus(str(tmp_path))
    statuses = [c["status"] for c in report["contracts"]]
    assert statuses == ["ok", "error"]
    assert exit_code(report) == 2
    assert report["summary"]["platforms"]["eosio"]["analyzed"] == 1


def test_timings_positive_and_total_dominates():
    e = run_file(str(ETH_DIR / "greedy_deposit.wasm"))
    t = e["timing_ms"]
    assert all(v > 0 for v in t.values())
    assert t["total"] >= max(t["decode"], t["explore"], t["solve"])


def test_eosio_corpus_summary():
    report = run_corpus(str(EOSIO_DIR), RunConfig(timings=False))
    s = report["summary"]["platforms"]["eosio"]
    assert s["analyzed"] == 10
    assert sum(v["count"] for v in s["findings"].values()) == 5
    assert s["findings"]["FakeEosTransfer"] == {"count": 2, "percentage": 20.0}
    for c in report["contracts"]:
        if "fixed" in c["file"]:
            assert not any(f["verdict"] for f in c["findings"])


def test_single_file_corpus_summary():
    path = str(ETH_DIR / "greedy_deposit.wasm")
    report = run_corpus([path], RunConfig(timings=False))
    (entry,) = report["contracts"]
    assert entry == run_file(path, RunConfig(timings=False))
    eth = report["summary"]["platforms"]["ethereum"]
    assert eth["analyzed"] == 1 and eth["findings"]["Greedy"] == {"count": 1, "percentage": 100.0}


def test_mixed_corpus_split_per_platform():
    report = run_corpus([str(EOSIO_DIR), str(ETH_DIR)], RunConfig(timings=False))
    p = report["summary"]["platforms"]
    assert p["eosio"]["contracts"] == 10 and p["ethereum"]["contracts"] == 16
    assert set(p["ethereum"]["findings"]) == {"Greedy", "DangerousDelegateCall", "EthBlockInfoDependency"}


def test_json_round_trip():
    report = run_corpus([str(EOSIO_DIR), str(ETH_DIR)])
    assert json.loads(to_json(report)) == report
    for c in report["contracts"]:
        for f in c["findings"]:
            if f["verdict"]:
                assert f["witness"]["sites"]


def test_empty_directory_is_usage_error(tmp_path):
    with pytest.raises(UsageError):
        run_corpus(str(tmp_path))
    assert main([str(tmp_path)]) == 2


def test_config_defaults():
    c = RunConfig()
    assert (c.platform, c.loop_depth, c.seed, c.timeout) == ("auto", 10, 0, 60.0)
    with pytest.raises(UsageError):
        RunConfig(loop_depth=0)


def test_forced_platform():
    e = run_file(str(ETH_DIR / "greedy_deposit.wasm"), RunConfig(platform="eosio"))
    assert e["platform"] == "eosio"
    assert not any(f["verdict"] for f in e["findings"])
    assert any("NoApplyExport" in n for f in e["findings"] for n in f["notes"])


def test_timeout_marks_entry():
    e = run_file(str(EOSIO_DIR / "bid_tapos_lottery.wasm"), RunConfig(timeout=0.0))
    assert e["status"] == "timeout"


def test_cli_exit_codes_and_output(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main([str(ETH_DIR / "greedy_fixed_withdraw.wasm"), "--format", "json", "--output", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["summary"]["vulnerable_contracts"] == 0
    assert main([str(ETH_DIR / "greedy_deposit.wasm")]) == 1
    assert "Greedy" in capsys.readouterr().out


def test_text_format():
    text = to_text(run_corpus(str(EOSIO_DIR)))
    assert "VULNERABLE" in text and "eosio: 10 analyzed" in text


def test_solver_env_fallback(monkeypatch, tmp_path):
    monkeypatch.setenv("WANA_SOLVER", "/nonexistent/solver")
    from wasmsym import report

    monkeypatch.setattr(report, "_solvers", {})
    e = run_file(str(EOSIO_DIR / "fake_transfer_dispatch.wasm"))
    assert e["status"] == "error" and "SolverUnavailable" in e["error"]


def test_parallel_matches_serial():
    cfg = dict(timings=False)
    serial = run_corpus(str(ETH_DIR), RunConfig(**cfg))
    parallel = run_corpus(str(ETH_DIR), RunConfig(jobs=2, **cfg))
    assert to_json(serial) == to_json(parallel)


def test_determinism_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = [str(EOSIO_DIR), str(ETH_DIR), "--format", "json", "--no-timings", "--seed", "7"]
    main(args + ["--output", str(a)])
    main(args + ["--output", str(b)])
    assert a.read_bytes() == b.read_bytes()
