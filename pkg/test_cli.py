import argparse
import json
import subprocess
import sys
from pathlib import Path

import mpmath
import pytest

import mertens
from mertens import EXIT_DATA, EXIT_FAILED, EXIT_OK, EXIT_USAGE, main, parse_int
from mertens_lib.sieve import mertens_table


def _events(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line]


@pytest.fixture
def events_file(tmp_path):
    path = tmp_path / "events.jsonl"
    assert main(["sieve", "--limit", "10^5", "--block-len", "13860", "--stride", "10000",
                 "--out", str(path)]) == EXIT_OK
    return path


def test_parse_int_forms():
    assert parse_int("2^40") == 1 << 40
    assert parse_int("2**10") == 1024
    assert parse_int("1e9") == 10**9
    assert parse_int("12345") == 12345
    with pytest.raises(argparse.ArgumentTypeError):
        parse_int("ten")


def test_help_and_usage_errors():
    assert main(["--help"]) == EXIT_OK
    assert main([]) == EXIT_USAGE
    assert main(["mertens", "--bogus"]) == EXIT_USAGE
    assert main(["mertens", "--x", "ten"]) == EXIT_USAGE
    assert main(["mertens", "--x", "0"]) == EXIT_USAGE
    assert main(["mertens", "--x", "100", "--u", "5"]) == EXIT_USAGE
    assert main(["sieve", "--limit", "1000", "--resume"]) == EXIT_USAGE
    assert main(["bounds", "--zeros", "z.txt", "--N", "25", "--nu", "40"]) == EXIT_USAGE


def test_thread_count_from_environment(monkeypatch):
    monkeypatch.setenv("MERTENS_THREADS", "0")
    assert main(["mertens", "--x", "100"]) == EXIT_USAGE
    monkeypatch.setenv("MERTENS_THREADS", "2")
    assert main(["mertens", "--x", "100", "--out", "-"]) == EXIT_OK


def test_isolated_value(capsys):
    assert main(["-q", "mertens", "--x", "1048576"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["x"] == 1048576
    assert payload["M"] == 257
    assert payload["q"] == pytest.approx(257 / 1024)


def test_compact_json_and_nested_check(capsys):
    assert main(["-q", "mertens", "--x", "2^24", "--json", "--verify-nested"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("\n") == 1
    payload = json.loads(out)
    assert payload["M"] == 211
    assert payload["nested"] == {"x": 2**17, "M": -20, "ok": True}


@pytest.mark.parametrize("x, nested", [(100, {"x": 0, "M": 0, "ok": True}),
                                       (500, {"x": 3, "M": -1, "ok": True})])
def test_nested_check_below_the_divisor(capsys, x, nested):
    assert main(["-q", "mertens", "--x", str(x), "--json", "--verify-nested"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["M"] == int(mertens_table(x)[x])
    assert payload["nested"] == nested


def test_alternative_identity_flag(capsys):
    assert main(["-q", "mertens", "--x", "1000", "--alt-identity", "derived"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["alt_identity"]["agrees"] is True
    assert payload["alt_identity"]["value"] == 2


def test_sieve_writes_event_stream(tmp_path):
    path = tmp_path / "small.jsonl"
    assert main(["sieve", "--limit", "1000", "--block-len", "13860", "--out", str(path)]) == EXIT_OK
    events = _events(path)
    assert sum(e["kind"] == "zero" for e in events) == 92
    summary = events[-1]
    assert summary["kind"] == "summary"
    assert (summary["n"], summary["M"], summary["zeros"]) == (1000, 2, 92)
    assert summary["max"] == max(e["M"] for e in events if e["kind"] == "extremum")


def test_interrupted_sieve_resumes(tmp_path):
    out = tmp_path / "out.jsonl"
    ckpt = tmp_path / "run.ckpt"
    args = ["sieve", "--limit", "50000", "--block-len", "13860", "--checkpoint", str(ckpt), "--out", str(out)]
    assert main(args + ["--max-blocks", "2"]) == EXIT_OK
    assert all(e["kind"] != "summary" for e in _events(out))
    assert main(args + ["--resume"]) == EXIT_OK
    assert _events(out)[-1]["M"] == mertens_table(50000)[-1]


def test_zero_stats_actions(events_file, tmp_path, capsys):
    assert main(["-q", "zero-stats", "--zeros", str(events_file), "vcount", "--x", "1000"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"x": 1000, "V": 92}

    assert main(["-q", "zero-stats", "--zeros", str(events_file), "positivity", "--x", "10"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["numerator"] == 1

    csv_path = tmp_path / "gaps.csv"
    assert main(["zero-stats", "--zeros", str(events_file), "--csv", "--out", str(csv_path),
                 "gaps", "--m", "50"]) == EXIT_OK
    assert csv_path.read_text().splitlines()[0] == "g,count,multiplier"

    assert main(["-q", "zero-stats", "band", "--g", "37"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == {"g": 37, "primes": [2, 3], "multiplier": "12/7"}


def test_zero_stats_errors(events_file):
    assert main(["zero-stats", "vcount", "--x", "10"]) == EXIT_USAGE
    assert main(["zero-stats", "--zeros", str(events_file), "vcount", "--x", "10^6"]) == EXIT_USAGE
    assert main(["zero-stats", "--zeros", "/nonexistent.jsonl", "vcount", "--x", "10"]) == EXIT_DATA


def test_qtilde_compare(zeros_file, capsys):
    path = zeros_file(10)
    assert main(["-q", "qtilde", "--zeros", str(path), "--N", "10", "--x", "1e6", "--x", "2^20",
                 "--compare", "--trivial-terms", "3"]) == EXIT_OK
    points = json.loads(capsys.readouterr().out)["points"]
    assert [p["M"] for p in points] == [212, 257]
    for p in points:
        assert abs(p["q_tilde"]) < 2
        assert p["error"] == pytest.approx(p["q_tilde"] - p["q"])
    assert main(["qtilde", "--zeros", str(path), "--N", "11", "--x", "100"]) == EXIT_USAGE
    assert main(["qtilde", "--zeros", "/nonexistent.txt", "--N", "5", "--x", "100"]) == EXIT_DATA


def test_bounds_and_certificate_check(zeros_file, tmp_path):
    zeros = zeros_file(10)
    cert = tmp_path / "cert.json"
    assert main(["bounds", "--zeros", str(zeros), "--N", "8", "--nu", "40", "--eval-N", "8",
                 "--baseline-samples", "100", "--out", str(cert)]) == EXIT_OK
    data = json.loads(cert.read_text())
    assert data["direction"] == "upper"
    assert data["zeros_file"] == str(zeros)

    report = tmp_path / "check.json"
    assert main(["verify-cert", str(cert), "--out", str(report)]) == EXIT_OK
    assert json.loads(report.read_text())["ok"] is True

    data["h_value"] = mpmath.nstr(mpmath.mpf(data["h_value"]) + 1, 20)
    cert.write_text(json.dumps(data))
    assert main(["verify-cert", str(cert), "--out", str(report)]) == EXIT_FAILED
    assert main(["verify-cert", str(tmp_path / "absent.json")]) == EXIT_DATA


def test_commands_table_covers_every_subcommand():
    assert set(mertens.COMMANDS) == {"sieve", "mertens", "bounds", "qtilde", "zero-stats",
                                     "verify", "verify-cert"}


@pytest.mark.slow
def test_quick_verification(tmp_path):
    out = tmp_path / "verify.json"
    assert main(["verify", "--level", "quick", "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["pass"] is True
    assert "M(2^20)=257" in [c["name"] for c in report["checks"]]


@pytest.mark.slow
def test_full_verification(tmp_path, zeros_file):
    out = tmp_path / "verify.json"
    assert main(["-q", "--threads", "4", "verify", "--level", "full", "--zeros", str(zeros_file(200)),
                 "--out", str(out)]) == EXIT_OK
    report = json.loads(out.read_text())
    names = [c["name"] for c in report["checks"]]
    assert report["pass"] is True
    assert "M(2^40)=101597" in names
    assert "M(7766842813)=50286" in names
    assert "V(10^7)=41908" in names
    assert any(name.startswith("|q~ - q|") for name in names)


@pytest.mark.slow
def test_end_to_end_demo():
    demo = Path(__file__).resolve().parent / "final_demo_test.py"
    proc = subprocess.run([sys.executable, str(demo)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout[-2000:]
    assert "ALL TESTS PASSED!" in proc.stdout
