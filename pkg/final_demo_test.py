#!/usr/bin/env python3
"""
FINAL DEMO TEST - Mertens function toolkit
==========================================

Drives every ``mertens.py`` subcommand end to end in a scratch directory
and prints a PASS/FAIL line per step.

Usage:
    python final_demo_test.py [--zeros N]

This demo covers:
- Segmented sieve with checkpoint, interruption and resume
- Isolated values with the nested check and the alternative identity
- q~ evaluation against the exact value
- Lattice bound search and certificate re-verification
- Zero statistics over a sieve event stream
- Exit codes for bad input and missing files
"""

import json
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import mpmath

from mertens_lib.zeros import ZeroRecord, format_zeros

SCRIPT = Path(__file__).resolve().parent / "mertens.py"


def make_zeros_file(path, count, digits=40):
    """Write the first ``count`` zeta zeros with zeta' values at ``digits`` digits."""
    records = []
    with mpmath.workdps(digits + 5):
        for k in range(1, count + 1):
            rho = mpmath.zetazero(k)
            d = mpmath.zeta(rho, derivative=1)
            records.append(ZeroRecord(
                index=k,
                gamma=mpmath.nstr(rho.imag, digits, strip_zeros=False),
                zeta_prime=(mpmath.nstr(d.real, digits, strip_zeros=False),
                            mpmath.nstr(d.imag, digits, strip_zeros=False)),
                precision_digits=digits,
            ))
    path.write_text(format_zeros(records, digits))
    return path


class FinalDemoTest:
    def __init__(self, zeros_count=12):
        self.zeros_count = zeros_count
        self.test_results = []
        self.workdir = None

    def log_test(self, test_name, success, details=""):
        """Log test result."""
        status = "PASS" if success else "FAIL"
        self.test_results.append((test_name, success, details))
        print(f"{status} {test_name}")
        if details:
            print(f"    {details}")

    def run(self, *args):
        """Run one subcommand; returns (exit code, stdout)."""
        proc = subprocess.run([sys.executable, str(SCRIPT), "-q", *args],
                              capture_output=True, text=True, cwd=self.workdir)
        return proc.returncode, proc.stdout

    def path(self, name):
        return Path(self.workdir) / name

    def test_sieve_and_resume(self):
        print("\n" + "="*60)
        print("SEGMENTED SIEVE")
        print("="*60)

        events = self.path("events.jsonl")
        ckpt = self.path("run.ckpt")
        args = ["sieve", "--limit", "10^6", "--checkpoint", str(ckpt), "--out", str(events)]
        code, _ = self.run(*args, "--max-blocks", "3")
        self.log_test("Partial sieve stops early", code == 0 and ckpt.exists())

        code, _ = self.run(*args, "--resume")
        lines = [json.loads(line) for line in events.read_text().splitlines() if line]
        summary = lines[-1] if lines else {}
        self.log_test("Resumed sieve completes", code == 0 and summary.get("M") == 212,
                      f"M(10^6) = {summary.get('M')}, zeros = {summary.get('zeros')}")

    def test_isolated_values(self):
        print("\n" + "="*60)
        print("ISOLATED VALUES")
        print("="*60)

        for x, expected in (("2^20", 257), ("2^24", 211), ("10^6", 212)):
            code, out = self.run("mertens", "--x", x, "--json", "--verify-nested")
            payload = json.loads(out) if code == 0 else {}
            nested_ok = payload.get("nested", {}).get("ok")
            self.log_test(f"M({x}) = {expected}", payload.get("M") == expected and nested_ok,
                          f"got {payload.get('M')}, nested ok = {nested_ok}")

        code, out = self.run("mertens", "--x", "10^4", "--alt-identity", "derived")
        alt = json.loads(out).get("alt_identity", {}) if code == 0 else {}
        self.log_test("Alternative identity agrees", alt.get("agrees") is True)

    def test_qtilde(self, zeros):
        print("\n" + "="*60)
        print("q~ FROM ZETA ZEROS")
        print("="*60)

        code, out = self.run("qtilde", "--zeros", str(zeros), "--N", str(self.zeros_count),
                             "--x", "10^6", "--x", "2^20", "--compare")
        points = json.loads(out).get("points", []) if code == 0 else []
        self.log_test("q~ evaluated with exact comparison", len(points) == 2,
                      ", ".join(f"x={p['x']} q~={p['q_tilde']:.3f} q={p['q']:.3f}" for p in points))

    def test_bounds(self, zeros):
        print("\n" + "="*60)
        print("LATTICE BOUND SEARCH")
        print("="*60)

        cert = self.path("cert.json")
        started = time.time()
        code, _ = self.run("bounds", "--zeros", str(zeros), "--N", "8", "--nu", "40",
                           "--eval-N", str(self.zeros_count), "--out", str(cert))
        data = json.loads(cert.read_text()) if code == 0 else {}
        self.log_test("Upper-direction certificate written", data.get("direction") == "upper",
                      f"h = {data.get('h_value')} in {time.time() - started:.1f}s")

        code, _ = self.run("verify-cert", str(cert), "--out", str(self.path("check.json")))
        self.log_test("Certificate re-verifies", code == 0)

        data["h_value"] = str(float(data.get("h_value", 0)) + 1)
        cert.write_text(json.dumps(data))
        code, _ = self.run("verify-cert", str(cert), "--out", str(self.path("check.json")))
        self.log_test("Tampered certificate is rejected", code == 1, f"exit code {code}")

    def test_zero_stats(self):
        print("\n" + "="*60)
        print("ZERO STATISTICS")
        print("="*60)

        events = str(self.path("events.jsonl"))
        code, out = self.run("zero-stats", "--zeros", events, "vcount", "--x", "10^6")
        count = json.loads(out).get("V") if code == 0 else None
        self.log_test("V(10^6) = 5361", count == 5361, f"got {count}")

        code, out = self.run("zero-stats", "--zeros", events, "band", "--g", "5", "--m", "1000")
        report = json.loads(out).get("band_ratio", {}) if code == 0 else {}
        self.log_test("Band ratio computed", code == 0, f"mean ratio {report.get('mean_ratio')}")

    def test_error_handling(self):
        print("\n" + "="*60)
        print("ERROR HANDLING")
        print("="*60)

        code, _ = self.run("mertens", "--x", "0")
        self.log_test("Bad parameter gives exit 2", code == 2, f"exit code {code}")
        code, _ = self.run("qtilde", "--zeros", "absent.txt", "--N", "5", "--x", "100")
        self.log_test("Missing zeros file gives exit 3", code == 3, f"exit code {code}")
        bad = self.path("bad.ckpt")
        bad.write_bytes(b"not a checkpoint")
        code, _ = self.run("sieve", "--limit", "10^6", "--checkpoint", str(bad), "--resume")
        self.log_test("Corrupt checkpoint gives exit 3", code == 3, f"exit code {code}")

    def run_all_tests(self):
        """Run all demo steps."""
        print("Mertens toolkit - final demo")
        with tempfile.TemporaryDirectory() as workdir:
            self.workdir = workdir
            print(f"Computing {self.zeros_count} zeta zeros...")
            zeros = make_zeros_file(self.path("zeros.txt"), self.zeros_count)

            self.test_sieve_and_resume()
            self.test_isolated_values()
            self.test_qtilde(zeros)
            self.test_bounds(zeros)
            self.test_zero_stats()
            self.test_error_handling()

            self.display_results()
        return all(success for _, success, _ in self.test_results)

    def display_results(self):
        """Display test results summary."""
        print("\n" + "="*60)
        print("TEST RESULTS SUMMARY")
        print("="*60)

        total_tests = len(self.test_results)
        passed_tests = sum(1 for _, success, _ in self.test_results if success)
        failed_tests = total_tests - passed_tests

        print(f"Total Tests: {total_tests}")
        print(f"Passed: {passed_tests}")
        print(f"Failed: {failed_tests}")
        print(f"Success Rate: {(passed_tests/total_tests)*100:.1f}%")

        if failed_tests > 0:
            print("\nFAILED TESTS:")
            for test_name, success, details in self.test_results:
                if not success:
                    print(f"  - {test_name}: {details}")

        print("\n" + "="*60)
        if failed_tests == 0:
            print("ALL TESTS PASSED!")
        else:
            print("Some tests failed. Check the details above.")
        print("="*60)


def main():
    """Main function."""
    count = 12
    if len(sys.argv) > 2 and sys.argv[1] == "--zeros":
        count = int(sys.argv[2])
    demo = FinalDemoTest(zeros_count=count)
    sys.exit(0 if demo.run_all_tests() else 1)


if __name__ == "__main__":
    main()
