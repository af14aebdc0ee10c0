#!/usr/bin/env python3
"""End-to-end checks of the intcheck command line on the catalog systems.

usage: check_reports.py INTCHECK SOURCE_DIR
"""

import copy
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

EXPECTED_EXIT = {
    "oscillator": 0,
    "two_oscillators": 0,
    "free_particle": 0,
    "cylinder": 0,
    "central_field": 0,
    "canonical_pair": 2,
    "malformed": 1,
}

failures = []


def check(ok, what):
    print(("ok   " if ok else "FAIL ") + what)
    if not ok:
        failures.append(what)


def run(*args):
    return subprocess.run([INTCHECK, *map(str, args)], capture_output=True, text=True)


def without_timing(report):
    r = copy.deepcopy(report)
    r.pop("timing", None)
    return r


def main():
    global INTCHECK
    INTCHECK, source = sys.argv[1], pathlib.Path(sys.argv[2])
    catalog = source / "catalog"

    schema_proc = run("report", "--schema")
    check(schema_proc.returncode == 0, "report --schema exits 0")
    schema = json.loads(schema_proc.stdout)
    check(schema == json.loads((source / "docs" / "report.schema.json").read_text()),
          "report --schema matches docs/report.schema.json")
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    reports = {}
    for name, code in EXPECTED_EXIT.items():
        spec = catalog / f"{name}.spec"
        first = run("check", spec)
        check(first.returncode == code, f"{name}: exit code {first.returncode} (expected {code})")
        if code == 1:
            continue
        report = json.loads(first.stdout)
        reports[name] = report
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        check(not errors, f"{name}: report validates against the schema"
              + ("" if not errors else f" ({errors[0].message} at {list(errors[0].path)})"))
        check(report["exit_code"] == code, f"{name}: exit_code field matches the process")
        if name != "central_field":
            second = run("check", spec)
            check(without_timing(json.loads(second.stdout)) == without_timing(report),
                  f"{name}: reports are identical apart from timing")

    serial = run("check", catalog / "two_oscillators.spec", "--serial")
    check(without_timing(json.loads(serial.stdout)) == without_timing(reports["two_oscillators"]),
          "two_oscillators: --serial report equals the parallel report")

    osc = reports["oscillator"]["stages"]
    check(abs(osc["action_angle"]["actions"][0] - 0.5) < 1e-6, "oscillator: action I = 0.5 within 1e-6")
    check(osc["lattice"]["fiber"] == "T^1" and abs(osc["lattice"]["basis"][0][0] - 6.283185307179586) < 1e-8,
          "oscillator: lattice basis 2 pi")
    check(osc["action_angle"]["darboux"]["passed"], "oscillator: Darboux residual within tolerance")

    pair = reports["canonical_pair"]["stages"]["structure"]
    check(pair["worst_pair"] == [1, 2], "canonical_pair: worst pair (1,2)")
    check(reports["canonical_pair"]["status"] == "failed", "canonical_pair: status failed")

    check(reports["free_particle"]["stages"]["lattice"]["h"] == 0, "free_particle: h = 0")
    check(reports["cylinder"]["stages"]["lattice"]["fiber"] == "R^1 x T^1", "cylinder: fiber R^1 x T^1")
    central = reports["central_field"]["stages"]
    check(central["structure"]["test"] == "closure" and central["structure"]["status"] == "passed",
          "central_field: closure stage passed")

    bad = run("check", catalog / "malformed.spec")
    check("malformed.spec:6:" in bad.stderr and "offset 15" in bad.stderr,
          "malformed: error names line 6 and offset 15")
    check(run("check", catalog / "missing.spec").returncode == 1, "missing spec file: exit 1")
    check(run("check", catalog / "oscillator.spec", "--samples", "abc").returncode != 0, "bad flag value rejected")

    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        proc = run("check", catalog / "oscillator.spec", "--out", out)
        written = out / "oscillator.report.json"
        check(proc.returncode == 0 and written.exists(), "--out writes oscillator.report.json")
        if written.exists():
            check(without_timing(json.loads(written.read_text())) == without_timing(reports["oscillator"]),
                  "--out report equals the stdout report")

        flow = run("flow", catalog / "oscillator.spec", "--field", "H", "--t", "6.283185307179586")
        lines = flow.stdout.strip().splitlines()
        check(flow.returncode == 0 and lines[0] == "t,x1,x2", "flow: CSV header t,x1,x2")
        last = [float(v) for v in lines[-1].split(",")]
        check(abs(last[0] - 6.283185307179586) < 1e-12 and abs(last[1] - 1) < 1e-8 and abs(last[2]) < 1e-8,
              "flow: oscillator returns to the base point after 2 pi")
        check(run("flow", catalog / "oscillator.spec", "--field", "K", "--t", "1").returncode == 1,
              "flow: unknown field is an input error")

        lat = run("lattice", catalog / "cylinder.spec", "--out", out)
        lat_file = out / "cylinder.lattice.json"
        check(lat.returncode == 0 and lat_file.exists(), "lattice: writes cylinder.lattice.json")
        if lat_file.exists():
            stages = json.loads(lat_file.read_text())["stages"]
            check(set(stages) == {"structure", "lattice"} and stages["lattice"]["h"] == 1,
                  "lattice: structure and lattice stages only, h = 1")

    if failures:
        print(f"{len(failures)} check(s) failed")
        return 1
    print("all CLI checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
