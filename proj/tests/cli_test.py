#!/usr/bin/env python3
# Copyright 2026 The tiltlab Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the tiltlab command line tool."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

TOOL = sys.argv[1]
SCHEMA = json.loads(pathlib.Path(sys.argv[2]).read_text())
failures = []


def run(*args):
    return subprocess.run([TOOL, *args], capture_output=True, text=True, timeout=600)


def expect(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


r = run("dice", "--target", "6.5")
expect(r.returncode == 2 and "outside convex hull" in r.stderr, "dice target 6.5 exits 2")

r = run("no-such-experiment")
expect(r.returncode == 2 and "experiments:" in r.stderr, "unknown experiment exits 2 with usage")

r = run("bernoulli", "--seed", "abc")
expect(r.returncode == 2, "malformed flag value exits 2")

r = run("dice")
expect(r.returncode == 1 and "FAIL p5" in r.stderr, "dice reference p5 check fails, exit 1")

quick = {
    "dice": ["--target", "3.5"],
    "dice-concentration": ["--samples", "20000"],
    "bernoulli": [],
    "theorem1": [],
    "windows": ["--samples", "20000"],
    "gsm": ["--samples", "5000", "--replicates", "100", "--n-grid", "100"],
    "cf-check": ["--samples", "20000"],
}
for name, extra in quick.items():
    a = run(name, *extra, "--threads", "1")
    b = run(name, *extra, "--threads", "4")
    expect(a.returncode in (0, 1), f"{name} runs")
    c = run(name, *extra, "--threads", "1")
    expect(a.stdout == c.stdout, f"{name} output byte-identical across runs")
    ja, jb = json.loads(a.stdout), json.loads(b.stdout)
    del ja["config"]["threads"], jb["config"]["threads"]
    expect(ja == jb, f"{name} results identical across thread counts")
    try:
        jsonschema.validate(json.loads(a.stdout), SCHEMA)
        expect(True, f"{name} report matches the schema")
    except (jsonschema.ValidationError, json.JSONDecodeError) as e:
        expect(False, f"{name} report matches the schema: {e}")

r = run("bernoulli")
expect(r.returncode == 0, "bernoulli default exits 0")

r = run("dice", "--timing")
expect("wall_clock_seconds" in json.loads(r.stdout), "--timing adds wall clock")

with tempfile.TemporaryDirectory() as tmp:
    cfg = pathlib.Path(tmp) / "run.cfg"
    p = run("theorem1", "--print-config")
    cfg.write_text(p.stdout)
    a = run("--config", str(cfg))
    b = run("theorem1")
    expect(a.stdout == b.stdout and a.returncode == 0, "printed config reproduces the run")

    c = run("bernoulli", "--config", str(cfg))
    expect(json.loads(c.stdout)["experiment"] == "bernoulli", "flags override the config file")

    out = pathlib.Path(tmp) / "w.csv"
    r = run("windows", "--samples", "20000", "--format", "csv", "--out", str(out))
    expect(out.read_text().startswith("n,epsilon,tv_estimate"), "csv primary table")
    expect((pathlib.Path(tmp) / "w_oracle.csv").exists(), "csv sibling table")
    expect((pathlib.Path(tmp) / "w_checks.csv").exists(), "csv checks file")

r = run("--version")
expect(r.returncode == 0 and r.stdout.startswith("tiltlab "), "--version")

sys.exit(1 if failures else 0)
