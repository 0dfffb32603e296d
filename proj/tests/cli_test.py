import json
import shutil
import subprocess
import sys
from pathlib import Path
from xml.dom import minidom

exe, work = sys.argv[1], Path(sys.argv[2])
shutil.rmtree(work, ignore_errors=True)
work.mkdir(parents=True)
failed = []


def run(*args):
    return subprocess.run([exe, *args], capture_output=True, text=True)


def check(name, cond, detail=""):
    print(("ok   " if cond else "FAIL ") + name + (" " + detail if detail else ""))
    if not cond:
        failed.append(name)


r = run("domain", "info", "ball(2)")
check("domain info exit", r.returncode == 0, r.stderr)
info = json.loads(r.stdout)
check("ball quasimetric constant", info["quasimetric_constant"] == 1.0)
check("ball nu", abs(info["boundary_probe"]["nu"] - 1 / 64) < 1e-12)

r = run("domain", "info", "model(2, alpha=[1], beta=[0.6])")
check("model info exit", r.returncode == 0, r.stderr)

r = run("selftest", "oracles")
check("selftest exit", r.returncode == 0, r.stdout)

check("missing subcommand exit 2", run().returncode == 2)
check("unknown flag exit 2", run("experiment", "run", "--bogus").returncode == 2)

bad = work / "bad.toml"
bad.write_text('n_grid = [300, 200]\n')
check("bad config exit 2", run("experiment", "run", "--config", str(bad)).returncode == 2)
check("missing config exit 2", run("experiment", "run", "--config", str(work / "nope.toml")).returncode == 2)

cfg = work / "mini.toml"
cfg.write_text(
    "[experiment]\n"
    'domain = "ball(2)"\n'
    'g = {kind = "const", c = 3.0}\n'
    "n_grid = [100, 200, 400]\n"
    "replications = 4\n"
    "mc_budget = 20000\n"
    "g_constants = [0.5, 3.0]\n"
)
a, b = work / "a", work / "b"
r1 = run("experiment", "run", "--config", str(cfg), "--seed", "abc", "--out", str(a))
r2 = run("experiment", "run", "--config", str(cfg), "--seed", "abc", "--out", str(b), "--workers", "3")
check("experiment run exit", r1.returncode == 0 and r2.returncode == 0, r1.stderr + r2.stderr)
for name in ["replications.csv", "summary.csv", "summary.json", "mc_se.csv"]:
    check("identical " + name + " across worker counts",
          (a / name).read_bytes() == (b / name).read_bytes())
for svg in ["mean.svg", "variance.svg", "qq.svg"]:
    try:
        minidom.parse(str(a / svg))
        check(svg + " well-formed", True)
    except Exception as e:  # noqa: BLE001
        check(svg + " well-formed", False, str(e))

before = (a / "summary.csv").read_bytes()
r = run("experiment", "analyze", str(a))
check("analyze exit", r.returncode == 0, r.stderr)
check("analyze reproduces summary", (a / "summary.csv").read_bytes() == before)
check("analyze reproduces summary.json", (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes())

cov = work / "cov.toml"
cov.write_text(cfg.read_text().replace("replications = 4", "replications = 4\noutput_dir = \"%s\"" % (work / "c")))
r = run("coverage", "--config", str(cov))
check("coverage exit", r.returncode == 0, r.stderr)
rows = (work / "c" / "coverage.csv").read_text().splitlines()
check("coverage rows", rows[0] == "c,n,reps,freq,uncertain" and len(rows) == 7)

r = run("conjecture", "--domain", "ball2", "--n", "300", "--reps", "4", "--tol", "0.5")
check("conjecture exit", r.returncode == 0, r.stderr)
if r.returncode == 0:
    j = json.loads(r.stdout)
    check("conjectured value", abs(j["conjectured"] - 27.9153) < 1e-3)
    check("ratio column", abs(j["ratio"] - j["candidate"] / j["conjectured"]) < 1e-12)

sys.exit(1 if failed else 0)
