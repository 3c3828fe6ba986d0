#!/usr/bin/env python3
"""End-to-end demo: plant a fleet, run the pipeline, grade the recovery.

Generates the demo fleet into <workdir>/data, runs replay-check,
ingest-check, catalog, classify and report through the CLI, then joins
the classifier's output against the generator's ground truth and prints
the confusion counts. With default arguments the whole thing takes a
few seconds and leaves the reports in <workdir>/out/reports.
"""

import argparse
import collections
import csv
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from roamkit.cli import main as cli
from roamkit.synthgen import read_ground_truth

ROOT = pathlib.Path(__file__).resolve().parents[1]

RUN_TEMPLATE = """\
[inputs]
signaling = "{d}/signaling.csv"
radio = "{d}/radio.csv"
usage = "{d}/usage.csv"
tac_catalog = "{d}/tac_catalog.csv"
sectors = "{d}/sectors.csv"

[run]
out_dir = "{out}"
workers = {workers}

[labeler]
home_plmn = "234-15"
mvno_plmns = ["234-38"]
"""


def run(args):
    print(f"$ roamkit {' '.join(args)}")
    rc = cli(args)
    if rc != 0:
        sys.exit(f"step failed with exit code {rc}")


def read_classification(path):
    out = {}
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        out[row["device"]] = (row["class"], row["vertical"], row["smip"])
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir", default="demo_out",
                    help="where to put generated data and reports")
    ap.add_argument("--fleet", default=str(ROOT / "configs" / "demo_fleet.toml"))
    ap.add_argument("--workers", type=int, default=2)
    opts = ap.parse_args()

    work = pathlib.Path(opts.workdir)
    data = work / "data"
    out = work / "out"
    work.mkdir(parents=True, exist_ok=True)

    run(["synth", opts.fleet, "--out", str(data)])
    run(["replay-check", str(data)])

    run_cfg = work / "run.toml"
    run_cfg.write_text(RUN_TEMPLATE.format(
        d=data, out=out, workers=opts.workers))
    cfg = ["--config", str(run_cfg)]

    run(["ingest-check", *cfg])
    run(["catalog", *cfg])
    run(["classify", *cfg])
    run(["report", *cfg, "--which", "all"])

    truths, _ = read_ground_truth(data / "ground_truth.csv")
    got = read_classification(out / "classification.csv")

    confusion = collections.Counter()
    vert_hits = vert_total = 0
    smip_hits = smip_total = 0
    for t in truths:
        if t.cohort != "population" or t.device not in got:
            continue
        g_class, g_vert, g_smip = got[t.device]
        confusion[(t.device_class.render(), g_class)] += 1
        if t.vertical is not None:
            vert_total += 1
            vert_hits += g_vert == t.vertical.render()
        if t.smip:
            smip_total += 1
            smip_hits += g_smip == t.smip

    print("\nplanted class -> recovered class")
    for (want, is_), n in sorted(confusion.items()):
        mark = "" if want == is_ else "   <-- miss"
        print(f"  {want:10s} -> {is_:10s} {n:5d}{mark}")
    right = sum(n for (w, g), n in confusion.items() if w == g)
    total = sum(confusion.values())
    print(f"\nclass recovery: {right}/{total}")
    print(f"vertical recovery: {vert_hits}/{vert_total}")
    print(f"smart-meter tags: {smip_hits}/{smip_total}")
    print(f"\nreports in {out / 'reports'}:")
    for p in sorted((out / "reports").iterdir()):
        print(f"  {p.name}")


if __name__ == "__main__":
    main()
