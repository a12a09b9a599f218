#!/usr/bin/env python3
"""Recompute per-arm trailing success from metrics.csv files.

Usage: summarize.py RUN_DIR [--window N] [--check]

With --check, compares against RUN_DIR/summary.json and exits non-zero on a
mismatch larger than 1e-12.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from scipy import stats


def trailing(path, window):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    tail = rows[-window:] if rows else []
    return sum(int(r["success"]) for r in tail) / len(tail) if tail else 0.0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("run_dir", type=Path)
    ap.add_argument("--window", type=int)
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()

    summary_path = args.run_dir / "summary.json"
    recorded = json.loads(summary_path.read_text()) if summary_path.exists() else None
    window = args.window or (recorded or {}).get("trailing_window", 100)

    arms = {}
    for arm_dir in sorted(p for p in args.run_dir.iterdir() if p.is_dir()):
        seeds = {}
        for seed_dir in arm_dir.glob("seed_*"):
            metrics = seed_dir / "metrics.csv"
            if metrics.exists():
                seeds[int(seed_dir.name[5:])] = trailing(metrics, window)
        if seeds:
            vals = [seeds[s] for s in sorted(seeds)]
            mean = sum(vals) / len(vals)
            std = math.sqrt(sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else 0.0
            arms[arm_dir.name] = {"mean": mean, "std": std, "n": len(vals), "seeds": sorted(seeds), "values": vals}

    out = {"trailing_window": window, "arms": {a: {k: v[k] for k in ("mean", "std", "n")} for a, v in arms.items()}}
    if "full" in arms and "vanilla" in arms and arms["full"]["seeds"] == arms["vanilla"]["seeds"]:
        d = [a - b for a, b in zip(arms["full"]["values"], arms["vanilla"]["values"])]
        if len(d) > 1 and len(set(d)) > 1:
            r = stats.ttest_rel(arms["full"]["values"], arms["vanilla"]["values"], alternative="greater")
            out["full_vs_vanilla"] = {"t_statistic": float(r.statistic), "p_value_one_sided": float(r.pvalue)}
    print(json.dumps(out, indent=2))

    if args.check:
        if recorded is None:
            sys.exit("no summary.json to check against")
        bad = []
        for arm, v in arms.items():
            rec = recorded["arms"].get(arm)
            if rec is None:
                bad.append(f"{arm}: missing from summary.json")
                continue
            for key in ("mean", "std"):
                if abs(rec[key] - v[key]) > 1e-12:
                    bad.append(f"{arm}.{key}: recorded {rec[key]!r}, recomputed {v[key]!r}")
            if rec["n"] != v["n"]:
                bad.append(f"{arm}.n: recorded {rec['n']}, recomputed {v['n']}")
        if "full_vs_vanilla" in out and "full_vs_vanilla" in recorded:
            for key in ("t_statistic", "p_value_one_sided"):
                a, b = recorded["full_vs_vanilla"][key], out["full_vs_vanilla"][key]
                if abs(a - b) > 1e-9 * max(1.0, abs(b)):
                    bad.append(f"full_vs_vanilla.{key}: recorded {a!r}, recomputed {b!r}")
        if bad:
            sys.exit("summary mismatch:\n" + "\n".join(bad))
        print("summary.json matches the metrics", file=sys.stderr)


if __name__ == "__main__":
    main()
