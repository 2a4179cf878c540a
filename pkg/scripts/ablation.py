"""Instruction-count ablation: turn one optimization off at a time and
report how many more instructions each benchmark executes.

    python scripts/ablation.py --n 256
    python scripts/ablation.py --n 512 --json
"""

import argparse
import json

from dslkit.bench import bench_normalize, bench_synth, program_text
from dslkit.dsls.mhk import MhkConfig, mhk_run, parse_program

ROWS = [
    ("all optimizations", MhkConfig()),
    ("no loop fusion", MhkConfig(fuse=False)),
    ("no LICM", MhkConfig(licm=False)),
    ("no constant folding", MhkConfig(fold=False)),
    ("no optimization (O0)", MhkConfig(opt_level=0, fuse=False)),
]


def two_sums(n, cfg):
    prog = parse_program(program_text("two-sums.mhk"))
    _, stats = mhk_run(prog, {"a": [float(k % 5) for k in range(n)]}, cfg)
    return stats.instructions


def table(n, samples):
    rows = []
    for label, cfg in ROWS:
        rows.append({"row": label, "normalize": bench_normalize(n, cfg)["instructions"],
                     "two-sums": two_sums(n, cfg)})
    full = bench_synth(samples, 3, True)["instructions"]
    plain = bench_synth(samples, 3, False)["instructions"]
    base = rows[0]
    for r in rows:
        r["normalize_x"] = round(r["normalize"] / base["normalize"], 2)
        r["two-sums_x"] = round(r["two-sums"] / base["two-sums"], 2)
    synth = {"row": "no run-time specialization (synth)", "specialized": full,
             "unspecialized": plain, "x": round(plain / full, 3)}
    return rows, synth


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256, help="array length for the mini-Hakaru programs")
    ap.add_argument("--samples", type=int, default=20000, help="synth samples")
    ap.add_argument("--json", action="store_true")
    a = ap.parse_args()
    rows, synth = table(a.n, a.samples)
    if a.json:
        print(json.dumps({"n": a.n, "rows": rows, "synth": synth}, indent=2))
        return
    print(f"{'configuration':<24} {'normalize':>12} {'x':>8} {'two-sums':>10} {'x':>6}")
    for r in rows:
        print(f"{r['row']:<24} {r['normalize']:>12} {r['normalize_x']:>8} "
              f"{r['two-sums']:>10} {r['two-sums_x']:>6}")
    print(f"\nsynth, {a.samples} samples: specialized {synth['specialized']}, "
          f"unspecialized {synth['unspecialized']} ({synth['x']}x)")


if __name__ == "__main__":
    main()
