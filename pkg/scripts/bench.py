"""Run every benchmark suite over a range of sizes and print one JSON
record per line (instructions, back-edges, compile and run milliseconds).

    python scripts/bench.py
    python scripts/bench.py --sizes 64 128 256 --suite normalize
"""

import argparse
import json

from dslkit.bench import SUITES, bench_fsa, bench_normalize, bench_synth
from dslkit.dsls.mhk import MhkConfig


def records(suite, n):
    if suite == "normalize":
        yield bench_normalize(n, MhkConfig())
        yield bench_normalize(n, MhkConfig(licm=False))
    elif suite == "fsa":
        for style in ("functions", "blocks"):
            for opt in (0, 3):
                yield bench_fsa(n, style, opt)
    else:
        yield bench_synth(n * 10, 3, True)
        yield bench_synth(n * 10, 3, False)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--suite", choices=SUITES, action="append")
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    a = ap.parse_args()
    for suite in a.suite or SUITES:
        for n in a.sizes:
            for rec in records(suite, n):
                print(json.dumps({"n": n, **rec}))


if __name__ == "__main__":
    main()
