"""Command-line front end.

    dslkit fsa --spec cadr.fsa --word cadr
    dslkit synth --score demo.score --out demo.wav --stats
    dslkit mhk --src normalize.mhk --arrays a.json --no-licm --stats
    dslkit dump --src cadr.fsa --dsl fsa --stage lir --opt 3
    dslkit dump --src cadr.fsa --dsl fsa --stage lir --passes const-fold,dce
    dslkit bench --suite normalize --n 256 --json

Exit status is 1 for user errors (bad flags, unreadable or malformed
input, a trap in the program) and 2 for internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import replace

from . import bench
from .astdef import AstError
from .dsls import fsa, synth
from .dsls.mhk import MhkConfig, MhkError, load_program, mhk_module, mhk_run
from .exec.engine import ExecError, compile_module
from .hir.printer import dump_module
from .lir import dump_text
from .opt.pipeline import PassConfig, UnknownPass, run_pipeline
from .sexpr import ParseError

USER_ERRORS = (OSError, ParseError, AstError, fsa.InvalidSpec, synth.InvalidScore, MhkError,
               ExecError, UnknownPass, json.JSONDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _opt(p, default=3):
    p.add_argument("--opt", type=int, choices=range(4), default=default, metavar="N",
                   help="optimization level 0-3 (default %(default)s)")
    p.add_argument("--passes", type=_pass_list, default=None, metavar="P1,P2",
                   help="run exactly these passes instead of the level's schedule")


def _pass_list(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _pass_config(a):
    return PassConfig(opt_level=a.opt, passes=a.passes)


def build_parser():
    p = _Parser(prog="dslkit", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fsa", help="run an automaton on a word")
    f.add_argument("--spec", required=True)
    f.add_argument("--word", required=True,
                   help="one symbol per character, or space-separated symbols")
    f.add_argument("--style", choices=fsa.STYLES, default="functions")
    _opt(f)

    s = sub.add_parser("synth", help="render a score to a WAV file")
    s.add_argument("--score", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--no-specialize", action="store_true")
    s.add_argument("--stats", action="store_true")
    _opt(s)

    m = sub.add_parser("mhk", help="run a mini-Hakaru program")
    m.add_argument("--src", required=True)
    m.add_argument("--arrays", required=True, help="JSON object mapping parameter names to values")
    m.add_argument("--no-fuse", action="store_true")
    m.add_argument("--no-licm", action="store_true")
    m.add_argument("--no-fold", action="store_true")
    m.add_argument("--stats", action="store_true")
    _opt(m)

    d = sub.add_parser("dump", help="print the IR of a program")
    d.add_argument("--src", required=True)
    d.add_argument("--dsl", choices=("fsa", "mhk"), required=True)
    d.add_argument("--stage", choices=("hir", "lir"), required=True)
    d.add_argument("--style", choices=fsa.STYLES, default="functions")
    _opt(d, default=0)

    b = sub.add_parser("bench", help="instruction-count benchmark")
    b.add_argument("--suite", choices=bench.SUITES, required=True)
    b.add_argument("--n", type=int, default=256)
    b.add_argument("--json", action="store_true")
    b.add_argument("--no-licm", action="store_true")
    b.add_argument("--no-fuse", action="store_true")
    b.add_argument("--no-specialize", action="store_true")
    b.add_argument("--style", choices=fsa.STYLES, default="functions")
    _opt(b)
    return p


def _word(text):
    return text.split() if " " in text.strip() else list(text)


def _print_stats(stats, out):
    for line in stats.lines():
        print(line, file=out)


def cmd_fsa(a, out):
    spec = fsa.load_fsa(a.spec)
    cm = compile_module(fsa.compile_fsa(spec, a.style), _pass_config(a))
    print(f"accept={'true' if fsa.fsa_match(cm, _word(a.word), spec.name) else 'false'}", file=out)


def cmd_synth(a, out):
    score = synth.load_score(a.score)
    samples, stats, _ = synth.render(score, _pass_config(a), not a.no_specialize)
    synth.write_wav(samples, score.rate, a.out)
    print(f"wrote {len(samples)} samples to {a.out}", file=out)
    if a.stats:
        _print_stats(stats, out)


def _mhk_config(a):
    return MhkConfig(opt_level=a.opt, fuse=not a.no_fuse, licm=not a.no_licm,
                     fold=not getattr(a, "no_fold", False))


def _format_value(v):
    if isinstance(v, list):
        return "[" + ", ".join(_format_value(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def cmd_mhk(a, out):
    prog = load_program(a.src)
    with open(a.arrays) as fh:
        inputs = json.load(fh)
    if not isinstance(inputs, dict):
        raise MhkError("--arrays must hold a JSON object")
    cfg = _mhk_config(a)
    cm = None
    if a.passes is not None:
        cm = compile_module(mhk_module(prog, cfg), replace(cfg.pass_config(), passes=a.passes))
    value, stats = mhk_run(prog, inputs, cfg, cm)
    print(f"result={_format_value(value)}", file=out)
    if a.stats:
        print(f"config={_mhk_config(a).label()}", file=out)
        _print_stats(stats, out)


def cmd_dump(a, out):
    if a.dsl == "fsa":
        module = fsa.compile_fsa(fsa.load_fsa(a.src), a.style)
        res = run_pipeline(module, _pass_config(a))
    else:
        cfg = MhkConfig(opt_level=a.opt)
        res = run_pipeline(mhk_module(load_program(a.src), cfg),
                           replace(cfg.pass_config(), passes=a.passes))
    text = dump_module(res.hmodule) if a.stage == "hir" else dump_text(res.lmodule)
    out.write(text if text.endswith("\n") else text + "\n")


def cmd_bench(a, out):
    if a.n < 0:
        raise UsageError("--n must be non-negative")
    if a.suite == "normalize":
        rec = bench.bench_normalize(a.n, MhkConfig(opt_level=a.opt, fuse=not a.no_fuse,
                                                   licm=not a.no_licm))
    elif a.suite == "fsa":
        rec = bench.bench_fsa(a.n, a.style, a.opt)
    else:
        rec = bench.bench_synth(a.n, a.opt, not a.no_specialize)
    if a.json:
        print(json.dumps(rec, sort_keys=False), file=out)
    else:
        for k, v in rec.items():
            print(f"{k}={v}", file=out)


COMMANDS = {"fsa": cmd_fsa, "synth": cmd_synth, "mhk": cmd_mhk, "dump": cmd_dump, "bench": cmd_bench}


def run_cli(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        a = build_parser().parse_args(argv)
        COMMANDS[a.command](a, out)
    except UsageError as e:
        print(f"error: {e}", file=err)
        return 1
    except USER_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=err)
        return 1
    except Exception as e:  # noqa: BLE001 - anything else is our bug
        print(f"internal error: {type(e).__name__}: {e}", file=err)
        traceback.print_exc(file=err)
        return 2
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
