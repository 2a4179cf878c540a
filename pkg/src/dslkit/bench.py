"""Benchmark programs and count-based measurements shared by the CLI,
the scripts and the tests."""

from __future__ import annotations

import time
from importlib import resources

from .exec.engine import compile_module
from .hir.build import app, build_pow, function, icmp_ule, if_, mul, ret, sub_nuw, ui64, var
from .hir.nodes import make_module
from .hir.types import I64

SUITES = ("normalize", "fsa", "synth")


def program_path(name):
    """Path of a bundled program such as ``normalize.mhk``."""
    return resources.files("dslkit") / "programs" / name


def program_text(name) -> str:
    return program_path(name).read_text()


def pow_function():
    """Recursive ``pow(x, n)``."""
    x, n = var("x"), var("n")
    return function("pow", [("x", I64), ("n", I64)], I64,
                    if_(icmp_ule(n, ui64(0)), ret(ui64(1)),
                        ret(mul(x, app("pow", x, sub_nuw(n, ui64(1)))))))


def pow_module():
    return make_module("pow-module", [pow_function()])


def straight_pow_module(n=10):
    """``pow<n>(x)`` with the product unrolled at generation time."""
    return make_module("straight-pow", [function(f"pow{n}", [("x", I64)], I64, ret(build_pow(var("x"), n)))])


def _timed(thunk):
    t = time.perf_counter()
    out = thunk()
    return out, (time.perf_counter() - t) * 1000.0


def _record(suite, config, stats, compile_ms, run_ms):
    return {"suite": suite, "config": config, "instructions": stats.instructions,
            "back_edges": stats.back_edges, "compile_ms": round(compile_ms, 3),
            "run_ms": round(run_ms, 3)}


def bench_normalize(n, cfg=None):
    from .dsls.mhk import MhkConfig, mhk_compile, mhk_run, parse_program
    cfg = cfg or MhkConfig()
    prog = parse_program(program_text("normalize.mhk"))
    cm, cms = _timed(lambda: mhk_compile(prog, cfg))
    a = [float(i % 7 + 1) for i in range(n)]
    (_, stats), rms = _timed(lambda: mhk_run(prog, {"a": a}, cfg, cm=cm))
    return _record("normalize", cfg.label(), stats, cms, rms)


def bench_fsa(n, style="functions", opt=3):
    """The c(a|d)*r machine on ``c a^(n-2) r``."""
    from .dsls.fsa import CADR, compile_fsa
    cm, cms = _timed(lambda: compile_module(compile_fsa(CADR, style), opt))
    word = ["c"] + ["a"] * max(0, n - 2) + ["r"]
    (_, stats), rms = _timed(lambda: cm.apply(CADR.name, word))
    return _record("fsa", f"O{opt} {style}", stats, cms, rms)


def bench_synth(n, opt=3, specialize=True):
    """A three-voice score of ``n`` samples at 44.1 kHz."""
    from .dsls.synth import run_build
    score = bench_score(n)
    (build, cm), cms = _timed(lambda: _compile_synth(score, opt, specialize))
    (_, stats), rms = _timed(lambda: run_build(build, cm, score))
    label = f"O{opt}" + ("" if specialize else " no-specialize")
    return _record("synth", label, stats, cms, rms)


def bench_score(n):
    from .dsls.synth import Score, Voice
    third = n // 3
    return Score(44100.0, n, (Voice(440.0, 0, n, 0.5), Voice(660.0, third, n - third, 0.25),
                              Voice(220.0, 0, 2 * third, 0.25)))


def _compile_synth(score, opt, specialize):
    from .dsls.synth import synth_build
    build = synth_build(score, specialize=specialize)
    return build, compile_module(build.module, opt)
