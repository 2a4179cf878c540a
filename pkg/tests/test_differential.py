"""Unoptimized versus optimized execution, and the toolkit versus the oracles."""

import random

import pytest

from conftest import SEED
from dslkit.bench import pow_module, program_text
from dslkit.dsls.fsa import CADR, compile_fsa
from dslkit.dsls.mhk import MhkConfig, mhk_compile, mhk_run, parse_program
from dslkit.dsls.synth import Score, Voice, render
from dslkit.exec.engine import ExecError, compile_module
from gen_hir import HirGen
from gen_mhk import MhkGen
from helpers import outcome, same_value
from oracles.mhk_oracle import OracleTrap, run_program

MASK = (1 << 64) - 1


def test_pow_opt_levels_agree():
    rng = random.Random(SEED)
    cms = [compile_module(pow_module(), level) for level in range(4)]
    for _ in range(1000):
        x, n = rng.getrandbits(64) - (1 << 63), rng.randint(0, 20)
        results = [outcome(lambda: cm.apply("pow", x, n)[0], ExecError) for cm in cms]
        assert all(r == results[0] for r in results)
        assert results[0] == ((x ** n) & MASK) - (1 << 64 if (x ** n) & (1 << 63) else 0)


@pytest.mark.parametrize("style", ["functions", "blocks"])
def test_fsa_opt_levels_agree(style):
    rng = random.Random(SEED)
    m = compile_fsa(CADR, style)
    c0, c3 = compile_module(m, 0), compile_module(m, 3)
    for _ in range(300):
        word = [rng.choice("cadrx") for _ in range(rng.randint(0, 12))]
        assert c0.apply("M", word)[0] is c3.apply("M", word)[0] is CADR.accepts(word)


def test_synth_opt_levels_agree():
    score = Score(8000.0, 400, (Voice(440.0, 0, 400, 0.5), Voice(261.6, 100, 250, 0.3),
                                Voice(97.0, 50, 300, 0.2)))
    outs = [render(score, opt, spec)[0] for opt in (0, 3) for spec in (False, True)]
    for o in outs[1:]:
        assert same_value(outs[0], o)


@pytest.mark.parametrize("cfg", [MhkConfig(0), MhkConfig(1), MhkConfig(2), MhkConfig(3),
                                 MhkConfig(3, fuse=False), MhkConfig(3, licm=False),
                                 MhkConfig(3, fold=False), MhkConfig(3, helpers=False)],
                         ids=lambda c: c.label().replace(" ", "-"))
def test_mhk_matches_oracle(cfg):
    gen = MhkGen(random.Random(SEED + 11))
    for _ in range(60):
        prog = gen.program()
        inputs = gen.inputs()
        try:
            expected = run_program(prog, inputs)
        except OracleTrap as t:
            expected = ("trap", t.kind)
        got = outcome(lambda: mhk_run(prog, inputs, cfg)[0], ExecError)
        assert same_value(expected, got), prog.text()


def test_normalize_opt_levels_agree():
    prog = parse_program(program_text("normalize.mhk"))
    rng = random.Random(SEED)
    c0, c3 = mhk_compile(prog, MhkConfig(0)), mhk_compile(prog, MhkConfig(3))
    for _ in range(20):
        a = [rng.uniform(-10, 10) for _ in range(rng.randint(1, 40))]
        r0 = mhk_run(prog, {"a": a}, cm=c0)[0]
        assert same_value(r0, mhk_run(prog, {"a": a}, cm=c3)[0])
        assert same_value(r0, run_program(prog, {"a": a}))


@pytest.mark.parametrize("level", [1, 2, 3])
def test_random_hir_levels_agree(level):
    gen = HirGen(random.Random(SEED + level))
    for _ in range(150):
        m = gen.module()
        args = gen.args()
        base = outcome(lambda: compile_module(m, 0).apply("f", *args)[0], ExecError)
        opt = outcome(lambda: compile_module(m, level).apply("f", *args)[0], ExecError)
        assert same_value(base, opt)
