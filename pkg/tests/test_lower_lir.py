import random
from dataclasses import replace

import pytest

from conftest import SEED
from dslkit.bench import pow_module
from dslkit.dsls.fsa import CADR, compile_fsa
from dslkit.exec.codegen import back_edges
from dslkit.exec.engine import ExecError, compile_module
from dslkit.hir import build as b
from dslkit.hir.nodes import make_module
from dslkit.hir.typecheck import typecheck_module
from dslkit.hir.types import F32, I1, I32, I64, ArrayT, StructT
from dslkit.layout import UnsizedType, layout_of
from dslkit.lir import (Block, Instr, LFunction, LirParseError, LModule, dump_text, parse_text,
                        static_instr_count, verify)
from dslkit.lower import lower_module
from dslkit.opt.pipeline import run_pipeline
from dslkit.sexpr import ParseError
from gen_hir import HirGen
from helpers import benchmark_modules, outcome, same_value
from oracles.hir_oracle import run as oracle_run

BENCH = benchmark_modules()


def lowered(m, opt=0):
    return run_pipeline(m, opt).lmodule


# -- lowering ------------------------------------------------------------------


def test_pow_blocks():
    fn = lowered(pow_module())["pow"]
    assert [blk.label for blk in fn.blocks] == ["entry", "pow.then.0", "pow.else.1"]
    assert static_instr_count(fn)["call"] == 1


def test_entry_allocas_for_params_and_lets():
    fn = lowered(BENCH["synth"])["fill"]
    entry = fn.blocks[0]
    allocas = [i for i in entry.instrs if i.op == "alloca"]
    # out, n, rate, plus the x and acc locals
    assert len(allocas) == 5
    assert all(i.op != "alloca" for blk in fn.blocks[1:] for i in blk.instrs)


def test_while_adds_three_blocks_and_one_back_edge():
    def fn(loop):
        body = [b.set_("i", b.ui64(0))]
        if loop:
            body.append(b.while_(b.icmp_ult(b.var("i"), b.ui64(3)), b.set_("i", b.add1(b.var("i")))))
        return b.function("f", [("i", I64)], I64, b.block(*body, b.ret(b.var("i"))))

    without = lowered(make_module("m", [fn(False)]))["f"]
    with_loop = lowered(make_module("m", [fn(True)]))["f"]
    assert len(with_loop.blocks) - len(without.blocks) == 3
    assert len(back_edges(with_loop)) == 1
    assert back_edges(without) == set()


def test_blocks_style_fsa_uses_branches():
    lm = lowered(compile_fsa(CADR, "blocks"))
    (fn,) = lm.functions.values()
    labels = {blk.label for blk in fn.blocks}
    assert {"init", "more", "end"} <= labels
    assert static_instr_count(fn).get("call", 0) == 0


def test_lowering_is_deterministic():
    for m in BENCH.values():
        m = typecheck_module(m)
        assert dump_text(lower_module(m)) == dump_text(lower_module(m))


def test_lowered_benchmarks_verify():
    for name, m in BENCH.items():
        for opt in (0, 3):
            assert verify(lowered(m, opt)) == [], name


def test_lowering_matches_hir_oracle():
    gen = HirGen(random.Random(SEED))
    mask = (1 << 64) - 1
    checked = 0
    for _ in range(500):
        m = gen.module()
        x, y, z = gen.args()
        expected = oracle_run(m, "f", [x & mask, y & mask, z])
        cm = compile_module(m, 0)
        got = outcome(lambda: cm.apply("f", x, y, z)[0], ExecError)
        if isinstance(got, int):
            got &= mask
        assert same_value(expected, got), dump_text(cm.lmodule)
        checked += 1
    assert checked == 500


# -- layout --------------------------------------------------------------------


def test_layouts():
    assert (layout_of(I64).size, layout_of(I64).align) == (8, 8)
    s = layout_of(StructT((("a", I32), ("b", I64))))
    assert s.size == 16 and s.offsets == (0, 8)
    a = layout_of(ArrayT(F32, 10))
    assert (a.size, a.align, a.stride) == (40, 4, 4)
    with pytest.raises(UnsizedType):
        layout_of(ArrayT(F32))


# -- verifier ------------------------------------------------------------------


def one_fn(blocks, params=()):
    fn = LFunction("f", tuple(params), I64, tuple(blocks))
    return LModule("m", {"f": fn})


def diag_kinds(m):
    return [d.kind for d in verify(m)]


def test_verify_two_terminators():
    blk = Block("entry", (Instr("ret", args=("%x",)),), Instr("ret", args=("%x",)))
    assert "MultipleTerminators" in diag_kinds(one_fn([blk], [("%x", I64)]))


def test_verify_use_before_def():
    entry = Block("entry", (Instr("const", "%c", I1, (), (1,)),),
                  Instr("condbr", args=("%c",), attr=("a", "b")))
    a = Block("a", (Instr("const", "%v", I64, (), (1,)),), Instr("br", attr=("b",)))
    bb = Block("b", (), Instr("ret", args=("%v",)))
    kinds = diag_kinds(one_fn([entry, a, bb]))
    assert "UseBeforeDef" in kinds


def test_verify_unknown_target():
    blk = Block("entry", (), Instr("br", attr=("nowhere",)))
    assert "UnknownTarget" in diag_kinds(one_fn([blk]))


def test_verify_redefinition():
    blk = Block("entry", (Instr("const", "%v", I64, (), (1,)), Instr("const", "%v", I64, (), (2,))),
                Instr("ret", args=("%v",)))
    assert "Redefinition" in diag_kinds(one_fn([blk]))


# -- text form -----------------------------------------------------------------


def test_parse_dump_identity_on_benchmarks():
    for name, m in BENCH.items():
        for opt in (0, 1, 2, 3):
            lm = lowered(m, opt)
            text = dump_text(lm)
            back = parse_text(text)
            assert back == lm, name
            assert dump_text(back) == text


def test_parse_dump_identity_on_random_hir():
    gen = HirGen(random.Random(SEED + 1))
    for _ in range(100):
        lm = lowered(gen.module(), random.Random(SEED).choice((0, 3)))
        assert parse_text(dump_text(lm)) == lm


def test_malformed_text():
    with pytest.raises(ParseError):
        parse_text("(fn")
    with pytest.raises(LirParseError):
        parse_text("(module m (function f () i64 () (block entry (%0 i64 (frob)) (ret %0))))")


def test_static_counts():
    empty = one_fn([Block("entry", (), Instr("ret"))])
    counts = static_instr_count(empty)
    assert counts["total"] == 0 and counts["terminators"] == 1
    pow0 = static_instr_count(lowered(pow_module()))
    assert (pow0["total"], pow0["load"], pow0["store"], pow0["call"]) == (15, 4, 2, 1)


def test_dump_preserves_attrs():
    lm = lowered(BENCH["synth"])
    assert "pure" in parse_text(dump_text(lm))["sawtooth"].attrs
    assert replace(lm["sawtooth"], attrs=frozenset()) != lm["sawtooth"]
