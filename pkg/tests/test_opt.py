import random

import pytest

from conftest import SEED
from dslkit.bench import pow_module, straight_pow_module
from dslkit.dsls.fsa import more_chain_module
from dslkit.exec.engine import HostRegistry, compile_module
from dslkit.hir import build as b
from dslkit.hir.nodes import App, If, IntLit, Load, PrimOp, Return, make_module
from dslkit.hir.typecheck import typecheck_module
from dslkit.hir.types import F64, I64, FnT, PtrT
from dslkit.lir import Block, Instr, LFunction, LModule, static_instr_count, verify
from dslkit.opt.constfold import const_fold_function, const_fold_hir, const_fold_lir
from dslkit.opt.dce import dce_hir, dce_lir
from dslkit.opt.hirutil import all_exprs
from dslkit.opt.inline import InlineCycle, inline_always
from dslkit.opt.licm import licm
from dslkit.opt.lse import load_store_elim
from dslkit.opt.pipeline import PassConfig, UnknownPass, run_pipeline
from dslkit.opt.specialize import (BindingTypeMismatch, StaticAddress, StaticArraySize,
                                   StaticValue, UnknownParam, specialize_function)
from gen_hir import HirGen
from helpers import benchmark_modules, outcome, same_value

BENCH = benchmark_modules()


def typed(*fns):
    return typecheck_module(make_module("m", list(fns)))


def body_of(m, name="g"):
    return m.functions[name].body


# -- const-fold ------------------------------------------------------------------


def test_fold_product():
    m = typed(b.function("g", [], I64, b.ret(b.mul(b.ui64(2), b.mul(b.ui64(2), b.mul(b.ui64(2), b.ui64(1)))))))
    assert body_of(const_fold_hir(m)) == Return(IntLit(8))


def test_fold_constant_if():
    a, c = b.ret(b.ui64(1)), b.ret(b.ui64(2))
    m = typed(b.function("g", [], I64, b.if_(b.icmp_ult(b.ui64(3), b.ui64(5)), a, c)))
    assert body_of(const_fold_hir(m)) == a


def test_fold_keeps_division_by_zero():
    m = typed(b.function("g", [], I64, b.ret(b.sdiv(b.ui64(1), b.ui64(0)))))
    folded = body_of(const_fold_hir(m))
    assert isinstance(folded.value, PrimOp) and folded.value.op == "sdiv"


def test_fold_identities():
    x = b.var("x")
    m = typed(b.function("g", [("x", I64)], I64, b.ret(b.add(b.mul(x, b.ui64(1)), b.mul(x, b.ui64(0))))))
    assert body_of(const_fold_hir(m)).value.name == "x"


def test_fold_wraps_like_the_engine():
    m = typed(b.function("g", [], I64, b.ret(b.add(b.ui64((1 << 64) - 1), b.ui64(2)))))
    assert body_of(const_fold_hir(m)) == Return(IntLit(1))


def test_const_fold_idempotent():
    gen = HirGen(random.Random(SEED))
    modules = list(BENCH.values()) + [gen.module() for _ in range(60)]
    for m in modules:
        m = typecheck_module(m)
        once = typecheck_module(const_fold_hir(m))
        assert typecheck_module(const_fold_hir(once)) == once
        lm = run_pipeline(m, 0).lmodule
        lonce = const_fold_lir(lm)
        assert const_fold_lir(lonce) == lonce


# -- inlining ----------------------------------------------------------------------


def test_inline_more_chain():
    m = dce_hir(inline_always(typecheck_module(more_chain_module(4))))
    assert list(m.functions) == ["more-chain"]
    assert not any(isinstance(e, App) for e in all_exprs(m.functions["more-chain"].body))


def test_inline_cycle():
    f = b.function("f", [("x", I64)], I64, b.ret(b.app("f", b.var("x"))), attrs={"always-inline"})
    with pytest.raises(InlineCycle):
        inline_always(typed(f))


def test_plain_calls_stay():
    m = typecheck_module(pow_module())
    assert inline_always(m) == m


def test_inline_preserves_results():
    gen = HirGen(random.Random(SEED + 2))
    for _ in range(60):
        m = gen.module()
        args = gen.args()
        base = compile_module(m, 0)
        inl = compile_module(m, PassConfig(passes=("inline-always",)))
        assert same_value(outcome(lambda: base.apply("f", *args)[0], Exception),
                          outcome(lambda: inl.apply("f", *args)[0], Exception))


# -- LICM ----------------------------------------------------------------------------


def loop_calling(arg, pure=True, extra=()):
    sq = b.function("sq", [("k", I64)], I64, b.ret(b.mul(b.var("k"), b.var("k"))),
                    attrs={"pure"} if pure else ())
    i, acc = b.var("i"), b.var("acc")
    body = b.expr_stmt(b.let([("i", b.ui64(0), I64), ("acc", b.ui64(0), I64)],
                             b.block(b.while_(b.icmp_ult(i, b.var("n")),
                                              *extra,
                                              b.set_("acc", b.add(acc, b.app("sq", arg))),
                                              b.set_("i", b.add1(i))),
                                     b.ret(acc))))
    return typed(sq, b.function("g", [("n", I64), ("k", I64)], I64, body))


def calls(m, opt_passes, n=50):
    cm = compile_module(m, PassConfig(passes=opt_passes))
    value, stats = cm.apply("g", n, 3)
    return value, stats.calls


def test_licm_hoists_pure_invariant_call():
    m = loop_calling(b.var("k"))
    v0, c0 = calls(m, ())
    v1, c1 = calls(m, ("licm",))
    assert v0 == v1 == 450
    assert c0 == 50 and c1 == 1


def test_licm_zero_trip_loop_evaluates_nothing():
    m = loop_calling(b.var("k"))
    cm = compile_module(m, PassConfig(passes=("licm",)))
    assert cm.apply("g", 0, 3)[1].calls == 0


def test_licm_respects_set():
    m = loop_calling(b.var("k"), extra=(b.set_("k", b.add1(b.var("k"))),))
    assert calls(m, ("licm",))[1] == 50


def test_licm_skips_impure_calls():
    m = loop_calling(b.var("k"), pure=False)
    assert calls(m, ("licm",))[1] == 50


def test_licm_skips_loads():
    i = b.var("i")
    body = b.expr_stmt(b.let([("i", b.ui64(0), I64), ("acc", b.ui64(0), I64)],
                             b.block(b.while_(b.icmp_ult(i, b.ui64(4)),
                                              b.set_("acc", b.add(b.var("acc"), b.load(b.var("p")))),
                                              b.store(i, b.var("p")),
                                              b.set_("i", b.add1(i))),
                                     b.ret(b.var("acc")))))
    m = licm(typed(b.function("g", [("p", PtrT(I64))], I64, body)))
    loop = [s for s in m.functions["g"].body.expr.body.stmts][0]
    assert any(isinstance(e, Load) for e in all_exprs(loop))
    assert compile_module(m).apply("g", [10])[0] == 10 + 0 + 1 + 2


# -- load/store elimination ----------------------------------------------------------


def lfn(instrs, term, params=(("%p", PtrT(I64)), ("%x", I64))):
    return LModule("m", {"f": LFunction("f", tuple(params), I64, (Block("entry", tuple(instrs), term),))})


def test_lse_forwards_store():
    m = lfn([Instr("store", None, None, ("%x", "%p")), Instr("load", "%r", I64, ("%p",))],
            Instr("ret", args=("%r",)))
    out = load_store_elim(m)
    assert verify(out) == []
    assert static_instr_count(out).get("load", 0) == 0


def test_lse_call_clobbers():
    m = lfn([Instr("store", None, None, ("%x", "%p")),
             Instr("call", None, None, ("%p",), ("host", "poke", FnT((PtrT(I64),), b.VOID if hasattr(b, "VOID") else None))),
             Instr("load", "%r", I64, ("%p",))],
            Instr("ret", args=("%r",)))
    assert static_instr_count(load_store_elim(m))["load"] == 1


def test_lse_on_straight_pow():
    lm = run_pipeline(straight_pow_module(10), 0).lmodule
    before = static_instr_count(lm)["load"]
    after = static_instr_count(load_store_elim(lm)).get("load", 0)
    assert (before, after) == (10, 0)
    assert after <= before / 2


# -- DCE -------------------------------------------------------------------------------


def test_dce_drops_folded_branch():
    m = typed(b.function("g", [("x", I64)], I64,
                         b.if_(b.icmp_ult(b.ui64(1), b.ui64(2)), b.ret(b.var("x")), b.ret(b.ui64(0)))))
    lm = dce_lir(const_fold_lir(run_pipeline(m, 0).lmodule))
    assert len(lm["g"].blocks) == 1


def test_dce_unused_pure_add_and_impure_call():
    hosted = b.host("tick", FnT((), I64))
    m = typed(b.function("g", [("x", I64)], I64, b.block(
        b.expr_stmt(b.let([("u", b.add(b.var("x"), b.ui64(1)), I64), ("t", hosted, I64)],
                          b.svoid())),
        b.ret(b.var("x")))))
    lm = dce_lir(run_pipeline(dce_hir(m), 0).lmodule)
    counts = static_instr_count(lm)
    assert counts.get("add", 0) == 0 and counts["call"] == 1
    ticks = []
    reg = HostRegistry().register("tick", FnT((), I64), lambda: ticks.append(1) or 0)
    compile_module(m, 3, reg).apply("g", 5)
    assert ticks == [1]


# -- specialization -----------------------------------------------------------------


def test_specialize_pow():
    m, name = specialize_function(typecheck_module(pow_module()), "pow", {"n": StaticValue(10)})
    fn = m.functions[name]
    assert fn.param_names == ("x",)
    lm = run_pipeline(m, 3).lmodule
    counts = static_instr_count(lm[name])
    assert counts.get("condbr", 0) == 0 and counts.get("call", 0) == 0
    assert counts["mul"] == 9
    cm = compile_module(m, 3)
    for x in range(-4, 5):
        assert cm.apply(name, x)[0] == cm.apply("pow", x, 10)[0] == x ** 10


def test_specialize_errors():
    m = typecheck_module(pow_module())
    with pytest.raises(BindingTypeMismatch):
        specialize_function(m, "pow", {"n": StaticValue(2.5)})
    with pytest.raises(UnknownParam):
        specialize_function(m, "pow", {"k": StaticValue(1)})


def sum_fn():
    i = b.var("i")
    body = b.expr_stmt(b.let([("i", b.ui64(0), I64), ("s", b.fl64(0.0), F64)],
                             b.block(b.while_(b.icmp_ult(i, b.var("n")),
                                              b.set_("s", b.fadd(b.var("s"), b.array_ref(b.var("a"), i))),
                                              b.set_("i", b.add1(i))),
                                     b.ret(b.var("s")))))
    return b.function("sum", [("a", PtrT(F64)), ("n", I64)], F64, body)


def test_static_address_becomes_pointer_constant():
    m, name = specialize_function(typed(sum_fn()), "sum",
                                  {"a": StaticAddress(3, (1.0, 2.0, 4.0)), "n": StaticValue(3)})
    assert m.functions[name].params == ()
    lm = run_pipeline(m, 3).lmodule
    consts = [i for blk in lm[name].blocks for i in blk.instrs
              if i.op == "const" and isinstance(i.ty, PtrT)]
    assert consts
    assert compile_module(m, 3).apply(name)[0] == 7.0


def test_static_array_size_unrolls():
    m, name = specialize_function(typed(sum_fn()), "sum", {"a": StaticArraySize(4)})
    assert m.functions[name].param_names == ("a",)
    lm = run_pipeline(m, 3).lmodule
    assert static_instr_count(lm[name]).get("condbr", 0) == 0
    assert compile_module(m, 3).apply(name, [1.0, 2.0, 3.0, 4.0])[0] == 10.0


# -- pipeline -------------------------------------------------------------------------


def test_levels_never_grow_benchmarks():
    for name, m in BENCH.items():
        c0 = static_instr_count(run_pipeline(m, 0).lmodule)["total"]
        c3 = static_instr_count(run_pipeline(m, 3).lmodule)["total"]
        assert c3 <= c0, name


def test_explicit_pass_list():
    r = run_pipeline(pow_module(), PassConfig(opt_level=3, passes=("licm",)))
    assert [s.name for s in r.stats] == ["licm"]
    with pytest.raises(UnknownPass):
        PassConfig(passes=("gvn",))


def test_disabled_passes_and_stat_lines():
    r = run_pipeline(pow_module(), PassConfig(opt_level=3, disabled=("licm",)))
    names = [s.name for s in r.stats]
    assert "licm" not in names and names.count("const-fold") == 3
    assert r.stat_lines()[0].startswith("pass=inline-always before=")
    assert PassConfig(opt_level=1).schedule() == (("const-fold", "dce"), ("const-fold", "dce"))


def test_every_pass_output_verifies():
    # run_pipeline checks after each pass; reaching the end is the assertion
    for m in BENCH.values():
        for level in range(4):
            assert verify(run_pipeline(m, level).lmodule) == []


def test_const_fold_function_direct():
    m = typed(b.function("g", [], I64, b.ret(b.add(b.ui64(2), b.ui64(3)))))
    assert const_fold_function(m.functions["g"], m).body == Return(IntLit(5))
    assert isinstance(If, type)
