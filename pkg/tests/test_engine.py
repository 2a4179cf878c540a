import random

import pytest

from conftest import SEED
from dslkit.bench import pow_module
from dslkit.dsls.fsa import CADR, compile_fsa
from dslkit.exec.engine import (DuplicateRegistration, HostRegistry, MarshalError, Trap,
                                UnresolvedHostFunction, compile_module, register_host_fn,
                                to_native, from_native, wrap_opaque)
from dslkit.exec.memory import Memory
from dslkit.hir import build as b
from dslkit.hir.nodes import App, Global, Intrinsic, make_module
from dslkit.hir.typecheck import TypecheckError
from dslkit.hir.types import BOOL, F32, F64, I64, OPAQUE, SYM, VOID, ArrayT, FnT, PtrT
from helpers import benchmark_modules


def single(fn, opt=0, registry=None):
    return compile_module(make_module("m", [fn]), opt, registry)


def test_pow():
    for opt in range(4):
        value, stats = compile_module(pow_module(), opt).apply("pow", 2, 10)
        assert value == 1024
        assert stats.calls >= (10 if opt == 0 else 0)


def test_fsa_entry_on_symbol_vector():
    cm = compile_module(compile_fsa(CADR), 3)
    assert cm.apply("M", ["c", "a", "d", "r"], 4)[0] is True
    assert cm.apply("M", ["c", "a", "d"])[0] is False  # length derived from the vector


def test_unregistered_host_function():
    f = b.function("g", [], I64, b.ret(b.host("double", FnT((I64,), I64), b.ui64(21))))
    with pytest.raises(UnresolvedHostFunction):
        single(f)


def test_host_function_roundtrip():
    reg = register_host_fn(HostRegistry(), "double", FnT((I64,), I64), lambda x: 2 * x)
    f = b.function("g", [], I64, b.ret(b.host("double", FnT((I64,), I64), b.ui64(21))))
    assert single(f, registry=reg).apply("g")[0] == 42
    with pytest.raises(DuplicateRegistration):
        register_host_fn(reg, "double", FnT((I64,), I64), lambda x: x)
    register_host_fn(reg, "double", FnT((I64,), I64), lambda x: x, replace=True)


def test_opaque_values_only_reach_host_functions():
    seen = []
    reg = HostRegistry().register("peek", FnT((OPAQUE,), I64), lambda h: seen.append(h) or 7)
    f = b.function("g", [("h", OPAQUE)], I64, b.ret(b.host("peek", FnT((OPAQUE,), I64), b.var("h"))))
    record = {"any": "thing"}
    assert single(f, registry=reg).apply("g", wrap_opaque(record))[0] == 7
    assert seen == [record]
    bad = b.function("g", [("h", OPAQUE)], I64, b.ret(b.load(b.var("h"))))
    with pytest.raises(TypecheckError):
        single(bad)


def test_marshal_errors():
    cm = compile_module(pow_module())
    with pytest.raises(MarshalError) as info:
        cm.apply("pow", 3.5, 1)
    assert info.value.index == 0
    with pytest.raises(MarshalError):
        cm.apply("pow", 1)


def test_marshal_roundtrip():
    mem = Memory()
    for value, t in [(-5, I64), (2.5, F64), (True, BOOL), ("car", SYM)]:
        assert from_native(mem, to_native(mem, value, t), t) == value
    view = from_native(mem, to_native(mem, ["c", "a", "d", "r"], PtrT(SYM)), PtrT(SYM))
    assert view.to_list() == ["c", "a", "d", "r"]
    # dense ids in first-seen order: car, c, a, d, r
    assert [mem.intern(t) for t in ("car", "c", "r", "zzz")] == [0, 1, 4, 5]
    with pytest.raises(MarshalError):
        to_native(mem, 3.5, I64)


def test_f32_arguments_round():
    f = b.function("g", [("x", F32)], F32, b.ret(b.var("x")))
    assert single(f).apply("g", 0.1)[0] == 0.10000000149011612


@pytest.mark.parametrize("name,arg,expected", [
    ("round.f32", 2.5, 3.0), ("round.f32", -2.5, -3.0), ("trunc.f32", -1.7, -1.0),
    ("round.f64", 0.49999999999999994, 0.0), ("sqrt.f64", 2.0, 2.0 ** 0.5)])
def test_math_intrinsics(name, arg, expected):
    t = F32 if name.endswith("f32") else F64
    f = b.function("g", [("x", t)], t, b.ret(b.ri(name, b.var("x"))))
    assert single(f).apply("g", arg)[0] == pytest.approx(expected, rel=0, abs=1e-7 if t == F32 else 0)


def malloc(n):
    return App(Intrinsic("malloc", FnT((I64,), PtrT(I64))), (b.ui64(8 * n),))


def test_oob_load_trap():
    body = b.let([("p", malloc(2), PtrT(I64))], b.svoid(), b.array_ref(b.var("p"), b.var("i")))
    f = b.function("g", [("i", I64)], I64, b.ret(body))
    cm = single(f)
    assert cm.apply("g", 1)[0] == 0  # malloc zero-fills
    with pytest.raises(Trap) as info:
        cm.apply("g", 2)
    assert info.value.kind == "oob-load"
    assert info.value.function == "g"


def test_use_after_free():
    free = Intrinsic("free", FnT((PtrT(I64),), VOID))
    body = b.let([("p", malloc(1), PtrT(I64))], b.expr_stmt(App(free, (b.var("p"),))),
                 b.array_ref(b.var("p"), b.ui64(0)))
    with pytest.raises(Trap) as info:
        single(b.function("g", [], I64, b.ret(body))).apply("g")
    assert info.value.kind == "use-after-free"


def test_div_by_zero_and_nuw_traps():
    f = b.function("g", [("x", I64), ("y", I64)], I64, b.ret(b.udiv(b.var("x"), b.var("y"))))
    with pytest.raises(Trap) as info:
        single(f).apply("g", 1, 0)
    assert info.value.kind == "div-by-zero"
    g = b.function("g", [("x", I64), ("y", I64)], I64, b.ret(b.sub_nuw(b.var("x"), b.var("y"))))
    with pytest.raises(Trap) as info:
        single(g, 0).apply("g", 1, 2)
    assert info.value.kind == "nuw-overflow"
    assert single(g, 1).apply("g", 1, 2)[0] == -1


def test_globals_and_views():
    m = make_module("m", [b.function("g", [], I64, b.block(
        b.array_set(b.global_ref("buf"), b.ui64(2), b.ui64(9)), b.ret(b.ui64(0))))],
        globals_=[Global("buf", ArrayT(I64, 4))])
    cm = compile_module(m)
    cm.apply("g")
    assert cm.global_view("buf").to_list() == [0, 0, 9, 0]


def test_stats_are_deterministic_and_sane():
    for name, m in benchmark_modules().items():
        if name != "pow":
            continue
        cm = compile_module(m, 0)
        a = cm.apply("pow", 3, 5)
        bb = cm.apply("pow", 3, 5)
        assert a == bb
        s = a[1]
        assert s.instructions >= s.loads + s.stores + s.calls
        assert s.lines()[0].startswith("instructions=")


def test_straight_line_has_no_back_edges():
    cm = compile_module(benchmark_modules()["straight-pow"], 0)
    assert cm.apply("pow10", 2)[1].back_edges == 0


def test_symbol_switch_counts_back_edges_in_loops():
    cm = compile_module(compile_fsa(CADR, "blocks"), 0)
    word = ["c"] + ["a"] * 10 + ["r"]
    value, stats = cm.apply("M", word)
    assert value is True
    assert stats.back_edges >= 10


def test_random_inputs_are_deterministic():
    rng = random.Random(SEED)
    cm = compile_module(pow_module(), 3)
    for _ in range(50):
        x, n = rng.randint(-5, 5), rng.randint(0, 12)
        assert cm.apply("pow", x, n) == cm.apply("pow", x, n)
        assert cm.apply("pow", x, n)[0] == x ** n
