import random

import pytest

from conftest import SEED
from dslkit.astdef import pretty
from dslkit.bench import program_text
from dslkit.dsls.mhk import (MhkConfig, MhkError, MhkProgram, UnsupportedConstruct, anf,
                             index_rewrite, is_anf, mhk_compile, mhk_module, mhk_run, parse_expr,
                             parse_program)
from dslkit.dsls.mhk.grammar import (BOOL, NAT, REAL, app, array_t, constant_t, for_, if_,
                                     index, let, make_node, summate, val, var, HAKARU)
from dslkit.dsls.mhk.rewrite import r1_literal_if, r2_constant_var, r3_constant_array
from dslkit.hir.nodes import While
from dslkit.opt.hirutil import walk_stmts
from gen_mhk import MhkGen
from helpers import same_value
from oracles.mhk_oracle import evaluate, run_program

RA = array_t(REAL)
NORMALIZE = parse_program(program_text("normalize.mhk"))
TWO_SUMS = parse_program(program_text("two-sums.mhk"))


def x():
    return var(REAL, "x")


# -- ANF ---------------------------------------------------------------------------


def test_anf_nested_application():
    e = app(REAL, "neg", app(REAL, "exp", x()))
    expected = let("t0", app(REAL, "exp", x()), app(REAL, "neg", var(REAL, "t0")))
    assert anf(e) == expected


def test_anf_leaves_atoms():
    assert anf(x()) == x()
    assert anf(val(REAL, 1.0)) == val(REAL, 1.0)


def test_anf_fresh_names_avoid_existing():
    e = app(REAL, "+", var(REAL, "t0"), app(REAL, "exp", x()))
    out = anf(e)
    assert is_anf(out)
    assert pretty(out).count("(pvar t0)") == 0


def test_anf_preserves_meaning():
    gen = MhkGen(random.Random(SEED))
    for _ in range(300):
        prog = gen.program()
        inputs = gen.inputs()
        converted = prog.with_body(anf(prog.body))
        assert is_anf(converted.body)
        assert same_value(run_program(prog, inputs), run_program(converted, inputs))


# -- index rewrite rules ---------------------------------------------------------------


def literal(*vals):
    return app(RA, "array-literal", *vals)


def chk():
    return app(BOOL, "<", x(), var(REAL, "y"))


def test_r1_fires():
    v = [val(REAL, 1.5), val(REAL, 2.5), val(REAL, 3.5)]
    e = index(literal(*v), if_(NAT, chk(), val(NAT, 0), val(NAT, 2)))
    assert index_rewrite(e) == if_(REAL, chk(), v[0], v[2])
    assert r1_literal_if(e) is not None


def test_r1_guard_on_length():
    v = [val(REAL, float(k)) for k in range(6)]
    e = index(literal(*v), if_(NAT, chk(), val(NAT, 0), val(NAT, 2)))
    assert index_rewrite(e) == e
    four = index(literal(*v[:4]), if_(NAT, chk(), val(NAT, 0), val(NAT, 3)))
    assert index_rewrite(four) != four
    five = index(literal(*v[:5]), if_(NAT, chk(), val(NAT, 0), val(NAT, 3)))
    assert index_rewrite(five) == five


def test_r1_guard_on_range():
    v = [val(REAL, 1.0), val(REAL, 2.0)]
    e = index(literal(*v), if_(NAT, chk(), val(NAT, 0), val(NAT, 5)))
    assert r1_literal_if(e) is None


def test_r2_constant_variable():
    c = var(array_t(constant_t(4.0)), "c")
    e = app(constant_t(4.0), "index", c, var(NAT, "i"))
    assert index_rewrite(e) == val(constant_t(4.0), 4.0)
    assert r2_constant_var(index(var(RA, "a"), var(NAT, "i"))) is None


def test_r3_constant_value_array():
    arr = app(RA, "constant-value-array", var(NAT, "n"), x())
    e = index(arr, var(NAT, "i"))
    assert index_rewrite(e) == x()
    assert r3_constant_array(index(var(RA, "a"), var(NAT, "i"))) is None


def nested(e):
    return app(REAL, "+", val(REAL, 1.0), e)


def test_rules_fire_bottom_up_inside_terms():
    arr = app(RA, "constant-value-array", val(NAT, 3), x())
    e = nested(index(arr, val(NAT, 1)))
    assert index_rewrite(e) == nested(x())


def rule_instances(rule, rng):
    """Programs containing one instance of ``rule`` plus matching inputs."""
    params = (("x", REAL), ("y", REAL), ("n", NAT))
    for _ in range(100):
        inputs = {"x": rng.uniform(-2, 2), "y": rng.uniform(-2, 2), "n": rng.randint(1, 6)}
        if rule == "r1":
            k = rng.randint(1, 4)
            elems = [rng.choice([val(REAL, rng.uniform(-9, 9)), x(), var(REAL, "y")]) for _ in range(k)]
            i, j = rng.randrange(k), rng.randrange(k)
            body = index(literal(*elems), if_(NAT, chk(), val(NAT, i), val(NAT, j)))
            prog = MhkProgram("r", params, body)
        elif rule == "r2":
            v = float(rng.randint(-5, 5))
            t = array_t(constant_t(v))
            i = rng.randrange(inputs["n"])
            body = app(REAL, "+", x(), app(constant_t(v), "index", var(t, "c"), val(NAT, i)))
            prog = MhkProgram("r", params + (("c", t),), body)
            inputs["c"] = [v] * inputs["n"]
        else:
            i = rng.randrange(inputs["n"])
            arr = app(RA, "constant-value-array", var(NAT, "n"), app(REAL, "*", x(), var(REAL, "y")))
            body = index(arr, val(NAT, i))
            prog = MhkProgram("r", params, body)
        yield prog, inputs


@pytest.mark.parametrize("rule", ["r1", "r2", "r3"])
def test_rules_preserve_meaning(rule):
    rng = random.Random(SEED)
    fired = 0
    for prog, inputs in rule_instances(rule, rng):
        rewritten = prog.with_body(index_rewrite(prog.body))
        fired += rewritten != prog
        expected = run_program(prog, inputs)
        assert same_value(expected, run_program(rewritten, inputs))
        got = mhk_run(prog, inputs, MhkConfig(0, fold=True))[0]
        assert same_value(expected, got)
    assert fired == 100


# -- lowering and running ---------------------------------------------------------------


def test_summate_example():
    prog = MhkProgram("s", (("a", RA),), summate("i", val(NAT, 0), val(NAT, 4), index(var(RA, "a"), var(NAT, "i"))))
    assert mhk_run(prog, {"a": [1.0, 2.0, 3.0, 4.0]})[0] == 10.0


def test_normalize_example():
    for cfg in (MhkConfig(0), MhkConfig(3)):
        assert mhk_run(NORMALIZE, {"a": [2.0, 2.0, 4.0]}, cfg)[0] == [0.25, 0.25, 0.5]


def test_bucket_unsupported():
    reducer = make_node(HAKARU, "nop")
    e = make_node(HAKARU, "bucket", REAL, val(NAT, 0), val(NAT, 3), reducer)
    with pytest.raises(UnsupportedConstruct):
        mhk_module(MhkProgram("b", (), e))


def test_pair_pattern_unsupported():
    p = make_node(HAKARU, "pair", make_node(HAKARU, "pvar", "u"), make_node(HAKARU, "pvar", "v"))
    e = make_node(HAKARU, "match", REAL, x(), (make_node(HAKARU, "branch", p, x()),))
    with pytest.raises(UnsupportedConstruct):
        mhk_module(MhkProgram("b", (("x", REAL),), e))


def test_unbound_variable_rejected():
    with pytest.raises(MhkError):
        MhkProgram("b", (), x())


def whiles(cfg, prog=TWO_SUMS):
    m = mhk_module(prog, cfg)
    return sum(1 for f in m.functions.values() for s in walk_stmts(f.body) if isinstance(s, While))


def test_fusion_merges_loops():
    assert whiles(MhkConfig(0, fuse=True)) == 1
    assert whiles(MhkConfig(0, fuse=False)) == 2
    a = [float(k % 5) for k in range(100)]
    fused = mhk_run(TWO_SUMS, {"a": a}, MhkConfig(3))
    split = mhk_run(TWO_SUMS, {"a": a}, MhkConfig(3, fuse=False))
    assert fused[0] == split[0] == sum(a) + sum(v * v for v in a)
    assert fused[1].back_edges <= 100 + 4
    assert split[1].back_edges >= 200


def test_licm_makes_normalize_linear():
    def count(n, licm):
        a = [float(k % 7 + 1) for k in range(n)]
        return mhk_run(NORMALIZE, {"a": a}, MhkConfig(3, licm=licm))[1].instructions

    slow = [count(n, False) for n in (64, 128)]
    fast = [count(n, True) for n in (64, 128)]
    assert 3.5 <= slow[1] / slow[0] <= 4.5
    assert 1.8 <= fast[1] / fast[0] <= 2.2
    assert fast[1] < slow[1] / 10


def test_program_text_roundtrip():
    for prog in (NORMALIZE, TWO_SUMS):
        assert parse_program(prog.text()) == prog


def test_parse_expr():
    e = parse_expr("(app real (intrf +) (val real 1.0) (val real 2.0))")
    assert evaluate(e, {}) == 3.0


def test_array_results_and_for():
    body = for_("i", val(NAT, 0), val(NAT, 3), app(REAL, "real", var(NAT, "i")))
    prog = MhkProgram("f", (), body)
    assert mhk_run(prog, {})[0] == [0.0, 1.0, 2.0]
    compiled = mhk_compile(prog, MhkConfig(3))
    assert mhk_run(prog, {}, cm=compiled)[0] == [0.0, 1.0, 2.0]
