import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dslkit.sexpr import ParseError, Symbol, dumps, read, read_all
from gen_nodes import random_datum

symbols = st.text(alphabet="abcdefghijklmnopqrstuvwxyz+-*/<=>!?.", min_size=1, max_size=8).filter(
    lambda s: not any(c.isdigit() for c in s) and s not in ("+", "-", ".", "...") and not s.startswith("."))
atoms = st.one_of(
    symbols.map(Symbol),
    st.integers(min_value=-(1 << 70), max_value=1 << 70),
    st.floats(allow_nan=False),
    st.booleans(),
    st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=10),
)
data = st.recursive(atoms, lambda inner: st.lists(inner, max_size=4), max_leaves=20)


def test_reads_the_basic_forms():
    assert read("(a 1 2.5 #t \"s\")") == [Symbol("a"), 1, 2.5, True, "s"]
    assert read("[x (y)]") == [Symbol("x"), [Symbol("y")]]
    assert read_all("; comment\n1 2") == [1, 2]


def test_symbols_and_strings_are_distinct():
    s = read('(a "a")')
    assert isinstance(s[0], Symbol)
    assert not isinstance(s[1], Symbol)


def test_special_floats():
    assert read("+inf.0") == math.inf
    assert math.isnan(read("+nan.0"))
    assert dumps(float("-inf")) == "-inf.0"
    assert dumps(1.0) == "1.0"


@pytest.mark.parametrize("text", ["(a", "a)", '"open', "", "1 2"])
def test_malformed_input_raises(text):
    with pytest.raises(ParseError):
        read(text)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        read("(a\n  (b")
    assert info.value.line is not None


@given(data)
def test_dump_read_roundtrip(d):
    assert read(dumps(d)) == d


def test_random_datum_roundtrip(rng):
    for _ in range(200):
        d = random_datum(rng, 3)
        text = dumps(d)
        assert dumps(read(text)) == text
