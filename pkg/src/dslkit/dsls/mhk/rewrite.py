"""Index simplification rules, applied in one bottom-up pass.

R1  index(array-literal(c...), if(chk, nat i, nat j))  ->  if(chk, c[i], c[j])
    when the literal has fewer than 5 elements
R2  index(x : (array (constant v)), _)                  ->  v
R3  index(constant-value-array(size, content), _)       ->  content
"""

from __future__ import annotations

from ...astdef import rewrite_bottom_up
from .grammar import NAT, elem_type, if_, is_array_type, is_constant_type, op_of, val

LITERAL_LIMIT = 5


def r1_literal_if(e):
    if op_of(e) != "index":
        return None
    arr, ind = e.rands
    if op_of(arr) != "array-literal" or ind.production != "if":
        return None
    contents = arr.rands
    if len(contents) >= LITERAL_LIMIT:
        return None
    thn, els = ind.thn, ind.els
    if not (thn.production == "val" and els.production == "val"
            and thn.type == NAT and els.type == NAT):
        return None
    i, j = thn.v, els.v
    if not all(isinstance(k, int) and 0 <= k < len(contents) for k in (i, j)):
        return None
    return if_(e.type, ind.tst, contents[i], contents[j])


def r2_constant_var(e):
    if op_of(e) != "index":
        return None
    arr = e.rands[0]
    if arr.production != "var" or not is_array_type(arr.type):
        return None
    t = elem_type(arr.type)
    if not is_constant_type(t):
        return None
    return val(e.type, t[1])


def r3_constant_array(e):
    if op_of(e) != "index":
        return None
    arr = e.rands[0]
    if op_of(arr) != "constant-value-array":
        return None
    return arr.rands[1]


RULES = {"expr": (r1_literal_if, r2_constant_var, r3_constant_array)}


def index_rewrite(e):
    return rewrite_bottom_up(RULES, e)
