"""Tree-walking reference interpreter for mini-Hakaru.

Written straight from the grammar: it reads only ``production`` and the
field values of each node and shares no code with the compiler path.
"""

import math

MASK = (1 << 64) - 1


class OracleTrap(Exception):
    def __init__(self, kind):
        super().__init__(kind)
        self.kind = kind


def wrap(v):
    v &= MASK
    return v - (1 << 64) if v >> 63 else v


def is_real(t):
    if isinstance(t, tuple) and t and t[0] == "constant":
        return isinstance(t[1], float)
    return t == "real"


def ieee_div(a, b):
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.copysign(math.inf, sign)
    return a / b


def ieee_log(a):
    if math.isnan(a) or a < 0:
        return math.nan
    if a == 0:
        return -math.inf
    if math.isinf(a):
        return math.inf
    return math.log(a)


def ieee_sqrt(a):
    if math.isnan(a) or a < 0:
        return math.nan
    return math.sqrt(a)


def ieee_exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def evaluate(node, env):
    p = node.production
    v = node.values
    if p == "val":
        t, x = v
        if is_real(t):
            return float(x)
        if t == "bool":
            return bool(x)
        return int(x)
    if p == "var":
        return env[str(v[1])]
    if p == "if":
        return evaluate(v[2] if evaluate(v[1], env) else v[3], env)
    if p == "match":
        scrut = evaluate(v[1], env)
        (br,) = v[2]
        pat, body = br.values
        if pat.production != "pvar":
            raise NotImplementedError("pair patterns")
        return evaluate(body, {**env, str(pat.values[0]): scrut})
    if p == "for":
        t, i, lo, hi, body = v
        lo, hi = evaluate(lo, env), evaluate(hi, env)
        return [evaluate(body, {**env, str(i): k}) for k in range(lo, hi)]
    if p == "summate":
        t, i, lo, hi, body = v
        lo, hi = evaluate(lo, env), evaluate(hi, env)
        real = is_real(t)
        acc = 0.0 if real else 0
        for k in range(lo, hi):
            x = evaluate(body, {**env, str(i): k})
            acc = acc + x if real else wrap(acc + x)
        return acc
    if p == "app":
        t, rator, rands = v
        op = str(rator.values[0])
        args = [evaluate(r, env) for r in rands]
        return apply_op(op, t, rands, args)
    raise NotImplementedError(p)


def apply_op(op, t, rands, args):
    if op in ("+", "-", "*", "/"):
        a, b = args
        if is_real(t):
            if op == "/":
                return ieee_div(a, b)
            return {"+": a + b, "-": a - b, "*": a * b}[op]
        return wrap({"+": a + b, "-": a - b, "*": a * b}[op])
    if op in ("<", "<=", "=="):
        a, b = args
        return {"<": a < b, "<=": a <= b, "==": a == b}[op]
    if op == "neg":
        return args[0] * -1.0 if is_real(t) else wrap(-args[0])
    if op == "real":
        return float(args[0])
    if op == "exp":
        return ieee_exp(args[0])
    if op == "log":
        return ieee_log(args[0])
    if op == "sqrt":
        return ieee_sqrt(args[0])
    if op == "index":
        arr, i = args
        if not 0 <= i < len(arr):
            raise OracleTrap("out-of-bounds")
        return arr[i]
    if op == "size":
        return len(args[0])
    if op == "array-literal":
        return list(args)
    if op == "constant-value-array":
        n, c = args
        return [c] * max(0, n)
    raise NotImplementedError(op)


def run_program(program, inputs):
    env = {}
    for name, t in program.params:
        x = inputs[name]
        if isinstance(t, tuple) and t[0] == "array":
            env[name] = [float(e) if is_real(t[1]) else int(e) for e in x]
        else:
            env[name] = float(x) if is_real(t) else x
    return evaluate(program.body, env)
