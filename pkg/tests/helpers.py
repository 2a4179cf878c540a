"""Shared test utilities."""

import math


def same_value(a, b):
    """Bit-level equality for nested lists of floats/ints/bools; NaN == NaN."""
    if isinstance(a, (list, tuple)):
        return (isinstance(b, (list, tuple)) and len(a) == len(b)
                and all(same_value(x, y) for x, y in zip(a, b)))
    if isinstance(a, float) and isinstance(b, float):
        if math.isnan(a) or math.isnan(b):
            return math.isnan(a) and math.isnan(b)
        return a == b and math.copysign(1.0, a) == math.copysign(1.0, b)
    return type(a) is type(b) and a == b


def outcome(thunk, trap_types):
    """Run ``thunk``; a trap becomes ``("trap", kind)``."""
    try:
        return thunk()
    except trap_types as e:
        return ("trap", getattr(e, "kind", type(e).__name__))


def benchmark_modules():
    """Name -> HIR module for every bundled benchmark program."""
    from dslkit.bench import pow_module, program_text, straight_pow_module
    from dslkit.dsls.fsa import CADR, compile_fsa, more_chain_module
    from dslkit.dsls.mhk import mhk_module, parse_program
    from dslkit.dsls.synth import Score, Voice, synth_build

    score = Score(8000.0, 64, (Voice(440.0, 0, 64, 0.5), Voice(220.0, 16, 32, 0.25)))
    return {
        "pow": pow_module(),
        "straight-pow": straight_pow_module(10),
        "fsa-functions": compile_fsa(CADR, "functions"),
        "fsa-blocks": compile_fsa(CADR, "blocks"),
        "more-chain": more_chain_module(4),
        "synth": synth_build(score, specialize=False).module,
        "synth-spec": synth_build(score).module,
        "normalize": mhk_module(parse_program(program_text("normalize.mhk"))),
        "two-sums": mhk_module(parse_program(program_text("two-sums.mhk"))),
    }
