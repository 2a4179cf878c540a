"""mini-Hakaru: a pure array-loop language with ANF, index rewriting,
loop fusion and pure-helper lowering for LICM."""

from .anf import anf, is_anf
from .grammar import (HAKARU, MhkError, MhkProgram, UnsupportedConstruct, load_program,
                      parse_expr, parse_program)
from .lower import lower_program
from .rewrite import index_rewrite
from .run import MhkConfig, mhk_compile, mhk_module, mhk_run, prepare

__all__ = ["HAKARU", "MhkConfig", "MhkError", "MhkProgram", "UnsupportedConstruct", "anf",
           "index_rewrite", "is_anf", "load_program", "lower_program", "mhk_compile",
           "mhk_module", "mhk_run", "parse_expr", "parse_program", "prepare"]
