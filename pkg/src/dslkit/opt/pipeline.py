"""Opt-level pipelines and the pass driver.

=====  ============================================  =========================================
level  HIR passes                                    LIR passes
=====  ============================================  =========================================
0      none                                          none
1      const-fold, dce                               const-fold, dce
2      inline-always, const-fold, dce                load-store-elim, const-fold, dce
3      level 2 + licm, const-fold, dce               load-store-elim, const-fold, dce
=====  ============================================  =========================================

An explicit pass list replaces the level's list; each named pass runs at
the IR level(s) it exists for, HIR passes first. The module is typechecked
after every HIR pass and verified after every LIR pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..hir.typecheck import typecheck_module
from ..lir import check, size
from ..lower import lower_module
from .constfold import const_fold_hir, const_fold_lir
from .dce import dce_hir, dce_lir
from .hirutil import module_size
from .inline import inline_always
from .licm import licm
from .lse import load_store_elim

HIR_PASSES = {
    "inline-always": inline_always,
    "const-fold": const_fold_hir,
    "dce": dce_hir,
    "licm": licm,
}

LIR_PASSES = {
    "load-store-elim": load_store_elim,
    "const-fold": const_fold_lir,
    "dce": dce_lir,
}

PASS_NAMES = ("inline-always", "const-fold", "dce", "licm", "load-store-elim")

LEVELS = {
    0: ((), ()),
    1: (("const-fold", "dce"), ("const-fold", "dce")),
    2: (("inline-always", "const-fold", "dce"), ("load-store-elim", "const-fold", "dce")),
    3: (("inline-always", "const-fold", "dce", "licm", "const-fold", "dce"),
        ("load-store-elim", "const-fold", "dce")),
}


class UnknownPass(ValueError):
    pass


@dataclass(frozen=True)
class PassConfig:
    opt_level: int = 0
    passes: tuple | None = None
    specializations: tuple = ()  # ((function name, {param: binding}), ...)
    disabled: tuple = ()  # pass names dropped from the schedule

    def __post_init__(self):
        if self.opt_level not in LEVELS:
            raise ValueError(f"opt level must be 0..3, got {self.opt_level}")
        if self.passes is not None:
            object.__setattr__(self, "passes", tuple(self.passes))
            for p in self.passes:
                if p not in PASS_NAMES:
                    raise UnknownPass(p)
        object.__setattr__(self, "disabled", tuple(self.disabled))
        for p in self.disabled:
            if p not in PASS_NAMES:
                raise UnknownPass(p)

    def schedule(self):
        """``(hir pass names, lir pass names)``."""
        if self.passes is None:
            hir, lir = LEVELS[self.opt_level]
        else:
            hir = tuple(p for p in self.passes if p in HIR_PASSES)
            lir = tuple(p for p in self.passes if p in LIR_PASSES)
        return (tuple(p for p in hir if p not in self.disabled),
                tuple(p for p in lir if p not in self.disabled))


@dataclass(frozen=True)
class PassStat:
    name: str
    stage: str
    before: int
    after: int

    def line(self):
        return f"pass={self.name} before={self.before} after={self.after} stage={self.stage}"


@dataclass
class PipelineResult:
    hmodule: object
    lmodule: object
    stats: list = field(default_factory=list)
    spec_names: dict = field(default_factory=dict)

    def stat_lines(self):
        return [s.line() for s in self.stats]


def run_hir_passes(m, names, stats=None):
    for name in names:
        before = module_size(m)
        m = typecheck_module(HIR_PASSES[name](m))
        if stats is not None:
            stats.append(PassStat(name, "hir", before, module_size(m)))
    return m


def run_lir_passes(lm, names, stats=None):
    for name in names:
        before = size(lm)
        lm = check(LIR_PASSES[name](lm))
        if stats is not None:
            stats.append(PassStat(name, "lir", before, size(lm)))
    return lm


def run_pipeline(m, cfg: PassConfig | int | None = None) -> PipelineResult:
    if cfg is None:
        cfg = PassConfig()
    elif isinstance(cfg, int):
        cfg = PassConfig(opt_level=cfg)
    m = typecheck_module(m)
    spec_names = {}
    if cfg.specializations:
        from .specialize import specialize_function
        for fn_name, bindings in cfg.specializations:
            m, new = specialize_function(m, fn_name, bindings)
            spec_names.setdefault(fn_name, []).append(new)
    hir_names, lir_names = cfg.schedule()
    stats = []
    m = run_hir_passes(m, hir_names, stats)
    lm = check(lower_module(m))
    lm = run_lir_passes(lm, lir_names, stats)
    return PipelineResult(m, lm, stats, spec_names)
