"""Compile and run mini-Hakaru programs."""

from __future__ import annotations

from dataclasses import dataclass

from ...exec.engine import compile_module
from ...opt.pipeline import PassConfig
from .anf import anf
from .grammar import MhkError, elem_type, is_array_type, scalar_kind
from .lower import RESULT_LEN, lower_program
from .rewrite import index_rewrite


@dataclass(frozen=True)
class MhkConfig:
    """The ablation switches: each flag turns one optimization off."""

    opt_level: int = 3
    fuse: bool = True
    licm: bool = True
    fold: bool = True
    helpers: bool = True

    def pass_config(self) -> PassConfig:
        disabled = ()
        if not self.licm:
            disabled += ("licm",)
        if not self.fold:
            disabled += ("const-fold",)
        return PassConfig(opt_level=self.opt_level, disabled=disabled)

    def label(self) -> str:
        off = [n for n in ("fuse", "licm", "fold") if not getattr(self, n)]
        return f"O{self.opt_level}" + "".join(f" no-{n}" for n in off)


def prepare(program, cfg: MhkConfig = MhkConfig()):
    """Source-level passes: index rewriting (when folding) and ANF."""
    body = program.body
    if cfg.fold:
        body = index_rewrite(body)
    return program.with_body(anf(body))


def mhk_module(program, cfg: MhkConfig = MhkConfig()):
    return lower_program(prepare(program, cfg), fuse=cfg.fuse, helpers=cfg.helpers)


def mhk_compile(program, cfg: MhkConfig = MhkConfig()):
    return compile_module(mhk_module(program, cfg), cfg.pass_config())


def _host_args(program, inputs):
    args = []
    for name, t in program.params:
        if name not in inputs:
            raise MhkError(f"missing input {name}")
        v = inputs[name]
        if is_array_type(t):
            if not isinstance(v, (list, tuple)):
                raise MhkError(f"input {name} must be a list")
            kind = scalar_kind(elem_type(t))
            v = [float(x) if kind == "real" else int(x) for x in v]
            args += [v, len(v)]
        else:
            kind = scalar_kind(t)
            args.append(float(v) if kind == "real" else int(bool(v)) if kind == "bool" else int(v))
    return args


def _signed(v):
    return v - (1 << 64) if v >= 1 << 63 else v


def _from_host(v, t):
    kind = scalar_kind(t)
    if kind == "int":
        return _signed(int(v))
    if kind == "bool":
        return bool(v)
    return float(v)


def mhk_run(program, inputs: dict, cfg: MhkConfig | None = None, cm=None):
    """Return ``(value, ExecStats)``; an array result comes back as a list."""
    cfg = cfg or MhkConfig()
    cm = cm or mhk_compile(program, cfg)
    value, stats = cm.apply(program.name, *_host_args(program, inputs))
    rtype = program.body.values[0]
    if is_array_type(rtype):
        n = cm.global_view(RESULT_LEN)[0]
        et = elem_type(rtype)
        return [_from_host(x, et) for x in value.to_list(_signed(n))], stats
    return _from_host(value, rtype), stats



