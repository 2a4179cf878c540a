"""A small sawtooth synthesizer rendered through HIR.

Stage one runs on the host: the score is read, the sample rate is obtained
through the ``sampling-freq`` host function, and each voice's frequency,
start, duration and gain are baked into the generated code. Stage two is
the generated ``fill`` loop, which writes one f32 sample per index:

    sample(x) = sum over active voices of gain * sawtooth(freq, x - start)

Mixing is a plain gain-weighted sum with no normalization. ``sawtooth`` is
the f32 formula: ``period = round(rate/freq)``, ``half = trunc(period/2)``,
``x* = frem(x, period)``, result ``x*/half - 1``.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass, field

from .. import numerics
from ..exec.engine import HostRegistry, compile_module
from ..hir.build import (add, app, array_set, block, expr_stmt, fadd, fdiv, fl32, frem, fmul,
                         fsub, function, icmp_ule, icmp_ult, if_, let, ret, ri, set_, sub,
                         ui64, ui_to_fp, var, while_)
from ..hir.build import cast as cast_
from ..hir.nodes import make_module
from ..hir.types import F32, I32, I64, FnT, PtrT
from ..opt.pipeline import PassConfig
from ..opt.specialize import StaticAddress, StaticValue, specialize_function
from ..sexpr import Symbol, read_all

F32_BUF = PtrT(F32)


class InvalidScore(ValueError):
    pass


class IoError(OSError):
    pass


@dataclass(frozen=True)
class Voice:
    freq: float
    start: int
    dur: int
    gain: float = 1.0


@dataclass(frozen=True)
class Score:
    rate: float
    length: int
    voices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "voices", tuple(self.voices))
        if not self.rate > 0:
            raise InvalidScore(f"sample rate must be positive, got {self.rate}")
        if self.length < 0:
            raise InvalidScore("length must be non-negative")
        for v in self.voices:
            if not v.freq > 0:
                raise InvalidScore(f"voice frequency must be positive, got {v.freq}")
            if v.start < 0 or v.dur < 0 or v.start + v.dur > self.length:
                raise InvalidScore(f"voice [{v.start}, {v.start + v.dur}) outside [0, {self.length})")
            if not 0.0 <= v.gain <= 1.0:
                raise InvalidScore(f"gain must be in [0, 1], got {v.gain}")


def parse_score(text: str) -> Score:
    """``(score :rate hz :length n (voice :freq hz :start n :dur n :gain g) ...)``"""
    forms = read_all(text)
    if len(forms) != 1 or not isinstance(forms[0], list) or not forms[0] or forms[0][0] != "score":
        raise InvalidScore("expected a single (score ...) form")

    def keywords(items, where):
        out, rest, i = {}, [], 0
        while i < len(items):
            x = items[i]
            if isinstance(x, Symbol) and x.startswith(":"):
                if i + 1 >= len(items):
                    raise InvalidScore(f"{where}: {x} has no value")
                out[x[1:]] = items[i + 1]
                i += 2
            else:
                rest.append(x)
                i += 1
        return out, rest

    kw, rest = keywords(forms[0][1:], "score")
    voices = []
    for v in rest:
        if not (isinstance(v, list) and v and v[0] == "voice"):
            raise InvalidScore(f"expected (voice ...), got {v!r}")
        vk, extra = keywords(v[1:], "voice")
        if extra or not {"freq", "start", "dur"} <= set(vk):
            raise InvalidScore(f"voice needs :freq :start :dur, got {v!r}")
        voices.append(Voice(float(vk["freq"]), int(vk["start"]), int(vk["dur"]),
                            float(vk.get("gain", 1.0))))
    if "rate" not in kw or "length" not in kw:
        raise InvalidScore("score needs :rate and :length")
    return Score(float(kw["rate"]), int(kw["length"]), tuple(voices))


def load_score(path) -> Score:
    with open(path) as fh:
        return parse_score(fh.read())


# -- code generation -----------------------------------------------------------------

SAMPLING_FREQ_TYPE = FnT((), F32)


def default_registry(score: Score) -> HostRegistry:
    return HostRegistry().register("sampling-freq", SAMPLING_FREQ_TYPE, lambda: numerics.f32(score.rate))


def sawtooth_function():
    """The sawtooth with the sample rate as a parameter."""
    rate, freq, x = var("rate"), var("freq"), var("x")
    period = ri("round.f32", fdiv(rate, freq))
    body = ret(let([("period", period, F32)], [],
                   let([("half", ri("trunc.f32", fdiv(var("period"), fl32(2.0))), F32),
                        ("xs", frem(ui_to_fp(x, F32), var("period")), F32)], [],
                       fsub(fdiv(var("xs"), var("half")), fl32(1.0)))))
    return function("sawtooth", [("rate", F32), ("freq", F32), ("x", I32)], F32, body, attrs={"pure"})


def fill_function(score: Score):
    """``fill(out, n, rate)`` writes ``n`` samples into ``out`` and returns it."""
    x, acc = var("x"), var("acc")
    voice_stmts = []
    for v in score.voices:
        phase = cast_("trunc", sub(x, ui64(v.start)), I32)
        term = fmul(fl32(v.gain), app("sawtooth", var("rate"), fl32(v.freq), phase))
        voice_stmts.append(if_(icmp_ule(ui64(v.start), x),
                               if_(icmp_ult(x, ui64(v.start + v.dur)), set_("acc", fadd(acc, term)))))
    loop = while_(icmp_ult(x, var("n")),
                  set_("acc", fl32(0.0)),
                  *voice_stmts,
                  array_set(var("out"), x, acc),
                  set_("x", add(x, ui64(1))))
    body = block(expr_stmt(let([("x", ui64(0), I64), ("acc", fl32(0.0), F32)], loop)),
                 ret(var("out")))
    return function("fill", [("out", F32_BUF), ("n", I64), ("rate", F32)], F32_BUF, body)


def synth_module(score: Score):
    return make_module("synth", [sawtooth_function(), fill_function(score)])


@dataclass
class SynthBuild:
    module: object
    entry: str
    specialized: bool
    buffer: str | None = None  # name of the preallocated output global


def synth_build(score: Score, registry: HostRegistry | None = None, specialize=True) -> SynthBuild:
    """Generate the module; with ``specialize`` the rate (queried from the
    ``sampling-freq`` host function at generation time), the length and the
    output buffer address are bound into ``fill@spec0``."""
    m = synth_module(score)
    if not specialize:
        return SynthBuild(m, "fill", False)
    registry = registry or default_registry(score)
    rate = registry["sampling-freq"].fn()
    m, name = specialize_function(m, "fill", {"rate": StaticValue(float(rate)),
                                              "n": StaticValue(score.length),
                                              # globals cannot be empty, so a silent score still gets one slot
                                              "out": StaticAddress(max(1, score.length))})
    return SynthBuild(m, name, True, f"{name}.out.static")


def render(score: Score, opt=3, specialize=True, registry=None):
    """Return ``(samples, ExecStats, CompiledModule)``."""
    build = synth_build(score, registry, specialize)
    cfg = opt if isinstance(opt, PassConfig) else PassConfig(opt_level=opt)
    cm = compile_module(build.module, cfg)
    samples, stats = run_build(build, cm, score)
    return samples, stats, cm


def run_build(build: SynthBuild, cm, score: Score):
    """Run a compiled build; returns ``(samples, ExecStats)``."""
    if build.specialized:
        view, stats = cm.apply(build.entry)
    else:
        view, stats = cm.apply(build.entry, [0.0] * score.length, score.length,
                               numerics.f32(score.rate))
    return view.to_list(score.length), stats


def sawtooth_reference(rate, freq, x):
    """The sawtooth formula evaluated directly with f32 rounding."""
    f = numerics.f32
    period = f(numerics.round_half_away(f(f(rate) / f(freq))))
    half = f(numerics.ftrunc(f(period / f(2.0))))
    xs = f(numerics.frem(numerics.int_to_f32(x), period))
    return f(f(xs / half) - f(1.0))


# -- WAV output ------------------------------------------------------------------------


def pcm16(s: float) -> int:
    s = min(1.0, max(-1.0, s))
    return int(numerics.round_half_away(s * 32767.0))


def wav_bytes(samples) -> bytes:
    return b"".join(pcm16(s).to_bytes(2, "little", signed=True) for s in samples)


def write_wav(samples, rate, path):
    """Mono 16-bit PCM; each sample is clamped to [-1, 1] and scaled by 32767."""
    try:
        with wave.open(str(path), "wb") as w:
            w.setnchannels(1)
            w.setsampwidth(2)
            w.setframerate(int(round(rate)))
            w.writeframes(wav_bytes(samples))
    except OSError as e:
        raise IoError(str(e)) from e
