"""Straight-line programs over modular arithmetic, and their faulted execution.

A Program is a fixed list of instructions over named write-once registers:
no branches, no loops. Conditionals exist only as CheckEq, which aborts the
run with the error constant when its comparison fails. This shape makes every
fault site enumerable:

  * WriteOf(i)      - permanent: the value stored by instruction i is replaced
                      for the rest of the run.
  * ReadOf(i, slot) - transient: one operand fetch of instruction i sees the
                      replacement; the register itself is untouched.
  * SkipRange(a, b) - instructions wholly inside [a, b] are not executed.

Fault kinds are Zero (replacement 0), Randomize (attacker-chosen replacement),
and Skip. A skipped instruction leaves a deterministic pseudo-random fill in
its destination register - the memory content an attacker would find after the
store never happened. A skipped CheckEq counts as passed. A skipped Return
releases the zero-initialized output buffer.

Raw inputs (loaded by LoadInput) can be faulted transiently at each read but
have no WriteOf site. Random draws are per-instruction-site seeded streams, so
a plan never shifts the draws of untouched sites and faulted runs share their
r values with the fault-free baseline.
"""

from __future__ import annotations

import functools
import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum

from .modmath import is_prime

# ------------------------------------------------------------------ registers


ERROR_CONSTANT = "error"  # released instead of any residue when a check fails


# ---------------------------------------------------------------- instructions


@dataclass(frozen=True)
class LoadInput:
    dst: str
    name: str


@dataclass(frozen=True)
class DrawRandomPrime:
    """Draw a random prime of the given bit width into dst.

    distinct_from lists register names whose current values the draw must
    avoid (coprimality constraints between overring factors). The constraint
    lookups are not operand reads and carry no fault sites.
    """

    dst: str
    bits: int
    distinct_from: tuple[str, ...] = ()


@dataclass(frozen=True)
class Const:
    dst: str
    value: int


@dataclass(frozen=True)
class BinOp:
    """dst <- a op b, optionally reduced mod the value of register mod.

    op "div" is exact integer division and crashes the run on a nonzero
    remainder or zero divisor; without a modulus, sub may go negative.
    """

    dst: str
    op: str  # add | sub | mul | div
    a: str
    b: str
    mod: str | None = None


@dataclass(frozen=True)
class ModReduce:
    dst: str
    src: str
    mod: str


@dataclass(frozen=True)
class ModExp:
    dst: str
    base: str
    exp: str
    mod: str


@dataclass(frozen=True)
class ModInv:
    dst: str
    src: str
    mod: str


@dataclass(frozen=True)
class CheckEq:
    """Abort with the error constant unless a == b (mod m when given)."""

    a: str
    b: str
    mod: str | None = None


@dataclass(frozen=True)
class Ret:
    src: str


Instr = LoadInput | DrawRandomPrime | Const | BinOp | ModReduce | ModExp | ModInv | CheckEq | Ret

_BINOPS = ("add", "sub", "mul", "div")


def dst_of(ins: Instr) -> str | None:
    return getattr(ins, "dst", None)


def reads_of(ins: Instr) -> tuple[tuple[int, str], ...]:
    """Operand fetches of an instruction as (slot, register) pairs."""
    if isinstance(ins, BinOp):
        slots = [(0, ins.a), (1, ins.b)]
        if ins.mod is not None:
            slots.append((2, ins.mod))
        return tuple(slots)
    if isinstance(ins, ModReduce):
        return ((0, ins.src), (1, ins.mod))
    if isinstance(ins, ModExp):
        return ((0, ins.base), (1, ins.exp), (2, ins.mod))
    if isinstance(ins, ModInv):
        return ((0, ins.src), (1, ins.mod))
    if isinstance(ins, CheckEq):
        slots = [(0, ins.a), (1, ins.b)]
        if ins.mod is not None:
            slots.append((2, ins.mod))
        return tuple(slots)
    if isinstance(ins, Ret):
        return ((0, ins.src),)
    return ()


def modulus_reg(ins: Instr) -> str | None:
    """The register an instruction reduces by, if any."""
    if isinstance(ins, (ModReduce, ModExp, ModInv)):
        return ins.mod
    if isinstance(ins, BinOp):
        return ins.mod
    return None


# ------------------------------------------------------------------- metadata


@dataclass(frozen=True)
class InfectionFactor:
    """One multiplicative verification factor c = (a - b + 1) mod m.

    diff_idx is the subtraction writing (a - b) mod m, c_idx the final add.
    group ties replicated copies of the same logical invariant together.
    """

    c_reg: str
    a_reg: str
    b_reg: str
    mod_reg: str | None
    diff_idx: int
    c_idx: int
    group: int


@dataclass(frozen=True)
class ProgramMeta:
    """Structural annotations the transforms and the report writer rely on."""

    phases: tuple[str, ...] = ()  # one tag per instruction
    verification_checks: tuple[int, ...] = ()  # CheckEq indices
    factors: tuple[InfectionFactor, ...] = ()
    infection_indices: tuple[int, ...] = ()  # product chain + final ModExp
    output_tail: tuple[int, ...] = ()  # result retrieval, not faultable as data
    checksum_power: int = 0  # 1: collisions ~1/r, 2: ~1/r^2, 0: no checksum ring
    r_regs: tuple[str, ...] = ()  # registers holding the small checksum moduli
    n_reg: str | None = None  # register holding p*q when the program computes it
    one_reg: str | None = None


@dataclass(frozen=True)
class Program:
    name: str
    inputs: tuple[str, ...]
    instrs: tuple[Instr, ...]
    meta: ProgramMeta = field(default_factory=ProgramMeta)

    def __len__(self) -> int:
        return len(self.instrs)


# ------------------------------------------------------------------ validation


@dataclass(frozen=True)
class Defect:
    kind: str
    index: int
    detail: str
    severity: str  # "error" | "warning"


def validate(program: Program) -> list[Defect]:
    """Static well-formedness check; errors make a program unrunnable."""
    defects: list[Defect] = []
    written: dict[str, int] = {}
    read_regs: set[str] = set()
    ret_seen = False
    for idx, ins in enumerate(program.instrs):
        if ret_seen:
            defects.append(Defect("misplaced-return", idx, "instruction after Return", "error"))
        if isinstance(ins, BinOp) and ins.op not in _BINOPS:
            defects.append(Defect("bad-op", idx, f"unknown op {ins.op!r}", "error"))
        if isinstance(ins, LoadInput) and ins.name not in program.inputs:
            defects.append(Defect("bad-input", idx, f"{ins.name!r} not declared", "error"))
        if isinstance(ins, DrawRandomPrime) and ins.bits < 2:
            defects.append(Defect("bad-width", idx, "draw width must be >= 2 bits", "error"))
        for _slot, reg in reads_of(ins):
            read_regs.add(reg)
            if reg not in written:
                defects.append(
                    Defect("def-before-use", idx, f"{reg!r} read before any write", "error")
                )
        dst = dst_of(ins)
        if dst is not None:
            if dst in written:
                defects.append(
                    Defect("rewrite", idx, f"{dst!r} already written at {written[dst]}", "error")
                )
            written[dst] = idx
        if isinstance(ins, Ret):
            ret_seen = True
    if not ret_seen:
        defects.append(Defect("missing-return", len(program.instrs), "no Return", "error"))
    for reg, idx in written.items():
        if reg not in read_regs:
            defects.append(Defect("dead-store", idx, f"{reg!r} is never read", "warning"))
    return defects


def is_well_formed(program: Program) -> bool:
    return not any(d.severity == "error" for d in validate(program))


# ---------------------------------------------------------------- fault model


class FaultKind(Enum):
    ZERO = "zero"
    RANDOMIZE = "randomize"
    SKIP = "skip"


@dataclass(frozen=True, order=True)
class WriteOf:
    index: int

    def key(self, program: Program) -> str:
        return f"W{self.index}:{dst_of(program.instrs[self.index])}"


@dataclass(frozen=True, order=True)
class ReadOf:
    index: int
    slot: int

    def key(self, program: Program) -> str:
        reg = dict(reads_of(program.instrs[self.index]))[self.slot]
        return f"R{self.index}.{self.slot}:{reg}"


@dataclass(frozen=True, order=True)
class SkipRange:
    first: int
    last: int

    def key(self, program: Program) -> str:
        return f"K{self.first}-{self.last}"


FaultSite = WriteOf | ReadOf | SkipRange


@dataclass(frozen=True)
class FaultAction:
    """One injection: a site, a kind, and the replacement for Randomize."""

    site: FaultSite
    kind: FaultKind
    value: int | None = None

    def __post_init__(self):
        if self.kind is FaultKind.RANDOMIZE and self.value is None:
            raise ValueError("Randomize needs a replacement value")
        if self.kind is FaultKind.SKIP and not isinstance(self.site, SkipRange):
            raise ValueError("Skip applies to SkipRange sites only")
        if self.kind is not FaultKind.SKIP and isinstance(self.site, SkipRange):
            raise ValueError("SkipRange sites take Skip faults only")


FaultPlan = tuple[FaultAction, ...]


def enumerate_sites(
    program: Program,
    max_skip_len: int = 0,
    include_output: bool = False,
) -> list[FaultSite]:
    """All fault sites of a program, in deterministic order.

    WriteOf for every destination except raw input loads; ReadOf for every
    operand slot; SkipRange for every window of 1..max_skip_len instructions
    that stays clear of the input loads. A window over a load would corrupt
    an input identically for every later use, computation and verification
    alike; that is a wrong-input run, not a fault on the computation, so
    those windows are not part of the attack surface (inputs are faultable
    per read instead). The Return operand read and the data sites of
    instructions tagged output_tail model the released result rather than
    an intermediate value and are excluded unless include_output is set.
    """
    tail = set(program.meta.output_tail) if not include_output else set()
    sites: list[FaultSite] = []
    for idx, ins in enumerate(program.instrs):
        if idx in tail:
            continue
        if dst_of(ins) is not None and not isinstance(ins, LoadInput):
            sites.append(WriteOf(idx))
    for idx, ins in enumerate(program.instrs):
        if idx in tail:
            continue
        if isinstance(ins, Ret) and not include_output:
            continue
        for slot, _reg in reads_of(ins):
            sites.append(ReadOf(idx, slot))
    n = len(program.instrs)
    loads = {i for i, ins in enumerate(program.instrs) if isinstance(ins, LoadInput)}
    for length in range(1, max_skip_len + 1):
        for first in range(0, n - length + 1):
            if any(i in loads for i in range(first, first + length)):
                continue
            sites.append(SkipRange(first, first + length - 1))
    return sites


# ------------------------------------------------------------------ execution


@dataclass(frozen=True)
class Signature:
    value: int


@dataclass(frozen=True)
class ErrorOut:
    """The error constant was released; check_index is diagnostic only."""

    check_index: int


@dataclass(frozen=True)
class Crash:
    reason: str  # bad-modulus | not-invertible | inexact-division | bad-exponent


ExecResult = Signature | ErrorOut | Crash


def same_result(a: ExecResult, b: ExecResult) -> bool:
    """Observable equality: the error constant is opaque to the attacker."""
    if isinstance(a, Signature) and isinstance(b, Signature):
        return a.value == b.value
    if isinstance(a, ErrorOut) and isinstance(b, ErrorOut):
        return True
    if isinstance(a, Crash) and isinstance(b, Crash):
        return a.reason == b.reason
    return False


@dataclass(frozen=True)
class ExecOutcome:
    result: ExecResult
    trace: tuple[tuple[int, str, int], ...]  # (index, register, stored value)
    draws: tuple[tuple[int, int], ...]  # (index, drawn value)

    def regs(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _idx, reg, val in self.trace:
            out[reg] = val
        return out


class _PlanIndex:
    def __init__(self, plan: FaultPlan):
        self.writes: dict[int, tuple[FaultKind, int]] = {}
        self.reads: dict[tuple[int, int], tuple[FaultKind, int]] = {}
        self.skipped: set[int] = set()
        for act in plan:
            if isinstance(act.site, WriteOf):
                self.writes[act.site.index] = (act.kind, act.value or 0)
            elif isinstance(act.site, ReadOf):
                self.reads[(act.site.index, act.site.slot)] = (act.kind, act.value or 0)
            else:
                self.skipped.update(range(act.site.first, act.site.last + 1))


def _site_rng(seed: int, index: int, salt: int) -> random.Random:
    return random.Random((seed * 0x9E3779B1 + index * 0x85EBCA77 + salt) & 0xFFFFFFFFFFFF)


def skip_fill_value(seed: int, index: int) -> int:
    """Deterministic junk a skipped store leaves behind in its register."""
    return _site_rng(seed, index, 0x5F17).getrandbits(32)


def draw_prime_value(seed: int, index: int, bits: int, avoid: set[int]) -> int:
    """The prime DrawRandomPrime at this site yields under this seed."""
    return _draw_prime_cached(seed, index, bits, frozenset(avoid))


@functools.lru_cache(maxsize=8192)
def _draw_prime_cached(seed: int, index: int, bits: int, avoid: frozenset[int]) -> int:
    rng = _site_rng(seed, index, 0xD4A3)
    lo, hi = 1 << (bits - 1), 1 << bits
    for _ in range(200000):
        c = rng.randrange(lo, hi)
        if is_prime(c) and c not in avoid:
            return c
    raise ValueError(f"prime pool of width {bits} exhausted by avoid set")


def execute(
    program: Program,
    inputs: dict[str, int],
    seed: int = 0,
    plan: FaultPlan = (),
) -> ExecOutcome:
    """Run a program under a fault plan.

    Deterministic given (program, inputs, seed, plan). Malformed runtime
    state induced by faults (modulus < 2, negative exponent, impossible
    inverse, inexact division) ends the run with a Crash.
    """
    faults = _PlanIndex(plan)
    regs: dict[str, int] = {}
    trace: list[tuple[int, str, int]] = []
    draws: list[tuple[int, int]] = []

    def fetch(idx: int, slot: int, reg: str) -> int:
        f = faults.reads.get((idx, slot))
        if f is not None:
            return f[1] if f[0] is FaultKind.RANDOMIZE else 0
        return regs.get(reg, 0)

    def store(idx: int, reg: str, val: int) -> None:
        f = faults.writes.get(idx)
        if f is not None:
            val = f[1] if f[0] is FaultKind.RANDOMIZE else 0
        regs[reg] = val
        trace.append((idx, reg, val))

    def done(res: ExecResult) -> ExecOutcome:
        return ExecOutcome(res, tuple(trace), tuple(draws))

    for idx, ins in enumerate(program.instrs):
        if idx in faults.skipped:
            dst = dst_of(ins)
            if dst is not None:
                store(idx, dst, skip_fill_value(seed, idx))
            continue
        if isinstance(ins, LoadInput):
            store(idx, ins.dst, inputs[ins.name])  # KeyError = caller bug, not a fault
        elif isinstance(ins, Const):
            store(idx, ins.dst, ins.value)
        elif isinstance(ins, DrawRandomPrime):
            avoid = {regs.get(r, 0) for r in ins.distinct_from}
            val = draw_prime_value(seed, idx, ins.bits, avoid)
            draws.append((idx, val))
            store(idx, ins.dst, val)
        elif isinstance(ins, BinOp):
            a = fetch(idx, 0, ins.a)
            b = fetch(idx, 1, ins.b)
            if ins.op == "add":
                v = a + b
            elif ins.op == "sub":
                v = a - b
            elif ins.op == "mul":
                v = a * b
            else:  # div: exact or crash
                if b == 0 or a % b != 0:
                    return done(Crash("inexact-division"))
                v = a // b
            if ins.mod is not None:
                m = fetch(idx, 2, ins.mod)
                if m < 2:
                    return done(Crash("bad-modulus"))
                v %= m
            store(idx, ins.dst, v)
        elif isinstance(ins, ModReduce):
            v = fetch(idx, 0, ins.src)
            m = fetch(idx, 1, ins.mod)
            if m < 2:
                return done(Crash("bad-modulus"))
            store(idx, ins.dst, v % m)
        elif isinstance(ins, ModExp):
            b = fetch(idx, 0, ins.base)
            e = fetch(idx, 1, ins.exp)
            m = fetch(idx, 2, ins.mod)
            if m < 2:
                return done(Crash("bad-modulus"))
            if e < 0:
                return done(Crash("bad-exponent"))
            store(idx, ins.dst, pow(b, e, m))
        elif isinstance(ins, ModInv):
            v = fetch(idx, 0, ins.src)
            m = fetch(idx, 1, ins.mod)
            if m < 2:
                return done(Crash("bad-modulus"))
            try:
                store(idx, ins.dst, pow(v, -1, m))
            except ValueError:
                return done(Crash("not-invertible"))
        elif isinstance(ins, CheckEq):
            a = fetch(idx, 0, ins.a)
            b = fetch(idx, 1, ins.b)
            if ins.mod is not None:
                m = fetch(idx, 2, ins.mod)
                if m < 2:
                    return done(Crash("bad-modulus"))
                ok = (a - b) % m == 0
            else:
                ok = a == b
            if not ok:
                return done(ErrorOut(idx))
        elif isinstance(ins, Ret):
            return done(Signature(fetch(idx, 0, ins.src)))
        else:  # pragma: no cover - the union is closed
            raise TypeError(f"unknown instruction {ins!r}")
    # Return was skipped: the output buffer keeps its zero initialization.
    return done(Signature(0))


# ----------------------------------------------------------------- text dumps


def _instr_line(idx: int, ins: Instr) -> str:
    if isinstance(ins, LoadInput):
        return f"{idx}: {ins.dst} <- input {ins.name}"
    if isinstance(ins, DrawRandomPrime):
        extra = f" avoid {','.join(ins.distinct_from)}" if ins.distinct_from else ""
        return f"{idx}: {ins.dst} <- randprime {ins.bits}{extra}"
    if isinstance(ins, Const):
        return f"{idx}: {ins.dst} <- const {ins.value}"
    if isinstance(ins, BinOp):
        tail = f" mod {ins.mod}" if ins.mod is not None else ""
        return f"{idx}: {ins.dst} <- {ins.op} {ins.a} {ins.b}{tail}"
    if isinstance(ins, ModReduce):
        return f"{idx}: {ins.dst} <- reduce {ins.src} mod {ins.mod}"
    if isinstance(ins, ModExp):
        return f"{idx}: {ins.dst} <- modexp {ins.base} {ins.exp} mod {ins.mod}"
    if isinstance(ins, ModInv):
        return f"{idx}: {ins.dst} <- modinv {ins.src} mod {ins.mod}"
    if isinstance(ins, CheckEq):
        tail = f" mod {ins.mod}" if ins.mod is not None else ""
        return f"{idx}: checkeq {ins.a} {ins.b}{tail}"
    if isinstance(ins, Ret):
        return f"{idx}: return {ins.src}"
    raise TypeError(f"unknown instruction {ins!r}")


def dump_program(program: Program) -> str:
    """Stable line-oriented text form, metadata in comment lines."""
    lines = [f"# program {program.name}", f"# inputs {' '.join(program.inputs)}"]
    lines += [_instr_line(i, ins) for i, ins in enumerate(program.instrs)]
    m = program.meta
    if m.phases:
        lines.append("# phases " + " ".join(m.phases))
    if m.verification_checks:
        lines.append("# checks " + " ".join(map(str, m.verification_checks)))
    for f in m.factors:
        lines.append(
            f"# factor {f.c_reg} {f.a_reg} {f.b_reg} {f.mod_reg or '-'} "
            f"{f.diff_idx} {f.c_idx} {f.group}"
        )
    if m.infection_indices:
        lines.append("# infection " + " ".join(map(str, m.infection_indices)))
    if m.output_tail:
        lines.append("# tail " + " ".join(map(str, m.output_tail)))
    if m.checksum_power:
        lines.append(f"# checksum-power {m.checksum_power}")
    if m.r_regs:
        lines.append("# rregs " + " ".join(m.r_regs))
    if m.n_reg:
        lines.append(f"# nreg {m.n_reg}")
    if m.one_reg:
        lines.append(f"# onereg {m.one_reg}")
    return "\n".join(lines) + "\n"


def program_digest(program: Program) -> str:
    return hashlib.sha256(dump_program(program).encode()).hexdigest()[:16]


def parse_dump(text: str) -> Program:
    """Inverse of dump_program (round-trips metadata)."""
    name = "parsed"
    inputs: tuple[str, ...] = ()
    instrs: list[Instr] = []
    phases: tuple[str, ...] = ()
    checks: tuple[int, ...] = ()
    factors: list[InfectionFactor] = []
    infection: tuple[int, ...] = ()
    tail: tuple[int, ...] = ()
    power = 0
    r_regs: tuple[str, ...] = ()
    n_reg = one_reg = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if not parts:
                continue
            tag, rest = parts[0], parts[1:]
            if tag == "program" and rest:
                name = rest[0]
            elif tag == "inputs":
                inputs = tuple(rest)
            elif tag == "phases":
                phases = tuple(rest)
            elif tag == "checks":
                checks = tuple(int(x) for x in rest)
            elif tag == "factor":
                c, a, b, m, di, ci, grp = rest
                factors.append(
                    InfectionFactor(c, a, b, None if m == "-" else m, int(di), int(ci), int(grp))
                )
            elif tag == "infection":
                infection = tuple(int(x) for x in rest)
            elif tag == "tail":
                tail = tuple(int(x) for x in rest)
            elif tag == "checksum-power":
                power = int(rest[0])
            elif tag == "rregs":
                r_regs = tuple(rest)
            elif tag == "nreg":
                n_reg = rest[0]
            elif tag == "onereg":
                one_reg = rest[0]
            continue
        head, _, body = line.partition(": ")
        del head  # indices are positional
        toks = body.split()
        if toks[0] == "checkeq":
            mod = toks[4] if len(toks) > 3 and toks[3] == "mod" else None
            instrs.append(CheckEq(toks[1], toks[2], mod))
            continue
        if toks[0] == "return":
            instrs.append(Ret(toks[1]))
            continue
        dst, arrow, op = toks[0], toks[1], toks[2]
        if arrow != "<-":
            raise ValueError(f"cannot parse line {line!r}")
        args = toks[3:]
        if op == "input":
            instrs.append(LoadInput(dst, args[0]))
        elif op == "randprime":
            avoid = tuple(args[2].split(",")) if len(args) > 2 and args[1] == "avoid" else ()
            instrs.append(DrawRandomPrime(dst, int(args[0]), avoid))
        elif op == "const":
            instrs.append(Const(dst, int(args[0])))
        elif op == "reduce":
            instrs.append(ModReduce(dst, args[0], args[2]))
        elif op == "modexp":
            instrs.append(ModExp(dst, args[0], args[1], args[3]))
        elif op == "modinv":
            instrs.append(ModInv(dst, args[0], args[2]))
        elif op in _BINOPS:
            mod = args[3] if len(args) > 3 and args[2] == "mod" else None
            instrs.append(BinOp(dst, op, args[0], args[1], mod))
        else:
            raise ValueError(f"cannot parse line {line!r}")
    meta = ProgramMeta(
        phases=phases,
        verification_checks=checks,
        factors=tuple(factors),
        infection_indices=infection,
        output_tail=tail,
        checksum_power=power,
        r_regs=r_regs,
        n_reg=n_reg,
        one_reg=one_reg,
    )
    return Program(name=name, inputs=inputs, instrs=tuple(instrs), meta=meta)


# -------------------------------------------------------------------- builder


class BuildError(ValueError):
    """A builder produced a program that fails validation."""


class ProgramBuilder:
    """Incremental construction of a Program with per-instruction phase tags.

    Register names double as identifiers in dumps, so builders keep them
    short. Emission order is program order; all emit helpers return the
    instruction index.
    """

    def __init__(self, name: str, inputs: tuple[str, ...]):
        self.name = name
        self.inputs = inputs
        self._instrs: list[Instr] = []
        self._phases: list[str] = []
        self._phase = "load"
        self._checks: list[int] = []
        self._factors: list[InfectionFactor] = []
        self._one: str | None = None

    def set_phase(self, tag: str) -> None:
        self._phase = tag

    def emit(self, ins: Instr) -> int:
        self._instrs.append(ins)
        self._phases.append(self._phase)
        return len(self._instrs) - 1

    def inp(self, reg: str, name: str | None = None) -> int:
        return self.emit(LoadInput(reg, name or reg))

    def draw(self, reg: str, bits: int, avoid: tuple[str, ...] = ()) -> int:
        return self.emit(DrawRandomPrime(reg, bits, avoid))

    def const(self, reg: str, value: int) -> int:
        return self.emit(Const(reg, value))

    def one(self) -> str:
        if self._one is None:
            self.const("one", 1)
            self._one = "one"
        return self._one

    def add(self, dst: str, a: str, b: str, mod: str | None = None) -> int:
        return self.emit(BinOp(dst, "add", a, b, mod))

    def sub(self, dst: str, a: str, b: str, mod: str | None = None) -> int:
        return self.emit(BinOp(dst, "sub", a, b, mod))

    def mul(self, dst: str, a: str, b: str, mod: str | None = None) -> int:
        return self.emit(BinOp(dst, "mul", a, b, mod))

    def div(self, dst: str, a: str, b: str) -> int:
        return self.emit(BinOp(dst, "div", a, b))

    def reduce(self, dst: str, src: str, mod: str) -> int:
        return self.emit(ModReduce(dst, src, mod))

    def exp(self, dst: str, base: str, e: str, mod: str) -> int:
        return self.emit(ModExp(dst, base, e, mod))

    def inv(self, dst: str, src: str, mod: str) -> int:
        return self.emit(ModInv(dst, src, mod))

    def check(self, a: str, b: str, mod: str | None = None) -> int:
        idx = self.emit(CheckEq(a, b, mod))
        self._checks.append(idx)
        return idx

    def ret(self, src: str) -> int:
        return self.emit(Ret(src))

    def factor(
        self,
        c_reg: str,
        a_reg: str,
        b_reg: str,
        mod_reg: str | None,
        diff_idx: int,
        c_idx: int,
        group: int,
    ) -> None:
        self._factors.append(
            InfectionFactor(c_reg, a_reg, b_reg, mod_reg, diff_idx, c_idx, group)
        )

    def recombine(
        self, dst: str, hi: str, lo: str, q: str, iq: str, inner_mod: str
    ) -> int:
        """dst = lo + q * ((iq * (hi - lo)) mod inner_mod)."""
        self.sub(f"{dst}_d", hi, lo)
        self.mul(f"{dst}_m", iq, f"{dst}_d", mod=inner_mod)
        self.mul(f"{dst}_t", q, f"{dst}_m")
        return self.add(dst, lo, f"{dst}_t")

    def build(
        self,
        tail: tuple[int, ...] = (),
        infection: tuple[int, ...] = (),
        checksum_power: int = 0,
        r_regs: tuple[str, ...] = (),
        n_reg: str | None = None,
        allow_warnings: bool = True,
    ) -> Program:
        meta = ProgramMeta(
            phases=tuple(self._phases),
            verification_checks=tuple(self._checks),
            factors=tuple(self._factors),
            infection_indices=infection,
            output_tail=tail,
            checksum_power=checksum_power,
            r_regs=r_regs,
            n_reg=n_reg,
            one_reg=self._one,
        )
        prog = Program(name=self.name, inputs=self.inputs, instrs=tuple(self._instrs), meta=meta)
        defects = [d for d in validate(prog) if d.severity == "error"]
        if defects:
            raise BuildError(f"{self.name}: " + "; ".join(d.detail for d in defects))
        if not allow_warnings and validate(prog):
            raise BuildError(f"{self.name}: warnings present")
        return prog


# ------------------------------------------------------------------- look-ups


def find_write(program: Program, reg: str) -> int:
    """Index of the instruction that stores `reg` (registers are write-once)."""
    for i, ins in enumerate(program.instrs):
        if dst_of(ins) == reg:
            return i
    raise KeyError(f"no instruction writes {reg!r}")


def find_reads(program: Program, reg: str) -> tuple[tuple[int, int], ...]:
    """All (instruction index, slot) pairs that read `reg`."""
    out = []
    for i, ins in enumerate(program.instrs):
        for slot, r in reads_of(ins):
            if r == reg:
                out.append((i, slot))
    return tuple(out)


def check_indices(program: Program) -> tuple[int, ...]:
    return tuple(i for i, ins in enumerate(program.instrs) if isinstance(ins, CheckEq))
