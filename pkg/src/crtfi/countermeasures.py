"""Builders for the CRT-RSA signing variants under study.

Each builder compiles one published hardening scheme (or its deliberate
absence) into a straight-line Program for a FIXED key, so the fault engine
can enumerate every write, read, and skip site. Shared conventions:

  * all derived quantities (extended moduli, totients, reduced exponents,
    inverse constants) are computed by in-trace instructions, hence faultable;
  * extended-modulus draws happen per run through DrawRandomPrime sites except
    where a scheme needs build-time invertibility screening (see blomer);
  * recombination is the Garner form lo + q*((iq*(hi-lo)) mod m);
  * meta.output_tail marks the post-verification instructions that merely
    assemble the released value; faulting those is output replacement, not an
    attack on the scheme, so campaigns exclude them (witness search re-enables
    them).

Register glossary: spp/sqq hold the extended-ring signature halves, spr/sqr
the small-ring checksums, sp/sq the retrieved CRT halves, s the released
signature.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import gcd

from . import keytools
from .circuit import Program, ProgramBuilder
from .keytools import CrtKey
from .modmath import is_prime

ALGO_IDS = (
    "unprotected",
    "straightforward",
    "giraud-sketch",
    "shamir",
    "fixed-shamir",
    "joye",
    "ciet-joye",
    "blomer",
    "aumuller",
    "aumuller-infective",
    "vigilant",
    "vigilant-simplified-infective",
)


class UnsatisfiableRandom(ValueError):
    """No admissible random draw exists within the retry budget."""


@dataclass(frozen=True)
class CatalogEntry:
    algo: str
    family: str  # shamir | giraud | none
    style: str  # test-based | infective | none
    claimed_order: int
    broken_at: int | None  # fault order at which a structural break is known


_CATALOG = (
    CatalogEntry("unprotected", "none", "none", 0, 1),
    CatalogEntry("straightforward", "none", "test-based", 1, None),
    CatalogEntry("giraud-sketch", "giraud", "test-based", 1, None),
    CatalogEntry("shamir", "shamir", "test-based", 1, 1),
    CatalogEntry("fixed-shamir", "shamir", "test-based", 1, None),
    CatalogEntry("joye", "shamir", "test-based", 1, 1),
    CatalogEntry("ciet-joye", "shamir", "infective", 2, 2),
    CatalogEntry("blomer", "shamir", "infective", 1, None),
    CatalogEntry("aumuller", "shamir", "test-based", 1, None),
    CatalogEntry("aumuller-infective", "shamir", "infective", 1, None),
    CatalogEntry("vigilant", "shamir", "test-based", 1, None),
    CatalogEntry("vigilant-simplified-infective", "shamir", "infective", 1, None),
)


def catalog() -> tuple[CatalogEntry, ...]:
    return _CATALOG


def catalog_entry(algo: str) -> CatalogEntry:
    for e in _CATALOG:
        if e.algo == algo:
            return e
    raise ValueError(f"unknown algo id {algo!r}")


def _d_of(key: CrtKey) -> int:
    return key.d if key.d is not None else keytools.recover_d(key)


def program_inputs(program: Program, key: CrtKey, message: int) -> dict[str, int]:
    """Input map for executing a built program on one message."""
    pool = {
        "M": message,
        "p": key.p,
        "q": key.q,
        "dp": key.dp,
        "dq": key.dq,
        "iq": key.iq,
    }
    out = {}
    for name in program.inputs:
        out[name] = _d_of(key) if name == "d" else pool[name]
    return out


# ------------------------------------------------------------------- builders


def _load_crt(b: ProgramBuilder) -> None:
    b.inp("m", "M")
    b.inp("p")
    b.inp("q")
    b.inp("dp")
    b.inp("dq")
    b.inp("iq")


def _load_d(b: ProgramBuilder) -> None:
    b.inp("m", "M")
    b.inp("p")
    b.inp("q")
    b.inp("d")
    b.inp("iq")


def _build_unprotected(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder("unprotected", ("M", "p", "q", "dp", "dq", "iq"))
    _load_crt(b)
    b.set_phase("exp-p")
    b.exp("sp", "m", "dp", "p")
    b.set_phase("exp-q")
    b.exp("sq", "m", "dq", "q")
    b.set_phase("recombine")
    si = b.recombine("s", "sp", "sq", "q", "iq", "p")
    b.set_phase("output")
    ri = b.ret("s")
    return b.build(tail=(si, ri))


def _build_straightforward(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    # Signature halves use totient-reduced exponents; the verification halves
    # recompute with the raw exponents. Layout keeps each half and its checker
    # non-adjacent so no short skip window erases a value and its verifier.
    b = ProgramBuilder("straightforward", ("M", "p", "q", "dp", "dq", "iq"))
    _load_crt(b)
    b.set_phase("precompute")
    one = b.one()
    b.sub("pm1", "p", one)
    b.sub("qm1", "q", one)
    b.reduce("dpf", "dp", "pm1")
    b.reduce("dqf", "dq", "qm1")
    b.set_phase("exp-p")
    b.exp("sp", "m", "dpf", "p")
    b.set_phase("exp-q")
    b.exp("sq", "m", "dqf", "q")
    b.set_phase("verify")
    b.exp("vp", "m", "dp", "p")
    b.exp("vq", "m", "dq", "q")
    b.check("sq", "vq", mod="q")
    b.check("sp", "vp", mod="p")
    b.set_phase("recombine")
    b.recombine("s", "sp", "sq", "q", "iq", "p")
    b.set_phase("verify")
    b.check("s", "sp", mod="p")
    b.check("s", "sq", mod="q")
    b.set_phase("output")
    b.ret("s")
    return b.build()


def _ladder(
    b: ProgramBuilder, exponent: int, base: str, mod: str, tag: str
) -> tuple[str, str]:
    """Two-register square-multiply chain keeping (x^(k-1), x^k) in step.

    Returns registers holding (base^(exponent-1), base^exponent) mod `mod`,
    unrolled for this key's exponent bits.
    """
    if exponent < 1:
        raise UnsatisfiableRandom("pair ladder needs a positive exponent")
    lo, hi = b.one(), base
    for k, bit in enumerate(bin(exponent)[3:]):  # bits after the leading 1
        na, nb = f"{tag}{k}a", f"{tag}{k}b"
        if bit == "0":
            b.mul(na, lo, hi, mod=mod)
            b.mul(nb, hi, hi, mod=mod)
        else:
            b.mul(na, hi, hi, mod=mod)
            b.mul(nb, na, base, mod=mod)
        lo, hi = na, nb
    return lo, hi


def _build_giraud(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    # the pair ladder unrolls dp and dq at build time, so only the moduli
    # and the recombination constant are data
    b = ProgramBuilder("giraud-sketch", ("M", "p", "q", "iq"))
    b.inp("m", "M")
    b.inp("p")
    b.inp("q")
    b.inp("iq")
    b.set_phase("precompute")
    b.one()
    b.reduce("mp", "m", "p")
    b.reduce("mq", "m", "q")
    b.mul("n", "p", "q")
    b.set_phase("exp-p")
    gp0, gp1 = _ladder(b, key.dp, "mp", "p", "gp")
    b.set_phase("exp-q")
    gq0, gq1 = _ladder(b, key.dq, "mq", "q", "gq")
    b.set_phase("recombine")
    b.recombine("s", gp1, gq1, "q", "iq", "p")
    b.recombine("v", gp0, gq0, "q", "iq", "p")
    b.set_phase("verify")
    b.mul("ms", "m", "v", mod="n")
    b.check("ms", "s", mod="n")
    b.set_phase("output")
    ri = b.ret("s")
    return b.build(tail=(ri,), n_reg="n")


def _build_shamir(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder("shamir", ("M", "p", "q", "d", "iq"))
    _load_d(b)
    b.set_phase("rng")
    b.draw("r", r_bits, avoid=("p", "q"))
    b.set_phase("precompute")
    one = b.one()
    b.mul("pp", "p", "r")
    # phi(p*r) written as p*r - p - r + 1: an additive fault anywhere in the
    # chain shifts the residue mod r-1, so a wrong reduced exponent can never
    # slip past the mod-r comparison by staying congruent there
    b.sub("tp1", "pp", "p")
    b.sub("tp2", "tp1", "r")
    b.add("phip", "tp2", one)
    b.reduce("dpp", "d", "phip")
    b.set_phase("exp-p")
    b.exp("spp", "m", "dpp", "pp")
    b.set_phase("precompute")
    b.mul("qq", "q", "r")
    b.sub("tq1", "qq", "q")
    b.sub("tq2", "tq1", "r")
    b.add("phiq", "tq2", one)
    b.reduce("dqq", "d", "phiq")
    b.set_phase("exp-q")
    b.exp("sqq", "m", "dqq", "qq")
    b.set_phase("retrieve")
    b.reduce("sp", "spp", "p")
    b.reduce("sq", "sqq", "q")
    b.set_phase("recombine")
    b.recombine("s", "sp", "sq", "q", "iq", "p")
    b.set_phase("verify")
    b.check("spp", "sqq", mod="r")
    b.set_phase("output")
    ri = b.ret("s")
    return b.build(tail=(ri,), checksum_power=1, r_regs=("r",))


def _build_fixed_shamir(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder("fixed-shamir", ("M", "p", "q", "d", "iq"))
    _load_d(b)
    b.set_phase("rng")
    b.draw("r", r_bits, avoid=("p", "q"))
    b.set_phase("precompute")
    one = b.one()
    b.const("zero", 0)
    b.mul("pp", "p", "r")
    b.mul("qq", "q", "r")
    b.set_phase("verify")
    b.check("pp", "zero", mod="p")
    b.check("qq", "zero", mod="q")
    b.set_phase("precompute")
    # same subtractive totients as the plain variant, for the same reason
    b.sub("tp1", "pp", "p")
    b.sub("tp2", "tp1", "r")
    b.add("phip", "tp2", one)
    b.reduce("dpp", "d", "phip")
    b.sub("tq1", "qq", "q")
    b.sub("tq2", "tq1", "r")
    b.add("phiq", "tq2", one)
    b.reduce("dqq", "d", "phiq")
    b.set_phase("exp-p")
    b.exp("spp", "m", "dpp", "pp")
    b.set_phase("exp-q")
    b.exp("sqq", "m", "dqq", "qq")
    # the retrievals sit between the exponentiations and the mod-r compare
    # so no short skip window can take out an exponentiation together with
    # the one check that would notice it
    b.set_phase("retrieve")
    b.reduce("sp", "spp", "p")
    b.reduce("sq", "sqq", "q")
    b.set_phase("verify")
    b.check("spp", "sqq", mod="r")
    b.set_phase("recombine")
    b.recombine("s", "sp", "sq", "q", "iq", "p")
    b.set_phase("verify")
    b.check("s", "spp", mod="p")
    b.check("s", "sqq", mod="q")
    b.set_phase("output")
    ri = b.ret("s")
    return b.build(tail=(ri,), checksum_power=1, r_regs=("r",))


def _build_joye(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder("joye", ("M", "p", "q", "dp", "dq", "iq"))
    _load_crt(b)
    b.set_phase("rng")
    b.draw("r1", r_bits, avoid=("p", "q"))
    b.draw("r2", r_bits, avoid=("p", "q", "r1"))
    b.set_phase("precompute")
    one = b.one()
    b.mul("pp", "p", "r1")
    b.mul("qq", "q", "r2")
    b.inv("iqq", "qq", "pp")  # stored but never consumed: dead by design
    b.mul("n", "p", "q")  # likewise
    # subtractive totients, see the shamir builder
    b.sub("tp1", "pp", "p")
    b.sub("tp2", "tp1", "r1")
    b.add("phip", "tp2", one)
    b.reduce("dpp", "dp", "phip")
    b.sub("tq1", "qq", "q")
    b.sub("tq2", "tq1", "r2")
    b.add("phiq", "tq2", one)
    b.reduce("dqq", "dq", "phiq")
    b.sub("r1m1", "r1", one)
    b.sub("r2m1", "r2", one)
    b.reduce("dpr", "dp", "r1m1")
    b.reduce("dqr", "dq", "r2m1")
    b.set_phase("exp-p")
    b.exp("spp", "m", "dpp", "pp")
    b.exp("spr", "m", "dpr", "r1")
    b.set_phase("exp-q")
    b.exp("sqq", "m", "dqq", "qq")
    b.exp("sqr", "m", "dqr", "r2")
    b.set_phase("retrieve")
    b.reduce("sp", "spp", "p")
    b.reduce("sq", "sqq", "q")
    b.set_phase("verify")
    b.check("spp", "spr", mod="r1")
    b.check("sqq", "sqr", mod="r2")
    b.set_phase("recombine")
    si = b.recombine("s", "sp", "sq", "q", "iq", "p")
    b.set_phase("output")
    ri = b.ret("s")
    return b.build(tail=(si, ri), checksum_power=1, r_regs=("r1", "r2"), n_reg="n")


def _build_ciet_joye(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    # recombination runs in the widened ring with its own inverse constant,
    # so the plain iq is not part of this program's data
    b = ProgramBuilder("ciet-joye", ("M", "p", "q", "dp", "dq"))
    b.inp("m", "M")
    b.inp("p")
    b.inp("q")
    b.inp("dp")
    b.inp("dq")
    b.set_phase("rng")
    b.draw("r1", r_bits, avoid=("p", "q"))
    b.draw("r2", r_bits, avoid=("p", "q", "r1"))
    b.draw("r3", r_bits)
    b.draw("a", r_bits)
    b.draw("gamma0", r_bits)  # placeholder the infection line supersedes
    b.set_phase("precompute")
    one = b.one()
    b.mul("pp", "p", "r1")
    b.mul("qq", "q", "r2")
    b.inv("iqq", "qq", "pp")
    b.mul("n", "p", "q")
    b.sub("tp1", "pp", "p")
    b.sub("tp2", "tp1", "r1")
    b.add("phip", "tp2", one)
    b.reduce("dpp", "dp", "phip")
    b.sub("tq1", "qq", "q")
    b.sub("tq2", "tq1", "r2")
    b.add("phiq", "tq2", one)
    b.reduce("dqq", "dq", "phiq")
    b.sub("r1m1", "r1", one)
    b.sub("r2m1", "r2", one)
    b.reduce("dpr", "dp", "r1m1")
    b.reduce("dqr", "dq", "r2m1")
    b.set_phase("exp-p")
    b.exp("xp", "m", "dpp", "pp")
    b.add("spp", "a", "xp", mod="pp")
    b.exp("xpr", "m", "dpr", "r1")
    b.add("spr", "a", "xpr", mod="r1")
    b.set_phase("exp-q")
    b.exp("xq", "m", "dqq", "qq")
    b.add("sqq", "a", "xq", mod="qq")
    b.exp("xqr", "m", "dqr", "r2")
    b.add("sqr", "a", "xqr", mod="r2")
    b.set_phase("recombine")
    b.recombine("sr", "spp", "sqq", "qq", "iqq", "pp")
    b.set_phase("verify")
    c1d = b.sub("c1d", "sr", "spr", mod="r1")
    c1 = b.add("c1", "c1d", one, mod="r1")
    b.factor("c1", "sr", "spr", "r1", c1d, c1, 0)
    c2d = b.sub("c2d", "sr", "sqr", mod="r2")
    c2 = b.add("c2", "c2d", one, mod="r2")
    b.factor("c2", "sr", "sqr", "r2", c2d, c2, 1)
    b.set_phase("infect")
    b.const("pw", 1 << r_bits)
    b.mul("g1", "r3", "c1")
    b.sub("g2", "pw", "r3")
    b.mul("g3", "g2", "c2")
    b.add("g4", "g1", "g3")
    b.div("gam", "g4", "pw")  # exact when c1 = c2; inexact division crashes
    b.set_phase("output")
    ai = b.exp("ag", "a", "gam", "n")
    si = b.sub("s", "sr", "ag", mod="n")
    ri = b.ret("s")
    # infection is the gamma blend, not the canonical product/power shape, so
    # infection_indices stays empty and the reverse transform refuses it
    return b.build(tail=(ai, si, ri), checksum_power=1, r_regs=("r1", "r2"), n_reg="n")


def _build_blomer(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    # The masking exponents d mod phi(p*r1), d mod phi(q*r2) must be
    # invertible in their totient rings for the verification powers to exist,
    # so r1/r2 are screened at build time and embedded as constants.
    d = _d_of(key)
    rng = random.Random((build_seed * 0xB5297A4D + r_bits) & 0xFFFFFFFF)
    lo, hi = 1 << (r_bits - 1), 1 << r_bits
    r1 = r2 = None
    for _ in range(400):
        c1 = rng.randrange(lo, hi)
        c2 = rng.randrange(lo, hi)
        if not (is_prime(c1) and is_prime(c2)):
            continue
        if len({c1, c2, key.p, key.q}) != 4:
            continue
        php = (key.p - 1) * (c1 - 1)
        phq = (key.q - 1) * (c2 - 1)
        if gcd(d % php, php) == 1 and gcd(d % phq, phq) == 1:
            r1, r2 = c1, c2
            break
    if r1 is None:
        raise UnsatisfiableRandom(
            f"no invertible masking pair of width {r_bits} for this key"
        )
    b = ProgramBuilder("blomer", ("M", "p", "q", "d"))
    b.inp("m", "M")
    b.inp("p")
    b.inp("q")
    b.inp("d")
    b.set_phase("rng")
    b.const("r1", r1)
    b.const("r2", r2)
    b.set_phase("precompute")
    one = b.one()
    b.mul("pp", "p", "r1")
    b.mul("qq", "q", "r2")
    b.inv("iqq", "qq", "pp")
    b.mul("n", "p", "q")
    b.mul("rr", "r1", "r2")
    b.mul("nn", "n", "rr")  # stored but never consumed: dead by design
    b.sub("tp1", "pp", "p")
    b.sub("tp2", "tp1", "r1")
    b.add("phip", "tp2", one)
    b.reduce("dpp", "d", "phip")
    b.inv("epp", "dpp", "phip")
    b.sub("tq1", "qq", "q")
    b.sub("tq2", "tq1", "r2")
    b.add("phiq", "tq2", one)
    b.reduce("dqq", "d", "phiq")
    b.inv("eqq", "dqq", "phiq")
    b.set_phase("exp-p")
    b.exp("spp", "m", "dpp", "pp")
    b.set_phase("exp-q")
    b.exp("sqq", "m", "dqq", "qq")
    b.set_phase("recombine")
    b.recombine("sr", "spp", "sqq", "qq", "iqq", "pp")
    b.set_phase("verify")
    b.exp("v1", "sr", "epp", "r1")
    c1d = b.sub("c1d", "m", "v1", mod="r1")
    c1 = b.add("c1", "c1d", one, mod="r1")
    b.factor("c1", "m", "v1", "r1", c1d, c1, 0)
    b.exp("v2", "sr", "eqq", "r2")
    c2d = b.sub("c2d", "m", "v2", mod="r2")
    c2 = b.add("c2", "c2d", one, mod="r2")
    b.factor("c2", "m", "v2", "r2", c2d, c2, 1)
    b.set_phase("infect")
    cc = b.mul("cc", "c1", "c2")
    b.set_phase("output")
    fi = b.exp("sf", "sr", "cc", "n")
    ri = b.ret("sf")
    return b.build(
        tail=(cc, fi, ri),
        infection=(cc, fi),
        checksum_power=1,
        r_regs=("r1", "r2"),
        n_reg="n",
    )


def _build_aumuller(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder("aumuller", ("M", "p", "q", "dp", "dq", "iq"))
    _load_crt(b)
    b.set_phase("rng")
    b.draw("r", r_bits, avoid=("p", "q"))
    b.set_phase("precompute")
    one = b.one()
    b.const("zero", 0)
    b.mul("pp", "p", "r")
    b.mul("qq", "q", "r")
    b.set_phase("verify")
    b.check("pp", "zero", mod="p")
    b.check("qq", "zero", mod="q")
    b.set_phase("precompute")
    b.sub("tp1", "pp", "p")
    b.sub("tp2", "tp1", "r")
    b.add("phip", "tp2", one)
    b.reduce("dpp", "dp", "phip")
    b.sub("tq1", "qq", "q")
    b.sub("tq2", "tq1", "r")
    b.add("phiq", "tq2", one)
    b.reduce("dqq", "dq", "phiq")
    b.sub("rm1", "r", one)
    b.set_phase("exp-p")
    b.exp("spp", "m", "dpp", "pp")
    b.set_phase("exp-q")
    b.exp("sqq", "m", "dqq", "qq")
    b.set_phase("retrieve")
    b.reduce("sp", "spp", "p")
    b.reduce("sq", "sqq", "q")
    b.set_phase("recombine")
    b.recombine("s", "sp", "sq", "q", "iq", "p")
    b.set_phase("verify")
    b.check("s", "spp", mod="p")
    b.check("s", "sqq", mod="q")
    b.reduce("spr", "spp", "r")
    b.reduce("sqr", "sqq", "r")
    b.reduce("dqr", "dq", "rm1")
    b.reduce("dpr", "dp", "rm1")
    b.exp("a1", "spr", "dqr", "r")
    b.exp("a2", "sqr", "dpr", "r")
    b.check("a1", "a2", mod="r")
    b.set_phase("output")
    ri = b.ret("s")
    return b.build(tail=(ri,), checksum_power=1, r_regs=("r",))


def _vigilant_embed(b: ProgramBuilder, side: str, prime: str) -> None:
    """CRT-embed m into Z_{prime*r^2}: congruent to m mod prime, 1+r mod r^2."""
    one = b.one()
    x = side  # register prefix: 'p' or 'q'
    ext = f"{x}{x}"  # the widened modulus prime * r^2
    b.mul(ext, prime, "rsq")
    b.inv(f"i{x}r", prime, "rsq")
    b.reduce(f"m{x}", "m", ext)
    b.mul(f"b{x}", prime, f"i{x}r")
    b.sub(f"a{x}", one, f"b{x}", mod=ext)
    b.mul(f"e{x}1", f"a{x}", f"m{x}", mod=ext)
    b.mul(f"e{x}2", f"b{x}", "onepr", mod=ext)
    b.add(f"m{x}{x}", f"e{x}1", f"e{x}2", mod=ext)


def _vigilant_phi(b: ProgramBuilder, side: str, prime: str, dreg: str) -> None:
    one = b.one()
    x = side
    b.sub(f"{x}m1", prime, one)
    b.mul(f"f{x}", f"{x}m1", "r")
    b.mul(f"phi{x}", f"f{x}", "rm1")
    b.reduce(f"d{x}{x}", dreg, f"phi{x}")


def _build_vigilant(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder("vigilant", ("M", "p", "q", "dp", "dq", "iq"))
    _load_crt(b)
    b.set_phase("rng")
    b.draw("r", r_bits, avoid=("p", "q"))
    b.draw("br1", r_bits)
    b.draw("br2", r_bits)
    b.set_phase("precompute")
    one = b.one()
    b.mul("n", "p", "q")
    b.mul("rsq", "r", "r")
    b.add("onepr", one, "r")
    b.sub("rm1", "r", one)
    _vigilant_embed(b, "p", "p")
    _vigilant_phi(b, "p", "p", "dp")
    b.set_phase("exp-p")
    b.exp("spp", "mpp", "dpp", "pp")
    b.set_phase("verify")
    b.check("mpp", "m", mod="p")
    b.mul("dpro", "dp", "r")
    b.add("ckp", one, "dpro")
    b.mul("u1", "bp", "spp", mod="pp")
    b.mul("u2", "bp", "ckp", mod="pp")
    b.check("u1", "u2", mod="pp")
    b.set_phase("precompute")
    _vigilant_embed(b, "q", "q")
    _vigilant_phi(b, "q", "q", "dq")
    b.set_phase("exp-q")
    b.exp("sqq", "mqq", "dqq", "qq")
    b.set_phase("verify")
    b.check("mqq", "m", mod="q")
    b.mul("dqro", "dq", "r")
    b.add("ckq", one, "dqro")
    b.mul("u3", "bq", "sqq", mod="qq")
    b.mul("u4", "bq", "ckq", mod="qq")
    b.check("u3", "u4", mod="qq")
    b.set_phase("recombine")
    # swap each checksum residue for a fresh random before recombining
    b.sub("w1", "ckp", "br1")
    b.mul("v1", "bp", "w1")
    b.sub("spr", "spp", "v1")
    b.sub("w2", "ckq", "br2")
    b.mul("v2", "bq", "w2")
    b.sub("sqr", "sqq", "v2")
    b.recombine("srec", "spr", "sqr", "q", "iq", "pp")
    b.set_phase("verify")
    b.mul("nr2", "n", "rsq")
    b.sub("h1", "br1", "br2")
    b.mul("h2", "iq", "h1")
    b.mul("h3", "q", "h2")
    b.sub("h4", "srec", "br2")
    b.sub("h5", "h4", "h3")
    # the left side multiplies p*q afresh rather than reusing the stored
    # modulus: against the reused register the comparison would cancel any
    # corruption of it, leaving the public modulus unverified
    b.mul("pq2", "p", "q")
    b.mul("h6", "pq2", "h5")
    b.const("zero", 0)
    b.check("h6", "zero", mod="nr2")
    b.set_phase("output")
    si = b.reduce("s", "srec", "n")
    ri = b.ret("s")
    return b.build(tail=(si, ri), checksum_power=2, r_regs=("r",), n_reg="n")


def _build_vigilant_simplified(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    b = ProgramBuilder(
        "vigilant-simplified-infective", ("M", "p", "q", "dp", "dq", "iq")
    )
    _load_crt(b)
    b.set_phase("rng")
    b.draw("r", r_bits, avoid=("p", "q"))
    b.set_phase("precompute")
    one = b.one()
    b.mul("n", "p", "q")
    b.mul("rsq", "r", "r")
    b.add("onepr", one, "r")
    b.sub("rm1", "r", one)
    _vigilant_embed(b, "p", "p")
    _vigilant_phi(b, "p", "p", "dp")
    b.set_phase("exp-p")
    b.exp("spp", "mpp", "dpp", "pp")
    b.mul("dpro", "dp", "r")
    b.add("spr", one, "dpro")  # expected checksum residue 1 + dp*r
    b.set_phase("verify")
    cpa = b.add("cpa", "mpp", "n")
    cpd = b.sub("cpd", "cpa", "m", mod="p")
    cp = b.add("cp", "cpd", one, mod="p")
    b.factor("cp", "cpa", "m", "p", cpd, cp, 0)
    b.set_phase("precompute")
    _vigilant_embed(b, "q", "q")
    _vigilant_phi(b, "q", "q", "dq")
    b.set_phase("exp-q")
    b.exp("sqq", "mqq", "dqq", "qq")
    b.mul("dqro", "dq", "r")
    b.add("sqr", one, "dqro")
    b.set_phase("verify")
    cqa = b.add("cqa", "mqq", "n")
    cqd = b.sub("cqd", "cqa", "m", mod="q")
    cq = b.add("cq", "cqd", one, mod="q")
    b.factor("cq", "cqa", "m", "q", cqd, cq, 1)
    b.set_phase("recombine")
    b.recombine("srec", "spp", "sqq", "q", "iq", "pp")
    b.recombine("crec", "spr", "sqr", "q", "iq", "pp")
    b.set_phase("verify")
    csd = b.sub("csd", "srec", "crec", mod="rsq")
    cs = b.add("cs", "csd", one, mod="rsq")
    b.factor("cs", "srec", "crec", "rsq", csd, cs, 2)
    b.set_phase("infect")
    x1 = b.mul("x1", "cp", "cq")
    cstar = b.mul("cstar", "x1", "cs")
    b.set_phase("output")
    fi = b.exp("sf", "srec", "cstar", "n")
    ri = b.ret("sf")
    return b.build(
        tail=(x1, cstar, fi, ri),
        infection=(x1, cstar, fi),
        checksum_power=2,
        r_regs=("r",),
        n_reg="n",
    )


def _build_aumuller_infective(key: CrtKey, r_bits: int, build_seed: int) -> Program:
    from .transforms import to_infective

    return to_infective(_build_aumuller(key, r_bits, build_seed))


_BUILDERS = {
    "unprotected": _build_unprotected,
    "straightforward": _build_straightforward,
    "giraud-sketch": _build_giraud,
    "shamir": _build_shamir,
    "fixed-shamir": _build_fixed_shamir,
    "joye": _build_joye,
    "ciet-joye": _build_ciet_joye,
    "blomer": _build_blomer,
    "aumuller": _build_aumuller,
    "aumuller-infective": _build_aumuller_infective,
    "vigilant": _build_vigilant,
    "vigilant-simplified-infective": _build_vigilant_simplified,
}


def build(algo: str, key: CrtKey, r_bits: int = 8, build_seed: int = 0) -> Program:
    """Compile one catalog algorithm for a fixed key.

    r_bits sizes every small-modulus draw. Algorithms drawing several
    distinct small primes need a pool that survives the avoid sets; with
    very small keys use r_bits >= 5.
    """
    try:
        builder = _BUILDERS[algo]
    except KeyError:
        raise ValueError(f"unknown algo id {algo!r}") from None
    if r_bits < 2:
        raise ValueError("r_bits must be at least 2")
    return builder(key, r_bits, build_seed)
