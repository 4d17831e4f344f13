"""Key generation, CRT parameter derivation, and private-exponent recovery.

Keys here are deliberately small ("desk scale", 4..64 bit primes) so that
exhaustive fault campaigns stay cheap. The recovery routines rebuild (d, e)
from a bare CRT 5-tuple (p, q, dp, dq, iq) without an extended-Euclid
shortcut: the lcm factorization is obtained by gcd absorption and d by CRT
recombination of the half exponents.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from math import gcd as _gcd
from pathlib import Path

from .modmath import DomainError, is_prime, mod_inv


class KeyError_(DomainError):
    """A key is malformed or missing a required field."""


class MissingKeyField(KeyError_):
    pass


@dataclass(frozen=True)
class RsaKey:
    """Classic RSA key with both totients kept around."""

    p: int
    q: int
    n: int
    e: int
    d: int
    phi: int
    lam: int


@dataclass(frozen=True)
class CrtKey:
    """CRT signing 5-tuple; d, e, n are optional extras."""

    p: int
    q: int
    dp: int
    dq: int
    iq: int
    d: int | None = None
    e: int | None = None
    n: int | None = None

    @property
    def modulus(self) -> int:
        return self.n if self.n is not None else self.p * self.q

    @property
    def lam(self) -> int:
        return (self.p - 1) * (self.q - 1) // _gcd(self.p - 1, self.q - 1)


def _draw_prime(rng: random.Random, bits: int) -> int:
    lo, hi = 1 << (bits - 1), 1 << bits
    while True:
        c = rng.randrange(lo, hi)
        if is_prime(c):
            return c


def gen_key(prime_bits: int, seed: int) -> RsaKey:
    """Generate a key with two distinct primes of exactly prime_bits bits.

    e is the smallest odd value >= 3 coprime to lambda(n); d = e^-1 mod phi(n).
    Deterministic per (prime_bits, seed).
    """
    if not 2 <= prime_bits <= 64:
        raise DomainError(f"prime_bits must be in [2, 64], got {prime_bits}")
    rng = random.Random(seed)
    p = _draw_prime(rng, prime_bits)
    q = _draw_prime(rng, prime_bits)
    while q == p:
        q = _draw_prime(rng, prime_bits)
    phi = (p - 1) * (q - 1)
    lam = phi // _gcd(p - 1, q - 1)
    e = 3
    while _gcd(e, lam) != 1:
        e += 2
    d = mod_inv(e, phi)
    return RsaKey(p=p, q=q, n=p * q, e=e, d=d, phi=phi, lam=lam)


def derive_crt(p: int, q: int, d: int) -> CrtKey:
    """CRT parameters (dp, dq, iq) for a private exponent d."""
    if not (is_prime(p) and is_prime(q)) or p == q:
        raise DomainError(f"p, q must be distinct primes, got {p}, {q}")
    dp = d % (p - 1) if p > 2 else 0
    dq = d % (q - 1) if q > 2 else 0
    iq = mod_inv(q, p)
    return CrtKey(p=p, q=q, dp=dp, dq=dq, iq=iq, d=d, n=p * q)


def crt_from_rsa(key: RsaKey) -> CrtKey:
    c = derive_crt(key.p, key.q, key.d)
    return replace(c, e=key.e)


def coprime_split(p1: int, q1: int, r1: int) -> tuple[int, int]:
    """Split p1*q1*r1 into two coprime factors (p2, q2) with p2*q2 unchanged.

    Repeatedly absorbs gcd(p2, r2) into p2 and then gcd(q2, r2) into q2;
    whatever remains of r2 is coprime to both and is folded into q2. Each
    absorption strictly divides r2 down, so the loops terminate.
    """
    if min(p1, q1, r1) < 1:
        raise DomainError("coprime_split needs positive operands")
    p2, q2, r2 = p1, q1, r1
    g = _gcd(p2, r2)
    while g != 1:
        p2 *= g
        r2 //= g
        g = _gcd(p2, r2)
    g = _gcd(q2, r2)
    while g != 1:
        q2 *= g
        r2 //= g
        g = _gcd(q2, r2)
    q2 *= r2
    return p2, q2


def recover_d(key: CrtKey) -> int:
    """Rebuild d mod lambda(n) from the CRT 5-tuple alone.

    lambda(n) = lcm(p-1, q-1) is factored into coprime parts (p2, q2) via
    coprime_split; d is then the CRT recombination of (dp mod p2, dq mod q2).
    """
    p, q = key.p, key.q
    g = _gcd(p - 1, q - 1)
    p2, q2 = coprime_split((p - 1) // g, (q - 1) // g, g)
    dp2 = key.dp % p2
    dq2 = key.dq % q2
    i12 = mod_inv(p2, q2) if q2 > 1 else 0
    d = dp2 + p2 * ((i12 * (dq2 - dp2)) % q2)
    return d


def recover_e(key: CrtKey) -> int:
    """Public exponent e = d^-1 mod lambda(n), with d recovered if absent."""
    d = key.d if key.d is not None else recover_d(key)
    return mod_inv(d % key.lam, key.lam)


_FILE_FIELDS = ("p", "q", "dp", "dq", "iq", "e", "d", "N")


def write_key_file(key: CrtKey, path: str | Path) -> None:
    """Serialize a key as one JSON object of decimal-string fields."""
    obj: dict[str, str] = {
        "p": str(key.p),
        "q": str(key.q),
        "dp": str(key.dp),
        "dq": str(key.dq),
        "iq": str(key.iq),
    }
    if key.e is not None:
        obj["e"] = str(key.e)
    if key.d is not None:
        obj["d"] = str(key.d)
    obj["N"] = str(key.modulus)
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def read_key_file(path: str | Path) -> CrtKey:
    """Parse a key file; p, q, dp, dq, iq are required, the rest optional."""
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise KeyError_(f"cannot read key file {path}: {exc}") from None
    if not isinstance(obj, dict):
        raise KeyError_(f"key file {path} must hold one object")
    vals: dict[str, int] = {}
    for name in _FILE_FIELDS:
        if name in obj:
            try:
                vals[name] = int(str(obj[name]), 10)
            except ValueError:
                raise KeyError_(f"field {name!r} is not a decimal string") from None
    for name in ("p", "q", "dp", "dq", "iq"):
        if name not in vals:
            raise MissingKeyField(f"key file {path} lacks field {name!r}")
    return CrtKey(
        p=vals["p"],
        q=vals["q"],
        dp=vals["dp"],
        dq=vals["dq"],
        iq=vals["iq"],
        e=vals.get("e"),
        d=vals.get("d"),
        n=vals.get("N"),
    )
