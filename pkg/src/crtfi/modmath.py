"""Modular arithmetic helpers for CRT-RSA signatures.

Everything works on plain Python ints (arbitrary precision). Moduli must be
at least 2; residue subtraction is normalized into [0, m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class DomainError(ValueError):
    """An operand is outside the operation's domain."""


class NotInvertibleError(DomainError):
    """Inverse requested for a value not coprime to the modulus."""

    def __init__(self, value: int, modulus: int):
        super().__init__(f"{value} has no inverse modulo {modulus}")
        self.value = value
        self.modulus = modulus


def _check_modulus(m: int) -> None:
    if m < 2:
        raise DomainError(f"modulus must be >= 2, got {m}")


def mod_exp(base: int, exponent: int, modulus: int) -> int:
    """base**exponent mod modulus for exponent >= 0."""
    _check_modulus(modulus)
    if exponent < 0:
        raise DomainError(f"exponent must be >= 0, got {exponent}")
    return pow(base, exponent, modulus)


def mod_inv(value: int, modulus: int) -> int:
    """Multiplicative inverse of value modulo modulus."""
    _check_modulus(modulus)
    try:
        return pow(value, -1, modulus)
    except ValueError:
        raise NotInvertibleError(value, modulus) from None


def gcd(a: int, b: int) -> int:
    """Greatest common divisor; gcd(0, 0) = 0."""
    if a < 0 or b < 0:
        raise DomainError("gcd operands must be >= 0")
    return math.gcd(a, b)


def garner_recombine(s_p: int, s_q: int, p: int, q: int, i_q: int) -> int:
    """CRT recombination s_q + q*((i_q*(s_p - s_q)) mod p).

    For proper residues (s_p < p, s_q < q, i_q = q^-1 mod p) the result is
    the unique value in [0, p*q) congruent to s_p mod p and s_q mod q.
    """
    _check_modulus(p)
    _check_modulus(q)
    return s_q + q * ((i_q * (s_p - s_q)) % p)


def binomial_checksum(d: int, r: int) -> int:
    """(1 + d*r) mod r**2, the value of (1+r)**d in Z_{r^2}."""
    if r < 2:
        raise DomainError(f"r must be >= 2, got {r}")
    if d < 0:
        raise DomainError(f"d must be >= 0, got {d}")
    return (1 + d * r) % (r * r)


class FactorClass(Enum):
    """Outcome classes of the gcd oracle over a signature pair."""

    ONE = "one"
    FACTOR_P = "factor-p"
    FACTOR_Q = "factor-q"
    WHOLE_N = "whole-n"


@dataclass(frozen=True)
class BellcoreResult:
    """What gcd(N, |S - S_hat|) reveals about the modulus."""

    cls: FactorClass
    factor: int | None

    @property
    def success(self) -> bool:
        return self.cls in (FactorClass.FACTOR_P, FactorClass.FACTOR_Q)


def bellcore_extract(n: int, s: int, s_hat: int, p: int, q: int) -> BellcoreResult:
    """Classify gcd(n, |s - s_hat|) against the known factors p and q.

    A faulted half-exponentiation leaves the other CRT branch intact, so the
    difference of the correct and faulted signatures shares exactly one prime
    with n and the gcd extracts it.
    """
    _check_modulus(n)
    g = math.gcd(n, abs(s - s_hat))
    if g == n:
        return BellcoreResult(FactorClass.WHOLE_N, None)
    if g == p:
        return BellcoreResult(FactorClass.FACTOR_P, p)
    if g == q:
        return BellcoreResult(FactorClass.FACTOR_Q, q)
    return BellcoreResult(FactorClass.ONE, None)


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24 (covers desk scale)."""
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True
