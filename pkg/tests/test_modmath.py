"""Arithmetic layer checks.

Every nontrivial expected value is pinned by an independent oracle defined
in this file (iterated multiplication, brute-force scans), then frozen as a
literal so the assertions stay meaningful if the oracle itself regresses.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crtfi.modmath import (
    BellcoreResult,
    DomainError,
    FactorClass,
    NotInvertibleError,
    bellcore_extract,
    binomial_checksum,
    garner_recombine,
    gcd,
    is_prime,
    mod_exp,
    mod_inv,
)

# ------------------------------------------------------------------ oracles


def slow_exp(base, exponent, modulus):
    """Exponentiation as literal repeated multiplication."""
    acc = 1 % modulus
    for _ in range(exponent):
        acc = (acc * base) % modulus
    return acc


def scan_inv(a, m):
    for x in range(m):
        if (a * x) % m == 1:
            return x
    return None


def scan_gcd(a, b):
    best = 0
    for d in range(1, max(a, b) + 1):
        if a % d == 0 and b % d == 0:
            best = d
    return best if (a or b) else 0


def scan_crt(s_p, s_q, p, q):
    """The unique solution in [0, p*q), found by walking the whole ring."""
    hits = [x for x in range(p * q) if x % p == s_p % p and x % q == s_q % q]
    assert len(hits) == 1
    return hits[0]


def scan_primality(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


# ------------------------------------------------------------------ mod_exp


def test_exponent_zero_gives_one():
    assert mod_exp(2, 0, 77) == 1


def test_base_one_stays_one():
    assert mod_exp(1, 43, 77) == 1


def test_tiny_signature_value():
    assert slow_exp(2, 43, 77) == 30
    assert mod_exp(2, 43, 77) == 30


def test_small_modulus_rejected():
    with pytest.raises(DomainError):
        mod_exp(2, 3, 1)
    with pytest.raises(DomainError):
        mod_exp(2, 3, 0)


@settings(max_examples=60)
@given(
    st.integers(min_value=0, max_value=500),
    st.integers(min_value=0, max_value=4096),
    st.integers(min_value=2, max_value=400),
)
def test_exp_matches_iterated_multiplication(base, exponent, modulus):
    assert mod_exp(base, exponent, modulus) == slow_exp(base, exponent, modulus)


# ------------------------------------------------------------------ mod_inv


def test_inverse_of_eleven_mod_seven():
    assert scan_inv(11, 7) == 2
    assert mod_inv(11, 7) == 2


def test_unit_inverse_is_itself():
    for m in (2, 7, 30, 77):
        assert mod_inv(1, m) == 1


def test_shared_factor_has_no_inverse():
    with pytest.raises(NotInvertibleError):
        mod_inv(2, 4)


@settings(max_examples=60)
@given(st.integers(min_value=0, max_value=300), st.integers(min_value=2, max_value=300))
def test_inverse_agrees_with_scan(a, m):
    expect = scan_inv(a, m)
    if expect is None:
        with pytest.raises(NotInvertibleError):
            mod_inv(a, m)
    else:
        assert mod_inv(a, m) == expect


# ---------------------------------------------------------------------- gcd


def test_gcd_with_zero_returns_other():
    assert gcd(77, 0) == 77


def test_gcd_frozen_factor_cases():
    assert scan_gcd(77, 14) == 7
    assert gcd(77, 14) == 7
    assert scan_gcd(77, 11) == 11
    assert gcd(77, 11) == 11


# -------------------------------------------------------------------- garner


def test_recombination_frozen_values():
    assert scan_crt(2, 4, 7, 11) == 37
    assert garner_recombine(2, 4, 7, 11, 2) == 37
    assert garner_recombine(3, 3, 7, 11, 2) == 3
    assert scan_crt(2, 5, 7, 11) == 16
    assert garner_recombine(2, 5, 7, 11, 2) == 16


def test_recombination_is_the_unique_crt_solution():
    for p, q in ((3, 5), (7, 11), (5, 13)):
        i_q = mod_inv(q, p)
        for s_p in range(p):
            for s_q in range(q):
                got = garner_recombine(s_p, s_q, p, q, i_q)
                assert 0 <= got < p * q
                assert got == scan_crt(s_p, s_q, p, q)


# ------------------------------------------------------------------ bellcore


def test_faulted_q_branch_reveals_p():
    res = bellcore_extract(77, 30, 16, 7, 11)
    assert res == BellcoreResult(FactorClass.FACTOR_P, 7)
    assert res.success


def test_unfaulted_output_reveals_nothing():
    res = bellcore_extract(77, 30, 30, 7, 11)
    assert res.cls is FactorClass.WHOLE_N
    assert not res.success


def test_faulted_p_branch_reveals_q():
    # s_hat = 19 comes from the wrong p-half 5: scan_crt(5, 8, 7, 11) = 19
    assert scan_crt(5, 30 % 11, 7, 11) == 19
    res = bellcore_extract(77, 30, 19, 7, 11)
    assert res == BellcoreResult(FactorClass.FACTOR_Q, 11)
    assert res.success


def test_every_outcome_falls_in_four_classes():
    seen = set()
    for s_hat in range(77):
        res = bellcore_extract(77, 30, s_hat, 7, 11)
        seen.add(res.cls)
        if res.factor is not None:
            assert 77 % res.factor == 0
            assert res.factor in (7, 11)
        g = math.gcd(77, abs(30 - s_hat))
        assert res.success == (g in (7, 11))
    assert seen == {FactorClass.ONE, FactorClass.FACTOR_P, FactorClass.FACTOR_Q, FactorClass.WHOLE_N}


# ----------------------------------------------------------------- checksum


def test_checksum_at_exponent_zero():
    for r in (2, 5, 13):
        assert binomial_checksum(0, r) == 1


def test_checksum_frozen_values():
    assert (1 + 5) ** 3 % 25 == 16
    assert binomial_checksum(3, 5) == 16
    assert binomial_checksum(1, 2) == 3


def test_checksum_equals_full_exponentiation_in_square_ring():
    for r in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31):
        for d in range(r * (r - 1)):
            assert binomial_checksum(d, r) == mod_exp(1 + r, d, r * r)


# ----------------------------------------------------------------- is_prime


def test_primality_agrees_with_trial_division():
    for n in range(600):
        assert is_prime(n) == scan_primality(n), n
