"""Key generation and CRT recovery.

The recovery path is checked against the inverse-of-e oracle: the recovered
exponent must be e^-1 in Z_lambda, computed independently via pow(e, -1).
"""

import json

import pytest

from crtfi.keytools import (
    CrtKey,
    KeyError_,
    MissingKeyField,
    coprime_split,
    crt_from_rsa,
    derive_crt,
    gen_key,
    read_key_file,
    recover_d,
    recover_e,
    write_key_file,
)
from crtfi.modmath import is_prime, mod_exp

# ---------------------------------------------------------------- generation


def test_four_bit_primes_come_from_the_only_pair():
    for seed in range(6):
        key = gen_key(4, seed)
        assert {key.p, key.q} == {11, 13}
        assert (key.e * key.d) % key.lam == 1


def test_generated_primes_are_distinct_and_prime():
    for seed in range(8):
        key = gen_key(8, seed)
        assert key.p != key.q
        assert is_prime(key.p) and is_prime(key.q)
        assert key.n == key.p * key.q
        assert (key.e * key.d) % key.lam == 1


def test_same_seed_reproduces_the_key():
    assert gen_key(8, 5) == gen_key(8, 5)
    assert gen_key(8, 5) != gen_key(8, 6)


# ---------------------------------------------------------------- derivation


def test_tiny_key_crt_tuple():
    key = derive_crt(7, 11, 43)
    assert (key.dp, key.dq, key.iq) == (1, 3, 2)


def test_three_by_five_crt_tuple():
    key = derive_crt(3, 5, 3)
    assert (key.dp, key.dq, key.iq) == (1, 3, 2)


def test_exponent_divisible_by_both_totients():
    key = derive_crt(7, 11, 60)
    assert key.dp == 0 and key.dq == 0


# ------------------------------------------------------------- coprime_split


def test_split_folds_residual_into_second_part():
    assert coprime_split(3, 5, 2) == (3, 10)


def test_split_absorbs_shared_factor():
    assert coprime_split(1, 2, 2) == (1, 4)


def test_split_without_common_factor_is_identity():
    assert coprime_split(3, 5, 1) == (3, 5)


def test_split_parts_stay_coprime_and_cover_lambda():
    import math

    primes = [n for n in range(3, 64) if is_prime(n)]
    for i, p in enumerate(primes):
        for q in primes[i + 1 :]:
            g = math.gcd(p - 1, q - 1)
            lam = (p - 1) * (q - 1) // g
            p2, q2 = coprime_split((p - 1) // g, (q - 1) // g, g)
            assert math.gcd(p2, q2) == 1
            assert p2 * q2 == lam
            assert p2 % ((p - 1) // g) == 0
            assert q2 % ((q - 1) // g) == 0


# ------------------------------------------------------------------ recovery


def test_tiny_trace_recovers_thirteen():
    key = derive_crt(7, 11, 43)
    lam = key.lam
    assert lam == 30
    assert pow(7, -1, 30) == 13
    assert recover_d(key) == 13
    assert recover_e(key) == 7


def test_three_by_five_recovery():
    key = derive_crt(3, 5, 3)
    assert key.lam == 4
    assert recover_d(key) == 3
    assert recover_e(key) == 3


def test_small_private_exponent_is_a_fixed_point():
    key = derive_crt(7, 11, 13)
    assert recover_d(key) == 13


def test_hundred_seeded_keys_recover_the_inverse_of_e():
    for seed in range(100):
        key = crt_from_rsa(gen_key(8, seed))
        d = recover_d(key)
        lam = key.lam
        assert 0 <= d < lam
        assert d == pow(key.e, -1, lam)
        assert recover_e(key) == key.e


def test_signature_verify_round_trip_exhaustive():
    key = gen_key(4, 1)
    assert key.n < 1000
    for m in range(key.n):
        assert mod_exp(mod_exp(m, key.d, key.n), key.e, key.n) == m


# ------------------------------------------------------------------ key file


def test_key_file_round_trip(tmp_path):
    key = crt_from_rsa(gen_key(8, 3))
    path = tmp_path / "k.json"
    write_key_file(key, path)
    assert read_key_file(path) == key


def test_key_file_missing_field_rejected(tmp_path):
    path = tmp_path / "k.json"
    path.write_text(json.dumps({"p": "7", "q": "11", "dp": "1", "dq": "3"}))
    with pytest.raises(MissingKeyField):
        read_key_file(path)


def test_key_file_junk_rejected(tmp_path):
    path = tmp_path / "k.json"
    path.write_text("not a key")
    with pytest.raises(KeyError_):
        read_key_file(path)


def test_optional_fields_survive_omission(tmp_path):
    path = tmp_path / "k.json"
    path.write_text(json.dumps({"p": "7", "q": "11", "dp": "1", "dq": "3", "iq": "2"}))
    key = read_key_file(path)
    assert key == CrtKey(p=7, q=11, dp=1, dq=3, iq=2)
    assert key.d is None and key.e is None
    assert key.modulus == 77
