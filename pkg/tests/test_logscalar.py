import json
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ftlelab.errors import DomainError
from ftlelab.logscalar import CANCEL_EPS, SignedLogReal, log_norm2, slog


def log_close(a: float, b: float, tol: float = 1e-10) -> bool:
    """Log-magnitude comparison: tol relative for large logs, absolute below 1."""
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


signs = st.sampled_from([-1, 1])
logs = st.floats(min_value=-1e7, max_value=1e7, allow_nan=False)
values = st.builds(SignedLogReal, signs, logs)


def test_mul_examples():
    assert slog(2.0) * slog(3.0) == SignedLogReal(1, math.log(6.0))
    assert SignedLogReal(-1, 0.0) * SignedLogReal(-1, 0.0) == SignedLogReal.one()
    assert SignedLogReal.zero() * SignedLogReal(1, 100000.0) == SignedLogReal.zero()


def test_add_examples():
    four = slog(2.0) + slog(2.0)
    assert four.sign == 1 and math.isclose(four.log_mag, math.log(4.0), rel_tol=1e-15)
    assert (slog(5.0) + slog(-5.0)).is_zero
    big = SignedLogReal(1, 1000.0) + SignedLogReal(1, 0.0)
    assert big.sign == 1
    assert math.isclose(big.log_mag, 1000.0 + math.log1p(math.exp(-1000.0)), rel_tol=1e-15)


def test_sub_and_signs():
    d = slog(3.0) - slog(2.0)
    assert d.sign == 1 and math.isclose(d.log_mag, 0.0, abs_tol=1e-15)
    d2 = slog(2.0) - slog(3.0)
    assert d2.sign == -1


def test_pow_examples():
    assert slog(2.0).pow_int(10) == SignedLogReal(1, 10 * math.log(2.0))
    sq = slog(-3.0).pow_int(2)
    assert sq.sign == 1 and math.isclose(sq.log_mag, 2 * math.log(3.0), rel_tol=1e-15)
    # huge exponents scale the log without underflow
    big = slog(0.5).pow_int(10**6)
    assert big.sign == 1
    assert math.isclose(big.log_mag, 10**6 * math.log(0.5), rel_tol=1e-12)
    assert math.isclose(big.log_mag, -693147.18055994529, rel_tol=1e-10)


def test_pow_negative_exponent():
    inv = slog(-2.0).pow_int(-3)
    assert inv.sign == -1
    assert math.isclose(inv.log_mag, -3 * math.log(2.0), rel_tol=1e-15)


def test_pow_zero_base():
    assert SignedLogReal.zero().pow_int(3).is_zero
    with pytest.raises(DomainError):
        SignedLogReal.zero().pow_int(0)
    with pytest.raises(DomainError):
        SignedLogReal.zero().pow_int(-1)
    assert slog(7.0).pow_int(0) == SignedLogReal.one()


def test_division_and_sqrt():
    q = slog(6.0) / slog(-2.0)
    assert q.sign == -1 and math.isclose(q.log_mag, math.log(3.0), rel_tol=1e-14)
    with pytest.raises(DomainError):
        slog(1.0) / SignedLogReal.zero()
    r = slog(9.0).sqrt()
    assert math.isclose(r.log_mag, math.log(3.0), rel_tol=1e-14)
    with pytest.raises(DomainError):
        slog(-1.0).sqrt()
    assert math.isclose(log_norm2(slog(3.0), slog(4.0)).to_float(), 5.0, rel_tol=1e-12)


def test_construction_validation():
    with pytest.raises(DomainError):
        SignedLogReal(2, 0.0)
    with pytest.raises(DomainError):
        SignedLogReal(1, math.nan)
    with pytest.raises(DomainError):
        SignedLogReal.from_float(math.inf)


def test_zero_normalises_log_mag():
    assert SignedLogReal(0, 123.0) == SignedLogReal(0, -7.0)
    assert hash(SignedLogReal(0, 123.0)) == hash(SignedLogReal.zero())


@given(st.floats(min_value=1e-300, max_value=1e300))
def test_round_trip(x):
    assert math.isclose(slog(x).to_float(), x, rel_tol=1e-12)
    assert math.isclose(slog(-x).to_float(), -x, rel_tol=1e-12)


def test_decode_saturates():
    assert SignedLogReal(1, 1e6).to_float() == math.inf
    assert SignedLogReal(-1, 1e6).to_float() == -math.inf


@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4))
def test_ordering_matches_reals(a, b):
    assume(abs(a) > 1e-12 and abs(b) > 1e-12)
    assert (slog(a) < slog(b)) == (a < b)
    assert (slog(a) == slog(b)) == (a == b)


def test_ordering_with_zero():
    assert slog(-2.0) < SignedLogReal.zero() < slog(1e-30) < slog(5.0)
    # among negatives, larger magnitude is smaller
    assert slog(-5.0) < slog(-2.0)


def _no_cancellation(x: SignedLogReal, y: SignedLogReal) -> bool:
    return x.sign == 0 or y.sign == 0 or x.sign == y.sign or abs(x.log_mag - y.log_mag) > 1e-6


@settings(max_examples=200)
@given(values, values)
def test_add_commutes(a, b):
    assume(_no_cancellation(a, b))
    r1, r2 = a + b, b + a
    assert r1.sign == r2.sign
    assert log_close(r1.log_mag, r2.log_mag)


@settings(max_examples=200)
@given(values, values, values)
def test_add_associates_away_from_cancellation(a, b, c):
    assume(_no_cancellation(a, b) and _no_cancellation(b, c))
    ab, bc = a + b, b + c
    assume(_no_cancellation(ab, c) and _no_cancellation(a, bc))
    r1, r2 = ab + c, a + bc
    assume(r1.sign != 0 and r2.sign != 0)
    assert r1.sign == r2.sign
    assert log_close(r1.log_mag, r2.log_mag)


@settings(max_examples=200)
@given(values, values, values)
def test_mul_associates_and_commutes(a, b, c):
    r1, r2 = (a * b) * c, a * (b * c)
    assert r1.sign == r2.sign
    assert log_close(r1.log_mag, r2.log_mag)
    assert a * b == b * a


@settings(max_examples=200)
@given(values, values, values)
def test_mul_distributes_over_add(a, b, c):
    assume(_no_cancellation(b, c))
    lhs = a * (b + c)
    rhs = a * b + a * c
    assert lhs.sign == rhs.sign
    if lhs.sign != 0:
        assert log_close(lhs.log_mag, rhs.log_mag)


def test_cancellation_threshold():
    a = SignedLogReal(1, 100.0)
    b = SignedLogReal(-1, 100.0 + CANCEL_EPS / 10)
    assert (a + b).is_zero


def test_json_round_trip_bit_exact():
    v = SignedLogReal(-1, 0.1 + 0.2)  # a value with a messy repr
    blob = json.dumps(v.to_json_dict())
    back = SignedLogReal.from_json_dict(json.loads(blob))
    assert back.sign == v.sign
    assert back.log_mag == v.log_mag  # bit-exact
