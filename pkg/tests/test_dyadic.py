from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from derham_range.dyadic import Dyadic, digits, last_one_index


def test_canonical_form():
    assert Dyadic.of(2, 2) == Dyadic(1, 1)
    assert Dyadic.of(0, 7) == Dyadic(0, 0)
    assert Dyadic.of(8, 3) == Dyadic(1, 0)
    with pytest.raises(ValueError, match="canonical"):
        Dyadic(2, 2)
    with pytest.raises(ValueError):
        Dyadic(5, 2)
    with pytest.raises(ValueError):
        Dyadic(1, 63)


@pytest.mark.parametrize("text, value", [("3/2^3", Fraction(3, 8)), ("0", 0), ("1", 1), ("1/2^1", Fraction(1, 2))])
def test_parse_roundtrip(text, value):
    d = Dyadic.parse(text)
    assert d.as_fraction() == value
    assert Dyadic.parse(str(d)) == d


@pytest.mark.parametrize(
    "text, message",
    [("2/2^2", "canonical"), ("5/2^2", "outside"), ("3/8", "expected"), ("1/2^70", "exceeds"), ("0/2^3", "canonical")],
)
def test_parse_rejects(text, message):
    with pytest.raises(ValueError, match=message):
        Dyadic.parse(text)


def test_decimal():
    assert Dyadic(1, 2).decimal() == "0.25"
    assert Dyadic(0, 0).decimal() == "0"
    assert Dyadic(1, 0).decimal() == "1"
    assert Dyadic(3, 3).decimal() == "0.375"
    assert Fraction(Dyadic(1, 40).decimal()) == Fraction(1, 2**40)


def test_digits_examples():
    assert digits(0.0, 5) == ((0, 0, 0, 0, 0), Dyadic(0, 0))
    assert digits(0.5, 2) == ((1, 0), Dyadic(1, 1))
    assert digits(0.75, 2) == ((1, 1), Dyadic(3, 2))
    assert digits(Fraction(1, 3), 4) == ((0, 1, 0, 1), Dyadic(5, 4))


def test_digits_match_floor_formula():
    # X_n(x) = floor(2^n x) - 2 floor(2^(n-1) x)
    for x in (Fraction(1, 3), Fraction(5, 7), Fraction(123, 1000)):
        bits, _ = digits(x, 20)
        for n in range(1, 21):
            assert bits[n - 1] == (x * 2**n).__floor__() - 2 * (x * 2 ** (n - 1)).__floor__()


def test_digits_domain():
    with pytest.raises(ValueError):
        digits(1.0, 3)
    with pytest.raises(ValueError):
        digits(-0.1, 3)
    with pytest.raises(ValueError):
        digits(0.5, 63)


@given(n=st.integers(1, 62), data=st.data())
def test_digits_roundtrip(n, data):
    k = data.draw(st.integers(0, 2**n - 1))
    d = Dyadic.of(k, n)
    bits, zeta = digits(d, n)
    assert sum(Fraction(b, 2**i) for i, b in enumerate(bits, start=1)) == Fraction(k, 2**n)
    assert zeta == d


@given(x=st.fractions(0, 1).filter(lambda f: f < 1))
def test_truncations_refine(x):
    prev = Fraction(0)
    for n in range(1, 40):
        _, zeta = digits(x, n)
        z = zeta.as_fraction()
        assert prev <= z <= x < z + Fraction(1, 2**n)
        prev = z


def test_float_digits_are_those_of_the_double():
    bits, zeta = digits(0.1, 62)
    assert zeta.as_fraction() <= Fraction(0.1) < zeta.as_fraction() + Fraction(1, 2**62)


@pytest.mark.parametrize("text, m", [("1/2^1", 1), ("3/2^2", 2), ("5/2^3", 3)])
def test_last_one_index(text, m):
    assert last_one_index(Dyadic.parse(text)) == m


def test_last_one_index_rejects_endpoints():
    for d in (Dyadic(0, 0), Dyadic(1, 0)):
        with pytest.raises(ValueError):
            last_one_index(d)
