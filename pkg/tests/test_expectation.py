from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction
from math import factorial
from pathlib import Path

import pytest

from algebra import LinComb, ParseError, parse_coefficient, serialize
from conftest import lc
from expectation import TimePolynomial, expect_expansion, expect_word
from picard import picard_direct


@pytest.mark.parametrize("word,q_exp,coefficient", [
    ((0, 1, 1, 0, 0), 4, Fraction(1, 48)),
    ((2, 2, 1, 1, 3, 3), 3, Fraction(1, 48)),
    ((2, 2, 0, 1, 1, 3, 3, 0, 0, 0), 7, Fraction(1, 8 * factorial(7))),
    ((), 0, Fraction(1)),
    ((0,), 1, Fraction(1)),
])
def test_expect_word_examples(word, q_exp: int, coefficient: Fraction) -> None:
    em = expect_word(word)
    assert em.q_exp == q_exp
    assert em.coefficient == coefficient


def test_expect_word_zero_cases() -> None:
    assert expect_word((0, 1, 1, 0, 0, 1)) is None
    assert expect_word((1,)) is None
    assert expect_word((1, 1, 1)) is None
    assert expect_word((1, 2)) is None


def test_pure_time_words() -> None:
    for k in range(11):
        em = expect_word((0,) * k)
        assert em.coefficient == Fraction(1, factorial(k))
        assert em.value(Fraction(2)) == Fraction(2 ** k, factorial(k))


def test_time_letter_is_configurable() -> None:
    assert expect_word((1, 2, 2), time_letter=1).coefficient == Fraction(1, 4)
    assert expect_word((0, 0), time_letter=1).coefficient == Fraction(1, 2)
    assert expect_word((1,), time_letter=1).coefficient == 1


def test_odd_letter_counts_vanish() -> None:
    rng = random.Random(11)
    for _ in range(500):
        word = tuple(rng.randint(0, 3) for _ in range(rng.randint(1, 9)))
        counts = Counter(l for l in word if l != 0)
        if any(n % 2 for n in counts.values()):
            assert expect_word(word) is None


def test_nonzero_words_match_explicit_formula() -> None:
    rng = random.Random(12)
    for _ in range(500):
        word = tuple(rng.randint(0, 2) for _ in range(rng.randint(0, 8)))
        em = expect_word(word)
        if em is None:
            continue
        noise = sum(1 for l in word if l != 0)
        assert noise % 2 == 0
        assert em.p == Fraction(1, 2 ** (noise // 2))
        assert em.q_exp == len(word) - noise // 2


def test_expect_expansion_examples() -> None:
    assert expect_expansion(lc(("a", (0,)), ("b", (1,)))).to_text() == "a*T"
    assert expect_expansion(LinComb.zero()).is_zero()
    assert expect_expansion(LinComb.zero()).to_text() == "0"


def test_expect_expansion_reads_files(tmp_path: Path) -> None:
    x = lc(("a", (0,)), ("-a^2", (0, 0)), ("b", (1, 1)), ("c", (1,)))
    path = tmp_path / "x.txt"
    path.write_text(serialize(x), encoding="utf-8")
    poly = expect_expansion(path)
    assert poly == expect_expansion(x)
    assert poly.to_text() == "(a + 1/2*b)*T - 1/2*a^2*T^2"
    assert expect_expansion(["1 ; 0\n"]).to_text() == "T"


def test_expect_expansion_parse_error_has_line(tmp_path: Path) -> None:
    path = tmp_path / "bad.txt"
    path.write_text("a ; 0\nb ; 1,z\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        expect_expansion(path)
    assert exc.value.line == 2


def test_time_polynomial_text_and_evaluation() -> None:
    poly = TimePolynomial({0: parse_coefficient("y0"), 2: parse_coefficient("-1"),
                           3: parse_coefficient("3*a")})
    assert poly.to_text() == "y0 - T^2 + 3*a*T^3"
    assert poly.to_text("t") == "y0 - t^2 + 3*a*t^3"
    assert poly.evaluate(2.0, {"a": 1.0, "y0": 0.5}) == pytest.approx(0.5 - 4 + 24)
    assert poly.degree() == 3
    poly.add_term(3, parse_coefficient("-3*a"))
    assert poly.degree() == 2


QUADRATIC_NOISE_R4_MEAN = {
    1: "a",
    2: "-1/2*a^2",
    3: "1/6*a^3",
    4: "1/4*a^3*b^2 - 1/24*a^4",
    5: "-7/20*a^4*b^2",
    6: "61/360*a^5*b^2",
    7: "17/140*a^5*b^4 - 1/24*a^6*b^2",
    8: "1/192*a^7*b^2 - 21/160*a^6*b^4",
    9: "157/3024*a^7*b^4",
    10: "43/1800*a^7*b^6 - 17/2800*a^8*b^4",
    11: "-1/100*a^8*b^6",
}


@pytest.mark.slow
def test_quadratic_noise_expectation_polynomial(quadratic) -> None:
    expected = TimePolynomial({k: parse_coefficient(c) for k, c in QUADRATIC_NOISE_R4_MEAN.items()})
    assert expect_expansion(picard_direct(quadratic, 4)) == expected
