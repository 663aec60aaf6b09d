# -*- coding: utf-8 -*-
"""
expectation.py

Κλειστή μορφή της αναμενόμενης τιμής επαναλαμβανόμενων Stratonovich ολοκληρωμάτων
για drivers (χρόνος, ανεξάρτητες κινήσεις Brown):

    E J^α_{0,t} = p_α t^{q_α} / q_α!,   p_α = (1/2)^{#ζευγών}

Σάρωση από δεξιά προς τα αριστερά: ένα γράμμα χρόνου καταναλώνει μία θέση,
δύο διαδοχικά ίδια γράμματα Brown καταναλώνουν δύο· οτιδήποτε άλλο δίνει 0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple, Union

from algebra import Coefficient, LinComb, Word, iter_terms

logger = logging.getLogger(__name__)

DEFAULT_TIME_LETTER = 0
DEFAULT_TIME_SYMBOL = "T"


@dataclass(frozen=True)
class ExpectationMonomial:
    """p * t^q_exp / q_exp!  (το μηδέν δεν αναπαρίσταται)."""
    p: Fraction
    q_exp: int

    @property
    def coefficient(self) -> Fraction:
        return self.p / factorial(self.q_exp)

    def value(self, t: Union[Fraction, float]):
        return self.coefficient * t ** self.q_exp


def expect_word(w: Word, time_letter: int = DEFAULT_TIME_LETTER) -> Optional[ExpectationMonomial]:
    """None όταν η αναμενόμενη τιμή είναι ακριβώς 0."""
    i = len(w) - 1
    pairs = 0
    zeros = 0
    while i >= 0:
        if w[i] == time_letter:
            zeros += 1
            i -= 1
        elif i >= 1 and w[i - 1] == w[i]:
            pairs += 1
            i -= 2
        else:
            return None
    return ExpectationMonomial(Fraction(1, 2 ** pairs), pairs + zeros)


class TimePolynomial:
    """Πολυώνυμο στο t με συμβολικούς συντελεστές: δύναμη -> Coefficient."""

    def __init__(self, coeffs: Optional[Mapping[int, Coefficient]] = None):
        self.coeffs: Dict[int, Coefficient] = {}
        for power, c in (coeffs or {}).items():
            self.add_term(power, c)

    def add_term(self, power: int, coef: Coefficient) -> None:
        s = self.coeffs.get(power, Coefficient()) + coef
        if s.is_zero():
            self.coeffs.pop(power, None)
        else:
            self.coeffs[power] = s

    def coefficient(self, power: int) -> Coefficient:
        return self.coeffs.get(power, Coefficient())

    def degree(self) -> int:
        return max(self.coeffs, default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimePolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def evaluate(self, t: float, bindings: Mapping[str, float]) -> float:
        return sum(c.evaluate(bindings) * t ** k for k, c in self.coeffs.items())

    def to_text(self, symbol: str = DEFAULT_TIME_SYMBOL) -> str:
        """Αύξουσες δυνάμεις του t, π.χ. 'a*T - 1/2*a^2*T^2'."""
        if not self.coeffs:
            return "0"
        parts = []
        for k in sorted(self.coeffs):
            c = self.coeffs[k]
            t = "" if k == 0 else (symbol if k == 1 else f"{symbol}^{k}")
            ctext = c.to_text()
            if not t:
                term = ctext if len(c) == 1 else f"({ctext})"
            elif c == 1:
                term = t
            elif c == -1:
                term = f"-{t}"
            elif len(c) == 1:
                term = f"{ctext}*{t}"
            else:
                term = f"({ctext})*{t}"
            if not parts:
                parts.append(term)
            elif term.startswith("-"):
                parts.append(f"- {term[1:]}")
            else:
                parts.append(f"+ {term}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"TimePolynomial({self.to_text()})"


def _accumulate(terms: Iterable[Tuple[Word, Coefficient]], time_letter: int) -> TimePolynomial:
    out = TimePolynomial()
    seen = 0
    for word, coef in terms:
        em = expect_word(word, time_letter)
        seen += 1
        if em is not None:
            out.add_term(em.q_exp, coef.scale(em.coefficient))
    logger.debug("expectation: %d όροι, βαθμός %d", seen, out.degree())
    return out


def expect_expansion(x: Union[LinComb, str, Path, Iterable[str]],
                     time_letter: int = DEFAULT_TIME_LETTER) -> TimePolynomial:
    """
    Άθροισμα συντελεστής * E J^α όρο-προς-όρο.
    Για αρχείο: ανάγνωση γραμμή-γραμμή (η ανάπτυξη δεν φορτώνεται ολόκληρη).
    """
    if isinstance(x, LinComb):
        return _accumulate(x.terms.items(), time_letter)
    if isinstance(x, (str, Path)):
        with open(x, "r", encoding="utf-8") as fh:
            return _accumulate(iter_terms(fh), time_letter)
    return _accumulate(iter_terms(x), time_letter)
