# -*- coding: utf-8 -*-
"""
algebra.py

Ακριβής πυρήνας της shuffle άλγεβρας για επαναλαμβανόμενα ολοκληρώματα J^α:
- Λέξεις (tuples από γράμματα-drivers, 0 = χρόνος)
- Συντελεστές: πολυώνυμα πολλών μεταβλητών με ρητούς (Fraction), χωρίς floats
- Γραμμικοί συνδυασμοί LinComb: Word -> Coefficient, με κανονική σειρά
- Shuffle γινόμενο (αναδρομικό & επαναληπτικό), dendriform γινόμενο ▷ (ncp)
- Κείμενο ανάπτυξης: μία γραμμή ανά όρο "<coefficient> ; <word>"

ΚΑΝΟΝΑΣ: κάθε πράξη κλαδεύει αμέσως τους μηδενικούς συντελεστές.
"""
from __future__ import annotations

import re
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

Letter = int
Word = Tuple[int, ...]
MaxLength = Optional[int]   # None = unbounded

EMPTY_WORD: Word = ()
UNBOUNDED: MaxLength = None

SYMBOL_RE = re.compile(r"[a-z][a-z0-9]*")
SHUFFLE_CACHE_SIZE = 200_000


class ParseError(ValueError):
    """Σφάλμα σύνταξης με θέση (γραμμή/στήλη, 1-based)."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"γραμμή {line}, στήλη {column}: {message}")


class UnboundSymbolError(ValueError):
    """Σύμβολο παραμέτρου χωρίς αριθμητική τιμή."""

    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(f"Η παράμετρος '{symbol}' δεν έχει αριθμητική τιμή (binding)")


# ------------------------ Words ------------------------

def make_word(letters: Iterable[int]) -> Word:
    word = tuple(int(l) for l in letters)
    if any(l < 0 for l in word):
        raise ValueError(f"Αρνητικό γράμμα σε λέξη: {word}")
    return word


def append(w: Word, l: Letter) -> Word:
    """Ολοκλήρωση ως προς τον driver l: (w_1..w_k) -> (w_1..w_k, l)."""
    return tuple(w) + (l,)


def word_sort_key(w: Word) -> Tuple[int, Word]:
    return (len(w), w)


# ------------------------ Monomials & coefficients ------------------------

class Monomial:
    """Γινόμενο συμβόλων παραμέτρων με θετικούς εκθέτες, π.χ. a^3*b^2."""
    __slots__ = ("exps", "_hash")

    def __init__(self, exps: Iterable[Tuple[str, int]] = ()):
        merged: Dict[str, int] = {}
        for sym, e in exps:
            if e < 0:
                raise ValueError(f"Αρνητικός εκθέτης για '{sym}'")
            if e:
                merged[sym] = merged.get(sym, 0) + e
        self.exps: Tuple[Tuple[str, int], ...] = tuple(sorted(merged.items()))
        self._hash = hash(self.exps)

    @classmethod
    def symbol(cls, name: str, exponent: int = 1) -> "Monomial":
        if not SYMBOL_RE.fullmatch(name):
            raise ValueError(f"Μη έγκυρο όνομα συμβόλου: '{name}'")
        return cls([(name, exponent)])

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exps)

    def sort_key(self):
        # graded lex: πρώτα ο βαθμός, μετά λεξικογραφικά στα ονόματα (a > b)
        return (self.degree, tuple((sym, -e) for sym, e in self.exps))

    def symbols(self) -> Tuple[str, ...]:
        return tuple(sym for sym, _ in self.exps)

    def __hash__(self) -> int:
        return self._hash

    def __reduce__(self):
        # το hash των str διαφέρει ανά διεργασία
        return (Monomial, (self.exps,))

    def __eq__(self, other) -> bool:
        return isinstance(other, Monomial) and self.exps == other.exps

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not self.exps:
            return other
        if not other.exps:
            return self
        return Monomial(self.exps + other.exps)

    def __pow__(self, k: int) -> "Monomial":
        return Monomial((sym, e * k) for sym, e in self.exps)

    def to_text(self) -> str:
        return "*".join(sym if e == 1 else f"{sym}^{e}" for sym, e in self.exps)

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        value = 1.0
        for sym, e in self.exps:
            if sym not in bindings:
                raise UnboundSymbolError(sym)
            value *= float(bindings[sym]) ** e
        return value

    def __repr__(self) -> str:
        return f"Monomial({self.to_text() or '1'})"


ONE_MONOMIAL = Monomial()


def _rational_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class Coefficient:
    """Ακριβές πολυώνυμο στις παραμέτρους: Monomial -> Fraction (χωρίς μηδενικά)."""
    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Union[int, Fraction]]] = None):
        clean: Dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c:
                    clean[mono] = c
        self.terms = clean

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Fraction]) -> "Coefficient":
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def constant(cls, value: Union[int, Fraction]) -> "Coefficient":
        return cls({ONE_MONOMIAL: value})

    @classmethod
    def symbol(cls, name: str) -> "Coefficient":
        return cls({Monomial.symbol(name): 1})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m.exps for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"Ο συντελεστής '{self.to_text()}' δεν είναι σταθερός")
        return self.terms.get(ONE_MONOMIAL, Fraction(0))

    def symbols(self) -> Tuple[str, ...]:
        return tuple(sorted({s for m in self.terms for s in m.symbols()}))

    def sorted_terms(self) -> List[Tuple[Monomial, Fraction]]:
        return sorted(self.terms.items(), key=lambda mc: mc[0].sort_key())

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other) -> "Coefficient":
        other = as_coefficient(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            s = out.get(mono, 0) + c
            if s:
                out[mono] = s
            else:
                out.pop(mono, None)
        return Coefficient._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "Coefficient":
        return Coefficient._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Coefficient":
        return self + (-as_coefficient(other))

    def __rsub__(self, other) -> "Coefficient":
        return as_coefficient(other) - self

    def scale(self, factor: Union[int, Fraction]) -> "Coefficient":
        factor = Fraction(factor)
        if not factor:
            return Coefficient()
        return Coefficient._raw({m: c * factor for m, c in self.terms.items()})

    def __mul__(self, other) -> "Coefficient":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = as_coefficient(other)
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 * m2
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Coefficient._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other: Union[int, Fraction]) -> "Coefficient":
        return self.scale(Fraction(1) / Fraction(other))

    def __pow__(self, k: int) -> "Coefficient":
        if k < 0:
            raise ValueError("Αρνητικός εκθέτης συντελεστή")
        out = Coefficient.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Coefficient.constant(other)
        if not isinstance(other, Coefficient):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def evaluate(self, bindings: Mapping[str, float]) -> float:
        return sum(float(c) * m.evaluate(bindings) for m, c in self.terms.items())

    def to_text(self) -> str:
        """Κανονική μορφή, π.χ. '-1/2*a^2 + 3*a*b - y0'."""
        if not self.terms:
            return "0"
        parts: List[str] = []
        for mono, c in self.sorted_terms():
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = mono.to_text()
            if not body:
                text = _rational_text(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{_rational_text(mag)}*{body}"
            if not parts:
                parts.append(text if sign == "+" else f"-{text}")
            else:
                parts.append(f"{sign} {text}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Coefficient({self.to_text()})"


ZERO = Coefficient()
ONE = Coefficient.constant(1)


def as_coefficient(value) -> Coefficient:
    if isinstance(value, Coefficient):
        return value
    if isinstance(value, (int, Fraction)):
        return Coefficient.constant(value)
    if isinstance(value, str):
        return parse_coefficient(value)
    raise TypeError(f"Δεν μετατρέπεται σε Coefficient: {value!r}")


# ------------------------ Linear combinations ------------------------

class TermAccumulator:
    """Mutable αθροιστής Word -> {Monomial: Fraction} (χωρίς κλάδεμα μέχρι το to_lincomb)."""
    __slots__ = ("buckets",)

    def __init__(self):
        self.buckets: Dict[Word, Dict[Monomial, Fraction]] = {}

    def __len__(self) -> int:
        return len(self.buckets)

    def add(self, word: Word, coef: Coefficient, mult: int = 1) -> None:
        bucket = self.buckets.get(word)
        if bucket is None:
            bucket = self.buckets[word] = {}
        for mono, c in coef.terms.items():
            bucket[mono] = bucket.get(mono, 0) + c * mult

    def to_lincomb(self) -> "LinComb":
        out: Dict[Word, Coefficient] = {}
        for word, bucket in self.buckets.items():
            clean = {m: c for m, c in bucket.items() if c}
            if clean:
                out[word] = Coefficient._raw(clean)
        return LinComb._raw(out)


class LinComb:
    """Γραμμικός συνδυασμός επαναλαμβανόμενων ολοκληρωμάτων: Word -> Coefficient."""
    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Iterable[int], object]] = None):
        acc = TermAccumulator()
        if terms:
            for word, coef in terms.items():
                acc.add(make_word(word), as_coefficient(coef))
        self.terms: Dict[Word, Coefficient] = acc.to_lincomb().terms

    @classmethod
    def _raw(cls, terms: Dict[Word, Coefficient]) -> "LinComb":
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def zero(cls) -> "LinComb":
        return cls._raw({})

    @classmethod
    def one(cls) -> "LinComb":
        return cls._raw({EMPTY_WORD: ONE})

    @classmethod
    def from_word(cls, word: Iterable[int], coefficient=1) -> "LinComb":
        coef = as_coefficient(coefficient)
        if coef.is_zero():
            return cls.zero()
        return cls._raw({make_word(word): coef})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def words(self) -> List[Word]:
        return sorted(self.terms, key=word_sort_key)

    def items(self) -> List[Tuple[Word, Coefficient]]:
        return [(w, self.terms[w]) for w in self.words()]

    def __iter__(self) -> Iterator[Tuple[Word, Coefficient]]:
        return iter(self.items())

    def coefficient(self, word: Iterable[int]) -> Coefficient:
        return self.terms.get(make_word(word), ZERO)

    def max_word_length(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def __add__(self, other: "LinComb") -> "LinComb":
        out = dict(self.terms)
        for w, c in other.terms.items():
            s = out[w] + c if w in out else c
            if s.is_zero():
                out.pop(w, None)
            else:
                out[w] = s
        return LinComb._raw(out)

    def __neg__(self) -> "LinComb":
        return LinComb._raw({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "LinComb") -> "LinComb":
        return self + (-other)

    def scale(self, factor) -> "LinComb":
        factor = as_coefficient(factor)
        out = {}
        for w, c in self.terms.items():
            p = c * factor
            if not p.is_zero():
                out[w] = p
        return LinComb._raw(out)

    def __mul__(self, other) -> "LinComb":
        if isinstance(other, LinComb):
            return lincomb_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> "LinComb":
        return self.scale(other)

    def __pow__(self, k: int) -> "LinComb":
        return lincomb_pow(self, k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinComb):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(serialize(self))

    def __repr__(self) -> str:
        inner = " + ".join(f"({c.to_text()})*J{list(w)}" for w, c in self.items())
        return f"LinComb({inner or '0'})"


# ------------------------ Shuffle products ------------------------

def shuffle_counts_recursive(a: Word, b: Word) -> Counter:
    """
    Αναδρομικό shuffle (ολοκλήρωση κατά μέρη):
    J^a J^b = ∫ J^a J^{b-} dX^{b_end} + ∫ J^{a-} J^b dX^{a_end}
    """
    a, b = tuple(a), tuple(b)
    if not a:
        return Counter({b: 1})
    if not b:
        return Counter({a: 1})
    out: Counter = Counter()
    last_b, last_a = b[-1], a[-1]
    for w, m in shuffle_counts_recursive(a, b[:-1]).items():
        out[w + (last_b,)] += m
    for w, m in shuffle_counts_recursive(a[:-1], b).items():
        out[w + (last_a,)] += m
    return out


def rewrite_closure(p: int, q: int) -> List[str]:
    """
    Όλα τα μοτίβα θέσεων: ξεκινά από 'a'*p + 'b'*q και αντικαθιστά κάθε 'ab' με 'ba'
    μέχρι να μην υπάρχει νέο μοτίβο ('b'*q + 'a'*p).
    """
    start = "a" * p + "b" * q
    seen = {start}
    patterns = [start]
    frontier = [start]
    while frontier:
        nxt: List[str] = []
        for s in frontier:
            i = s.find("ab")
            while i != -1:
                t = s[:i] + "ba" + s[i + 2:]
                if t not in seen:
                    seen.add(t)
                    patterns.append(t)
                    nxt.append(t)
                i = s.find("ab", i + 1)
        frontier = nxt
    return patterns


@lru_cache(maxsize=1024)
def _cached_patterns(p: int, q: int) -> Tuple[str, ...]:
    return tuple(rewrite_closure(p, q))


def _substitute(pattern: str, a: Word, b: Word) -> Word:
    ia, ib = iter(a), iter(b)
    return tuple(next(ia) if ch == "a" else next(ib) for ch in pattern)


def shuffle_counts_iterative(a: Word, b: Word, cached: bool = True) -> Counter:
    """
    Επαναληπτικό shuffle: μοτίβα από το rewrite closure, αντικατάσταση γραμμάτων,
    και ΑΘΡΟΙΣΗ των διπλοτύπων (ίδιες λέξεις από διαφορετικά μοτίβα).
    """
    a, b = tuple(a), tuple(b)
    patterns = _cached_patterns(len(a), len(b)) if cached else rewrite_closure(len(a), len(b))
    return Counter(_substitute(pt, a, b) for pt in patterns)


def _counts_to_lincomb(counts: Mapping[Word, int]) -> LinComb:
    return LinComb._raw({w: Coefficient.constant(m) for w, m in counts.items() if m})


def shuffle_recursive(a: Iterable[int], b: Iterable[int]) -> LinComb:
    return _counts_to_lincomb(shuffle_counts_recursive(make_word(a), make_word(b)))


def shuffle_iterative(a: Iterable[int], b: Iterable[int]) -> LinComb:
    return _counts_to_lincomb(shuffle_counts_iterative(make_word(a), make_word(b)))


@lru_cache(maxsize=SHUFFLE_CACHE_SIZE)
def _shuffle_table(a: Word, b: Word) -> Tuple[Tuple[Word, int], ...]:
    return tuple(shuffle_counts_iterative(a, b).items())


def shuffle_items(a: Word, b: Word) -> Tuple[Tuple[Word, int], ...]:
    """Cached shuffle (συμμετρικό κλειδί) για τις πράξεις των LinComb."""
    if not a:
        return ((b, 1),)
    if not b:
        return ((a, 1),)
    return _shuffle_table(a, b) if a <= b else _shuffle_table(b, a)


def _fits(length: int, max_length: MaxLength) -> bool:
    return max_length is None or length <= max_length


Term = Tuple[Word, Coefficient, int]   # (λέξη, συντελεστής, ακέραια πολλαπλότητα)


def iter_lincomb_terms(x: LinComb) -> Iterator[Term]:
    for w, c in x.terms.items():
        yield w, c, 1


def iter_mul_terms(xs: Iterable[Term], y: LinComb, max_length: MaxLength = UNBOUNDED
                   ) -> Iterator[Term]:
    """Όροι του x ⊔ y χωρίς άθροιση· το x έρχεται ως ροή όρων (ίδιες λέξεις επαναλαμβάνονται)."""
    ys = list(y.terms.items())
    for wa, ca, ma in xs:
        for wb, cb in ys:
            if not _fits(len(wa) + len(wb), max_length):
                continue
            prod = ca * cb
            if prod.is_zero():
                continue
            for w, m in shuffle_items(wa, wb):
                yield w, prod, ma * m


def iter_ncp_terms(xs: Iterable[Term], y: LinComb, max_length: MaxLength = UNBOUNDED
                   ) -> Iterator[Term]:
    """Όροι του x ▷ y χωρίς άθροιση (γραμμικό ως προς το x, που έρχεται ως ροή)."""
    ys = [(wb[:-1], wb[-1], cb) for wb, cb in y.terms.items() if wb]
    for wa, ca, ma in xs:
        for head, last, cb in ys:
            if not _fits(len(wa) + len(head) + 1, max_length):
                continue
            prod = ca * cb
            if prod.is_zero():
                continue
            for w, m in shuffle_items(wa, head):
                yield w + (last,), prod, ma * m


def accumulate_terms(terms: Iterable[Term]) -> LinComb:
    acc = TermAccumulator()
    for w, c, m in terms:
        acc.add(w, c, m)
    return acc.to_lincomb()


def lincomb_mul(x: LinComb, y: LinComb, max_length: MaxLength = UNBOUNDED) -> LinComb:
    """Shuffle γινόμενο, διγραμμικά· όροι μήκους > max_length δεν δημιουργούνται."""
    if not x.terms or not y.terms:
        return LinComb.zero()
    return accumulate_terms(iter_mul_terms(iter_lincomb_terms(x), y, max_length))


def lincomb_pow(x: LinComb, k: int, max_length: MaxLength = UNBOUNDED) -> LinComb:
    """k-πλό shuffle γινόμενο (left fold)· k = 0 δίνει 1·J^()."""
    if k < 0:
        raise ValueError("Ο εκθέτης πρέπει να είναι μη αρνητικός")
    out = LinComb.one()
    for _ in range(k):
        out = lincomb_mul(out, x, max_length)
    return out


def append_letter(x: LinComb, letter: Letter, max_length: MaxLength = UNBOUNDED) -> LinComb:
    """Ολοκλήρωση κάθε όρου ως προς τον driver `letter` (x ▷ J^(letter))."""
    return LinComb._raw({
        w + (letter,): c for w, c in x.terms.items() if _fits(len(w) + 1, max_length)
    })


def ncp(x: LinComb, y: LinComb, max_length: MaxLength = UNBOUNDED) -> LinComb:
    """
    Dendriform γινόμενο ▷: J^a ▷ J^b = append(shuffle(a, b-), b_end), |b| >= 1.
    J^a ▷ J^() = 0 (ολοκλήρωση ως προς σταθερά).
    """
    return accumulate_terms(iter_ncp_terms(iter_lincomb_terms(x), y, max_length))


def truncate(x: LinComb, max_length: MaxLength) -> LinComb:
    if max_length is None:
        return x
    return LinComb._raw({w: c for w, c in x.terms.items() if len(w) <= max_length})


# ------------------------ Text: coefficients ------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+)|(?P<sym>[a-z][a-z0-9]*)|(?P<op>[-+*/^()]))")


class _CoefficientParser:
    """Recursive descent: expr := term (('+'|'-') term)* ; term := unary ('*' unary)* ..."""

    def __init__(self, text: str, line: int, column: int):
        self.text = text
        self.line = line
        self.base_column = column
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"μη αναμενόμενος χαρακτήρας '{text[bad]}'", line, column + bad)
            kind = m.lastgroup
            value = m.group(kind)
            self.tokens.append((kind, value, column + m.start(kind)))
            pos = m.end()
        self.i = 0

    def _peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _error(self, message: str) -> ParseError:
        tok = self._peek()
        col = tok[2] if tok else self.base_column + len(self.text.rstrip())
        return ParseError(message, self.line, col)

    def _take(self, kind: str, value: Optional[str] = None):
        tok = self._peek()
        if tok is None or tok[0] != kind or (value is not None and tok[1] != value):
            raise self._error(f"αναμενόταν '{value or kind}'")
        self.i += 1
        return tok

    def parse(self) -> Coefficient:
        if not self.tokens:
            raise self._error("κενή έκφραση συντελεστή")
        out = self._expr()
        if self._peek() is not None:
            raise self._error(f"περιττό σύμβολο '{self._peek()[1]}'")
        return out

    def _expr(self) -> Coefficient:
        out = self._term()
        while (tok := self._peek()) is not None and tok[0] == "op" and tok[1] in "+-":
            self.i += 1
            rhs = self._term()
            out = out + rhs if tok[1] == "+" else out - rhs
        return out

    def _term(self) -> Coefficient:
        out = self._unary()
        while (tok := self._peek()) is not None and tok[0] == "op" and tok[1] == "*":
            self.i += 1
            out = out * self._unary()
        return out

    def _unary(self) -> Coefficient:
        tok = self._peek()
        if tok is not None and tok[0] == "op" and tok[1] in "+-":
            self.i += 1
            inner = self._unary()
            return -inner if tok[1] == "-" else inner
        return self._power()

    def _power(self) -> Coefficient:
        base = self._atom()
        tok = self._peek()
        if tok is not None and tok[0] == "op" and tok[1] == "^":
            self.i += 1
            exp = self._take("num")
            return base ** int(exp[1])
        return base

    def _atom(self) -> Coefficient:
        tok = self._peek()
        if tok is None:
            raise self._error("απρόσμενο τέλος έκφρασης")
        kind, value, _ = tok
        if kind == "num":
            self.i += 1
            nxt = self._peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "/":
                self.i += 1
                den = self._take("num")
                if int(den[1]) == 0:
                    raise ParseError("διαίρεση με μηδέν", self.line, den[2])
                return Coefficient.constant(Fraction(int(value), int(den[1])))
            return Coefficient.constant(int(value))
        if kind == "sym":
            self.i += 1
            return Coefficient.symbol(value)
        if value == "(":
            self.i += 1
            inner = self._expr()
            self._take("op", ")")
            return inner
        raise self._error(f"μη αναμενόμενο σύμβολο '{value}'")


def parse_coefficient(text: str, line: int = 1, column: int = 1) -> Coefficient:
    return _CoefficientParser(text, line, column).parse()


# ------------------------ Text: expansion lines ------------------------

def serialize_word(w: Word) -> str:
    return ",".join(str(l) for l in w)


def parse_word(text: str, line: int = 1, column: int = 1) -> Word:
    body = text.strip()
    if not body:
        return EMPTY_WORD
    letters: List[int] = []
    offset = text.index(body[0])
    for part in body.split(","):
        token = part.strip()
        if not token.isdigit():
            raise ParseError(f"μη έγκυρο γράμμα '{token}' σε λέξη", line, column + offset)
        letters.append(int(token))
        offset += len(part) + 1
    return tuple(letters)


def serialize_term(word: Word, coef: Coefficient) -> str:
    return f"{coef.to_text()} ; {serialize_word(word)}"


def serialize(x: LinComb) -> str:
    """Κανονικό κείμενο: όροι κατά (μήκος, λεξικογραφικά), μία γραμμή ο καθένας."""
    return "".join(serialize_term(w, c) + "\n" for w, c in x.items())


def parse_term(raw: str, line: int = 1) -> Tuple[Word, Coefficient]:
    text = raw.rstrip("\n")
    sep = text.rfind(";")
    if sep == -1:
        raise ParseError("λείπει το ';' ανάμεσα σε συντελεστή και λέξη", line, len(text) + 1)
    coef = parse_coefficient(text[:sep], line, 1)
    word = parse_word(text[sep + 1:], line, sep + 2)
    return word, coef


def iter_terms(lines: Iterable[str]) -> Iterator[Tuple[Word, Coefficient]]:
    """Streaming ανάγνωση γραμμών ανάπτυξης (κενές γραμμές αγνοούνται)."""
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        yield parse_term(raw, lineno)


def parse(text: str) -> LinComb:
    acc = TermAccumulator()
    for word, coef in iter_terms(text.splitlines()):
        acc.add(word, coef)
    return acc.to_lincomb()


def term_count_identity(a: Word, b: Word) -> int:
    """Συνολική μάζα συντελεστών του shuffle: C(|a|+|b|, |a|)."""
    return comb(len(a) + len(b), len(a))


ShuffleFn = Callable[[Word, Word], Counter]
SHUFFLE_ALGORITHMS: Dict[str, ShuffleFn] = {
    "recursive": shuffle_counts_recursive,
    "iterative": shuffle_counts_iterative,
}
