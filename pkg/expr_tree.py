# -*- coding: utf-8 -*-
"""
expr_tree.py

Δέντρα εκφράσεων για τη συμπαγή μορφή (Q) και τις J-εκφράσεις του pipeline.

Κόμβοι: QAtom(k), JAtom(word, scalar), One, Sum, Prod, Pow, Ncp (▷).
Κείμενο (prefix s-expression):
    Q<k>   1   c*J[l1,l2,…]   (+ e1 e2 …)   (* e1 e2 …)   (^ e k)   (> e1 e2)
Εγγραφή εργασίας (μία ανά γραμμή): "<coefficient> ; <expression>".
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Tuple, Union

from algebra import (
    ONE,
    Coefficient,
    ParseError,
    Word,
    as_coefficient,
    parse_coefficient,
    parse_word,
    serialize_word,
)


class ExprParseError(ParseError):
    """Συντακτικό σφάλμα σε s-expression."""


@dataclass(frozen=True)
class QAtom:
    k: int


@dataclass(frozen=True)
class JAtom:
    word: Word
    scalar: Coefficient = ONE

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))
        scalar = as_coefficient(self.scalar)
        if len(scalar) > 1:
            raise ValueError(f"Ο συντελεστής ατόμου πρέπει να είναι μονώνυμο: {scalar.to_text()}")
        object.__setattr__(self, "scalar", scalar)


@dataclass(frozen=True)
class One:
    pass


@dataclass(frozen=True)
class Sum:
    children: Tuple["Node", ...]


@dataclass(frozen=True)
class Prod:
    children: Tuple["Node", ...]


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Ncp:
    left: "Node"
    right: "Node"


Node = Union[QAtom, JAtom, One, Sum, Prod, Pow, Ncp]
Path = Tuple[int, ...]

ONE_NODE = One()


# ---------------------------------------------------------------------
# Κείμενο
# ---------------------------------------------------------------------
def to_sexpr(node: Node) -> str:
    if isinstance(node, QAtom):
        return f"Q{node.k}"
    if isinstance(node, One):
        return "1"
    if isinstance(node, JAtom):
        atom = f"J[{serialize_word(node.word)}]"
        if node.scalar == 1:
            return atom
        return f"{node.scalar.to_text()}*{atom}"
    if isinstance(node, Sum):
        return "(+ " + " ".join(to_sexpr(c) for c in node.children) + ")"
    if isinstance(node, Prod):
        return "(* " + " ".join(to_sexpr(c) for c in node.children) + ")"
    if isinstance(node, Pow):
        return f"(^ {to_sexpr(node.base)} {node.exponent})"
    if isinstance(node, Ncp):
        return f"(> {to_sexpr(node.left)} {to_sexpr(node.right)})"
    raise TypeError(f"Άγνωστος κόμβος: {node!r}")


_SEXPR_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_Q_ATOM = re.compile(r"Q(\d+)")
_J_ATOM = re.compile(r"(?:(?P<coef>.+)\*)?J\[(?P<word>[0-9,]*)\]")
_OPERATORS = {"+": Sum, "*": Prod, "^": Pow, ">": Ncp}


class _SexprParser:

    def __init__(self, text: str, line: int):
        self.line = line
        self.tokens: List[Tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            m = _SEXPR_TOKEN.match(text, pos)
            if not m:
                break
            self.tokens.append((m.group(1), m.start(1) + 1))
            pos = m.end()
        self.i = 0
        self.end_column = len(text.rstrip()) + 1

    def _error(self, message: str) -> ExprParseError:
        col = self.tokens[self.i][1] if self.i < len(self.tokens) else self.end_column
        return ExprParseError(message, self.line, col)

    def _next(self) -> Tuple[str, int]:
        if self.i >= len(self.tokens):
            raise self._error("απρόσμενο τέλος έκφρασης")
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Node:
        if not self.tokens:
            raise self._error("κενή έκφραση")
        node = self._node()
        if self.i != len(self.tokens):
            raise self._error(f"περιττό σύμβολο '{self.tokens[self.i][0]}'")
        return node

    def _node(self) -> Node:
        tok, col = self._next()
        if tok == "(":
            op, op_col = self._next()
            if op not in _OPERATORS:
                raise ExprParseError(f"άγνωστος τελεστής '{op}'", self.line, op_col)
            if op == "^":
                base = self._node()
                exp_tok, exp_col = self._next()
                if not exp_tok.isdigit() or int(exp_tok) < 1:
                    raise ExprParseError(f"μη έγκυρος εκθέτης '{exp_tok}'", self.line, exp_col)
                self._close()
                return Pow(base, int(exp_tok))
            children = []
            while self.i < len(self.tokens) and self.tokens[self.i][0] != ")":
                children.append(self._node())
            self._close()
            if op == ">":
                if len(children) != 2:
                    raise ExprParseError("ο τελεστής '>' θέλει δύο ορίσματα", self.line, op_col)
                return Ncp(children[0], children[1])
            if len(children) < 2:
                raise ExprParseError(f"ο τελεστής '{op}' θέλει >= 2 ορίσματα", self.line, op_col)
            return _OPERATORS[op](tuple(children))
        if tok == ")":
            raise ExprParseError("απρόσμενο ')'", self.line, col)
        return self._atom(tok, col)

    def _close(self) -> None:
        tok, col = self._next()
        if tok != ")":
            raise ExprParseError(f"αναμενόταν ')' αντί για '{tok}'", self.line, col)

    def _atom(self, tok: str, col: int) -> Node:
        if tok == "1":
            return ONE_NODE
        m = _Q_ATOM.fullmatch(tok)
        if m:
            return QAtom(int(m.group(1)))
        m = _J_ATOM.fullmatch(tok)
        if m:
            scalar = ONE
            if m.group("coef") is not None:
                try:
                    scalar = parse_coefficient(m.group("coef"), self.line, col)
                except ParseError as exc:
                    raise ExprParseError(exc.reason, exc.line, exc.column) from exc
            word = parse_word(m.group("word"), self.line, col)
            try:
                return JAtom(word, scalar)
            except ValueError as exc:
                raise ExprParseError(str(exc), self.line, col) from exc
        raise ExprParseError(f"άγνωστο άτομο '{tok}'", self.line, col)


def parse_sexpr(text: str, line: int = 1) -> Node:
    return _SexprParser(text, line).parse()


# ---------------------------------------------------------------------
# Εγγραφές εργασίας
# ---------------------------------------------------------------------
RECORD_SEPARATOR = " ; "


def format_record(coef: Coefficient, node: Node) -> str:
    return f"{coef.to_text()}{RECORD_SEPARATOR}{to_sexpr(node)}"


def split_record(line: str) -> Tuple[str, str]:
    """(κείμενο συντελεστή, κείμενο έκφρασης)· χωρίς ';' ο συντελεστής είναι 1."""
    text = line.rstrip("\n")
    if ";" not in text:
        return "1", text.strip()
    coef_text, _, expr_text = text.partition(";")
    return coef_text.strip(), expr_text.strip()


def parse_record(line: str, lineno: int = 1) -> Tuple[Coefficient, Node]:
    coef_text, expr_text = split_record(line)
    coef = parse_coefficient(coef_text, lineno, 1)
    return coef, parse_sexpr(expr_text, lineno)


# ---------------------------------------------------------------------
# Κανονικοποίηση
# ---------------------------------------------------------------------
def normalize(node: Node) -> Optional[Node]:
    """
    Απλοποίηση χωρίς αλλαγή τιμής. Επιστρέφει None για μηδέν.
    - Prod: flatten, χωρίς '1', ταξινομημένοι παράγοντες (μεταθετικό γινόμενο)
    - 1 ▷ x = x,  x ▷ 1 = 0
    - Sum με ένα παιδί -> το παιδί,  Pow(e, 1) -> e
    """
    if isinstance(node, (QAtom, JAtom, One)):
        if isinstance(node, JAtom) and node.scalar.is_zero():
            return None
        return node
    if isinstance(node, Sum):
        kids = [c for c in (normalize(c) for c in node.children) if c is not None]
        if not kids:
            return None
        return kids[0] if len(kids) == 1 else Sum(tuple(kids))
    if isinstance(node, Prod):
        factors: List[Node] = []
        for c in node.children:
            c = normalize(c)
            if c is None:
                return None
            if isinstance(c, Prod):
                factors.extend(c.children)
            elif not isinstance(c, One):
                factors.append(c)
        if not factors:
            return ONE_NODE
        if len(factors) == 1:
            return factors[0]
        return Prod(tuple(sorted(factors, key=to_sexpr)))
    if isinstance(node, Pow):
        base = normalize(node.base)
        if base is None:
            return None
        if isinstance(base, One):
            return ONE_NODE
        return base if node.exponent == 1 else Pow(base, node.exponent)
    if isinstance(node, Ncp):
        left, right = normalize(node.left), normalize(node.right)
        if left is None or right is None or isinstance(right, One):
            return None
        if isinstance(left, One):
            return right
        return Ncp(left, right)
    raise TypeError(f"Άγνωστος κόμβος: {node!r}")


def children_of(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, (Sum, Prod)):
        return node.children
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Ncp):
        return (node.left, node.right)
    return ()


def iter_nodes(node: Node) -> Iterator[Node]:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children_of(n)))


def is_monomial(node: Node) -> bool:
    return not any(isinstance(n, (Sum, Pow)) for n in iter_nodes(node))


def find_expandable(node: Node) -> Optional[Path]:
    """
    Path του πιο ρηχού Sum/Pow (σε ισοβαθμία προτιμάται το Sum).
    Οι πρόγονοί του είναι μόνο Prod/Ncp, άρα η επιμεριστικότητα ισχύει.
    """
    level: List[Tuple[Path, Node]] = [((), node)]
    while level:
        first_pow = None
        for path, n in level:
            if isinstance(n, Sum):
                return path
            if isinstance(n, Pow) and first_pow is None:
                first_pow = path
        if first_pow is not None:
            return first_pow
        level = [(path + (i,), c) for path, n in level for i, c in enumerate(children_of(n))]
    return None


def node_at(node: Node, path: Path) -> Node:
    for i in path:
        node = children_of(node)[i]
    return node


def replace_at(node: Node, path: Path, new: Node) -> Node:
    if not path:
        return new
    i, rest = path[0], path[1:]
    if isinstance(node, (Sum, Prod)):
        kids = list(node.children)
        kids[i] = replace_at(kids[i], rest, new)
        return type(node)(tuple(kids))
    if isinstance(node, Pow):
        return Pow(replace_at(node.base, rest, new), node.exponent)
    if isinstance(node, Ncp):
        if i == 0:
            return Ncp(replace_at(node.left, rest, new), node.right)
        return Ncp(node.left, replace_at(node.right, rest, new))
    raise ValueError(f"Μη έγκυρο path {path} σε φύλλο")


def expand_once(node: Node) -> Tuple[bool, List[Node]]:
    """
    Ένα βήμα επέκτασης. (True, [node]) αν είναι ήδη μονώνυμο,
    αλλιώς (False, μερικά αποτελέσματα) για επανένταξη στην ουρά.
    """
    path = find_expandable(node)
    if path is None:
        return True, [node]
    target = node_at(node, path)
    if isinstance(target, Sum):
        return False, [replace_at(node, path, c) for c in target.children]
    return False, [replace_at(node, path, Prod((target.base,) * target.exponent))]


def fold_scalars(node: Node) -> Tuple[Coefficient, Node]:
    """Μεταφέρει τους συντελεστές των J ατόμων έξω (μόνο για μονώνυμα)."""
    scalar = ONE

    def strip(n: Node) -> Node:
        nonlocal scalar
        if isinstance(n, JAtom):
            scalar = scalar * n.scalar
            return JAtom(n.word)
        if isinstance(n, Prod):
            return Prod(tuple(strip(c) for c in n.children))
        if isinstance(n, Ncp):
            return Ncp(strip(n.left), strip(n.right))
        if isinstance(n, (Sum, Pow)):
            raise ValueError("Το fold_scalars εφαρμόζεται μόνο σε μονώνυμα")
        return n

    bare = strip(node)
    return scalar, bare


def substitute_atoms(node: Node, replace: Callable[[Node], Optional[Node]]) -> Optional[Node]:
    """Αντικατάσταση φύλλων· `replace` επιστρέφει None για μηδέν."""
    if isinstance(node, (QAtom, JAtom)):
        return replace(node)
    if isinstance(node, One):
        return node
    if isinstance(node, (Sum, Prod)):
        kids = [substitute_atoms(c, replace) for c in node.children]
        if isinstance(node, Sum):
            kids = [k for k in kids if k is not None]
            if not kids:
                return None
        elif any(k is None for k in kids):
            return None
        return type(node)(tuple(kids)) if len(kids) > 1 else kids[0]
    if isinstance(node, Pow):
        base = substitute_atoms(node.base, replace)
        return None if base is None else Pow(base, node.exponent)
    if isinstance(node, Ncp):
        left = substitute_atoms(node.left, replace)
        right = substitute_atoms(node.right, replace)
        if left is None or right is None:
            return None
        return Ncp(left, right)
    raise TypeError(f"Άγνωστος κόμβος: {node!r}")


def q_indices(node: Node) -> List[int]:
    return sorted({n.k for n in iter_nodes(node) if isinstance(n, QAtom)})
