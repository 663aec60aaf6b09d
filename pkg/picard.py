# -*- coding: utf-8 -*-
"""
picard.py

Picard iteration σε δύο μορφές:
- picard_direct: πλήρης ανάπτυξη στη μνήμη (oracle για μικρά R)
- picard_q: συμπαγής μορφή με placeholders Q_k και ▷ (ανεξάρτητη του μοντέλου)
- qexpr_eval_in_memory: αποτίμηση της συμπαγούς μορφής με έναν QTable
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Dict, Optional

from algebra import (
    LinComb,
    MaxLength,
    UNBOUNDED,
    append_letter,
    lincomb_mul,
    ncp,
    truncate,
)
from expr_tree import (
    JAtom,
    Ncp,
    Node,
    One,
    Pow,
    Prod,
    QAtom,
    Sum,
    parse_sexpr,
    to_sexpr,
)
from model import Model, QTable

logger = logging.getLogger(__name__)

QExpr = Node
TermObserver = Callable[[int], None]


def picard_q(R: int, q: int) -> QExpr:
    """
    Y(1) = Q0,  Y(r+1) = Q0 + Σ_{k=1..q} Y(r)^k ▷ Qk.

    Το Y(r) μοιράζεται ως υποδέντρο (DAG), όχι αντίγραφο.
    """
    if R < 1:
        raise ValueError(f"Το R πρέπει να είναι >= 1 (δόθηκε {R})")
    if q < 0:
        raise ValueError(f"Το q πρέπει να είναι >= 0 (δόθηκε {q})")
    y: QExpr = QAtom(0)
    for _ in range(R - 1):
        terms = [QAtom(0)]
        for k in range(1, q + 1):
            base = y if k == 1 else Pow(y, k)
            terms.append(Ncp(base, QAtom(k)))
        y = terms[0] if len(terms) == 1 else Sum(tuple(terms))
    return y


def picard_direct(model: Model, R: int, L: MaxLength = UNBOUNDED) -> LinComb:
    """
    Y(0) = 0,  Y(r+1) = Σ_i ∫ Σ_k g_{k,i} Y(r)^k dX^i, με περικοπή σε κάθε βήμα.
    """
    g = model.recentered()
    y = LinComb.zero()
    for r in range(R):
        powers = [LinComb.one()]
        for _ in range(model.q):
            powers.append(lincomb_mul(powers[-1], y, L))
        nxt = LinComb.zero()
        for i, g_i in enumerate(g):
            integrand = LinComb.zero()
            for k, g_ki in enumerate(g_i):
                if not g_ki.is_zero():
                    integrand = integrand + powers[k].scale(g_ki)
            nxt = nxt + append_letter(integrand, model.letter(i), L)
        y = nxt
        logger.debug("Picard r=%d: %d όροι", r + 1, len(y))
    return y


def evaluate_expr(
    node: Node,
    atom_value: Callable[[Node], LinComb],
    L: MaxLength = UNBOUNDED,
    observe: Optional[TermObserver] = None,
    memo: Optional[Dict[int, LinComb]] = None,
    held: int = 0,
) -> LinComb:
    """
    Αποτίμηση bottom-up: Prod -> lincomb_mul, Pow -> επαναλαμβανόμενο γινόμενο,
    Ncp -> ▷, με περικοπή σε κάθε κόμβο.

    observe(n) λαμβάνει το πλήθος όρων που ζουν ταυτόχρονα (held = όροι
    που κρατούν οι πρόγονοι).
    """
    if memo is not None and id(node) in memo:
        return memo[id(node)]

    def seen(n: int) -> None:
        if observe is not None:
            observe(held + n)

    def sub(child: Node, extra: int) -> LinComb:
        return evaluate_expr(child, atom_value, L, observe, memo, held + extra)

    if isinstance(node, One):
        out = LinComb.one()
    elif isinstance(node, (QAtom, JAtom)):
        out = truncate(atom_value(node), L)
    elif isinstance(node, Sum):
        out = LinComb.zero()
        for child in node.children:
            part = sub(child, len(out))
            out = out + part
            seen(len(out) + len(part))
    elif isinstance(node, Prod):
        out = sub(node.children[0], 0)
        for child in node.children[1:]:
            part = sub(child, len(out))
            prod = lincomb_mul(out, part, L)
            seen(len(out) + len(part) + len(prod))
            out = prod
    elif isinstance(node, Pow):
        base = sub(node.base, 0)
        out = LinComb.one()
        for _ in range(node.exponent):
            prod = lincomb_mul(out, base, L)
            seen(len(out) + len(base) + len(prod))
            out = prod
    elif isinstance(node, Ncp):
        left = sub(node.left, 0)
        right = sub(node.right, len(left))
        out = ncp(left, right, L)
        seen(len(left) + len(right) + len(out))
    else:
        raise TypeError(f"Άγνωστος κόμβος: {node!r}")

    seen(len(out))
    if memo is not None:
        memo[id(node)] = out
    return out


def qexpr_eval_in_memory(e: QExpr, qt: QTable, L: MaxLength = UNBOUNDED) -> LinComb:
    def q_value(atom: Node) -> LinComb:
        if not isinstance(atom, QAtom):
            raise ValueError(f"Μη αναμενόμενο άτομο σε Q-έκφραση: {to_sexpr(atom)}")
        if atom.k not in qt:
            raise KeyError(f"Λείπει το Q{atom.k} από τον πίνακα")
        return qt[atom.k]

    return evaluate_expr(e, q_value, L, memo={})


def save_qexpr(e: QExpr, path) -> Path:
    """Μία έκφραση ανά αρχείο (επαναχρησιμοποιείται για κάθε μοντέλο ίδιου q)."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(to_sexpr(e) + "\n", encoding="utf-8", newline="\n")
    return out


def load_qexpr(path) -> QExpr:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) != 1:
        raise ValueError(f"Αναμενόταν μία έκφραση στο {path}, βρέθηκαν {len(lines)}")
    return parse_sexpr(lines[0])
