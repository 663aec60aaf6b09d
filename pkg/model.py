# -*- coding: utf-8 -*-
"""
model.py

Μοντέλο SDE (Stratonovich) με πολυωνυμικά vector fields:
    dY = Σ_i f_i(Y) ∘ dX^i,   Y(0) = y0
- StatePolynomial: πολυώνυμο στο Y με συμβολικούς συντελεστές
- taylor_recenter: επανακέντρωση γύρω από το y0 (ακριβώς, χωρίς floats)
- build_q_table: πίνακας Q_k = Σ_i g_{k,i} J^(i)
- ito_to_stratonovich: διόρθωση drift για μοντέλα Itô
- load_run_config: JSON αρχείο ρυθμίσεων -> RunConfig
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from algebra import (
    ZERO,
    Coefficient,
    LinComb,
    ParseError,
    UnboundSymbolError,
    as_coefficient,
    parse_coefficient,
)

__all__ = [
    "ConfigError", "UnboundSymbolError", "StatePolynomial", "Model", "QTable",
    "RunConfig", "taylor_recenter", "build_q_table", "ito_to_stratonovich",
    "load_run_config", "parse_run_config",
]

# ---------------------------------------------------------------------
# Σταθερές ρυθμίσεων
# ---------------------------------------------------------------------
DEFAULT_WORKERS = 1
DEFAULT_MEMORY_TERM_CAP = 1_000_000
DEFAULT_MERGE_CHUNK_LINES = 200_000
CALCULI = ("stratonovich", "ito")
UNBOUNDED_TEXT = "unbounded"

REQUIRED_KEYS = ("drivers", "f", "y0", "picard_iterations")


class ConfigError(ValueError):
    """Μη έγκυρο αρχείο ρυθμίσεων (το `key` δείχνει το πεδίο που φταίει)."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"[{key}] {message}" if key else message)


# ---------------------------------------------------------------------
# Πολυώνυμα κατάστασης
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class StatePolynomial:
    """P(Y) = Σ_j coeffs[j] * Y^j, με coeffs[j] ακριβείς συντελεστές."""
    coeffs: Tuple[Coefficient, ...] = ()

    def __post_init__(self):
        cs = [as_coefficient(c) for c in self.coeffs]
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_values(cls, values: Iterable[object]) -> "StatePolynomial":
        return cls(tuple(as_coefficient(v) for v in values))

    @property
    def degree(self) -> int:
        return max(len(self.coeffs) - 1, 0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, j: int) -> Coefficient:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else ZERO

    def derivative(self) -> "StatePolynomial":
        return StatePolynomial(tuple(c * j for j, c in enumerate(self.coeffs) if j > 0))

    def evaluate(self, y) -> Coefficient:
        """Horner στο y (αριθμός ή Coefficient)."""
        y = as_coefficient(y)
        out = ZERO
        for c in reversed(self.coeffs):
            out = out * y + c
        return out

    def __add__(self, other: "StatePolynomial") -> "StatePolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return StatePolynomial(tuple(self.coefficient(j) + other.coefficient(j) for j in range(n)))

    def __sub__(self, other: "StatePolynomial") -> "StatePolynomial":
        return self + other.scale(-1)

    def __mul__(self, other: "StatePolynomial") -> "StatePolynomial":
        if self.is_zero() or other.is_zero():
            return StatePolynomial()
        out = [ZERO] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return StatePolynomial(tuple(out))

    def scale(self, factor) -> "StatePolynomial":
        factor = as_coefficient(factor)
        return StatePolynomial(tuple(c * factor for c in self.coeffs))

    def to_text(self) -> str:
        parts = []
        for j, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            y = "" if j == 0 else ("y" if j == 1 else f"y^{j}")
            parts.append(f"({c.to_text()})" + (f"*{y}" if y else ""))
        return " + ".join(parts) or "0"


def taylor_recenter(P: StatePolynomial, y0) -> Tuple[Coefficient, ...]:
    """
    g_k = (1/k!) ∂^k P(y0) = Σ_{j>=k} C(j,k) p_j y0^(j-k),  k = 0..deg P.

    Returns:
        tuple μήκους deg(P)+1 (για P = 0: (0,))
    """
    y0 = as_coefficient(y0)
    out: List[Coefficient] = []
    d = P
    for k in range(P.degree + 1):
        out.append(d.evaluate(y0).scale(Fraction(1, factorial(k))))
        d = d.derivative()
    return tuple(out)


def ito_to_stratonovich(mu: StatePolynomial, sigma: StatePolynomial) -> StatePolynomial:
    """μ_strat = μ - ½ σ'σ (ένας driver θορύβου)."""
    return mu - (sigma.derivative() * sigma).scale(Fraction(1, 2))


# ---------------------------------------------------------------------
# Μοντέλο & πίνακας Q
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class Model:
    """
    n_drivers vector fields· ο driver i αντιστοιχεί στο γράμμα first_letter + i.
    time_driver: το γράμμα του χρόνου (ή None).
    """
    n_drivers: int
    f: Tuple[StatePolynomial, ...]
    y0: Coefficient = ZERO
    time_driver: Optional[int] = None
    first_letter: int = 0

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "y0", as_coefficient(self.y0))
        if self.n_drivers < 1:
            raise ConfigError("Χρειάζεται τουλάχιστον ένας driver", "drivers")
        if len(self.f) != self.n_drivers:
            raise ConfigError(
                f"{len(self.f)} vector fields για {self.n_drivers} drivers", "f")
        if self.first_letter < 0:
            raise ConfigError("Το πρώτο γράμμα πρέπει να είναι >= 0", "first_letter")
        if self.time_driver is not None and self.time_driver not in self.letters:
            raise ConfigError(
                f"Ο driver χρόνου {self.time_driver} δεν είναι ανάμεσα στα {self.letters}",
                "time_driver")

    @property
    def letters(self) -> Tuple[int, ...]:
        return tuple(self.first_letter + i for i in range(self.n_drivers))

    def letter(self, i: int) -> int:
        return self.first_letter + i

    @property
    def q(self) -> int:
        """Μέγιστος βαθμός των vector fields."""
        return max(p.degree for p in self.f)

    def recentered(self) -> List[Tuple[Coefficient, ...]]:
        """g_{k,i} για κάθε driver, συμπληρωμένα με μηδενικά μέχρι k = q."""
        q = self.q
        out = []
        for p in self.f:
            g = list(taylor_recenter(p, self.y0))
            g += [ZERO] * (q + 1 - len(g))
            out.append(tuple(g))
        return out

    def symbols(self) -> Tuple[str, ...]:
        names = set(self.y0.symbols())
        for p in self.f:
            for c in p.coeffs:
                names.update(c.symbols())
        return tuple(sorted(names))


@dataclass(frozen=True)
class QTable:
    """k -> Q_k, γραμμικός συνδυασμός λέξεων μήκους 1."""
    q_of: Mapping[int, LinComb]

    def __post_init__(self):
        for k, lc in self.q_of.items():
            if k < 0:
                raise ValueError(f"Αρνητικός δείκτης Q{k}")
            for w in lc.terms:
                if len(w) != 1:
                    raise ValueError(f"Το Q{k} περιέχει λέξη μήκους {len(w)}: {w}")

    def __getitem__(self, k: int) -> LinComb:
        return self.q_of[k]

    def __contains__(self, k: int) -> bool:
        return k in self.q_of

    def to_text(self) -> str:
        lines = []
        for k in sorted(self.q_of):
            lc = self.q_of[k]
            body = " + ".join(f"({c.to_text()})*J{list(w)}" for w, c in lc.items()) or "0"
            lines.append(f"Q{k} = {body}")
        return "\n".join(lines)


def build_q_table(model: Model) -> QTable:
    g = model.recentered()
    table: Dict[int, LinComb] = {}
    for k in range(model.q + 1):
        table[k] = LinComb({(model.letter(i),): g_i[k] for i, g_i in enumerate(g)})
    return QTable(table)


# ---------------------------------------------------------------------
# Ρυθμίσεις εκτέλεσης (JSON)
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class RunConfig:
    model: Model
    picard_iterations: int
    max_word_length: Optional[int]
    workers: int = DEFAULT_WORKERS
    workdir: Path = Path("work")
    output: Path = Path("expansion.txt")
    calculus: str = "stratonovich"
    bindings: Dict[str, float] = field(default_factory=dict)
    memory_term_cap: int = DEFAULT_MEMORY_TERM_CAP
    keep_intermediate: bool = False
    merge_chunk_lines: int = DEFAULT_MERGE_CHUNK_LINES


def _coefficient_field(value, key: str) -> Coefficient:
    if isinstance(value, bool):
        raise ConfigError(f"Μη έγκυρος συντελεστής: {value!r}", key)
    if isinstance(value, int):
        return Coefficient.constant(value)
    if isinstance(value, str):
        try:
            return parse_coefficient(value)
        except ParseError as exc:
            raise ConfigError(f"Μη έγκυρος συντελεστής '{value}': {exc}", key) from exc
    raise ConfigError(f"Ο συντελεστής πρέπει να είναι ακέραιος ή κείμενο, όχι {value!r}", key)


def _positive_int(doc: Mapping, key: str, default=None, allow_none: bool = False):
    value = doc.get(key, default)
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"Αναμενόταν θετικός ακέραιος, βρέθηκε {value!r}", key)
    return value


def _max_word_length(value) -> Optional[int]:
    if value is None or value == UNBOUNDED_TEXT:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"Αναμενόταν θετικός ακέραιος ή \"{UNBOUNDED_TEXT}\", βρέθηκε {value!r}",
                          "max_word_length")
    return value


def parse_run_config(doc: Mapping, base_dir: Path = Path(".")) -> RunConfig:
    missing = [k for k in REQUIRED_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"Λείπουν πεδία: {missing}", missing[0])

    n = _positive_int(doc, "drivers")
    raw_fields = doc["f"]
    if not isinstance(raw_fields, Sequence) or isinstance(raw_fields, str):
        raise ConfigError("Αναμενόταν λίστα από λίστες συντελεστών", "f")
    polys = []
    for i, coeffs in enumerate(raw_fields):
        if not isinstance(coeffs, Sequence) or isinstance(coeffs, str):
            raise ConfigError(f"Το vector field {i} δεν είναι λίστα", "f")
        polys.append(StatePolynomial(tuple(
            _coefficient_field(c, f"f[{i}][{j}]") for j, c in enumerate(coeffs))))

    calculus = doc.get("calculus", "stratonovich")
    if calculus not in CALCULI:
        raise ConfigError(f"Άγνωστος λογισμός '{calculus}' (επιτρέπονται {CALCULI})", "calculus")

    time_driver = doc.get("time_driver")
    first_letter = doc.get("first_letter", 0)
    if time_driver is not None and (isinstance(time_driver, bool) or not isinstance(time_driver, int)):
        raise ConfigError(f"Μη έγκυρος driver χρόνου: {time_driver!r}", "time_driver")
    if isinstance(first_letter, bool) or not isinstance(first_letter, int):
        raise ConfigError(f"Μη έγκυρο πρώτο γράμμα: {first_letter!r}", "first_letter")

    if calculus == "ito":
        if time_driver is None:
            raise ConfigError("Το μοντέλο Itô χρειάζεται driver χρόνου", "time_driver")
        t_idx = time_driver - first_letter
        if not 0 <= t_idx < len(polys):
            raise ConfigError(f"Ο driver χρόνου {time_driver} εκτός ορίων", "time_driver")
        drift = polys[t_idx]
        for i, sigma in enumerate(polys):
            if i != t_idx:
                drift = ito_to_stratonovich(drift, sigma)
        polys[t_idx] = drift

    model = Model(
        n_drivers=n,
        f=tuple(polys),
        y0=_coefficient_field(doc["y0"], "y0"),
        time_driver=time_driver,
        first_letter=first_letter,
    )

    bindings_doc = doc.get("bindings", {}) or {}
    if not isinstance(bindings_doc, Mapping):
        raise ConfigError("Τα bindings πρέπει να είναι αντικείμενο", "bindings")
    bindings: Dict[str, float] = {}
    for name, value in bindings_doc.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Μη αριθμητική τιμή για '{name}': {value!r}", "bindings")
        bindings[str(name)] = float(value)

    keep = doc.get("keep_intermediate", False)
    if not isinstance(keep, bool):
        raise ConfigError("Αναμενόταν true/false", "keep_intermediate")

    return RunConfig(
        model=model,
        picard_iterations=_positive_int(doc, "picard_iterations"),
        max_word_length=_max_word_length(doc.get("max_word_length", UNBOUNDED_TEXT)),
        workers=_positive_int(doc, "workers", DEFAULT_WORKERS),
        workdir=base_dir / str(doc.get("workdir", "work")),
        output=base_dir / str(doc.get("output", "expansion.txt")),
        calculus=calculus,
        bindings=bindings,
        memory_term_cap=_positive_int(doc, "memory_term_cap", DEFAULT_MEMORY_TERM_CAP),
        keep_intermediate=keep,
        merge_chunk_lines=_positive_int(doc, "merge_chunk_lines", DEFAULT_MERGE_CHUNK_LINES),
    )


def load_run_config(path) -> RunConfig:
    """
    Φόρτωση JSON ρυθμίσεων. Σχετικά paths (workdir/output) λύνονται ως προς
    τον τρέχοντα κατάλογο, όχι τον κατάλογο του αρχείου.
    """
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Δεν βρέθηκε το αρχείο ρυθμίσεων: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Μη έγκυρο JSON ({exc.msg}, γραμμή {exc.lineno})") from exc
    if not isinstance(doc, Mapping):
        raise ConfigError("Το αρχείο ρυθμίσεων πρέπει να είναι JSON αντικείμενο")
    return parse_run_config(doc)
