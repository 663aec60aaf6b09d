# -*- coding: utf-8 -*-
"""
mc_oracle.py

Αριθμητικό oracle (float μόνο εδώ· η άλγεβρα μένει ακριβής):
- DriverPaths: χρόνος + ανεξάρτητες κινήσεις Brown σε ομοιόμορφο πλέγμα
- iterated_integral_numeric: J^α σε κάθε διαδρομή (midpoint/τραπέζιο, Stratonovich)
- mc_expect_word: Monte-Carlo εκτίμηση E J^α με τυπικό σφάλμα
- stratonovich_solve: Heun predictor-corrector στις ίδιες διαδρομές
- evaluate_expansion_numeric: αριθμητική τιμή μιας ανάπτυξης ανά διαδρομή

Κάθε δείγμα παίρνει δικό του RNG από (seed, δείκτης δείγματος), άρα τα αποτελέσματα
δεν εξαρτώνται από το μέγεθος των batches.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from math import factorial, sqrt
from pathlib import Path
from typing import Iterable, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from algebra import LinComb, UnboundSymbolError, Word, iter_terms
from model import Model

logger = logging.getLogger(__name__)

DEFAULT_STEPS = 2 ** 10
DEFAULT_SAMPLES = 10_000
DEFAULT_BATCH = 1_000
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class DriverPaths:
    """
    increments[l]: πίνακας (samples, steps) με τις αυξήσεις του driver l.
    Ο driver χρόνου δεν αποθηκεύεται (αύξηση dt παντού).
    """
    T: float
    steps: int
    seed: int
    time_letter: Optional[int]
    increments: Mapping[int, np.ndarray]
    samples: int

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def letters(self) -> Tuple[int, ...]:
        extra = () if self.time_letter is None else (self.time_letter,)
        return tuple(sorted(set(self.increments) | set(extra)))

    def increment(self, letter: int) -> np.ndarray:
        if letter == self.time_letter:
            return np.full((self.samples, self.steps), self.dt)
        if letter not in self.increments:
            raise KeyError(f"Ο driver {letter} δεν υπάρχει στις διαδρομές {self.letters}")
        return self.increments[letter]

    def values(self, letter: int) -> np.ndarray:
        """Διαδρομή X^l (samples, steps+1), X_0 = 0."""
        inc = self.increment(letter)
        return np.concatenate([np.zeros((self.samples, 1)), np.cumsum(inc, axis=1)], axis=1)

    def coarsen(self, factor: int) -> "DriverPaths":
        """Ίδιες διαδρομές σε πλέγμα `factor` φορές αραιότερο."""
        if factor < 1 or self.steps % factor:
            raise ValueError(f"Το {factor} δεν διαιρεί τα {self.steps} βήματα")
        steps = self.steps // factor
        incs = {l: a.reshape(self.samples, steps, factor).sum(axis=2)
                for l, a in self.increments.items()}
        return DriverPaths(self.T, steps, self.seed, self.time_letter, incs, self.samples)


def simulate_paths(T: float, steps: int, samples: int, seed: int,
                   letters: Iterable[int], time_letter: Optional[int] = 0,
                   start_index: int = 0) -> DriverPaths:
    """
    Brownian αυξήσεις N(0, dt) για κάθε μη-χρονικό γράμμα (σε αύξουσα σειρά).
    Το δείγμα i χρησιμοποιεί np.random.default_rng([seed, start_index + i]).
    """
    if T <= 0 or steps < 1 or samples < 1:
        raise ValueError("Απαιτούνται T > 0, steps >= 1, samples >= 1")
    noise = sorted({int(l) for l in letters} - {time_letter})
    dt = T / steps
    data = np.empty((len(noise), samples, steps))
    for i in range(samples):
        rng = np.random.default_rng([seed, start_index + i])
        data[:, i, :] = rng.standard_normal((len(noise), steps)) * sqrt(dt)
    incs = {l: data[j] for j, l in enumerate(noise)}
    return DriverPaths(float(T), steps, seed, time_letter, incs, samples)


def _integrate(prev: np.ndarray, dx: np.ndarray) -> np.ndarray:
    mid = 0.5 * (prev[:, :-1] + prev[:, 1:])
    out = np.zeros_like(prev)
    np.cumsum(mid * dx, axis=1, out=out[:, 1:])
    return out


def iterated_integral_path(paths: DriverPaths, w: Word) -> np.ndarray:
    """J^w_{0,t} σε όλο το πλέγμα: (samples, steps+1)."""
    acc = np.ones((paths.samples, paths.steps + 1))
    for letter in w:
        acc = _integrate(acc, paths.increment(letter))
    return acc


def iterated_integral_numeric(paths: DriverPaths, w: Word) -> np.ndarray:
    """J^w_{0,T} ανά διαδρομή (πίνακας μήκους samples)· κενή λέξη -> 1."""
    return iterated_integral_path(paths, w)[:, -1]


def _is_pure_time(w: Word, time_letter: Optional[int]) -> bool:
    return time_letter is not None and all(l == time_letter for l in w)


def _mean_stderr(values: np.ndarray) -> Tuple[float, float]:
    n = len(values)
    return float(values.mean()), float(values.std(ddof=1) / sqrt(n))


def mc_word_samples(w: Word, T: float, steps: int, samples: int, seed: int,
                    time_letter: Optional[int] = 0, batch: int = DEFAULT_BATCH) -> np.ndarray:
    out = np.empty(samples)
    for start in range(0, samples, batch):
        n = min(batch, samples - start)
        paths = simulate_paths(T, steps, n, seed, w, time_letter, start_index=start)
        out[start:start + n] = iterated_integral_numeric(paths, w)
    return out


def mc_expect_word(w: Word, T: float = 1.0, steps: int = DEFAULT_STEPS,
                   samples: int = DEFAULT_SAMPLES, seed: int = 0,
                   time_letter: Optional[int] = 0, batch: int = DEFAULT_BATCH
                   ) -> Tuple[float, float]:
    """
    Returns:
        (εκτίμηση, τυπικό σφάλμα)· λέξεις μόνο χρόνου: (T^k/k!, 0) ακριβώς
    """
    if samples < 2:
        raise ValueError("Απαιτούνται τουλάχιστον 2 δείγματα")
    w = tuple(w)
    if _is_pure_time(w, time_letter):
        return T ** len(w) / factorial(len(w)), 0.0
    return _mean_stderr(mc_word_samples(w, T, steps, samples, seed, time_letter, batch))


def z_score(estimate: float, stderr: float, exact: float) -> float:
    """|z|· με stderr 0: 0 αν η διαφορά είναι αμελητέα, αλλιώς άπειρο."""
    diff = abs(estimate - exact)
    if stderr == 0:
        return 0.0 if diff <= EXACT_TOL * max(1.0, abs(exact)) else float("inf")
    return diff / stderr


# ---------------------------------------------------------------------
# Αριθμητική επίλυση
# ---------------------------------------------------------------------
def numeric_coefficients(model: Model, bindings: Mapping[str, float]) -> Tuple[float, list]:
    """(y0, [συντελεστές ανά driver]) σε float· ελέγχει όλα τα σύμβολα."""
    missing = [s for s in model.symbols() if s not in bindings]
    if missing:
        raise UnboundSymbolError(missing[0])
    y0 = model.y0.evaluate(bindings)
    coeffs = [np.array([c.evaluate(bindings) for c in p.coeffs] or [0.0]) for p in model.f]
    return y0, coeffs


def stratonovich_solve(model: Model, bindings: Mapping[str, float],
                       paths: DriverPaths) -> np.ndarray:
    """
    Heun (predictor-corrector), συνεπές με Stratonovich:
        Ỹ = Y + Σ_i f_i(Y) ΔX^i
        Y' = Y + ½ Σ_i (f_i(Y) + f_i(Ỹ)) ΔX^i

    Returns:
        Y_T ανά διαδρομή
    """
    y0, coeffs = numeric_coefficients(model, bindings)
    polyval = np.polynomial.polynomial.polyval
    dx = [paths.increment(model.letter(i)) for i in range(model.n_drivers)]
    y = np.full(paths.samples, y0, dtype=float)
    for n in range(paths.steps):
        drift = [polyval(y, c) for c in coeffs]
        pred = y + sum(f * d[:, n] for f, d in zip(drift, dx))
        corr = [polyval(pred, c) for c in coeffs]
        y = y + 0.5 * sum((f0 + f1) * d[:, n] for f0, f1, d in zip(drift, corr, dx))
    return y


def solve_samples(model: Model, bindings: Mapping[str, float], T: float, steps: int,
                  samples: int, seed: int, batch: int = DEFAULT_BATCH) -> np.ndarray:
    """Y_T − y0 για `samples` διαδρομές (σε batches)."""
    y0, _ = numeric_coefficients(model, bindings)
    out = np.empty(samples)
    for start in range(0, samples, batch):
        n = min(batch, samples - start)
        paths = simulate_paths(T, steps, n, seed, model.letters, model.time_driver,
                               start_index=start)
        out[start:start + n] = stratonovich_solve(model, bindings, paths) - y0
    return out


def mc_solve_mean(model: Model, bindings: Mapping[str, float], T: float = 1.0,
                  steps: int = DEFAULT_STEPS, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                  batch: int = DEFAULT_BATCH) -> Tuple[float, float]:
    if samples < 2:
        raise ValueError("Απαιτούνται τουλάχιστον 2 δείγματα")
    return _mean_stderr(solve_samples(model, bindings, T, steps, samples, seed, batch))


def evaluate_expansion_numeric(x: Union[LinComb, str, Path], paths: DriverPaths,
                               bindings: Mapping[str, float]) -> np.ndarray:
    """Σ_α c_α(bindings) J^α_{0,T} ανά διαδρομή (κοινά προθέματα υπολογίζονται μία φορά)."""
    if isinstance(x, LinComb):
        terms = list(x.terms.items())
    else:
        with open(x, "r", encoding="utf-8") as fh:
            terms = list(iter_terms(fh))
    terms.sort(key=lambda wc: wc[0])

    total = np.zeros(paths.samples)
    stack: list = [((), np.ones((paths.samples, paths.steps + 1)))]
    for word, coef in terms:
        while not word[:len(stack[-1][0])] == stack[-1][0]:
            stack.pop()
        prefix, acc = stack[-1]
        for letter in word[len(prefix):]:
            acc = _integrate(acc, paths.increment(letter))
            prefix = prefix + (letter,)
            stack.append((prefix, acc))
        total += coef.evaluate(bindings) * acc[:, -1]
    return total


def samples_frame(values: np.ndarray, label: str) -> pd.DataFrame:
    """Τιμές ανά δείγμα για αποθήκευση σε CSV."""
    return pd.DataFrame({"sample": np.arange(len(values)), label: values})
